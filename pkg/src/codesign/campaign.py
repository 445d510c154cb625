"""Campaign orchestration: configs, evaluation, artifacts, comparison.

A campaign owns one dataset, one design space and one objective set,
runs the search loop with per-trial seeding, and leaves behind:

* ``trials.jsonl``  - append-only, fsynced trial log (the resume state)
* ``front.csv``     - Pareto points with design fields + derived metrics
* ``convergence.csv`` - hypervolume / spacing / front size per trial
* ``summary.json``  - headline numbers incl. the constrained front
* ``compare.json``  - only in compare mode (theory vs proxy guidance)

Configs are strict JSON with unit-suffixed keys; unknown keys raise
:class:`ConfigError`. The ``CODESIGN_OUT_DIR`` environment variable
overrides the output directory and nothing else.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import pareto
from .hwcost import (
    ConstraintLimits,
    CostModelParams,
    default_cost_model,
    load_cost_model,
    analytical_energy,
    power_density,
    synthesize_proxy,
)
from .mobo import (
    CoDesignSpace,
    SamplerConfig,
    TrialRecord,
    run_campaign,
    splitmix64,
    trial_seed,
)
from .pulsegen import Dataset, PulseStreamConfig, build_dataset
from .qnn import TrainingParams, baseline_mse, train

ENV_OUT_DIR = "CODESIGN_OUT_DIR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAILURES = 3

OBJECTIVE_METRICS = {
    "val_mse": "val_mse",
    "area": "area_um2",
    "power": "power_w",
    "delay": "delay_ps",
    "analytical_energy": "analytical_energy_j",
}

BACKENDS = ("proxy_synthesis", "analytical_theory")
# Objectives each backend may use for guidance.
_BACKEND_OBJECTIVES = {
    "proxy_synthesis": {"val_mse", "area", "power", "delay"},
    "analytical_theory": {"val_mse", "analytical_energy"},
}

REPORT_FILES = ("front.csv", "convergence.csv", "summary.json")
FIGURE_FILES = ("convergence.png", "front.png", "strategies.png")


class ConfigError(ValueError):
    """Invalid or unknown configuration content (CLI exit code 2)."""


def _take(d: dict, allowed: set[str], what: str) -> dict:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown {what} keys: {sorted(unknown)}")
    return d


@dataclass(frozen=True)
class DatasetConfig:
    """Stream simulation plus window geometry and split seed."""

    stream: PulseStreamConfig = PulseStreamConfig()
    window_half_width: int = 32
    decimation: int = 4
    total_windows: int = 5000
    split_seed: int = 0

    def build(self) -> Dataset:
        return build_dataset(
            self.stream,
            window_half_width=self.window_half_width,
            decimation=self.decimation,
            total_windows=self.total_windows,
            seed=self.split_seed,
        )

    def to_dict(self) -> dict:
        return {
            "stream": self.stream.to_dict(),
            "window_half_width": self.window_half_width,
            "decimation": self.decimation,
            "total_windows": self.total_windows,
            "split_seed": self.split_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetConfig":
        d = _take(dict(d), set(cls.__dataclass_fields__), "dataset")
        kwargs = {k: int(v) for k, v in d.items() if k != "stream"}
        stream_dict = dict(d.get("stream", {}))
        if "stream_length" not in stream_dict:
            # Convenience: size the stream exactly for the requested windows.
            nw = kwargs.get("window_half_width", 32)
            total = kwargs.get("total_windows", 5000)
            stream_dict["stream_length"] = 2 * nw * total
        try:
            kwargs["stream"] = PulseStreamConfig.from_dict(stream_dict)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return cls(**kwargs)


@dataclass(frozen=True)
class CampaignConfig:
    dataset: DatasetConfig = DatasetConfig()
    space: CoDesignSpace = CoDesignSpace()
    objectives: tuple[str, ...] = ("val_mse", "area", "power", "delay")
    budget: int = 500
    parallelism: int = 1
    seed: int = 0
    sampler: str = "motpe"
    backend: str = "proxy_synthesis"
    training: TrainingParams = TrainingParams()
    limits: ConstraintLimits = ConstraintLimits()
    sampler_params: SamplerConfig = SamplerConfig()
    suggest_block: int = 8
    failure_budget: float = 0.2
    cost_model_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "objectives", tuple(self.objectives))
        if not 2 <= len(self.objectives) <= 4:
            raise ConfigError("between 2 and 4 objectives are required")
        if len(set(self.objectives)) != len(self.objectives):
            raise ConfigError("objectives must be distinct")
        for name in self.objectives:
            if name not in OBJECTIVE_METRICS:
                raise ConfigError(
                    f"unknown objective {name!r}; choose from {sorted(OBJECTIVE_METRICS)}"
                )
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}")
        allowed = _BACKEND_OBJECTIVES[self.backend]
        stray = set(self.objectives) - allowed
        if stray:
            raise ConfigError(
                f"objectives {sorted(stray)} not available on backend {self.backend!r}"
            )
        if self.budget < 1:
            raise ConfigError("budget must be >= 1")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        if self.sampler not in ("motpe", "random"):
            raise ConfigError("sampler must be 'motpe' or 'random'")
        if not 0 <= self.failure_budget <= 1:
            raise ConfigError("failure_budget must be in [0, 1]")
        if self.suggest_block < 1:
            raise ConfigError("suggest_block must be >= 1")
        if self.limits.val_mse is not None:
            raise ConfigError("limits.val_mse is derived from the dataset; leave it unset")

    def cost_model(self) -> CostModelParams:
        if self.cost_model_path is None:
            return default_cost_model()
        return load_cost_model(self.cost_model_path)

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset.to_dict(),
            "space": self.space.to_dict(),
            "objectives": list(self.objectives),
            "budget": self.budget,
            "parallelism": self.parallelism,
            "seed": self.seed,
            "sampler": self.sampler,
            "backend": self.backend,
            "training": {
                "epochs": self.training.epochs,
                "batch_size": self.training.batch_size,
                "learning_rate": self.training.learning_rate,
                "momentum": self.training.momentum,
            },
            "limits": {
                "area_um2": self.limits.area_um2,
                "power_density_w_per_cm2": self.limits.power_density_w_per_cm2,
                "delay_ps": self.limits.delay_ps,
            },
            "sampler_params": {
                "n_startup": self.sampler_params.n_startup,
                "n_candidates": self.sampler_params.n_candidates,
                "gamma": self.sampler_params.gamma,
                "objective_weights": None
                if self.sampler_params.objective_weights is None
                else list(self.sampler_params.objective_weights),
            },
            "suggest_block": self.suggest_block,
            "failure_budget": self.failure_budget,
            "cost_model_path": self.cost_model_path,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignConfig":
        d = _take(dict(d), set(cls.__dataclass_fields__), "campaign")
        kwargs: dict = {}
        try:
            if "dataset" in d:
                kwargs["dataset"] = DatasetConfig.from_dict(d["dataset"])
            if "space" in d:
                kwargs["space"] = CoDesignSpace.from_dict(d["space"])
            if "training" in d:
                t = _take(
                    dict(d["training"]),
                    {"epochs", "batch_size", "learning_rate", "momentum"},
                    "training",
                )
                kwargs["training"] = TrainingParams(**t)
            if "limits" in d:
                lim = _take(
                    dict(d["limits"]),
                    {"area_um2", "power_density_w_per_cm2", "delay_ps"},
                    "limits",
                )
                kwargs["limits"] = ConstraintLimits(**lim)
            if "sampler_params" in d:
                sp = _take(
                    dict(d["sampler_params"]),
                    {"n_startup", "n_candidates", "gamma", "objective_weights"},
                    "sampler_params",
                )
                weights = sp.pop("objective_weights", None)
                kwargs["sampler_params"] = SamplerConfig(
                    objective_weights=None if weights is None else tuple(weights), **sp
                )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        for key in (
            "objectives",
            "budget",
            "parallelism",
            "seed",
            "sampler",
            "backend",
            "suggest_block",
            "failure_budget",
            "cost_model_path",
        ):
            if key in d:
                kwargs[key] = tuple(d[key]) if key == "objectives" else d[key]
        return cls(**kwargs)


def load_campaign_config(path: str) -> CampaignConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return CampaignConfig.from_dict(raw)


def save_campaign_config(path: str, config: CampaignConfig) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def make_evaluator(
    dataset: Dataset,
    objectives: tuple[str, ...],
    training: TrainingParams,
    params: CostModelParams,
):
    """Trial evaluator: QAT training + both cost routes.

    All metrics are computed for every trial regardless of which subset
    guides the search, so logs can be re-scored without re-training.
    The training seed is splitmix64(trial_seed), keeping it decoupled
    from the design-sampling stream.
    """
    metric_keys = [OBJECTIVE_METRICS[name] for name in objectives]
    input_width = dataset.window_length

    def evaluate(design, t_seed):
        spec = design.mlp_spec(input_width=input_width)
        spec.validate()
        hp = replace(training, seed=splitmix64(t_seed))
        report = train(spec, dataset, hp)
        hw = synthesize_proxy(spec, design.strategy, params)
        metrics = {
            "val_mse": report.val_mse,
            "train_mse": report.train_mse,
            "best_epoch": report.best_epoch,
            "area_um2": hw.area_um2,
            "power_w": hw.power_w,
            "delay_ps": hw.delay_ps,
            "energy_j": hw.energy_j,
            "power_density_w_per_cm2": power_density(hw),
            "analytical_energy_j": analytical_energy(spec, params),
        }
        return tuple(metrics[k] for k in metric_keys), metrics

    return evaluate


# --- trial log -------------------------------------------------------------


def append_trial(fh, record: TrialRecord) -> None:
    """One JSON line per trial, flushed and fsynced immediately."""
    fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
    fh.flush()
    os.fsync(fh.fileno())


def load_trial_log(path: str) -> dict[int, TrialRecord]:
    """Parse a trial log into {trial_index: record}.

    A truncated final line (crash mid-write) is dropped; corruption
    anywhere else, or a duplicated index, raises.
    """
    records: dict[int, TrialRecord] = {}
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    for lineno, line in enumerate(lines):
        line = line.strip()
        if not line:
            continue
        try:
            rec = TrialRecord.from_dict(json.loads(line))
        except (json.JSONDecodeError, ValueError, KeyError) as exc:
            if lineno == len(lines) - 1:
                break  # partial trailing write; the trial will rerun
            raise ConfigError(f"{path}:{lineno + 1}: corrupt trial record: {exc}") from exc
        if rec.trial_index in records:
            raise ConfigError(f"{path}: duplicate trial_index {rec.trial_index}")
        records[rec.trial_index] = rec
    return records


def canonical_log_bytes(path: str) -> bytes:
    """Log content re-ordered by trial_index; two campaigns agree iff
    these bytes agree."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    keyed = sorted((json.loads(line)["trial_index"], line) for line in lines)
    return ("\n".join(line for _, line in keyed) + "\n").encode("utf-8")


# --- reporting -------------------------------------------------------------


def convergence_rows(records: list[TrialRecord], reference: np.ndarray) -> list[dict]:
    """Hypervolume / spacing / front size after each trial index.

    Failed trials carry the previous values forward. Front bookkeeping
    matches nondominated_filter semantics: duplicates of a nondominated
    point all count toward front size (and add no volume).
    """
    rows = []
    front: list[np.ndarray] = []
    hv = 0.0
    spc: float | None = None
    for rec in sorted(records, key=lambda r: r.trial_index):
        if rec.status == "completed":
            p = np.asarray(rec.objectives, dtype=np.float64)
            dominated = any(bool(np.all(q <= p) and np.any(q < p)) for q in front)
            if not dominated:
                front = [q for q in front if not (np.all(p <= q) and np.any(p < q))]
                front.append(p)
                pts = np.asarray(front)
                hv = pareto.hypervolume(np.minimum(pts, reference), reference)
                spc = pareto.spacing(pts) if len(front) >= 2 else None
        rows.append(
            {
                "trial_index": rec.trial_index,
                "hypervolume": hv,
                "spacing": spc,
                "front_size": len(front),
            }
        )
    return rows


def _design_columns(design) -> dict:
    cols = {"depth": design.depth}
    for i in range(3):
        cols[f"w{i + 1}"] = design.hidden_widths[i] if i < design.depth else ""
    for i in range(4):
        cols[f"b{i + 1}"] = design.weight_bits[i] if i <= design.depth else ""
    cols["io_bits"] = design.io_bits
    cols["strategy"] = design.strategy.name
    return cols


def write_report_files(
    out_dir: Path,
    records: list[TrialRecord],
    config: CampaignConfig,
    baseline: float,
    figures: bool = False,
) -> dict:
    """Emit front.csv, convergence.csv, summary.json (and figures on the
    report path). Partial outputs are removed if anything fails."""
    out_dir = Path(out_dir)
    written: list[Path] = []
    try:
        return _write_report_files(out_dir, records, config, baseline, figures, written)
    except Exception:
        for path in written:
            try:
                path.unlink()
            except OSError:
                pass
        raise


def _write_report_files(out_dir, records, config, baseline, figures, written):
    completed = [r for r in records if r.status == "completed"]
    failed = [r for r in records if r.status == "failed"]
    limits = config.limits.with_val_mse(baseline)

    archive = None
    rows = []
    if completed:
        archive = pareto.ParetoArchive.from_objectives(
            [r.trial_index for r in completed],
            [r.objectives for r in completed],
            objective_names=config.objectives,
        )
        rows = convergence_rows(records, archive.reference)

    front_path = out_dir / "front.csv"
    written.append(front_path)
    by_index = {r.trial_index: r for r in records}
    with open(front_path, "w", newline="", encoding="utf-8") as fh:
        headers = (
            ["trial_index", "depth", "w1", "w2", "w3", "b1", "b2", "b3", "b4", "io_bits", "strategy"]
            + list(config.objectives)
            + ["eta", "f_max_hz", "area_utilization", "power_density_w_per_cm2", "feasible"]
        )
        writer = csv.DictWriter(fh, fieldnames=headers)
        writer.writeheader()
        if archive is not None:
            for idx, objective_vec in zip(archive.indices, archive.objectives):
                rec = by_index[idx]
                row = {"trial_index": idx, **_design_columns(rec.design)}
                row.update(dict(zip(config.objectives, (float(v) for v in objective_vec))))
                m = rec.metrics
                row["eta"] = pareto.eta(baseline, m["val_mse"])
                row["f_max_hz"] = pareto.f_max_hz(m["delay_ps"])
                row["area_utilization"] = pareto.area_utilization(m["area_um2"], limits.area_um2)
                row["power_density_w_per_cm2"] = m["power_density_w_per_cm2"]
                row["feasible"] = pareto.record_feasible(rec, limits)
                writer.writerow(row)

    conv_path = out_dir / "convergence.csv"
    written.append(conv_path)
    with open(conv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["trial_index", "hypervolume", "spacing", "front_size"])
        writer.writeheader()
        for row in rows:
            out = dict(row)
            if out["spacing"] is None:
                out["spacing"] = ""
            writer.writerow(out)

    constrained = pareto.constrained_front(completed, limits)
    constrained_indices = constrained.indices
    strategy_distribution: dict[str, int] = {}
    for idx in constrained_indices:
        name = by_index[idx].design.strategy.name
        strategy_distribution[name] = strategy_distribution.get(name, 0) + 1

    failure_fraction = len(failed) / len(records) if records else 0.0
    summary = {
        "objectives": list(config.objectives),
        "budget": config.budget,
        "seed": config.seed,
        "sampler": config.sampler,
        "backend": config.backend,
        "parallelism": config.parallelism,
        "n_completed": len(completed),
        "n_failed": len(failed),
        "failure_fraction": failure_fraction,
        "baseline_mse": baseline,
        "limits": {
            "area_um2": limits.area_um2,
            "power_density_w_per_cm2": limits.power_density_w_per_cm2,
            "delay_ps": limits.delay_ps,
            "val_mse": limits.val_mse,
        },
        "front_size": 0 if archive is None else len(archive.indices),
        "front_trial_indices": [] if archive is None else archive.indices,
        "final_hypervolume": None if archive is None else archive.hypervolume(),
        "reference_point": None if archive is None else archive.reference.tolist(),
        "spacing": None
        if archive is None or len(archive.indices) < 2
        else pareto.spacing(archive.objectives),
        "constrained_front_size": len(constrained_indices),
        "constrained_front_trial_indices": constrained_indices,
        "strategy_distribution": strategy_distribution,
    }
    summary_path = out_dir / "summary.json"
    written.append(summary_path)
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    paths = {"front": front_path, "convergence": conv_path, "summary": summary_path}
    if figures and archive is not None:
        from . import figures as figmod

        for name, fig_path in figmod.render_report_figures(
            out_dir, rows, archive, [by_index[i] for i in archive.indices], config.objectives
        ).items():
            written.append(fig_path)
            paths[name] = fig_path
    return {"summary": summary, "archive": archive, "paths": paths, "rows": rows}


# --- campaign entry points --------------------------------------------------


@dataclass
class CampaignResult:
    records: list[TrialRecord]
    summary: dict
    archive: pareto.ParetoArchive | None
    paths: dict
    exit_code: int
    baseline_mse: float
    dataset: Dataset = field(repr=False, default=None)


def resolve_out_dir(out_dir: str | None, honor_env: bool = True) -> Path:
    """CODESIGN_OUT_DIR (when set) overrides the requested directory."""
    env = os.environ.get(ENV_OUT_DIR) if honor_env else None
    path = Path(env) if env else Path(out_dir) if out_dir else Path.cwd()
    path.mkdir(parents=True, exist_ok=True)
    return path


def run(
    config: CampaignConfig,
    out_dir: str | None = None,
    log_path: str | None = None,
    dataset: Dataset | None = None,
    figures: bool = False,
    honor_env: bool = True,
) -> CampaignResult:
    """Execute (or resume) a campaign and write all artifacts.

    An existing ``trials.jsonl`` in the output directory is resumed:
    logged indices are never re-executed. Exit code 3 signals that more
    than ``failure_budget`` of the budget failed; report files are still
    written. A pre-built ``dataset`` skips regeneration when the caller
    already holds the configured dataset.
    """
    out = resolve_out_dir(out_dir, honor_env=honor_env)
    if dataset is None:
        dataset = config.dataset.build()
    baseline = baseline_mse(dataset)
    params = config.cost_model()
    evaluator = make_evaluator(dataset, config.objectives, config.training, params)

    log_file = Path(log_path) if log_path else out / "trials.jsonl"
    existing = load_trial_log(log_file) if log_file.exists() else {}

    with open(log_file, "a", encoding="utf-8") as fh:
        records = run_campaign(
            config.space,
            evaluator,
            config.budget,
            config.seed,
            sampler=config.sampler,
            sampler_config=config.sampler_params,
            parallelism=config.parallelism,
            suggest_block=config.suggest_block,
            existing=existing,
            on_record=lambda rec: append_trial(fh, rec),
        )

    report = write_report_files(out, records, config, baseline, figures=figures)
    failure_fraction = report["summary"]["failure_fraction"]
    exit_code = EXIT_FAILURES if failure_fraction > config.failure_budget else EXIT_OK
    report["summary"]["exit_code"] = exit_code
    with open(report["paths"]["summary"], "w", encoding="utf-8") as fh:
        json.dump(report["summary"], fh, indent=2, sort_keys=True)
        fh.write("\n")
    report["paths"]["log"] = log_file
    return CampaignResult(
        records=records,
        summary=report["summary"],
        archive=report["archive"],
        paths=report["paths"],
        exit_code=exit_code,
        baseline_mse=baseline,
        dataset=dataset,
    )


# --- rank correlation -------------------------------------------------------


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j < len(values) and sorted_vals[j] == sorted_vals[i]:
            j += 1
        ranks[order[i:j]] = (i + j - 1) / 2.0 + 1.0  # 1-based midrank
        i = j
    return ranks


def spearman_rho(x, y) -> float:
    """Spearman rank correlation with midranks for ties."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ValueError("spearman_rho needs two equal-length 1-D arrays (n >= 2)")
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = float(np.sqrt(np.sum(rx * rx) * np.sum(ry * ry)))
    if denom == 0:
        raise ValueError("spearman_rho undefined for constant input")
    return float(np.sum(rx * ry) / denom)


# --- theory vs proxy comparison ----------------------------------------------


THEORY_OBJECTIVES = ("val_mse", "analytical_energy")
PROXY_OBJECTIVES = ("val_mse", "power")


def _per_trial_curve(scores: list, reference: np.ndarray) -> list[float]:
    """Hypervolume after each trial index; ``None`` entries (failed
    trials) carry the previous value forward."""
    front: list[np.ndarray] = []
    hv = 0.0
    out = []
    for vec in scores:
        if vec is not None:
            p = np.asarray(vec, dtype=np.float64)
            if not any(bool(np.all(q <= p)) for q in front):
                front = [q for q in front if not (np.all(p <= q) and np.any(p < q))]
                front.append(p)
                pts = np.minimum(np.asarray(front), reference)
                hv = pareto.hypervolume(pts, reference)
        out.append(hv)
    return out


@dataclass
class CompareResult:
    report: dict
    theory: CampaignResult
    proxy: CampaignResult
    paths: dict


def compare(config: CampaignConfig, budget: int | None = None, out_dir: str | None = None) -> CompareResult:
    """Paired study: theory-guided vs proxy-guided two-objective search.

    Both campaigns share the dataset and the campaign seed (so per-trial
    seeds pair up). The theory run is guided by (val_mse, analytical
    energy); its designs are then re-scored with the synthesis proxy to
    build the "real" hypervolume curve against the proxy-guided run,
    using one shared reference point over the union of both runs.
    """
    out = resolve_out_dir(out_dir)
    budget = budget or config.budget
    theory_cfg = replace(
        config, objectives=THEORY_OBJECTIVES, backend="analytical_theory", budget=budget
    )
    proxy_cfg = replace(
        config, objectives=PROXY_OBJECTIVES, backend="proxy_synthesis", budget=budget
    )

    dataset = config.dataset.build()
    theory = run(theory_cfg, out_dir=str(out / "theory"), dataset=dataset, honor_env=False)
    proxy = run(proxy_cfg, out_dir=str(out / "proxy"), dataset=dataset, honor_env=False)

    def proxy_scores(records):
        return [
            None
            if r.status != "completed"
            else (r.metrics["val_mse"], r.metrics["power_w"])
            for r in sorted(records, key=lambda r: r.trial_index)
        ]

    theory_scored = proxy_scores(theory.records)
    proxy_scored = proxy_scores(proxy.records)
    union = np.asarray([v for v in theory_scored + proxy_scored if v is not None])
    if len(union) == 0 or all(v is None for v in theory_scored) or all(
        v is None for v in proxy_scored
    ):
        raise RuntimeError("comparison needs completed trials in both campaigns")
    reference = pareto.reference_point(union)
    theory_curve = _per_trial_curve(theory_scored, reference)
    proxy_curve = _per_trial_curve(proxy_scored, reference)

    # The theory run's progress as seen by its own guidance objective.
    theory_own = [
        None if r.status != "completed" else r.objectives
        for r in sorted(theory.records, key=lambda r: r.trial_index)
    ]
    own_pts = np.asarray([v for v in theory_own if v is not None])
    theory_own_curve = _per_trial_curve(theory_own, pareto.reference_point(own_pts))

    # Correlate the two cost routes on the union of distinct designs.
    seen: dict[str, tuple[float, float]] = {}
    for r in [*theory.records, *proxy.records]:
        if r.status != "completed":
            continue
        key = json.dumps(r.design.to_dict(), sort_keys=True)
        seen.setdefault(key, (r.metrics["analytical_energy_j"], r.metrics["power_w"]))
    pairs = np.asarray(list(seen.values()), dtype=np.float64)
    rho = spearman_rho(pairs[:, 0], pairs[:, 1])

    report = {
        "budget": budget,
        "seed": config.seed,
        "objectives": {"theory_guided": list(THEORY_OBJECTIVES), "proxy_guided": list(PROXY_OBJECTIVES)},
        "proxy_scored_reference": reference.tolist(),
        "final_hypervolume": {
            "theory_guided_rescored": theory_curve[-1],
            "proxy_guided": proxy_curve[-1],
        },
        "hypervolume_curve": {
            "theory_guided_rescored": theory_curve,
            "proxy_guided": proxy_curve,
            "theory_guided_own_objectives": theory_own_curve,
        },
        "spearman_rho_energy_vs_power": rho,
        "n_designs_correlated": int(len(pairs)),
        "runs": {
            "theory_guided": str(out / "theory"),
            "proxy_guided": str(out / "proxy"),
        },
    }
    compare_path = out / "compare.json"
    with open(compare_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return CompareResult(
        report=report,
        theory=theory,
        proxy=proxy,
        paths={"compare": compare_path},
    )
