"""Multi-objective Bayesian search over the co-design space.

The sampler is a tree-structured Parzen estimator adapted to multiple
objectives: completed trials are split into "good" and "bad" halves by
nondomination rank, one-dimensional Parzen densities are fit per search
dimension on each half, and candidates drawn from the good densities
are ranked by the good/bad likelihood ratio. Layer-wise dimensions are
conditional on depth and are modeled only on trials of the same depth;
depths the good half has not visited keep prior densities on both
sides so the likelihood ratio cannot manufacture an exploration bonus
there.

The campaign loop is block-synchronous: suggestions for trial i
condition only on trials below floor(i / block) * block, so results are
a pure function of (seed, trial_index) regardless of parallelism or
thread interleaving, and an interrupted log can be resumed without
re-executing anything.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field

import numpy as np

from .hwcost import SynthesisStrategy
from .qnn import BITS_RANGE, MAX_HIDDEN_LAYERS, WIDTH_RANGE, MlpSpec

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> int:
    """One splitmix64 output step (Steele et al. finalizer)."""
    z = (state + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def trial_seed(campaign_seed: int, trial_index: int) -> int:
    """Per-trial 64-bit seed: splitmix64(campaign_seed + (i+1)*golden).

    Recorded in every trial log line; all per-trial randomness (design
    sampling, and via one more splitmix64 step the training RNG) derives
    from it, which is what makes campaigns replayable in any order.
    """
    if trial_index < 0:
        raise ValueError("trial_index must be >= 0")
    return splitmix64((campaign_seed + (trial_index + 1) * _GOLDEN) & _MASK64)


@dataclass(frozen=True)
class CoDesignSpace:
    """Joint space: depth, per-layer width and weight quantization, I/O
    quantization, synthesis strategy."""

    depth_range: tuple[int, int] = (1, MAX_HIDDEN_LAYERS)
    width_range: tuple[int, int] = WIDTH_RANGE
    weight_bits_range: tuple[int, int] = BITS_RANGE
    io_bits_range: tuple[int, int] = BITS_RANGE
    strategies: tuple[SynthesisStrategy, ...] = tuple(SynthesisStrategy)

    def __post_init__(self):
        ranges = {
            "depth_range": (self.depth_range, (1, MAX_HIDDEN_LAYERS)),
            "width_range": (self.width_range, WIDTH_RANGE),
            "weight_bits_range": (self.weight_bits_range, BITS_RANGE),
            "io_bits_range": (self.io_bits_range, BITS_RANGE),
        }
        for name, ((lo, hi), (glo, ghi)) in ranges.items():
            if not glo <= lo <= hi <= ghi:
                raise ValueError(f"{name} must satisfy {glo} <= lo <= hi <= {ghi}, got ({lo}, {hi})")
        if not self.strategies:
            raise ValueError("at least one synthesis strategy is required")
        object.__setattr__(self, "strategies", tuple(self.strategies))

    def to_dict(self) -> dict:
        return {
            "depth_range": list(self.depth_range),
            "width_range": list(self.width_range),
            "weight_bits_range": list(self.weight_bits_range),
            "io_bits_range": list(self.io_bits_range),
            "strategies": [s.name for s in self.strategies],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CoDesignSpace":
        known = {"depth_range", "width_range", "weight_bits_range", "io_bits_range", "strategies"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown CoDesignSpace keys: {sorted(unknown)}")
        kwargs = {}
        for key in ("depth_range", "width_range", "weight_bits_range", "io_bits_range"):
            if key in d:
                kwargs[key] = tuple(int(v) for v in d[key])
        if "strategies" in d:
            kwargs["strategies"] = tuple(SynthesisStrategy[name] for name in d["strategies"])
        return cls(**kwargs)


def space_cardinality(space: CoDesignSpace) -> int:
    """Exact number of distinct design points (arbitrary precision).

    One (width, quantization) choice per hidden layer, one I/O
    quantization, one strategy:
    |io| * |strategies| * sum_d (|width| * |quant|)^d.
    """
    n_w = space.width_range[1] - space.width_range[0] + 1
    n_q = space.weight_bits_range[1] - space.weight_bits_range[0] + 1
    n_io = space.io_bits_range[1] - space.io_bits_range[0] + 1
    n_s = len(space.strategies)
    per_depth = sum(
        (n_w * n_q) ** d for d in range(space.depth_range[0], space.depth_range[1] + 1)
    )
    return n_io * n_s * per_depth


@dataclass(frozen=True)
class DesignPoint:
    """One candidate: hidden architecture + quantization + strategy.

    ``weight_bits`` carries one entry per weight matrix; inside the
    search space the output matrix reuses the last hidden layer's
    width (its input datapath), so the free dimensions match the space
    cardinality formula.
    """

    hidden_widths: tuple[int, ...]
    weight_bits: tuple[int, ...]
    io_bits: int
    strategy: SynthesisStrategy

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        object.__setattr__(self, "weight_bits", tuple(int(b) for b in self.weight_bits))
        if len(self.weight_bits) != len(self.hidden_widths) + 1:
            raise ValueError("weight_bits needs one entry per weight matrix")

    @property
    def depth(self) -> int:
        return len(self.hidden_widths)

    def mlp_spec(self, input_width: int = 9) -> MlpSpec:
        return MlpSpec(
            hidden_layer_widths=self.hidden_widths,
            weight_bits=self.weight_bits,
            io_bits=self.io_bits,
            input_width=input_width,
        )

    def to_dict(self) -> dict:
        return {
            "hidden_widths": list(self.hidden_widths),
            "weight_bits": list(self.weight_bits),
            "io_bits": self.io_bits,
            "strategy": self.strategy.name,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DesignPoint":
        known = {"hidden_widths", "weight_bits", "io_bits", "strategy"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown DesignPoint keys: {sorted(unknown)}")
        return cls(
            hidden_widths=tuple(d["hidden_widths"]),
            weight_bits=tuple(d["weight_bits"]),
            io_bits=int(d["io_bits"]),
            strategy=SynthesisStrategy[d["strategy"]],
        )


def sample_uniform(space: CoDesignSpace, rng: np.random.Generator) -> DesignPoint:
    """Uniform draw: depth first, then per-layer dims, io, strategy.

    Every valid point has positive probability; depth is uniform over
    its range (deeper layers do not get extra mass despite their larger
    subspaces).
    """
    depth = int(rng.integers(space.depth_range[0], space.depth_range[1] + 1))
    widths = tuple(
        int(rng.integers(space.width_range[0], space.width_range[1] + 1)) for _ in range(depth)
    )
    bits = tuple(
        int(rng.integers(space.weight_bits_range[0], space.weight_bits_range[1] + 1))
        for _ in range(depth)
    )
    io_bits = int(rng.integers(space.io_bits_range[0], space.io_bits_range[1] + 1))
    strategy = space.strategies[int(rng.integers(0, len(space.strategies)))]
    return DesignPoint(widths, (*bits, bits[-1]), io_bits, strategy)


@dataclass
class TrialRecord:
    trial_index: int
    seed: int
    design: DesignPoint
    status: str  # "completed" | "failed"
    objectives: tuple[float, ...] | None
    metrics: dict = field(default_factory=dict)
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "trial_index": self.trial_index,
            "seed": self.seed,
            "design": self.design.to_dict(),
            "status": self.status,
            "objectives": None if self.objectives is None else list(self.objectives),
            "metrics": self.metrics,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrialRecord":
        known = {"trial_index", "seed", "design", "status", "objectives", "metrics", "error"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown TrialRecord keys: {sorted(unknown)}")
        objectives = d.get("objectives")
        return cls(
            trial_index=int(d["trial_index"]),
            seed=int(d["seed"]),
            design=DesignPoint.from_dict(d["design"]),
            status=str(d["status"]),
            objectives=None if objectives is None else tuple(float(o) for o in objectives),
            metrics=dict(d.get("metrics") or {}),
            error=d.get("error"),
        )


def nondomination_rank(objectives: np.ndarray) -> np.ndarray:
    """Iterative front peeling: rank 0 = nondominated, rank 1 = points
    only dominated by rank 0, and so on."""
    pts = np.asarray(objectives, dtype=np.float64)
    n = len(pts)
    ranks = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return ranks
    le = np.all(pts[:, None, :] <= pts[None, :, :], axis=2)
    lt = np.any(pts[:, None, :] < pts[None, :, :], axis=2)
    dom = le & lt
    remaining = np.ones(n, dtype=bool)
    rank = 0
    while remaining.any():
        idx = np.nonzero(remaining)[0]
        sub = dom[np.ix_(idx, idx)]
        front = ~np.any(sub, axis=0)
        ranks[idx[front]] = rank
        remaining[idx[front]] = False
        rank += 1
    return ranks


@dataclass(frozen=True)
class SamplerConfig:
    """Knobs of the multi-objective Parzen sampler.

    ``objective_weights`` switches the good/bad split from
    nondomination ranks to a weighted sum of min-max normalized
    objectives; it exists for scalarization experiments and is off by
    default.
    """

    n_startup: int = 20
    n_candidates: int = 24
    gamma: float = 0.25
    objective_weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.n_startup < 0:
            raise ValueError("n_startup must be >= 0")
        if self.n_candidates < 1:
            raise ValueError("n_candidates must be >= 1")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must be in (0, 1)")
        if self.objective_weights is not None:
            if any(w < 0 for w in self.objective_weights) or not any(self.objective_weights):
                raise ValueError("objective_weights must be nonnegative with a positive entry")
            object.__setattr__(self, "objective_weights", tuple(float(w) for w in self.objective_weights))


class _Categorical:
    """Laplace-smoothed category weights."""

    def __init__(self, values, support, alpha: float = 1.0):
        counts = np.array([sum(1 for v in values if v == s) for s in support], dtype=np.float64)
        self.support = list(support)
        self.pmf = (counts + alpha) / (counts.sum() + alpha * len(support))

    def sample(self, rng: np.random.Generator):
        return self.support[int(rng.choice(len(self.support), p=self.pmf))]

    def logpdf(self, value) -> float:
        return float(np.log(self.pmf[self.support.index(value)]))


class _Ordinal:
    """Discretized Gaussian mixture on an integer range.

    One kernel per observation (bandwidth max(0.75, range/8)) plus a
    full-range kernel at the midpoint acting as the prior, so no valid
    value ever has zero probability.
    """

    def __init__(self, values, lo: int, hi: int):
        self.lo = lo
        grid = np.arange(lo, hi + 1, dtype=np.float64)
        span = max(hi - lo, 1)
        dens = np.exp(-0.5 * ((grid - (lo + hi) / 2.0) / span) ** 2)
        if len(values):
            sigma = max(0.75, span / 8.0)
            obs = np.asarray(list(values), dtype=np.float64)
            dens = dens + np.exp(-0.5 * ((grid[:, None] - obs[None, :]) / sigma) ** 2).sum(axis=1)
        self.pmf = dens / dens.sum()

    def sample(self, rng: np.random.Generator) -> int:
        return self.lo + int(rng.choice(len(self.pmf), p=self.pmf))

    def logpdf(self, value: int) -> float:
        return float(np.log(self.pmf[int(value) - self.lo]))


def _split_good_bad(records: list[TrialRecord], config: SamplerConfig):
    objectives = np.asarray([t.objectives for t in records], dtype=np.float64)
    if config.objective_weights is not None:
        if len(config.objective_weights) != objectives.shape[1]:
            raise ValueError("objective_weights length must match the objective count")
        lo = objectives.min(axis=0)
        span = objectives.max(axis=0) - lo
        span[span == 0] = 1.0
        score = ((objectives - lo) / span) @ np.asarray(config.objective_weights)
        order = np.lexsort((np.arange(len(records)), score))
    else:
        ranks = nondomination_rank(objectives)
        order = np.lexsort((np.arange(len(records)), ranks))
    n_good = max(1, math.ceil(config.gamma * len(records)))
    n_good = min(n_good, len(records) - 1) if len(records) > 1 else 1
    good = [records[i] for i in order[:n_good]]
    bad = [records[i] for i in order[n_good:]]
    return good, bad


def suggest(
    history: list[TrialRecord],
    space: CoDesignSpace,
    rng: np.random.Generator,
    config: SamplerConfig = SamplerConfig(),
) -> DesignPoint:
    """Propose the next design.

    Uniform until ``n_startup`` completed trials exist; afterwards draws
    ``n_candidates`` designs from the good-half densities and returns
    the one maximizing the good/bad log-likelihood ratio. Failed trials
    are excluded from both halves. Layer-wise densities are fit only on
    same-depth trials; a depth with no good-half evidence keeps the
    prior on both sides (a bad-half-only fit would act as a repeller
    and hand every unexplored depth an unbounded exploration bonus,
    overruling the depth model).
    """
    completed = [t for t in history if t.status == "completed" and t.objectives is not None]
    if len(completed) < config.n_startup:
        return sample_uniform(space, rng)
    good, bad = _split_good_bad(completed, config)

    depth_support = list(range(space.depth_range[0], space.depth_range[1] + 1))
    depth_good = _Categorical([t.design.depth for t in good], depth_support)
    depth_bad = _Categorical([t.design.depth for t in bad], depth_support)
    io_good = _Ordinal([t.design.io_bits for t in good], *space.io_bits_range)
    io_bad = _Ordinal([t.design.io_bits for t in bad], *space.io_bits_range)
    strat_good = _Categorical([t.design.strategy for t in good], space.strategies)
    strat_bad = _Categorical([t.design.strategy for t in bad], space.strategies)

    per_depth_models: dict[int, list] = {}

    def layer_models(depth: int):
        # (width_good, width_bad, bits_good, bits_bad) per hidden layer,
        # fit on same-depth trials only; both sides stay at the prior
        # until the good half has seen this depth.
        if depth not in per_depth_models:
            g = [t.design for t in good if t.design.depth == depth]
            b = [t.design for t in bad if t.design.depth == depth] if g else []
            models = []
            for layer in range(depth):
                models.append(
                    (
                        _Ordinal([d.hidden_widths[layer] for d in g], *space.width_range),
                        _Ordinal([d.hidden_widths[layer] for d in b], *space.width_range),
                        _Ordinal([d.weight_bits[layer] for d in g], *space.weight_bits_range),
                        _Ordinal([d.weight_bits[layer] for d in b], *space.weight_bits_range),
                    )
                )
            per_depth_models[depth] = models
        return per_depth_models[depth]

    best_design, best_score = None, -np.inf
    for _ in range(config.n_candidates):
        depth = depth_good.sample(rng)
        score = depth_good.logpdf(depth) - depth_bad.logpdf(depth)
        widths, bits = [], []
        for w_good, w_bad, b_good, b_bad in layer_models(depth):
            w = w_good.sample(rng)
            q = b_good.sample(rng)
            score += w_good.logpdf(w) - w_bad.logpdf(w)
            score += b_good.logpdf(q) - b_bad.logpdf(q)
            widths.append(w)
            bits.append(q)
        io_bits = io_good.sample(rng)
        score += io_good.logpdf(io_bits) - io_bad.logpdf(io_bits)
        strategy = strat_good.sample(rng)
        score += strat_good.logpdf(strategy) - strat_bad.logpdf(strategy)
        if score > best_score:
            best_score = score
            best_design = DesignPoint(tuple(widths), (*bits, bits[-1]), io_bits, strategy)
    return best_design


SAMPLERS = ("motpe", "random")


def run_campaign(
    space: CoDesignSpace,
    evaluate,
    budget: int,
    seed: int,
    *,
    sampler: str = "motpe",
    sampler_config: SamplerConfig = SamplerConfig(),
    parallelism: int = 1,
    suggest_block: int = 8,
    existing: dict[int, TrialRecord] | None = None,
    on_record=None,
) -> list[TrialRecord]:
    """Run (or resume) a fixed-budget campaign; returns records 0..budget-1.

    ``evaluate(design, trial_seed) -> (objectives, metrics)`` runs one
    trial; exceptions become failed records and never abort the
    campaign. ``existing`` records (from a persisted log) are honored
    verbatim - their indices are never re-executed. ``on_record`` fires
    once per freshly executed trial, in completion order.

    Suggestions for trials in [b, b + suggest_block) condition on trials
    below b only, so the (trial_index -> design, objectives) map is
    independent of ``parallelism``.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    if suggest_block < 1:
        raise ValueError("suggest_block must be >= 1")
    if sampler not in SAMPLERS:
        raise ValueError(f"sampler must be one of {SAMPLERS}, got {sampler!r}")

    records: dict[int, TrialRecord] = dict(existing or {})

    def run_one(index: int, design: DesignPoint) -> TrialRecord:
        t_seed = trial_seed(seed, index)
        try:
            objectives, metrics = evaluate(design, t_seed)
            return TrialRecord(
                trial_index=index,
                seed=t_seed,
                design=design,
                status="completed",
                objectives=tuple(float(v) for v in objectives),
                metrics=metrics,
            )
        except Exception as exc:  # noqa: BLE001 - trial failures are data
            return TrialRecord(
                trial_index=index,
                seed=t_seed,
                design=design,
                status="failed",
                objectives=None,
                error=f"{type(exc).__name__}: {exc}",
            )

    for block_start in range(0, budget, suggest_block):
        block_end = min(block_start + suggest_block, budget)
        todo = [i for i in range(block_start, block_end) if i not in records]
        if not todo:
            continue
        snapshot = [records[j] for j in range(block_start) if j in records]
        designs = {}
        for i in todo:
            rng = np.random.default_rng(trial_seed(seed, i))
            if sampler == "random":
                designs[i] = sample_uniform(space, rng)
            else:
                designs[i] = suggest(snapshot, space, rng, sampler_config)
        if parallelism > 1 and len(todo) > 1:
            with ThreadPoolExecutor(max_workers=parallelism) as pool:
                futures = [pool.submit(run_one, i, designs[i]) for i in todo]
                for fut in as_completed(futures):
                    rec = fut.result()
                    records[rec.trial_index] = rec
                    if on_record is not None:
                        on_record(rec)
        else:
            for i in todo:
                rec = run_one(i, designs[i])
                records[rec.trial_index] = rec
                if on_record is not None:
                    on_record(rec)

    return [records[i] for i in range(budget)]
