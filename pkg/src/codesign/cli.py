"""Command line interface.

Subcommands: generate, train, synth, optimize, report, compare.
Exit codes: 0 success, 2 configuration error, 3 campaign exceeded its
failure budget.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from . import campaign as camp
from .campaign import (
    CampaignConfig,
    ConfigError,
    DatasetConfig,
    EXIT_CONFIG,
    EXIT_OK,
    load_campaign_config,
    load_trial_log,
)
from .datafile import read_dataset, write_dataset, write_weights
from .hwcost import SynthesisStrategy, default_cost_model, load_cost_model, power_density, synthesize_proxy, analytical_energy
from .mobo import CoDesignSpace
from .pulsegen import PulseStreamConfig
from .qnn import MlpSpec, TrainingParams, train


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="codesign",
        description="Detector pulse simulation, quantized MLP training, "
        "hardware cost scoring and multi-objective design search.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="simulate a pulse stream and write a windowed dataset")
    p.add_argument("--out", required=True, help="output dataset file")
    p.add_argument("--windows", type=int, default=5000, help="total window count")
    p.add_argument("--window-half-width", type=int, default=32)
    p.add_argument("--decimation", type=int, default=4)
    p.add_argument("--shaper-order", type=int, default=3, help="CR-(RC)^N shaping order, 1..5")
    p.add_argument("--tau-s", type=float, default=1e-6, help="shaping time constant (s)")
    p.add_argument("--sample-period-s", type=float, default=1e-6)
    p.add_argument("--psnr-lo", type=float, default=1.0)
    p.add_argument("--psnr-hi", type=float, default=20.0)
    p.add_argument("--rate", type=float, default=1.0 / 128.0, help="mean arrivals per sample")
    p.add_argument("--noise-sigma", type=float, default=1.0)
    p.add_argument("--stream-seed", type=int, default=0)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--stream-length", type=int, default=None, help="samples (default: sized to fit)")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("train", help="train one quantized MLP on a dataset file")
    p.add_argument("--data", required=True, help="dataset file from 'generate'")
    p.add_argument("--widths", type=_int_list, required=True, help="hidden widths, e.g. 8,4")
    p.add_argument("--bits", type=_int_list, required=True, help="weight bits per matrix, e.g. 6,6,6")
    p.add_argument("--io-bits", type=int, required=True)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--learning-rate", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--weights", default=None, help="write trained weights to this file")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("synth", help="score one network with the synthesis proxy")
    p.add_argument("--widths", type=_int_list, required=True)
    p.add_argument("--bits", type=_int_list, required=True)
    p.add_argument("--io-bits", type=int, required=True)
    p.add_argument("--input-width", type=int, default=9)
    p.add_argument("--strategy", default="AREA_0", choices=[s.name for s in SynthesisStrategy])
    p.add_argument("--cost-model", default=None, help="cost model JSON (default: built in)")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("optimize", help="run a multi-objective co-design campaign")
    p.add_argument("--config", default=None, help="campaign config JSON")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--parallel", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--sampler", choices=("motpe", "random"), default=None)
    p.add_argument("--space", default=None, help="design space JSON file")
    p.add_argument("--objectives", default=None, help="comma-separated objective names")
    p.add_argument("--log", default=None, help="trial log path (default: <out-dir>/trials.jsonl)")
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("report", help="rebuild front/convergence/summary and figures from a log")
    p.add_argument("--log", required=True, help="trials.jsonl from a campaign")
    p.add_argument("--config", required=True, help="campaign config JSON the log was produced with")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("compare", help="theory-guided vs proxy-guided paired campaigns")
    p.add_argument("--config", default=None, help="campaign config JSON")
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=_cmd_compare)

    return parser


def _cmd_generate(args) -> int:
    nw = args.window_half_width
    length = args.stream_length if args.stream_length is not None else 2 * nw * args.windows
    stream_cfg = PulseStreamConfig(
        shaper_order=args.shaper_order,
        tau_s=args.tau_s,
        sample_period_s=args.sample_period_s,
        psnr_range=(args.psnr_lo, args.psnr_hi),
        mean_arrival_rate=args.rate,
        stream_length=length,
        noise_sigma=args.noise_sigma,
        rng_seed=args.stream_seed,
    )
    cfg = DatasetConfig(
        stream=stream_cfg,
        window_half_width=nw,
        decimation=args.decimation,
        total_windows=args.windows,
        split_seed=args.split_seed,
    )
    dataset = cfg.build()
    write_dataset(args.out, dataset)
    counts = {name: len(getattr(dataset, name)) for name in ("train", "val", "test")}
    print(json.dumps({"path": args.out, "window_length": dataset.window_length, **counts}))
    return EXIT_OK


def _load_spec(args, input_width: int) -> MlpSpec:
    spec = MlpSpec(
        hidden_layer_widths=args.widths,
        weight_bits=args.bits,
        io_bits=args.io_bits,
        input_width=input_width,
    )
    spec.validate()
    return spec


def _cmd_train(args) -> int:
    dataset = read_dataset(args.data)
    spec = _load_spec(args, dataset.window_length)
    hp = TrainingParams(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        momentum=args.momentum,
        seed=args.seed,
    )
    report = train(spec, dataset, hp)
    if args.weights:
        write_weights(args.weights, {"mlp_spec": spec.to_dict()}, report.weights)
    print(json.dumps(report.to_dict(), sort_keys=True))
    return EXIT_OK


def _cmd_synth(args) -> int:
    spec = _load_spec(args, args.input_width)
    params = load_cost_model(args.cost_model) if args.cost_model else default_cost_model()
    hw = synthesize_proxy(spec, SynthesisStrategy[args.strategy], params)
    out = hw.to_dict()
    out["analytical_energy_j"] = analytical_energy(spec, params)
    print(json.dumps(out, sort_keys=True))
    return EXIT_OK


def _apply_optimize_overrides(config: CampaignConfig, args) -> CampaignConfig:
    updates = {}
    if args.budget is not None:
        updates["budget"] = args.budget
    if args.parallel is not None:
        updates["parallelism"] = args.parallel
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.sampler is not None:
        updates["sampler"] = args.sampler
    if args.space is not None:
        try:
            with open(args.space, "r", encoding="utf-8") as fh:
                updates["space"] = CoDesignSpace.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError, ValueError) as exc:
            raise ConfigError(f"cannot load space {args.space}: {exc}") from exc
    if args.objectives is not None:
        updates["objectives"] = tuple(tok.strip() for tok in args.objectives.split(",") if tok.strip())
    return replace(config, **updates) if updates else config


def _cmd_optimize(args) -> int:
    config = load_campaign_config(args.config) if args.config else CampaignConfig()
    config = _apply_optimize_overrides(config, args)
    result = camp.run(config, out_dir=args.out_dir, log_path=args.log)
    print(json.dumps(result.summary, sort_keys=True))
    return result.exit_code


def _cmd_report(args) -> int:
    config = load_campaign_config(args.config)
    records = sorted(load_trial_log(args.log).values(), key=lambda r: r.trial_index)
    if not records:
        raise ConfigError(f"trial log {args.log} holds no records")
    out = camp.resolve_out_dir(args.out_dir)
    dataset = config.dataset.build()
    from .qnn import baseline_mse

    report = camp.write_report_files(out, records, config, baseline_mse(dataset), figures=True)
    print(json.dumps(report["summary"], sort_keys=True))
    return EXIT_OK


def _cmd_compare(args) -> int:
    config = load_campaign_config(args.config) if args.config else CampaignConfig()
    result = camp.compare(config, budget=args.budget, out_dir=args.out_dir)
    print(json.dumps(result.report, sort_keys=True))
    worst = max(result.theory.exit_code, result.proxy.exit_code)
    return worst


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        # ConfigError subclasses ValueError; bad flag values and unreadable
        # input files are all configuration problems to the caller
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
