"""Desk-scale co-design of tiny quantized pulse-processing networks.

Simulates CR-(RC)^N detector pulse streams, trains quantization-aware
MLP amplitude estimators, scores them with an analytical energy model
and a gate-level synthesis proxy, and searches the joint design space
with a multi-objective TPE sampler under hardware constraints.
"""

from .pulsegen import (
    Dataset,
    PulseStreamConfig,
    Window,
    WindowSet,
    align_windows,
    build_dataset,
    decimate,
    generate_stream,
    normalization_scale,
    peak_amplitude,
    psnr,
    pulse_template,
    reference_shape,
    simulate_stream,
    split_counts,
)
from .datafile import read_blocks, read_dataset, read_weights, write_blocks, write_dataset, write_weights
from .qnn import (
    MlpSpec,
    TrainingParams,
    TrainingDiverged,
    TrainReport,
    baseline_mse,
    forward,
    init_weights,
    quantize,
    ste_mask,
    train,
)
from .hwcost import (
    ConstraintCheck,
    ConstraintLimits,
    CostModelParams,
    HardwareReport,
    StrategyMultipliers,
    SynthesisStrategy,
    analytical_energy,
    check_constraints,
    default_cost_model,
    load_cost_model,
    power_density,
    synthesize_proxy,
)
from .pareto import (
    ParetoArchive,
    area_utilization,
    constrained_front,
    dominates,
    eta,
    f_max_hz,
    hypervolume,
    hypervolume_curve,
    nondominated_filter,
    record_feasible,
    reference_point,
    spacing,
)
from .mobo import (
    CoDesignSpace,
    DesignPoint,
    SamplerConfig,
    TrialRecord,
    nondomination_rank,
    run_campaign,
    sample_uniform,
    space_cardinality,
    splitmix64,
    suggest,
    trial_seed,
)
from .campaign import (
    CampaignConfig,
    CampaignResult,
    CompareResult,
    ConfigError,
    DatasetConfig,
    append_trial,
    canonical_log_bytes,
    compare,
    convergence_rows,
    load_campaign_config,
    load_trial_log,
    make_evaluator,
    resolve_out_dir,
    run,
    save_campaign_config,
    spearman_rho,
    write_report_files,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
