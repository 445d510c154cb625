"""Hardware cost models for fixed-point MLP inference blocks.

Two routes that must never be collapsed:

* :func:`analytical_energy` - the closed-form per-layer energy sum
  (input read + parameter read + MAC + output write), linear in operand
  bit-widths and element counts. Cheap, strategy-blind.
* :func:`synthesize_proxy` - a gate-level structural proxy: array
  multipliers and ripple accumulators counted in full-adder cells,
  registered activations, strategy-dependent area/power/delay
  multipliers standing in for synthesis effort levels.

Default constants are order-of-magnitude 130nm-class values shipped in
``costmodel.json``; they set the scale, the tests pin the structure.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from importlib import resources

from .qnn import MlpSpec

UM2_PER_CM2 = 1e8  # 1 cm^2 = 1e8 um^2
PS_PER_S = 1e12


class SynthesisStrategy(Enum):
    """Synthesis effort presets: AREA_* trade delay for area, DELAY_*
    trade area for delay."""

    AREA_0 = "AREA_0"
    AREA_1 = "AREA_1"
    AREA_2 = "AREA_2"
    AREA_3 = "AREA_3"
    DELAY_0 = "DELAY_0"
    DELAY_1 = "DELAY_1"
    DELAY_2 = "DELAY_2"
    DELAY_3 = "DELAY_3"
    DELAY_4 = "DELAY_4"

    @property
    def family(self) -> str:
        return self.name.rsplit("_", 1)[0]


MULT_BOUNDS = (0.3, 3.0)


@dataclass(frozen=True)
class StrategyMultipliers:
    area: float
    power: float
    delay: float


@dataclass(frozen=True)
class CostModelParams:
    """Technology constants for both cost routes."""

    fa_area_um2: float
    fa_power_w: float
    fa_delay_ps: float
    reg_area_um2: float
    reg_power_w: float
    wiring_overhead: float
    activity: float
    access_energy_j_per_bit: float
    mac_energy_j_per_bit: float
    strategies: dict  # SynthesisStrategy -> StrategyMultipliers
    version: str = "1"

    def __post_init__(self):
        positives = {
            "fa_area_um2": self.fa_area_um2,
            "fa_power_w": self.fa_power_w,
            "fa_delay_ps": self.fa_delay_ps,
            "reg_area_um2": self.reg_area_um2,
            "reg_power_w": self.reg_power_w,
            "access_energy_j_per_bit": self.access_energy_j_per_bit,
            "mac_energy_j_per_bit": self.mac_energy_j_per_bit,
        }
        for name, value in positives.items():
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.wiring_overhead < 1:
            raise ValueError("wiring_overhead must be >= 1")
        if not 0 < self.activity <= 1:
            raise ValueError("activity must be in (0, 1]")
        missing = [s.name for s in SynthesisStrategy if s not in self.strategies]
        if missing:
            raise ValueError(f"strategy multipliers missing for {missing}")
        for strat, m in self.strategies.items():
            for kind in ("area", "power", "delay"):
                v = getattr(m, kind)
                if not MULT_BOUNDS[0] <= v <= MULT_BOUNDS[1]:
                    raise ValueError(f"{strat.name} {kind} multiplier {v} outside {MULT_BOUNDS}")
        self._check_family("AREA", "area", "delay")
        self._check_family("DELAY", "delay", "area")

    def _check_family(self, family: str, shrinking: str, growing: str) -> None:
        # Within a family, the named axis strictly improves with effort
        # level while the opposing axis never improves.
        members = sorted(
            (s for s in SynthesisStrategy if s.family == family),
            key=lambda s: int(s.name.rsplit("_", 1)[1]),
        )
        shrink = [getattr(self.strategies[s], shrinking) for s in members]
        grow = [getattr(self.strategies[s], growing) for s in members]
        if any(b >= a for a, b in zip(shrink, shrink[1:])):
            raise ValueError(f"{family} family {shrinking} multipliers must strictly decrease")
        if any(b < a for a, b in zip(grow, grow[1:])):
            raise ValueError(f"{family} family {growing} multipliers must not decrease")


def _params_from_dict(d: dict) -> CostModelParams:
    expected = {"version", "full_adder", "register_bit", "wiring_overhead", "activity", "energy", "strategies"}
    unknown = set(d) - expected
    if unknown:
        raise ValueError(f"unknown cost model keys: {sorted(unknown)}")
    missing = expected - set(d)
    if missing:
        raise ValueError(f"missing cost model keys: {sorted(missing)}")
    strategies = {}
    for name, mults in d["strategies"].items():
        strat = SynthesisStrategy[name]
        unknown = set(mults) - {"area", "power", "delay"}
        if unknown:
            raise ValueError(f"unknown multiplier keys for {name}: {sorted(unknown)}")
        strategies[strat] = StrategyMultipliers(
            area=float(mults["area"]), power=float(mults["power"]), delay=float(mults["delay"])
        )
    return CostModelParams(
        fa_area_um2=float(d["full_adder"]["area_um2"]),
        fa_power_w=float(d["full_adder"]["power_w"]),
        fa_delay_ps=float(d["full_adder"]["delay_ps"]),
        reg_area_um2=float(d["register_bit"]["area_um2"]),
        reg_power_w=float(d["register_bit"]["power_w"]),
        wiring_overhead=float(d["wiring_overhead"]),
        activity=float(d["activity"]),
        access_energy_j_per_bit=float(d["energy"]["access_j_per_bit"]),
        mac_energy_j_per_bit=float(d["energy"]["mac_j_per_bit"]),
        strategies=strategies,
        version=str(d["version"]),
    )


def load_cost_model(path: str) -> CostModelParams:
    with open(path, "r", encoding="utf-8") as fh:
        return _params_from_dict(json.load(fh))


_DEFAULT_PARAMS: CostModelParams | None = None


def default_cost_model() -> CostModelParams:
    global _DEFAULT_PARAMS
    if _DEFAULT_PARAMS is None:
        raw = resources.files(__package__).joinpath("costmodel.json").read_text("utf-8")
        _DEFAULT_PARAMS = _params_from_dict(json.loads(raw))
    return _DEFAULT_PARAMS


@dataclass
class HardwareReport:
    """Synthesis-proxy estimate for one design at one strategy."""

    area_um2: float
    power_w: float
    delay_ps: float
    energy_j: float  # power * delay, definitionally
    gate_counts: dict
    strategy: str

    def to_dict(self) -> dict:
        return {
            "area_um2": self.area_um2,
            "power_w": self.power_w,
            "delay_ps": self.delay_ps,
            "energy_j": self.energy_j,
            "power_density_w_per_cm2": power_density(self),
            "gate_counts": self.gate_counts,
            "strategy": self.strategy,
        }


def power_density(report: HardwareReport) -> float:
    """W/cm^2; e.g. 5e-4 W on 1e4 um^2 is exactly 5 W/cm^2."""
    return report.power_w / (report.area_um2 / UM2_PER_CM2)


def _layer_structure(spec: MlpSpec):
    """Per-layer (n_in, n_out, in_bits, w_bits, out_bits)."""
    in_bits = spec.activation_in_bits()
    out_bits = spec.activation_out_bits()
    return [
        (n_in, n_out, in_bits[i], spec.weight_bits[i], out_bits[i])
        for i, (n_in, n_out) in enumerate(spec.layer_dims())
    ]


def analytical_energy(spec: MlpSpec | None, params: CostModelParams | None = None) -> float:
    """Closed-form energy per inference, in joules.

    Per layer: input read (n_in * a bits) + parameter read
    (n_in * n_out weights * w bits) + MAC (n_in * n_out MACs, linear in
    the mean operand width) + output write (n_out * out bits). A
    layerless network costs exactly 0.
    """
    params = params or default_cost_model()
    if spec is None:
        return 0.0
    total = 0.0
    for n_in, n_out, a_bits, w_bits, o_bits in _layer_structure(spec):
        e_input = params.access_energy_j_per_bit * n_in * a_bits
        e_param = params.access_energy_j_per_bit * n_in * n_out * w_bits
        e_mac = params.mac_energy_j_per_bit * n_in * n_out * (a_bits + w_bits) / 2.0
        e_output = params.access_energy_j_per_bit * n_out * o_bits
        total += e_input + e_param + e_mac + e_output
    return total


def synthesize_proxy(
    spec: MlpSpec,
    strategy: SynthesisStrategy,
    params: CostModelParams | None = None,
) -> HardwareReport:
    """Structural gate-count proxy for post-synthesis area/power/delay.

    Every product is a w_bits x a_bits array multiplier (w*a full-adder
    cells, critical path w+a cell delays). Each output neuron sums its
    n_in products plus a bias through a tree of n_in ripple adders of
    the accumulator width w_bits + a_bits + ceil(log2(n_in + 1)); the
    tree contributes depth ceil(log2(n_in + 1)) ripple traversals.
    Activations and network I/O are registered at their bit-widths.
    Activations are registered per layer, so the critical path is the
    deepest single layer, not the sum.
    """
    params = params or default_cost_model()
    mults = params.strategies[strategy]

    multipliers: dict[str, int] = {}
    adders: dict[str, int] = {}
    registers: dict[str, int] = {}
    fa_cells = 0
    reg_bits = 0
    worst_path = 0.0

    structure = _layer_structure(spec)
    registers[str(spec.io_bits)] = registers.get(str(spec.io_bits), 0) + spec.input_width
    reg_bits += spec.input_width * spec.io_bits

    for n_in, n_out, a_bits, w_bits, o_bits in structure:
        mkey = f"{w_bits}x{a_bits}"
        multipliers[mkey] = multipliers.get(mkey, 0) + n_in * n_out
        fa_cells += n_in * n_out * w_bits * a_bits

        tree_depth = math.ceil(math.log2(n_in + 1))
        acc_width = w_bits + a_bits + tree_depth
        akey = str(acc_width)
        adders[akey] = adders.get(akey, 0) + n_in * n_out
        fa_cells += n_in * n_out * acc_width

        registers[str(o_bits)] = registers.get(str(o_bits), 0) + n_out
        reg_bits += n_out * o_bits

        path = (w_bits + a_bits) + tree_depth * acc_width
        worst_path = max(worst_path, float(path))

    raw_area = fa_cells * params.fa_area_um2 + reg_bits * params.reg_area_um2
    area = raw_area * params.wiring_overhead * mults.area
    raw_power = fa_cells * params.fa_power_w + reg_bits * params.reg_power_w
    power = raw_power * params.activity * mults.power
    delay = worst_path * params.fa_delay_ps * mults.delay
    energy = power * (delay / PS_PER_S)

    return HardwareReport(
        area_um2=area,
        power_w=power,
        delay_ps=delay,
        energy_j=energy,
        gate_counts={"multipliers": multipliers, "adders": adders, "registers": registers},
        strategy=strategy.name,
    )


@dataclass(frozen=True)
class ConstraintLimits:
    """Inclusive feasibility ceilings. ``val_mse`` is dataset-dependent
    (the recomputed mean-predictor baseline) and must be filled in
    before checking."""

    area_um2: float = 62_500.0  # 250 um x 250 um pixel budget
    power_density_w_per_cm2: float = 5.0
    delay_ps: float = 20.0
    val_mse: float | None = None

    def with_val_mse(self, val_mse: float) -> "ConstraintLimits":
        return ConstraintLimits(
            area_um2=self.area_um2,
            power_density_w_per_cm2=self.power_density_w_per_cm2,
            delay_ps=self.delay_ps,
            val_mse=val_mse,
        )


@dataclass(frozen=True)
class ConstraintCheck:
    area_ok: bool
    power_density_ok: bool
    delay_ok: bool
    mse_ok: bool

    @property
    def feasible(self) -> bool:
        return self.area_ok and self.power_density_ok and self.delay_ok and self.mse_ok

    def to_dict(self) -> dict:
        return {
            "area_ok": self.area_ok,
            "power_density_ok": self.power_density_ok,
            "delay_ok": self.delay_ok,
            "mse_ok": self.mse_ok,
            "feasible": self.feasible,
        }


def check_constraints(
    report: HardwareReport, val_mse: float, limits: ConstraintLimits
) -> ConstraintCheck:
    """All comparisons inclusive: a design exactly on a limit passes."""
    if limits.val_mse is None:
        raise ValueError("limits.val_mse is unset; fill it with the dataset baseline")
    return ConstraintCheck(
        area_ok=report.area_um2 <= limits.area_um2,
        power_density_ok=power_density(report) <= limits.power_density_w_per_cm2,
        delay_ok=report.delay_ps <= limits.delay_ps,
        mse_ok=val_mse <= limits.val_mse,
    )
