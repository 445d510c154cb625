"""Pulse-stream simulation and windowed dataset construction.

Simulates the sampled output of a CR-(RC)^N shaping chain driven by a
Poisson train of charge pulses, slices the stream into peak-aligned
windows, and packages decimated windows into train/val/test splits for
amplitude regression.

All randomness flows through ``numpy.random.Generator`` instances seeded
from explicit config fields, so every artifact is reproducible bit for
bit from its configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

MAX_SHAPER_ORDER = 5

# train / validation / test
SPLIT_FRACTIONS = (0.70, 0.20, 0.10)

# Template tail is cut where it falls below this fraction of the peak.
_TEMPLATE_CUTOFF = 1e-9


def reference_shape(shaper_order: int, tau_s: float, sample_period_s: float, k):
    """Normalized CR-(RC)^N shaper response sampled at index ``k``.

    p[k] = (1/N!) * (k*T/tau)^N * exp(-k*T/tau)

    ``k`` may be a scalar or an array; negative indices map to 0 (causal
    response). The continuous-time peak sits at t = N*tau with height
    ``peak_amplitude(shaper_order)``.
    """
    if not 1 <= int(shaper_order) <= MAX_SHAPER_ORDER:
        raise ValueError(f"shaper_order must be in 1..{MAX_SHAPER_ORDER}, got {shaper_order}")
    if tau_s <= 0 or sample_period_s <= 0:
        raise ValueError("tau_s and sample_period_s must be positive")
    n = int(shaper_order)
    t = np.asarray(k, dtype=np.float64) * (sample_period_s / tau_s)
    t = np.where(t < 0, 0.0, t)
    out = (t**n) * np.exp(-t) / math.factorial(n)
    out = np.where(np.asarray(k) < 0, 0.0, out)
    return out if out.ndim else float(out)


def peak_amplitude(shaper_order: int) -> float:
    """Peak of the normalized shaper response: N^N * e^-N / N!.

    Strictly decreasing in the shaper order (0.3679 at N=1 down to
    0.1755 at N=5), which is why higher orders need lower noise for the
    same peak signal-to-noise ratio.
    """
    if not 1 <= int(shaper_order) <= MAX_SHAPER_ORDER:
        raise ValueError(f"shaper_order must be in 1..{MAX_SHAPER_ORDER}, got {shaper_order}")
    n = int(shaper_order)
    return float(n**n * math.exp(-n) / math.factorial(n))


def psnr(peak: float, sigma: float) -> float:
    """Peak signal-to-noise ratio, linear (not dB)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return peak / sigma


@dataclass(frozen=True)
class PulseStreamConfig:
    """Parameters of one simulated shaper output stream.

    ``mean_arrival_rate`` is in pulses per sample; the default of 1/128
    yields on average one pulse per two 64-sample capture buffers, so
    pileup exists but stays rare. ``psnr_range`` bounds the peak PSNR of
    individual pulses; amplitudes are drawn as
    A = U(psnr_lo, psnr_hi) * noise_sigma / peak_amplitude(N).
    """

    shaper_order: int = 3
    tau_s: float = 1.0e-6
    sample_period_s: float = 1.0e-6
    psnr_range: tuple[float, float] = (1.0, 20.0)
    mean_arrival_rate: float = 1.0 / 128.0
    stream_length: int = 320_000
    noise_sigma: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if not 1 <= int(self.shaper_order) <= MAX_SHAPER_ORDER:
            raise ValueError(f"shaper_order must be in 1..{MAX_SHAPER_ORDER}")
        if self.tau_s <= 0 or self.sample_period_s <= 0:
            raise ValueError("tau_s and sample_period_s must be positive")
        lo, hi = self.psnr_range
        if not (0 < lo <= hi):
            raise ValueError("psnr_range must satisfy 0 < lo <= hi")
        if self.mean_arrival_rate <= 0:
            raise ValueError("mean_arrival_rate must be positive")
        if self.stream_length < 1:
            raise ValueError("stream_length must be >= 1")
        if self.noise_sigma <= 0:
            raise ValueError("noise_sigma must be positive")
        object.__setattr__(self, "psnr_range", (float(lo), float(hi)))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["psnr_range"] = list(self.psnr_range)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PulseStreamConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown PulseStreamConfig keys: {sorted(unknown)}")
        d = dict(d)
        if "psnr_range" in d:
            d["psnr_range"] = tuple(d["psnr_range"])
        return cls(**d)


def pulse_template(config: PulseStreamConfig) -> np.ndarray:
    """Shaper response sampled on the integer grid, truncated where the
    tail drops below 1e-9 of the peak."""
    peak = peak_amplitude(config.shaper_order)
    k, vals = 0, []
    while True:
        v = reference_shape(config.shaper_order, config.tau_s, config.sample_period_s, k)
        vals.append(v)
        if k > 0 and v < peak * _TEMPLATE_CUTOFF:
            break
        k += 1
        if k > 1 << 20:
            raise ValueError("shaper response does not decay on this sample grid")
    return np.asarray(vals, dtype=np.float64)


def _draw_arrivals(config: PulseStreamConfig, rng: np.random.Generator) -> np.ndarray:
    """Integer arrival indices from exponential inter-arrival gaps."""
    rate = config.mean_arrival_rate
    if rate == 0:
        return np.empty(0, dtype=np.int64)
    n = config.stream_length
    chunk = max(16, int(2 * rate * n) + 8)
    gaps = rng.exponential(1.0 / rate, size=chunk)
    total = float(np.sum(gaps))
    while total <= n:
        more = rng.exponential(1.0 / rate, size=chunk)
        gaps = np.concatenate([gaps, more])
        total += float(np.sum(more))
    times = np.cumsum(gaps)
    return np.floor(times[times < n]).astype(np.int64)


def simulate_stream(config: PulseStreamConfig):
    """Full simulation: returns (stream, arrival indices, amplitudes).

    Draw order is fixed (gaps, then per-pulse PSNR, then noise) so the
    stream is a pure function of the config.
    """
    rng = np.random.default_rng(config.rng_seed)
    arrivals = _draw_arrivals(config, rng)
    lo, hi = config.psnr_range
    peak = peak_amplitude(config.shaper_order)
    pulse_psnr = rng.uniform(lo, hi, size=arrivals.size)
    amplitudes = pulse_psnr * config.noise_sigma / peak
    stream = rng.normal(0.0, config.noise_sigma, size=config.stream_length)

    template = pulse_template(config)
    n = config.stream_length
    for k0, amp in zip(arrivals, amplitudes):
        end = min(n, k0 + template.size)
        stream[k0:end] += amp * template[: end - k0]
    return stream, arrivals, amplitudes


def generate_stream(config: PulseStreamConfig) -> np.ndarray:
    """Sampled shaper output s[k] = sum_j A_j p[k - k0_j] + noise."""
    stream, _, _ = simulate_stream(config)
    return stream


def _window_bounds(window_half_width: int):
    if window_half_width < 2 or window_half_width % 2:
        raise ValueError("window_half_width must be an even integer >= 2")


def align_windows(stream: np.ndarray, window_half_width: int) -> np.ndarray:
    """Peak-aligned capture windows, one per non-overlapping buffer.

    The stream is consumed in buffers of 2*window_half_width samples.
    Within each buffer the largest |s[k]| (ties toward the lowest index)
    becomes the center of an emitted window of window_half_width + 1
    samples; positions outside the buffer are zero-padded.

    Returns an array of shape (n_buffers, window_half_width + 1).
    """
    windows, _ = _align_with_coverage(stream, window_half_width)
    return windows


def _align_with_coverage(stream: np.ndarray, window_half_width: int):
    """Like align_windows, also returns per-window absolute coverage
    [lo, hi] (inclusive) of real, non-padded samples."""
    _window_bounds(window_half_width)
    nw = window_half_width
    buf = 2 * nw
    stream = np.asarray(stream, dtype=np.float64)
    n_buffers = stream.size // buf
    if n_buffers == 0:
        return np.empty((0, nw + 1)), np.empty((0, 2), dtype=np.int64)
    tiled = stream[: n_buffers * buf].reshape(n_buffers, buf)
    k_max = np.argmax(np.abs(tiled), axis=1)

    offsets = np.arange(nw + 1) - nw // 2
    idx = k_max[:, None] + offsets[None, :]
    valid = (idx >= 0) & (idx < buf)
    gathered = np.take_along_axis(tiled, np.clip(idx, 0, buf - 1), axis=1)
    windows = np.where(valid, gathered, 0.0)

    base = np.arange(n_buffers, dtype=np.int64) * buf
    lo = base + np.maximum(idx[:, 0], 0)
    hi = base + np.minimum(idx[:, -1], buf - 1)
    coverage = np.stack([lo, hi], axis=1)
    return windows, coverage


def decimate(window: np.ndarray, decimation: int) -> np.ndarray:
    """Keep every ``decimation``-th sample starting at index 0.

    Input rows have window_half_width + 1 samples; the decimation must
    divide the half-width so the output lands on
    window_half_width/decimation + 1 points (first and last retained).
    """
    window = np.asarray(window)
    length = window.shape[-1]
    if decimation < 1:
        raise ValueError("decimation must be >= 1")
    if (length - 1) % decimation:
        raise ValueError(
            f"decimation {decimation} does not divide window half-width {length - 1}"
        )
    return window[..., ::decimation]


@dataclass(frozen=True)
class Window:
    """One decimated capture window with its regression target.

    ``true_toa`` is metadata (arrival index of the labeling pulse in
    stream samples, -1.0 when the window holds no pulse peak), never a
    training target.
    """

    samples: np.ndarray
    amplitude_label: float
    true_toa: float


class WindowSet:
    """Array-backed sequence of :class:`Window`."""

    def __init__(self, samples: np.ndarray, labels: np.ndarray, toas: np.ndarray):
        if not (len(samples) == len(labels) == len(toas)):
            raise ValueError("samples/labels/toas length mismatch")
        self.samples = np.asarray(samples, dtype=np.float32)
        self.labels = np.asarray(labels, dtype=np.float32)
        self.toas = np.asarray(toas, dtype=np.float32)

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, i: int) -> Window:
        return Window(self.samples[i], float(self.labels[i]), float(self.toas[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


@dataclass
class Dataset:
    """Shuffled, split, normalized window collection.

    ``provenance`` records everything needed to regenerate the arrays:
    the stream config, window geometry, seeds, the normalization
    constant, and the split counts.
    """

    train: WindowSet
    val: WindowSet
    test: WindowSet
    split_fractions: tuple[float, float, float]
    provenance: dict = field(default_factory=dict)

    @property
    def window_length(self) -> int:
        return self.train.samples.shape[1]


def split_counts(total: int) -> tuple[int, int, int]:
    """70/20/10 split sizes: floor the first two, remainder to test."""
    if total < 1:
        raise ValueError("total must be >= 1")
    n_train = int(total * SPLIT_FRACTIONS[0])
    n_val = int(total * SPLIT_FRACTIONS[1])
    return n_train, n_val, total - n_train - n_val


def normalization_scale(config: PulseStreamConfig) -> float:
    """Largest possible pulse amplitude; dividing by it maps labels into
    (0, 1] and keeps window samples inside the unit quantizer range."""
    return config.psnr_range[1] * config.noise_sigma / peak_amplitude(config.shaper_order)


def build_dataset(
    config: PulseStreamConfig,
    window_half_width: int = 32,
    decimation: int = 4,
    total_windows: int = 5000,
    seed: int = 0,
) -> Dataset:
    """Simulate, align, decimate, label, normalize, shuffle and split.

    Each window is labeled with the amplitude of the pulse whose peak
    lies inside the window's real (non-padded) coverage, 0 if none; with
    several candidates the largest amplitude wins. Raises if the
    configured stream is too short for ``total_windows``.
    """
    _window_bounds(window_half_width)
    if total_windows < 10:
        raise ValueError("total_windows must be >= 10 so every split is nonempty")
    required = total_windows * 2 * window_half_width
    if config.stream_length < required:
        raise ValueError(
            f"stream_length {config.stream_length} too short for "
            f"{total_windows} windows: need at least {required} samples"
        )

    stream, arrivals, amplitudes = simulate_stream(config)
    windows, coverage = _align_with_coverage(stream, window_half_width)
    windows = windows[:total_windows]
    coverage = coverage[:total_windows]
    windows = decimate(windows, decimation)

    template = pulse_template(config)
    peak_offset = int(np.argmax(template))
    peak_pos = arrivals + peak_offset  # sorted: arrivals are cumulative

    labels = np.zeros(total_windows, dtype=np.float64)
    toas = np.full(total_windows, -1.0, dtype=np.float64)
    starts = np.searchsorted(peak_pos, coverage[:, 0], side="left")
    stops = np.searchsorted(peak_pos, coverage[:, 1], side="right")
    for i in np.nonzero(stops > starts)[0]:
        j = starts[i] + int(np.argmax(amplitudes[starts[i] : stops[i]]))
        labels[i] = amplitudes[j]
        toas[i] = float(arrivals[j])

    scale = normalization_scale(config)
    windows = windows / scale
    labels = labels / scale

    rng = np.random.default_rng(seed)
    perm = rng.permutation(total_windows)
    windows, labels, toas = windows[perm], labels[perm], toas[perm]

    n_train, n_val, n_test = split_counts(total_windows)
    cuts = (n_train, n_train + n_val)
    sets = [
        WindowSet(windows[: cuts[0]], labels[: cuts[0]], toas[: cuts[0]]),
        WindowSet(windows[cuts[0] : cuts[1]], labels[cuts[0] : cuts[1]], toas[cuts[0] : cuts[1]]),
        WindowSet(windows[cuts[1] :], labels[cuts[1] :], toas[cuts[1] :]),
    ]
    provenance = {
        "stream": config.to_dict(),
        "window_half_width": int(window_half_width),
        "decimation": int(decimation),
        "total_windows": int(total_windows),
        "split_seed": int(seed),
        "norm_scale": float(scale),
        "split_counts": [n_train, n_val, n_test],
    }
    return Dataset(sets[0], sets[1], sets[2], SPLIT_FRACTIONS, provenance)
