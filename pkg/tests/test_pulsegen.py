import numpy as np
import pytest

from codesign import (
    PulseStreamConfig,
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

# k^N e^-k / N! at N=3, tau = T, k = 7, evaluated with 50-digit
# arithmetic independently of the implementation.
REF_SHAPE_N3_K7 = 0.052129252364199843

# N^N e^-N / N! for N = 1..5, same provenance.
PEAKS = {
    1: 0.36787944117144232,
    2: 0.27067056647322538,
    3: 0.22404180765538774,
    4: 0.19536681481316459,
    5: 0.17546736976785071,
}


def test_reference_shape_value():
    assert reference_shape(3, 1e-6, 1e-6, 7) == pytest.approx(REF_SHAPE_N3_K7, rel=1e-12)


def test_reference_shape_zero_for_nonpositive_k():
    assert reference_shape(3, 1e-6, 1e-6, 0) == 0.0
    assert reference_shape(3, 1e-6, 1e-6, -5) == 0.0


def test_reference_shape_array_input():
    k = np.arange(-2, 5)
    values = reference_shape(2, 1e-6, 1e-6, k)
    assert values.shape == k.shape
    assert np.all(values[k <= 0] == 0.0)
    assert np.all(values[k > 0] > 0.0)


@pytest.mark.parametrize("order", [1, 2, 3, 4, 5])
def test_reference_shape_unimodal_with_peak_at_n(order):
    # tau = T makes the continuous maximum land on sample k = N.
    k = np.arange(0, 60)
    values = reference_shape(order, 1e-6, 1e-6, k)
    assert np.all(values >= 0.0)
    peak = int(np.argmax(values))
    assert peak == order
    assert np.all(np.diff(values[: peak + 1]) >= 0)
    assert np.all(np.diff(values[peak:]) <= 0)


@pytest.mark.parametrize(
    "order, tau, period",
    [(0, 1e-6, 1e-6), (6, 1e-6, 1e-6), (3, 0.0, 1e-6), (3, 1e-6, 0.0), (3, -1e-6, 1e-6)],
)
def test_reference_shape_rejects_bad_parameters(order, tau, period):
    with pytest.raises(ValueError):
        reference_shape(order, tau, period, 1)


def test_peak_amplitude_matches_independent_values():
    for order, expected in PEAKS.items():
        assert peak_amplitude(order) == pytest.approx(expected, rel=1e-12)


def test_peak_amplitude_is_shape_at_k_equals_n():
    for order in range(1, 6):
        assert peak_amplitude(order) == pytest.approx(
            reference_shape(order, 1e-6, 1e-6, order), rel=1e-12
        )


def test_peak_amplitude_strictly_decreasing():
    values = [peak_amplitude(n) for n in range(1, 6)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_psnr_is_peak_over_sigma():
    assert psnr(3.0, 1.5) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        psnr(1.0, 0.0)


def test_stream_config_validation():
    with pytest.raises(ValueError):
        PulseStreamConfig(shaper_order=6)
    with pytest.raises(ValueError):
        PulseStreamConfig(psnr_range=(20.0, 1.0))
    with pytest.raises(ValueError):
        PulseStreamConfig(mean_arrival_rate=0.0)
    with pytest.raises(ValueError):
        PulseStreamConfig(noise_sigma=0.0)
    with pytest.raises(ValueError):
        PulseStreamConfig(stream_length=0)


def test_stream_config_roundtrip():
    config = PulseStreamConfig(shaper_order=2, psnr_range=(2.0, 9.0), rng_seed=5)
    assert PulseStreamConfig.from_dict(config.to_dict()) == config
    with pytest.raises(ValueError):
        PulseStreamConfig.from_dict({**config.to_dict(), "bogus": 1})


def test_pulse_template_normalized_peak():
    template = pulse_template(PulseStreamConfig(shaper_order=3))
    assert template.max() == pytest.approx(peak_amplitude(3), rel=1e-9)
    assert template[0] == 0.0
    # truncation keeps the negligible tail out
    assert template[-1] > 0.0


def test_simulate_stream_deterministic():
    config = PulseStreamConfig(stream_length=20_000, rng_seed=3)
    s1, a1, amp1 = simulate_stream(config)
    s2, a2, amp2 = simulate_stream(config)
    assert np.array_equal(s1, s2)
    assert np.array_equal(a1, a2)
    assert np.array_equal(amp1, amp2)


def test_simulate_stream_noise_only_statistics():
    # Mean arrival gap ~ 1e10 samples, so no pulse lands in the stream.
    config = PulseStreamConfig(stream_length=200_000, mean_arrival_rate=1e-10, rng_seed=0)
    stream, arrivals, _ = simulate_stream(config)
    assert len(arrivals) == 0
    n = len(stream)
    assert abs(stream.mean()) < 3.0 / np.sqrt(n)
    var = stream.var()
    assert abs(var - 1.0) < 3.0 * np.sqrt(2.0 / (n - 1))


def test_simulate_stream_superposition_and_amplitudes():
    """Subtracting every scaled template from the stream must leave
    pure noise, which pins down placement, scaling, and pileup."""
    config = PulseStreamConfig(stream_length=100_000, mean_arrival_rate=1 / 64, rng_seed=9)
    stream, arrivals, amplitudes = simulate_stream(config)
    assert len(arrivals) > 1000  # pileup is present at this rate
    template = pulse_template(config)
    residual = stream.copy()
    for k0, amp in zip(arrivals, amplitudes):
        stop = min(len(residual), k0 + len(template))
        residual[k0:stop] -= amp * template[: stop - k0]
    assert abs(residual.mean()) < 3.0 / np.sqrt(len(residual))
    assert abs(residual.var() - 1.0) < 3.0 * np.sqrt(2.0 / (len(residual) - 1))
    # amplitudes span the configured PSNR range
    scale = peak_amplitude(config.shaper_order)
    observed = amplitudes * scale / config.noise_sigma
    assert observed.min() >= config.psnr_range[0]
    assert observed.max() <= config.psnr_range[1]


def test_simulate_stream_arrival_rate():
    config = PulseStreamConfig(stream_length=320_000, rng_seed=2)
    _, arrivals, _ = simulate_stream(config)
    expected = config.stream_length * config.mean_arrival_rate
    assert abs(len(arrivals) - expected) < 3.0 * np.sqrt(expected)
    # arrival indices are floored event times: sorted, ties allowed
    assert np.all(np.diff(arrivals) >= 0)
    assert arrivals.dtype == np.int64


def test_generate_stream_matches_simulate():
    config = PulseStreamConfig(stream_length=10_000, rng_seed=4)
    assert np.array_equal(generate_stream(config), simulate_stream(config)[0])


def test_align_windows_shape_and_centering():
    stream = np.zeros(256)
    stream[40] = 5.0  # inside buffer 0 (samples 0..63)
    stream[100] = -7.0  # inside buffer 1, negative peak must win on |s|
    windows = align_windows(stream, 32)
    assert windows.shape == (4, 33)
    assert windows[0][16] == 5.0  # peak at center offset N_W/2
    assert windows[1][16] == -7.0


def test_align_windows_tie_lowest_index():
    stream = np.zeros(64)
    stream[10] = 3.0
    stream[20] = 3.0
    windows = align_windows(stream, 32)
    assert windows[0][16] == 3.0
    # center is sample 10: sample 20 sits ten to its right
    assert windows[0][26] == 3.0


def test_align_windows_zero_pads_at_boundary():
    stream = np.zeros(64)
    stream[0] = 9.0  # centered window would start at sample -16
    windows = align_windows(stream, 32)
    assert windows[0][16] == 9.0
    assert np.all(windows[0][:16] == 0.0)


def test_decimate_lengths_and_stride():
    assert decimate(np.arange(33.0), 4).shape == (9,)
    assert np.array_equal(decimate(np.arange(33.0), 1), np.arange(33.0))
    assert np.array_equal(decimate(np.arange(9.0), 2), np.array([0.0, 2.0, 4.0, 6.0, 8.0]))
    with pytest.raises(ValueError):
        decimate(np.arange(33.0), 5)  # 5 does not divide 32


@pytest.mark.parametrize(
    "total, expected",
    [(98_583, (69_008, 19_716, 9_859)), (5_000, (3_500, 1_000, 500)), (10, (7, 2, 1))],
)
def test_split_counts(total, expected):
    counts = split_counts(total)
    assert counts == expected
    assert sum(counts) == total


def test_split_counts_always_partitions():
    for total in range(10, 400, 7):
        counts = split_counts(total)
        assert sum(counts) == total
        assert all(c > 0 for c in counts)


def test_build_dataset_split_sizes_and_window_length(tiny_dataset):
    assert (len(tiny_dataset.train), len(tiny_dataset.val), len(tiny_dataset.test)) == (280, 80, 40)
    assert tiny_dataset.window_length == 9


def test_build_dataset_requires_enough_stream():
    config = PulseStreamConfig(stream_length=100)
    with pytest.raises(ValueError, match="640"):
        build_dataset(config, total_windows=10)


def test_build_dataset_rejects_tiny_window_counts():
    config = PulseStreamConfig(stream_length=10_000)
    with pytest.raises(ValueError):
        build_dataset(config, total_windows=9)


def test_build_dataset_deterministic():
    config = PulseStreamConfig(stream_length=2 * 32 * 50, rng_seed=13)
    a = build_dataset(config, total_windows=50, seed=2)
    b = build_dataset(config, total_windows=50, seed=2)
    for split in ("train", "val", "test"):
        assert np.array_equal(getattr(a, split).samples, getattr(b, split).samples)
        assert np.array_equal(getattr(a, split).labels, getattr(b, split).labels)
        assert np.array_equal(getattr(a, split).toas, getattr(b, split).toas)


def test_build_dataset_labels_are_normalized_amplitudes():
    config = PulseStreamConfig(stream_length=2 * 32 * 200, rng_seed=21)
    dataset = build_dataset(config, total_windows=200, seed=0)
    scale = normalization_scale(config)
    _, _, amplitudes = simulate_stream(config)
    valid = set(np.round(amplitudes / scale, 6))
    labels = np.concatenate(
        [dataset.train.labels, dataset.val.labels, dataset.test.labels]
    ).astype(np.float64)
    assert labels.min() >= 0.0
    assert labels.max() <= 1.0 + 1e-6
    nonzero = labels[labels > 0]
    assert len(nonzero) > 0
    for label in np.round(nonzero, 6):
        assert label in valid


def test_build_dataset_windows_without_pulse_labeled_zero():
    config = PulseStreamConfig(stream_length=2 * 32 * 100, mean_arrival_rate=1e-10, rng_seed=3)
    dataset = build_dataset(config, total_windows=100, seed=0)
    for split in ("train", "val", "test"):
        ws = getattr(dataset, split)
        assert np.all(ws.labels == 0.0)
        assert np.all(ws.toas == -1.0)


def test_normalization_scale():
    config = PulseStreamConfig(shaper_order=3)
    assert normalization_scale(config) == pytest.approx(20.0 / PEAKS[3], rel=1e-12)


def test_build_dataset_provenance(tiny_dataset):
    prov = tiny_dataset.provenance
    assert prov["split_counts"] == [280, 80, 40]
    assert prov["stream"]["rng_seed"] == 7
    assert prov["norm_scale"] == pytest.approx(20.0 / PEAKS[3], rel=1e-12)
