import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from scintlink.errors import BinningError, DegenerateFitError, DomainError, ZeroMeanError
from scintlink.estimators import (
    CountTrace,
    Histogram,
    IntensityTrace,
    count_histogram,
    empirical_stats,
    fit_lognormal,
    mandel_histogram,
    over_threshold_events,
    poisson_histogram,
    power_spectrum,
    similarity,
)
from scintlink.stats import LognormalChannel

positive_traces = hnp.arrays(
    float,
    st.integers(min_value=4, max_value=300),
    elements=st.floats(min_value=0.0, max_value=1e4, allow_nan=False),
).filter(lambda a: a.mean() > 0 and a.std() > 1e-6 * a.mean())


def test_table_row_si_from_moments():
    # population moments of a trace with the showcase mean and std give its SI
    assert (349.2 / 234.1) ** 2 == pytest.approx(2.2251, abs=1e-4)
    assert (820.8 / 678.7) ** 2 == pytest.approx(1.4626, abs=1e-4)


def test_empirical_stats_two_point_trace():
    # values m - s and m + s have population mean m and std s exactly
    x = np.array([100.0, 300.0])
    mean, std, si = empirical_stats(IntensityTrace(x, 1.0))
    assert (mean, std) == (200.0, 100.0)
    assert si == 0.25


def test_empirical_stats_constant():
    assert empirical_stats(CountTrace([5, 5, 5, 5], 1e-3)) == (5.0, 0.0, 0.0)


def test_empirical_stats_population_std():
    x = np.array([1, 2, 3, 4, 10])
    got = empirical_stats(CountTrace(x, 1e-3))
    assert got.std == pytest.approx(np.std(x, ddof=0), rel=1e-15)


def test_empirical_stats_zero_mean():
    with pytest.raises(ZeroMeanError):
        empirical_stats(CountTrace([0, 0, 0], 1e-3))


@given(positive_traces, st.floats(min_value=1e-3, max_value=1e3))
def test_si_scale_free(x, c):
    a = empirical_stats(IntensityTrace(x, 10.0)).si
    b = empirical_stats(IntensityTrace(c * x, 10.0)).si
    assert b == pytest.approx(a, rel=1e-9)


@pytest.mark.parametrize("bad", [[1], [1, -1, 2], [1.5, 2, 3]])
def test_count_trace_validation(bad):
    with pytest.raises(DomainError):
        CountTrace(bad, 1e-3)


def test_trace_window_validation():
    with pytest.raises(DomainError):
        CountTrace([1, 2], 0.0)
    with pytest.raises(DomainError):
        IntensityTrace([1.0, 2.0], -1.0)
    with pytest.raises(ZeroMeanError):
        IntensityTrace([0.0, 0.0], 1.0)


def test_traces_are_immutable():
    t = CountTrace([1, 2, 3], 1e-3)
    with pytest.raises(ValueError):
        t.counts[0] = 7


# --- similarity ------------------------------------------------------------

def test_similarity_identical():
    p = np.array([3.0, 0.0, 7.0, 1.0])
    assert similarity(p, p) == 1.0
    assert similarity(p, 5 * p) == pytest.approx(1.0, rel=1e-15)


def test_similarity_disjoint():
    assert similarity([1, 2, 0, 0], [0, 0, 4, 1]) == 0.0


def test_similarity_hand_value():
    # sqrt(0.5*0.25) + sqrt(0.5*0.75), squared
    expected = (math.sqrt(0.125) + math.sqrt(0.375)) ** 2
    assert similarity([1, 1], [1, 3]) == pytest.approx(expected, rel=1e-14)


def test_similarity_mismatched_bins():
    with pytest.raises(BinningError):
        similarity([1, 2, 3], [1, 2])
    a = Histogram(np.array([0.0, 1.0, 2.0]), np.array([1.0, 1.0]))
    b = Histogram(np.array([0.0, 1.5, 2.0]), np.array([1.0, 1.0]))
    with pytest.raises(BinningError):
        similarity(a, b)


def test_similarity_needs_mass():
    with pytest.raises(DomainError):
        similarity([0, 0], [1, 1])


weights = hnp.arrays(float, 12, elements=st.floats(min_value=0, max_value=1e3)).filter(
    lambda a: a.sum() > 0
)


@given(weights, weights)
def test_similarity_range_and_symmetry(p, q):
    s = similarity(p, q)
    assert 0.0 <= s <= 1.0
    assert s == pytest.approx(similarity(q, p), abs=1e-15)


def test_count_histogram_integer_bins():
    h = count_histogram(np.array([0, 1, 1, 4]))
    np.testing.assert_array_equal(h.edges, [-0.5, 0.5, 1.5, 2.5, 3.5, 4.5])
    np.testing.assert_array_equal(h.weights, [1, 2, 0, 0, 1])


def test_count_histogram_wide_bins_are_integer():
    rng = np.random.default_rng(3)
    counts = rng.integers(0, 20000, size=5000)
    h = count_histogram(counts)
    widths = np.diff(h.edges)
    assert np.all(widths == widths[0]) and widths[0] >= 1 and widths[0] == int(widths[0])
    assert h.weights.sum() == counts.size


def test_poisson_histogram_bins():
    edges = np.array([-0.5, 0.5, 2.5])
    h = poisson_histogram(2.0, edges)
    np.testing.assert_allclose(h.weights, [math.exp(-2), math.exp(-2) * (2 + 2)], rtol=1e-14)


@pytest.mark.slow
def test_similarity_monte_carlo_mandel():
    ch = LognormalChannel.from_si(234.1, 2.2251)
    rng = np.random.default_rng(7)
    counts = rng.poisson(ch.sample(65000, rng))
    h = count_histogram(counts)
    s = similarity(h, mandel_histogram(ch, h.edges))
    assert s >= 0.99


# --- power spectrum --------------------------------------------------------

def test_spectrum_constant_trace():
    s = power_spectrum(CountTrace([7] * 64, 1e-3))
    assert s.spectral_si == 0.0
    assert np.all(s.power[1:] == 0.0)
    assert s.bound95_hz == 0.0


def test_spectrum_matches_literal_dft():
    # literal O(N^2) DFT of I' = I/<I>, omega = exp(-2 pi i / N)
    rng = np.random.default_rng(11)
    x = rng.exponential(size=37)
    norm = x / x.mean()
    k = np.arange(x.size)
    dft = np.array([np.sum(norm * np.exp(-2j * np.pi * n * k / x.size)) for n in range(19)])
    s = power_spectrum(IntensityTrace(x, 200.0))
    np.testing.assert_allclose(s.power, np.abs(dft) ** 2, rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(s.freqs_hz, np.arange(19) * 200.0 / 37)


@pytest.mark.parametrize("n", [16, 17, 1000, 1001])
def test_parseval_even_and_odd(n):
    rng = np.random.default_rng(n)
    x = rng.lognormal(0.0, 0.9, size=n)
    t = IntensityTrace(x, 1000.0)
    s = power_spectrum(t)
    si = empirical_stats(t).si
    assert abs(s.spectral_si - si) / si < 1e-9
    assert s.cumulative[-1] == s.spectral_si
    assert np.all(np.diff(s.cumulative) >= 0)


@given(positive_traces)
@settings(max_examples=60)
def test_parseval_property(x):
    t = IntensityTrace(x, 50.0)
    s = power_spectrum(t)
    si = empirical_stats(t).si
    assert abs(s.spectral_si - si) <= 1e-9 * si
    idx = np.searchsorted(s.freqs_hz, s.bound95_hz)
    assert s.cumulative[idx] >= 0.95 * s.spectral_si
    if idx > 0:
        assert s.cumulative[idx - 1] < 0.95 * s.spectral_si


def test_bound_of_pure_tone():
    n, fs = 1000, 1000.0
    t = np.arange(n) / fs
    x = 10 + np.sin(2 * np.pi * 37.0 * t)
    assert power_spectrum(IntensityTrace(x, fs)).bound95_hz == pytest.approx(37.0)


@given(positive_traces, st.floats(min_value=0.05, max_value=0.95))
@settings(max_examples=40)
def test_bound_monotone_under_truncation(x, keep):
    t = IntensityTrace(x, 100.0)
    spec = np.fft.rfft(x)
    cut = max(1, int(keep * spec.size))
    spec[cut:] = 0.0
    y = np.fft.irfft(spec, n=x.size)
    # a constant offset rescales every non-zero-frequency bin alike
    y = y - min(0.0, y.min())
    if y.std() < 1e-6 * y.mean():
        return
    trunc = power_spectrum(IntensityTrace(y, 100.0))
    orig = power_spectrum(t)
    assert trunc.bound95_hz <= orig.bound95_hz


def test_hann_display_does_not_touch_si():
    rng = np.random.default_rng(5)
    t = IntensityTrace(rng.lognormal(size=512), 100.0)
    a = power_spectrum(t)
    b = power_spectrum(t, display_window="hann")
    assert a.spectral_si == b.spectral_si
    assert b.display_power is not None and b.display_power.shape == b.power.shape


def test_spectrum_errors():
    with pytest.raises(DomainError):
        power_spectrum(CountTrace([1, 2, 3], 1e-3))
    with pytest.raises(ZeroMeanError):
        power_spectrum(CountTrace([0, 0, 0, 0], 1e-3))


def test_spectrum_deterministic():
    rng = np.random.default_rng(9)
    t = CountTrace(rng.poisson(20, size=4096), 1e-3)
    a, b = power_spectrum(t), power_spectrum(t)
    assert np.array_equal(a.power, b.power) and a.bound95_hz == b.bound95_hz


# --- over-threshold events -------------------------------------------------

def test_events_hand_example():
    ev = over_threshold_events(CountTrace([1, 1, 8, 8, 8, 1], 1e-3), 2.0)
    assert ev.threshold_value == pytest.approx(4.5 * 10**0.2)
    np.testing.assert_allclose(ev.durations_ms, [3.0])


def test_events_all_below():
    ev = over_threshold_events(CountTrace([3, 3, 3, 3], 1e-3), 0.0)
    assert ev.durations_ms.size == 0


def test_events_window_multiple():
    ev = over_threshold_events(CountTrace([0, 9, 9, 0, 9, 0, 9, 9, 9], 0.1e-3), 1.0)
    np.testing.assert_allclose(ev.durations_ms, [0.2, 0.1, 0.3])


count_arrays = hnp.arrays(np.int64, st.integers(2, 200), elements=st.integers(0, 50)).filter(
    lambda a: a.sum() > 0
)


@given(count_arrays, st.floats(-6, 10), st.floats(0, 6))
def test_events_properties(c, db, extra):
    t = CountTrace(c, 1e-3)
    lo = over_threshold_events(t, db)
    hi = over_threshold_events(t, db + extra)
    assert hi.total_ms <= lo.total_ms + 1e-9
    assert lo.total_ms <= t.duration_s * 1e3 + 1e-9
    # runs are maximal and disjoint: each run is bounded by non-exceeding windows
    above = c > lo.threshold_value
    for s, d in zip(lo.starts, np.rint(lo.durations_ms).astype(int)):
        assert above[s:s + d].all()
        assert s == 0 or not above[s - 1]
        assert s + d == c.size or not above[s + d]
    assert int(np.rint(lo.durations_ms).sum()) == int(above.sum())


# --- fit -------------------------------------------------------------------

def test_fit_two_point_trace():
    ch = fit_lognormal(IntensityTrace([0.0, 2 * 234.1], 1.0))
    assert ch.mean_flux == pytest.approx(234.1)
    assert ch.sigma2 == pytest.approx(math.log(2.0))


def test_fit_showcase_channel():
    # affine map of a skewed positive sample onto mean 234.1, std 349.2
    rng = np.random.default_rng(0)
    z = rng.lognormal(0.0, math.sqrt(math.log(5.0)), size=20000)
    x = 234.1 + 349.2 * (z - z.mean()) / z.std()
    assert x.min() > 0
    ch = fit_lognormal(IntensityTrace(x, 1000.0))
    assert ch.mean_flux == pytest.approx(234.1, rel=1e-12)
    assert ch.sigma2 == pytest.approx(math.log(3.2251), abs=1e-4)


def test_fit_recovers_generator():
    ch = LognormalChannel.from_si(50.0, 1.5)
    rng = np.random.default_rng(123)
    fit = fit_lognormal(IntensityTrace(ch.sample(10**6, rng), 1000.0))
    assert fit.mean_flux == pytest.approx(50.0, rel=0.02)
    assert fit.si == pytest.approx(1.5, rel=0.05)


def test_fit_constant_trace():
    with pytest.raises(DegenerateFitError):
        fit_lognormal(CountTrace([4, 4, 4], 1e-3))
