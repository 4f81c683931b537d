import math

import numpy as np
import pytest
from scipy import stats

from scintlink.channel import (
    BackgroundSpec,
    FadingSpec,
    corner_frequency,
    expected_intensity_bound,
    generate_fading,
    make_rng,
    sample_counts,
)
from scintlink.errors import SpecError
from scintlink.estimators import (
    IntensityTrace,
    count_histogram,
    empirical_stats,
    mandel_histogram,
    poisson_histogram,
    power_spectrum,
    similarity,
)
from scintlink.stats import LognormalChannel, lognormal_cdf

SHOWCASE = dict(mean_flux=234.1, si=2.2251, cutoff_hz=50.0, window_s=1e-3, duration_s=65.0)


@pytest.fixture(scope="module")
def showcase_flux():
    return generate_fading(FadingSpec(**SHOWCASE, seed=42))


@pytest.mark.parametrize(
    "kw",
    [
        dict(duration_s=0.015),  # 15 windows
        dict(cutoff_hz=500.0),  # at Nyquist
        dict(cutoff_hz=700.0),
        dict(mean_flux=0.0),
        dict(si=-0.1),
        dict(window_s=0.0),
        dict(seed=-1),
        dict(decay_exponent=1.0),
    ],
)
def test_spec_validation(kw):
    with pytest.raises(SpecError):
        FadingSpec(**{**SHOWCASE, **kw})


def test_background_validation():
    with pytest.raises(SpecError):
        BackgroundSpec(-0.1)


def test_zero_si_is_constant():
    f = generate_fading(FadingSpec(**{**SHOWCASE, "si": 0.0}))
    assert np.all(f.samples == 234.1)
    assert f.samples.size == 65000


def test_showcase_moments(showcase_flux):
    st = empirical_stats(showcase_flux)
    assert st.mean == pytest.approx(234.1, rel=0.02)
    assert st.si == pytest.approx(2.2251, rel=0.10)
    assert showcase_flux.sample_rate_hz == pytest.approx(1000.0)


def test_raw_moments_scatter_around_target():
    si, mean = [], []
    for seed in range(20):
        f = generate_fading(FadingSpec(**SHOWCASE, seed=seed, match_moments=False))
        st = empirical_stats(f)
        si.append(st.si)
        mean.append(st.mean)
    assert np.mean(mean) == pytest.approx(234.1, rel=0.01)
    assert np.mean(si) == pytest.approx(2.2251, rel=0.10)


def test_determinism():
    a = generate_fading(FadingSpec(**SHOWCASE, seed=7))
    b = generate_fading(FadingSpec(**SHOWCASE, seed=7))
    c = generate_fading(FadingSpec(**SHOWCASE, seed=8))
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)
    ca = sample_counts(a, BackgroundSpec(0.5), seed=3)
    cb = sample_counts(b, BackgroundSpec(0.5), seed=3)
    assert np.array_equal(ca.counts, cb.counts)


def test_rng_is_pcg64():
    assert isinstance(make_rng(1).bit_generator, np.random.PCG64)
    # first draw of PCG64(0) is a fixed, documented stream
    expected = np.random.Generator(np.random.PCG64(0)).standard_normal(3)
    assert np.array_equal(make_rng(0).standard_normal(3), expected)


def test_marginal_is_lognormal(showcase_flux):
    ch = LognormalChannel.from_si(234.1, 2.2251)
    ks = stats.kstest(showcase_flux.samples, lambda x: lognormal_cdf(ch, x)).statistic
    assert ks < 0.05


def test_log_flux_is_gaussian(showcase_flux):
    z = np.log(showcase_flux.samples)
    z = (z - z.mean()) / z.std()
    assert stats.kstest(z, "norm").statistic < 0.05


def test_corner_hits_expected_bound():
    spec = FadingSpec(**SHOWCASE)
    corner = corner_frequency(spec)
    got = expected_intensity_bound(spec.n_windows, spec.window_s, spec.sigma2, corner)
    assert got == pytest.approx(50.0, rel=1e-4)
    assert corner < 50.0


def test_expected_bound_weak_fading_limit():
    # as sigma2 -> 0 the intensity spectrum is the Gaussian one; the flat + f^-4
    # shape reaches 95% at corner * 5^(1/3) in the continuum
    b = expected_intensity_bound(200000, 1e-4, 1e-8, 20.0, noise_floor=0.0)
    assert b == pytest.approx(20.0 * 5 ** (1 / 3), rel=0.01)


@pytest.mark.parametrize("cutoff", [20.0, 50.0, 100.0])
def test_spectral_bound_tracks_cutoff(cutoff):
    for seed in range(3):
        f = generate_fading(FadingSpec(**{**SHOWCASE, "cutoff_hz": cutoff}, seed=seed))
        assert 0.7 * cutoff <= power_spectrum(f).bound95_hz <= 1.4 * cutoff


def test_mean_bound_matches_calibration():
    bounds = [
        power_spectrum(generate_fading(FadingSpec(**SHOWCASE, seed=s, match_moments=False))).bound95_hz
        for s in range(20)
    ]
    assert np.mean(bounds) == pytest.approx(50.0, rel=0.05)


def test_unreachable_cutoff():
    # steep roll-off cannot spread 95% of the power out to just below Nyquist
    with pytest.raises(SpecError):
        generate_fading(FadingSpec(**{**SHOWCASE, "cutoff_hz": 499.0}, decay_exponent=8.0))


# --- counting ----------------------------------------------------------------

def test_background_only_counts():
    n = 10**6
    c = sample_counts(np.zeros(n), BackgroundSpec(0.4732), seed=1, window_s=1e-3)
    se = math.sqrt(0.4732 / n)
    assert abs(c.counts.mean() - 0.4732) < 3 * se


def test_array_flux_needs_window():
    with pytest.raises(SpecError):
        sample_counts(np.ones(10), BackgroundSpec(0.0))


@pytest.mark.parametrize("mu", [5.0, 40.0])
def test_constant_flux_is_poisson(mu):
    n = 200000
    flux = IntensityTrace(np.full(n, mu), 1000.0)
    c = sample_counts(flux, BackgroundSpec(0.0), seed=int(mu))
    st = empirical_stats(c)
    se = math.sqrt((1 / mu + 2) / n)
    assert abs(st.std**2 / st.mean - 1.0) < 3 * se
    assert st.si == pytest.approx(1 / mu, rel=0.05)


def test_fading_counts_follow_mandel_not_poisson(showcase_flux):
    c = sample_counts(showcase_flux, BackgroundSpec(0.0), seed=42)
    h = count_histogram(c)
    ch = LognormalChannel.from_si(234.1, 2.2251)
    assert similarity(h, mandel_histogram(ch, h.edges)) >= 0.99
    assert similarity(h, poisson_histogram(c.counts.mean(), h.edges)) < 0.5
