"""Synthetic turbulent-channel traces.

Fading is produced by spectrally shaping white Gaussian noise, then mapping
the Gaussian field through ``exp`` so that every sample is exactly lognormal.
Photon counts are Poisson given the flux, plus an independent Poisson
background.

All randomness comes from ``numpy.random.Generator(PCG64(seed))``; PCG64
streams are identical across platforms, so a seed fixes a trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import SpecError
from .estimators import CountTrace, IntensityTrace
from .stats import si_to_sigma2

__all__ = [
    "FadingSpec",
    "BackgroundSpec",
    "make_rng",
    "gaussian_psd",
    "expected_intensity_bound",
    "corner_frequency",
    "generate_fading",
    "sample_counts",
]

MIN_WINDOWS = 16


def make_rng(seed):
    """The package's random generator: PCG64 seeded with ``seed``."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class FadingSpec:
    """Parameters of a synthetic fading trace.

    ``cutoff_hz`` is the target 95% spectral bound of the generated intensity.
    The Gaussian log-amplitude field has a flat PSD up to a corner frequency,
    then decays as ``f^-decay_exponent`` down to a relative ``noise_floor``;
    the corner is placed so that, after exponentiation, the expected 95%
    bound of the intensity lands on ``cutoff_hz``.
    """

    mean_flux: float
    si: float
    cutoff_hz: float
    window_s: float
    duration_s: float
    seed: int = 0
    decay_exponent: float = 4.0
    noise_floor: float = 1e-6
    match_moments: bool = True

    def __post_init__(self):
        for name in ("mean_flux", "cutoff_hz", "window_s", "duration_s"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise SpecError(f"{name} must be finite and > 0, got {v}")
        if not (math.isfinite(self.si) and self.si >= 0):
            raise SpecError(f"si must be finite and >= 0, got {self.si}")
        if self.n_windows < MIN_WINDOWS:
            raise SpecError(
                f"duration_s / window_s = {self.duration_s / self.window_s:g} < {MIN_WINDOWS}"
            )
        if not self.cutoff_hz < 0.5 / self.window_s:
            raise SpecError(
                f"cutoff_hz = {self.cutoff_hz:g} is not below Nyquist {0.5 / self.window_s:g} Hz"
            )
        if not self.decay_exponent > 1:
            raise SpecError("decay_exponent must be > 1 for a finite-variance field")
        if not 0 <= self.noise_floor < 1:
            raise SpecError("noise_floor must be in [0, 1)")
        if int(self.seed) != self.seed or self.seed < 0:
            raise SpecError(f"seed must be a non-negative integer, got {self.seed}")

    @property
    def n_windows(self):
        return int(round(self.duration_s / self.window_s))

    @property
    def sigma2(self):
        return si_to_sigma2(self.si)


@dataclass(frozen=True)
class BackgroundSpec:
    """Poisson mean of noise counts (dark + background) per counting window."""

    rate_per_window: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.rate_per_window) and self.rate_per_window >= 0):
            raise SpecError(f"background rate must be >= 0, got {self.rate_per_window}")


def gaussian_psd(freqs, corner_hz, decay_exponent=4.0, noise_floor=1e-6):
    """Unnormalized PSD of the log-amplitude field: flat, then power-law roll-off."""
    f = np.abs(np.asarray(freqs, dtype=float))
    shape = np.where(f <= corner_hz, 1.0, (np.maximum(f, corner_hz) / corner_hz) ** -decay_exponent)
    return shape + noise_floor


def _gaussian_correlation(n, dt, corner_hz, decay_exponent, noise_floor):
    freqs = np.fft.rfftfreq(n, d=dt)
    psd = gaussian_psd(freqs, corner_hz, decay_exponent, noise_floor)
    psd[0] = 0.0
    rho = np.fft.irfft(psd, n=n)
    return rho / rho[0]


def expected_intensity_bound(n, dt, sigma2, corner_hz, decay_exponent=4.0, noise_floor=1e-6,
                             fraction=0.95):
    """Expected 95% bound of ``exp(field)`` for a field with the given corner.

    Uses the lognormal covariance identity ``C_I(tau) = exp(sigma2 rho(tau)) - 1``
    on the circular lag grid of an ``n``-sample record, so the result is what
    :func:`scintlink.estimators.power_spectrum` would see on average.  The
    cumulative spectrum is interpolated linearly between frequency bins.
    """
    rho = _gaussian_correlation(n, dt, corner_hz, decay_exponent, noise_floor)
    cov = np.expm1(sigma2 * rho)
    spec = np.fft.rfft(cov).real
    spec[0] = 0.0
    weights = np.full(spec.size, 2.0)
    if n % 2 == 0:
        weights[-1] = 1.0
    cum = np.cumsum(weights * np.clip(spec, 0.0, None))
    freqs = np.fft.rfftfreq(n, d=dt)
    target = fraction * cum[-1]
    i = int(np.searchsorted(cum, target, side="left"))
    if i == 0:
        return float(freqs[0])
    lo, hi = cum[i - 1], cum[i]
    return float(freqs[i - 1] + (target - lo) / (hi - lo) * (freqs[i] - freqs[i - 1]))


def corner_frequency(spec: FadingSpec):
    """Corner of the Gaussian PSD that puts the intensity's 95% bound at ``cutoff_hz``."""
    n, dt = spec.n_windows, spec.window_s
    nyquist = 0.5 / dt
    df = 1.0 / (n * dt)

    def miss(log_corner):
        corner = math.exp(log_corner)
        got = expected_intensity_bound(n, dt, spec.sigma2, corner, spec.decay_exponent,
                                       spec.noise_floor)
        return math.log(got) - math.log(spec.cutoff_hz)

    lo, hi = math.log(max(df, spec.cutoff_hz / 100.0)), math.log(nyquist)
    if miss(lo) > 0 or miss(hi) < 0:
        raise SpecError(
            f"no corner frequency reaches a {spec.cutoff_hz:g} Hz bound for this "
            "record length, window and decay exponent"
        )
    return math.exp(optimize.brentq(miss, lo, hi, xtol=1e-6))


def _gaussian_field(spec: FadingSpec, rng):
    n, dt = spec.n_windows, spec.window_s
    corner = corner_frequency(spec)
    white = rng.standard_normal(n)
    freqs = np.fft.rfftfreq(n, d=dt)
    amp = np.sqrt(gaussian_psd(freqs, corner, spec.decay_exponent, spec.noise_floor))
    amp[0] = 0.0
    field = np.fft.irfft(np.fft.rfft(white) * amp, n=n)
    field -= field.mean()
    return field / field.std()


def _matched_scale(field, si):
    """Log-amplitude scale whose realized ``exp(scale * field)`` has index ``si``."""

    def realized_si(scale):
        x = np.exp(scale * (field - field.max()))
        return x.var() / x.mean() ** 2

    target = math.sqrt(si_to_sigma2(si))
    hi = 2.0 * target
    while realized_si(hi) < si:
        hi *= 2.0
    return optimize.brentq(lambda s: realized_si(s) - si, 0.0, hi, xtol=1e-14, rtol=1e-13)


def generate_fading(spec: FadingSpec) -> IntensityTrace:
    """Latent flux per counting window, lognormal with the spec's mean and SI.

    The Gaussian field is standardized on the realized record.  With
    ``match_moments`` (the default) the log-amplitude scale is then tuned so
    that the realized trace has exactly the requested mean and scintillation
    index; otherwise the nominal ``sigma = sqrt(ln(1 + SI))`` is used and the
    realized moments carry the usual sampling scatter.  A zero scintillation
    index gives a constant trace.
    """
    n = spec.n_windows
    rate = 1.0 / spec.window_s
    if spec.si == 0:
        return IntensityTrace(np.full(n, float(spec.mean_flux)), rate)
    rng = make_rng(spec.seed)
    field = _gaussian_field(spec, rng)
    if spec.match_moments:
        x = np.exp(_matched_scale(field, spec.si) * (field - field.max()))
        flux = spec.mean_flux * x / x.mean()
    else:
        sigma2 = spec.sigma2
        flux = np.exp(math.log(spec.mean_flux) - 0.5 * sigma2 + math.sqrt(sigma2) * field)
    return IntensityTrace(flux, rate)


def sample_counts(flux, background: BackgroundSpec = BackgroundSpec(), seed=0,
                  window_s=None) -> CountTrace:
    """Photon counts: Poisson(flux + background) independently in each window.

    ``flux`` is an :class:`IntensityTrace`, or a plain array of mean signal
    photons per window together with ``window_s`` (this also admits an
    all-zero, background-only flux).
    """
    if isinstance(flux, IntensityTrace):
        q, window_s = flux.samples, flux.period_s
    else:
        q = np.asarray(flux, dtype=float)
        if window_s is None:
            raise SpecError("window_s is required when flux is a plain array")
        if q.ndim != 1 or np.any(~np.isfinite(q)) or np.any(q < 0):
            raise SpecError("flux must be a 1-D array of finite non-negative values")
    rng = make_rng(seed)
    return CountTrace(rng.poisson(q + background.rate_per_window), window_s)
