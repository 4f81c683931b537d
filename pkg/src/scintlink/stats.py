"""Closed-form channel statistics.

The received flux ``q`` (mean detected photons per counting window) is
lognormal with mean ``<q>`` and log-variance ``sigma2 = ln(1 + SI)``.  The
photon count in a window is Poisson given ``q``; averaging over ``q`` gives
the Mandel (Poisson-lognormal) counting distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special, stats

from .errors import DegenerateChannelError, DomainError, TruncationError

__all__ = [
    "LognormalChannel",
    "MandelPmf",
    "si_to_sigma2",
    "sigma2_to_si",
    "lognormal_pdf",
    "lognormal_cdf",
    "mandel_pmf",
    "mandel_truncation",
    "poisson_pmf",
    "snr_db",
    "fidelity_from_snr",
]

MANDEL_TAIL = 1e-6

# half-width, in log-integrand units, of the quadrature window around each peak
_LOG_WINDOW = 50.0
_GL_NODES = 128
_CHUNK = 1 << 15
_MAX_N = 1 << 26


def si_to_sigma2(si):
    """Log-variance of the lognormal law with scintillation index ``si``."""
    si = np.asarray(si, dtype=float)
    if np.any(si < 0) or np.any(np.isnan(si)):
        raise DomainError(f"scintillation index must be >= 0, got {si}")
    out = np.log1p(si)
    return float(out) if out.ndim == 0 else out


def sigma2_to_si(sigma2):
    """Scintillation index of the lognormal law with log-variance ``sigma2``."""
    sigma2 = np.asarray(sigma2, dtype=float)
    if np.any(sigma2 < 0) or np.any(np.isnan(sigma2)):
        raise DomainError(f"log-variance must be >= 0, got {sigma2}")
    out = np.expm1(sigma2)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LognormalChannel:
    """Lognormal fading channel.

    Parameters
    ----------
    mean_flux : float
        Expected detected photons per counting window, ``<q>``.
    sigma2 : float
        Variance of ``ln q``.  Zero means a steady (non-fading) channel.
    """

    mean_flux: float
    sigma2: float

    def __post_init__(self):
        if not (math.isfinite(self.mean_flux) and self.mean_flux > 0):
            raise DomainError(f"mean_flux must be finite and > 0, got {self.mean_flux}")
        if not (math.isfinite(self.sigma2) and self.sigma2 >= 0):
            raise DomainError(f"sigma2 must be finite and >= 0, got {self.sigma2}")

    @classmethod
    def from_si(cls, mean_flux, si):
        return cls(float(mean_flux), si_to_sigma2(float(si)))

    @property
    def si(self):
        return sigma2_to_si(self.sigma2)

    @property
    def sigma(self):
        return math.sqrt(self.sigma2)

    @property
    def log_mean(self):
        """Mean of ``ln q``; the ``-sigma2/2`` shift keeps ``<q>`` the true mean."""
        return math.log(self.mean_flux) - 0.5 * self.sigma2

    @property
    def median(self):
        return math.exp(self.log_mean)

    @property
    def is_degenerate(self):
        return self.sigma2 == 0.0

    def sample(self, size, rng):
        """Draw ``size`` flux values using the numpy Generator ``rng``."""
        if self.is_degenerate:
            return np.full(size, self.mean_flux)
        return np.exp(self.log_mean + self.sigma * rng.standard_normal(size))


def _require_fading(channel):
    if channel.is_degenerate:
        raise DegenerateChannelError(
            "sigma2 = 0 makes the lognormal a point mass at mean_flux; "
            "use the constant-channel (Poisson) path"
        )


def lognormal_pdf(channel: LognormalChannel, q):
    """Density of the received flux at ``q`` (scalar or array, all > 0)."""
    _require_fading(channel)
    q = np.asarray(q, dtype=float)
    if np.any(~(q > 0)):
        raise DomainError("lognormal density is defined for q > 0 only")
    z = (np.log(q) - channel.log_mean) / channel.sigma
    out = np.exp(-0.5 * z * z) / (q * math.sqrt(2 * math.pi * channel.sigma2))
    return float(out) if out.ndim == 0 else out


def lognormal_cdf(channel: LognormalChannel, q):
    """``P(flux <= q)``; zero for ``q <= 0``."""
    _require_fading(channel)
    q = np.asarray(q, dtype=float)
    with np.errstate(divide="ignore"):
        z = (np.log(np.where(q > 0, q, 0.0)) - channel.log_mean) / channel.sigma
    out = special.ndtr(z)
    return float(out) if out.ndim == 0 else out


def poisson_pmf(mean, n_max):
    """Poisson probabilities for ``n = 0..n_max``."""
    return stats.poisson.pmf(np.arange(n_max + 1), mean)


@lru_cache(maxsize=None)
def _gauss_legendre(k):
    x, w = np.polynomial.legendre.leggauss(k)
    return x, w


def _mandel_block(channel, n):
    """Mandel probabilities for the photon numbers in the integer array ``n``.

    Works in ``u = ln q``.  For each ``n`` the log-integrand
    ``f(u) = -(u - mu)^2 / (2 sigma^2) + n u - e^u`` is concave; its peak is found
    by safeguarded Newton, the window where ``f >= f_max - 50`` by bisection,
    and the window is integrated with Gauss-Legendre.
    """
    mu = channel.log_mean
    s2 = channel.sigma2
    sd = channel.sigma
    nf = n.astype(float)
    ln_n = np.log(nf + 0.5)

    def grad(u):
        return -(u - mu) / s2 + nf - np.exp(u)

    def logf(u):
        return -0.5 * (u - mu) ** 2 / s2 + nf * u - np.exp(u)

    lo = np.minimum(mu, ln_n) - 2.0 - 10.0 * sd
    hi = np.maximum(mu, ln_n) + 2.0
    u = (mu / s2 + (nf + 0.5) * ln_n) / (1.0 / s2 + nf + 0.5)
    for _ in range(100):
        g = grad(u)
        lo = np.where(g > 0, u, lo)
        hi = np.where(g <= 0, u, hi)
        step = g / (1.0 / s2 + np.exp(u))
        nxt = u + step
        bad = (nxt <= lo) | (nxt >= hi)
        nxt = np.where(bad, 0.5 * (lo + hi), nxt)
        if np.all(np.abs(nxt - u) <= 1e-13 * (1.0 + np.abs(u))):
            u = nxt
            break
        u = nxt
    peak = u
    fpeak = logf(peak)

    # curvature >= 1/sigma^2 everywhere, so the drop of _LOG_WINDOW happens
    # within sigma * sqrt(2 * _LOG_WINDOW) of the peak on either side
    reach = sd * math.sqrt(2.0 * _LOG_WINDOW)
    target = fpeak - _LOG_WINDOW

    def edge(direction):
        near = peak.copy()
        far = peak + direction * reach
        for _ in range(64):
            mid = 0.5 * (near + far)
            inside = logf(mid) >= target
            near = np.where(inside, mid, near)
            far = np.where(inside, far, mid)
        return far

    a = edge(-1.0)
    b = edge(+1.0)
    x, w = _gauss_legendre(_GL_NODES)
    half = 0.5 * (b - a)
    nodes = 0.5 * (b + a)[:, None] + half[:, None] * x[None, :]
    vals = np.exp(_logf_nodes(nodes, mu, s2, nf) - fpeak[:, None])
    integral = half * (vals @ w)
    logp = fpeak - special.gammaln(nf + 1.0) - 0.5 * math.log(2 * math.pi * s2)
    return np.exp(logp) * integral


def _logf_nodes(u, mu, s2, nf):
    return -0.5 * (u - mu) ** 2 / s2 + nf[:, None] * u - np.exp(u)


def _mandel_range(channel, start, stop):
    out = np.empty(stop - start)
    for lo in range(start, stop, _CHUNK):
        hi = min(stop, lo + _CHUNK)
        out[lo - start:hi - start] = _mandel_block(channel, np.arange(lo, hi))
    return out


def _pmf_range(channel, start, stop):
    if channel.is_degenerate:
        return stats.poisson.pmf(np.arange(start, stop), channel.mean_flux)
    return _mandel_range(channel, start, stop)


@dataclass(frozen=True, eq=False)
class MandelPmf:
    """Photon-number probabilities ``p_n`` for ``n = 0..n_max``."""

    channel: LognormalChannel
    probabilities: np.ndarray

    @property
    def n_max(self):
        return len(self.probabilities) - 1

    @property
    def mass(self):
        return float(self.probabilities.sum())

    def mean(self):
        return float(np.arange(len(self.probabilities)) @ self.probabilities)

    def bin_mass(self, edges):
        """Probability falling in each half-open bin ``[edges[i], edges[i+1])``.

        Only integers ``n <= n_max`` contribute; missing tail mass is not
        redistributed.
        """
        edges = np.asarray(edges, dtype=float)
        csum = np.concatenate([[0.0], np.cumsum(self.probabilities)])
        # integers n with edge_lo <= n < edge_hi
        idx = np.clip(np.ceil(edges).astype(np.int64), 0, len(self.probabilities))
        return csum[idx[1:]] - csum[idx[:-1]]


def mandel_truncation(channel: LognormalChannel, tail=MANDEL_TAIL):
    """Smallest ``n_max`` whose cumulative Mandel mass reaches ``1 - tail``.

    The cutoff is bracketed by doubling and then located exactly.  Returns the
    pair ``(n_max, probabilities[0..n_max])``.
    """
    guess = channel.mean_flux * (1.0 + channel.si) + 10.0 * math.sqrt(channel.mean_flux) + 16
    stop = 1 << max(6, math.ceil(math.log2(guess)))
    probs = _pmf_range(channel, 0, stop)
    while True:
        csum = np.cumsum(probs)
        hit = np.nonzero(csum >= 1.0 - tail)[0]
        if hit.size:
            n_max = int(hit[0])
            return n_max, probs[: n_max + 1]
        if stop >= _MAX_N:
            raise TruncationError(
                f"Mandel mass {csum[-1]:.9f} below 1 - {tail:g} at n_max = {stop - 1}",
                mass=float(csum[-1]),
                n_max=stop - 1,
            )
        probs = np.concatenate([probs, _pmf_range(channel, stop, 2 * stop)])
        stop *= 2


def mandel_pmf(channel: LognormalChannel, n_max=None, tail=MANDEL_TAIL):
    """Mandel counting distribution of a lognormal channel.

    Parameters
    ----------
    channel : LognormalChannel
        A steady channel (``sigma2 == 0``) yields the Poisson law.
    n_max : int, optional
        Highest photon number to tabulate.  By default the smallest cutoff that
        captures ``1 - tail`` of the mass.
    tail : float
        Largest uncovered probability mass tolerated.

    Raises
    ------
    TruncationError
        An explicit ``n_max`` captures less than ``1 - tail``.
    """
    if n_max is None:
        _, probs = mandel_truncation(channel, tail)
        return MandelPmf(channel, probs)
    n_max = int(n_max)
    if n_max < 1:
        raise DomainError(f"n_max must be >= 1, got {n_max}")
    probs = _pmf_range(channel, 0, n_max + 1)
    mass = float(probs.sum())
    if mass < 1.0 - tail:
        raise TruncationError(
            f"n_max = {n_max} captures only {mass:.9f} of the Mandel mass", mass=mass, n_max=n_max
        )
    return MandelPmf(channel, probs)


def snr_db(signal_counts, noise_counts):
    """Signal-to-noise ratio ``10 log10(N_s / N_n)`` in dB.

    Zero signal returns ``-inf``.
    """
    if not noise_counts > 0:
        raise DomainError(f"noise counts must be > 0, got {noise_counts}")
    if signal_counts < 0:
        raise DomainError(f"signal counts must be >= 0, got {signal_counts}")
    if signal_counts == 0:
        return -math.inf
    return 10.0 * math.log10(signal_counts / noise_counts)


def fidelity_from_snr(snr):
    """Polarization fidelity under white noise, ``1 - 1/(1 + 10^(SNR/10))``.

    Accepts scalars or arrays in dB; the limits at +/-inf are 1 and 0.
    """
    x = np.asarray(snr, dtype=float) * (math.log(10.0) / 10.0)
    out = special.expit(x)
    return float(out) if out.ndim == 0 else out
