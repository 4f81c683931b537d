"""Empirical statistics of count and intensity traces.

Covers the per-trace moments (mean, std, scintillation index), histogram
similarity, the mean-normalized DFT power spectrum with its exact Parseval
split of the scintillation index, and over-threshold event durations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Union

import numpy as np
from scipy import stats

from .errors import BinningError, DegenerateFitError, DomainError, ZeroMeanError
from .stats import LognormalChannel, lognormal_cdf, mandel_pmf

__all__ = [
    "CountTrace",
    "IntensityTrace",
    "TraceStats",
    "Histogram",
    "SpectrumSummary",
    "EventDurations",
    "empirical_stats",
    "count_histogram",
    "intensity_histogram",
    "similarity",
    "mandel_histogram",
    "lognormal_histogram",
    "poisson_histogram",
    "power_spectrum",
    "bound_from_cumulative",
    "over_threshold_events",
    "fit_lognormal",
]

INTEGER_BIN_LIMIT = 4096


def _frozen(values, dtype):
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CountTrace:
    """Photon counts per counting window of ``window_s`` seconds."""

    counts: np.ndarray
    window_s: float

    def __post_init__(self):
        raw = np.asarray(self.counts)
        if raw.ndim != 1 or raw.size < 2:
            raise DomainError("a count trace needs at least 2 windows")
        if np.issubdtype(raw.dtype, np.floating):
            if not np.all(np.isfinite(raw)) or np.any(raw != np.round(raw)):
                raise DomainError("counts must be integers")
        if np.any(raw < 0):
            raise DomainError("counts must be non-negative")
        if not (math.isfinite(self.window_s) and self.window_s > 0):
            raise DomainError(f"window_s must be > 0, got {self.window_s}")
        object.__setattr__(self, "counts", _frozen(raw, np.int64))

    @property
    def values(self):
        return self.counts

    @property
    def period_s(self):
        return self.window_s

    @property
    def duration_s(self):
        return self.counts.size * self.window_s


@dataclass(frozen=True, eq=False)
class IntensityTrace:
    """Analog intensity samples taken at ``sample_rate_hz``."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != 1 or arr.size < 2:
            raise DomainError("an intensity trace needs at least 2 samples")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise DomainError("intensity samples must be finite and non-negative")
        if not np.any(arr > 0):
            raise ZeroMeanError("intensity trace is all zeros")
        if not (math.isfinite(self.sample_rate_hz) and self.sample_rate_hz > 0):
            raise DomainError(f"sample_rate_hz must be > 0, got {self.sample_rate_hz}")
        object.__setattr__(self, "samples", _frozen(arr, float))

    @property
    def values(self):
        return self.samples

    @property
    def period_s(self):
        return 1.0 / self.sample_rate_hz

    @property
    def duration_s(self):
        return self.samples.size / self.sample_rate_hz


Trace = Union[CountTrace, IntensityTrace]


class TraceStats(NamedTuple):
    mean: float
    std: float
    si: float


def empirical_stats(trace: Trace) -> TraceStats:
    """Mean, population standard deviation and scintillation index std²/mean²."""
    x = np.asarray(trace.values, dtype=float)
    mean = float(x.mean())
    if mean == 0:
        raise ZeroMeanError("scintillation index undefined for a zero-mean trace")
    var = float(np.mean((x - mean) ** 2))
    return TraceStats(mean, math.sqrt(var), var / mean**2)


@dataclass(frozen=True, eq=False)
class Histogram:
    """Occurrences ``weights[i]`` in bins ``[edges[i], edges[i+1])``."""

    edges: np.ndarray
    weights: np.ndarray

    @property
    def centers(self):
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def _count_edges(counts):
    top = int(counts.max())
    if top <= INTEGER_BIN_LIMIT:
        return np.arange(top + 2) - 0.5
    # Freedman-Diaconis width, rounded to a whole number of counts
    q75, q25 = np.percentile(counts, [75, 25])
    width = 2.0 * (q75 - q25) / counts.size ** (1.0 / 3.0)
    width = max(1, int(round(width)))
    nbins = top // width + 1
    return np.arange(nbins + 1) * width - 0.5


def count_histogram(counts, edges=None) -> Histogram:
    """Histogram of integer counts.

    Bins are one count wide (centred on the integers) while the largest count
    is at most 4096; beyond that, Freedman-Diaconis widths rounded to integers.
    """
    counts = np.asarray(getattr(counts, "counts", counts))
    if edges is None:
        edges = _count_edges(counts)
    edges = np.asarray(edges, dtype=float)
    weights, _ = np.histogram(counts, bins=edges)
    return Histogram(edges, weights.astype(float))


def intensity_histogram(samples, edges=None) -> Histogram:
    """Histogram of real-valued samples; Freedman-Diaconis bins by default."""
    samples = np.asarray(getattr(samples, "samples", samples), dtype=float)
    if edges is None:
        edges = np.histogram_bin_edges(samples, bins="fd")
    edges = np.asarray(edges, dtype=float)
    weights, _ = np.histogram(samples, bins=edges)
    return Histogram(edges, weights.astype(float))


def similarity(p, q) -> float:
    """Bhattacharyya-type overlap ``(sum sqrt(p_i q_i))^2 / (sum p * sum q)``.

    ``p`` and ``q`` are occurrence arrays on the same bins, or :class:`Histogram`
    objects whose edges must match.  The result is 1 exactly when the
    normalized histograms coincide and 0 for disjoint supports.
    """
    if isinstance(p, Histogram) and isinstance(q, Histogram):
        if p.edges.shape != q.edges.shape or not np.allclose(p.edges, q.edges, rtol=0, atol=1e-9):
            raise BinningError("histograms have different bin edges")
    p = np.asarray(getattr(p, "weights", p), dtype=float)
    q = np.asarray(getattr(q, "weights", q), dtype=float)
    if p.shape != q.shape:
        raise BinningError(f"histograms have {p.size} and {q.size} bins")
    if np.any(p < 0) or np.any(q < 0):
        raise DomainError("histogram weights must be non-negative")
    sp, sq = p.sum(), q.sum()
    if not (sp > 0 and sq > 0):
        raise DomainError("both histograms need positive total mass")
    overlap = np.sum(np.sqrt(p * q))
    return float(min(1.0, overlap * overlap / (sp * sq)))


def mandel_histogram(channel: LognormalChannel, edges, total=1.0) -> Histogram:
    """Expected occurrences of the Mandel law in the given count bins."""
    edges = np.asarray(edges, dtype=float)
    pmf = mandel_pmf(channel)
    return Histogram(edges, total * pmf.bin_mass(edges))


def lognormal_histogram(channel: LognormalChannel, edges, total=1.0) -> Histogram:
    """Expected occurrences of the lognormal flux law in the given bins."""
    edges = np.asarray(edges, dtype=float)
    if channel.is_degenerate:
        mass = np.diff((edges > channel.mean_flux).astype(float))
    else:
        mass = np.diff(lognormal_cdf(channel, edges))
    return Histogram(edges, total * mass)


def poisson_histogram(mean, edges, total=1.0) -> Histogram:
    """Expected occurrences of a Poisson law in the given count bins."""
    edges = np.asarray(edges, dtype=float)
    # integers n in [lo, hi) are those with n <= ceil(hi) - 1
    cdf = stats.poisson.cdf(np.ceil(edges) - 1, mean)
    return Histogram(edges, total * np.diff(cdf))


@dataclass(frozen=True, eq=False)
class SpectrumSummary:
    """One-sided power spectrum of the mean-normalized trace.

    ``power[n] = |I~_n|^2`` with ``I~_n = sum_k I'_k exp(-2 pi i n k / N)`` and
    ``I' = I / <I>``.  ``cumulative`` excludes the zero frequency and is scaled so
    that its last value is the scintillation index.  ``display_power`` is filled
    only when a display window was requested and never enters ``spectral_si``.
    """

    freqs_hz: np.ndarray
    power: np.ndarray
    cumulative: np.ndarray
    spectral_si: float
    bound95_hz: float
    n_samples: int
    display_power: Optional[np.ndarray] = field(default=None)


def _one_sided_weights(n_samples, n_freqs):
    # each bin stands for itself and its mirror, except DC and (even N) Nyquist
    w = np.full(n_freqs, 2.0)
    w[0] = 0.0
    if n_samples % 2 == 0:
        w[-1] = 1.0
    return w


def bound_from_cumulative(freqs_hz, cumulative, fraction=0.95):
    """Lowest frequency at which ``cumulative`` reaches ``fraction`` of its total.

    Returns 0 when the total is zero (a steady trace has no scintillation).
    """
    cumulative = np.asarray(cumulative, dtype=float)
    total = cumulative[-1]
    if total <= 0:
        return 0.0
    idx = int(np.searchsorted(cumulative, fraction * total, side="left"))
    return float(freqs_hz[min(idx, len(freqs_hz) - 1)])


def power_spectrum(trace: Trace, display_window=None) -> SpectrumSummary:
    """Normalized power spectrum and the spectral scintillation index.

    The plain (unwindowed, undetrended) DFT is used so that the cumulative
    power over non-zero frequencies equals the time-domain scintillation
    index (Parseval).  Pass ``display_window="hann"`` to also get a
    Hann-tapered spectrum for plotting.
    """
    x = np.asarray(trace.values, dtype=float)
    n = x.size
    if n < 4:
        raise DomainError("power spectrum needs at least 4 samples")
    mean = x.mean()
    if mean == 0:
        raise ZeroMeanError("cannot normalize a zero-mean trace")
    norm = x / mean
    # DFT of I' - 1 equals that of I' at every non-zero frequency, with far
    # less cancellation error; the DC term is N exactly after normalization
    spec = np.fft.rfft(norm - norm.mean())
    power = spec.real**2 + spec.imag**2
    power[0] = float(norm.sum()) ** 2
    freqs = np.fft.rfftfreq(n, d=trace.period_s)
    weights = _one_sided_weights(n, freqs.size)
    cumulative = np.cumsum(weights * power) / float(n) ** 2
    spectral_si = float(cumulative[-1])
    bound = bound_from_cumulative(freqs, cumulative)

    display = None
    if display_window is not None:
        if display_window != "hann":
            raise DomainError(f"unknown display window {display_window!r}")
        taper = np.hanning(n)
        tapered = np.fft.rfft((norm - norm.mean()) * taper)
        display = (tapered.real**2 + tapered.imag**2) / np.mean(taper**2)

    return SpectrumSummary(freqs, power, cumulative, spectral_si, bound, n, display)


@dataclass(frozen=True, eq=False)
class EventDurations:
    """Durations (ms) of maximal runs of windows strictly above a threshold."""

    threshold_db: float
    threshold_value: float
    durations_ms: np.ndarray
    starts: np.ndarray

    @property
    def total_ms(self):
        return float(self.durations_ms.sum())


def _runs_above(mask):
    padded = np.concatenate([[False], mask, [False]]).astype(np.int8)
    d = np.diff(padded)
    starts = np.nonzero(d == 1)[0]
    stops = np.nonzero(d == -1)[0]
    return starts, stops - starts


def over_threshold_events(trace: Trace, threshold_db) -> EventDurations:
    """Runs of consecutive windows whose value exceeds ``mean * 10^(dB/10)``.

    The comparison is strict, so a constant trace has no events at 0 dB.
    """
    x = np.asarray(trace.values, dtype=float)
    mean = x.mean()
    if not mean > 0:
        raise ZeroMeanError("over-threshold events need a positive trace mean")
    level = mean * 10.0 ** (threshold_db / 10.0)
    starts, lengths = _runs_above(x > level)
    durations = lengths * (trace.period_s * 1e3)
    return EventDurations(float(threshold_db), float(level), durations, starts)


def fit_lognormal(trace: Trace) -> LognormalChannel:
    """Method-of-moments lognormal channel: raw mean and ``ln(1 + SI)``."""
    mean, std, si = empirical_stats(trace)
    if mean <= 0:
        raise ZeroMeanError("cannot fit a non-positive mean")
    if si == 0:
        raise DegenerateFitError("trace has zero variance; the channel is not fading")
    return LognormalChannel.from_si(mean, si)
