"""Probe-and-threshold gating of a fading channel.

A classical probe samples the channel transmission every ``1/probe_hz``
seconds; the single-photon receiver only keeps the windows governed by a
probe that read more than ``threshold_ratio`` times the mean transmission.
Gating trades throughput for a higher mean count per kept window, hence a
higher SNR against threshold-independent noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import special

from .channel import BackgroundSpec, make_rng
from .errors import DegenerateFitError, DomainError, ProtocolError, SpecError
from .estimators import IntensityTrace, fit_lognormal
from .stats import LognormalChannel

__all__ = [
    "ProbeConfig",
    "ThresholdReport",
    "accept_probability",
    "conditional_gain",
    "retained_fraction",
    "run_protocol",
    "replay_protocol",
    "tradeoff_curve",
    "CSV_COLUMNS",
    "report_rows",
]


def _erfc_arg(t0_ratio, sigma2, sign):
    # argument of the error functions: (ln r +/- sigma2/2) / sqrt(2 sigma2)
    with np.errstate(divide="ignore"):
        return (np.log(t0_ratio) + sign * 0.5 * sigma2) / math.sqrt(2.0 * sigma2)


def _ratio_array(x, name):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError(f"{name} must be >= 0")
    return arr


def _scalar(out):
    return float(out) if np.ndim(out) == 0 else out


def accept_probability(channel: LognormalChannel, q0):
    """Probability that the flux exceeds ``q0``.

    ``1/2 - 1/2 erf[(ln(q0/<q>) + sigma2/2) / sqrt(2 sigma2)]``, evaluated as a
    complementary error function.  A steady channel gives a step: 1 below
    ``<q>``, 0 at and above it.
    """
    q0 = _ratio_array(q0, "q0")
    r = q0 / channel.mean_flux
    if channel.is_degenerate:
        return _scalar(np.where(r < 1.0, 1.0, 0.0))
    return _scalar(0.5 * special.erfc(_erfc_arg(r, channel.sigma2, +1.0)))


def retained_fraction(channel: LognormalChannel, t0_ratio):
    """Share of the mean flux carried by windows above ``t0_ratio * <q>``.

    This is the partial expectation ``E[q; q > q0] / <q>``, i.e. the fraction of
    signal photons that survive gating.
    """
    r = _ratio_array(t0_ratio, "t0_ratio")
    if channel.is_degenerate:
        return _scalar(np.where(r < 1.0, 1.0, 0.0))
    return _scalar(0.5 * special.erfc(_erfc_arg(r, channel.sigma2, -1.0)))


def conditional_gain(channel: LognormalChannel, t0_ratio):
    """Mean-count gain ``<n>_thres / <n>`` from keeping only ``T > t0_ratio <T>``.

    Ratio of the complementary error functions with the ``-sigma2/2`` and
    ``+sigma2/2`` offsets.  Computed in log space (``log_ndtr``) so the ratio
    stays finite deep in the tail.  Equals 1 at ``t0_ratio = 0`` and for a steady
    channel.
    """
    r = _ratio_array(t0_ratio, "t0_ratio")
    if channel.is_degenerate:
        return _scalar(np.ones_like(r))
    root2 = math.sqrt(2.0)
    num = special.log_ndtr(-root2 * _erfc_arg(r, channel.sigma2, -1.0))
    den = special.log_ndtr(-root2 * _erfc_arg(r, channel.sigma2, +1.0))
    gain = np.where(r == 0, 1.0, np.exp(num - den))
    return _scalar(np.maximum(gain, 1.0))


@dataclass(frozen=True)
class ProbeConfig:
    """How the channel is probed and gated.

    Parameters
    ----------
    probe_hz : float
        Probing rate.  Must not exceed the window rate of the gated trace.
    threshold_ratio : float
        Threshold on the probed transmission relative to its mean, ``T0/<T>``.
    hold_windows : int, optional
        Windows governed by each probe; default ``round(1/(probe_hz * window_s))``.
    probe_noise : float
        Relative Gaussian error of each probe reading (0 = ideal probe).
    latency_windows : int
        Delay, in windows, between a probe and the start of the block it gates.
    probe_mode : {"flux", "counts"}
        ``"flux"`` compares the transmission itself; ``"counts"`` compares the
        photon count of the probed window with ``threshold_ratio * <n>``.
    """

    probe_hz: float
    threshold_ratio: float
    hold_windows: Optional[int] = None
    probe_noise: float = 0.0
    latency_windows: int = 0
    probe_mode: str = "flux"

    def __post_init__(self):
        if not (math.isfinite(self.probe_hz) and self.probe_hz > 0):
            raise SpecError(f"probe_hz must be > 0, got {self.probe_hz}")
        if not (math.isfinite(self.threshold_ratio) and self.threshold_ratio >= 0):
            raise SpecError(f"threshold_ratio must be >= 0, got {self.threshold_ratio}")
        if self.hold_windows is not None and self.hold_windows < 1:
            raise SpecError("hold_windows must be >= 1")
        if self.probe_noise < 0:
            raise SpecError("probe_noise must be >= 0")
        if self.latency_windows < 0:
            raise SpecError("latency_windows must be >= 0")
        if self.probe_mode not in ("flux", "counts"):
            raise SpecError(f"unknown probe_mode {self.probe_mode!r}")

    def hold_for(self, window_s):
        if self.probe_hz > 1.0 / window_s * (1 + 1e-9):
            raise SpecError(
                f"probe rate {self.probe_hz:g} Hz exceeds the window rate {1 / window_s:g} Hz"
            )
        if self.hold_windows is not None:
            return int(self.hold_windows)
        return max(1, int(round(1.0 / (self.probe_hz * window_s))))


@dataclass(frozen=True)
class ThresholdReport:
    """Outcome of gating at one threshold.

    Analytic fields come from the lognormal channel; simulated fields are None
    for purely analytic curves.  ``retained_time_fraction`` is the share of
    windows kept (the acceptance probability); ``retained_counts_fraction`` the
    share of signal photons kept.
    """

    threshold_ratio: float
    analytic_accept_prob: float
    analytic_gain: float
    retained_counts_fraction: float
    retained_time_fraction: float
    snr_gain_db: float
    simulated_accept_prob: Optional[float] = None
    simulated_gain: Optional[float] = None
    analytic_retained_counts: Optional[float] = None


def tradeoff_curve(channel: LognormalChannel, ratios):
    """Analytic SNR-gain / retained-counts tradeoff over threshold ratios.

    Returns one :class:`ThresholdReport` per ratio.  ``snr_gain_db`` is
    ``10 log10(gain)`` and ``retained_counts_fraction`` is the partial
    expectation of the flux above threshold, which equals
    ``accept_probability * conditional_gain``.
    """
    ratios = _ratio_array(ratios, "ratios").ravel()
    if np.any(np.diff(ratios) < 0):
        raise DomainError("ratios must be sorted ascending")
    p = np.atleast_1d(accept_probability(channel, ratios * channel.mean_flux))
    g = np.atleast_1d(conditional_gain(channel, ratios))
    kept = np.atleast_1d(retained_fraction(channel, ratios))
    out = []
    for r, pi, gi, ki in zip(ratios, p, g, kept):
        out.append(ThresholdReport(
            threshold_ratio=float(r),
            analytic_accept_prob=float(pi),
            analytic_gain=float(gi),
            retained_counts_fraction=float(ki),
            retained_time_fraction=float(pi),
            snr_gain_db=10.0 * math.log10(gi),
            analytic_retained_counts=float(ki),
        ))
    return out


def _gate_mask(probe_values, level, n, hold, latency):
    """Boolean mask of accepted windows for probes at ``0, hold, 2 hold, ...``.

    A zero threshold is the no-protocol limit and accepts every window, even
    ones whose reading is 0.
    """
    probes = np.arange(0, n, hold)
    if level <= 0:
        return np.ones(n, dtype=bool)
    accept_probe = probe_values[probes] > level
    mask = np.repeat(accept_probe, hold)[:n]
    if latency:
        shifted = np.zeros(n, dtype=bool)
        shifted[latency:] = mask[: n - latency]
        mask = shifted
    return mask


def run_protocol(flux: IntensityTrace, background: BackgroundSpec, probe: ProbeConfig,
                 seed=0, channel: Optional[LognormalChannel] = None) -> ThresholdReport:
    """Simulate probe-and-threshold gating on a flux trace.

    Each probe reads the flux of the window it lands on (optionally with
    relative Gaussian error); if the reading exceeds ``threshold_ratio`` times
    the trace mean, the next ``hold_windows`` windows (after
    ``latency_windows``) are accepted.  Signal and background photons are drawn
    as independent Poisson variables in every window, and only accepted ones
    are kept.  The analytic columns use ``channel`` or, by default, the
    method-of-moments lognormal fit of the flux.

    The SNR gain is the ratio of kept-to-all signal rate over kept-to-all
    noise rate; with no background, the noise rate is taken as threshold
    independent.
    """
    q = np.asarray(flux.samples, dtype=float)
    n = q.size
    window_s = flux.period_s
    hold = probe.hold_for(window_s)
    if probe.latency_windows >= n:
        raise ProtocolError("latency exceeds the trace length")
    mean_q = q.mean()
    if not mean_q > 0:
        raise ProtocolError("flux trace has zero mean")
    if channel is None:
        try:
            channel = fit_lognormal(flux)
        except DegenerateFitError:
            channel = LognormalChannel(float(mean_q), 0.0)

    rng = make_rng(seed)
    signal = rng.poisson(q)
    noise = rng.poisson(np.full(n, background.rate_per_window))

    if probe.probe_mode == "flux":
        reading = q
        level = probe.threshold_ratio * mean_q
    else:
        reading = signal.astype(float)
        level = probe.threshold_ratio * signal.mean()
    if probe.probe_noise > 0:
        reading = reading * (1.0 + probe.probe_noise * rng.standard_normal(n))
    mask = _gate_mask(reading, level, n, hold, probe.latency_windows)

    kept = int(mask.sum())
    accept = kept / n
    total_signal = signal.sum()
    if total_signal == 0:
        raise ProtocolError("no signal photons in the trace")
    kept_signal = signal[mask].sum()
    retained = kept_signal / total_signal
    gain = retained / accept if kept else float("nan")

    if background.rate_per_window > 0 and kept and noise.sum() > 0 and noise[mask].sum() > 0:
        noise_gain = (noise[mask].sum() / kept) / noise.mean()
    else:
        noise_gain = 1.0
    snr_gain_db = 10.0 * math.log10(gain / noise_gain) if kept and gain > 0 else -math.inf

    analytic = tradeoff_curve(channel, [probe.threshold_ratio])[0]
    return replace(
        analytic,
        retained_counts_fraction=float(retained),
        retained_time_fraction=float(accept),
        snr_gain_db=float(snr_gain_db),
        simulated_accept_prob=float(accept),
        simulated_gain=float(gain),
    )


def replay_protocol(counts, probe: ProbeConfig, channel: Optional[LognormalChannel] = None):
    """Gate a measured count trace with its own counts as the probe reading.

    No resampling: windows governed by a probe whose count exceeds
    ``threshold_ratio`` times the trace mean are kept as recorded.  Analytic
    columns use ``channel`` or the method-of-moments fit of the counts.
    """
    c = np.asarray(counts.counts, dtype=float)
    n = c.size
    hold = probe.hold_for(counts.window_s)
    total = c.sum()
    if total == 0:
        raise ProtocolError("count trace has no photons")
    if channel is None:
        try:
            channel = fit_lognormal(counts)
        except DegenerateFitError:
            channel = LognormalChannel(float(c.mean()), 0.0)
    mask = _gate_mask(c, probe.threshold_ratio * c.mean(), n, hold, probe.latency_windows)
    kept = int(mask.sum())
    accept = kept / n
    retained = c[mask].sum() / total
    gain = retained / accept if kept else float("nan")
    analytic = tradeoff_curve(channel, [probe.threshold_ratio])[0]
    return replace(
        analytic,
        retained_counts_fraction=float(retained),
        retained_time_fraction=float(accept),
        snr_gain_db=10.0 * math.log10(gain) if kept and gain > 0 else -math.inf,
        simulated_accept_prob=float(accept),
        simulated_gain=float(gain),
    )


CSV_COLUMNS = (
    "threshold_ratio",
    "snr_gain_db",
    "retained_counts_pct",
    "retained_time_pct",
    "analytic_accept_prob",
    "simulated_accept_prob",
    "analytic_gain",
    "simulated_gain",
    "analytic_retained_counts_pct",
)


def report_rows(reports):
    """Flatten reports into dicts keyed by :data:`CSV_COLUMNS` (None if absent)."""
    rows = []
    for r in reports:
        rows.append({
            "threshold_ratio": r.threshold_ratio,
            "snr_gain_db": r.snr_gain_db,
            "retained_counts_pct": 100.0 * r.retained_counts_fraction,
            "retained_time_pct": 100.0 * r.retained_time_fraction,
            "analytic_accept_prob": r.analytic_accept_prob,
            "simulated_accept_prob": r.simulated_accept_prob,
            "analytic_gain": r.analytic_gain,
            "simulated_gain": r.simulated_gain,
            "analytic_retained_counts_pct": (
                None if r.analytic_retained_counts is None else 100.0 * r.analytic_retained_counts
            ),
        })
    return rows
