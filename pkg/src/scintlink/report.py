"""Per-trace analysis report: moments, SI, spectral bound, fits and events."""

from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateFitError
from .estimators import (
    CountTrace,
    count_histogram,
    empirical_stats,
    fit_lognormal,
    intensity_histogram,
    lognormal_histogram,
    mandel_histogram,
    over_threshold_events,
    poisson_histogram,
    power_spectrum,
    similarity,
)
from .files import REPORT_COLUMNS, SCHEMA_VERSION
from .reference import EVENT_THRESHOLDS_DB

__all__ = ["analyze_trace", "event_histogram_rows", "spectrum_rows", "BACKGROUND_FLAG_FRACTION"]

BACKGROUND_FLAG_FRACTION = 0.10


def _event_summary(ev):
    d = ev.durations_ms
    return {
        "threshold_db": ev.threshold_db,
        "threshold_value": ev.threshold_value,
        "n_events": int(d.size),
        "total_ms": float(d.sum()),
        "mean_ms": float(d.mean()) if d.size else 0.0,
        "max_ms": float(d.max()) if d.size else 0.0,
    }


def event_histogram_rows(events):
    """Rows ``(threshold_db, duration_ms, occurrences)`` for each distinct duration."""
    rows = []
    for ev in events:
        values, counts = np.unique(ev.durations_ms, return_counts=True)
        for v, c in zip(values, counts):
            rows.append({"threshold_db": ev.threshold_db, "duration_ms": float(v),
                         "occurrences": int(c)})
    return rows


def spectrum_rows(summary):
    rows = []
    has_display = summary.display_power is not None
    for i, f in enumerate(summary.freqs_hz):
        row = {"freq_hz": float(f), "power": float(summary.power[i]),
               "cumulative_si": float(summary.cumulative[i])}
        if has_display:
            row["display_power"] = float(summary.display_power[i])
        rows.append(row)
    return rows


def analyze_trace(trace, background_mean=None, thresholds_db=EVENT_THRESHOLDS_DB,
                  display_window=None):
    """Summarize a trace as one row of an acquisition table.

    Returns ``(report, spectrum, events)`` where ``report`` is a JSON-ready dict
    whose ``row`` holds :data:`scintlink.files.REPORT_COLUMNS`.  Similarities
    compare the trace histogram with the lognormal, Mandel and same-mean
    Poisson laws (the last two for count traces only); the lognormal and
    Mandel laws use the method-of-moments fit.  A trace whose
    ``background_mean`` exceeds 10% of its mean is flagged as background
    dominated, since flat background noise inflates its spectral bound.
    """
    st = empirical_stats(trace)
    spectrum = power_spectrum(trace, display_window=display_window)
    events = [over_threshold_events(trace, db) for db in thresholds_db]
    is_counts = isinstance(trace, CountTrace)

    try:
        channel = fit_lognormal(trace)
    except DegenerateFitError:
        channel = None

    sim_ln = sim_mandel = sim_poisson = None
    if is_counts:
        hist = count_histogram(trace)
        total = hist.weights.sum()
        sim_poisson = similarity(hist, poisson_histogram(st.mean, hist.edges, total))
        if channel is not None:
            sim_ln = similarity(hist, lognormal_histogram(channel, hist.edges, total))
            sim_mandel = similarity(hist, mandel_histogram(channel, hist.edges, total))
    elif channel is not None:
        hist = intensity_histogram(trace)
        sim_ln = similarity(hist, lognormal_histogram(channel, hist.edges, hist.weights.sum()))

    flagged = None
    if background_mean is not None:
        flagged = bool(background_mean > BACKGROUND_FLAG_FRACTION * st.mean)

    row = {
        "mean": st.mean,
        "std": st.std,
        "duration_s": trace.duration_s,
        "window_ms": trace.period_s * 1e3,
        "si": st.si,
        "bound95_hz": spectrum.bound95_hz,
        "n_windows": int(trace.values.size),
        "fit_mean_flux": None if channel is None else channel.mean_flux,
        "fit_sigma2": None if channel is None else channel.sigma2,
        "similarity_lognormal": sim_ln,
        "similarity_mandel": sim_mandel,
        "similarity_poisson": sim_poisson,
        "background_mean": background_mean,
        "background_dominated": flagged,
    }
    assert tuple(row) == REPORT_COLUMNS
    for k, v in row.items():
        if isinstance(v, float) and not math.isfinite(v):
            raise ArithmeticError(f"non-finite report value for {k}")

    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": "counts" if is_counts else "intensity",
        "row": row,
        "spectral_si": spectrum.spectral_si,
        "events": [_event_summary(ev) for ev in events],
    }
    return report, spectrum, events
