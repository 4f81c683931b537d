"""Trace files and report emission.

Trace files are one value per line, preceded by a ``#``-prefixed metadata
header::

    # window_s=0.001          (counts-csv: non-negative integers)
    # sample_rate_hz=50000    (intensity-csv: non-negative reals)

Every writer goes through :func:`atomic_write`, so a failed command never
leaves a partial file behind.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from contextlib import contextmanager

import numpy as np

from .errors import MetadataError, TraceFormatError
from .estimators import CountTrace, IntensityTrace

__all__ = [
    "SCHEMA_VERSION",
    "REPORT_COLUMNS",
    "atomic_write",
    "read_trace",
    "parse_trace",
    "format_trace",
    "write_trace",
    "write_csv",
    "dump_json",
]

SCHEMA_VERSION = "1.0"

# acquisition summary columns first, then fit and similarity extras
REPORT_COLUMNS = (
    "mean",
    "std",
    "duration_s",
    "window_ms",
    "si",
    "bound95_hz",
    "n_windows",
    "fit_mean_flux",
    "fit_sigma2",
    "similarity_lognormal",
    "similarity_mandel",
    "similarity_poisson",
    "background_mean",
    "background_dominated",
)

_META_KEYS = {"window_s": "counts-csv", "sample_rate_hz": "intensity-csv"}


@contextmanager
def atomic_write(path, mode="w"):
    """Open a temp file next to ``path``; rename it over ``path`` on success."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, mode, newline="" if "b" not in mode else None) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def parse_trace(text, fmt=None):
    """Parse trace-file text into a :class:`CountTrace` or :class:`IntensityTrace`.

    ``fmt`` ("counts-csv" or "intensity-csv") is inferred from the metadata
    header when omitted.
    """
    meta = {}
    values = []
    value_lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, val = body.partition("=")
                key = key.strip()
                if key in _META_KEYS:
                    try:
                        meta[key] = float(val.strip())
                    except ValueError:
                        raise MetadataError(f"bad value for {key}: {val.strip()!r}", lineno)
                    if not (math.isfinite(meta[key]) and meta[key] > 0):
                        raise MetadataError(f"{key} must be a positive number", lineno)
            continue
        field = line.split(",")[0].strip()
        values.append(field)
        value_lines.append(lineno)

    if fmt is None:
        found = [_META_KEYS[k] for k in meta]
        if len(found) != 1:
            raise MetadataError(
                "expected exactly one of '# window_s=<value>' or '# sample_rate_hz=<value>'"
            )
        fmt = found[0]
    key = "window_s" if fmt == "counts-csv" else "sample_rate_hz"
    if fmt not in ("counts-csv", "intensity-csv"):
        raise TraceFormatError(f"unknown trace format {fmt!r}")
    if key not in meta:
        raise MetadataError(f"{fmt} file lacks a '# {key}=<value>' header")
    if len(values) < 2:
        raise TraceFormatError("a trace needs at least 2 values")

    if fmt == "counts-csv":
        out = np.empty(len(values), dtype=np.int64)
        for i, (v, ln) in enumerate(zip(values, value_lines)):
            try:
                n = int(v)
            except ValueError:
                raise TraceFormatError(f"not an integer count: {v!r}", ln)
            if n < 0:
                raise TraceFormatError(f"negative count: {n}", ln)
            out[i] = n
        return CountTrace(out, meta[key])

    out = np.empty(len(values))
    for i, (v, ln) in enumerate(zip(values, value_lines)):
        try:
            x = float(v)
        except ValueError:
            raise TraceFormatError(f"not a number: {v!r}", ln)
        if not math.isfinite(x) or x < 0:
            raise TraceFormatError(f"intensity must be finite and >= 0: {v!r}", ln)
        out[i] = x
    return IntensityTrace(out, meta[key])


def read_trace(path, fmt=None):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_trace(fh.read(), fmt)


def format_trace(trace):
    """Serialize a trace into the file format parsed by :func:`parse_trace`."""
    buf = io.StringIO()
    if isinstance(trace, CountTrace):
        buf.write(f"# window_s={trace.window_s!r}\n")
        buf.write("\n".join(str(int(c)) for c in trace.counts))
    else:
        buf.write(f"# sample_rate_hz={trace.sample_rate_hz!r}\n")
        buf.write("\n".join(repr(float(x)) for x in trace.samples))
    buf.write("\n")
    return buf.getvalue()


def write_trace(path, trace):
    with atomic_write(path) as fh:
        fh.write(format_trace(trace))


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(target, columns, rows, header_lines=()):
    """Write dict rows as CSV to a path, or to an open text stream."""

    def emit(fh):
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row.get(c)) for c in columns])

    if hasattr(target, "write"):
        emit(target)
    else:
        with atomic_write(target) as fh:
            emit(fh)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def dump_json(obj):
    return json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n"
