"""Command line interface.

Subcommands: ``analyze``, ``simulate``, ``threshold``, ``spectrum``, ``events``.
Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import asdict

import numpy as np

from . import files
from .channel import BackgroundSpec, FadingSpec, generate_fading, sample_counts
from .errors import ScintlinkError, SpecError, TruncationError
from .estimators import CountTrace, IntensityTrace, fit_lognormal, over_threshold_events
from .estimators import power_spectrum
from .reference import EVENT_THRESHOLDS_DB
from .report import analyze_trace, event_histogram_rows, spectrum_rows
from .stats import LognormalChannel
from .threshold import (
    CSV_COLUMNS,
    ProbeConfig,
    replay_protocol,
    report_rows,
    run_protocol,
    tradeoff_curve,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class NumericFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser():
    p = _Parser(prog="scintlink", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="Per-trace summary: moments, SI, spectral bound, fits, events.")
    a.add_argument("trace")
    a.add_argument("--format", choices=("counts-csv", "intensity-csv"))
    a.add_argument("--json", help="write the JSON report here (default: stdout)")
    a.add_argument("--csv", help="write the one-row CSV report here")
    a.add_argument("--spectrum", help="write the power spectrum CSV here")
    a.add_argument("--events", help="write the event-duration histogram CSV here")
    a.add_argument("--background-mean", type=float,
                   help="mean background counts per window, to flag noise-dominated traces")
    a.add_argument("--thresholds-db", type=_float_list, default=list(EVENT_THRESHOLDS_DB))

    s = sub.add_parser("simulate", help="Generate a synthetic fading trace.")
    s.add_argument("--mean", type=float, required=True, help="mean flux per window")
    s.add_argument("--si", type=float, required=True, help="scintillation index")
    s.add_argument("--cutoff-hz", type=float, default=50.0, help="target 95%% spectral bound")
    s.add_argument("--window-ms", type=float, default=1.0)
    s.add_argument("--duration-s", type=float, default=65.0)
    s.add_argument("--background", type=float, default=0.0, help="background counts per window")
    s.add_argument("--decay-exponent", type=float, default=4.0)
    s.add_argument("--raw-moments", action="store_true",
                   help="do not tune the realized trace to the exact mean and SI")
    s.add_argument("--kind", choices=("counts", "intensity"), default="counts",
                   help="write photon counts, or the latent flux as an intensity trace")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--out", required=True)

    t = sub.add_parser("threshold", help="SNR-gain / retained-counts tradeoff CSV.")
    t.add_argument("--trace", help="trace file; counts are replayed, intensities simulated")
    t.add_argument("--format", choices=("counts-csv", "intensity-csv"))
    t.add_argument("--mean", type=float, default=1.0, help="channel mean flux (without --trace)")
    t.add_argument("--si", type=float, help="channel scintillation index (without --trace)")
    t.add_argument("--ratios", type=_float_list, help="comma-separated threshold ratios T0/<T>")
    t.add_argument("--ratio-max", type=float, default=4.0)
    t.add_argument("--n-ratios", type=int, default=50)
    t.add_argument("--probe-hz", type=float, default=1000.0)
    t.add_argument("--probe-noise", type=float, default=0.0)
    t.add_argument("--latency-windows", type=int, default=0)
    t.add_argument("--background", type=float, default=0.0)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("-o", "--out", help="CSV path (default: stdout)")

    sp = sub.add_parser("spectrum", help="Normalized power spectrum of a trace.")
    sp.add_argument("trace")
    sp.add_argument("--format", choices=("counts-csv", "intensity-csv"))
    sp.add_argument("--hann", action="store_true", help="add a Hann-windowed display column")
    sp.add_argument("-o", "--out", help="CSV path (default: stdout)")

    e = sub.add_parser("events", help="Durations of over-threshold events.")
    e.add_argument("trace")
    e.add_argument("--format", choices=("counts-csv", "intensity-csv"))
    e.add_argument("--thresholds-db", type=_float_list, default=list(EVENT_THRESHOLDS_DB))
    e.add_argument("-o", "--out", help="CSV path (default: stdout)")
    return p


def _emit_text(path, text, stdout):
    if path:
        with files.atomic_write(path) as fh:
            fh.write(text)
    else:
        stdout.write(text)


def cmd_analyze(args, stdout, stderr):
    trace = files.read_trace(args.trace, args.format)
    report, spectrum, events = analyze_trace(
        trace, background_mean=args.background_mean, thresholds_db=args.thresholds_db
    )
    report["source"] = args.trace
    if args.csv:
        files.write_csv(args.csv, files.REPORT_COLUMNS, [report["row"]],
                        header_lines=[f"schema_version={files.SCHEMA_VERSION}"])
    if args.spectrum:
        rows = spectrum_rows(spectrum)
        files.write_csv(args.spectrum, list(rows[0]), rows,
                        header_lines=[f"spectral_si={spectrum.spectral_si!r}",
                                      f"bound95_hz={spectrum.bound95_hz!r}"])
    if args.events:
        files.write_csv(args.events, ("threshold_db", "duration_ms", "occurrences"),
                        event_histogram_rows(events))
    _emit_text(args.json, files.dump_json(report), stdout)


def cmd_simulate(args, stdout, stderr):
    spec = FadingSpec(
        mean_flux=args.mean,
        si=args.si,
        cutoff_hz=args.cutoff_hz,
        window_s=args.window_ms / 1e3,
        duration_s=args.duration_s,
        seed=args.seed,
        decay_exponent=args.decay_exponent,
        match_moments=not args.raw_moments,
    )
    background = BackgroundSpec(args.background)
    flux = generate_fading(spec)
    if args.kind == "counts":
        # counts use a seed stream distinct from the fading one
        trace = sample_counts(flux, background, seed=[args.seed, 1])
    else:
        trace = flux
    resolved = {
        "schema_version": files.SCHEMA_VERSION,
        "kind": args.kind,
        "fading": asdict(spec),
        "background": asdict(background),
        "n_windows": spec.n_windows,
    }
    text = files.dump_json(resolved)
    files.write_trace(args.out, trace)
    with files.atomic_write(args.out + ".json") as fh:
        fh.write(text)
    stderr.write(text)


def _check_monotone(reports):
    gain = np.array([r.analytic_gain for r in reports])
    accept = np.array([r.analytic_accept_prob for r in reports])
    kept = np.array([r.analytic_retained_counts for r in reports])
    tol = 1e-12
    if (np.any(np.diff(gain) < -tol * gain[1:]) or np.any(np.diff(accept) > tol)
            or np.any(np.diff(kept) > tol)):
        raise NumericFailure("tradeoff curve is not monotone")


def cmd_threshold(args, stdout, stderr):
    if args.ratios is not None:
        ratios = sorted(args.ratios)
    else:
        if args.n_ratios < 1:
            raise UsageError("--n-ratios must be >= 1")
        ratios = list(np.linspace(0.0, args.ratio_max, args.n_ratios))
    if any(r < 0 for r in ratios):
        raise UsageError("threshold ratios must be >= 0")

    header = []
    if args.trace:
        trace = files.read_trace(args.trace, args.format)
        background = BackgroundSpec(args.background)
        reports = []
        for r in ratios:
            probe = ProbeConfig(args.probe_hz, r, probe_noise=args.probe_noise,
                                latency_windows=args.latency_windows)
            if isinstance(trace, CountTrace):
                reports.append(replay_protocol(trace, probe))
            else:
                reports.append(run_protocol(trace, background, probe, seed=args.seed))
        channel = fit_lognormal(trace)
        header.append(f"source={args.trace}")
        header.append(f"probe_hz={args.probe_hz!r}")
    else:
        if args.si is None:
            raise UsageError("give --trace or --si")
        channel = LognormalChannel.from_si(args.mean, args.si)
        reports = tradeoff_curve(channel, ratios)
    header += [f"mean_flux={channel.mean_flux!r}", f"sigma2={channel.sigma2!r}"]
    _check_monotone(reports)
    rows = report_rows(reports)
    for row in rows:
        for v in row.values():
            if isinstance(v, float) and math.isnan(v):
                raise NumericFailure("non-finite value in tradeoff curve")
    if args.out:
        files.write_csv(args.out, CSV_COLUMNS, rows, header)
    else:
        files.write_csv(stdout, CSV_COLUMNS, rows, header)


def cmd_spectrum(args, stdout, stderr):
    trace = files.read_trace(args.trace, args.format)
    summary = power_spectrum(trace, display_window="hann" if args.hann else None)
    rows = spectrum_rows(summary)
    header = [f"spectral_si={summary.spectral_si!r}", f"bound95_hz={summary.bound95_hz!r}"]
    target = args.out if args.out else stdout
    files.write_csv(target, list(rows[0]), rows, header)
    stderr.write(files.dump_json({"spectral_si": summary.spectral_si,
                                  "bound95_hz": summary.bound95_hz,
                                  "n_samples": summary.n_samples}))


def cmd_events(args, stdout, stderr):
    trace = files.read_trace(args.trace, args.format)
    rows = []
    for db in args.thresholds_db:
        ev = over_threshold_events(trace, db)
        for start, d in zip(ev.starts, ev.durations_ms):
            rows.append({"threshold_db": db, "start_s": float(start) * trace.period_s,
                         "duration_ms": float(d)})
    target = args.out if args.out else stdout
    files.write_csv(target, ("threshold_db", "start_s", "duration_ms"), rows)


COMMANDS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "threshold": cmd_threshold,
    "spectrum": cmd_spectrum,
    "events": cmd_events,
}


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        COMMANDS[args.cmd](args, stdout, stderr)
    except (UsageError, SpecError) as exc:
        stderr.write(f"scintlink {args.cmd}: usage error: {exc}\n")
        return EXIT_USAGE
    except (TruncationError, NumericFailure, ArithmeticError, FloatingPointError) as exc:
        stderr.write(f"scintlink {args.cmd}: numeric failure: {exc}\n")
        return EXIT_NUMERIC
    except (ScintlinkError, OSError, ValueError) as exc:
        stderr.write(f"scintlink {args.cmd}: data error: {exc}\n")
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
