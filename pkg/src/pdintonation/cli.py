"""Command-line interface: ``pdintonation <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import os
import sys

from .cohort import load_cohort, speaker_features
from .modspec import band_ratios, modulation_spectrum
from .pitch import DEFAULT_THRESHOLD, apply_corrections, read_corrections, track_contour
from .signal_io import MIC_BAND, BandSpec, bandpass_dft, read_contour_csv, read_wav, write_contour_csv
from .study import format_report, replicate_study, write_descriptor_rows, write_report_files
from .synth import SynthParams, format_params, load_params, simulate_cohort, write_cohort


def _out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline="\n"), True


def cmd_extract(args):
    w = read_wav(args.wav)
    if not args.no_filter:
        w = bandpass_dft(w, BandSpec(args.low_hz, args.high_hz))
    contour = track_contour(w, args.threshold)
    fh, close = _out(args.output)
    try:
        write_contour_csv(fh, contour)
    finally:
        if close:
            fh.close()
    return 0


def cmd_correct(args):
    contour = apply_corrections(read_contour_csv(args.contour), read_corrections(args.overlay))
    fh, close = _out(args.output)
    try:
        write_contour_csv(fh, contour)
    finally:
        if close:
            fh.close()
    return 0


def cmd_describe(args):
    contour = read_contour_csv(args.contour)
    feats = speaker_features(contour)
    row = {"id": args.speaker_id or os.path.splitext(os.path.basename(args.contour))[0], **feats.row()}
    fh, close = _out(args.output)
    try:
        if args.json:
            fh.write(json.dumps(row, indent=2) + "\n")
        else:
            write_descriptor_rows(fh, [row])
    finally:
        if close:
            fh.close()
    return 0


def cmd_modspec(args):
    spec = modulation_spectrum(read_contour_csv(args.contour))
    ratios = band_ratios(spec)
    fh, close = _out(args.output)
    try:
        fh.write("freq_hz,psd\n")
        for f, p in zip(spec.freqs, spec.psd):
            if args.max_hz is None or f <= args.max_hz:
                fh.write(f"{f:.6f},{p:.6f}\n")
    finally:
        if close:
            fh.close()
    msg = f"lfer={ratios.lfer:.6f} mfer={ratios.mfer:.6f} hfer={ratios.hfer:.6f}"
    print(msg, file=sys.stderr if fh is sys.stdout else sys.stdout)
    return 0


def cmd_analyze(args):
    cohort = load_cohort(args.metadata, args.contour_dir, jobs=args.jobs)
    report = replicate_study(
        cohort, per_sex_scores=args.per_sex, loo=args.loo, alpha=args.alpha, smooth_window=args.smooth_window,
    )
    paths = write_report_files(report, args.out)
    if not args.quiet:
        for key, p in paths.items():
            print(f"{key}: {p}")
    return 0


def cmd_simulate(args):
    if args.write_default_params:
        with open(args.write_default_params, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(format_params(SynthParams()))
        return 0
    if not args.out:
        raise ValueError("--out is required")
    params = load_params(args.params) if args.params else SynthParams()
    if args.seed is not None:
        params.seed = args.seed
    meta = write_cohort(simulate_cohort(params), args.out)
    print(meta)
    return 0


def cmd_report(args):
    with open(args.report, encoding="utf-8") as fh:
        data = json.load(fh)
    fh, close = _out(args.output)
    try:
        fh.write(format_report(data))
    finally:
        if close:
            fh.close()
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="pdintonation", description="F0 contour analysis of read speech.")
    sub = p.add_subparsers(dest="command")

    s = sub.add_parser("extract", help="WAV -> contour CSV")
    s.add_argument("wav")
    s.add_argument("-o", "--output", help="contour CSV (default stdout)")
    s.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD, help="YIN threshold (default 0.15)")
    s.add_argument("--low-hz", type=float, default=MIC_BAND[0])
    s.add_argument("--high-hz", type=float, default=MIC_BAND[1])
    s.add_argument("--no-filter", action="store_true", help="skip the DFT band-pass filter")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("correct", help="apply a correction overlay to a contour")
    s.add_argument("contour")
    s.add_argument("overlay")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_correct)

    s = sub.add_parser("describe", help="contour -> descriptor row")
    s.add_argument("contour")
    s.add_argument("--speaker-id")
    s.add_argument("--json", action="store_true")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_describe)

    s = sub.add_parser("modspec", help="contour -> modulation spectrum CSV and band ratios")
    s.add_argument("contour")
    s.add_argument("-o", "--output")
    s.add_argument("--max-hz", type=float, default=None, help="only write bins up to this frequency")
    s.set_defaults(func=cmd_modspec)

    s = sub.add_parser("analyze", help="cohort -> report JSON, CSV tables and plot data")
    s.add_argument("metadata")
    s.add_argument("--contour-dir")
    s.add_argument("--out", required=True)
    s.add_argument("--per-sex", action="store_true", help="score speakers with per-sex models")
    s.add_argument("--loo", action="store_true", help="leave-one-out scores (not part of the original protocol)")
    s.add_argument("--alpha", type=float, default=0.01)
    s.add_argument("--smooth-window", type=int, default=5)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("-q", "--quiet", action="store_true")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="generate a synthetic cohort on disk")
    s.add_argument("--params", help="generator settings file")
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.add_argument("--write-default-params", metavar="PATH", help="write the default settings and exit")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("report", help="report.json -> text tables")
    s.add_argument("report")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except (OSError, ValueError, IndexError) as exc:
        print(f"pdintonation {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
