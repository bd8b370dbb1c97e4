"""Command-line interface binding the trackers, fusion and evaluation.

Subcommands: ``pyin``, ``multif0``, ``fuse``, ``eval``, ``synth``,
``plot``.  Exit codes: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .audio import canonicalize, load_wav, save_wav, synthesize_harmonic
from .errors import PitchfuseError
from .fusion import FusionParams, fuse_first_voice, merge_into_multif0
from .metrics import evaluate
from .multif0 import SalienceSettings, import_multif0_csv, multif0_track
from .plotting import plot_tracks
from .pyin import pyin_track
from .spectral import AnalysisConfig, BinGrid, stft
from .tracks import (
    F0Track,
    parse_multif0_csv,
    read_f0_csv,
    write_f0_csv,
    write_multif0_csv,
)


class _UsageError(Exception):
    def __init__(self, parser: argparse.ArgumentParser, message: str) -> None:
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors instead of exiting."""

    def error(self, message: str):
        raise _UsageError(self, message)


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--sample-rate", type=int, default=22050, help="analysis rate in Hz")
    common.add_argument("--window", type=int, default=1024, help="analysis window in samples")
    common.add_argument("--hop", type=int, default=256, help="hop size in samples")
    return common


def build_parser() -> _Parser:
    common = _common_flags()
    parser = _Parser(prog="pitchfuse", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("pyin", parents=[common], help="monophonic F0 track to CSV")
    p.add_argument("input", help="input WAV file")
    p.add_argument("-o", "--output", required=True, help="output F0 CSV")
    p.set_defaults(func=_cmd_pyin)

    p = sub.add_parser("multif0", parents=[common], help="multi-F0 track to CSV")
    p.add_argument("input", help="input WAV file")
    p.add_argument("-o", "--output", required=True, help="output multi-F0 CSV")
    p.add_argument("--polyphony", type=int, default=4, help="max simultaneous voices")
    p.add_argument("--threshold", type=float, default=0.3, help="salience peak threshold")
    p.set_defaults(func=_cmd_multif0)

    p = sub.add_parser("fuse", parents=[common], help="fuse a PYIN track into voice 1")
    p.add_argument("--m1", required=True, help="multi-F0 CSV (voice f0_1 is fused)")
    p.add_argument("--pyin", required=True, help="PYIN F0 CSV on the same grid")
    p.add_argument("-o", "--output", required=True, help="output multi-F0 CSV")
    p.add_argument("--bin-tolerance", type=int, default=2, help="substitution distance in bins")
    p.add_argument("--window-before", type=int, default=5, help="gap-fill frames before t")
    p.add_argument("--window-after", type=int, default=4, help="gap-fill frames after t")
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("eval", parents=[common], help="print track metrics as key=value")
    p.add_argument("track", help="F0 or multi-F0 CSV (first voice is evaluated)")
    p.add_argument("--ref", help="reference CSV for raw pitch accuracy")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("synth", parents=[common], help="additive synthesis from an F0 CSV")
    p.add_argument("--f0", required=True, help="contour F0 CSV")
    p.add_argument("--partials", default="1.0", help="comma-separated partial amplitudes")
    p.add_argument("-o", "--output", required=True, help="output WAV file")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("plot", parents=[common], help="render tracks to SVG")
    p.add_argument("csvs", nargs="+", help="track CSVs to draw")
    p.add_argument("--spec", help="WAV file for a spectrogram backdrop")
    p.add_argument("-o", "--output", required=True, help="output SVG file")
    p.set_defaults(func=_cmd_plot)

    return parser


def _config(args) -> AnalysisConfig:
    return AnalysisConfig(args.sample_rate, args.window, args.hop)


def _load(args) -> tuple:
    config = _config(args)
    buf = canonicalize(load_wav(args.input), config.sample_rate)
    return buf, config


def _read_any_track(path) -> F0Track:
    """Read an F0 CSV, or the first voice of a multi-F0 CSV."""
    with open(path, "r", newline="") as fh:
        head = fh.readline()
    if head.strip().startswith("time_sec,f0_1"):
        times, values = parse_multif0_csv(path)
        return F0Track.from_values(times, values[0])
    return read_f0_csv(path)


def _cmd_pyin(args) -> int:
    buf, config = _load(args)
    write_f0_csv(pyin_track(buf, config), args.output)
    return 0


def _cmd_multif0(args) -> int:
    buf, config = _load(args)
    settings = SalienceSettings(
        rel_threshold=args.threshold, max_polyphony=args.polyphony
    )
    write_multif0_csv(multif0_track(buf, config, settings), args.output)
    return 0


def _cmd_fuse(args) -> int:
    pyin = read_f0_csv(args.pyin)
    multi = import_multif0_csv(args.m1, pyin.times)
    params = FusionParams(
        bin_tolerance=args.bin_tolerance,
        window_before=args.window_before,
        window_after=args.window_after,
        grid=BinGrid(args.sample_rate, args.window),
    )
    fused = fuse_first_voice(multi.m1, pyin, params)
    write_multif0_csv(merge_into_multif0(fused, multi), args.output)
    return 0


def _cmd_eval(args) -> int:
    track = _read_any_track(args.track)
    reference = _read_any_track(args.ref) if args.ref else None
    for line in evaluate(track, reference).lines():
        print(line)
    return 0


def _cmd_synth(args) -> int:
    contour = read_f0_csv(args.f0)
    try:
        amps = [float(a) for a in args.partials.split(",") if a.strip()]
    except ValueError:
        raise PitchfuseError(f"bad --partials value {args.partials!r}") from None
    buf = synthesize_harmonic(contour, amps, args.sample_rate)
    save_wav(buf, args.output)
    return 0


def _cmd_plot(args) -> int:
    tracks = []
    for path in args.csvs:
        stem = Path(path).stem
        with open(path, "r", newline="") as fh:
            head = fh.readline()
        if head.strip().startswith("time_sec,f0_1"):
            times, values = parse_multif0_csv(path)
            for k in range(values.shape[0]):
                tracks.append((f"{stem} v{k + 1}", F0Track.from_values(times, values[k])))
        else:
            tracks.append((stem, read_f0_csv(path)))
    spectrogram = None
    if args.spec:
        config = _config(args)
        spectrogram = stft(canonicalize(load_wav(args.spec), config.sample_rate), config)
    plot_tracks(tracks, args.output, spectrogram=spectrogram)
    return 0


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc.parser.format_usage(), end="", file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if getattr(args, "func", None) is None:
        print(parser.format_usage(), end="", file=sys.stderr)
        print("error: a subcommand is required", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except PitchfuseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
