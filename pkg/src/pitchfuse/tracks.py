"""F0 track containers and their CSV wire formats.

Unvoiced frames are represented as NaN in the ``values`` array and as an
empty field in CSV.  Both formats are written with fixed precision
(times 6 decimals, frequencies 4) and a trailing newline so repeated
runs are byte-identical.

F0 track CSV:    ``time_sec,f0_hz,voicing_prob`` one row per frame.
Multi-F0 CSV:    ``time_sec,f0_1,...,f0_K`` fixed K per file; column
                 ``f0_1`` is the first voice M1.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, TrackFormatError

UNVOICED = float("nan")

# Time grids may round-trip through 6-decimal CSV, so "equal" grids are
# compared with a +-1 microsecond slack.
_TIME_ATOL = 2.5e-6

F0_CSV_HEADER = ["time_sec", "f0_hz", "voicing_prob"]


def _as_float_array(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D")
    return arr


def _check_uniform_times(times: np.ndarray) -> None:
    if len(times) == 0:
        raise ValueError("a track needs at least one frame")
    if len(times) == 1:
        return
    steps = np.diff(times)
    if np.any(steps <= 0):
        raise ValueError("track times must be strictly increasing")
    if np.any(np.abs(steps - steps[0]) > _TIME_ATOL):
        raise ValueError("track times must form a uniform grid")


def same_grid(a: np.ndarray, b: np.ndarray) -> bool:
    return len(a) == len(b) and bool(np.allclose(a, b, rtol=0.0, atol=_TIME_ATOL))


def require_same_grid(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if not same_grid(a, b):
        raise GridMismatchError(f"{what}: time grids differ")


@dataclass(frozen=True)
class F0Track:
    """Per-frame optional fundamental frequency on a uniform time grid."""

    times: np.ndarray
    values: np.ndarray
    voicing_prob: np.ndarray

    def __post_init__(self) -> None:
        times = _as_float_array(self.times, "times")
        values = _as_float_array(self.values, "values")
        prob = _as_float_array(self.voicing_prob, "voicing_prob")
        if not (len(times) == len(values) == len(prob)):
            raise ValueError("times, values and voicing_prob lengths differ")
        _check_uniform_times(times)
        voiced = ~np.isnan(values)
        if np.any(~np.isfinite(values[voiced])) or np.any(values[voiced] <= 0.0):
            raise ValueError("voiced values must be finite and positive")
        if np.any((prob < 0.0) | (prob > 1.0)):
            raise ValueError("voicing_prob must lie in [0, 1]")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "voicing_prob", prob)

    @classmethod
    def from_values(cls, times, values, voicing_prob=None) -> "F0Track":
        """Build a track, defaulting voicing_prob to 1 on voiced frames."""
        values = _as_float_array(values, "values")
        if voicing_prob is None:
            voicing_prob = np.where(np.isnan(values), 0.0, 1.0)
        return cls(np.asarray(times, dtype=np.float64), values, voicing_prob)

    @property
    def n_frames(self) -> int:
        return len(self.times)

    @property
    def voiced(self) -> np.ndarray:
        """Boolean mask of voiced frames."""
        return ~np.isnan(self.values)

    @property
    def voiced_count(self) -> int:
        return int(self.voiced.sum())

    @property
    def frame_period(self) -> float:
        """Uniform time step in seconds; undefined for single-frame tracks."""
        if self.n_frames < 2:
            raise ValueError("frame period undefined for a single-frame track")
        return float(self.times[1] - self.times[0])


@dataclass(frozen=True)
class MultiF0Track:
    """Ordered voices on one shared time grid; voice 0 is M1."""

    times: np.ndarray
    voices: tuple

    def __post_init__(self) -> None:
        times = _as_float_array(self.times, "times")
        _check_uniform_times(times)
        voices = tuple(self.voices)
        if not voices:
            raise ValueError("a MultiF0Track needs at least one voice")
        for i, voice in enumerate(voices):
            require_same_grid(times, voice.times, f"voice {i}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "voices", voices)

    @property
    def n_frames(self) -> int:
        return len(self.times)

    @property
    def n_voices(self) -> int:
        return len(self.voices)

    @property
    def m1(self) -> F0Track:
        """The designated first voice."""
        return self.voices[0]

    def min_bin_separation(self, bin_width: float) -> float:
        """Smallest same-frame voiced pitch distance, in bins.

        Producers keep this >= 1 (the distinct-pitch rule); fused tracks
        may legitimately fall below it, so this is a probe, not a check.
        """
        best = np.inf
        stack = np.vstack([v.values for v in self.voices])
        for t in range(self.n_frames):
            col = np.sort(stack[:, t][~np.isnan(stack[:, t])])
            if len(col) > 1:
                best = min(best, float(np.min(np.diff(col)) / bin_width))
        return best


def _fmt_time(t: float) -> str:
    return f"{t:.6f}"


def _fmt_freq(v: float) -> str:
    return "" if np.isnan(v) else f"{v:.4f}"


def write_f0_csv(track: F0Track, path) -> None:
    lines = [",".join(F0_CSV_HEADER)]
    for t, v, p in zip(track.times, track.values, track.voicing_prob):
        lines.append(f"{_fmt_time(t)},{_fmt_freq(v)},{p:.4f}")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_multif0_csv(track: MultiF0Track, path) -> None:
    header = ["time_sec"] + [f"f0_{k + 1}" for k in range(track.n_voices)]
    lines = [",".join(header)]
    for t in range(track.n_frames):
        cells = [_fmt_time(track.times[t])]
        cells += [_fmt_freq(v.values[t]) for v in track.voices]
        lines.append(",".join(cells))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _read_rows(path, expected_columns: int | None = None):
    try:
        with open(path, "r", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise TrackFormatError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise TrackFormatError(f"{path}: empty file")
    return rows


def _parse_float(cell: str, path, row_no: int, col: str) -> float:
    try:
        return float(cell)
    except ValueError as exc:
        raise TrackFormatError(f"{path}:{row_no}: bad {col} value {cell!r}") from exc


def _parse_opt_freq(cell: str, path, row_no: int) -> float:
    if cell == "":
        return UNVOICED
    return _parse_float(cell, path, row_no, "f0")


def read_f0_csv(path) -> F0Track:
    rows = _read_rows(path)
    if rows[0] != F0_CSV_HEADER:
        raise TrackFormatError(f"{path}: expected header {','.join(F0_CSV_HEADER)}")
    times, values, probs = [], [], []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise TrackFormatError(f"{path}:{i}: expected 3 fields, got {len(row)}")
        times.append(_parse_float(row[0], path, i, "time"))
        values.append(_parse_opt_freq(row[1], path, i))
        probs.append(_parse_float(row[2], path, i, "voicing_prob"))
    try:
        return F0Track(np.array(times), np.array(values), np.array(probs))
    except ValueError as exc:
        raise TrackFormatError(f"{path}: {exc}") from exc


def parse_multif0_csv(path):
    """Raw parse of a multi-F0 CSV: (row times, values array (K, T))."""
    rows = _read_rows(path)
    header = rows[0]
    n_voices = len(header) - 1
    if (
        n_voices < 1
        or header[0] != "time_sec"
        or header[1:] != [f"f0_{k + 1}" for k in range(n_voices)]
    ):
        raise TrackFormatError(f"{path}: expected header time_sec,f0_1,...,f0_K")
    times = []
    values = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != n_voices + 1:
            raise TrackFormatError(
                f"{path}:{i}: expected {n_voices + 1} fields, got {len(row)}"
            )
        times.append(_parse_float(row[0], path, i, "time"))
        values.append([_parse_opt_freq(c, path, i) for c in row[1:]])
    if not times:
        raise TrackFormatError(f"{path}: no data rows")
    return np.array(times), np.array(values, dtype=np.float64).T
