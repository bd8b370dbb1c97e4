"""Classical multi-F0 estimation and ingestion of external multi-F0 CSVs.

Salience is plain harmonic summation over the magnitude STFT: the score
of candidate pitch f at frame t is

    salience(t, f) = sum_{h=1..H} decay^(h-1) * magnitude(t, bin(h*f)),

with harmonics above Nyquist contributing nothing.  Per-frame peaks of
the salience map are then threaded into voices by greedy continuation;
voice 0 (M1, "the first voice") is the one seeded by the lowest pitch
of the first non-empty frame.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import TrackFormatError
from .spectral import AnalysisConfig, BinGrid, Spectrogram, pitch_lattice, stft
from .tracks import F0Track, MultiF0Track, parse_multif0_csv


@dataclass(frozen=True)
class SalienceSettings:
    """Harmonic-summation and peak-picking parameters."""

    f_min: float = 55.0
    f_max: float = 1760.0
    resolution_cents: float = 20.0
    n_partials: int = 10
    decay: float = 0.8
    rel_threshold: float = 0.3
    max_polyphony: int = 4

    def lattice(self) -> np.ndarray:
        return pitch_lattice(self.f_min, self.f_max, self.resolution_cents)


@dataclass(frozen=True)
class SalienceMap:
    """Non-negative salience values on a (frames x candidate-F0) grid."""

    values: np.ndarray
    f0_axis: np.ndarray
    times: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        axis = np.asarray(self.f0_axis, dtype=np.float64)
        if values.ndim != 2 or values.shape != (len(self.times), len(axis)):
            raise ValueError("values must be (num_frames, num_f0_bins)")
        if not np.all(np.isfinite(values)) or np.any(values < 0.0):
            raise ValueError("salience values must be finite and non-negative")
        if np.any(np.diff(axis) <= 0.0) or np.any(axis <= 0.0):
            raise ValueError("f0_axis must be positive and strictly increasing")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "f0_axis", axis)


def harmonic_salience(
    spec: Spectrogram,
    f0_axis: np.ndarray | None = None,
    n_partials: int = 10,
    decay: float = 0.8,
) -> SalienceMap:
    """Harmonic-summation salience of a magnitude spectrogram."""
    if n_partials < 1:
        raise ValueError("n_partials must be >= 1")
    if not 0.0 < decay <= 1.0:
        raise ValueError("decay must lie in (0, 1]")
    axis = SalienceSettings().lattice() if f0_axis is None else np.asarray(f0_axis, dtype=np.float64)
    if len(axis) == 0:
        raise ValueError("empty f0 lattice")
    grid = spec.grid
    if np.any(axis <= 0.0) or np.any(axis >= grid.nyquist):
        raise ValueError("f0_axis must lie strictly inside (0, Nyquist)")

    sal = np.zeros((spec.num_frames, len(axis)))
    for h in range(1, n_partials + 1):
        target = h * axis
        in_band = target <= grid.nyquist
        if not np.any(in_band):
            break
        bins = np.floor(target[in_band] * grid.fft_size / grid.sample_rate + 0.5).astype(np.int64)
        sal[:, in_band] += decay ** (h - 1) * spec.magnitudes[:, bins]
    return SalienceMap(sal, axis, spec.times)


def _frame_peaks(row: np.ndarray) -> np.ndarray:
    """Indices of local maxima; edges count against a virtual -1 neighbour."""
    ext = np.concatenate([[-1.0], row, [-1.0]])
    idx = np.arange(len(row))
    mask = (ext[idx + 1] > ext[idx]) & (ext[idx + 1] >= ext[idx + 2])
    return idx[mask]


def peak_pick(
    sal: SalienceMap,
    rel_threshold: float = 0.3,
    max_polyphony: int = 4,
    min_separation_hz: float | None = None,
) -> list[np.ndarray]:
    """Per-frame F0 sets from salience local maxima.

    Keeps maxima scoring at least ``rel_threshold`` times the frame
    maximum, best first, at most ``max_polyphony`` per frame.  When
    ``min_separation_hz`` is set (normally one STFT bin width), a peak
    closer than that to an already accepted one is suppressed, which
    keeps the per-frame pitches on distinct STFT bins.  Frames whose
    maximum is zero yield the empty set.
    """
    if max_polyphony < 1:
        raise ValueError("max_polyphony must be >= 1")
    if not 0.0 < rel_threshold < 1.0:
        raise ValueError("rel_threshold must lie in (0, 1)")
    out: list[np.ndarray] = []
    for row in sal.values:
        frame_max = row.max() if len(row) else 0.0
        if frame_max <= 0.0:
            out.append(np.empty(0))
            continue
        peaks = _frame_peaks(row)
        peaks = peaks[row[peaks] >= rel_threshold * frame_max]
        order = peaks[np.argsort(-row[peaks], kind="stable")]
        accepted: list[float] = []
        for idx in order:
            f = float(sal.f0_axis[idx])
            if min_separation_hz is not None and any(
                abs(f - g) < min_separation_hz for g in accepted
            ):
                continue
            accepted.append(f)
            if len(accepted) >= max_polyphony:
                break
        out.append(np.sort(np.array(accepted)))
    return out


def assign_voices(
    frame_sets, times: np.ndarray, continuity_cents: float = 100.0
) -> MultiF0Track:
    """Thread per-frame F0 sets into voices by greedy continuation.

    Each existing voice claims the unclaimed pitch nearest (in cents)
    to its last voiced value, if within ``continuity_cents``; leftover
    pitches seed new voices in ascending order.  Every input value ends
    up in exactly one voice, so per-frame multisets are conserved.
    """
    times = np.asarray(times, dtype=np.float64)
    if len(frame_sets) != len(times):
        raise ValueError("frame_sets and times lengths differ")
    n_frames = len(times)
    values: list[np.ndarray] = []
    lasts: list[float] = []
    for t, frame in enumerate(frame_sets):
        pending = sorted(float(f) for f in frame)
        for v, last in enumerate(lasts):
            if not pending:
                break
            dist = [abs(1200.0 * math.log2(f / last)) for f in pending]
            k = int(np.argmin(dist))
            if dist[k] <= continuity_cents:
                f = pending.pop(k)
                values[v][t] = f
                lasts[v] = f
        for f in pending:  # ascending: new voices keep low-to-high order
            col = np.full(n_frames, np.nan)
            col[t] = f
            values.append(col)
            lasts.append(f)
    if not values:  # nothing voiced anywhere: one silent voice
        values.append(np.full(n_frames, np.nan))
    voices = tuple(F0Track.from_values(times, col) for col in values)
    return MultiF0Track(times, voices)


def multif0_track(
    buf,
    config: AnalysisConfig | None = None,
    settings: SalienceSettings | None = None,
) -> MultiF0Track:
    """End-to-end classical multi-F0 on a canonicalized buffer.

    Shares the STFT time grid with :func:`pitchfuse.pyin.pyin_track`.
    """
    config = config or AnalysisConfig()
    settings = settings or SalienceSettings()
    spec = stft(buf, config)
    sal = harmonic_salience(spec, settings.lattice(), settings.n_partials, settings.decay)
    sets = peak_pick(
        sal,
        settings.rel_threshold,
        settings.max_polyphony,
        min_separation_hz=BinGrid.from_config(config).bin_width,
    )
    return assign_voices(sets, sal.times)


def import_multif0_csv(path, expected_times: np.ndarray) -> MultiF0Track:
    """Read a multi-F0 CSV and align its rows onto an expected time grid.

    Rows land on the nearest frame; a row whose time is more than half
    a hop away from every grid point is an error.  Frames with no row
    stay unvoiced.  The first F0 column becomes M1.
    """
    expected = np.asarray(expected_times, dtype=np.float64)
    raw_times, raw_values = parse_multif0_csv(path)
    n_voices, _ = raw_values.shape
    n_frames = len(expected)
    if n_frames == 0:
        raise ValueError("expected time grid is empty")
    dt = float(expected[1] - expected[0]) if n_frames > 1 else None
    out = np.full((n_voices, n_frames), np.nan)
    for j, t in enumerate(raw_times):
        if dt is None:
            k = 0
            tol = 1e-6
        else:
            k = int(round((t - expected[0]) / dt))
            tol = dt / 2.0
        if not 0 <= k < n_frames or abs(t - expected[k]) > tol + 1e-9:
            raise TrackFormatError(
                f"{path}: row time {t:.6f} is more than half a hop from the expected grid"
            )
        out[:, k] = raw_values[:, j]
    voices = tuple(F0Track.from_values(expected, out[k]) for k in range(n_voices))
    return MultiF0Track(expected, voices)
