"""Fusing a monophonic PYIN track into the first voice of a multi-F0 result.

Both tracks are quantized onto the shared STFT bin grid, then combined
frame by frame:

* where the first voice M1 is voiced, the PYIN value P replaces it when
  the two sit within ``bin_tolerance`` STFT bins of each other
  (substitution keeps PYIN's finer frequency, the bins are used only
  for the comparison);
* where M1 is unvoiced, P fills the frame only when M1 is unvoiced over
  the whole surrounding window [t - window_before, t + window_after]
  (frames beyond the clip edges count as unvoiced), otherwise the frame
  stays unvoiced.

The gap-fill window always consults the original M1 voicing, never
post-substitution values, and voices other than M1 are never touched.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import BinGrid, freq_to_bin
from .tracks import F0Track, MultiF0Track, require_same_grid


@dataclass(frozen=True)
class FusionParams:
    """Bin tolerance, gap-fill window and the shared quantization grid."""

    bin_tolerance: int = 2
    window_before: int = 5
    window_after: int = 4
    grid: BinGrid = field(default_factory=BinGrid)

    def __post_init__(self) -> None:
        if self.bin_tolerance < 0:
            raise ValueError("bin_tolerance must be >= 0")
        if self.window_before < 0 or self.window_after < 0:
            raise ValueError("window bounds must be >= 0")


@dataclass(frozen=True)
class QuantizedTrack:
    """An F0 track with each voiced frame's nearest STFT bin attached."""

    times: np.ndarray
    values: np.ndarray
    bins: np.ndarray
    voicing_prob: np.ndarray

    @property
    def voiced(self) -> np.ndarray:
        return self.bins >= 0


def quantize_track(track: F0Track, grid: BinGrid) -> QuantizedTrack:
    """Attach nearest-bin indices; unvoiced frames get bin -1."""
    voiced = track.voiced
    bins = np.full(track.n_frames, -1, dtype=np.int64)
    if np.any(voiced):
        bins[voiced] = freq_to_bin(track.values[voiced], grid)
    return QuantizedTrack(track.times, track.values.copy(), bins, track.voicing_prob.copy())


def _substitution_values(m1: QuantizedTrack, p: QuantizedTrack, tol: int):
    """Per-frame substituted values/probs, meaningful where M1 is voiced.

    P wins when both are voiced and within ``tol`` bins; an unvoiced P
    compares as out of tolerance, keeping M1.
    """
    take_p = m1.voiced & p.voiced & (np.abs(p.bins - m1.bins) <= tol)
    values = np.where(take_p, p.values, m1.values)
    probs = np.where(take_p, p.voicing_prob, m1.voicing_prob)
    return values, probs


def _gap_window_clear(m1_voiced: np.ndarray, before: int, after: int) -> np.ndarray:
    """True at t when M1 is unvoiced everywhere in [t - before, t + after].

    Out-of-range frames count as unvoiced, so clip edges can be filled.
    """
    n = len(m1_voiced)
    counts = np.concatenate([[0], np.cumsum(m1_voiced.astype(np.int64))])
    t = np.arange(n)
    lo = np.clip(t - before, 0, n)
    hi = np.clip(t + after + 1, 0, n)
    return (counts[hi] - counts[lo]) == 0


def _fill_values(m1: QuantizedTrack, p: QuantizedTrack, before: int, after: int):
    """Per-frame gap-fill values/probs, meaningful where M1 is unvoiced."""
    clear = _gap_window_clear(m1.voiced, before, after)
    values = np.where(clear, p.values, np.nan)
    probs = np.where(clear, p.voicing_prob, m1.voicing_prob)
    return values, probs


def substitute_m1(m1: QuantizedTrack, p: QuantizedTrack, params: FusionParams) -> F0Track:
    """Apply only the substitution rule; M1-unvoiced frames pass through."""
    require_same_grid(m1.times, p.times, "substitute_m1")
    sub_values, sub_probs = _substitution_values(m1, p, params.bin_tolerance)
    values = np.where(m1.voiced, sub_values, m1.values)
    probs = np.where(m1.voiced, sub_probs, m1.voicing_prob)
    return F0Track(m1.times, values, probs)


def fill_gaps(m1: QuantizedTrack, p: QuantizedTrack, params: FusionParams) -> F0Track:
    """Apply only the gap-fill rule; M1-voiced frames pass through."""
    require_same_grid(m1.times, p.times, "fill_gaps")
    fill_values, fill_probs = _fill_values(m1, p, params.window_before, params.window_after)
    values = np.where(m1.voiced, m1.values, fill_values)
    probs = np.where(m1.voiced, m1.voicing_prob, fill_probs)
    return F0Track(m1.times, values, probs)


def fuse_first_voice(m1: F0Track, p: F0Track, params: FusionParams | None = None) -> F0Track:
    """Fused first voice: substitution on voiced M1, gap fill on unvoiced M1."""
    params = params or FusionParams()
    require_same_grid(m1.times, p.times, "fuse_first_voice")
    m1q = quantize_track(m1, params.grid)
    pq = quantize_track(p, params.grid)
    sub_values, sub_probs = _substitution_values(m1q, pq, params.bin_tolerance)
    fill_values, fill_probs = _fill_values(m1q, pq, params.window_before, params.window_after)
    values = np.where(m1q.voiced, sub_values, fill_values)
    probs = np.where(m1q.voiced, sub_probs, fill_probs)
    return F0Track(m1.times, values, probs)


def merge_into_multif0(fused_m1: F0Track, original: MultiF0Track) -> MultiF0Track:
    """Replace voice 0 with the fused track; all other voices unchanged."""
    require_same_grid(fused_m1.times, original.times, "merge_into_multif0")
    return MultiF0Track(original.times, (fused_m1,) + original.voices[1:])
