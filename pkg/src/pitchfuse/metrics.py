"""Curve-quality metrics for F0 tracks.

Flatness is the mean absolute frame-to-frame pitch step in cents over
consecutive voiced-voiced pairs (0 when no such pair exists): the lower,
the smoother the curve.  Completeness is the voiced fraction of frames.
Voicing gaps therefore never inflate flatness; they show up in
completeness instead.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tracks import F0Track, require_same_grid


def flatness(track: F0Track) -> float:
    """Mean absolute pitch step in cents per frame over voiced pairs."""
    voiced = track.voiced
    pairs = voiced[1:] & voiced[:-1]
    if not np.any(pairs):
        return 0.0
    steps = np.abs(1200.0 * np.log2(track.values[1:] / track.values[:-1]))
    return float(np.mean(steps[pairs]))


def completeness(track: F0Track) -> float:
    """Fraction of frames carrying a voiced estimate."""
    return track.voiced_count / track.n_frames


def raw_pitch_accuracy(track: F0Track, reference: F0Track, tolerance_cents: float = 50.0) -> float:
    """Fraction of reference-voiced frames matched within a cent gate.

    A frame counts when the track is voiced and within
    ``tolerance_cents`` of the reference.  With no reference-voiced
    frames the gate is vacuous and the score is 1.0 (so any track
    scores 1.0 against itself).
    """
    require_same_grid(track.times, reference.times, "raw_pitch_accuracy")
    ref_voiced = reference.voiced
    n_ref = int(ref_voiced.sum())
    if n_ref == 0:
        return 1.0
    both = ref_voiced & track.voiced
    hits = np.zeros(track.n_frames, dtype=bool)
    hits[both] = (
        np.abs(1200.0 * np.log2(track.values[both] / reference.values[both]))
        <= tolerance_cents
    )
    return float(hits.sum() / n_ref)


@dataclass(frozen=True)
class EvalReport:
    """Per-track metrics plus an optional against-reference accuracy."""

    flatness: float
    completeness: float
    voiced_frames: int
    total_frames: int
    raw_pitch_accuracy: float | None = None

    def lines(self) -> list[str]:
        """Line-oriented ``key=value`` rendering, 4-decimal floats."""
        out = [
            f"flatness={self.flatness:.4f}",
            f"completeness={self.completeness:.4f}",
            f"voiced_frames={self.voiced_frames}",
            f"total_frames={self.total_frames}",
        ]
        if self.raw_pitch_accuracy is not None:
            out.append(f"raw_pitch_accuracy={self.raw_pitch_accuracy:.4f}")
        return out


def evaluate(track: F0Track, reference: F0Track | None = None) -> EvalReport:
    """Bundle all metrics for one track."""
    rpa = None if reference is None else raw_pitch_accuracy(track, reference)
    return EvalReport(
        flatness=flatness(track),
        completeness=completeness(track),
        voiced_frames=track.voiced_count,
        total_frames=track.n_frames,
        raw_pitch_accuracy=rpa,
    )
