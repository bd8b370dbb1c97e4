"""Frame-level YIN primitives.

The difference function for a frame x is

    d[tau] = sum_{j=0}^{W-1} (x[j] - x[j+tau])^2,   tau = 0..tau_max,

with the correlation window W fixed so every lag sums equally many
terms (frame length must be >= W + tau_max).  It is evaluated through
the FFT identity d[tau] = e0 + e_tau - 2*corr[tau], which is exact up
to rounding.  The cumulative-mean normalization then rescales d so a
fixed threshold is meaningful across frames:

    d_norm[0] = 1,   d_norm[tau] = d[tau] * tau / sum_{j<=tau} d[j].
"""
from __future__ import annotations

import numpy as np


def difference_frames(frames: np.ndarray, tau_max: int, corr_window: int | None = None) -> np.ndarray:
    """Difference function for a batch of frames.

    Args:
        frames: (num_frames, frame_length) array.
        tau_max: largest lag, inclusive.
        corr_window: terms per lag (W); defaults to frame_length - tau_max.

    Returns:
        (num_frames, tau_max + 1) array with d[:, 0] == 0.
    """
    frames = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    n = frames.shape[1]
    if tau_max < 1:
        raise ValueError("tau_max must be >= 1")
    w = n - tau_max if corr_window is None else int(corr_window)
    if w < 1:
        raise ValueError("correlation window must be >= 1 sample")
    if n < w + tau_max:
        raise ValueError(
            f"frame length {n} too short: need corr_window {w} + tau_max {tau_max}"
        )

    # cross-correlation corr[tau] = sum_j x[j]*x[j+tau] over j < W; an
    # fft size >= frame length keeps the circular product linear because
    # j + tau never exceeds n - 1
    fft_n = 1 << (n - 1).bit_length()
    spec_full = np.fft.rfft(frames, fft_n, axis=1)
    spec_head = np.fft.rfft(frames[:, :w], fft_n, axis=1)
    corr = np.fft.irfft(spec_full * np.conj(spec_head), fft_n, axis=1)[:, : tau_max + 1]

    sq = np.concatenate([np.zeros((frames.shape[0], 1)), np.cumsum(frames**2, axis=1)], axis=1)
    taus = np.arange(tau_max + 1)
    energy = sq[:, taus + w] - sq[:, taus]

    d = energy[:, :1] + energy - 2.0 * corr
    np.maximum(d, 0.0, out=d)  # FFT rounding can leave tiny negatives
    d[:, 0] = 0.0
    return d


def difference_function(frame: np.ndarray, tau_max: int, corr_window: int | None = None) -> np.ndarray:
    """Difference function of a single frame; see :func:`difference_frames`."""
    return difference_frames(np.asarray(frame)[None, :], tau_max, corr_window)[0]


def cmndf_frames(d: np.ndarray) -> np.ndarray:
    """Cumulative-mean-normalized difference for a batch of d rows."""
    d = np.atleast_2d(np.asarray(d, dtype=np.float64))
    out = np.ones_like(d)
    if d.shape[1] > 1:
        sums = np.cumsum(d[:, 1:], axis=1)
        taus = np.arange(1, d.shape[1], dtype=np.float64)
        safe = np.where(sums > 0.0, sums, 1.0)
        out[:, 1:] = np.where(sums > 0.0, d[:, 1:] * taus / safe, 1.0)
    return out


def cmndf(d: np.ndarray) -> np.ndarray:
    """Cumulative-mean-normalized difference of one frame."""
    return cmndf_frames(np.asarray(d)[None, :])[0]


def parabolic_refine(values: np.ndarray, tau: int) -> float:
    """Vertex abscissa of the parabola through (tau-1, tau, tau+1).

    The result is clamped to [tau - 0.5, tau + 0.5]; a degenerate flat
    triple returns tau unchanged.
    """
    if not 1 <= tau <= len(values) - 2:
        raise ValueError(f"tau {tau} has no two neighbours in {len(values)} values")
    a, b, c = float(values[tau - 1]), float(values[tau]), float(values[tau + 1])
    denom = a - 2.0 * b + c
    if denom == 0.0:
        return float(tau)
    vertex = tau + 0.5 * (a - c) / denom
    return float(np.clip(vertex, tau - 0.5, tau + 0.5))


def local_minima(values: np.ndarray, lag_min: int = 1, lag_max: int | None = None) -> np.ndarray:
    """Lags tau with values[tau] < values[tau-1] and <= values[tau+1].

    Only interior lags in [lag_min, lag_max] are considered so the
    parabolic step always has both neighbours.
    """
    values = np.asarray(values)
    hi_cap = len(values) - 2
    lo = max(int(lag_min), 1)
    hi = hi_cap if lag_max is None else min(int(lag_max), hi_cap)
    if hi < lo:
        return np.empty(0, dtype=np.int64)
    idx = np.arange(lo, hi + 1)
    mask = (values[idx] < values[idx - 1]) & (values[idx] <= values[idx + 1])
    return idx[mask]


def yin_pick(
    d_norm: np.ndarray,
    threshold: float,
    sample_rate: int,
    lag_min: int = 1,
    lag_max: int | None = None,
) -> float | None:
    """Classic fixed-threshold YIN pick.

    Returns the frequency of the smallest lag whose normalized
    difference dips below ``threshold`` (parabolic-refined), or None
    when no local minimum qualifies.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    minima = local_minima(d_norm, lag_min, lag_max)
    below = minima[np.asarray(d_norm)[minima] < threshold]
    if len(below) == 0:
        return None
    lag = parabolic_refine(d_norm, int(below[0]))
    return sample_rate / lag
