"""Deterministic SVG rendering of F0 tracks.

Tracks are drawn as polylines on time / log-frequency axes, broken at
unvoiced gaps; an optional magnitude spectrogram becomes a grayscale
raster backdrop (embedded as an uncompressed-pipeline PNG so repeated
renders are byte-identical).
"""
from __future__ import annotations

import base64
import struct
import zlib
from xml.sax.saxutils import escape

import numpy as np

from .spectral import Spectrogram
from .tracks import F0Track, require_same_grid

_PALETTE = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]
_MARGIN_LEFT, _MARGIN_RIGHT, _MARGIN_TOP, _MARGIN_BOTTOM = 64, 16, 18, 42
_DB_FLOOR = -80.0


def _png_grayscale(img: np.ndarray) -> bytes:
    """Encode a (height, width) uint8 array as a grayscale PNG."""
    height, width = img.shape
    raw = b"".join(b"\x00" + row.tobytes() for row in np.ascontiguousarray(img))

    def chunk(tag: bytes, data: bytes) -> bytes:
        return (
            struct.pack(">I", len(data))
            + tag
            + data
            + struct.pack(">I", zlib.crc32(tag + data) & 0xFFFFFFFF)
        )

    ihdr = struct.pack(">IIBBBBB", width, height, 8, 0, 0, 0, 0)
    return (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", ihdr)
        + chunk(b"IDAT", zlib.compress(raw, 9))
        + chunk(b"IEND", b"")
    )


def _spectrogram_raster(spec: Spectrogram, t_lo, t_hi, f_lo, f_hi, w, h) -> np.ndarray:
    """Sample the spectrogram onto plot pixels (log-frequency rows)."""
    mags = spec.magnitudes
    peak = mags.max()
    if peak <= 0.0:
        return np.full((h, w), 255, dtype=np.uint8)
    db = 20.0 * np.log10(np.maximum(mags / peak, 10.0 ** (_DB_FLOOR / 20.0)))
    level = (db - _DB_FLOOR) / -_DB_FLOOR  # 0 quiet .. 1 loud

    times = spec.times
    px_t = t_lo + (np.arange(w) + 0.5) / w * (t_hi - t_lo)
    cols = np.clip(np.searchsorted(times, px_t), 0, len(times) - 1)
    log_lo, log_hi = np.log2(f_lo), np.log2(f_hi)
    px_f = 2.0 ** (log_hi - (np.arange(h) + 0.5) / h * (log_hi - log_lo))
    bin_w = spec.grid.bin_width
    rows = np.clip(np.floor(px_f / bin_w + 0.5).astype(np.int64), 0, spec.grid.num_bins - 1)
    cell = level[np.ix_(cols, rows)].T  # (h, w)
    return (255.0 - cell * 205.0).astype(np.uint8)


def _voiced_runs(mask: np.ndarray):
    """Consecutive voiced index ranges as (start, stop) pairs, stop exclusive."""
    padded = np.concatenate([[False], mask, [False]]).astype(np.int8)
    edges = np.diff(padded)
    return list(zip(np.where(edges == 1)[0], np.where(edges == -1)[0]))


def plot_tracks(
    tracks,
    out_path,
    spectrogram: Spectrogram | None = None,
    width: int = 960,
    height: int = 540,
) -> None:
    """Write an SVG with one polyline per (label, track) pair.

    All tracks must share a time grid.  Polylines break at unvoiced
    frames; the legend lists the labels in input order.
    """
    tracks = list(tracks)
    if not tracks:
        raise ValueError("nothing to plot")
    base = tracks[0][1]
    for label, track in tracks[1:]:
        require_same_grid(base.times, track.times, f"plot_tracks({label})")

    voiced_values = np.concatenate(
        [t.values[t.voiced] for _, t in tracks] or [np.empty(0)]
    )
    if len(voiced_values):
        f_lo = float(voiced_values.min()) / 1.3
        f_hi = float(voiced_values.max()) * 1.3
    else:
        f_lo, f_hi = 55.0, 1760.0
    if spectrogram is not None:
        f_lo = max(f_lo, spectrogram.grid.bin_width / 2.0)
        f_hi = min(max(f_hi, 4.0 * f_lo), spectrogram.grid.nyquist)

    all_times = base.times
    if spectrogram is not None:
        all_times = np.concatenate([all_times, spectrogram.times])
    t_lo, t_hi = float(all_times.min()), float(all_times.max())
    if t_hi <= t_lo:
        t_hi = t_lo + 1e-3

    plot_w = width - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = height - _MARGIN_TOP - _MARGIN_BOTTOM
    log_lo, log_hi = np.log2(f_lo), np.log2(f_hi)

    def x(t: float) -> float:
        return _MARGIN_LEFT + (t - t_lo) / (t_hi - t_lo) * plot_w

    def y(f: float) -> float:
        return _MARGIN_TOP + (log_hi - np.log2(f)) / (log_hi - log_lo) * plot_h

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" xmlns:xlink="http://www.w3.org/1999/xlink" '
        f'version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
    ]

    if spectrogram is not None:
        raster = _spectrogram_raster(spectrogram, t_lo, t_hi, f_lo, f_hi, plot_w, plot_h)
        payload = base64.b64encode(_png_grayscale(raster)).decode("ascii")
        parts.append(
            f'<image x="{_MARGIN_LEFT}" y="{_MARGIN_TOP}" width="{plot_w}" height="{plot_h}" '
            f'preserveAspectRatio="none" xlink:href="data:image/png;base64,{payload}"/>'
        )

    parts.append(
        f'<rect x="{_MARGIN_LEFT}" y="{_MARGIN_TOP}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="#444444" stroke-width="1"/>'
    )

    # octave ticks on the left, seconds along the bottom
    tick = 2.0 ** np.ceil(log_lo)
    while tick <= f_hi:
        yy = y(tick)
        parts.append(
            f'<line x1="{_MARGIN_LEFT - 4}" y1="{yy:.2f}" x2="{_MARGIN_LEFT}" y2="{yy:.2f}" '
            'stroke="#444444" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_LEFT - 8}" y="{yy + 4:.2f}" font-size="11" '
            f'font-family="sans-serif" text-anchor="end">{tick:g} Hz</text>'
        )
        tick *= 2.0
    span = t_hi - t_lo
    step = next(s for s in (0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0, 60.0) if span / s <= 12)
    t_tick = np.ceil(t_lo / step) * step
    while t_tick <= t_hi + 1e-9:
        xx = x(t_tick)
        parts.append(
            f'<line x1="{xx:.2f}" y1="{_MARGIN_TOP + plot_h}" x2="{xx:.2f}" '
            f'y2="{_MARGIN_TOP + plot_h + 4}" stroke="#444444" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{xx:.2f}" y="{_MARGIN_TOP + plot_h + 16}" font-size="11" '
            f'font-family="sans-serif" text-anchor="middle">{t_tick:g}</text>'
        )
        t_tick += step
    parts.append(
        f'<text x="{_MARGIN_LEFT + plot_w / 2:.2f}" y="{height - 8}" font-size="12" '
        'font-family="sans-serif" text-anchor="middle">time (s)</text>'
    )

    for i, (label, track) in enumerate(tracks):
        color = _PALETTE[i % len(_PALETTE)]
        clipped = np.clip(track.values, f_lo, f_hi)
        for start, stop in _voiced_runs(track.voiced):
            pts = " ".join(
                f"{x(track.times[k]):.2f},{y(clipped[k]):.2f}" for k in range(start, stop)
            )
            if stop - start == 1:
                parts.append(
                    f'<circle cx="{x(track.times[start]):.2f}" cy="{y(clipped[start]):.2f}" '
                    f'r="1.5" fill="{color}"/>'
                )
            else:
                parts.append(
                    f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
                )

    legend_x = _MARGIN_LEFT + plot_w - 150
    for i, (label, _) in enumerate(tracks):
        color = _PALETTE[i % len(_PALETTE)]
        yy = _MARGIN_TOP + 14 + 16 * i
        parts.append(
            f'<line x1="{legend_x}" y1="{yy}" x2="{legend_x + 22}" y2="{yy}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{legend_x + 28}" y="{yy + 4}" font-size="11" '
            f'font-family="sans-serif">{escape(str(label))}</text>'
        )

    parts.append("</svg>")
    with open(out_path, "w", newline="") as fh:
        fh.write("\n".join(parts) + "\n")
