"""STFT analysis and the shared frequency-bin lattice.

Both trackers quantize their output onto the same :class:`BinGrid`
before fusion, so everything here is deliberately exact: frame t covers
samples ``[t*hop, t*hop + window)``, timestamps sit at window centers,
and ``freq_to_bin`` rounds to the nearest bin with half-bin ties going
up.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import get_window

from .errors import GridMismatchError


@dataclass(frozen=True)
class AnalysisConfig:
    """Frame-level analysis parameters shared by every tracker."""

    sample_rate: int = 22050
    window_size: int = 1024
    hop_size: int = 256
    window: str = "hann"

    def __post_init__(self) -> None:
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if not (self.window_size >= self.hop_size > 0):
            raise ValueError("need window_size >= hop_size > 0")
        if self.window_size & (self.window_size - 1):
            raise ValueError("window_size must be a power of two")

    @property
    def nyquist(self) -> float:
        return self.sample_rate / 2.0

    @property
    def num_bins(self) -> int:
        return self.window_size // 2 + 1

    def frame_count(self, n_samples: int) -> int:
        """Number of full analysis frames in ``n_samples`` samples."""
        if n_samples < self.window_size:
            return 0
        return (n_samples - self.window_size) // self.hop_size + 1

    def frame_times(self, n_frames: int) -> np.ndarray:
        """Window-center timestamps in seconds for ``n_frames`` frames."""
        idx = np.arange(n_frames)
        return (idx * self.hop_size + self.window_size / 2.0) / self.sample_rate


@dataclass(frozen=True)
class BinGrid:
    """Mapping between frequencies and STFT bin indices."""

    sample_rate: int = 22050
    fft_size: int = 1024

    def __post_init__(self) -> None:
        if self.sample_rate <= 0 or self.fft_size <= 0:
            raise ValueError("sample_rate and fft_size must be positive")

    @classmethod
    def from_config(cls, config: AnalysisConfig) -> "BinGrid":
        return cls(config.sample_rate, config.window_size)

    @property
    def num_bins(self) -> int:
        return self.fft_size // 2 + 1

    @property
    def bin_width(self) -> float:
        return self.sample_rate / self.fft_size

    @property
    def nyquist(self) -> float:
        return self.sample_rate / 2.0


def freq_to_bin(f, grid: BinGrid):
    """Nearest STFT bin for frequency ``f`` (scalar or array, Hz).

    Exact half-bin ties round up.  Raises ValueError outside [0, Nyquist].
    """
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0.0) or np.any(f > grid.nyquist):
        raise ValueError(f"frequency outside [0, {grid.nyquist}] Hz")
    bins = np.floor(f * grid.fft_size / grid.sample_rate + 0.5).astype(np.int64)
    return int(bins) if bins.ndim == 0 else bins


def bin_to_freq(k, grid: BinGrid):
    """Center frequency in Hz of bin ``k`` (scalar or array)."""
    k = np.asarray(k)
    if np.any(k < 0) or np.any(k >= grid.num_bins):
        raise ValueError(f"bin index outside [0, {grid.num_bins})")
    freqs = k * grid.sample_rate / grid.fft_size
    return float(freqs) if freqs.ndim == 0 else freqs


def pitch_lattice(f_min: float, f_max: float, resolution_cents: float) -> np.ndarray:
    """Log-spaced F0 lattice from ``f_min`` toward ``f_max``.

    The number of points is round(1200*log2(f_max/f_min)/resolution), so
    the lattice starts exactly at ``f_min`` and stops one step short of
    ``f_max``.
    """
    if not (0.0 < f_min < f_max):
        raise ValueError("need 0 < f_min < f_max")
    if resolution_cents <= 0.0:
        raise ValueError("resolution_cents must be positive")
    n = int(round(1200.0 * np.log2(f_max / f_min) / resolution_cents))
    if n < 1:
        raise ValueError("lattice is empty: range narrower than one step")
    return f_min * 2.0 ** (np.arange(n) * resolution_cents / 1200.0)


@dataclass(frozen=True)
class Spectrogram:
    """Magnitude STFT: ``magnitudes[t, k]`` for frame t and bin k."""

    magnitudes: np.ndarray
    config: AnalysisConfig

    def __post_init__(self) -> None:
        mags = np.asarray(self.magnitudes, dtype=np.float64)
        if mags.ndim != 2 or mags.shape[1] != self.config.num_bins:
            raise ValueError("magnitudes must be (num_frames, window_size/2 + 1)")
        if not np.all(np.isfinite(mags)) or np.any(mags < 0):
            raise ValueError("magnitudes must be finite and non-negative")
        object.__setattr__(self, "magnitudes", mags)

    @property
    def num_frames(self) -> int:
        return self.magnitudes.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.config.frame_times(self.num_frames)

    @property
    def grid(self) -> BinGrid:
        return BinGrid.from_config(self.config)


def frame_signal(samples: np.ndarray, config: AnalysisConfig) -> np.ndarray:
    """View of ``samples`` as (num_frames, window_size); no copy, no padding.

    Trailing samples shorter than one window are dropped so the frame
    count formula stays exact.
    """
    n_frames = config.frame_count(len(samples))
    if n_frames == 0:
        raise ValueError(
            f"buffer of {len(samples)} samples is shorter than one "
            f"{config.window_size}-sample window"
        )
    view = np.lib.stride_tricks.sliding_window_view(samples, config.window_size)
    return view[:: config.hop_size][:n_frames]


def stft(buf, config: AnalysisConfig | None = None) -> Spectrogram:
    """Hann-windowed magnitude STFT on the shared analysis grid."""
    config = config or AnalysisConfig()
    if buf.sample_rate != config.sample_rate:
        raise GridMismatchError(
            f"buffer rate {buf.sample_rate} != config rate {config.sample_rate}; "
            "canonicalize the buffer first"
        )
    frames = frame_signal(buf.samples, config)
    win = get_window(config.window, config.window_size, fftbins=True)
    mags = np.abs(np.fft.rfft(frames * win, axis=1))
    return Spectrogram(mags, config)
