import numpy as np
import pytest

from pitchfuse import AnalysisConfig, F0Track, synthesize_harmonic

SR = 22050
HOP_DT = 256 / SR


def make_times(n_frames: int, t0: float = 512 / SR / 2) -> np.ndarray:
    return np.arange(n_frames) * HOP_DT + t0


def constant_track(freq, n_frames, t0: float = 0.0) -> F0Track:
    values = np.full(n_frames, np.nan if freq is None else float(freq))
    return F0Track.from_values(np.arange(n_frames) * HOP_DT + t0, values)


def tone(freq: float, seconds: float, partial_amps=(1.0,), sr: int = SR):
    n_frames = int(round(seconds * sr / 256))
    track = constant_track(freq, n_frames)
    return synthesize_harmonic(track, list(partial_amps), sr)


def dft_peak_hz(samples: np.ndarray, sr: int) -> float:
    spectrum = np.abs(np.fft.rfft(samples))
    return float(np.argmax(spectrum) * sr / len(samples))


@pytest.fixture
def config() -> AnalysisConfig:
    return AnalysisConfig()
