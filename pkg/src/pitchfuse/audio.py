"""Audio decoding, resampling and additive test-tone synthesis.

Input files are RIFF/WAVE only (PCM 16-bit, PCM 24-bit or IEEE float32).
Multichannel content is mixed to mono by the arithmetic mean of the
channels.  All analysis in this package runs at :data:`CANONICAL_RATE`;
use :func:`canonicalize` to bring a freshly loaded buffer onto it.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy.signal import firwin, resample_poly

from .errors import AudioReadError, EmptyAudioError, UnsupportedCodecError

CANONICAL_RATE = 22050

# Polyphase anti-alias prototype: Kaiser beta 8 puts the sidelobes near
# -80 dB, and 64 taps per rate unit with the cutoff at 0.97 Nyquist
# keeps everything past ~1.05x the new Nyquist at least 60 dB down.
_KAISER_BETA = 8.0
_TAPS_PER_RATE = 64
_CUTOFF = 0.97

_WAVE_FORMAT_PCM = 0x0001
_WAVE_FORMAT_IEEE_FLOAT = 0x0003


@dataclass(frozen=True)
class AudioBuffer:
    """Mono audio: a 1-D float64 sample array plus its sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        samples = np.ascontiguousarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("AudioBuffer samples must be 1-D (mono)")
        if not np.all(np.isfinite(samples)):
            raise ValueError("AudioBuffer samples must be finite")
        if int(self.sample_rate) <= 0:
            raise ValueError("sample_rate must be a positive integer")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        """Length in seconds."""
        return len(self.samples) / self.sample_rate


def _read_exact(data: bytes, offset: int, n: int, what: str) -> bytes:
    if offset + n > len(data):
        raise AudioReadError(f"truncated WAVE file: incomplete {what}")
    return data[offset:offset + n]


def _find_chunks(data: bytes) -> dict[bytes, bytes]:
    """Walk the RIFF chunk list and return the fmt/data chunk payloads."""
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise AudioReadError("not a RIFF/WAVE file")
    chunks: dict[bytes, bytes] = {}
    offset = 12
    while offset + 8 <= len(data):
        cid = data[offset:offset + 4]
        (size,) = struct.unpack_from("<I", data, offset + 4)
        payload = _read_exact(data, offset + 8, size, f"{cid!r} chunk")
        if cid in (b"fmt ", b"data") and cid not in chunks:
            chunks[cid] = payload
        offset += 8 + size + (size & 1)  # chunks are word-aligned
    if b"fmt " not in chunks:
        raise AudioReadError("WAVE file has no fmt chunk")
    if b"data" not in chunks:
        raise AudioReadError("WAVE file has no data chunk")
    return chunks


def _decode_payload(payload: bytes, fmt_tag: int, bits: int, channels: int) -> np.ndarray:
    if fmt_tag == _WAVE_FORMAT_PCM and bits == 16:
        raw = np.frombuffer(payload[: len(payload) // 2 * 2], dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif fmt_tag == _WAVE_FORMAT_PCM and bits == 24:
        usable = len(payload) // 3 * 3
        triplets = np.frombuffer(payload[:usable], dtype=np.uint8).reshape(-1, 3)
        vals = (
            triplets[:, 0].astype(np.int32)
            | (triplets[:, 1].astype(np.int32) << 8)
            | (triplets[:, 2].astype(np.int32) << 16)
        )
        vals = np.where(vals >= 1 << 23, vals - (1 << 24), vals)
        samples = vals.astype(np.float64) / float(1 << 23)
    elif fmt_tag == _WAVE_FORMAT_IEEE_FLOAT and bits == 32:
        raw = np.frombuffer(payload[: len(payload) // 4 * 4], dtype="<f4")
        if not np.all(np.isfinite(raw)):
            raise AudioReadError("float32 WAVE data contains non-finite samples")
        samples = raw.astype(np.float64)
    else:
        kind = "PCM" if fmt_tag == _WAVE_FORMAT_PCM else f"format tag {fmt_tag}"
        raise UnsupportedCodecError(
            f"unsupported WAVE codec: {kind} at {bits} bits "
            "(supported: PCM16, PCM24, IEEE float32)"
        )
    frames = len(samples) // channels
    return samples[: frames * channels].reshape(-1, channels)


def load_wav(path) -> AudioBuffer:
    """Decode a RIFF/WAVE file and mix it down to mono.

    Raises:
        AudioReadError: unreadable, truncated or non-WAVE file.
        UnsupportedCodecError: codec other than PCM16/PCM24/float32.
        EmptyAudioError: the file decodes to zero samples.
    """
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise AudioReadError(f"cannot read {path}: {exc}") from exc

    chunks = _find_chunks(data)
    fmt = chunks[b"fmt "]
    if len(fmt) < 16:
        raise AudioReadError("fmt chunk shorter than 16 bytes")
    fmt_tag, channels, rate, _byte_rate, _align, bits = struct.unpack_from("<HHIIHH", fmt, 0)
    if channels < 1:
        raise AudioReadError("fmt chunk declares zero channels")
    if rate <= 0:
        raise AudioReadError("fmt chunk declares a non-positive sample rate")

    frames = _decode_payload(chunks[b"data"], fmt_tag, bits, channels)
    if frames.shape[0] == 0:
        raise EmptyAudioError(f"{path}: zero-length audio")
    return AudioBuffer(frames.mean(axis=1), rate)


def save_wav(buf: AudioBuffer, path, codec: str = "float32") -> None:
    """Write a mono WAVE file (codec ``"float32"`` or ``"pcm16"``)."""
    if codec == "float32":
        payload = buf.samples.astype("<f4").tobytes()
        fmt_tag, bits = _WAVE_FORMAT_IEEE_FLOAT, 32
    elif codec == "pcm16":
        clipped = np.clip(buf.samples, -1.0, 1.0)
        payload = np.round(clipped * 32767.0).astype("<i2").tobytes()
        fmt_tag, bits = _WAVE_FORMAT_PCM, 16
    else:
        raise ValueError(f"unknown codec {codec!r}")
    block = bits // 8
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, fmt_tag, 1, buf.sample_rate,
        buf.sample_rate * block, block, bits,
        b"data", len(payload),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def resample(buf: AudioBuffer, target_rate: int) -> AudioBuffer:
    """Band-limited polyphase resampling to ``target_rate``.

    Output length is round(len(buf) * target_rate / buf.sample_rate),
    ties rounding up.  A Kaiser-windowed sinc keeps content above the
    new Nyquist at least 60 dB down.
    """
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    target_rate = int(target_rate)
    if target_rate == buf.sample_rate:
        return buf
    g = math.gcd(target_rate, buf.sample_rate)
    up, down = target_rate // g, buf.sample_rate // g
    max_rate = max(up, down)
    taps = firwin(
        2 * _TAPS_PER_RATE * max_rate + 1,
        _CUTOFF / max_rate,
        window=("kaiser", _KAISER_BETA),
    )
    out = resample_poly(buf.samples, up, down, window=taps)
    n_out = int(math.floor(len(buf) * target_rate / buf.sample_rate + 0.5))
    if len(out) > n_out:
        out = out[:n_out]
    elif len(out) < n_out:
        out = np.concatenate([out, np.zeros(n_out - len(out))])
    return AudioBuffer(out, target_rate)


def canonicalize(buf: AudioBuffer, rate: int = CANONICAL_RATE) -> AudioBuffer:
    """Resample onto the canonical analysis rate (22050 Hz by default)."""
    return resample(buf, rate)


def synthesize_harmonic(contour, partial_amps, sample_rate: int) -> AudioBuffer:
    """Phase-continuous additive synthesis from an F0 contour.

    Each frame of the contour drives one hop of samples; partial ``h``
    (1-based) advances its phase by ``2*pi*h*f0/sample_rate`` per sample.
    Unvoiced frames are silent (phase holds).  The peak amplitude of a
    non-silent result is normalized to 0.8.

    Args:
        contour: an :class:`~pitchfuse.tracks.F0Track`; its uniform time
            step defines the per-frame hop.
        partial_amps: amplitude per partial, fundamental first.
        sample_rate: output rate in Hz.

    Raises:
        ValueError: no partials, a non-positive voiced frequency, or a
            partial that would alias above Nyquist.
    """
    amps = np.asarray(partial_amps, dtype=np.float64)
    if amps.ndim != 1 or len(amps) == 0:
        raise ValueError("partial_amps must be a non-empty 1-D sequence")
    if sample_rate <= 0:
        raise ValueError("sample_rate must be positive")

    voiced = contour.voiced
    freqs = np.where(voiced, np.nan_to_num(contour.values), 0.0)
    if np.any(freqs[voiced] <= 0.0):
        raise ValueError("voiced contour frequencies must be positive")
    n_partials = len(amps)
    if np.any(freqs[voiced] * n_partials >= sample_rate / 2):
        raise ValueError(
            f"contour frequency would alias: partial {n_partials} exceeds "
            f"the {sample_rate / 2:.0f} Hz Nyquist limit"
        )

    hop = int(round(contour.frame_period * sample_rate))
    if hop <= 0:
        raise ValueError("contour frame period shorter than one sample")
    f0 = np.repeat(freqs, hop)
    gate = np.repeat(voiced.astype(np.float64), hop)
    # phase[n] integrates f0 over samples 0..n-1, so the tone starts at sin(0)
    cycles = np.concatenate([[0.0], np.cumsum(f0[:-1])]) / sample_rate
    out = np.zeros(len(f0))
    for h, amp in enumerate(amps, start=1):
        out += amp * np.sin(2.0 * np.pi * h * cycles)
    out *= gate
    peak = np.max(np.abs(out)) if len(out) else 0.0
    if peak > 0.0:
        out *= 0.8 / peak
    return AudioBuffer(out, int(sample_rate))
