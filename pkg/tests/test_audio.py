import struct
import wave

import numpy as np
import pytest
from scipy.io import wavfile

from pitchfuse import (
    AudioBuffer,
    AudioReadError,
    EmptyAudioError,
    F0Track,
    UnsupportedCodecError,
    load_wav,
    resample,
    save_wav,
    synthesize_harmonic,
)

from conftest import SR, constant_track, dft_peak_hz, tone


def write_pcm16(path, data: np.ndarray, sr: int, channels: int = 1) -> None:
    """Independent PCM16 writer (stdlib wave) for round-trip checks."""
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(channels)
        fh.setsampwidth(2)
        fh.setframerate(sr)
        fh.writeframes(np.asarray(data, dtype="<i2").tobytes())


def write_pcm24(path, ints: np.ndarray, sr: int) -> None:
    """Hand-packed 24-bit mono WAV."""
    payload = b"".join(struct.pack("<i", int(v) << 8)[1:] for v in ints)
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, 1, 1, sr, sr * 3, 3, 24,
        b"data", len(payload),
    )
    path.write_bytes(header + payload)


class TestLoadWav:
    def test_pcm16_mono_roundtrip(self, tmp_path):
        rng = np.random.default_rng(0)
        ints = rng.integers(-32768, 32768, size=44100, dtype=np.int16)
        path = tmp_path / "mono.wav"
        write_pcm16(path, ints, 44100)
        buf = load_wav(path)
        assert buf.sample_rate == 44100
        assert len(buf) == 44100
        np.testing.assert_allclose(buf.samples, ints / 32768.0, atol=1e-12)

    def test_stereo_mixdown_mean(self, tmp_path):
        left = np.full(1000, 0.5)
        right = np.full(1000, -0.5)
        inter = np.empty(2000)
        inter[0::2], inter[1::2] = left, right
        path = tmp_path / "stereo.wav"
        write_pcm16(path, np.round(inter * 32767).astype(np.int16), 8000, channels=2)
        buf = load_wav(path)
        assert len(buf) == 1000
        np.testing.assert_allclose(buf.samples, 0.0, atol=1e-4)

    def test_pcm16_full_scale_negative(self, tmp_path):
        path = tmp_path / "fs.wav"
        write_pcm16(path, np.array([-32768, 32767], dtype=np.int16), 22050)
        buf = load_wav(path)
        assert buf.samples[0] == pytest.approx(-1.0, abs=1 / 32768)
        assert buf.samples[1] == pytest.approx(1.0, abs=1 / 32768)

    def test_pcm24(self, tmp_path):
        ints = np.array([0, 1 << 22, -(1 << 23), (1 << 23) - 1])
        path = tmp_path / "p24.wav"
        write_pcm24(path, ints, 22050)
        buf = load_wav(path)
        np.testing.assert_allclose(buf.samples, ints / float(1 << 23), atol=1e-12)

    def test_float32(self, tmp_path):
        data = np.linspace(-1, 1, 513).astype(np.float32)
        path = tmp_path / "f32.wav"
        wavfile.write(path, 22050, data)
        buf = load_wav(path)
        np.testing.assert_allclose(buf.samples, data.astype(np.float64), atol=1e-12)

    def test_missing_file(self, tmp_path):
        with pytest.raises(AudioReadError):
            load_wav(tmp_path / "nope.wav")

    def test_not_a_wav(self, tmp_path):
        path = tmp_path / "junk.wav"
        path.write_bytes(b"this is not audio at all")
        with pytest.raises(AudioReadError):
            load_wav(path)

    def test_truncated_data_chunk(self, tmp_path):
        path = tmp_path / "trunc.wav"
        write_pcm16(path, np.zeros(100, dtype=np.int16), 8000)
        path.write_bytes(path.read_bytes()[:-120])
        with pytest.raises(AudioReadError):
            load_wav(path)

    @pytest.mark.parametrize("fmt_tag,bits", [(1, 8), (1, 32), (3, 64), (0xFFFE, 16)])
    def test_unsupported_codecs(self, tmp_path, fmt_tag, bits):
        block = max(bits // 8, 1)
        payload = bytes(block * 4)
        header = struct.pack(
            "<4sI4s4sIHHIIHH4sI",
            b"RIFF", 36 + len(payload), b"WAVE",
            b"fmt ", 16, fmt_tag, 1, 8000, 8000 * block, block, bits,
            b"data", len(payload),
        )
        path = tmp_path / "odd.wav"
        path.write_bytes(header + payload)
        with pytest.raises(UnsupportedCodecError):
            load_wav(path)

    def test_zero_length(self, tmp_path):
        path = tmp_path / "empty.wav"
        write_pcm16(path, np.zeros(0, dtype=np.int16), 8000)
        with pytest.raises(EmptyAudioError):
            load_wav(path)

    def test_save_load_float32_roundtrip(self, tmp_path):
        buf = tone(440.0, 0.25)
        path = tmp_path / "rt.wav"
        save_wav(buf, path)
        back = load_wav(path)
        assert back.sample_rate == buf.sample_rate
        np.testing.assert_allclose(back.samples, buf.samples, atol=1e-7)

    def test_save_load_pcm16_roundtrip(self, tmp_path):
        buf = tone(440.0, 0.25)
        path = tmp_path / "rt16.wav"
        save_wav(buf, path, codec="pcm16")
        back = load_wav(path)
        np.testing.assert_allclose(back.samples, buf.samples, atol=1.5 / 32768)


class TestResample:
    def test_half_rate_length(self):
        for n in (44100, 44101, 999):
            buf = AudioBuffer(np.zeros(n), 44100)
            out = resample(buf, 22050)
            assert len(out) == int(np.floor(n / 2 + 0.5))
            assert out.sample_rate == 22050

    def test_identity_rate(self):
        buf = AudioBuffer(np.arange(100) / 100.0, 22050)
        out = resample(buf, 22050)
        assert out is buf

    def test_sine_peak_preserved(self):
        t = np.arange(44100) / 44100
        buf = AudioBuffer(np.sin(2 * np.pi * 440 * t), 44100)
        out = resample(buf, 22050)
        peak = dft_peak_hz(out.samples, 22050)
        assert abs(peak - 440.0) <= 22050 / len(out) + 1e-9

    def test_alias_rejection_60db(self):
        # tone well above the new Nyquist; measure the steady-state core
        # so burst edges do not mask the filter
        t = np.arange(44100) / 44100
        buf = AudioBuffer(0.9 * np.sin(2 * np.pi * 13000 * t), 44100)
        out = resample(buf, 22050).samples
        core = out[len(out) // 4 : 3 * len(out) // 4]
        ratio = np.sqrt(np.mean(core**2)) / np.sqrt(np.mean(buf.samples**2))
        assert 20 * np.log10(ratio + 1e-300) <= -60.0

    def test_inband_amplitude_preserved(self):
        t = np.arange(44100) / 44100
        buf = AudioBuffer(np.sin(2 * np.pi * 1000 * t), 44100)
        out = resample(buf, 22050).samples
        core = out[len(out) // 4 : 3 * len(out) // 4]
        assert np.max(np.abs(core)) == pytest.approx(1.0, rel=2e-3)

    def test_rate_idempotent(self):
        rng = np.random.default_rng(7)
        buf = AudioBuffer(rng.standard_normal(4000) * 0.1, 48000)
        once = resample(buf, 22050)
        twice = resample(once, 22050)
        np.testing.assert_allclose(twice.samples, once.samples, atol=1e-6)

    def test_silence_stays_silence(self):
        buf = AudioBuffer(np.zeros(5000), 44100)
        assert np.all(resample(buf, 22050).samples == 0.0)

    def test_bad_rate(self):
        with pytest.raises(ValueError):
            resample(AudioBuffer(np.zeros(10), 22050), 0)


class TestSynthesizeHarmonic:
    def test_pure_sine_peak(self):
        buf = tone(440.0, 2.0)
        assert buf.sample_rate == SR
        assert dft_peak_hz(buf.samples, SR) == pytest.approx(440.0, abs=SR / len(buf))
        assert np.max(np.abs(buf.samples)) == pytest.approx(0.8, abs=1e-12)

    def test_unvoiced_silence(self):
        buf = synthesize_harmonic(constant_track(None, 50), [1.0, 0.5], SR)
        assert np.all(buf.samples == 0.0)

    def test_partial_magnitude_ordering(self):
        buf = tone(220.0, 2.0, partial_amps=(1.0, 0.5, 0.25))
        spectrum = np.abs(np.fft.rfft(buf.samples))
        freqs = np.arange(len(spectrum)) * SR / len(buf.samples)

        def mag_at(f):
            return spectrum[np.argmin(np.abs(freqs - f))]

        m1, m2, m3 = mag_at(220), mag_at(440), mag_at(660)
        assert m1 > m2 > m3

    def test_aliasing_partial_rejected(self):
        track = constant_track(4000.0, 20)
        with pytest.raises(ValueError):
            synthesize_harmonic(track, [1.0, 1.0, 1.0], SR)  # 12 kHz > Nyquist

    def test_empty_partials_rejected(self):
        with pytest.raises(ValueError):
            synthesize_harmonic(constant_track(440.0, 20), [], SR)

    def test_amplitude_bounds(self):
        buf = tone(440.0, 0.5, partial_amps=(1.0, 0.9, 0.8))
        assert np.all(np.abs(buf.samples) <= 1.0)

    def test_voiced_gap_produces_silence(self):
        values = np.full(60, 330.0)
        values[20:40] = np.nan
        track = F0Track.from_values(np.arange(60) * 256 / SR, values)
        buf = synthesize_harmonic(track, [1.0], SR)
        hop = 256
        assert np.all(buf.samples[20 * hop : 40 * hop] == 0.0)
        assert np.any(buf.samples[:20 * hop] != 0.0)


class TestAudioBuffer:
    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            AudioBuffer(np.array([0.0, np.nan]), 22050)

    def test_rejects_stereo_array(self):
        with pytest.raises(ValueError):
            AudioBuffer(np.zeros((10, 2)), 22050)

    def test_rejects_bad_rate(self):
        with pytest.raises(ValueError):
            AudioBuffer(np.zeros(10), -1)

    def test_duration(self):
        assert AudioBuffer(np.zeros(22050), 22050).duration == pytest.approx(1.0)
