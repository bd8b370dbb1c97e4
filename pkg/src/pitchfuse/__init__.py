"""pitchfuse: monophonic and multi-F0 pitch tracking with track fusion.

The package provides a probabilistic-YIN monophonic tracker, a
harmonic-summation multi-F0 estimator, a per-frame fusion rule that
merges the monophonic track into the first multi-F0 voice on a shared
STFT bin grid, and flatness/completeness evaluation of the resulting
curves.
"""
from .audio import (
    CANONICAL_RATE,
    AudioBuffer,
    canonicalize,
    load_wav,
    resample,
    save_wav,
    synthesize_harmonic,
)
from .errors import (
    AudioReadError,
    EmptyAudioError,
    GridMismatchError,
    PitchfuseError,
    TrackFormatError,
    UnsupportedCodecError,
)
from .fusion import (
    FusionParams,
    QuantizedTrack,
    fill_gaps,
    fuse_first_voice,
    merge_into_multif0,
    quantize_track,
    substitute_m1,
)
from .metrics import EvalReport, completeness, evaluate, flatness, raw_pitch_accuracy
from .multif0 import (
    SalienceMap,
    SalienceSettings,
    assign_voices,
    harmonic_salience,
    import_multif0_csv,
    multif0_track,
    peak_pick,
)
from .plotting import plot_tracks
from .pyin import (
    HmmModel,
    PitchCandidate,
    PitchSettings,
    build_hmm,
    pyin_candidates,
    pyin_track,
    threshold_prior,
    viterbi_decode,
    viterbi_path,
)
from .spectral import (
    AnalysisConfig,
    BinGrid,
    Spectrogram,
    bin_to_freq,
    freq_to_bin,
    pitch_lattice,
    stft,
)
from .tracks import (
    UNVOICED,
    F0Track,
    MultiF0Track,
    read_f0_csv,
    write_f0_csv,
    write_multif0_csv,
)
from .yin import cmndf, difference_function, local_minima, parabolic_refine, yin_pick

__version__ = "0.1.0"

__all__ = [
    "AnalysisConfig",
    "AudioBuffer",
    "AudioReadError",
    "BinGrid",
    "CANONICAL_RATE",
    "EmptyAudioError",
    "EvalReport",
    "F0Track",
    "FusionParams",
    "GridMismatchError",
    "HmmModel",
    "MultiF0Track",
    "PitchCandidate",
    "PitchSettings",
    "PitchfuseError",
    "QuantizedTrack",
    "SalienceMap",
    "SalienceSettings",
    "Spectrogram",
    "TrackFormatError",
    "UNVOICED",
    "UnsupportedCodecError",
    "assign_voices",
    "bin_to_freq",
    "build_hmm",
    "canonicalize",
    "cmndf",
    "completeness",
    "difference_function",
    "evaluate",
    "fill_gaps",
    "flatness",
    "freq_to_bin",
    "fuse_first_voice",
    "harmonic_salience",
    "import_multif0_csv",
    "load_wav",
    "local_minima",
    "merge_into_multif0",
    "multif0_track",
    "parabolic_refine",
    "peak_pick",
    "pitch_lattice",
    "plot_tracks",
    "pyin_candidates",
    "pyin_track",
    "quantize_track",
    "raw_pitch_accuracy",
    "read_f0_csv",
    "resample",
    "save_wav",
    "stft",
    "substitute_m1",
    "synthesize_harmonic",
    "threshold_prior",
    "viterbi_decode",
    "viterbi_path",
    "write_f0_csv",
    "write_multif0_csv",
    "yin_pick",
]
