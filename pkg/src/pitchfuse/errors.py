"""Exception hierarchy shared by all pitchfuse modules."""


class PitchfuseError(Exception):
    """Base class for every error raised by this package."""


class AudioReadError(PitchfuseError):
    """The file could not be read or is not a RIFF/WAVE container."""


class UnsupportedCodecError(PitchfuseError):
    """The WAVE file uses a codec other than PCM16, PCM24 or float32."""


class EmptyAudioError(PitchfuseError):
    """The audio file decodes to zero samples."""


class GridMismatchError(PitchfuseError):
    """Two tracks that must share a time grid do not."""


class TrackFormatError(PitchfuseError):
    """A track CSV file is malformed or off the expected time grid."""
