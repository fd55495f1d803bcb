"""Exception hierarchy for the toolkit.

Every error raised by vpk derives from :class:`VpkError` so callers can
catch toolkit failures without swallowing unrelated exceptions. Subclasses
are grouped by subsystem; the class name is the error code.
"""


class VpkError(Exception):
    """Base class for all toolkit errors."""


# --- file formats -----------------------------------------------------------

class FormatError(VpkError):
    """A file does not satisfy its declared on-disk contract."""


class UnsupportedFormat(FormatError):
    """Readable container, but an encoding the toolkit does not accept."""


class CorruptHeader(FormatError):
    """Container header is missing, truncated, or self-inconsistent."""


class BadMagic(FormatError):
    """Array file does not start with the expected magic bytes."""


class WrongDtype(FormatError):
    """Array file holds a dtype other than little-endian float32."""


class WrongRank(FormatError):
    """Array file is not 2-D."""


class NonFinite(FormatError):
    """Data contains NaN or infinity."""


class IoFailure(VpkError):
    """Underlying OS-level read/write failed."""


# --- manifests --------------------------------------------------------------

class ManifestError(VpkError):
    pass


class DuplicateId(ManifestError):
    pass


class MissingField(ManifestError):
    pass


class UnresolvablePath(ManifestError):
    pass


# --- mixture synthesis ------------------------------------------------------

class MixerError(VpkError):
    pass


class SilentSource(MixerError):
    pass


class SilentNoise(MixerError):
    pass


class NoiseTooShort(MixerError):
    pass


class OverlapInfeasible(MixerError):
    pass


class InsufficientSpeakers(MixerError):
    pass


# --- scoring ----------------------------------------------------------------

class EmptyCorpus(VpkError):
    pass


class SpanOutOfRange(VpkError):
    pass


class MissingFeatures(VpkError):
    pass


class NoValidCells(VpkError):
    pass


# --- quantizer --------------------------------------------------------------

class QuantizerError(VpkError):
    pass


class TooFewFrames(QuantizerError):
    pass


class DegenerateData(QuantizerError):
    pass


class DimMismatch(QuantizerError):
    pass


# --- probes -----------------------------------------------------------------

class ProbeError(VpkError):
    pass


class ClassTooSmall(ProbeError):
    pass


class KTooLarge(ProbeError):
    pass


class EmptySequence(ProbeError):
    pass


class AttributeMismatch(ProbeError):
    pass


# --- pipeline configuration -------------------------------------------------

class ConfigError(VpkError):
    pass


class MissingStageInput(ConfigError):
    pass


class UnknownEvaluation(ConfigError):
    pass


class LabelNotInManifest(ConfigError):
    pass
