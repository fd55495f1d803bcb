class ExtractorError(Exception):
    """Base for everything the adapter scripts raise on purpose."""


class ModelLoadFailure(ExtractorError):
    """Unknown model id, or a backend that cannot be constructed."""


class AudioDecodeFailure(ExtractorError):
    """Input audio missing, unreadable, or in an unsupported layout."""
