"""Adapter scripts that turn manifests into toolkit-format artifacts:
feature files with frame-rate sidecars, hypothesis transcripts, and
per-source wavs. Scoring lives entirely in the consuming toolkit."""

from .errors import AudioDecodeFailure, ExtractorError, ModelLoadFailure
from .models import FEATURE_MODELS, TRANSCRIPT_MODELS, ExtractorJob

__version__ = "0.1.0"

__all__ = [
    "AudioDecodeFailure",
    "ExtractorError",
    "ExtractorJob",
    "FEATURE_MODELS",
    "ModelLoadFailure",
    "TRANSCRIPT_MODELS",
    "__version__",
]
