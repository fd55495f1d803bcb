"""Model registry for the extraction scripts.

Heavy pretrained encoders are deliberately not bundled. Each feature
model id resolves to a deterministic DSP backend with the same I/O
contract (float32 (T, D) frames at a fixed rate), so corpus plumbing
and downstream scoring can be exercised on any machine; swapping in a
real checkpoint only means registering another entry. The asr-oracle
backend copies reference transcripts out of the manifest, standing in
for a recognizer the same way.
"""

from dataclasses import dataclass, field

from . import dsp
from .errors import ModelLoadFailure


@dataclass(frozen=True)
class ExtractorJob:
    model_id: str
    manifest: str
    out_dir: str
    device: str = "cpu"


@dataclass(frozen=True)
class FeatureModel:
    model_id: str
    dim: int
    frame_rate_hz: float
    fn: callable = field(repr=False)


FEATURE_MODELS = {
    "logmel": FeatureModel("logmel", dim=80, frame_rate_hz=100.0, fn=dsp.log_mel),
    "mfcc": FeatureModel("mfcc", dim=13, frame_rate_hz=50.0, fn=dsp.mfcc),
}

TRANSCRIPT_MODELS = ("asr-oracle",)


def resolve_feature_model(model_id) -> FeatureModel:
    try:
        return FEATURE_MODELS[model_id]
    except KeyError:
        known = sorted(FEATURE_MODELS) + list(TRANSCRIPT_MODELS)
        raise ModelLoadFailure(
            f"unknown model {model_id!r}; available: {', '.join(known)}"
        ) from None
