"""Modular speech-privacy evaluation toolkit.

Stages (mixture synthesis, recognition scoring, discretization, and
attribute probing) exchange data only through documented file formats,
so privacy settings are configuration rather than code changes.
"""

__version__ = "0.1.0"

from .audio import AudioBuffer, read_wav, write_wav
from .errors import (
    AttributeMismatch,
    BadMagic,
    ClassTooSmall,
    ConfigError,
    CorruptHeader,
    DegenerateData,
    DimMismatch,
    DuplicateId,
    EmptyCorpus,
    EmptySequence,
    FormatError,
    InsufficientSpeakers,
    IoFailure,
    KTooLarge,
    LabelNotInManifest,
    ManifestError,
    MissingFeatures,
    MissingField,
    MissingStageInput,
    MixerError,
    NoiseTooShort,
    NonFinite,
    NoValidCells,
    OverlapInfeasible,
    ProbeError,
    QuantizerError,
    SilentNoise,
    SilentSource,
    SpanOutOfRange,
    TooFewFrames,
    UnknownEvaluation,
    UnresolvablePath,
    UnsupportedFormat,
    VpkError,
    WrongDtype,
    WrongRank,
)
from .features import FeatureSequence, read_features, write_features
from .manifest import CorpusManifest, ManifestEntry, load_manifest, save_manifest
from .units import UnitSequence, dedup_units, read_units, write_units

from .abx import (
    AbxItem,
    AbxScore,
    AbxTriple,
    abx_cell_scores,
    abx_error,
    dtw_distance,
    frame_distance,
    read_items,
    score_triple,
    slice_item,
    units_to_features,
    write_items,
)
from .mixer import (
    MixSpec,
    MixtureRecord,
    add_noise,
    build_corpus,
    mix_pair,
    peak_normalize,
)
from .pipeline import PrivacyConfig, RunReport, run, validate_config
from .probe import (
    KnnProbe,
    ProbeDataset,
    ProbeReport,
    SoftmaxProbe,
    evaluate,
    leakage_delta,
    pool_continuous,
    pool_units,
    split_stratified,
    train_knn,
    train_softmax,
)
from .quantizer import (
    Codebook,
    KMeansQuantizer,
    assign,
    fit_kmeans,
    load_codebook,
    save_codebook,
    unit_bitrate,
)
from .report import render_report, svg_line_chart
from .wer import WerBreakdown, align, corpus_wer, tokenize
