"""Synthesis of overlapped, noisy two-speaker evaluation corpora.

Placement rule: the second utterance starts so that the overlapped
duration equals overlap_ratio times the SHORTER utterance (the ratio
denominator is fixed to the shorter source so every ratio in [0, 1] is
feasible). Zero-overlap conditions insert a silence gap instead, with
fixed constants for the short-gap and long-gap presets. Additive noise
is scaled to hit the requested SNR exactly; the whole mixture is then
peak-normalized, and the applied gain is recorded so the summation can
be reconstructed from the reference files.
"""

import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .audio import SAMPLE_RATE_HZ, AudioBuffer, read_wav, write_wav
from .errors import (
    InsufficientSpeakers,
    MissingField,
    NoiseTooShort,
    OverlapInfeasible,
    SilentNoise,
    SilentSource,
)
from .manifest import CorpusManifest, ManifestEntry, load_manifest, save_manifest
from .validation import check_seed, derive_seed, rng_from_seed

GAP_SHORT_S = 0.5
GAP_LONG_S = 2.9
DEFAULT_PEAK = 0.9

_TAG_RATIO = {"OV10": 0.10, "OV20": 0.20, "OV30": 0.30, "OV40": 0.40}
CONDITION_TAGS = ("0L", "0S", "OV10", "OV20", "OV30", "OV40", "custom")


@dataclass(frozen=True)
class MixSpec:
    condition_tag: str = "custom"
    overlap_ratio: float = 0.0
    snr_db: float = None
    silence_gap_s: float = None
    seed: int = 0

    def __post_init__(self):
        if self.condition_tag not in CONDITION_TAGS:
            raise ValueError(f"unknown condition tag {self.condition_tag!r}")
        check_seed(self.seed)
        if self.condition_tag in _TAG_RATIO:
            want = _TAG_RATIO[self.condition_tag]
            if abs(self.overlap_ratio - want) > 1e-12:
                raise ValueError(
                    f"{self.condition_tag} requires overlap_ratio {want}, "
                    f"got {self.overlap_ratio}"
                )
        elif self.condition_tag in ("0L", "0S"):
            if self.overlap_ratio != 0.0:
                raise ValueError(f"{self.condition_tag} requires overlap_ratio 0")
            want_gap = GAP_LONG_S if self.condition_tag == "0L" else GAP_SHORT_S
            if self.silence_gap_s is None:
                object.__setattr__(self, "silence_gap_s", want_gap)
            elif abs(self.silence_gap_s - want_gap) > 1e-12:
                raise ValueError(
                    f"{self.condition_tag} fixes silence_gap_s = {want_gap}"
                )
        if not 0.0 <= self.overlap_ratio <= 1.0:
            raise ValueError(f"overlap_ratio must be in [0,1], got {self.overlap_ratio}")
        if self.overlap_ratio == 0.0:
            if self.silence_gap_s is None:
                raise ValueError("zero-overlap spec needs silence_gap_s")
            if self.silence_gap_s < 0:
                raise ValueError("silence_gap_s must be >= 0")

    @classmethod
    def from_condition(cls, tag, snr_db=None, seed=0, overlap_ratio=None, gap_s=None):
        """Build a spec from a condition name (case-insensitive)."""
        tag = {"ov10": "OV10", "ov20": "OV20", "ov30": "OV30", "ov40": "OV40",
               "0l": "0L", "0s": "0S", "custom": "custom"}.get(tag.lower())
        if tag is None:
            raise ValueError("condition must be one of 0L 0S ov10 ov20 ov30 ov40 custom")
        if tag in _TAG_RATIO:
            return cls(tag, _TAG_RATIO[tag], snr_db, None, seed)
        if tag in ("0L", "0S"):
            return cls(tag, 0.0, snr_db, None, seed)
        return cls(tag, overlap_ratio or 0.0, snr_db,
                   GAP_SHORT_S if gap_s is None else gap_s, seed)


@dataclass(frozen=True)
class SourceRef:
    utterance_id: str
    speaker_id: str
    onset_s: float
    path: str = ""


@dataclass(frozen=True)
class MixtureRecord:
    mixture_id: str = ""
    sources: tuple = ()
    requested_overlap_ratio: float = 0.0
    realized_overlap_ratio: float = 0.0
    requested_snr_db: float = None
    realized_snr_db: float = None
    mixture_path: str = ""
    noise_path: str = None
    noise_offset_samples: int = None
    normalization_gain: float = 1.0
    condition_tag: str = "custom"
    duration_s: float = 0.0

    def to_json_obj(self):
        obj = {
            "mixture_id": self.mixture_id,
            "sources": [vars(s) for s in self.sources],
            "requested_overlap_ratio": self.requested_overlap_ratio,
            "realized_overlap_ratio": self.realized_overlap_ratio,
            "requested_snr_db": self.requested_snr_db,
            "realized_snr_db": self.realized_snr_db,
            "mixture_path": self.mixture_path,
            "noise_path": self.noise_path,
            "noise_offset_samples": self.noise_offset_samples,
            "normalization_gain": self.normalization_gain,
            "condition_tag": self.condition_tag,
            "duration_s": self.duration_s,
        }
        return obj


def mix_pair(a: AudioBuffer, b: AudioBuffer, spec: MixSpec):
    """Sum b over a at the onset implied by the spec; returns the raw
    (un-normalized) mixture and a record holding exact onsets."""
    if a.rms() == 0.0:
        raise SilentSource("first source is silent")
    if b.rms() == 0.0:
        raise SilentSource("second source is silent")
    min_len = min(len(a), len(b))
    ov = int(round(spec.overlap_ratio * min_len))
    if ov > min_len:
        raise OverlapInfeasible(
            f"requested overlap {ov} samples exceeds shorter utterance ({min_len})"
        )
    if spec.overlap_ratio > 0.0:
        onset_b = len(a) - ov
    else:
        onset_b = len(a) + int(round(spec.silence_gap_s * SAMPLE_RATE_HZ))
    length = max(len(a), onset_b + len(b))
    mix = np.zeros(length, dtype=np.float32)
    mix[: len(a)] += a.samples
    mix[onset_b : onset_b + len(b)] += b.samples
    overlapped = max(0, min(len(a), onset_b + len(b)) - onset_b)
    record = MixtureRecord(
        sources=(
            SourceRef("", "", 0.0),
            SourceRef("", "", onset_b / SAMPLE_RATE_HZ),
        ),
        requested_overlap_ratio=spec.overlap_ratio,
        realized_overlap_ratio=overlapped / min_len,
        condition_tag=spec.condition_tag,
        duration_s=length / SAMPLE_RATE_HZ,
    )
    return AudioBuffer(samples=mix), record


def _noise_segment(noise: AudioBuffer, length, seed, tile=True):
    """Seeded segment of the noise source, wrapping around when tiling."""
    m = len(noise)
    if noise.rms() == 0.0:
        raise SilentNoise("noise source is silent")
    rng = rng_from_seed(seed)
    if tile:
        offset = int(rng.integers(0, m))
        idx = (offset + np.arange(length)) % m
        seg = noise.samples[idx]
    else:
        if m < length:
            raise NoiseTooShort(
                f"noise has {m} samples, signal needs {length} and tiling is off"
            )
        offset = int(rng.integers(0, m - length + 1))
        seg = noise.samples[offset : offset + length]
    return np.asarray(seg, dtype=np.float64), offset


def _rms(x):
    return float(np.sqrt(np.mean(np.square(np.asarray(x, dtype=np.float64)))))


def add_noise(signal: AudioBuffer, noise: AudioBuffer, snr_db, seed, tile=True):
    """Add a seeded noise segment scaled to the requested SNR.

    The gain is g = rms(signal) / (rms(segment) * 10^(snr/20)), so the
    realized SNR equals the request up to float rounding.
    """
    seg, _ = _noise_segment(noise, len(signal), seed, tile)
    rms_sig = signal.rms()
    if rms_sig == 0.0:
        raise SilentSource("signal is silent")
    rms_seg = _rms(seg)
    if rms_seg == 0.0:
        raise SilentNoise("selected noise segment is silent")
    g = rms_sig / (rms_seg * 10.0 ** (snr_db / 20.0))
    scaled = g * seg
    out = (signal.samples.astype(np.float64) + scaled).astype(np.float32)
    realized = 20.0 * np.log10(rms_sig / _rms(scaled))
    return AudioBuffer(samples=out), float(realized)


def peak_normalize(buffer: AudioBuffer, peak=DEFAULT_PEAK) -> AudioBuffer:
    """Scale so max |sample| equals peak; silent buffers pass through."""
    if not 0.0 < peak <= 1.0:
        raise ValueError(f"peak must be in (0, 1], got {peak}")
    m = float(np.max(np.abs(buffer.samples))) if len(buffer) else 0.0
    if m == 0.0:
        return buffer
    out = (buffer.samples.astype(np.float64) * (peak / m)).astype(np.float32)
    return AudioBuffer(samples=out)


def _pair_entries(entries, rng):
    """Seeded pairing of different-speaker utterances without replacement."""
    order = list(rng.permutation(len(entries)))
    used = [False] * len(entries)
    pairs = []
    for pos, i in enumerate(order):
        if used[i]:
            continue
        partner = None
        for j in order[pos + 1 :]:
            if not used[j] and entries[j].speaker_id != entries[i].speaker_id:
                partner = j
                break
        if partner is None:
            continue
        used[i] = used[partner] = True
        pairs.append((int(i), int(partner)))
    n_left = sum(1 for pos, u in enumerate(used) if not u)
    if n_left:
        warnings.warn(f"{n_left} utterance(s) left unpaired", stacklevel=3)
    return pairs


def build_corpus(clean: CorpusManifest, noise: CorpusManifest, spec: MixSpec, out_dir):
    """Mix different-speaker utterance pairs into a corpus under out_dir.

    Writes, per mixture, the normalized mixture wav plus float32
    reference wavs (each raw source and the scaled noise segment) whose
    onset-shifted sum reproduces the pre-normalization mixture, and a
    JSON-lines manifest carrying the full records. Pure function of
    (manifests, spec, seed): reruns are byte-identical.
    """
    if len(clean.speakers()) < 2:
        raise InsufficientSpeakers(
            f"need utterances from >= 2 speakers, got {clean.speakers()}"
        )
    noise_entries = list(noise) if noise is not None else []
    if spec.snr_db is not None and not noise_entries:
        raise MissingField("snr_db is set but the noise manifest is empty")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = list(clean)
    rng = rng_from_seed(spec.seed)
    pairs = _pair_entries(entries, rng)
    # all remaining draws are made serially up front, keyed by mixture index
    noise_picks = [
        int(rng.integers(0, len(noise_entries))) if noise_entries else None
        for _ in pairs
    ]

    out_entries = []
    for mix_no, (ia, ib) in enumerate(pairs):
        ea, eb = entries[ia], entries[ib]
        mid = f"mix_{mix_no:04d}"
        a = read_wav(ea.audio)
        b = read_wav(eb.audio)
        raw, rec = mix_pair(a, b, spec)

        noise_path = None
        noise_offset = None
        realized_snr = None
        mix64 = raw.samples.astype(np.float64)
        if spec.snr_db is not None:
            ne = noise_entries[noise_picks[mix_no]]
            nbuf = read_wav(ne.audio)
            seg, noise_offset = _noise_segment(
                nbuf, len(raw), derive_seed(spec.seed, "noise", mid)
            )
            g = raw.rms() / (_rms(seg) * 10.0 ** (spec.snr_db / 20.0))
            scaled = (g * seg).astype(np.float32)
            realized_snr = float(20.0 * np.log10(raw.rms() / _rms(scaled)))
            mix64 = mix64 + scaled
            noise_path = f"{mid}.noise.wav"
            write_wav(AudioBuffer(samples=scaled), out_dir / noise_path, "float32")

        pre_norm = mix64.astype(np.float32)
        m = float(np.max(np.abs(pre_norm)))
        gain = DEFAULT_PEAK / m if m > 0 else 1.0
        final = (pre_norm.astype(np.float64) * gain).astype(np.float32)
        write_wav(AudioBuffer(samples=final), out_dir / f"{mid}.wav", "float32")
        write_wav(a, out_dir / f"{mid}.src0.wav", "float32")
        write_wav(b, out_dir / f"{mid}.src1.wav", "float32")

        rec = replace(
            rec,
            mixture_id=mid,
            sources=(
                replace(rec.sources[0], utterance_id=ea.utterance_id,
                        speaker_id=ea.speaker_id, path=f"{mid}.src0.wav"),
                replace(rec.sources[1], utterance_id=eb.utterance_id,
                        speaker_id=eb.speaker_id, path=f"{mid}.src1.wav"),
            ),
            requested_snr_db=spec.snr_db,
            realized_snr_db=realized_snr,
            mixture_path=f"{mid}.wav",
            noise_path=noise_path,
            noise_offset_samples=noise_offset,
            normalization_gain=gain,
        )
        out_entries.append(
            ManifestEntry(
                utterance_id=mid,
                speaker_id=ea.speaker_id,
                duration_s=rec.duration_s,
                audio=f"{mid}.wav",
                transcript=ea.transcript,
                labels=ea.labels,
                extra=rec.to_json_obj(),
            )
        )

    manifest_path = out_dir / "mixtures.jsonl"
    save_manifest(out_entries, manifest_path)
    return load_manifest(manifest_path)
