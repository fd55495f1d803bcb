"""Config-driven orchestration: stage wiring, evaluations, run reports.

Stages interact only through files. A JSON config declares the privacy
setting (separation on/off, discretization on/off) and the evaluations
to run; the report records a content digest for every file each stage
consumed, so any number in the output is traceable to input bytes and
configs that differ only in a disabled stage provably feed identical
bytes to the others.
"""

import datetime as _dt
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .abx import abx_error, read_items, units_to_features
from .errors import (
    DuplicateId,
    IoFailure,
    LabelNotInManifest,
    MissingField,
    MissingStageInput,
    UnknownEvaluation,
    VpkError,
)
from .features import read_features
from .manifest import load_manifest
from .probe import (
    ProbeDataset,
    evaluate,
    pool_continuous,
    pool_units,
    split_stratified,
    train_knn,
    train_softmax,
)
from .quantizer import assign, fit_kmeans, load_codebook, save_codebook
from .units import write_units
from .validation import canonical_json_bytes, check_seed, derive_seed, sha256_hex
from .wer import corpus_wer, tokenize

_EVAL_NAMES = ("wer", "abx_within", "abx_across")


@dataclass(frozen=True)
class PrivacyConfig:
    seed: int
    manifest: str
    separation: dict
    recognition: dict
    discretization: dict
    evaluations: tuple
    abx: dict
    probe: dict
    path: str = ""
    raw: dict = field(default_factory=dict)


def _resolve(base: Path, value):
    if value is None:
        return None
    p = Path(value)
    return str(p if p.is_absolute() else base / p)


def parse_evaluation(name):
    """Split an evaluation name into (kind, args)."""
    if name in _EVAL_NAMES:
        return name, None
    if name.startswith("probe:"):
        attrs = tuple(a.strip() for a in name[len("probe:"):].split(",") if a.strip())
        if attrs:
            return "probe", attrs
    raise UnknownEvaluation(
        f"unknown evaluation {name!r}; expected wer, abx_within, abx_across "
        "or probe:<attr,...>"
    )


def validate_config(path) -> PrivacyConfig:
    """Parse and cross-check a run config; all paths come out absolute."""
    path = Path(path)
    try:
        obj = json.loads(path.read_text("utf-8"))
    except OSError as e:
        raise IoFailure(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise MissingField(f"config {path} is not valid JSON: {e}") from e
    base = path.parent

    seed = check_seed(obj.get("seed", 0))
    evaluations = tuple(obj.get("evaluations", ()))
    parsed = [parse_evaluation(name) for name in evaluations]

    separation = dict(obj.get("separation", {}))
    separation.setdefault("enabled", False)
    separation["separated_audio_dir"] = _resolve(
        base, separation.get("separated_audio_dir")
    )
    if separation["enabled"] and not separation["separated_audio_dir"]:
        raise MissingStageInput(
            "separation.enabled requires separation.separated_audio_dir"
        )
    if separation["separated_audio_dir"] and not Path(
        separation["separated_audio_dir"]
    ).is_dir():
        raise MissingStageInput(
            f"separated_audio_dir {separation['separated_audio_dir']!r} is not a directory"
        )

    recognition = dict(obj.get("recognition", {}))
    recognition["hyp_transcripts"] = _resolve(base, recognition.get("hyp_transcripts"))
    recognition["features_dir"] = _resolve(base, recognition.get("features_dir"))

    discretization = dict(obj.get("discretization", {}))
    discretization.setdefault("enabled", False)
    discretization.setdefault("dedup", False)
    discretization["codebook"] = _resolve(base, discretization.get("codebook"))
    if discretization["enabled"]:
        if bool(discretization["codebook"]) == bool(discretization.get("fit")):
            raise MissingStageInput(
                "discretization.enabled requires exactly one of codebook or fit"
            )
        if discretization["codebook"] and not Path(discretization["codebook"]).exists():
            raise MissingStageInput(
                f"codebook {discretization['codebook']!r} does not exist"
            )

    manifest_path = _resolve(base, obj.get("manifest"))
    manifest = None
    if parsed:
        if manifest_path is None:
            raise MissingStageInput("evaluations are requested but no manifest is set")
        if not Path(manifest_path).exists():
            raise MissingStageInput(f"manifest {manifest_path!r} does not exist")
        manifest = load_manifest(manifest_path)

    abx_section = dict(obj.get("abx", {}))
    abx_section["items"] = _resolve(base, abx_section.get("items"))
    abx_section.setdefault("max_per_cell", 1000)
    probe_section = dict(obj.get("probe", {}))
    probe_section.setdefault("classifier", "softmax")
    probe_section.setdefault("test_fraction", 0.2)

    needs_features = discretization["enabled"] and discretization.get("fit")
    for kind, args in parsed:
        if kind == "wer":
            if not recognition["hyp_transcripts"]:
                raise MissingStageInput("wer needs recognition.hyp_transcripts")
            if not Path(recognition["hyp_transcripts"]).exists():
                raise MissingStageInput(
                    f"hyp_transcripts {recognition['hyp_transcripts']!r} does not exist"
                )
        elif kind in ("abx_within", "abx_across"):
            needs_features = True
            if not abx_section["items"]:
                raise MissingStageInput(f"{kind} needs abx.items")
            if not Path(abx_section["items"]).exists():
                raise MissingStageInput(
                    f"items file {abx_section['items']!r} does not exist"
                )
        elif kind == "probe":
            needs_features = True
            for attr in args:
                missing = [
                    e.utterance_id for e in manifest if attr not in e.labels
                ]
                if missing:
                    raise LabelNotInManifest(
                        f"attribute {attr!r} missing from manifest labels "
                        f"(first offender: {missing[0]!r})"
                    )
    if needs_features and manifest is not None:
        have_entry_paths = all(e.features is not None for e in manifest)
        if not recognition["features_dir"] and not have_entry_paths:
            raise MissingStageInput(
                "features are needed (recognition.features_dir or per-entry "
                "feature paths in the manifest)"
            )

    return PrivacyConfig(
        seed=seed,
        manifest=manifest_path,
        separation=separation,
        recognition=recognition,
        discretization=discretization,
        evaluations=evaluations,
        abx=abx_section,
        probe=probe_section,
        path=str(path),
        raw=obj,
    )


@dataclass
class RunReport:
    tool: dict
    config: dict
    stages: dict
    results: dict
    summary: dict
    timestamps: dict

    def to_json_obj(self):
        return {
            "tool": self.tool,
            "config": self.config,
            "stages": self.stages,
            "results": self.results,
            "summary": self.summary,
            "timestamps": self.timestamps,
        }

    def canonical_bytes(self, strip_timestamps=False):
        obj = self.to_json_obj()
        if strip_timestamps:
            obj = {k: v for k, v in obj.items() if k != "timestamps"}
        return canonical_json_bytes(obj)

    @classmethod
    def from_json_obj(cls, obj):
        return cls(
            tool=obj.get("tool", {}),
            config=obj.get("config", {}),
            stages=obj.get("stages", {}),
            results=obj.get("results", {}),
            summary=obj.get("summary", {}),
            timestamps=obj.get("timestamps", {}),
        )


class _Digests:
    """Per-stage record of consumed file digests (paths relative to the
    run dir when they live under it, else absolute)."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.stages = {}
        self._cache = {}

    def record(self, stage, path):
        path = Path(path)
        key = str(path)
        if key not in self._cache:
            self._cache[key] = sha256_hex(path.read_bytes())
        try:
            label = str(path.relative_to(self.out_dir))
        except ValueError:
            label = str(path)
        self.stages.setdefault(stage, {})[label] = self._cache[key]


def _load_hyps(path):
    hyps = {}
    for lineno, line in enumerate(Path(path).read_text("utf-8").splitlines(), 1):
        if not line.strip():
            continue
        obj = json.loads(line)
        if "utterance_id" not in obj or "transcript" not in obj:
            raise MissingField(
                f"{path} line {lineno}: need utterance_id and transcript"
            )
        if obj["utterance_id"] in hyps:
            raise DuplicateId(f"{path}: duplicate hypothesis for {obj['utterance_id']!r}")
        hyps[obj["utterance_id"]] = obj["transcript"]
    return hyps


def _tag_stage(stage):
    """Decorator-ish helper: re-raise toolkit errors tagged with the stage."""
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and isinstance(exc, VpkError):
                raise type(exc)(f"stage {stage}: {exc}") from exc
            return False

    return _Ctx()


def run(config: PrivacyConfig, out_dir) -> RunReport:
    """Execute the configured stages and evaluations into out_dir.

    Pure function of (input files, config, seed): rerunning writes a
    byte-identical report except for the timestamps block. A lock file
    in out_dir prevents two runs from interleaving.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lock_path = out_dir / ".lock"
    try:
        lock_fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise IoFailure(
            f"run directory {out_dir} is locked by another run (remove "
            f"{lock_path} if that run is dead)"
        ) from None
    try:
        return _run_locked(config, out_dir)
    finally:
        os.close(lock_fd)
        os.unlink(lock_path)


def _run_locked(config, out_dir):
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    digests = _Digests(out_dir)
    manifest = load_manifest(config.manifest) if config.manifest else None
    dis = config.discretization

    feature_cache = {}

    def features_for(utt, stage):
        if utt not in feature_cache:
            entry = manifest[utt] if manifest and utt in manifest else None
            path = entry.features if entry and entry.features else None
            if path is None and config.recognition.get("features_dir"):
                cand = Path(config.recognition["features_dir"]) / f"{utt}.npy"
                if cand.exists():
                    path = str(cand)
            if path is None:
                raise MissingStageInput(f"no feature file for utterance {utt!r}")
            feature_cache[utt] = (read_features(path), path)
        fs, path = feature_cache[utt]
        digests.record(stage, path)
        sidecar = Path(path).with_suffix(".meta.json")
        if sidecar.exists():
            digests.record(stage, sidecar)
        return fs

    results = {}
    summary_rows = []

    codebook = None
    unit_cache = {}

    def units_for(utt, stage):
        fs = features_for(utt, "discretization")
        if utt not in unit_cache:
            unit_cache[utt] = assign(codebook, fs, dedup=dis["dedup"])
        # the consuming stage sees the unit stream, not raw features
        digests.record(stage, out_dir / "units.txt")
        return unit_cache[utt], fs.frame_rate_hz

    if dis["enabled"]:
        with _tag_stage("discretization"):
            if dis["codebook"]:
                codebook = load_codebook(dis["codebook"])
                for name in ("centroids.npy", "centroids.meta.json", "codebook.json"):
                    p = Path(dis["codebook"]) / name
                    if p.exists():
                        digests.record("discretization", p)
            else:
                fit_spec = dict(dis["fit"])
                if manifest is None:
                    raise MissingStageInput("discretization.fit needs a manifest")
                pooled = []
                for e in manifest:
                    pooled.append(features_for(e.utterance_id, "discretization").frames)
                codebook = fit_kmeans(
                    np.concatenate(pooled, axis=0),
                    k=int(fit_spec.get("k", 50)),
                    seed=derive_seed(config.seed, "discretization"),
                    max_iters=int(fit_spec.get("max_iters", 100)),
                    tol=float(fit_spec.get("tol", 1e-4)),
                )
                save_codebook(codebook, out_dir / "codebook")
            all_units = [
                assign(codebook, features_for(e.utterance_id, "discretization"),
                       dedup=dis["dedup"])
                for e in manifest
            ]
            unit_cache.update({u.utterance_id: u for u in all_units})
            write_units(all_units, out_dir / "units.txt")
            results["discretization"] = {
                "k": codebook.k,
                "feature_dim": codebook.feature_dim,
                "dedup": dis["dedup"],
                "training_meta": codebook.training_meta,
            }

    for name in config.evaluations:
        kind, args = parse_evaluation(name)
        if kind == "wer":
            with _tag_stage("wer"):
                digests.record("wer", config.manifest)
                digests.record("wer", config.recognition["hyp_transcripts"])
                hyps = _load_hyps(config.recognition["hyp_transcripts"])
                pairs = []
                for e in manifest:
                    if e.transcript is None:
                        continue
                    pairs.append(
                        (tokenize(e.transcript), tokenize(hyps.get(e.utterance_id, "")))
                    )
                b = corpus_wer(pairs)
                results["wer"] = {
                    "wer": b.wer,
                    "substitutions": b.substitutions,
                    "deletions": b.deletions,
                    "insertions": b.insertions,
                    "ref_words": b.ref_word_count,
                    "n_utterances": len(pairs),
                }
                summary_rows.append(
                    {"metric": "wer", "kind": "utility", "value": b.wer}
                )
        elif kind in ("abx_within", "abx_across"):
            condition = kind.split("_", 1)[1]
            with _tag_stage(kind):
                digests.record(kind, config.abx["items"])
                items = read_items(config.abx["items"])
                feats = {}
                for utt in sorted({it.utterance_id for it in items}):
                    if dis["enabled"]:
                        us, rate = units_for(utt, kind)
                        feats[utt] = units_to_features(us, frame_rate_hz=rate)
                    else:
                        feats[utt] = features_for(utt, kind)
                score = abx_error(
                    items,
                    feats,
                    condition,
                    max_triples_per_cell=int(config.abx["max_per_cell"]),
                    seed=derive_seed(config.seed, "abx", condition),
                )
                results[kind] = {
                    "error_rate": score.error_rate,
                    "n_triples": score.n_triples,
                    "n_cells": score.n_cells,
                    "condition": score.condition,
                }
                summary_rows.append(
                    {"metric": kind, "kind": "utility", "value": score.error_rate}
                )
        elif kind == "probe":
            for attr in args:
                stage = f"probe:{attr}"
                with _tag_stage(stage):
                    digests.record(stage, config.manifest)
                    rows = []
                    labels = []
                    for e in manifest:
                        if dis["enabled"]:
                            us, _ = units_for(e.utterance_id, stage)
                            rows.append(pool_units(us))
                            pooling_id = "unit-histogram"
                        else:
                            rows.append(
                                pool_continuous(features_for(e.utterance_id, stage))
                            )
                            pooling_id = "frame-mean"
                        labels.append(e.labels[attr])
                    class_names = tuple(sorted(set(labels)))
                    y = np.array([class_names.index(v) for v in labels])
                    mask = split_stratified(
                        y,
                        float(config.probe["test_fraction"]),
                        derive_seed(config.seed, "probe", attr),
                    )
                    ds = ProbeDataset(
                        X=np.vstack(rows),
                        y=y,
                        attribute_name=attr,
                        class_names=class_names,
                        test_mask=mask,
                        pooling_id=pooling_id,
                    )
                    if config.probe["classifier"] == "knn":
                        clf = train_knn(
                            ds, n_neighbors=int(config.probe.get("n_neighbors", 5))
                        )
                    else:
                        clf = train_softmax(
                            ds,
                            l2=float(config.probe.get("l2", 1e-3)),
                            epochs=int(config.probe.get("epochs", 500)),
                            lr=float(config.probe.get("lr", 0.1)),
                            seed=derive_seed(config.seed, "probe-train", attr),
                        )
                    report = evaluate(clf, ds)
                    results.setdefault("probe", {})[attr] = report.to_json_obj()
                    summary_rows.append(
                        {
                            "metric": f"probe:{attr}",
                            "kind": "privacy",
                            "value": report.accuracy,
                            "random_guess": report.random_guess,
                            "majority_baseline": report.majority_baseline,
                            "points_over_chance": (
                                report.accuracy - report.random_guess
                            )
                            * 100.0,
                        }
                    )

    finished = _dt.datetime.now(_dt.timezone.utc).isoformat()
    report = RunReport(
        tool={"name": "vpk", "version": __version__},
        config={
            "seed": config.seed,
            "manifest": config.manifest,
            "separation": config.separation,
            "recognition": config.recognition,
            "discretization": {
                k: v for k, v in config.discretization.items()
            },
            "evaluations": list(config.evaluations),
            "abx": config.abx,
            "probe": config.probe,
        },
        stages=digests.stages,
        results=results,
        summary={"rows": summary_rows},
        timestamps={"started_utc": started, "finished_utc": finished},
    )
    (out_dir / "report.json").write_bytes(report.canonical_bytes() + b"\n")
    from .report import render_report

    (out_dir / "report.txt").write_text(render_report(report, "table"), "utf-8")
    return report
