"""Command-line entry point.

Subcommands mirror the toolkit stages (mix, wer, abx, quantize, probe)
plus run/report for config-driven pipelines and validate for checking
artifact directories against the file contracts. Machine output is JSON
on stdout; diagnostics go to stderr. Exit codes: 0 success, 1 toolkit
error, 2 usage error.
"""

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .abx import abx_error, read_items
from .errors import VpkError
from .features import read_features, sidecar_path
from .manifest import load_manifest
from .mixer import MixSpec, build_corpus
from .pipeline import RunReport, run, validate_config
from .probe import (
    ProbeDataset,
    evaluate,
    leakage_delta,
    pool_continuous,
    pool_units,
    split_stratified,
    train_knn,
    train_softmax,
)
from .quantizer import assign, fit_kmeans, load_codebook, save_codebook
from .report import render_report
from .units import read_units, write_units
from .wer import corpus_wer, tokenize
from .audio import read_wav
from .abx import units_to_features


def _print_json(obj):
    print(json.dumps(obj, sort_keys=True, indent=2))


def _load_feature_dir(dir_path, utterance_ids):
    feats = {}
    for utt in utterance_ids:
        feats[utt] = read_features(Path(dir_path) / f"{utt}.npy")
    return feats


def _cmd_mix(args):
    clean = load_manifest(args.clean)
    noise = load_manifest(args.noise) if args.noise else None
    spec = MixSpec.from_condition(
        args.condition,
        snr_db=args.snr,
        seed=args.seed,
        overlap_ratio=args.overlap,
        gap_s=args.gap,
    )
    out = build_corpus(clean, noise, spec, args.out)
    print(str(Path(args.out) / "mixtures.jsonl"))
    print(f"wrote {len(out)} mixtures", file=sys.stderr)
    return 0


def _cmd_wer(args):
    refs = load_manifest(args.ref)
    hyps = {}
    for line in Path(args.hyp).read_text("utf-8").splitlines():
        if line.strip():
            obj = json.loads(line)
            hyps[obj["utterance_id"]] = obj.get("transcript", "")
    pairs = []
    per_utt = []
    for e in refs:
        if e.transcript is None:
            continue
        ref_t = tokenize(e.transcript)
        hyp_t = tokenize(hyps.get(e.utterance_id, ""))
        pairs.append((ref_t, hyp_t))
        if args.per_utt:
            from .wer import align

            b = align(ref_t, hyp_t)
            per_utt.append({"utterance_id": e.utterance_id, **b._asdict()})
    pooled = corpus_wer(pairs)
    out = {
        "wer": pooled.wer,
        "substitutions": pooled.substitutions,
        "deletions": pooled.deletions,
        "insertions": pooled.insertions,
        "ref_words": pooled.ref_word_count,
    }
    if args.per_utt:
        out["per_utterance"] = per_utt
    _print_json(out)
    return 0


def _cmd_abx(args):
    items = read_items(args.items)
    utts = sorted({it.utterance_id for it in items})
    if args.units:
        sequences = read_units(args.units, k=args.k)
        by_id = {u.utterance_id: u for u in sequences}
        feats = {}
        for utt in utts:
            # one-hot encode so units score under the same frame metric
            feats[utt] = units_to_features(by_id[utt], frame_rate_hz=args.frame_rate)
    else:
        feats = _load_feature_dir(args.features, utts)
    score = abx_error(
        items,
        feats,
        args.condition,
        max_triples_per_cell=args.max_per_cell,
        seed=args.seed,
    )
    _print_json(
        {
            "error_rate": score.error_rate,
            "n_cells": score.n_cells,
            "n_triples": score.n_triples,
            "condition": score.condition,
        }
    )
    return 0


def _pooled_frames(args):
    src = Path(args.features)
    if src.is_dir():
        paths = sorted(src.glob("*.npy"))
    else:
        manifest = load_manifest(src)
        paths = [Path(e.features) for e in manifest if e.features]
    if not paths:
        raise VpkError(f"no feature files under {src}")
    return np.concatenate([read_features(p).frames for p in paths], axis=0)


def _cmd_quantize_fit(args):
    frames = _pooled_frames(args)
    cb = fit_kmeans(
        frames,
        k=args.k,
        seed=args.seed,
        max_iters=args.max_iters,
        tol=args.tol,
        max_frames=args.max_frames,
    )
    save_codebook(cb, args.out)
    _print_json(
        {
            "k": cb.k,
            "feature_dim": cb.feature_dim,
            "n_frames": cb.training_meta["n_frames"],
            "n_iterations": cb.training_meta["n_iterations"],
            "final_inertia": cb.training_meta["final_inertia"],
            "out": str(args.out),
        }
    )
    return 0


def _cmd_quantize_assign(args):
    cb = load_codebook(args.codebook)
    src = Path(args.features)
    paths = sorted(src.glob("*.npy")) if src.is_dir() else [src]
    sequences = [assign(cb, read_features(p), dedup=args.dedup) for p in paths]
    write_units(sequences, args.out)
    print(f"wrote {len(sequences)} unit sequences to {args.out}", file=sys.stderr)
    return 0


def _cmd_probe(args):
    manifest = load_manifest(args.manifest)
    rows = []
    labels = []
    for e in manifest:
        if args.attribute not in e.labels:
            raise VpkError(
                f"attribute {args.attribute!r} missing for {e.utterance_id!r}"
            )
        labels.append(e.labels[args.attribute])
        if args.units:
            by_id = {u.utterance_id: u for u in read_units(args.units, k=args.k)}
            rows.append(pool_units(by_id[e.utterance_id]))
            pooling = "unit-histogram"
        else:
            rows.append(pool_continuous(read_features(Path(args.features) / f"{e.utterance_id}.npy")))
            pooling = "frame-mean"
    class_names = tuple(sorted(set(labels)))
    y = np.array([class_names.index(v) for v in labels])
    mask = split_stratified(y, args.test_fraction, args.seed)
    ds = ProbeDataset(
        X=np.vstack(rows),
        y=y,
        attribute_name=args.attribute,
        class_names=class_names,
        test_mask=mask,
        pooling_id=pooling,
    )
    if args.classifier == "knn":
        clf = train_knn(ds, n_neighbors=args.n_neighbors)
    else:
        clf = train_softmax(ds, l2=args.l2, epochs=args.epochs, lr=args.lr,
                            seed=args.seed)
    _print_json(evaluate(clf, ds).to_json_obj())
    return 0


def _cmd_probe_compare(args):
    from .probe import ProbeReport

    def _load(p):
        obj = json.loads(Path(p).read_text("utf-8"))
        return ProbeReport(**{k: obj[k] for k in (
            "attribute_name", "accuracy", "random_guess", "majority_baseline",
            "n_test", "classifier_id", "pooling_id")})

    before = _load(args.before)
    after = _load(args.after)
    _print_json(
        {
            "attribute": before.attribute_name,
            "before": before.accuracy,
            "after": after.accuracy,
            "delta_points": leakage_delta(before, after),
        }
    )
    return 0


def _cmd_run(args):
    config = validate_config(args.config)
    report = run(config, args.out)
    failed = [n for n in config.evaluations if _eval_missing(report, n)]
    print(str(Path(args.out) / "report.json"))
    return 1 if failed else 0


def _eval_missing(report, name):
    results = report.results
    if name.startswith("probe:"):
        attrs = name[len("probe:"):].split(",")
        return any(a.strip() not in results.get("probe", {}) for a in attrs)
    return name not in results


def _cmd_report(args):
    report_path = Path(args.run_dir) / "report.json"
    report = RunReport.from_json_obj(json.loads(report_path.read_text("utf-8")))
    rendered = render_report(report, args.format)
    if args.format == "svg":
        if not rendered:
            print("no plottable series in this report", file=sys.stderr)
        for name, content in rendered.items():
            out = Path(args.run_dir) / name
            out.write_text(content, "utf-8")
            print(str(out))
        return 0
    print(rendered, end="")
    return 0


def _looks_like_hyp_file(path):
    """Hypothesis transcripts share the .jsonl extension with manifests;
    tell them apart by the first record's fields."""
    for line in path.read_text("utf-8").splitlines():
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            return False
        return (
            isinstance(obj, dict)
            and "utterance_id" in obj
            and "transcript" in obj
            and "speaker_id" not in obj
            and "duration_s" not in obj
        )
    return False


def _validate_hyp_file(path):
    from .errors import MissingField

    seen = set()
    for lineno, line in enumerate(path.read_text("utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise MissingField(f"line {lineno}: not valid JSON: {e}") from e
        for key in ("utterance_id", "transcript"):
            if not isinstance(obj.get(key), str):
                raise MissingField(f"line {lineno}: missing or non-string {key!r}")
        if obj["utterance_id"] in seen:
            from .errors import DuplicateId

            raise DuplicateId(f"line {lineno}: repeated {obj['utterance_id']!r}")
        seen.add(obj["utterance_id"])


def _cmd_validate(args):
    """Check every recognizable artifact under a directory against its
    file contract; exit 1 on any error, report warnings separately."""
    root = Path(args.dir)
    n_ok = 0
    errors = []
    warned = []
    for path in sorted(root.rglob("*")):
        if not path.is_file():
            continue
        rel = str(path.relative_to(root))
        try:
            if path.suffix == ".npy":
                if path.name == "centroids.npy" and (path.parent / "codebook.json").exists():
                    load_codebook(path.parent)
                else:
                    with warnings.catch_warnings(record=True) as caught:
                        warnings.simplefilter("always")
                        read_features(path)
                    warned.extend(f"{rel}: {w.message}" for w in caught)
                    if not sidecar_path(path).exists():
                        warned.append(f"{rel}: no frame-rate sidecar, 100 Hz assumed")
            elif path.suffix == ".wav":
                read_wav(path)
            elif path.suffix == ".jsonl":
                if _looks_like_hyp_file(path):
                    _validate_hyp_file(path)
                else:
                    load_manifest(path)
            elif path.suffix == ".item":
                read_items(path)
            else:
                continue
            n_ok += 1
        except VpkError as e:
            errors.append(f"{rel}: {type(e).__name__}: {e}")
    for msg in warned:
        print(f"warning: {msg}", file=sys.stderr)
    for msg in errors:
        print(f"error: {msg}", file=sys.stderr)
    print(
        json.dumps(
            {"checked": n_ok + len(errors), "errors": len(errors),
             "warnings": len(warned)}
        )
    )
    return 1 if errors else 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="vpk",
        description="speech-privacy evaluation toolkit",
    )
    p.add_argument("--version", action="version", version=f"vpk {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("mix", help="synthesize an overlapped/noisy corpus")
    sp.add_argument("--clean", required=True, help="clean-utterance manifest")
    sp.add_argument("--noise", help="noise manifest (needed with --snr)")
    sp.add_argument("--condition", required=True,
                    help="0L | 0S | ov10 | ov20 | ov30 | ov40 | custom")
    sp.add_argument("--snr", type=float, help="target SNR in dB")
    sp.add_argument("--overlap", type=float, help="overlap ratio (custom only)")
    sp.add_argument("--gap", type=float, help="silence gap seconds (custom only)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_mix)

    sp = sub.add_parser("wer", help="score hypotheses against a manifest")
    sp.add_argument("--ref", required=True, help="manifest with transcripts")
    sp.add_argument("--hyp", required=True,
                    help="jsonl of {utterance_id, transcript}")
    sp.add_argument("--per-utt", action="store_true", dest="per_utt")
    sp.set_defaults(func=_cmd_wer)

    sp = sub.add_parser("abx", help="ABX phoneme discriminability")
    sp.add_argument("--features", help="directory of <utterance_id>.npy")
    sp.add_argument("--items", required=True)
    sp.add_argument("--condition", required=True, choices=("within", "across"))
    sp.add_argument("--max-per-cell", type=int, default=1000, dest="max_per_cell")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--units", help="unit file (scores the discretized system)")
    sp.add_argument("--k", type=int, help="codebook size for --units")
    sp.add_argument("--frame-rate", type=float, default=100.0, dest="frame_rate",
                    help="frame rate of the units (must match the item times)")
    sp.set_defaults(func=_cmd_abx)

    sp = sub.add_parser("quantize", help="fit or apply a codebook")
    qsub = sp.add_subparsers(dest="quantize_command", required=True)
    qf = qsub.add_parser("fit")
    qf.add_argument("--features", required=True, help="feature dir or manifest")
    qf.add_argument("--k", type=int, default=50)
    qf.add_argument("--seed", type=int, default=0)
    qf.add_argument("--max-iters", type=int, default=100, dest="max_iters")
    qf.add_argument("--tol", type=float, default=1e-4)
    qf.add_argument("--max-frames", type=int, default=2_000_000, dest="max_frames")
    qf.add_argument("--out", required=True)
    qf.set_defaults(func=_cmd_quantize_fit)
    qa = qsub.add_parser("assign")
    qa.add_argument("--codebook", required=True)
    qa.add_argument("--features", required=True)
    qa.add_argument("--dedup", action="store_true")
    qa.add_argument("--out", required=True)
    qa.set_defaults(func=_cmd_quantize_assign)

    sp = sub.add_parser("probe", help="attribute-leakage probe")
    psub = sp.add_subparsers(dest="probe_command")
    pc = psub.add_parser("compare", help="leakage delta between two reports")
    pc.add_argument("--before", required=True)
    pc.add_argument("--after", required=True)
    # separate dest: parent and child set_defaults on one name can collide
    pc.set_defaults(probe_func=_cmd_probe_compare)
    sp.add_argument("--features", help="directory of <utterance_id>.npy")
    sp.add_argument("--units", help="unit file")
    sp.add_argument("--k", type=int, help="codebook size for --units")
    sp.add_argument("--manifest", help="manifest with labels")
    sp.add_argument("--attribute")
    sp.add_argument("--classifier", choices=("softmax", "knn"), default="softmax")
    sp.add_argument("--test-fraction", type=float, default=0.2, dest="test_fraction")
    sp.add_argument("--lr", type=float, default=0.1)
    sp.add_argument("--epochs", type=int, default=500)
    sp.add_argument("--l2", type=float, default=1e-3)
    sp.add_argument("--n-neighbors", type=int, default=5, dest="n_neighbors")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=_cmd_probe)

    sp = sub.add_parser("run", help="execute a config-driven pipeline")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_run)

    sp = sub.add_parser("report", help="render a finished run")
    sp.add_argument("run_dir")
    sp.add_argument("--format", choices=("table", "json", "svg"), default="table")
    sp.set_defaults(func=_cmd_report)

    sp = sub.add_parser("validate", help="check artifacts against file contracts")
    sp.add_argument("dir")
    sp.set_defaults(func=_cmd_validate)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    func = getattr(args, "probe_func", None) or args.func
    if func is _cmd_probe:
        for name in ("manifest", "attribute"):
            if getattr(args, name) is None:
                parser.error(f"probe requires --{name}")
        if not args.features and not args.units:
            parser.error("probe requires --features or --units")
    try:
        return func(args)
    except VpkError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
