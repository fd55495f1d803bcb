"""Run an encoder over every manifest utterance and write feature files,
or (for the transcript model) a hypothesis file."""

import argparse
import json
import sys
from pathlib import Path

from .audio_io import read_wav
from .errors import AudioDecodeFailure, ExtractorError
from .features_io import write_features
from .manifest_io import load_rows, resolve
from .models import TRANSCRIPT_MODELS, ExtractorJob, resolve_feature_model


def extract_features(job: ExtractorJob):
    model = resolve_feature_model(job.model_id)
    rows = load_rows(job.manifest)
    base = Path(job.manifest).parent
    out = Path(job.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for row in rows:
        if not row.get("audio"):
            raise AudioDecodeFailure(
                f"manifest row {row['utterance_id']!r} has no audio path"
            )
        samples = read_wav(resolve(base, row["audio"]))
        frames = model.fn(samples)
        written.append(
            write_features(frames, model.frame_rate_hz, out / f"{row['utterance_id']}.npy")
        )
    return written


def extract_transcripts(job: ExtractorJob):
    rows = load_rows(job.manifest)
    out = Path(job.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "hyps.jsonl"
    lines = [
        json.dumps(
            {
                "utterance_id": row["utterance_id"],
                "transcript": row.get("transcript") or "",
            },
            sort_keys=True,
        )
        for row in rows
    ]
    path.write_text("\n".join(lines) + "\n", "utf-8")
    return [path]


def run_job(job: ExtractorJob):
    if job.model_id in TRANSCRIPT_MODELS:
        return extract_transcripts(job)
    return extract_features(job)


def main(argv=None):
    p = argparse.ArgumentParser(
        description="extract features or transcripts from a manifest"
    )
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--device", default="cpu")
    args = p.parse_args(argv)
    job = ExtractorJob(args.model, args.manifest, args.out, args.device)
    try:
        written = run_job(job)
    except ExtractorError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    print(json.dumps({"model": args.model, "written": len(written), "out": args.out}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
