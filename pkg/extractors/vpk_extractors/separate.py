"""Write per-source wavs for every manifest row.

Mixture rows (those carrying a `sources` list) are separated with the
oracle backend: each source's reference file is placed at its onset in
a mixture-length buffer and scaled by the recorded normalization gain,
standing in for a neural separator with the same output contract. Rows
without sources are treated as already-clean audio and pass through as
src0 unchanged.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .audio_io import RATE, read_wav, write_wav
from .errors import AudioDecodeFailure, ExtractorError
from .manifest_io import load_rows, resolve


def _separate_mixture(row, base, out):
    mix_path = resolve(base, row.get("mixture_path") or row.get("audio") or "")
    try:
        n = len(read_wav(mix_path))
    except AudioDecodeFailure:
        n = int(round(float(row["duration_s"]) * RATE))
    gain = float(row.get("normalization_gain", 1.0))
    written = []
    for i, src in enumerate(row["sources"]):
        ref = read_wav(resolve(base, src["path"]))
        buf = np.zeros(n, np.float64)
        onset = int(round(float(src["onset_s"]) * RATE))
        buf[onset : onset + len(ref)] = ref[: max(0, n - onset)]
        path = out / f"{row['mixture_id']}.src{i}.wav"
        write_wav(buf * gain, path, encoding="float32")
        written.append(path)
    return written


def _passthrough(row, base, out):
    if not row.get("audio"):
        raise AudioDecodeFailure(
            f"manifest row {row['utterance_id']!r} has no audio path"
        )
    samples = read_wav(resolve(base, row["audio"]))
    path = out / f"{row['utterance_id']}.src0.wav"
    write_wav(samples, path, encoding="float32")
    return [path]


def separate(manifest, out_dir):
    rows = load_rows(manifest)
    base = Path(manifest).parent
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for row in rows:
        if row.get("sources"):
            written.extend(_separate_mixture(row, base, out))
        else:
            written.extend(_passthrough(row, base, out))
    return written


def main(argv=None):
    p = argparse.ArgumentParser(description="split manifest audio into source wavs")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    args = p.parse_args(argv)
    try:
        written = separate(args.manifest, args.out)
    except ExtractorError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    print(json.dumps({"written": len(written), "out": args.out}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
