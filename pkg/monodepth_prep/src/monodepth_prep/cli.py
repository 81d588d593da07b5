"""CLI: glob images in, 16-bit inverse-depth PNGs out."""

from __future__ import annotations

import argparse
import glob
import sys
from pathlib import Path

from .backends import DEFAULT_MODEL, HF_MODEL_IDS
from .prep import PrepJob, prep


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="monodepth-prep", description=__doc__)
    parser.add_argument("inputs", nargs="+", help="image paths or globs")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument(
        "--model",
        default=DEFAULT_MODEL,
        help=f"model id: {', '.join(sorted(HF_MODEL_IDS))}, or 'luma' (no-model stand-in)",
    )
    parser.add_argument("--device", default="cpu", help="torch device for model backends")
    args = parser.parse_args(argv)

    paths = []
    for pattern in args.inputs:
        matched = sorted(glob.glob(pattern))
        paths.extend(matched if matched else [pattern])
    if not paths:
        print("no inputs matched", file=sys.stderr)
        return 1

    summary = prep(PrepJob(inputs=tuple(paths), output_dir=Path(args.out),
                           model=args.model, device=args.device))
    print(summary)
    return 0 if not summary.failed else 1


if __name__ == "__main__":
    sys.exit(main())
