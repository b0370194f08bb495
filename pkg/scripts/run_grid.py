"""Train, parse and score the five parser variants over a range of seeds.

    python scripts/run_grid.py --train data/mini/train.conllu --dev data/mini/dev.conllu \
        --out runs --seeds 10 --epochs 50 --jobs 4

Each variant lands in OUT/<variant>/seed-N/. Dev parses go to OUT/<variant>/parsed/ and
the comparison of every variant against the plain baseline to OUT/report-<variant>/.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from nucparse.cli import main as nucparse

VARIANTS = ("none", "hard", "soft", "gen", "oracle")


def run(argv: list[str]) -> None:
    code = nucparse(argv)
    if code:
        sys.exit(code)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--train", required=True)
    ap.add_argument("--dev", required=True)
    ap.add_argument("--out", required=True, type=Path)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--epochs", type=int, default=50)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--variants", nargs="+", default=list(VARIANTS), choices=VARIANTS)
    args = ap.parse_args()

    for variant in args.variants:
        root = args.out / variant
        run(["train", args.train, "--dev", args.dev, "--out", str(root), "--mode", variant,
             "--seeds", str(args.seeds), "--epochs", str(args.epochs), "--jobs", str(args.jobs)])
        parsed = root / "parsed"
        parsed.mkdir(parents=True, exist_ok=True)
        for seed in range(args.seeds):
            run(["parse", str(root / f"seed-{seed}" / "model.ckpt"), args.dev,
                 str(parsed / f"seed-{seed}.conllu"), "--jobs", str(args.jobs)])

    base = args.out / "none" / "parsed"
    for variant in args.variants:
        cmd = ["eval", args.dev, str(args.out / variant / "parsed"), "--out-dir", str(args.out / f"report-{variant}")]
        if variant != "none" and base.exists():
            cmd += ["--baseline", str(base)]
        run(cmd)


if __name__ == "__main__":
    main()
