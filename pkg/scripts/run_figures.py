"""Write the figure-data pack and print the file list with hashes.

usage: python3 scripts/run_figures.py [out_dir] [--seed N] [--workers K] [--only name ...]
"""
from __future__ import annotations

import argparse
from pathlib import Path

from cqednet import io
from cqednet.figures import FIGURES, figure_pack


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out", nargs="?", default="figure_data")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--only", nargs="*", choices=[n for n, _ in FIGURES])
    args = ap.parse_args()
    out = Path(args.out)
    for f in figure_pack(out, args.seed, args.workers, args.only):
        print(f"{io.sha256(f)[:12]}  {f.relative_to(out)}")


if __name__ == "__main__":
    main()
