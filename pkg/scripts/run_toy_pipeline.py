#!/usr/bin/env python3
"""Run the full toy pipeline twice and confirm the reports match byte for byte.

Synthesizes a small corpus, trains the dual encoder for a few epochs, scores
the test split, and emits report.md / metrics.tsv under --out. The second run
goes to a sibling directory with the same seed; any byte difference between
the two reports is a reproducibility bug.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from hazardbench.pipeline import RunConfig, run_pipeline


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("toy_run"))
    ap.add_argument("--seed", type=int, default=13)
    ap.add_argument("--epochs", type=int, default=3)
    ap.add_argument("--train", type=int, default=32)
    args = ap.parse_args()

    results = []
    for tag in ("a", "b"):
        cfg = RunConfig(
            corpus_root=args.out / tag / "corpus",
            out_dir=args.out / tag / "out",
            seed=args.seed,
            synth={"train": args.train, "val": 8, "test": 8},
            retrieval={"epochs": args.epochs, "batch_size": 8},
        )
        result = run_pipeline(cfg)
        results.append(result)
        tr = result.retrieval["TR"]
        print(f"run {tag}: config {result.config_hash}  mean_rank {tr.mean_rank:.3f}  "
              f"R@1 {tr.recall_at[1]:.3f}  report {result.report_md}")

    a = (args.out / "a" / "out" / "report.md").read_bytes()
    b = (args.out / "b" / "out" / "report.md").read_bytes()
    if a != b:
        print("reports differ between identical runs", file=sys.stderr)
        return 3
    print(f"reports are byte-identical ({len(a)} bytes)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
