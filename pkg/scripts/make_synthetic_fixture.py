"""Regenerate data/synthetic/{source,target}.csv (60 source rows, 9 target rows, seed 0)."""

import argparse

from pareto_tl.synthetic import FIXTURE_DIR, write_fixture

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(FIXTURE_DIR))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for path in write_fixture(args.out, seed=args.seed):
        print(f"wrote {path}")
