"""Whole-domain transferability: target error of an ELM trained on each source machine.

Needs the relative density CSVs (see pareto_tl.tasks for the layout). Each
source/target pair is scaled jointly before fitting, as in the selection runs.
"""

import argparse
import os

from pareto_tl.distances import ModelDistanceConfig, base_transferability_score
from pareto_tl.evaluation import scale_domains
from pareto_tl.tasks import DATA_ENV, MACHINES, SOURCE_MACHINES, load_dataset


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data-dir", default=os.environ.get(DATA_ENV))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not args.data_dir:
        raise SystemExit(f"pass --data-dir or set {DATA_ENV}")
    cfg = ModelDistanceConfig(seed=args.seed)
    for tgt_key in ("slm", "concept_laser_m3"):
        target = load_dataset(args.data_dir, tgt_key)
        for src_key in SOURCE_MACHINES:
            (source,), scaled_target, _ = scale_domains([load_dataset(args.data_dir, src_key)], target)
            score = base_transferability_score(source, scaled_target, cfg)
            print(f"{MACHINES[tgt_key]:18} <- {MACHINES[src_key]:18} {score:.4f}")


if __name__ == "__main__":
    main()
