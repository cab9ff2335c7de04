"""Counting-scheme error against the chain adversary over a (k, n) grid,
next to the Hoeffding bound and the Bayesian floor."""

import argparse
import csv
import sys
from dataclasses import dataclass

from robagg.many_experts import bayesian_floor, counting_scheme_error


@dataclass
class Config:
    ks: str = "2,3,5,8"
    ns: str = "500,1000,5000,20000"
    trials: int = 2000
    seed: int = 0
    workers: int = 1
    out: str = "many_experts_sweep.csv"


def main(argv=None) -> int:
    cfg = Config()
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--ks", default=cfg.ks)
    p.add_argument("--ns", default=cfg.ns)
    p.add_argument("--trials", type=int, default=cfg.trials)
    p.add_argument("--seed", type=int, default=cfg.seed)
    p.add_argument("--workers", type=int, default=cfg.workers)
    p.add_argument("--out", default=cfg.out)
    cfg = Config(**vars(p.parse_args(argv)))

    rows = []
    for k in (int(v) for v in cfg.ks.split(",")):
        floor = bayesian_floor(k)
        for n in (int(v) for v in cfg.ns.split(",")):
            res = counting_scheme_error(k, n, cfg.trials, cfg.seed + 1000 * k + n, workers=cfg.workers)
            row = {"k": k, "n": n, "floor": floor, **res.to_dict()}
            rows.append(row)
            print(f"k={k:<3} n={n:<6} error={res.error_rate:.4f} bound={res.bound:.4f} floor={floor:.4f}")
    with open(cfg.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
