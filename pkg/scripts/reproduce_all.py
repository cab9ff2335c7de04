"""Recompute every headline constant and write the comparison table as CSV."""

import argparse
import csv
import sys
from dataclasses import asdict, dataclass

from robagg.reproduce import GROUPS, reproduce


@dataclass
class Config:
    blackwell_grid: int = 400
    ci_grid: int = 200
    seed: int = 0
    out: str = "reproduce.csv"


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__)
    for name, default in asdict(Config()).items():
        p.add_argument("--" + name.replace("_", "-"), type=type(default), default=default)
    p.add_argument("--only", help="comma-separated groups: " + ", ".join(GROUPS))
    args = p.parse_args(argv)
    cfg = Config(args.blackwell_grid, args.ci_grid, args.seed, args.out)
    only = args.only.split(",") if args.only else None
    rows = reproduce(only, blackwell_grid=cfg.blackwell_grid, ci_grid=cfg.ci_grid, seed=cfg.seed)
    with open(cfg.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0].to_dict()))
        w.writeheader()
        for r in rows:
            w.writerow(r.to_dict())
    for r in rows:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.group:<11} {r.quantity}")
    return 0 if all(r.passed for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
