"""Parameter sweep over the five scenario axes (29 points x N runs).

Writes per-episode rows and the aggregated table as CSV and prints the table.

    python3 scripts/experiment1.py --runs 20 --out out/exp1
"""

import argparse
import os
import sys
import time

from onss.engine import EngineConfig
from onss.harness import output_dir, default_sweep, run_batch


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--base-seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default=os.path.join(output_dir(), "exp1"))
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    sweep = default_sweep()
    total = len(sweep) * args.runs
    done = [0]
    t0 = time.perf_counter()

    def progress(row):
        done[0] += 1
        if done[0] % 20 == 0 or done[0] == total:
            print(f"{done[0]}/{total} episodes, {time.perf_counter() - t0:.0f}s", file=sys.stderr)

    res = run_batch(sweep, args.runs, args.base_seed, EngineConfig(), jobs=args.jobs, progress=progress)
    with open(os.path.join(args.out, "episodes.csv"), "w") as fh:
        fh.write(res.to_csv())
    with open(os.path.join(args.out, "table.csv"), "w") as fh:
        fh.write(res.table.to_csv())
    print(res.table.to_csv(), end="")
    viol = sum(r.violations for r in res.episodes)
    print(f"# generation errors {res.generation_errors}, CR violations {viol}", file=sys.stderr)


if __name__ == "__main__":
    main()
