"""Run every scenario under scenarios/ and print a one-line summary each."""

from __future__ import annotations

import argparse
import time
from pathlib import Path

from reconfcheck.pipeline import run_check
from reconfcheck.scenario import load

ROOT = Path(__file__).resolve().parent.parent / "scenarios"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("groups", nargs="*", default=["basic", "suite", "tipping", "overload"])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print(f"{'scenario':28s} {'exit':>4s} {'iters':>6s} {'stability':>10s} {'max util':>9s} {'rel err':>9s} {'time':>6s}")
    for group in args.groups:
        for path in sorted((ROOT / group).glob("*.yaml")):
            t0 = time.perf_counter()
            out = run_check(load(path), seed=args.seed, verify=True)
            r = out.report
            mu = r.overload["max_utilization"]
            err = r.verify.get("relative_error", float("nan"))
            verdict = r.stability["verdict"] + ("*" if r.stability["marginal_flag"] else "")
            print(f"{group + '/' + path.stem:28s} {r.exit_code:4d} {r.iterations:6d} {verdict:>10s} "
                  f"{'-' if mu is None else f'{mu:.4f}':>9s} {err:9.1e} {time.perf_counter() - t0:5.1f}s")


if __name__ == "__main__":
    main()
