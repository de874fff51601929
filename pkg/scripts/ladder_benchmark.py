#!/usr/bin/env python3
"""Time RC ladders of growing size; writes a CSV of build, first-step and per-step times."""
import argparse
import csv
import sys
import time
from fractions import Fraction

from vwsim.circuits import rc_ladder
from vwsim.engine import SimConfig, init_simulation, run_transient, step_once
from vwsim.pipeline import compile_netlist, parse_netlist


def bench(sections: int, steps: int) -> dict:
    t0 = time.perf_counter()
    _, sys_ = compile_netlist(parse_netlist(rc_ladder(sections)))
    t1 = time.perf_counter()
    h = Fraction(1, 10000)
    st = init_simulation(sys_, SimConfig(h, h * (steps + 1)))
    step_once(st)  # includes the one factorization
    t2 = time.perf_counter()
    run_transient(st)
    t3 = time.perf_counter()
    return {
        "sections": sections,
        "unknowns": sys_.n,
        "steps": len(st.record) - 1,
        "build_s": round(t1 - t0, 4),
        "first_step_s": round(t2 - t1, 4),
        "per_step_ms": round(1000 * (t3 - t2) / max(steps - 1, 1), 3),
        "total_s": round(t3 - t0, 4),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 100, 300, 999])
    ap.add_argument("--steps", type=int, default=100)
    ap.add_argument("--out", help="CSV path (default: stdout)")
    args = ap.parse_args()
    rows = [bench(s, args.steps) for s in args.sizes]
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    if args.out:
        out.close()


if __name__ == "__main__":
    main()
