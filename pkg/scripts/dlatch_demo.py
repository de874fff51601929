#!/usr/bin/env python3
"""Simulate the RSFQ latch and report which junction slips in each input window."""
import argparse
import math
from fractions import Fraction

import numpy as np

from vwsim.circuits import DLatchParams, dlatch_spice
from vwsim.engine import SimConfig, simulate
from vwsim.mna import phase_of
from vwsim.pipeline import compile_netlist, parse_netlist

PS = Fraction(1, 10**12)
WINDOWS = [(40, 90, "D"), (90, 140, "D"), (140, 190, "C"), (190, 240, "C"), (240, 300, "D")]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sim-type", choices=["voltage", "phase"], default="voltage")
    ap.add_argument("--step-ps", type=Fraction, default=Fraction(1, 4))
    args = ap.parse_args()

    p = DLatchParams()
    _, sys_ = compile_netlist(parse_netlist(dlatch_spice(p)), args.sim_type)
    st = simulate(sys_, SimConfig(args.step_ps * PS, 320 * PS, sim_type=args.sim_type))
    rec = st.record
    t = np.array(rec["$time$"])
    il = np.array(rec["i-l1"])
    phase = {j: phase_of(sys_, rec, j) for j in ("b1", "b2", "b3", "b4")}
    for a, b, pulse in WINDOWS:
        ka, kb = np.searchsorted(t, [a * 1e-12, b * 1e-12])
        turns = {j: (ph[kb] - ph[ka]) / (2 * math.pi) for j, ph in phase.items()}
        fired = [j for j, v in turns.items() if v > 0.5] or ["none"]
        print(f"{a:3d}-{b:3d} ps  {pulse}  fired: {','.join(fired):8s}  loop current {il[kb] * 1e6:7.1f} uA")
    print(f"{len(rec)} columns, {sys_.n} unknowns, {st.factor_count} factorizations")


if __name__ == "__main__":
    main()
