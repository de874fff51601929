#!/usr/bin/env python3
"""Run the one-pole RC example and print its record next to the exact trapezoid values."""
from fractions import Fraction

from vwsim.circuits import RC_NATIVE
from vwsim.engine import SimConfig, simulate
from vwsim.pipeline import compile_netlist, parse_netlist


def main():
    _, sys_ = compile_netlist(parse_netlist(RC_NATIVE))
    st = simulate(sys_, SimConfig(Fraction(1, 5), Fraction(2)))
    rec = st.record
    for name in rec.names:
        print(f"{name:>7} " + " ".join(f"{v:6.2f}" for v in rec[name]))
    # the source is still 0 at t=0, so the first trapezoid step sees half the drive
    v = Fraction(1, 11)
    exact = [v]
    for _ in range(len(rec) - 2):
        v = (9 * v + 2) / 11
        exact.append(v)
    err = max(abs(a - float(b)) for a, b in zip(rec["vc1"][1:], exact))
    print(f"max |vc1 - exact| = {err:.1e}, factorizations = {st.factor_count}")


if __name__ == "__main__":
    main()
