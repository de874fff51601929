"""Reference circuits used by the tests, the acceptance suite and the scripts."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

RC_NATIVE = """\
(defconst *rc-netlist*
  '((rc-module
     nil
    ; Name type  connections branch   value
     ((v1    v    (vs1 gnd)  (i-v1)   ((if ($time$< '1/5) '0 '1)))
      (r1    r    (vs1 vc1)  (i-r1)   ('1))
      (c1    c    (vc1 gnd)  (i-c1)   ('1))))))
"""

# same circuit, two levels deep: top -> cell -> cap
RC_HIERARCHICAL = """\
((top nil
  ((v1 v (vs1 gnd) (i-v1) ((if ($time$< '1/5) '0 '1)))
   (x1 cell (vs1))))
 (cell (a)
  ((r1 r (a vc1) (i-r1) ('1))
   (x2 cap (vc1))))
 (cap (n)
  ((c1 c (n gnd) (i-c1) ('1)))))
"""

RC_SPICE = """\
rc circuit
V1 vs1 0 pwl(0 0 0.2 0 0.2 1)
R1 vs1 vc1 1
C1 vc1 0 1
.tran 0.2 2
.print v(vc1) i(r1)
.end
"""


def single_junction(
    ic: float = 1e-4,
    r: float = 7.0,
    c: float = 7e-14,
    bias: float = 0.7,
    trigger: float = 0.6,
    trigger_at: float = 50e-12,
    trigger_width: float = 3e-12,
) -> str:
    """Shunted junction, bias ramped to ``bias * ic``, one short trigger pulse."""
    ramp = 20e-12
    end = trigger_at + trigger_width
    return f"""\
((jj nil
  ((ib i (gnd n1) (i-ib) ((if ($time$< '{ramp!r}) (f* '{bias * ic / ramp!r} $time$) '{bias * ic!r})))
   (it i (gnd n1) (i-it) ((if ($time$< '{trigger_at!r}) '0 (if ($time$< '{end!r}) '{trigger * ic!r} '0))))
   (b1 b (n1 gnd) (i-b1) ('{ic!r} '{r!r} '{c!r})))))
"""


@dataclass
class DLatchParams:
    """RSFQ destructive-readout latch.  Areas scale a 100 uA / 70 fF / 7 ohm junction."""

    j1: float = 1.5
    j2: float = 1.5
    j3: float = 1.5
    j4: float = 1.2
    jtl: float = 2.5
    bias: float = 150e-6
    jtl_bias: float = 175e-6
    storage: float = 10e-12
    input_l: float = 3e-12
    out_l: float = 2e-12
    load: float = 2.0
    d_times: list[float] = field(default_factory=lambda: [50e-12, 100e-12, 250e-12])
    c_times: list[float] = field(default_factory=lambda: [150e-12, 200e-12])
    edge: float = 5e-12


def _staircase(times: list[float], edge: float) -> str:
    pts = ["0 0"]
    for k, t in enumerate(times):
        pts.append(f"{t!r} {k * 2 * math.pi!r}")
        pts.append(f"{t + edge!r} {(k + 1) * 2 * math.pi!r}")
    return "pwl(" + " ".join(pts) + ")"


def dlatch_spice(p: DLatchParams | None = None, stop: float = 320e-12) -> str:
    """Deck for the latch: D -> J3 -> (J1, bias) -L- (J2, out) <- J4 <- C.

    Inputs are phase sources stepping by 2 pi through an inductor into a
    biased JTL junction, which turns each step into one SFQ pulse.
    """
    p = p or DLatchParams()
    return f"""\
rsfq d latch
.model jj jj(icrit=100u, cap=70f, r0=7)
PD pd 0 {_staircase(p.d_times, p.edge)}
LD pd nd {p.input_l!r}
BD nd 0 jj area={p.jtl!r}
IBD 0 nd pwl(0 0 20p {p.jtl_bias!r})
B3 nd n1 jj area={p.j3!r}
B1 n1 0 jj area={p.j1!r}
IB 0 n1 pwl(0 0 20p {p.bias!r})
L1 n1 n2 {p.storage!r}
B2 n2 0 jj area={p.j2!r}
B4 nc n2 jj area={p.j4!r}
BC nc 0 jj area={p.jtl!r}
IBC 0 nc pwl(0 0 20p {p.jtl_bias!r})
LC pc nc {p.input_l!r}
PC pc 0 {_staircase(p.c_times, p.edge)}
LO n2 nout {p.out_l!r}
RL nout 0 {p.load!r}
.tran 0.25p {stop!r}
.print p(n1) p(n2) i(l1)
.end
"""


def rc_ladder(sections: int, r: str = "'1/10", c: str = "'1/100") -> str:
    """Step-driven RC ladder; ``2 * sections + 2`` unknowns in voltage mode."""
    occs = ["(v1 v (n0 gnd) (i-v1) ((if ($time$< '1/1000) '0 '1)))"]
    for k in range(1, sections + 1):
        occs.append(f"(r{k} r (n{k - 1} n{k}) (i-r{k}) ({r}))")
        occs.append(f"(c{k} c (n{k} gnd) (i-c{k}) ({c}))")
    return "((ladder nil (\n  " + "\n  ".join(occs) + ")))\n"
