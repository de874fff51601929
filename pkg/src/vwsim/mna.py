"""Symbolic modified nodal analysis: unknown assignment and device stamps.

Every dynamic element uses a trapezoidal companion with step ``$hn$``.
Variables in the stamps refer to previous-step values, so the symbolic
system is built once and re-instantiated every step.

In voltage mode node unknowns are potentials; in phase mode they are
phases, related by ``v = (PHI0 / 2 pi) dphi/dt``.  Where a device needs the
quantity that is not a node unknown (a junction's phase in voltage mode, a
resistor's voltage in phase mode, ...), it gets an auxiliary unknown named
``<occurrence>/phi`` or ``<occurrence>/v`` whose row integrates one from the
other.  Junctions additionally carry their capacitor current ``<occurrence>/ic``.

Junction model (RCSJ)::

    i = v / R + C dv/dt + Ic sin(phi)

with ``sin`` evaluated at a phase extrapolated from the previous step, so the
system stays linear and one solve per step suffices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from . import terms as T
from .elaborate import FlatCircuit
from .netlist import DeviceKind, NetlistError, Occurrence
from .record import SimulationRecord
from .terms import Const, Term, Var

PLANCK = 6.62607015e-34
ELEMENTARY_CHARGE = 1.602176634e-19
PHI0 = PLANCK / (2 * ELEMENTARY_CHARGE)  # flux quantum, Wb

VOLTAGE = "voltage"
PHASE = "phase"
SIM_TYPES = (VOLTAGE, PHASE)

_HN = Var(T.HN)
_TWO = Const(2)
# v = K dphi/dt; trapezoidal phase increment is hn/(2K) (v_n + v_{n-1})
_PHASE_PER_VOLT_STEP = Const(math.pi / PHI0)  # 1/(2K)
_K = Const(PHI0 / (2 * math.pi))


class BuildError(NetlistError):
    pass


@dataclass
class UnknownIndex:
    names: list[str] = field(default_factory=list)
    index: dict[str, int] = field(default_factory=dict)
    nodes: list[str] = field(default_factory=list)

    def add(self, name: str) -> int:
        if name in self.index:
            raise BuildError(f"unknown {name!r} is defined twice (node and branch names must differ)")
        self.index[name] = len(self.names)
        self.names.append(name)
        return self.index[name]

    def __len__(self) -> int:
        return len(self.names)

    def __getitem__(self, name: str) -> int:
        return self.index[name]

    def __contains__(self, name: str) -> bool:
        return name in self.index


@dataclass
class JunctionInfo:
    name: str
    branch: str
    phase: Term  # over record signals
    voltage: Term
    cap_current: str
    critical: Term
    resistance: Term


@dataclass
class SymbolicSystem:
    A: list[list[tuple[int, Term]]]
    b: list[Term]
    unknowns: UnknownIndex
    sim_type: str
    ground: str = "gnd"
    junctions: list[JunctionInfo] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.unknowns)

    def record_names(self) -> list[str]:
        """Record row order: branch/auxiliary unknowns, ground, then nodes."""
        nodes = set(self.unknowns.nodes)
        rest = [u for u in self.unknowns.names if u not in nodes]
        ground = [self.ground] if self.n else []
        return rest + ground + list(self.unknowns.nodes)

    def terms(self) -> list[Term]:
        return [t for row in self.A for _, t in row] + list(self.b)


def aux_names(o: Occurrence, sim_type: str) -> list[str]:
    dev = o.device
    if sim_type == VOLTAGE:
        if dev is DeviceKind.JOSEPHSON_JUNCTION:
            return [f"{o.name}/phi", f"{o.name}/ic"]
        if dev is DeviceKind.PHASE_SOURCE:
            return [f"{o.name}/phi"]
        return []
    if dev in (DeviceKind.RESISTOR, DeviceKind.CAPACITOR, DeviceKind.VOLTAGE_SOURCE):
        return [f"{o.name}/v"]
    if dev is DeviceKind.JOSEPHSON_JUNCTION:
        return [f"{o.name}/v", f"{o.name}/ic"]
    if dev is DeviceKind.TRANSMISSION_LINE:
        return [f"{o.name}/v1", f"{o.name}/v2"]
    return []


_NO_BRANCH_UNKNOWN = (
    DeviceKind.RESISTOR,
    DeviceKind.JOSEPHSON_JUNCTION,
    DeviceKind.MUTUAL_INDUCTANCE,
)


def assign_unknowns(f: FlatCircuit, sim_type: str = VOLTAGE) -> UnknownIndex:
    """Nodes in first-appearance order, then branch currents, then auxiliaries."""
    if sim_type not in SIM_TYPES:
        raise ValueError(f"sim-type must be one of {SIM_TYPES}, got {sim_type!r}")
    idx = UnknownIndex()
    for x in f.nodes:
        if x != f.ground:
            idx.add(x)
    idx.nodes = list(idx.names)
    for o in f.occurrences:
        if o.device not in _NO_BRANCH_UNKNOWN:
            for b in o.branches:
                idx.add(b)
    for o in f.occurrences:
        for a in aux_names(o, sim_type):
            idx.add(a)
    return idx


def _is_zero_const(t: Term) -> bool:
    return isinstance(t, Const) and t.value == 0.0


class _Builder:
    def __init__(self, f: FlatCircuit, sim_type: str):
        self.f = f
        self.sim_type = sim_type
        self.ground = f.ground
        self.u = assign_unknowns(f, sim_type)
        n = len(self.u)
        self.A: list[dict[int, list[Term]]] = [{} for _ in range(n)]
        self.b: list[list[Term]] = [[] for _ in range(n)]
        self.junctions: list[JunctionInfo] = []

    # -- primitives -------------------------------------------------------
    def col(self, node: str) -> int | None:
        return None if node == self.ground else self.u[node]

    def add(self, row: int | None, col: int | None, t: Term):
        if row is None or col is None:
            return
        self.A[row].setdefault(col, []).append(t)

    def add_b(self, row: int | None, t: Term):
        if row is not None:
            self.b[row].append(t)

    def signed(self, t: Term, sign: int) -> Term:
        return t if sign > 0 else T.neg(t)

    def prev_diff(self, a: str, b: str) -> Term:
        if a == self.ground and b == self.ground:
            return T.ZERO
        if b == self.ground:
            return Var(a)
        if a == self.ground:
            return T.neg(Var(b))
        return T.sub(Var(a), Var(b))

    def node_pair(self, a: str, b: str) -> list[tuple[int, int]]:
        out = []
        if a != self.ground:
            out.append((self.u[a], 1))
        if b != self.ground:
            out.append((self.u[b], -1))
        return out

    def integrator(self, row: int, lhs: list[tuple[int, int]], lhs_prev: Term,
                   rhs: list[tuple[int, int]], rhs_prev: Term, scale: Term):
        """Trapezoidal row:  lhs_n - scale*rhs_n = lhs_{n-1} + scale*rhs_{n-1}."""
        for c, s in lhs:
            self.add(row, c, Const(s))
        for c, s in rhs:
            self.add(row, c, self.signed(scale, -s))
        self.add_b(row, T.add(lhs_prev, T.mul(scale, rhs_prev)))

    def phase_step(self) -> Term:
        return T.mul(_HN, _PHASE_PER_VOLT_STEP)

    def port(self, o: Occurrence, a: str, b: str, tag: str = "") -> tuple:
        """(voltage coeffs, voltage prev, phase coeffs, phase prev) across a-b."""
        pair = self.node_pair(a, b)
        diff = self.prev_diff(a, b)
        if self.sim_type == VOLTAGE:
            v = (pair, diff)
            name = f"{o.name}/phi{tag}"
            if name in self.u:
                row = self.u[name]
                self.integrator(row, [(row, 1)], Var(name), pair, diff, self.phase_step())
                return v + ([(row, 1)], Var(name))
            return v + (None, None)
        phi = (pair, diff)
        name = f"{o.name}/v{tag}"
        if name in self.u:
            row = self.u[name]
            self.integrator(row, pair, diff, [(row, 1)], Var(name), self.phase_step())
            return ([(row, 1)], Var(name)) + phi
        return (None, None) + phi

    def kcl(self, a: str, b: str, coeffs: list[tuple[int, int]], scale: Term):
        """Add the current scale*coeffs (flowing a -> b through the device) to KCL."""
        ra, rb = self.col(a), self.col(b)
        for c, s in coeffs:
            self.add(ra, c, self.signed(scale, s))
            self.add(rb, c, self.signed(scale, -s))

    def branch_kcl(self, a: str, b: str, branch: int):
        self.add(self.col(a), branch, T.ONE)
        self.add(self.col(b), branch, Const(-1))

    def require_nonzero(self, o: Occurrence, t: Term, what: str):
        if _is_zero_const(t):
            raise BuildError(f"{o.name}: {what} is zero")

    # -- devices ----------------------------------------------------------
    def stamp(self, o: Occurrence):
        dev = o.device
        if dev is None:
            raise BuildError(f"{o.name}: unrecognized component {o.kind!r}")
        getattr(self, "_" + dev.name.lower())(o)

    def _resistor(self, o):
        a, b = o.nodes
        (r,) = o.values
        self.require_nonzero(o, r, "resistance")
        vc, _, _, _ = self.port(o, a, b)
        self.kcl(a, b, vc, T.div(T.ONE, r))

    def _capacitor(self, o):
        a, b = o.nodes
        (c,) = o.values
        i = self.u[o.branches[0]]
        vc, vprev, _, _ = self.port(o, a, b)
        self.branch_kcl(a, b, i)
        g = T.div(T.mul(_TWO, c), _HN)
        self.add(i, i, T.ONE)
        for col, s in vc:
            self.add(i, col, self.signed(g, -s))
        self.add_b(i, T.neg(T.add(T.mul(g, vprev), Var(o.branches[0]))))

    def _inductor(self, o):
        a, b = o.nodes
        (ind,) = o.values
        self.require_nonzero(o, ind, "inductance")
        name = o.branches[0]
        i = self.u[name]
        self.branch_kcl(a, b, i)
        if self.sim_type == VOLTAGE:
            vc, vprev, _, _ = self.port(o, a, b)
            z = T.div(T.mul(_TWO, ind), _HN)
            for col, s in vc:
                self.add(i, col, Const(s))
            self.add(i, i, T.neg(z))
            self.add_b(i, T.neg(T.add(T.mul(z, Var(name)), vprev)))
        else:
            # flux form divided by K, so the row is O(1): (L/K) i - dphi = 0
            _, _, pc, _ = self.port(o, a, b)
            self.add(i, i, T.div(ind, _K))
            for col, s in pc:
                self.add(i, col, Const(-s))

    def _mutual_inductance(self, o):
        l1, l2, k = o.values
        try:
            o1 = self.f.occurrence(l1.name)
            o2 = self.f.occurrence(l2.name)
        except (KeyError, AttributeError):
            raise BuildError(f"{o.name}: mutual inductance names a missing inductor") from None
        if o1.device is not DeviceKind.INDUCTOR or o2.device is not DeviceKind.INDUCTOR:
            raise BuildError(f"{o.name}: mutual inductance must couple two inductors")
        m = T.mul(k, T.App("f-sqrt", (T.mul(o1.values[0], o2.values[0]),)))
        n1, n2 = o1.branches[0], o2.branches[0]
        i1, i2 = self.u[n1], self.u[n2]
        if self.sim_type == VOLTAGE:
            zm = T.div(T.mul(_TWO, m), _HN)
            for r, other, oname in ((i1, i2, n2), (i2, i1, n1)):
                self.add(r, other, T.neg(zm))
                self.add_b(r, T.neg(T.mul(zm, Var(oname))))
        else:
            mk = T.div(m, _K)
            self.add(i1, i2, mk)
            self.add(i2, i1, mk)

    def _voltage_source(self, o):
        a, b = o.nodes
        (v,) = o.values
        i = self.u[o.branches[0]]
        vc, _, _, _ = self.port(o, a, b)
        self.branch_kcl(a, b, i)
        for col, s in vc:
            self.add(i, col, Const(s))
        self.add_b(i, v)

    def _current_source(self, o):
        a, b = o.nodes
        (cur,) = o.values
        i = self.u[o.branches[0]]
        self.branch_kcl(a, b, i)
        self.add(i, i, T.ONE)
        self.add_b(i, cur)

    def _phase_source(self, o):
        a, b = o.nodes
        (phi,) = o.values
        i = self.u[o.branches[0]]
        _, _, pc, _ = self.port(o, a, b)
        self.branch_kcl(a, b, i)
        for col, s in pc:
            self.add(i, col, Const(s))
        self.add_b(i, phi)

    def _josephson_junction(self, o):
        a, b = o.nodes
        ic_crit, r, c = o.values
        self.require_nonzero(o, r, "junction resistance")
        self.require_nonzero(o, c, "junction capacitance")
        vc, vprev, pc, pprev = self.port(o, a, b)
        ic_name = f"{o.name}/ic"
        ic = self.u[ic_name]
        # capacitor current row, as for a capacitor
        g = T.div(T.mul(_TWO, c), _HN)
        self.add(ic, ic, T.ONE)
        for col, s in vc:
            self.add(ic, col, self.signed(g, -s))
        self.add_b(ic, T.neg(T.add(T.mul(g, vprev), Var(ic_name))))
        # KCL: resistive + capacitive + supercurrent
        self.kcl(a, b, vc, T.div(T.ONE, r))
        self.branch_kcl(a, b, ic)
        # predicted phase: trapezoid with v_n guessed as v_{n-1} + hn * ic_{n-1}/C
        guess = T.add(T.mul(_TWO, vprev), T.mul(_HN, T.div(Var(ic_name), c)))
        predicted = T.add(pprev, T.mul(self.phase_step(), guess))
        supercurrent = T.mul(ic_crit, T.App("f-sin", (predicted,)))
        self.add_b(self.col(a), T.neg(supercurrent))
        self.add_b(self.col(b), supercurrent)
        self.junctions.append(
            JunctionInfo(o.name, o.branches[0], pprev, vprev, ic_name, ic_crit, r)
        )

    def _transmission_line(self, o):
        a1, b1, a2, b2 = o.nodes
        z0, td = o.values
        i1n, i2n = o.branches
        i1, i2 = self.u[i1n], self.u[i2n]
        ports = []
        for tag, (a, b) in (("1", (a1, b1)), ("2", (a2, b2))):
            vc, vprev, _, _ = self.port(o, a, b, tag)
            ports.append((vc, vprev))
        self.branch_kcl(a1, b1, i1)
        self.branch_kcl(a2, b2, i2)

        def delayed_v(vc_prev: Term) -> Term:
            return _delay(vc_prev, td)

        # v_k(t) - Z0 i_k(t) = v_j(t - td) + Z0 i_j(t - td)
        for row, (vc, _), (_, other_prev), other in (
            (i1, ports[0], ports[1], i2n),
            (i2, ports[1], ports[0], i1n),
        ):
            for col, s in vc:
                self.add(row, col, Const(s))
            self.add(row, row, T.neg(z0))
            self.add_b(
                row,
                T.add(delayed_v(other_prev), T.mul(z0, T.App("delayed", (Var(other), td)))),
            )

    def finish(self) -> SymbolicSystem:
        A = [
            [(c, T.sum_terms(ts)) for c, ts in sorted(row.items())]
            for row in self.A
        ]
        b = [T.sum_terms(ts) for ts in self.b]
        return SymbolicSystem(A, b, self.u, self.sim_type, self.ground, self.junctions)


def _delay(t: Term, td: Term) -> Term:
    """Rewrite previous-value signal references in ``t`` as delayed references."""
    if isinstance(t, Var):
        return T.App("delayed", (t, td))
    if isinstance(t, T.App):
        return T.App(t.fn, [_delay(a, td) for a in t.args])
    return t


def stamp_occurrence(b: _Builder, o: Occurrence):
    b.stamp(o)


def build_system(f: FlatCircuit, sim_type: str = VOLTAGE) -> SymbolicSystem:
    """Fold the device stamps of every occurrence into one symbolic system."""
    b = _Builder(f, sim_type)
    for o in f.occurrences:
        b.stamp(o)
    return b.finish()


def derive_post_currents(
    rec: SimulationRecord,
    f: FlatCircuit,
    sim_type: str,
    names: list[str] | None = None,
) -> SimulationRecord:
    """Append resistor and junction current rows (named by their branch) to ``rec``.

    ``names`` restricts the derivation to the given occurrence or branch
    names; an unknown name is an error.
    """
    wanted = None
    if names is not None:
        known = {}
        for o in f.occurrences:
            if o.device in (DeviceKind.RESISTOR, DeviceKind.JOSEPHSON_JUNCTION):
                known[o.name] = o
                known[o.branches[0]] = o
        missing = [n for n in names if n not in known]
        if missing:
            raise KeyError(f"no resistor or junction named {', '.join(missing)}")
        wanted = {known[n].name for n in names}

    helper = _Builder.__new__(_Builder)
    helper.ground = f.ground
    for o in f.occurrences:
        if wanted is not None and o.name not in wanted:
            continue
        if o.device not in (DeviceKind.RESISTOR, DeviceKind.JOSEPHSON_JUNCTION):
            continue
        a, b = o.nodes
        if sim_type == VOLTAGE:
            v = helper.prev_diff(a, b)
        else:
            v = Var(f"{o.name}/v")
        if o.device is DeviceKind.RESISTOR:
            current = T.div(v, o.values[0])
        else:
            ic_crit, r, _ = o.values
            phase = Var(f"{o.name}/phi") if sim_type == VOLTAGE else helper.prev_diff(a, b)
            current = T.add(
                T.add(T.mul(ic_crit, T.App("f-sin", (phase,))), T.div(v, r)),
                Var(f"{o.name}/ic"),
            )
        series = []
        for k in range(len(rec)):
            env = rec.env(k)
            env[f.ground] = 0.0
            series.append(
                T.vw_eval(current, env, rec.timeline.times[k], rec.timeline.steps[k])
            )
        rec.add_series(o.branches[0], series)
    return rec


def phase_of(sys: SymbolicSystem, rec: SimulationRecord, junction: str) -> list[float]:
    """Junction phase series from a record (either simulation mode)."""
    for j in sys.junctions:
        if j.name == junction:
            out = []
            for k in range(len(rec)):
                env = rec.env(k)
                env[sys.ground] = 0.0
                out.append(T.vw_eval(j.phase, env, rec.timeline.times[k], 0))
            return out
    raise KeyError(junction)


# ---------------------------------------------------------------------------
# derived node quantities


def node_phase_series(rec: SimulationRecord, node: str) -> list[float]:
    """Phase of a voltage-mode node: trapezoidal running integral of its voltage."""
    if node == rec_ground(rec):
        return [0.0] * len(rec)
    v = rec[node]
    steps = rec.timeline.steps
    out = [0.0] * len(rec)
    for k in range(1, len(rec)):
        out[k] = out[k - 1] + float(steps[k]) * math.pi / PHI0 * (v[k] + v[k - 1])
    return out


def node_voltage_series(rec: SimulationRecord, node: str) -> list[float]:
    """Voltage of a phase-mode node, inverting the same trapezoidal relation."""
    if node == rec_ground(rec):
        return [0.0] * len(rec)
    p = rec[node]
    steps = rec.timeline.steps
    out = [0.0] * len(rec)
    for k in range(1, len(rec)):
        out[k] = (p[k] - p[k - 1]) / (float(steps[k]) * math.pi / PHI0) - out[k - 1]
    return out


def rec_ground(rec: SimulationRecord) -> str:
    return next(iter(rec.ground), "gnd")


# ---------------------------------------------------------------------------
# :equations text


def format_equations(sys: SymbolicSystem) -> str:
    """One ``(row <unknown> ((<column> <term>) ...) <rhs>)`` form per row."""
    names = sys.unknowns.names
    lines = [f";; {sys.sim_type}-mode system, {sys.n} unknowns",
             "(unknowns " + " ".join(names) + ")"]
    for r, row in enumerate(sys.A):
        entries = " ".join(f"({names[c]} {T.print_term(t)})" for c, t in row)
        lines.append(f"(row {names[r]} ({entries}) {T.print_term(sys.b[r])})")
    return "\n".join(lines) + "\n"


def parse_equations(text: str) -> tuple[list[str], list[list[tuple[str, Term]]], list[Term]]:
    from .sexpr import read_all

    forms = read_all(text)
    if not forms or not isinstance(forms[0], list) or forms[0][:1] != ["unknowns"]:
        raise ValueError("equations text must start with an (unknowns ...) form")
    names = [str(x) for x in forms[0][1:]]
    rows, rhs = [], []
    for f in forms[1:]:
        if not isinstance(f, list) or len(f) != 4 or f[0] != "row":
            raise ValueError(f"malformed row form {f!r}")
        rows.append([(str(c), T.term_from_datum(t)) for c, t in f[2]])
        rhs.append(T.term_from_datum(f[3]))
    return names, rows, rhs
