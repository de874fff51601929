"""Transient loop: instantiate A and b, solve, record, advance exact time."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import terms as T
from .mna import JunctionInfo, SymbolicSystem, UnknownIndex
from .record import SimulationRecord
from .solver import SingularMatrixError, SolvePlan, SparseMatrix, factor
from .terms import Const, Term, Var

STATE_FORMAT = "vwsim-state"
STATE_VERSION = 1


class SimulationError(RuntimeError):
    pass


@dataclass
class SimConfig:
    step: Fraction
    stop: Fraction
    start: Fraction = Fraction(0)
    sim_type: str = "voltage"
    variable_step: bool = False
    phase_threshold: float = math.pi / 4
    calm_steps: int = 8
    max_halvings: int = 12

    def __post_init__(self):
        self.step = Fraction(self.step)
        self.stop = Fraction(self.stop)
        self.start = Fraction(self.start)
        if self.step <= 0:
            raise ValueError(f"time step must be positive, got {self.step}")
        if self.stop < self.start:
            raise ValueError(f"stop time {self.stop} precedes start time {self.start}")


@dataclass
class EngineState:
    system: SymbolicSystem
    config: SimConfig
    record: SimulationRecord
    subterms: T.SubtermTable
    a_slots: list[int]
    b_slots: list[int]
    hn: Fraction
    plan: SolvePlan | None = None
    a_values: tuple[float, ...] | None = None
    factor_count: int = 0
    calm: int = 0
    phase_terms: list[Term] = field(default_factory=list)

    @property
    def time(self) -> Fraction:
        return self.record.timeline.times[-1]

    @property
    def timeline(self):
        return self.record.timeline


def _tables(sys: SymbolicSystem):
    tbl = T.SubtermTable()
    a_slots = [tbl.add(t) for row in sys.A for _, t in row]
    b_slots = [tbl.add(t) for t in sys.b]
    return tbl, a_slots, b_slots


def init_simulation(
    sys: SymbolicSystem, config: SimConfig, record: SimulationRecord | None = None
) -> EngineState:
    """Seed the record with an all-zero column at ``config.start`` (hn = 0)."""
    tbl, a_slots, b_slots = _tables(sys)
    if record is None:
        record = SimulationRecord(sys.record_names(), ground=[sys.ground])
        record.append(config.start, Fraction(0), {n: 0.0 for n in record.names})
    return EngineState(
        sys,
        config,
        record,
        tbl,
        a_slots,
        b_slots,
        hn=config.step,
        phase_terms=[j.phase for j in sys.junctions],
    )


def _env(st: EngineState):
    env = st.record.env(-1)
    env[st.system.ground] = 0.0
    return env


def _instantiate(st: EngineState, t_new: Fraction, hn: Fraction):
    vals = T.sweep_evaluate(st.subterms, _env(st), t_new, hn)
    a = []
    k = 0
    for r, row in enumerate(st.system.A):
        for c, _ in row:
            v = T.value_or_raise(vals[st.a_slots[k]], f"A[{r}][{c}] at t={t_new}")
            a.append(v)
            k += 1
    b = [
        T.value_or_raise(vals[s], f"b[{r}] at t={t_new}")
        for r, s in enumerate(st.b_slots)
    ]
    return tuple(a), b


def _matrix(st: EngineState, a: tuple[float, ...]) -> SparseMatrix:
    m = SparseMatrix(st.system.n)
    k = 0
    for r, row in enumerate(st.system.A):
        for c, _ in row:
            m._append(r, c, a[k])
            k += 1
    return m


def _phase_advance(st: EngineState, values: dict[str, float], t_new, hn) -> float:
    if not st.phase_terms:
        return 0.0
    old = _env(st)
    new = dict(values)
    new[st.system.ground] = 0.0
    return max(
        abs(T.vw_eval(p, new, t_new, hn) - T.vw_eval(p, old, st.time, hn))
        for p in st.phase_terms
    )


def _solve(st: EngineState, hn: Fraction) -> tuple[Fraction, dict[str, float]]:
    t_new = st.time + hn
    a, b = _instantiate(st, t_new, hn)
    if st.plan is None or a != st.a_values:
        try:
            st.plan = factor(_matrix(st, a))
        except SingularMatrixError as exc:
            col = st.system.unknowns.names[exc.column] if exc.column < st.system.n else exc.column
            raise SimulationError(f"singular matrix at t={t_new} (column {col})") from exc
        st.a_values = a
        st.factor_count += 1
    x = st.plan.solve(b)
    return t_new, dict(zip(st.system.unknowns.names, x))


def step_once(st: EngineState) -> EngineState:
    """Advance one accepted step; with ``variable_step``, retry at half size on fast phase slips."""
    cfg = st.config
    floor = cfg.step / 2**cfg.max_halvings
    while True:
        hn = st.hn
        t_new, values = _solve(st, hn)
        if not cfg.variable_step:
            break
        if _phase_advance(st, values, t_new, hn) > cfg.phase_threshold and hn / 2 >= floor:
            st.hn = hn / 2
            st.calm = 0
            continue
        st.calm += 1
        if st.calm >= cfg.calm_steps and st.hn < cfg.step:
            st.hn = min(st.hn * 2, cfg.step)
            st.calm = 0
        break
    st.record.append(t_new, hn, values)
    return st


def run_transient(st: EngineState, stop: Fraction | None = None) -> EngineState:
    """Step while the next grid point lies strictly before ``stop``."""
    stop = st.config.stop if stop is None else Fraction(stop)
    while st.time + st.hn < stop:
        step_once(st)
    return st


def simulate(sys: SymbolicSystem, config: SimConfig) -> EngineState:
    return run_transient(init_simulation(sys, config))


# ---------------------------------------------------------------------------
# state files


def _rat(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def _unrat(s: str) -> Fraction:
    return Fraction(s)


def term_to_json(t: Term):
    if isinstance(t, Const):
        return ["c", t.value.hex(), None if t.exact is None else _rat(t.exact)]
    if isinstance(t, Var):
        return ["v", t.name]
    return ["a", t.fn] + [term_to_json(a) for a in t.args]


def term_from_json(d) -> Term:
    tag = d[0]
    if tag == "c":
        return Const(float.fromhex(d[1]), None if d[2] is None else _unrat(d[2]))
    if tag == "v":
        return Var(d[1])
    if tag == "a":
        return T.App(d[1], [term_from_json(a) for a in d[2:]])
    raise ValueError(f"bad term tag {tag!r}")


def _float32(v: float) -> float:
    return float(np.float32(v))


def state_to_json(st: EngineState, shortp: bool = False) -> dict:
    sys = st.system
    rec = st.record
    conv = _float32 if shortp else float
    cfg = asdict(st.config)
    for k in ("step", "stop", "start"):
        cfg[k] = _rat(cfg[k])
    return {
        "format": STATE_FORMAT,
        "version": STATE_VERSION,
        "precision": "single" if shortp else "double",
        "config": cfg,
        "system": {
            "sim_type": sys.sim_type,
            "ground": sys.ground,
            "unknowns": sys.unknowns.names,
            "nodes": sys.unknowns.nodes,
            "A": [[[c, term_to_json(t)] for c, t in row] for row in sys.A],
            "b": [term_to_json(t) for t in sys.b],
            "junctions": [
                {
                    "name": j.name,
                    "branch": j.branch,
                    "phase": term_to_json(j.phase),
                    "voltage": term_to_json(j.voltage),
                    "cap_current": j.cap_current,
                    "critical": term_to_json(j.critical),
                    "resistance": term_to_json(j.resistance),
                }
                for j in sys.junctions
            ],
        },
        "engine": {"hn": _rat(st.hn), "calm": st.calm},
        "timeline": {
            "times": [_rat(t) for t in rec.timeline.times],
            "steps": [_rat(h) for h in rec.timeline.steps],
        },
        "record": {
            "names": rec.names,
            "ground": sorted(rec.ground),
            "series": {n: [conv(v).hex() for v in rec.series[n]] for n in rec.names},
        },
    }


def state_from_json(d: dict) -> EngineState:
    if d.get("format") != STATE_FORMAT:
        raise ValueError("not a simulation state file")
    if d.get("version") != STATE_VERSION:
        raise ValueError(f"state file version {d.get('version')} is not supported (expected {STATE_VERSION})")
    try:
        s = d["system"]
        u = UnknownIndex()
        for name in s["unknowns"]:
            u.add(name)
        u.nodes = list(s["nodes"])
        sys = SymbolicSystem(
            [[(c, term_from_json(t)) for c, t in row] for row in s["A"]],
            [term_from_json(t) for t in s["b"]],
            u,
            s["sim_type"],
            s["ground"],
            [
                JunctionInfo(
                    j["name"],
                    j["branch"],
                    term_from_json(j["phase"]),
                    term_from_json(j["voltage"]),
                    j["cap_current"],
                    term_from_json(j["critical"]),
                    term_from_json(j["resistance"]),
                )
                for j in s["junctions"]
            ],
        )
        cfg = dict(d["config"])
        for k in ("step", "stop", "start"):
            cfg[k] = _unrat(cfg[k])
        config = SimConfig(**cfg)
        r = d["record"]
        rec = SimulationRecord(r["names"][2:], ground=r["ground"])
        rec.names = list(r["names"])
        for t, h in zip(d["timeline"]["times"], d["timeline"]["steps"]):
            rec.timeline.append(_unrat(t), _unrat(h))
        rec.series = {n: [float.fromhex(v) for v in r["series"][n]] for n in rec.names}
        if any(len(v) != len(rec.timeline.times) for v in rec.series.values()):
            raise ValueError("record series lengths disagree with the timeline")
        st = init_simulation(sys, config, record=rec)
        st.hn = _unrat(d["engine"]["hn"])
        st.calm = int(d["engine"]["calm"])
        return st
    except (KeyError, TypeError, IndexError) as exc:
        raise ValueError(f"malformed state file: {exc}") from None


def save_state(st: EngineState, path: str | Path, shortp: bool = False) -> None:
    Path(path).write_text(json.dumps(state_to_json(st, shortp), indent=1) + "\n")


def load_state(path: str | Path) -> EngineState:
    text = Path(path).read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"truncated or corrupt state file {path}: {exc}") from None
    return state_from_json(d)
