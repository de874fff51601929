"""``vwsim`` command line driver."""
from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import mna
from .elaborate import DEFAULT_CONCAT, FlatCircuit
from .engine import (
    EngineState,
    SimConfig,
    SimulationError,
    init_simulation,
    load_state,
    run_transient,
    save_state,
)
from .netlist import NetlistError, Netlist
from .pipeline import elaborate, read_netlist
from .record import SimulationRecord
from .sexpr import SexprError, parse_number
from .spice import parse_value
from .terms import EvaluationError, TIME


class CliError(Exception):
    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"{stage}: {message}")


def rational(text: str) -> Fraction:
    """``1/5``, ``0.2``, ``2e-13`` and ``0.2p`` all become exact rationals."""
    q = parse_number(text.strip())
    if q is not None:
        return q
    try:
        return parse_value(text)
    except NetlistError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


@dataclass
class CliConfig:
    input: str
    sim_type: str = "voltage"
    equations: bool = False
    spice_print: bool = False
    global_nodes: list[str] = field(default_factory=list)
    time_step: Fraction | None = None
    time_stop: Fraction | None = None
    time_start: Fraction | None = None
    output_file: str | None = None
    concat_char: str = DEFAULT_CONCAT
    save_sim: str | None = None
    save_sim_shortp: bool = False
    load_sim: bool = False
    save_var: str | None = None
    return_records: list[str] | None = None
    variable_step: bool = False


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="vwsim",
        description="Transient simulation of SPICE or native symbolic netlists.",
    )
    p.add_argument("input", help="netlist file (.cir SPICE deck or native), or a state file with --load-sim")
    p.add_argument("--sim-type", choices=mna.SIM_TYPES, default=None)
    p.add_argument("--equations", action="store_true", help="print the symbolic A and b and stop")
    p.add_argument("--spice-print", action="store_true", help="only output the .PRINT requests")
    p.add_argument("--global-nodes", nargs="*", default=[], metavar="NODE")
    p.add_argument("--time-step", type=rational)
    p.add_argument("--time-stop", type=rational)
    p.add_argument("--time-start", type=rational)
    p.add_argument("--output-file", help="CSV destination (default: standard output)")
    p.add_argument("--concat-char", default=DEFAULT_CONCAT, help="hierarchical name separator")
    p.add_argument("--save-sim", metavar="PATH", help="write the final simulation state")
    p.add_argument("--save-sim-shortp", action="store_true", help="store record values in single precision")
    p.add_argument("--load-sim", action="store_true", help="input is a state file; resume it")
    p.add_argument("--save-var", metavar="NAME", help="also write the record to NAME.csv")
    p.add_argument("--return-records", nargs="*", metavar="SIGNAL",
                   help="output only these signals (v(x), i(x), p(x) or record names)")
    p.add_argument("--variable-step", action="store_true",
                   help="halve the step on fast junction phase slips")
    return p


def parse_args(argv) -> CliConfig:
    ns = make_parser().parse_args(argv)
    if len(ns.concat_char) != 1:
        raise CliError("arguments", "--concat-char takes a single character")
    d = vars(ns)
    d["sim_type"] = d["sim_type"] or "voltage"
    return CliConfig(**d)


# ---------------------------------------------------------------------------
# records


def write_csv(series: dict[str, list[float]], out) -> None:
    """Header of signal names, then one row per time point (shortest round-trip floats)."""
    names = list(series)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(names)
    for row in zip(*(series[n] for n in names)):
        w.writerow([repr(float(v)) for v in row])


def read_csv(text: str) -> dict[str, list[float]]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        return {}
    names = rows[0]
    out = {n: [] for n in names}
    for row in rows[1:]:
        for n, v in zip(names, row):
            out[n].append(float(v))
    return out


class RecordView:
    """Resolves signal requests against a record, deriving series on demand."""

    def __init__(self, rec: SimulationRecord, flat: FlatCircuit | None, sim_type: str):
        self.rec = rec
        self.flat = flat
        self.sim_type = sim_type

    def _derivable_currents(self) -> dict[str, str]:
        out = {}
        if self.flat is None:
            return out
        for o in self.flat.occurrences:
            if o.kind in ("r", "b"):
                out[o.name] = o.branches[0]
                out[o.branches[0]] = o.branches[0]
        return out

    def _current(self, name: str) -> str:
        if name in self.rec:
            return name
        derivable = self._derivable_currents()
        if name in derivable:
            branch = derivable[name]
            if branch not in self.rec:
                mna.derive_post_currents(self.rec, self.flat, self.sim_type, [name])
            return branch
        raise KeyError(name)

    def resolve(self, request: str) -> tuple[str, list[float]]:
        r = request.strip()
        low = r.lower()
        if len(low) > 3 and low[1] == "(" and low.endswith(")") and low[0] in "vip":
            kind, name = low[0], r[2:-1].strip()
            if name == "0":
                name = mna.rec_ground(self.rec)
            label = f"{kind}({name})"
            if kind == "v":
                if self.sim_type == mna.PHASE and name in self.rec:
                    return label, mna.node_voltage_series(self.rec, name)
                return label, self._plain(name)
            if kind == "p":
                if self.sim_type == mna.VOLTAGE and name in self.rec:
                    return label, mna.node_phase_series(self.rec, name)
                return label, self._plain(name)
            for cand in (f"i-{name}", name):
                try:
                    return label, self.rec[self._current(cand)]
                except KeyError:
                    pass
            raise self._unknown(request)
        try:
            return r, self.rec[self._current(r)]
        except KeyError:
            raise self._unknown(request) from None

    def _plain(self, name: str) -> list[float]:
        if name not in self.rec:
            raise self._unknown(name)
        return self.rec[name]

    def _unknown(self, name: str) -> KeyError:
        return KeyError(f"no signal {name!r}; available: {', '.join(self.rec.names)}")


def extract_records(view: RecordView, names) -> dict[str, list[float]]:
    """Sub-record in request order; unknown names raise listing what exists."""
    out = {}
    for n in names:
        label, s = view.resolve(n)
        out[label] = list(s)
    return out


# ---------------------------------------------------------------------------
# driver


def _timing(cfg: CliConfig, netlist: Netlist | None) -> tuple[Fraction, Fraction, Fraction]:
    tran = netlist.tran() if netlist is not None else None
    step, stop, start = cfg.time_step, cfg.time_stop, cfg.time_start
    if tran is not None:
        t_step, t_stop, t_start = tran.args
        step = t_step if step is None else step
        stop = t_stop if stop is None else stop
        start = t_start if start is None else start
    if step is None or stop is None:
        raise CliError("arguments", "--time-step and --time-stop are required (no .TRAN card)")
    return step, stop, start if start is not None else Fraction(0)


def _output_series(cfg, view: RecordView, netlist: Netlist | None) -> dict[str, list[float]]:
    rec = view.rec
    base = {TIME: rec[TIME]}
    if cfg.return_records is not None:
        return {**base, **extract_records(view, cfg.return_records)} if cfg.return_records else {}
    if cfg.spice_print:
        reqs = netlist.prints() if netlist is not None else []
        return {**base, **extract_records(view, [f"{k}({n})" for k, n in reqs])}
    return {n: rec[n] for n in rec.names}


def run(cfg: CliConfig, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    netlist = flat = None
    if cfg.load_sim:
        try:
            st = load_state(cfg.input)
        except (OSError, ValueError) as exc:
            raise CliError("load-sim", str(exc)) from None
        if cfg.time_stop is not None:
            st.config.stop = cfg.time_stop
        sim_type = st.system.sim_type
    else:
        try:
            netlist = read_netlist(cfg.input)
        except OSError as exc:
            raise CliError("input", str(exc)) from None
        except (NetlistError, SexprError) as exc:
            raise CliError("netlist-frontend", str(exc)) from None
        try:
            flat, diags = elaborate(netlist, cfg.concat_char, cfg.global_nodes)
        except NetlistError as exc:
            raise CliError("elaborator", str(exc)) from None
        for d in diags:
            print(f"vwsim: {d}", file=stderr)
        sim_type = cfg.sim_type
        try:
            sys_ = mna.build_system(flat, sim_type)
        except NetlistError as exc:
            raise CliError("mna-builder", str(exc)) from None
        if cfg.equations:
            stdout.write(mna.format_equations(sys_))
            return 0
        step, stop, start = _timing(cfg, netlist)
        try:
            config = SimConfig(step, stop, start, sim_type=sim_type, variable_step=cfg.variable_step)
        except ValueError as exc:
            raise CliError("arguments", str(exc)) from None
        st = init_simulation(sys_, config)
    try:
        run_transient(st)
    except (SimulationError, EvaluationError) as exc:
        raise CliError("transient-engine", str(exc)) from None
    if cfg.save_sim:
        save_state(st, cfg.save_sim, shortp=cfg.save_sim_shortp)

    view = RecordView(st.record, flat, sim_type)
    try:
        series = _output_series(cfg, view, netlist)
    except KeyError as exc:
        raise CliError("return-records", exc.args[0]) from None
    if cfg.save_var:
        path = cfg.save_var if cfg.save_var.endswith(".csv") else cfg.save_var + ".csv"
        with open(path, "w", newline="") as fh:
            write_csv(series, fh)
    if cfg.output_file:
        try:
            with open(cfg.output_file, "w", newline="") as fh:
                write_csv(series, fh)
        except OSError as exc:
            raise CliError("output", str(exc)) from None
    else:
        write_csv(series, stdout)
    return 0


def main(argv=None) -> int:
    try:
        cfg = parse_args(argv)
        return run(cfg)
    except CliError as exc:
        print(f"vwsim: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
