"""Hierarchical netlist data model and the syntax/arity checks."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .terms import Term, Var, variables


class DeviceKind(str, Enum):
    RESISTOR = "r"
    CAPACITOR = "c"
    INDUCTOR = "l"
    JOSEPHSON_JUNCTION = "b"
    TRANSMISSION_LINE = "t"
    MUTUAL_INDUCTANCE = "k"
    VOLTAGE_SOURCE = "v"
    CURRENT_SOURCE = "i"
    PHASE_SOURCE = "p"


# kind -> (nodes, branches, values)
#   b: (critical-current resistance capacitance)
#   t: nodes (a1 b1 a2 b2), branches (port-1 port-2), values (impedance delay)
#   k: values (inductor-1 inductor-2 coupling); inductors given by occurrence name
ARITY: dict[DeviceKind, tuple[int, int, int]] = {
    DeviceKind.RESISTOR: (2, 1, 1),
    DeviceKind.CAPACITOR: (2, 1, 1),
    DeviceKind.INDUCTOR: (2, 1, 1),
    DeviceKind.JOSEPHSON_JUNCTION: (2, 1, 3),
    DeviceKind.TRANSMISSION_LINE: (4, 2, 2),
    DeviceKind.MUTUAL_INDUCTANCE: (0, 0, 3),
    DeviceKind.VOLTAGE_SOURCE: (2, 1, 1),
    DeviceKind.CURRENT_SOURCE: (2, 1, 1),
    DeviceKind.PHASE_SOURCE: (2, 1, 1),
}

GROUND = "gnd"
GROUND_ALIASES = frozenset({"gnd", "0"})

_IDENT = re.compile(r"^[^\s()'\";]+$")


def is_identifier(name) -> bool:
    return isinstance(name, str) and bool(_IDENT.match(name))


def kind_of(tag: str) -> DeviceKind | None:
    try:
        return DeviceKind(tag.lower())
    except ValueError:
        return None


@dataclass(frozen=True)
class Occurrence:
    """A primitive device instance.  ``kind`` is the raw tag as written."""

    name: str
    kind: str
    nodes: tuple[str, ...]
    branches: tuple[str, ...]
    values: tuple[Term, ...]

    @property
    def device(self) -> DeviceKind | None:
        return kind_of(self.kind)


@dataclass(frozen=True)
class ModuleRef:
    """An instance of another module, connected to ``connections``."""

    name: str
    module: str
    connections: tuple[str, ...]


@dataclass
class Module:
    name: str
    externals: list[str] = field(default_factory=list)
    occurrences: list[Occurrence | ModuleRef] = field(default_factory=list)

    def references(self) -> list[str]:
        return [o.module for o in self.occurrences if isinstance(o, ModuleRef)]


@dataclass(frozen=True)
class ControlStatement:
    """A simulation control card: ``tran`` args (step stop start) or ``print`` requests."""

    kind: str
    args: tuple


@dataclass
class Netlist:
    modules: list[Module] = field(default_factory=list)
    controls: list[ControlStatement] = field(default_factory=list)
    top: str | None = None
    globals: tuple[str, ...] = ()

    def module(self, name: str) -> Module:
        for m in self.modules:
            if m.name == name:
                return m
        raise KeyError(name)

    @property
    def top_module(self) -> Module:
        if self.top is not None:
            return self.module(self.top)
        if not self.modules:
            raise ValueError("netlist has no modules")
        return self.modules[0]

    def prints(self) -> list[tuple[str, str]]:
        out = []
        for c in self.controls:
            if c.kind == "print":
                out.extend(c.args)
        return out

    def tran(self) -> ControlStatement | None:
        for c in self.controls:
            if c.kind == "tran":
                return c
        return None


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    where: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: {self.where}: {self.message}"


class NetlistError(ValueError):
    def __init__(self, diagnostics):
        if isinstance(diagnostics, str):
            diagnostics = [Diagnostic("error", "netlist", diagnostics)]
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


def errors(diags) -> list[Diagnostic]:
    return [d for d in diags if d.severity == "error"]


def netlist_syntax_check(n: Netlist) -> list[Diagnostic]:
    """Empty list iff names, kinds, disjointness and value terms are all fine."""
    diags: list[Diagnostic] = []
    seen_modules: set[str] = set()
    for m in n.modules:
        if not is_identifier(m.name):
            diags.append(Diagnostic("error", f"module {m.name!r}", "invalid module name"))
        if m.name in seen_modules:
            diags.append(Diagnostic("error", f"module {m.name}", "duplicate module name"))
        seen_modules.add(m.name)
        for e in m.externals:
            if not is_identifier(e):
                diags.append(Diagnostic("error", f"module {m.name}", f"invalid external {e!r}"))
        names: set[str] = set()
        for o in m.occurrences:
            where = f"{m.name}/{o.name}"
            if not is_identifier(o.name):
                diags.append(Diagnostic("error", where, "invalid occurrence name"))
            if o.name in names:
                diags.append(
                    Diagnostic("error", where, f"duplicate occurrence name {o.name}")
                )
            names.add(o.name)
            if isinstance(o, ModuleRef):
                for c in o.connections:
                    if not is_identifier(c):
                        diags.append(Diagnostic("error", where, f"invalid node {c!r}"))
                continue
            if o.device is None:
                diags.append(
                    Diagnostic("error", where, f"unrecognized component {o.kind!r}")
                )
            for x in o.nodes + o.branches:
                if not is_identifier(x):
                    diags.append(Diagnostic("error", where, f"invalid name {x!r}"))
            for v in o.values:
                if not isinstance(v, Term):
                    diags.append(Diagnostic("error", where, f"malformed value {v!r}"))
    return diags


def netlist_arity_check(n: Netlist) -> list[Diagnostic]:
    """Empty list iff every occurrence and module reference has the right counts."""
    diags: list[Diagnostic] = []
    externals = {m.name: len(m.externals) for m in n.modules}
    for m in n.modules:
        for o in m.occurrences:
            where = f"{m.name}/{o.name}"
            if isinstance(o, ModuleRef):
                if o.module not in externals:
                    diags.append(
                        Diagnostic("error", where, f"reference to undefined module {o.module}")
                    )
                elif len(o.connections) != externals[o.module]:
                    diags.append(
                        Diagnostic(
                            "error",
                            where,
                            f"{len(o.connections)} connection(s) given, module "
                            f"{o.module} has {externals[o.module]} external(s)",
                        )
                    )
                continue
            dev = o.device
            if dev is None:
                continue
            want = ARITY[dev]
            got = (len(o.nodes), len(o.branches), len(o.values))
            for label, w, g in zip(("node", "branch", "value"), want, got):
                if w != g:
                    diags.append(
                        Diagnostic(
                            "error", where, f"{dev.name.lower()} needs {w} {label}(s), got {g}"
                        )
                    )
            if dev is DeviceKind.MUTUAL_INDUCTANCE and len(o.values) == 3:
                if not (isinstance(o.values[0], Var) and isinstance(o.values[1], Var)):
                    diags.append(
                        Diagnostic("error", where, "mutual inductance must name two inductors")
                    )
    return diags


def value_variables(o: Occurrence) -> set[str]:
    out: set[str] = set()
    for v in o.values:
        out |= variables(v)
    return out
