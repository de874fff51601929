"""Module sorting, hierarchical flattening and flat-circuit consistency checks."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .netlist import (
    DeviceKind,
    Diagnostic,
    GROUND,
    GROUND_ALIASES,
    Module,
    ModuleRef,
    Netlist,
    NetlistError,
    Occurrence,
)
from .terms import App, Term, Var

DEFAULT_CONCAT = "|"


@dataclass
class FlatCircuit:
    occurrences: list[Occurrence] = field(default_factory=list)
    nodes: list[str] = field(default_factory=list)  # first-appearance order, ground included
    ground: str = GROUND
    globals: frozenset[str] = frozenset()

    def occurrence(self, name: str) -> Occurrence:
        for o in self.occurrences:
            if o.name == name:
                return o
        raise KeyError(name)


def sort_modules(n: Netlist) -> Netlist:
    """Order modules so every module comes after the modules it references."""
    by_name = {m.name: m for m in n.modules}
    state: dict[str, int] = {}  # 1 = on stack, 2 = done
    order: list[Module] = []

    def visit(m: Module, path: list[str]):
        state[m.name] = 1
        path.append(m.name)
        for ref in m.references():
            if ref not in by_name:
                continue  # reported by the arity check / flatten
            s = state.get(ref)
            if s == 1:
                cycle = path[path.index(ref):] + [ref]
                raise NetlistError(
                    [Diagnostic("error", f"module {ref}", "module reference cycle: " + " -> ".join(cycle))]
                )
            if s is None:
                visit(by_name[ref], path)
        path.pop()
        state[m.name] = 2
        order.append(m)

    for m in n.modules:
        if m.name not in state:
            visit(m, [])
    top = n.top if n.top is not None else (n.modules[0].name if n.modules else None)
    return Netlist(order, list(n.controls), top=top, globals=n.globals)


def rename_term(t: Term, mapping: dict[str, str]) -> Term:
    if isinstance(t, Var):
        new = mapping.get(t.name)
        return t if new is None else Var(new)
    if isinstance(t, App):
        args = tuple(rename_term(a, mapping) for a in t.args)
        return t if args == t.args else App(t.fn, args)
    return t


def flatten(
    n: Netlist,
    top: str | None = None,
    concat_char: str = DEFAULT_CONCAT,
    globals: set[str] | frozenset[str] | tuple = (),
) -> FlatCircuit:
    """Expand every module reference below ``top`` into prefixed primitive occurrences."""
    modules = {m.name: m for m in n.modules}
    if top is None:
        top = n.top_module.name
    if top not in modules:
        raise NetlistError(f"top module {top!r} is not defined")
    keep = set(GROUND_ALIASES) | set(globals) | set(n.globals)

    flat = FlatCircuit(globals=frozenset(set(globals) | set(n.globals)))
    seen_nodes: dict[str, None] = {}

    def canon(node: str) -> str:
        return GROUND if node in GROUND_ALIASES else node

    def expand(m: Module, prefix: str, binding: dict[str, str], stack: tuple[str, ...]):
        if m.name in stack:
            raise NetlistError(
                f"module reference cycle: {' -> '.join(stack + (m.name,))}"
            )

        def local(name: str) -> str:
            if name in binding:
                return binding[name]
            if name in keep:
                return canon(name)
            return prefix + name

        mapping: dict[str, str] = {}
        for o in m.occurrences:
            mapping[o.name] = local(o.name)
            if isinstance(o, Occurrence):
                for x in o.nodes + o.branches:
                    mapping[x] = local(x)
        for e in m.externals:
            mapping[e] = local(e)

        for o in m.occurrences:
            if isinstance(o, ModuleRef):
                if o.module not in modules:
                    raise NetlistError(
                        [Diagnostic("error", f"{m.name}/{o.name}", f"reference to undefined module {o.module}")]
                    )
                sub = modules[o.module]
                if len(o.connections) != len(sub.externals):
                    raise NetlistError(
                        [
                            Diagnostic(
                                "error",
                                f"{m.name}/{o.name}",
                                f"{len(o.connections)} connection(s) for {len(sub.externals)} external(s) of {sub.name}",
                            )
                        ]
                    )
                inner = {
                    e: local(c) for e, c in zip(sub.externals, o.connections)
                }
                expand(sub, local(o.name) + concat_char, inner, stack + (m.name,))
                continue
            nodes = tuple(canon(local(x)) for x in o.nodes)
            for x in nodes:
                seen_nodes.setdefault(x, None)
            flat.occurrences.append(
                Occurrence(
                    local(o.name),
                    o.kind,
                    nodes,
                    tuple(local(b) for b in o.branches),
                    tuple(rename_term(v, mapping) for v in o.values),
                )
            )

    expand(modules[top], "", {}, ())
    flat.nodes = list(seen_nodes)
    dupes = [k for k, c in Counter(o.name for o in flat.occurrences).items() if c > 1]
    if dupes:
        raise NetlistError(f"occurrence names collide after flattening: {', '.join(dupes)}")
    return flat


def _terminal_pairs(o: Occurrence) -> list[tuple[str, str]]:
    if o.device is DeviceKind.TRANSMISSION_LINE and len(o.nodes) == 4:
        return [(o.nodes[0], o.nodes[1]), (o.nodes[2], o.nodes[3]), (o.nodes[0], o.nodes[2])]
    if len(o.nodes) == 2:
        return [(o.nodes[0], o.nodes[1])]
    return []


def check_flat(f: FlatCircuit) -> list[Diagnostic]:
    """Consistency diagnostics for a flat circuit (warnings for connectivity)."""
    diags: list[Diagnostic] = []
    inductors = {o.name for o in f.occurrences if o.device is DeviceKind.INDUCTOR}
    parent = {x: x for x in f.nodes}
    parent.setdefault(f.ground, f.ground)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    degree: Counter = Counter()
    for o in f.occurrences:
        if not isinstance(o, Occurrence) or o.device is None:
            diags.append(Diagnostic("error", o.name, f"not a primitive component: {getattr(o, 'kind', o)!r}"))
            continue
        if o.device is DeviceKind.MUTUAL_INDUCTANCE:
            for v in o.values[:2]:
                if not isinstance(v, Var) or v.name not in inductors:
                    diags.append(
                        Diagnostic("error", o.name, f"mutual inductance names missing inductor {getattr(v, 'name', v)}")
                    )
        for x in o.nodes:
            degree[x] += 1
            parent.setdefault(x, x)
        for a, b in _terminal_pairs(o):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
    g = find(f.ground)
    for x in f.nodes:
        if x == f.ground:
            continue
        if degree[x] < 2:
            diags.append(Diagnostic("warning", x, f"node {x} has a single connection"))
        elif find(x) != g:
            diags.append(Diagnostic("warning", x, f"node {x} has no path to ground"))
    return diags
