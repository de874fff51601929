"""Reader and printer for the native symbolic netlist format.

Accepted top-level shapes::

    (defconst *name* '((module ...) ...))
    ((module externals (occurrence ...)) ...)
    (module externals (occurrence ...))

A primitive occurrence has five fields ``(name kind (nodes) (branches)
(values))``; a module reference has three, ``(name module (connections))``.
"""
from __future__ import annotations

from typing import Any

from .netlist import Module, ModuleRef, Netlist, Occurrence, is_identifier
from .sexpr import Quoted, SexprError, Symbol, dumps, read_all
from .terms import print_term, term_from_datum


def _strip_quote(d):
    while isinstance(d, Quoted):
        d = d.datum
    return d


def _ident(d, what: str) -> str:
    if not isinstance(d, Symbol) or not is_identifier(str(d)):
        raise SexprError(f"{what}: expected an identifier, got {dumps(d)}")
    return str(d)


def _name_list(d, what: str) -> list[str]:
    d = _strip_quote(d)
    if isinstance(d, Symbol) and d.lower() == "nil":
        return []
    if not isinstance(d, list):
        raise SexprError(f"{what}: expected a list, got {dumps(d)}")
    return [_ident(x, what) for x in d]


def _is_nil(d) -> bool:
    return isinstance(d, Symbol) and d.lower() == "nil"


def _occurrence(d, module: str):
    if not isinstance(d, list):
        raise SexprError(f"module {module}: occurrence must be a list, got {dumps(d)}")
    if len(d) == 5:
        name = _ident(d[0], f"module {module}: occurrence name")
        where = f"{module}/{name}"
        kind = _ident(d[1], f"{where}: kind")
        nodes = _name_list(d[2], f"{where}: nodes")
        branches = _name_list(d[3], f"{where}: branches")
        vals = d[4]
        if _is_nil(vals):
            vals = []
        if not isinstance(vals, list):
            raise SexprError(f"{where}: values must be a list")
        return Occurrence(
            name, kind, tuple(nodes), tuple(branches), tuple(term_from_datum(v) for v in vals)
        )
    if len(d) == 3:
        name = _ident(d[0], f"module {module}: reference name")
        target = _ident(d[1], f"{module}/{name}: module")
        conns = _name_list(d[2], f"{module}/{name}: connections")
        return ModuleRef(name, target, tuple(conns))
    raise SexprError(
        f"module {module}: occurrence {dumps(d)} has {len(d)} fields, expected 5 (or 3 for a module reference)"
    )


def _module(d) -> Module:
    if not isinstance(d, list) or len(d) != 3:
        raise SexprError(f"module must be (name externals occurrences), got {dumps(d)}")
    name = _ident(d[0], "module name")
    externals = _name_list(d[1], f"module {name}: externals")
    occs = d[2]
    if _is_nil(occs):
        occs = []
    if not isinstance(occs, list):
        raise SexprError(f"module {name}: occurrences must be a list")
    return Module(name, externals, [_occurrence(o, name) for o in occs])


def netlist_from_datum(d: Any) -> Netlist:
    d = _strip_quote(d)
    if (
        isinstance(d, list)
        and len(d) == 3
        and isinstance(d[0], Symbol)
        and d[0].lower() == "defconst"
    ):
        d = _strip_quote(d[2])
    if not isinstance(d, list):
        raise SexprError(f"expected a netlist list, got {dumps(d)}")
    if d and isinstance(d[0], Symbol):
        return Netlist([_module(d)])
    return Netlist([_module(m) for m in d])


def parse_native(text: str) -> Netlist:
    forms = read_all(text)
    if len(forms) != 1:
        raise SexprError(f"expected one netlist form, found {len(forms)}")
    return netlist_from_datum(forms[0])


def _names(xs) -> str:
    return "(" + " ".join(xs) + ")" if xs else "nil"


def print_native(n: Netlist) -> str:
    """Inverse of :func:`parse_native` (up to whitespace and quoting)."""
    lines = ["("]
    for m in n.modules:
        lines.append(f" ({m.name}")
        lines.append(f"  {_names(m.externals)}")
        occ = []
        for o in m.occurrences:
            if isinstance(o, ModuleRef):
                occ.append(f"({o.name} {o.module} {_names(o.connections)})")
            else:
                vals = "(" + " ".join(print_term(v) for v in o.values) + ")"
                occ.append(
                    f"({o.name} {o.kind} {_names(o.nodes)} {_names(o.branches)} {vals})"
                )
        lines.append("  (" + "\n   ".join(occ) + "))")
    lines.append(")")
    return "\n".join(lines)
