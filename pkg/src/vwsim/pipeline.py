"""Text -> checked netlist -> flat circuit -> symbolic system."""
from __future__ import annotations

from pathlib import Path

from .elaborate import DEFAULT_CONCAT, FlatCircuit, check_flat, flatten, sort_modules
from .mna import SymbolicSystem, build_system
from .native import parse_native
from .netlist import Netlist, NetlistError, errors, netlist_arity_check, netlist_syntax_check
from .spice import parse_spice


def looks_native(text: str) -> bool:
    for line in text.splitlines():
        s = line.strip()
        if not s or s.startswith(";"):
            continue
        return s.startswith("(")
    return True


def parse_netlist(text: str, native: bool | None = None) -> Netlist:
    if native is None:
        native = looks_native(text)
    return parse_native(text) if native else parse_spice(text)


def read_netlist(path: str | Path) -> Netlist:
    p = Path(path)
    text = p.read_text()
    suffix = p.suffix.lower()
    if suffix in (".cir", ".sp", ".spi", ".spice", ".js"):
        return parse_spice(text)
    if suffix in (".lisp", ".vw", ".net", ".sexp"):
        return parse_native(text)
    return parse_netlist(text)


def check_netlist(n: Netlist):
    """Syntax then arity diagnostics; raises on errors, returns warnings."""
    diags = netlist_syntax_check(n)
    if errors(diags):
        raise NetlistError(diags)
    diags = netlist_arity_check(n)
    if errors(diags):
        raise NetlistError(diags)
    return diags


def elaborate(
    n: Netlist, concat_char: str = DEFAULT_CONCAT, globals=(), top: str | None = None
) -> tuple[FlatCircuit, list]:
    warnings = check_netlist(n)
    f = flatten(sort_modules(n), top=top, concat_char=concat_char, globals=globals)
    diags = check_flat(f)
    if errors(diags):
        raise NetlistError(diags)
    return f, warnings + diags


def compile_netlist(
    n: Netlist, sim_type: str = "voltage", concat_char: str = DEFAULT_CONCAT, globals=()
) -> tuple[FlatCircuit, SymbolicSystem]:
    f, _ = elaborate(n, concat_char, globals)
    return f, build_system(f, sim_type)
