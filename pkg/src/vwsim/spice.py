"""SPICE deck reader.

Supported cards (case-insensitive; the first line is the title)::

    Rname n1 n2 value            Cname ...   Lname ...
    Vname n+ n- [dc] value | pwl(...) | pulse(...) | sin(...)
    Iname n+ n- <same>           Pname n+ n- <same>   (phase source)
    Bname n1 n2 model [area=x]   Josephson junction, parameters from .model
    Tname a1 b1 a2 b2 td=x z0=y  lossless transmission line
    Kname L1 L2 k                mutual inductance
    Xname n1 ... nk subckt
    .subckt name n1 ... / .ends   .model name jj(icrit= cap= r= r0= rn=)
    .tran step stop [start [max]] .print v(n) i(elem) p(n)
    .global n ...                 .end

Node ``0`` is ground and maps to ``gnd``.
"""
from __future__ import annotations

import math
import re
from fractions import Fraction

from . import terms as T
from .netlist import (
    ControlStatement,
    Diagnostic,
    GROUND,
    Module,
    ModuleRef,
    Netlist,
    NetlistError,
    Occurrence,
)

MAIN = "main"

JJ_DEFAULTS = {
    "icrit": Fraction(1, 10**4),
    "cap": Fraction(7, 10**14),
    "r0": Fraction(160),
}

_SUFFIX = [
    ("meg", 10**6),
    ("mil", Fraction(254, 10**7)),
    ("f", Fraction(1, 10**15)),
    ("p", Fraction(1, 10**12)),
    ("n", Fraction(1, 10**9)),
    ("u", Fraction(1, 10**6)),
    ("m", Fraction(1, 10**3)),
    ("k", 10**3),
    ("g", 10**9),
    ("t", 10**12),
]
_NUM = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:e[+-]?\d+)?)([a-z]*)$")


class SpiceError(NetlistError):
    def __init__(self, message: str, line: int | None = None):
        where = f"line {line}" if line is not None else "deck"
        self.line = line
        super().__init__([Diagnostic("error", where, message)])


def parse_value(text: str, line: int | None = None) -> Fraction:
    """Exact value of a SPICE number with an optional scale suffix (``1p``, ``2meg``)."""
    m = _NUM.match(text.strip().lower())
    if m is None:
        raise SpiceError(f"malformed number {text!r}", line)
    q = Fraction(m.group(1))
    letters = m.group(2)
    for suffix, scale in _SUFFIX:
        if letters.startswith(suffix):
            return q * scale
    return q


def _const(q: Fraction) -> T.Const:
    return T.Const(float(q), q)


def _node(name: str) -> str:
    return GROUND if name == "0" else name


# ---------------------------------------------------------------------------
# source functions, desugared into terms over $time$


def pwl_term(points: list[Fraction]) -> T.Term:
    if len(points) < 2 or len(points) % 2:
        raise ValueError("pwl needs an even number (>= 2) of values")
    ts = points[0::2]
    vs = points[1::2]
    if any(b < a for a, b in zip(ts, ts[1:])):
        raise ValueError("pwl times must be non-decreasing")
    out: T.Term = _const(vs[-1])
    time = T.Var(T.TIME)
    for k in range(len(ts) - 2, -1, -1):
        t0, t1, v0, v1 = ts[k], ts[k + 1], vs[k], vs[k + 1]
        if t1 == t0:
            seg: T.Term = _const(v1)
        elif v1 == v0:
            seg = _const(v0)
        else:
            slope = (v1 - v0) / (t1 - t0)
            seg = T.add(_const(v0), T.mul(_const(slope), T.sub(time, _const(t0))))
        out = T.App("if", (T.App("$time$<", (_const(t1),)), seg, out))
    return T.App("if", (T.App("$time$<", (_const(ts[0]),)), _const(vs[0]), out))


def pulse_term(args: list[Fraction]) -> T.Term:
    if len(args) < 2:
        raise ValueError("pulse needs at least v1 v2")
    v1, v2 = args[0], args[1]
    rest = args[2:] + [Fraction(0)] * (5 - len(args[2:]))
    td, tr, tf, pw, per = rest[:5]
    time = T.Var(T.TIME)
    tau: T.Term = T.sub(time, _const(td))
    if per > 0:
        tau = T.App("f-mod", (tau, _const(per)))
    if pw == 0 and per == 0:
        pw = Fraction(10**30)

    def lt(bound: Fraction) -> T.Term:
        return T.App("f<", (tau, _const(bound)))

    # tail of the period (after the fall) is back at v1
    body: T.Term = _const(v1)
    if tf > 0:
        fall = T.add(
            _const(v2), T.mul(_const((v1 - v2) / tf), T.sub(tau, _const(tr + pw)))
        )
        body = T.App("if", (lt(tr + pw + tf), fall, body))
    body = T.App("if", (lt(tr + pw), _const(v2), body))
    if tr > 0:
        rise = T.add(_const(v1), T.mul(_const((v2 - v1) / tr), tau))
        body = T.App("if", (lt(tr), rise, body))
    return T.App("if", (T.App("$time$<", (_const(td),)), _const(v1), body))


def sin_term(args: list[Fraction]) -> T.Term:
    if len(args) < 3:
        raise ValueError("sin needs vo va freq")
    vo, va, freq = args[:3]
    td = args[3] if len(args) > 3 else Fraction(0)
    theta = args[4] if len(args) > 4 else Fraction(0)
    time = T.Var(T.TIME)
    dt = T.sub(time, _const(td))
    wave: T.Term = T.mul(
        _const(va), T.App("f-sin", (T.mul(T.Const(2 * math.pi * float(freq)), dt),))
    )
    if theta != 0:
        wave = T.mul(wave, T.App("f-exp", (T.neg(T.mul(_const(theta), dt)),)))
    return T.App(
        "if", (T.App("$time$<", (_const(td),)), _const(vo), T.add(_const(vo), wave))
    )


_FUNC = re.compile(r"^(pwl|pulse|sin)\s*\((.*)\)\s*$")


def source_term(text: str, line: int) -> T.Term:
    s = text.strip().lower()
    if s.startswith("dc "):
        s = s[3:].strip()
    m = _FUNC.match(s)
    if m is None:
        return _const(parse_value(s, line))
    args = [parse_value(a, line) for a in re.split(r"[\s,]+", m.group(2).strip()) if a]
    try:
        return {"pwl": pwl_term, "pulse": pulse_term, "sin": sin_term}[m.group(1)](args)
    except ValueError as exc:
        raise SpiceError(f"{m.group(1)}: {exc}", line) from None


# ---------------------------------------------------------------------------


def _logical_lines(text: str):
    """Yield (line number, card) with continuations joined and comments dropped."""
    cards: list[list] = []
    for no, raw in enumerate(text.splitlines(), start=1):
        if no == 1:
            continue  # title
        line = raw.split(";", 1)[0].rstrip()
        stripped = line.strip()
        if not stripped or stripped.startswith("*"):
            continue
        if stripped.startswith("+"):
            if not cards:
                raise SpiceError("continuation line with nothing to continue", no)
            cards[-1][1] += " " + stripped[1:].strip()
            continue
        cards.append([no, stripped])
    for no, card in cards:
        yield no, card.lower()


def _keyword_args(tokens: list[str], line: int) -> dict[str, Fraction]:
    out = {}
    joined = " ".join(tokens)
    for key, val in re.findall(r"([a-z_][a-z0-9_]*)\s*=\s*([^\s=]+)", joined):
        out[key] = parse_value(val, line)
    return out


def _model_params(card: str, line: int) -> tuple[str, dict[str, Fraction]]:
    m = re.match(r"^\.model\s+(\S+)\s+([a-z]+)\s*(?:\((.*)\))?\s*(.*)$", card)
    if m is None:
        raise SpiceError("malformed .model card", line)
    name, mtype = m.group(1), m.group(2)
    if mtype != "jj":
        raise SpiceError(f"unsupported model type {mtype!r} (only jj models)", line)
    body = (m.group(3) or "") + " " + (m.group(4) or "")
    return name, _keyword_args(body.replace(",", " ").split(), line)


def jj_values(params: dict[str, Fraction], area: Fraction) -> tuple[T.Term, T.Term, T.Term]:
    """(critical current, resistance, capacitance) for a junction of the given area."""
    ic = params.get("icrit", JJ_DEFAULTS["icrit"])
    cap = params.get("cap", JJ_DEFAULTS["cap"])
    r = params.get("r", params.get("r0", params.get("rn", JJ_DEFAULTS["r0"])))
    return _const(ic * area), _const(r / area), _const(cap * area)


def _print_requests(card: str, line: int) -> list[tuple[str, str]]:
    body = card.split(None, 1)[1] if len(card.split(None, 1)) > 1 else ""
    reqs = re.findall(r"([vip])\s*\(\s*([^()\s,]+)\s*\)", body)
    leftover = re.sub(r"[vip]\s*\(\s*[^()\s,]+\s*\)", "", body)
    leftover = re.sub(r"\btran\b", "", leftover).strip()
    if leftover:
        raise SpiceError(f"unsupported .print request {leftover!r}", line)
    return [(kind, _node(name) if kind in "vp" else name) for kind, name in reqs]


def parse_spice(text: str) -> Netlist:
    cards = list(_logical_lines(text))

    subckt_names = set()
    models: dict[str, dict[str, Fraction]] = {}
    for no, card in cards:
        if card.startswith(".subckt"):
            parts = card.split()
            if len(parts) < 2:
                raise SpiceError("missing .subckt name", no)
            subckt_names.add(parts[1])
        elif card.startswith(".model"):
            name, params = _model_params(card, no)
            models[name] = params

    main = Module(MAIN, [], [])
    modules = [main]
    controls: list[ControlStatement] = []
    globals_: list[str] = []
    current = main
    open_line = None
    deferred_jj: list[tuple[int, Module, int, str, list[str]]] = []

    for no, card in cards:
        tok = card.split()
        head = tok[0]
        if head.startswith("."):
            directive = head[1:]
            if directive == "end":
                break
            if directive == "subckt":
                if current is not main:
                    raise SpiceError("nested .subckt is not supported", no)
                current = Module(tok[1], [_node(t) for t in tok[2:]], [])
                modules.append(current)
                open_line = no
            elif directive == "ends":
                if current is main:
                    raise SpiceError(".ends without .subckt", no)
                current = main
            elif directive == "tran":
                if len(tok) < 3:
                    raise SpiceError(".tran needs step and stop", no)
                vals = [parse_value(t, no) for t in tok[1:4]]
                step, stop = vals[0], vals[1]
                start = vals[2] if len(vals) > 2 else Fraction(0)
                controls.append(ControlStatement("tran", (step, stop, start)))
            elif directive == "print":
                controls.append(ControlStatement("print", tuple(_print_requests(card, no))))
            elif directive == "global":
                globals_.extend(_node(t) for t in tok[1:])
            elif directive == "model":
                pass
            elif directive in {"ac", "dc", "op", "noise", "tf", "four", "param", "meas", "measure"}:
                raise SpiceError(f"unsupported analysis or directive .{directive}", no)
            else:
                raise SpiceError(f"unknown directive .{directive}", no)
            continue

        letter = head[0]
        name = head
        try:
            if letter in "rcl":
                if len(tok) != 4:
                    raise SpiceError(f"{name}: expected '{letter.upper()}name n1 n2 value'", no)
                occ = Occurrence(
                    name, letter, (_node(tok[1]), _node(tok[2])), (f"i-{name}",),
                    (_const(parse_value(tok[3], no)),),
                )
            elif letter in "vip":
                if len(tok) < 4:
                    raise SpiceError(f"{name}: expected '{letter.upper()}name n+ n- value'", no)
                value = " ".join(tok[3:])
                occ = Occurrence(
                    name, letter, (_node(tok[1]), _node(tok[2])), (f"i-{name}",),
                    (source_term(value, no),),
                )
            elif letter == "b":
                if len(tok) < 4:
                    raise SpiceError(f"{name}: expected 'Bname n1 n2 model [area=x]'", no)
                deferred_jj.append((no, current, len(current.occurrences), name, tok))
                occ = None
            elif letter == "t":
                if len(tok) < 5:
                    raise SpiceError(f"{name}: expected 'Tname a1 b1 a2 b2 td=x z0=y'", no)
                kw = _keyword_args(tok[5:], no)
                if "td" not in kw or "z0" not in kw:
                    raise SpiceError(f"{name}: transmission line needs td= and z0=", no)
                occ = Occurrence(
                    name, "t", tuple(_node(t) for t in tok[1:5]),
                    (f"i1-{name}", f"i2-{name}"), (_const(kw["z0"]), _const(kw["td"])),
                )
            elif letter == "k":
                if len(tok) != 4:
                    raise SpiceError(f"{name}: expected 'Kname L1 L2 k'", no)
                occ = Occurrence(
                    name, "k", (), (),
                    (T.Var(tok[1]), T.Var(tok[2]), _const(parse_value(tok[3], no))),
                )
            elif letter == "x":
                if len(tok) < 2:
                    raise SpiceError(f"{name}: expected 'Xname nodes... subckt'", no)
                if tok[-1] in subckt_names:
                    sub, conns = tok[-1], tok[1:-1]
                elif tok[1] in subckt_names:
                    sub, conns = tok[1], tok[2:]
                else:
                    raise SpiceError(f"{name}: undefined subcircuit in {card!r}", no)
                occ = ModuleRef(name, sub, tuple(_node(t) for t in conns))
            else:
                raise SpiceError(f"unknown element letter {letter.upper()!r} in {head!r}", no)
        except SpiceError:
            raise
        except (ValueError, ZeroDivisionError) as exc:
            raise SpiceError(f"{name}: {exc}", no) from None
        if occ is not None:
            current.occurrences.append(occ)

    if current is not main:
        raise SpiceError(f"unterminated .subckt {current.name}", open_line)

    # junction cards are resolved last so .model may appear anywhere
    for no, module, pos, name, tok in reversed(deferred_jj):
        model = tok[3]
        if model not in models and model != "jj":
            raise SpiceError(f"{name}: undefined junction model {model!r}", no)
        params = models.get(model, {})
        area = _keyword_args(tok[4:], no).get("area", Fraction(1))
        module.occurrences.insert(
            pos,
            Occurrence(
                name, "b", (_node(tok[1]), _node(tok[2])), (f"i-{name}",),
                jj_values(params, area),
            ),
        )

    return Netlist(modules, controls, top=MAIN, globals=tuple(globals_))
