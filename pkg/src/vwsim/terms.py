"""Symbolic terms, their evaluator, and single-sweep evaluation of shared subterms.

A term is a :class:`Const`, a :class:`Var` or an :class:`App` of one of the
primitive functions in :data:`PRIMITIVES`.  Terms are immutable and hashable,
so structurally equal terms collapse to one entry of a :class:`SubtermTable`.

Time is exact: the evaluator receives the simulation time and step as
:class:`~fractions.Fraction` values.  ``$time$`` and ``$hn$`` evaluate to
their float projections; ``($time$< c)`` compares the exact time against the
exact value of a constant ``c``.

Primitive inventory (name, arity)::

    f+ f- f* f/ f-mod f<     2
    f-neg f-abs f-sin f-cos f-exp f-sqrt $time$<     1
    if     3   (condition is true when non-zero)
    delayed    2   (delayed SIGNAL DELAY): recorded value of SIGNAL at
                   $time$ - DELAY, linearly interpolated, 0 before the start

Comparisons return 1.0 or 0.0.  A bare variable evaluates to its value in
the environment, which during simulation is the previous time step.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Any, Callable, Iterable, Mapping, Sequence

from .sexpr import Quoted, SexprError, Symbol, dumps, format_number, read_all

TIME = "$time$"
HN = "$hn$"


class EvaluationError(ArithmeticError):
    pass


class Term:
    __slots__ = ("_hash",)

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {print_term(self)}>"


class Const(Term):
    """Numeric constant.  ``exact`` is the rational it was written as, if any."""

    __slots__ = ("value", "exact")

    def __init__(self, value, exact: Fraction | None = None):
        if isinstance(value, (int, Fraction)) and exact is None:
            exact = Fraction(value)
        self.value = float(value)
        self.exact = exact
        self._hash = hash(("c", self.value, self.exact))

    def __eq__(self, other) -> bool:
        return (
            type(other) is Const
            and self.value == other.value
            and self.exact == other.exact
        )

    __hash__ = Term.__hash__

    def rational(self) -> Fraction:
        return self.exact if self.exact is not None else Fraction(self.value)


class Var(Term):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = str(name)
        self._hash = hash(("v", self.name))

    def __eq__(self, other) -> bool:
        return type(other) is Var and self.name == other.name

    __hash__ = Term.__hash__


class App(Term):
    __slots__ = ("fn", "args")

    def __init__(self, fn: str, args: Sequence[Term]):
        if fn not in PRIMITIVES:
            raise EvaluationError(f"unknown primitive function {fn!r}")
        args = tuple(args)
        if len(args) != PRIMITIVES[fn]:
            raise EvaluationError(
                f"{fn} takes {PRIMITIVES[fn]} argument(s), got {len(args)}"
            )
        if fn == "delayed" and not isinstance(args[0], Var):
            raise EvaluationError("delayed: first argument must be a signal name")
        self.fn = fn
        self.args = args
        self._hash = hash(("a", fn, args))

    def __eq__(self, other) -> bool:
        return (
            type(other) is App
            and self._hash == other._hash
            and self.fn == other.fn
            and self.args == other.args
        )

    __hash__ = Term.__hash__


PRIMITIVES: dict[str, int] = {
    "f+": 2,
    "f-": 2,
    "f*": 2,
    "f/": 2,
    "f-mod": 2,
    "f<": 2,
    "f-neg": 1,
    "f-abs": 1,
    "f-sin": 1,
    "f-cos": 1,
    "f-exp": 1,
    "f-sqrt": 1,
    "$time$<": 1,
    "if": 3,
    "delayed": 2,
}


def _fdiv(a: float, b: float) -> float:
    if b == 0.0:
        raise EvaluationError("division by zero")
    return a / b


def _fmod(a: float, b: float) -> float:
    if b == 0.0:
        raise EvaluationError("modulus by zero")
    return math.fmod(a, b) if a >= 0 else a - b * math.floor(a / b)


def _fsqrt(a: float) -> float:
    if a < 0.0:
        raise EvaluationError("square root of a negative number")
    return math.sqrt(a)


def _fexp(a: float) -> float:
    try:
        return math.exp(a)
    except OverflowError:
        raise EvaluationError("exponent overflow") from None


_STRICT: dict[str, Callable[..., float]] = {
    "f+": lambda a, b: a + b,
    "f-": lambda a, b: a - b,
    "f*": lambda a, b: a * b,
    "f/": _fdiv,
    "f-mod": _fmod,
    "f<": lambda a, b: 1.0 if a < b else 0.0,
    "f-neg": lambda a: -a,
    "f-abs": abs,
    "f-sin": math.sin,
    "f-cos": math.cos,
    "f-exp": _fexp,
    "f-sqrt": _fsqrt,
}


# ---------------------------------------------------------------------------
# convenience constructors used by the netlist frontends and the MNA builder


def const(x) -> Const:
    if isinstance(x, Const):
        return x
    if isinstance(x, float):
        return Const(x)
    return Const(Fraction(x))


ZERO = Const(0)
ONE = Const(1)


def add(a: Term, b: Term) -> Term:
    return App("f+", (a, b))


def sub(a: Term, b: Term) -> Term:
    return App("f-", (a, b))


def mul(a: Term, b: Term) -> Term:
    return App("f*", (a, b))


def div(a: Term, b: Term) -> Term:
    return App("f/", (a, b))


def neg(a: Term) -> Term:
    if isinstance(a, Const):
        if a.exact is not None:
            return Const(-a.exact)
        return Const(-a.value)
    if isinstance(a, App) and a.fn == "f-neg":
        return a.args[0]
    return App("f-neg", (a,))


def sum_terms(terms: Iterable[Term]) -> Term:
    out = None
    for t in terms:
        out = t if out is None else add(out, t)
    return ZERO if out is None else out


def variables(t: Term) -> set[str]:
    """Names of all variables occurring in ``t``."""
    seen: set[str] = set()
    stack = [t]
    while stack:
        s = stack.pop()
        if isinstance(s, Var):
            seen.add(s.name)
        elif isinstance(s, App):
            stack.extend(s.args)
    return seen


# ---------------------------------------------------------------------------
# evaluation


def _lookup(env: Mapping[str, float], name: str, time: Fraction, hn: Fraction) -> float:
    if name == TIME:
        return float(time)
    if name == HN:
        return float(hn)
    try:
        return env[name]
    except KeyError:
        raise EvaluationError(f"unbound variable {name!r}") from None


def _bound_less(time: Fraction, bound: float) -> float:
    if math.isnan(bound):
        raise EvaluationError("$time$<: bound is not a number")
    if math.isinf(bound):
        return 1.0 if bound > 0 else 0.0
    return 1.0 if time < Fraction(bound) else 0.0


def _time_less(arg: Term, value: float, time: Fraction) -> float:
    if isinstance(arg, Const) and arg.exact is not None:
        return 1.0 if time < arg.exact else 0.0
    return _bound_less(time, value)


def _delayed(env, name: str, delay: float, time: Fraction) -> float:
    at = getattr(env, "at", None)
    if at is None:
        raise EvaluationError("delayed: environment has no signal history")
    return at(name, time - Fraction(delay))


def vw_eval(t: Term, env: Mapping[str, float], time, hn) -> float:
    """Evaluate ``t`` strictly, except that ``if`` evaluates only the taken branch."""
    time = Fraction(time)
    hn = Fraction(hn)

    def ev(s: Term) -> float:
        if isinstance(s, Const):
            return s.value
        if isinstance(s, Var):
            return _lookup(env, s.name, time, hn)
        fn = s.fn
        if fn == "if":
            c = ev(s.args[0])
            return ev(s.args[1]) if c != 0.0 else ev(s.args[2])
        if fn == "$time$<":
            return _time_less(s.args[0], ev(s.args[0]), time)
        if fn == "delayed":
            return _delayed(env, s.args[0].name, ev(s.args[1]), time)
        args = [ev(a) for a in s.args]
        try:
            return _STRICT[fn](*args)
        except EvaluationError:
            raise
        except (ArithmeticError, ValueError) as exc:
            raise EvaluationError(f"{fn}: {exc}") from None

    return ev(t)


# ---------------------------------------------------------------------------
# single-sweep evaluation


class Poison:
    """Stored in a sweep slot whose evaluation failed.

    A poisoned slot is harmless until a consumer actually needs its value;
    ``if`` only poisons its result if the taken branch is poisoned.
    """

    __slots__ = ("reason",)

    def __init__(self, reason: str):
        self.reason = reason

    def __repr__(self) -> str:
        return f"Poison({self.reason!r})"


class SubtermTable:
    """Every distinct subterm of a term forest, children before parents."""

    def __init__(self, terms: Iterable[Term] = ()):
        self.terms: list[Term] = []
        self.index: dict[Term, int] = {}
        self.values: list[Any] = []
        self.evaluations = 0
        self._code: list[tuple] = []
        for t in terms:
            self.add(t)

    def __len__(self) -> int:
        return len(self.terms)

    def add(self, t: Term) -> int:
        """Insert ``t`` and its subterms; return the slot of ``t``."""
        index = self.index
        if t in index:
            return index[t]
        # iterative post-order walk so deep terms don't hit the recursion limit
        stack: list[tuple[Term, bool]] = [(t, False)]
        while stack:
            s, expanded = stack.pop()
            if s in index:
                continue
            if isinstance(s, App) and not expanded:
                stack.append((s, True))
                for a in reversed(s.args):
                    if a not in index:
                        stack.append((a, False))
                continue
            index[s] = len(self.terms)
            self.terms.append(s)
            self.values.append(0.0)
            self._code.append(self._compile(s))
        return index[t]

    def _compile(self, s: Term) -> tuple:
        if isinstance(s, Const):
            return ("c", s.value)
        if isinstance(s, Var):
            return ("v", s.name)
        slots = tuple(self.index[a] for a in s.args)
        if s.fn == "$time$<":
            a = s.args[0]
            return ("t<", slots[0], a.exact if isinstance(a, Const) else None)
        if s.fn == "delayed":
            return ("d", s.args[0].name, slots[1])
        if s.fn == "if":
            return ("if",) + slots
        return ("f", _STRICT[s.fn], slots)

    def __getitem__(self, t: Term):
        return self.values[self.index[t]]


def collect_ordered_subterms(ts: Iterable[Term]) -> SubtermTable:
    return SubtermTable(ts)


def sweep_evaluate(tbl: SubtermTable, env: Mapping[str, float], time, hn) -> list[Any]:
    """Evaluate every slot of ``tbl`` once, left to right.

    Failures are stored as :class:`Poison` instead of raised; see
    :func:`value_or_raise`.
    """
    time = Fraction(time)
    hn = Fraction(hn)
    tf = float(time)
    hf = float(hn)
    vals = tbl.values
    count = 0
    for i, code in enumerate(tbl._code):
        count += 1
        kind = code[0]
        if kind == "c":
            vals[i] = code[1]
        elif kind == "f":
            args = [vals[j] for j in code[2]]
            bad = next((a for a in args if type(a) is Poison), None)
            if bad is not None:
                vals[i] = bad
                continue
            try:
                vals[i] = code[1](*args)
            except (EvaluationError, ArithmeticError, ValueError) as exc:
                vals[i] = Poison(str(exc))
        elif kind == "v":
            name = code[1]
            if name == TIME:
                vals[i] = tf
            elif name == HN:
                vals[i] = hf
            else:
                v = env.get(name, _MISSING)
                vals[i] = Poison(f"unbound variable {name!r}") if v is _MISSING else v
        elif kind == "if":
            c = vals[code[1]]
            if type(c) is Poison:
                vals[i] = c
            else:
                vals[i] = vals[code[2]] if c != 0.0 else vals[code[3]]
        elif kind == "t<":
            bound = code[2]
            if bound is not None:
                vals[i] = 1.0 if time < bound else 0.0
                continue
            a = vals[code[1]]
            if type(a) is Poison:
                vals[i] = a
                continue
            try:
                vals[i] = _bound_less(time, a)
            except EvaluationError as exc:
                vals[i] = Poison(str(exc))
        else:  # delayed
            d = vals[code[2]]
            if type(d) is Poison:
                vals[i] = d
                continue
            try:
                vals[i] = _delayed(env, code[1], d, time)
            except EvaluationError as exc:
                vals[i] = Poison(str(exc))
    tbl.evaluations += count
    return vals


_MISSING = object()


def value_or_raise(v, what: str = "term") -> float:
    if type(v) is Poison:
        raise EvaluationError(f"{what}: {v.reason}")
    return v


# ---------------------------------------------------------------------------
# symbolic syntax


def term_from_datum(d: Any) -> Term:
    """Convert a read datum (see :mod:`vwsim.sexpr`) into a term."""
    if isinstance(d, Quoted):
        inner = d.datum
        if isinstance(inner, Fraction):
            return Const(float(inner), inner)
        raise SexprError(f"quoted non-number {dumps(inner)!r} is not a term")
    if isinstance(d, Fraction):
        return Const(float(d), d)
    if isinstance(d, Symbol):
        return Var(str(d))
    if isinstance(d, list):
        if not d or not isinstance(d[0], Symbol):
            raise SexprError(f"malformed application {dumps(d)}")
        fn = str(d[0])
        if fn not in PRIMITIVES:
            raise SexprError(f"unknown primitive function {fn!r}")
        try:
            return App(fn, [term_from_datum(a) for a in d[1:]])
        except EvaluationError as exc:
            raise SexprError(str(exc)) from None
    raise SexprError(f"cannot convert {d!r} to a term")


def parse_term(text: str) -> Term:
    data = read_all(text)
    if len(data) != 1:
        raise SexprError(f"expected one term, found {len(data)} forms")
    return term_from_datum(data[0])


def print_term(t: Term) -> str:
    if isinstance(t, Const):
        if t.exact is not None:
            return "'" + format_number(t.exact)
        return "'" + repr(t.value)
    if isinstance(t, Var):
        return t.name
    return "(" + " ".join([t.fn] + [print_term(a) for a in t.args]) + ")"
