"""Shared generators and independent oracles for the test suite."""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from hypothesis import strategies as st

from vwsim import terms as T
from vwsim.solver import SparseMatrix


def random_system(rng: np.random.Generator, n: int, density: float, pivoting: bool = False):
    """Sparse diagonally dominant A (optionally row-shuffled so pivots must move) and b."""
    a = np.zeros((n, n))
    mask = rng.random((n, n)) < density
    a[mask] = rng.uniform(-1, 1, mask.sum())
    np.fill_diagonal(a, 0.0)
    np.fill_diagonal(a, np.abs(a).sum(axis=1) + rng.uniform(1, 2, n))
    if pivoting:
        a = a[rng.permutation(n)]
        # the first row is guaranteed to lack a column-0 entry when possible
        if n > 1 and a[0, 0] != 0.0:
            k = int(np.flatnonzero(a[:, 0] == 0.0)[0]) if (a[:, 0] == 0.0).any() else 0
            a[[0, k]] = a[[k, 0]]
    b = rng.uniform(-10, 10, n)
    return a, b


def relative_residual(a, x, b) -> float:
    return float(np.max(np.abs(a @ x - b)) / (1.0 + np.max(np.abs(b))))


def naive_subterms(t: T.Term) -> set:
    """Set of distinct subterms by plain recursion (oracle for the table size)."""
    out = {t}
    if isinstance(t, T.App):
        for a in t.args:
            out |= naive_subterms(a)
    return out


def rc_closed_form(k: int) -> tuple[Fraction, Fraction]:
    """Trapezoidal RC recurrence (R = C = 1, h = 1/5, unit step at t = 1/5): (vc, ic) at column k."""
    g = Fraction(10)  # 2C/h
    vc = ic = Fraction(0)
    for _ in range(k):
        # (1 - v) = i and i = g v - (g vc + ic)
        v_new = (1 + g * vc + ic) / (1 + g)
        ic = g * v_new - (g * vc + ic)
        vc = v_new
    return vc, ic


# --- term strategies ------------------------------------------------------

SIGNALS = ["x", "y", "z"]

_consts = st.one_of(
    st.integers(-5, 5).map(T.const),
    st.fractions(min_value=-4, max_value=4, max_denominator=7).map(T.const),
    st.floats(-3, 3, allow_nan=False).map(T.Const),
)
_leaves = st.one_of(_consts, st.sampled_from(SIGNALS + [T.TIME, T.HN]).map(T.Var))

_BINARY = ["f+", "f-", "f*", "f/", "f<", "f-mod"]
_UNARY = ["f-neg", "f-abs", "f-sin", "f-cos", "f-exp", "f-sqrt"]


def _extend(children):
    return st.one_of(
        st.tuples(st.sampled_from(_BINARY), children, children).map(lambda t: T.App(t[0], t[1:])),
        st.tuples(st.sampled_from(_UNARY), children).map(lambda t: T.App(t[0], t[1:])),
        st.tuples(children, children, children).map(lambda t: T.App("if", t)),
        _consts.map(lambda c: T.App("$time$<", (c,))),
    )


terms = st.recursive(_leaves, _extend, max_leaves=12)
forests = st.lists(terms, min_size=1, max_size=6)
envs = st.fixed_dictionaries({s: st.floats(-3, 3, allow_nan=False) for s in SIGNALS})
times = st.fractions(min_value=0, max_value=2, max_denominator=10)


def same_value(a, b) -> bool:
    if isinstance(a, float) and isinstance(b, float):
        return a.hex() == b.hex() or (math.isnan(a) and math.isnan(b))
    return False


def random_term(rng, depth: int) -> T.Term:
    """Seeded term generator (plain ``random.Random``), for fixed-size batches."""
    if depth <= 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.3:
            return T.Var(rng.choice(SIGNALS + [T.TIME, T.HN]))
        if r < 0.6:
            return T.const(Fraction(rng.randint(-9, 9), rng.randint(1, 9)))
        return T.Const(rng.uniform(-3, 3))
    kind = rng.random()
    if kind < 0.45:
        fn = rng.choice(_BINARY)
        return T.App(fn, (random_term(rng, depth - 1), random_term(rng, depth - 1)))
    if kind < 0.75:
        return T.App(rng.choice(_UNARY), (random_term(rng, depth - 1),))
    if kind < 0.9:
        return T.App("if", tuple(random_term(rng, depth - 1) for _ in range(3)))
    return T.App("$time$<", (T.const(Fraction(rng.randint(0, 10), 5)),))


def random_forest(rng, size: int, depth: int = 5) -> list[T.Term]:
    forest = [random_term(rng, depth) for _ in range(size)]
    # reuse some trees as subterms of others so sharing is exercised
    for k in range(1, len(forest)):
        if rng.random() < 0.5:
            forest[k] = T.App("f+", (forest[k], rng.choice(forest[:k])))
    return forest
