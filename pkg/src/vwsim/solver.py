"""Sparse Gaussian elimination with partial pivoting and a replayable solve program.

:func:`factor` triangularizes ``A`` once and records what it did to the rows
as a :class:`SolvePlan`.  Replaying the plan on a right-hand side ``b``
(:meth:`SolvePlan.solve`) costs time linear in the stored entries, which is
what the transient loop wants: one factorization, many ``b`` vectors.

Rows are stored as parallel ascending column/value lists.  During
elimination the working array is mirrored by a zero-gap matrix: each stored
entry records how many zero columns separate it from the next stored entry
of its row (or the end of the row), so cancellation hops over zero runs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numba
import numpy as np

SINGULAR_RTOL = 1e-12


class SingularMatrixError(ArithmeticError):
    def __init__(self, column: int, message: str = ""):
        self.column = column
        super().__init__(message or f"matrix is singular: no usable pivot in column {column}")


class SparseMatrix:
    """Square matrix as rows of (ascending columns, values) with no stored zeros."""

    def __init__(self, n: int, rows: Iterable[Iterable[tuple[int, float]]] | None = None):
        self.n = n
        self.cols: list[list[int]] = [[] for _ in range(n)]
        self.vals: list[list[float]] = [[] for _ in range(n)]
        if rows is not None:
            for r, row in enumerate(rows):
                if r >= n:
                    raise ValueError("more rows than the matrix dimension")
                for c, v in sorted(row):
                    self._append(r, c, v)

    def _append(self, r: int, c: int, v: float):
        if not 0 <= c < self.n:
            raise IndexError(f"column {c} out of range for dimension {self.n}")
        v = float(v)
        if v == 0.0:
            return
        cols = self.cols[r]
        if cols and cols[-1] >= c:
            raise ValueError(f"row {r}: columns must be strictly increasing")
        cols.append(c)
        self.vals[r].append(v)

    @classmethod
    def from_dense(cls, a) -> "SparseMatrix":
        a = np.asarray(a, dtype=float)
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError("matrix must be square")
        m = cls(n)
        for r in range(n):
            nz = np.nonzero(a[r])[0]
            m.cols[r] = [int(c) for c in nz]
            m.vals[r] = [float(a[r, c]) for c in nz]
        return m

    def row(self, r: int) -> list[tuple[int, float]]:
        return list(zip(self.cols[r], self.vals[r]))

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for r in range(self.n):
            a[r, self.cols[r]] = self.vals[r]
        return a

    def matvec(self, x: Sequence[float]) -> list[float]:
        return [
            sum(v * x[c] for c, v in zip(cols, vals))
            for cols, vals in zip(self.cols, self.vals)
        ]

    def nnz(self) -> int:
        return sum(len(c) for c in self.cols)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SparseMatrix)
            and self.n == other.n
            and self.cols == other.cols
            and self.vals == other.vals
        )


def zero_gaps(cols: Sequence[int], n: int) -> list[int]:
    """Zero-gap mirror of one row: zeros between each stored entry and the next."""
    if not cols:
        return []
    gaps = [b - a - 1 for a, b in zip(cols, cols[1:])]
    gaps.append(n - 1 - cols[-1])
    return gaps


@dataclass(frozen=True)
class SolvePlan:
    """Triangular factor plus the recorded elimination and back-substitution program.

    ``eliminate`` holds ``(target, source, multiplier)`` row operations to be
    replayed on ``b``; ``back`` holds, bottom row first, ``(row, pivot,
    columns, coefficients)`` for the unknown that row determines.
    """

    n: int
    triangular: SparseMatrix
    perm: tuple[int, ...]
    eliminate: tuple[tuple[int, int, float], ...]
    back: tuple[tuple[int, int, float, tuple[int, ...], tuple[float, ...]], ...]

    def solve(self, b: Sequence[float]) -> list[float]:
        if len(b) != self.n:
            raise ValueError(f"right-hand side has length {len(b)}, plan is for {self.n}")
        y = [float(v) for v in b]
        for target, source, m in self.eliminate:
            y[target] -= m * y[source]
        x = [0.0] * self.n
        for k, row, pivot, cols, coefs in self.back:
            acc = y[row]
            for c, v in zip(cols, coefs):
                acc -= v * x[c]
            x[k] = acc / pivot
        return x


def gap_matrix(mask: np.ndarray) -> np.ndarray:
    """Zero-gap mirror of a 2-D nonzero mask; -1 where nothing is stored."""
    rows, width = mask.shape
    idx = np.arange(width)
    pos = np.where(mask, idx, width)
    # next stored column strictly to the right of each position
    suffix = np.minimum.accumulate(pos[:, ::-1], axis=1)[:, ::-1]
    after = np.empty_like(suffix)
    after[:, :-1] = suffix[:, 1:]
    if width:
        after[:, -1] = width
    return np.where(mask, after - idx - 1, -1).astype(np.int32)


@numba.njit(cache=True)
def _eliminate(work, gaps, lead, colmax, rtol, check):
    """Forward elimination in place.  Returns (status, column, pivots, ops...).

    status 0: ok; 1: no candidate row for ``column``; 2: negligible pivot;
    3: zero-gap mirror inconsistent (only when ``check``).
    """
    n = work.shape[0]
    pivots = np.full(n, -1, dtype=np.int64)
    done = np.zeros(n, dtype=np.bool_)
    cands = np.empty(n, dtype=np.int64)
    cap = 4 * n + 16
    et = np.empty(cap, dtype=np.int64)
    es = np.empty(cap, dtype=np.int64)
    em = np.empty(cap, dtype=np.float64)
    ne = 0
    for k in range(n):
        nc = 0
        for r in range(n):
            if not done[r] and lead[r] == k:
                cands[nc] = r
                nc += 1
        if nc == 0:
            return 1, k, pivots, et[:ne], es[:ne], em[:ne]
        p = cands[0]
        best = abs(work[p, k])
        for i in range(1, nc):
            v = abs(work[cands[i], k])
            if v > best:
                best = v
                p = cands[i]
        if best == 0.0 or best < rtol * colmax[k]:
            return 2, k, pivots, et[:ne], es[:ne], em[:ne]
        done[p] = True
        pivots[k] = p
        pivot = work[p, k]
        for i in range(nc):
            r = cands[i]
            if r == p:
                continue
            m = work[r, k] / pivot
            if ne == cap:
                cap *= 2
                et2 = np.empty(cap, dtype=np.int64)
                es2 = np.empty(cap, dtype=np.int64)
                em2 = np.empty(cap, dtype=np.float64)
                et2[:ne] = et[:ne]
                es2[:ne] = es[:ne]
                em2[:ne] = em[:ne]
                et, es, em = et2, es2, em2
            et[ne] = r
            es[ne] = p
            em[ne] = m
            ne += 1
            # walk both rows' stored entries right of k, skipping zero runs
            cr = k + gaps[r, k] + 1
            cp = k + gaps[p, k] + 1
            work[r, k] = 0.0
            gaps[r, k] = -1
            prev = -1
            first = n
            while cr < n or cp < n:
                if cr < cp:
                    c = cr
                    cr = cr + gaps[r, cr] + 1
                    newv = work[r, c]
                elif cp < cr:
                    c = cp
                    cp = cp + gaps[p, cp] + 1
                    newv = 0.0 - m * work[p, c]
                    work[r, c] = newv
                else:
                    c = cr
                    cr = cr + gaps[r, cr] + 1
                    cp = cp + gaps[p, cp] + 1
                    newv = work[r, c] - m * work[p, c]
                    work[r, c] = newv
                if newv != 0.0:
                    if prev >= 0:
                        gaps[r, prev] = c - prev - 1
                    else:
                        first = c
                    prev = c
                else:
                    gaps[r, c] = -1
            if prev >= 0:
                gaps[r, prev] = n - 1 - prev
            lead[r] = first
        if check:
            for r in range(n):
                nxt = n
                for c in range(n - 1, -1, -1):
                    if work[r, c] != 0.0:
                        if gaps[r, c] != nxt - c - 1:
                            return 3, k, pivots, et[:ne], es[:ne], em[:ne]
                        nxt = c
                    elif gaps[r, c] != -1:
                        return 3, k, pivots, et[:ne], es[:ne], em[:ne]
    return 0, n, pivots, et[:ne], es[:ne], em[:ne]


def factor(a: SparseMatrix, check_gaps: bool = False) -> SolvePlan:
    """Triangularize ``a`` with partial pivoting and record a replayable solve program.

    Column by column, the pivot is the remaining row whose leading entry in
    that column is largest in magnitude; every other row leading in that
    column is cancelled against it.  A pivot smaller than
    ``SINGULAR_RTOL`` times the largest original entry of its column is
    rejected as singular.

    The working copy is an array mirrored by the zero-gap matrix; cancelling
    walks only the stored entries of the two rows involved.
    """
    n = a.n
    work = np.zeros((n, n))
    lead = np.full(n, n, dtype=np.int64)
    for r in range(n):
        work[r, a.cols[r]] = a.vals[r]
        if a.cols[r]:
            lead[r] = a.cols[r][0]
    colmax = np.abs(work).max(axis=0) if n else np.zeros(0)
    gaps = gap_matrix(work != 0.0).astype(np.int64)

    status, k, pivots, et, es, em = _eliminate(
        work, gaps, lead, colmax, SINGULAR_RTOL, check_gaps
    )
    if status == 1:
        raise SingularMatrixError(k)
    if status == 2:
        raise SingularMatrixError(k, f"matrix is singular: pivot in column {k} is negligible")
    if status == 3:
        raise AssertionError(f"zero-gap mirror out of date after column {k}")

    eliminate = tuple(zip(et.tolist(), es.tolist(), em.tolist()))
    tri = SparseMatrix(n)
    back = []
    for k in range(n - 1, -1, -1):
        p = int(pivots[k])
        rc = (np.flatnonzero(work[p, k:]) + k).tolist()
        rv = work[p, rc].tolist()
        tri.cols[k] = rc
        tri.vals[k] = rv
        back.append((k, p, rv[0], tuple(rc[1:]), tuple(rv[1:])))
    return SolvePlan(n, tri, tuple(pivots.tolist()), eliminate, tuple(back))


def solve_with_plan(plan: SolvePlan, b: Sequence[float]) -> list[float]:
    return plan.solve(b)


def dense_oracle_solve(a, b) -> np.ndarray:
    """Textbook Gaussian elimination with partial pivoting on the augmented matrix."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n) or b.shape != (n,):
        raise ValueError("need a square matrix and a matching vector")
    aug = np.hstack([a, b[:, None]])
    scale = np.abs(a).max(axis=0) if n else np.zeros(0)
    for k in range(n):
        p = k + int(np.argmax(np.abs(aug[k:, k])))
        if aug[p, k] == 0.0 or abs(aug[p, k]) < SINGULAR_RTOL * scale[k]:
            raise SingularMatrixError(k)
        if p != k:
            aug[[k, p]] = aug[[p, k]]
        f = aug[k + 1:, k] / aug[k, k]
        aug[k + 1:, k:] -= f[:, None] * aug[k, k:]
    x = np.zeros(n)
    for k in range(n - 1, -1, -1):
        x[k] = (aug[k, n] - aug[k, k + 1:n] @ x[k + 1:]) / aug[k, k]
    return x
