"""Exact rational linear algebra on small dense and sparse vectors."""
from __future__ import annotations

import heapq
from fractions import Fraction
from typing import Dict, Hashable, List, Sequence


def _frac_rows(rows):
    return [[Fraction(x) for x in r] for r in rows]


def rref(rows: Sequence[Sequence], ncols: int | None = None):
    """Reduced row echelon form. Returns ``(rows, pivot_columns)``."""
    A = _frac_rows(rows)
    if ncols is None:
        ncols = len(A[0]) if A else 0
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(A)) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        inv = 1 / A[r][c]
        A[r] = [x * inv for x in A[r]]
        for i in range(len(A)):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == len(A):
            break
    return A[:r], pivots


def rank(rows, ncols: int | None = None) -> int:
    return len(rref(rows, ncols)[1])


def nullspace(rows: Sequence[Sequence], ncols: int) -> List[List[Fraction]]:
    """Exact basis of ``{v : rows @ v = 0}``; one vector per free column."""
    if not rows:
        return [[Fraction(int(i == j)) for i in range(ncols)] for j in range(ncols)]
    R, pivots = rref(rows, ncols)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, pc in zip(R, pivots):
            v[pc] = -row[f]
        basis.append(v)
    return basis


def matmul(A, B):
    return [[sum((a * b for a, b in zip(row, col)), Fraction(0)) for col in zip(*B)] for row in A]


def matvec(A, v):
    return [sum((a * b for a, b in zip(row, v)), Fraction(0)) for row in A]


def dot(u, v):
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def transpose(A):
    return [list(c) for c in zip(*A)]


def is_zero_vector(v) -> bool:
    return all(x == 0 for x in v)


try:  # exact rationals in C when available; Fraction otherwise
    from gmpy2 import mpq as _exact
except ImportError:  # pragma: no cover
    _exact = Fraction


class SparseEchelon:
    """Incrementally maintained echelon basis of sparse vectors.

    Vectors are dicts ``{key: coefficient}``; ``order_key`` ranks keys so that
    each stored row is normalised on its largest key (its pivot).  Since a
    row only has entries at keys below its pivot, reduction visits pivots
    in decreasing order through a heap.
    """

    def __init__(self, order_key=lambda k: k):
        self.rows: Dict[Hashable, dict] = {}
        self.key = order_key
        self._rank: Dict[Hashable, object] = {}

    def __len__(self):
        return len(self.rows)

    def _k(self, k):
        r = self._rank.get(k)
        if r is None:
            r = self._rank[k] = self.key(k)
        return r

    def _reduce(self, vec: dict) -> dict:
        v = {k: _exact(c) for k, c in vec.items() if c != 0}
        rows = self.rows
        heap = [(_Neg(self._k(k)), k) for k in v if k in rows]
        heapq.heapify(heap)
        queued = {k for _, k in heap}
        while heap:
            _, k = heapq.heappop(heap)
            queued.discard(k)
            c = v.get(k)
            if c is None:
                continue
            for kk, cc in rows[k].items():
                nv = v.get(kk, 0) - c * cc
                if nv == 0:
                    v.pop(kk, None)
                else:
                    v[kk] = nv
                    if kk in rows and kk not in queued and kk != k:
                        queued.add(kk)
                        heapq.heappush(heap, (_Neg(self._k(kk)), kk))
        return v

    def reduce(self, vec: dict) -> dict:
        return {k: Fraction(int(c.numerator), int(c.denominator)) for k, c in self._reduce(vec).items()}

    def add(self, vec: dict) -> bool:
        """Insert ``vec``; return False if it was already in the span."""
        r = self._reduce(vec)
        if not r:
            return False
        k = max(r, key=self._k)
        inv = 1 / r[k]
        self.rows[k] = {kk: cc * inv for kk, cc in r.items()}
        return True

    def contains(self, vec: dict) -> bool:
        return not self._reduce(vec)


class _Neg:
    """Reverses the order of arbitrary comparable keys inside a min-heap."""

    __slots__ = ("v",)

    def __init__(self, v):
        self.v = v

    def __lt__(self, other):
        return other.v < self.v
