"""Approximate linearization by projection on a Krylov space.

Monomial values along the trajectory satisfy ``z' = L^T z`` up to the
truncation of ``L`` to a finite monomial set, with ``z(0) = phi``.
Projecting on the order-``m`` Krylov space of ``L^T`` and ``phi`` yields a
linear system ``y' = A y`` whose observables ``p^T B y(t)`` agree with
``p(x(t))`` up to ``O(t^m)``, exactly when the space is invariant.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .linalg import dot
from .poly import IVP, DimensionError, Monomial, Polynomial, VectorField, lie_derivative

BREAKDOWN = 1e-12


class MonomialBasis:
    """An ordered set of distinct monomials with index lookup."""

    def __init__(self, monomials: Sequence[Monomial], nvars: int | None = None):
        self.monomials: List[Monomial] = list(monomials)
        self.index: Dict[Monomial, int] = {}
        for k, a in enumerate(self.monomials):
            if a in self.index:
                raise ValueError(f"duplicate monomial {a}")
            self.index[a] = k
        if nvars is None:
            nvars = len(self.monomials[0]) if self.monomials else 0
        self.nvars = nvars

    def __len__(self):
        return len(self.monomials)

    def __iter__(self):
        return iter(self.monomials)

    def __contains__(self, a):
        return a in self.index

    def __getitem__(self, k):
        return self.monomials[k]

    def vector(self, p: Polynomial) -> list:
        """Coefficient vector of ``p``; every monomial of ``p`` must be in the basis."""
        v = [Fraction(0)] * len(self)
        for a, c in p.items():
            if a not in self.index:
                raise ValueError(f"monomial {a} of the polynomial is outside the basis")
            v[self.index[a]] = c
        return v

    def values(self, point: Sequence) -> list:
        return [Polynomial.from_monomial(a).evaluate(point) for a in self.monomials]


def monomial_closure(S: Sequence[Polynomial], F: VectorField | IVP, m: int) -> MonomialBasis:
    """Monomials of ``L^j(s)`` for ``s`` in ``S`` and ``j < m``, in order of first occurrence.

    Within one polynomial monomials are visited in decreasing grevlex order.
    """
    if m < 1:
        raise ValueError("order m must be at least 1")
    if not S:
        raise ValueError("need at least one observable")
    seen: Dict[Monomial, None] = {}
    level = list(S)
    for j in range(m):
        for p in level:
            for a, _ in p.sorted_terms():
                seen.setdefault(a, None)
        if j < m - 1:
            level = [lie_derivative(p, F) for p in level]
    return MonomialBasis(list(seen), S[0].nvars)


class LieMatrix:
    """Sparse ``M x M`` matrix of the Lie operator truncated to a monomial basis.

    Column ``k`` holds the coefficients of ``L(basis[k])`` on the basis;
    terms outside the basis are dropped.
    """

    def __init__(self, basis: MonomialBasis, cols: List[Dict[int, object]], dropped: int = 0):
        self.basis = basis
        self.cols = cols
        self.dropped = dropped

    @property
    def truncated(self) -> bool:
        """True when some ``L(alpha)`` has terms outside the basis."""
        return self.dropped > 0

    @property
    def shape(self):
        return (len(self.basis), len(self.basis))

    @property
    def nnz(self) -> int:
        return sum(len(c) for c in self.cols)

    def column(self, k: int) -> Dict[int, object]:
        return dict(self.cols[k])

    def matvec(self, v):
        """``L v``: the Lie derivative of the polynomial with coefficients ``v`` (truncated)."""
        out = [0] * len(self.basis)
        for k, vk in enumerate(v):
            if vk:
                for r, c in self.cols[k].items():
                    out[r] = out[r] + c * vk
        return out

    def rmatvec(self, v):
        """``L^T v``."""
        return [sum((c * v[r] for r, c in col.items()), 0) for col in self.cols]

    def toarray(self, dtype=float) -> np.ndarray:
        A = np.zeros(self.shape, dtype=dtype)
        for k, col in enumerate(self.cols):
            for r, c in col.items():
                A[r, k] = c
        return A

    def exact(self) -> List[List[Fraction]]:
        M = len(self.basis)
        A = [[Fraction(0)] * M for _ in range(M)]
        for k, col in enumerate(self.cols):
            for r, c in col.items():
                A[r][k] = Fraction(c)
        return A


def lie_matrix(basis: MonomialBasis, F: VectorField | IVP) -> LieMatrix:
    if len(basis) == 0:
        raise ValueError("empty monomial basis")
    cols = []
    dropped = 0
    for a in basis:
        d = lie_derivative(Polynomial.from_monomial(a), F)
        col = {basis.index[b]: c for b, c in d.items() if b in basis.index}
        dropped += len(d) - len(col)
        cols.append(col)
    return LieMatrix(basis, cols, dropped)


def _as_operator(LT) -> Callable:
    if callable(LT) and not isinstance(LT, np.ndarray):
        return LT
    if isinstance(LT, LieMatrix):
        raise TypeError("pass lie_matrix(...).rmatvec for the transpose")
    return lambda v: LT @ v


def arnoldi(LT, phi, m: int, *, exact: bool = False):
    """Arnoldi factorization of the order-``m`` Krylov space of ``LT`` and ``phi``.

    ``LT`` is a matrix or a callable computing ``LT @ v``.  Returns
    ``(B, A, happy)``.  In float mode ``B`` is orthonormal with first column
    ``phi / |phi|`` and ``A = B^T LT B`` is upper Hessenberg.  With
    ``exact=True`` the columns of ``B`` are orthogonal but unnormalised
    (first column ``phi``), ``A = D^-1 B^T LT B`` with ``D = B^T B`` and all
    entries are Fractions.  ``happy`` reports that the space became
    invariant within ``m`` steps.
    """
    if m < 1:
        raise ValueError("order m must be at least 1")
    op = _as_operator(LT)
    if exact:
        return _arnoldi_exact(op, [Fraction(x) for x in phi], m)
    phi = np.asarray(phi, dtype=float)
    M = phi.shape[0]
    nphi = np.linalg.norm(phi)
    if nphi == 0:
        return np.zeros((M, 0)), np.zeros((0, 0)), True
    Q = [phi / nphi]
    H = np.zeros((m + 1, m))
    happy = False
    l = m
    for k in range(m):
        w = np.asarray(op(Q[k]), dtype=float)
        for _ in range(2):  # modified Gram-Schmidt plus one reorthogonalization
            for j in range(k + 1):
                h = Q[j] @ w
                H[j, k] += h
                w = w - h * Q[j]
        hn = np.linalg.norm(w)
        H[k + 1, k] = hn
        if hn < BREAKDOWN * nphi:
            happy = True
            l = k + 1
            break
        if k + 1 < m:
            Q.append(w / hn)
    B = np.column_stack(Q[:l])
    return B, H[:l, :l].copy(), happy


def _arnoldi_exact(op, phi: List[Fraction], m: int):
    if not any(phi):
        return [], [], True
    V = [phi]
    norms = [dot(phi, phi)]
    H = [[Fraction(0)] * m for _ in range(m + 1)]
    happy = False
    l = m
    for k in range(m):
        w = [Fraction(x) for x in op(V[k])]
        for j in range(k + 1):
            h = dot(w, V[j]) / norms[j]
            if h:
                H[j][k] = h
                w = [a - h * b for a, b in zip(w, V[j])]
        if not any(w):
            happy = True
            l = k + 1
            break
        H[k + 1][k] = Fraction(1)
        if k + 1 < m:
            V.append(w)
            norms.append(dot(w, w))
    B = [[V[j][i] for j in range(l)] for i in range(len(phi))]
    A = [row[:l] for row in H[:l]]
    return B, A, happy


@dataclass
class LinearReducedSystem:
    """Linear system ``y' = A y, y(0) = y0`` approximating the observables ``S``.

    ``B`` maps reduced states to monomial values; the observable ``p`` is
    reconstructed as ``(p^T B) y(t)``.  ``happy`` records an Arnoldi
    breakdown; ``exact`` additionally requires that no Lie derivative was
    truncated, in which case reconstruction is exact at every order.
    """

    basis: MonomialBasis
    L: LieMatrix
    phi: list
    B: object
    A: object
    y0: list
    m: int
    exact: bool
    mode: str
    happy: bool = False
    observables: List[Polynomial] = field(default_factory=list)
    original: Optional[IVP] = None

    @property
    def l(self) -> int:
        return len(self.y0)

    @property
    def names(self) -> List[str]:
        return [f"y{j + 1}" for j in range(self.l)]

    def ivp(self) -> IVP:
        if self.l == 0:
            raise ValueError("empty linear system")
        drifts = []
        for row in self.A:
            drifts.append(Polynomial({tuple(int(k == j) for k in range(self.l)): c for j, c in enumerate(row) if c != 0}, self.l))
        return IVP(VectorField(drifts), list(self.y0), self.names)

    def taylor(self, row: Sequence, n: int) -> list:
        """First ``n`` Taylor coefficients of ``row . y(t)``."""
        out = []
        v = list(self.y0)
        fact = 1
        for j in range(n):
            if j:
                fact *= j
                v = _mv(self.A, v, self.mode)
            val = sum((r * x for r, x in zip(row, v)), Fraction(0) if self.mode == "rational" else 0.0)
            out.append(val / fact)
        return out

    def derivatives(self, row: Sequence, n: int) -> list:
        """``row . A^j y0`` for ``j < n`` (no factorial scaling)."""
        out = []
        v = list(self.y0)
        for j in range(n):
            if j:
                v = _mv(self.A, v, self.mode)
            out.append(sum((r * x for r, x in zip(row, v)), Fraction(0) if self.mode == "rational" else 0.0))
        return out

    def to_dict(self, names=None) -> dict:
        from .poly import render_monomial

        names = names or (self.original.names if self.original else None)
        rows = [reconstruct(p, self) for p in self.observables]
        return {
            "mode": self.mode,
            "m": self.m,
            "l": self.l,
            "exact": self.exact,
            "happy_breakdown": self.happy,
            "truncated": self.L.truncated,
            "monomials": [render_monomial(a, names) or "1" for a in self.basis] if names else [list(a) for a in self.basis],
            "phi": list(self.phi),
            "A": [list(r) for r in self.A],
            "B": [list(r) for r in self.B],
            "y0": list(self.y0),
            "reconstruction": [list(r) for r in rows],
        }


def _mv(A, v, mode):
    if mode == "rational":
        return [sum((a * x for a, x in zip(row, v)), Fraction(0)) for row in A]
    return list(np.asarray(A, dtype=float) @ np.asarray(v, dtype=float))


def linearize(S: Sequence[Polynomial], ivp: IVP, m: int, mode: str = "float") -> LinearReducedSystem:
    """Order-``m`` linear approximation of the observables ``S`` along ``ivp``."""
    if mode not in ("float", "rational"):
        raise ValueError(f"mode must be 'float' or 'rational', got {mode!r}")
    S = list(S)
    for p in S:
        if p.nvars != ivp.nvars:
            raise DimensionError("observable dimension differs from the system")
    basis = monomial_closure(S, ivp.field, m)
    L = lie_matrix(basis, ivp.field)
    phi = basis.values(ivp.v0)
    if mode == "rational":
        phi = [Fraction(x) for x in phi]
    if not any(phi):
        warnings.warn("all basis monomials vanish at the initial point; the linear system is empty")
    if mode == "rational":
        B, A, happy = arnoldi(L.rmatvec, phi, m, exact=True)
        l = len(A)
        norms = [sum((B[i][j] ** 2 for i in range(len(B))), Fraction(0)) for j in range(l)]
        y0 = [sum((B[i][j] * phi[i] for i in range(len(B))), Fraction(0)) / norms[j] for j in range(l)]
    else:
        phif = np.asarray([float(x) for x in phi])
        B, A, happy = arnoldi(lambda v: np.asarray(L.rmatvec(list(v)), dtype=float), phif, m)
        y0 = list(B.T @ phif)
        y0 = [0.0 if abs(x) < BREAKDOWN * max(1.0, np.linalg.norm(phif)) else float(x) for x in y0]
        A = A.tolist()
        B = B.tolist()
    exact = happy and not L.truncated
    return LinearReducedSystem(basis, L, phi, B, A, y0, m, exact, mode, happy, S, ivp)


def reconstruct(p: Polynomial, R: LinearReducedSystem) -> list:
    """Reconstruction row ``p^T B``: the observable is ``row . y(t)``."""
    v = R.basis.vector(p)
    zero = Fraction(0) if R.mode == "rational" else 0.0
    return [sum((v[i] * R.B[i][j] for i in range(len(v)) if v[i]), zero) for j in range(R.l)]
