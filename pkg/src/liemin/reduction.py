"""Exact minimal linear aggregation.

The trajectory of an IVP lies in, and spans, the space ``W`` generated by
the vectors ``x^(j)(v0)``.  Projecting the system onto a basis ``B`` of ``W``
gives the smallest linear aggregation ``y' = G(y)`` with ``x(t) = B y(t)``.

Two coordinate conventions are offered:

``"rational"``
    Gram-Schmidt without normalisation.  ``B`` is exact, ``B^T B = D`` is
    diagonal and the reduced system is ``y' = D^-1 B^T F(B y)``.
``"float"``
    Orthonormal ``B`` in floating point, ``y' = B^T F(B y)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np

from .invariants import double_chain, double_chain_linear
from .linalg import dot
from .poly import IVP, DimensionError, Polynomial, Template, VectorField, lie_derivative

MODES = ("rational", "float")
FLOAT_DROP = 1e-9
ROUNDOFF = 1e-14  # float entries of B below this are reorthogonalization noise


def derivative_vectors(ivp: IVP, m: int) -> List[List[Fraction]]:
    """Exact vectors ``x^(j)(v0)`` for ``j = 0..m``."""
    coords = ivp.variables()
    out = []
    for j in range(m + 1):
        out.append([q.evaluate(ivp.v0) for q in coords])
        if j < m:
            coords = [lie_derivative(q, ivp.field) for q in coords]
    return out


def _gram_schmidt_exact(vectors):
    basis = []
    for v in vectors:
        r = [Fraction(x) for x in v]
        for b in basis:
            c = dot(r, b) / dot(b, b)
            if c:
                r = [x - c * y for x, y in zip(r, b)]
        if any(r):
            basis.append(r)
    return basis


def _gram_schmidt_float(vectors, tol=FLOAT_DROP):
    basis: List[np.ndarray] = []
    for v in vectors:
        v = np.asarray([float(x) for x in v])
        norm0 = np.linalg.norm(v)
        if norm0 == 0:
            continue
        r = v.copy()
        for _ in range(2):
            for b in basis:
                r -= (b @ r) * b
        nr = np.linalg.norm(r)
        if nr < tol * norm0:
            continue
        basis.append(r / nr)
    return basis


def trajectory_subspace(ivp: IVP, m: int, mode: str = "rational"):
    """Basis of ``W = span{x^(j)(v0) : j <= m}`` as an ``N x l`` matrix.

    Rational mode returns a list of rows of Fractions (columns mutually
    orthogonal); float mode returns an orthonormal ``numpy`` array.
    """
    _check_mode(mode)
    vecs = derivative_vectors(ivp, m)
    n = ivp.nvars
    if mode == "rational":
        cols = _gram_schmidt_exact(vecs)
        return [[c[i] for c in cols] for i in range(n)]
    cols = _gram_schmidt_float(vecs)
    if not cols:
        return np.zeros((n, 0))
    B = np.column_stack(cols)
    B[np.abs(B) < ROUNDOFF] = 0.0
    return B


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


@dataclass
class ReducedSystem:
    """A minimal linear aggregation of an IVP.

    ``B`` has one row per original variable and one column per reduced
    variable.  ``gram`` holds the diagonal of ``B^T B`` in rational mode.
    """

    B: object
    mode: str
    reduced_field: List[Polynomial]
    y0: list
    m: int
    original: IVP
    gram: Optional[List[Fraction]] = None
    names: List[str] = field(default_factory=list)

    @property
    def l(self) -> int:
        return len(self.reduced_field)

    @property
    def N(self) -> int:
        return self.original.nvars

    def ivp(self) -> IVP:
        """The reduced system as an IVP over ``y1 .. yl``."""
        if self.l == 0:
            raise ValueError("the reduced system has no variables")
        return IVP(VectorField(self.reduced_field), self.y0, self.names)

    def rows(self) -> list:
        if self.mode == "rational":
            return [list(r) for r in self.B]
        return [list(map(float, r)) for r in np.asarray(self.B)]

    def is_minimal_already(self) -> bool:
        return self.l == self.N

    def to_dict(self) -> dict:
        d = {
            "mode": self.mode,
            "m": self.m,
            "l": self.l,
            "variables": list(self.original.names),
            "reduced_variables": list(self.names),
            "B": self.rows(),
            "y0": list(self.y0),
            "classes": [[self.original.names[i] for i in c] for c in variable_classes(self)],
        }
        if self.gram is not None:
            d["gram_diagonal"] = list(self.gram)
        return d


def _images(B_rows, l):
    """Polynomials ``(B y)_i`` in ``l`` variables."""
    out = []
    for row in B_rows:
        out.append(Polynomial({tuple(int(k == j) for k in range(l)): c for j, c in enumerate(row) if c != 0}, l))
    return out


def minimize(
    ivp: IVP,
    mode: str = "rational",
    *,
    cap: int = 500,
    pseudoideal: Optional[int] = None,
    chop: float = 1e-12,
) -> ReducedSystem:
    """Minimal linear aggregation of ``ivp``.

    Runs the double chain on the full linear template to find ``m``, then
    projects onto ``span{x^(j)(v0) : j <= m}``.
    """
    _check_mode(mode)
    pi = Template.linear(ivp.nvars)
    if ivp.field.is_linear():
        res = double_chain_linear(pi, ivp, cap=cap)
    else:
        res = double_chain(pi, ivp, cap=cap, pseudoideal=pseudoideal)
    return project(ivp, res.m, mode, chop=chop)


def project(ivp: IVP, m: int, mode: str = "rational", *, chop: float = 1e-12) -> ReducedSystem:
    """Project ``ivp`` onto the trajectory space built from derivatives ``0..m``."""
    _check_mode(mode)
    B = trajectory_subspace(ivp, m, mode)
    n = ivp.nvars
    if mode == "rational":
        l = len(B[0]) if B else 0
        cols = [[B[i][j] for i in range(n)] for j in range(l)]
        gram = [dot(c, c) for c in cols]
        rows = B
    else:
        l = B.shape[1]
        cols = [B[:, j].tolist() for j in range(l)]
        gram = None
        rows = B.tolist()
    names = [f"y{j + 1}" for j in range(l)]
    if l == 0:
        return ReducedSystem(B, mode, [], [], m, ivp, gram, names)
    images = _images(rows, l)
    composed = [f.substitute(images) for f in ivp.drifts]
    G = []
    y0 = []
    for j, c in enumerate(cols):
        g = Polynomial.zero(l)
        for i, bij in enumerate(c):
            if bij != 0:
                g = g + composed[i].scale(bij)
        y = sum((bij * v for bij, v in zip(c, ivp.v0)), Fraction(0) if mode == "rational" else 0.0)
        if mode == "rational":
            g = g.scale(1 / gram[j])
            y = y / gram[j]
        else:
            g = g.chop(chop)
            y = float(y) if abs(y) >= chop else 0.0
        G.append(g)
        y0.append(y)
    return ReducedSystem(B, mode, G, y0, m, ivp, gram, names)


def lift(p: Polynomial, R: ReducedSystem) -> Polynomial:
    """``p(B y)``: a polynomial in the reduced variables."""
    if p.nvars != R.N:
        raise DimensionError(f"polynomial in {p.nvars} variables, system has {R.N}")
    if R.l == 0:
        return Polynomial.constant(p.coeff((0,) * p.nvars), 0)
    return p.substitute(_images(R.rows(), R.l))


def variable_classes(R: ReducedSystem, tol: float = 1e-9) -> List[List[int]]:
    """Indices grouped by equal rows of ``B``; each class is sorted, classes by first index."""
    rows = R.rows()
    classes: List[List[int]] = []
    reps: List[list] = []
    for i, r in enumerate(rows):
        for cls, rep in zip(classes, reps):
            if R.mode == "rational":
                same = r == rep
            else:
                same = all(abs(a - b) <= tol for a, b in zip(r, rep))
            if same:
                cls.append(i)
                break
        else:
            classes.append([i])
            reps.append(r)
    return classes


def reconstruct_state(R: ReducedSystem, y: Sequence) -> np.ndarray:
    """``B y`` as floats, for comparing trajectories."""
    B = np.array([[float(x) for x in r] for r in R.rows()], dtype=float).reshape(R.N, R.l)
    return B @ np.asarray(y, dtype=float)
