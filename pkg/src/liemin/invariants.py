"""Invariant ideals of polynomial IVPs.

Contains the single-polynomial iteration, the double-chain algorithm over a
parametric template (with its linear-system shortcut and the optional
pseudoideal stabilization test) and certificate checking for user-supplied
generator sets.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence

from .groebner import GREVLEX, GroebnerBasis, MonomialOrder, buchberger, membership_certificate
from .linalg import SparseEchelon, nullspace, rref
from .poly import (
    IVP,
    DimensionError,
    Polynomial,
    Template,
    grevlex_key,
    lie_derivative,
    monomials_up_to_degree,
)

log = logging.getLogger(__name__)

DEFAULT_NAIVE_CAP = 200
DEFAULT_CHAIN_CAP = 500


class CapExceeded(RuntimeError):
    """An iteration safety cap was hit before stabilization."""


# ---------------------------------------------------------------------------
# Naive single-polynomial chain


@dataclass
class NaiveResult:
    """Outcome of :func:`naive_invariant`.

    When ``valid`` the ideal generated by ``derivatives`` (``p`` and its first
    ``index`` Lie derivatives) is the least invariant containing ``p``.
    Otherwise ``derivatives[index]`` evaluates to ``witness != 0`` at ``v0``.
    """

    valid: bool
    index: int
    derivatives: List[Polynomial]
    groebner: Optional[GroebnerBasis] = None
    witness: object = None

    @property
    def m(self) -> int:
        return self.index

    @property
    def basis(self) -> List[Polynomial]:
        return self.derivatives[: self.index + 1]


def naive_invariant(
    p: Polynomial,
    ivp: IVP,
    cap: int = DEFAULT_NAIVE_CAP,
    order: MonomialOrder = GREVLEX,
) -> NaiveResult:
    """Smallest invariant ideal containing ``p``, or a refutation."""
    if p.nvars != ivp.nvars:
        raise DimensionError(f"polynomial in {p.nvars} variables, system has {ivp.nvars}")
    v0 = ivp.v0
    derivs = [p]
    gb: Optional[GroebnerBasis] = None
    for m in range(cap + 1):
        cur = derivs[m]
        val = cur.evaluate(v0)
        if val != 0:
            return NaiveResult(False, m, derivs, None, val)
        nxt = lie_derivative(cur, ivp.field)
        derivs.append(nxt)
        gens = list(gb.generators) + [cur] if gb is not None else [cur]
        gb = buchberger(gens, order, nvars=ivp.nvars)
        if gb.contains(nxt):
            return NaiveResult(True, m, derivs, gb, None)
    raise CapExceeded(f"naive chain did not stabilize within {cap} derivatives")


def check_equivalence(p: Polynomial, q: Polynomial, ivp: IVP, cap: int = DEFAULT_NAIVE_CAP) -> bool:
    """True iff ``p(x(t)) == q(x(t))`` identically."""
    return naive_invariant(p - q, ivp, cap).valid


# ---------------------------------------------------------------------------
# Constraint rows and parameter spaces


def constraint_row(pi: Template, v0: Sequence) -> List[Fraction]:
    """Row ``t`` with ``pi[v](v0) == t . v`` for all parameter vectors ``v``."""
    return [Fraction(c.evaluate(v0)) for c in pi.columns()]


class ConstraintMatrix:
    """Stack of constraint rows with exact rank tracking."""

    def __init__(self, nparams: int, rows: Sequence[Sequence] = ()):
        self.nparams = nparams
        self.rows: List[List[Fraction]] = []
        self._ech = SparseEchelon(order_key=lambda k: -k)
        for r in rows:
            self.add_row(r)

    def add_row(self, row: Sequence) -> bool:
        """Append ``row``; True when it increases the rank."""
        row = [Fraction(x) for x in row]
        if len(row) != self.nparams:
            raise DimensionError(f"row has length {len(row)}, expected {self.nparams}")
        self.rows.append(row)
        return self._ech.add({k: c for k, c in enumerate(row) if c != 0})

    @property
    def rank(self) -> int:
        return len(self._ech)

    def null_space(self) -> List[List[Fraction]]:
        return null_space_basis(self)


def null_space_basis(T: ConstraintMatrix | Sequence[Sequence], nparams: int | None = None) -> List[List[Fraction]]:
    """Exact basis of the right null space, ``n - rank`` vectors."""
    if isinstance(T, ConstraintMatrix):
        return nullspace(T.rows, T.nparams)
    if nparams is None:
        raise ValueError("nparams required for a plain row list")
    return nullspace([list(r) for r in T], nparams)


def canonical_basis(vectors: Sequence[Sequence], n: int) -> List[List[Fraction]]:
    """Reduced row echelon form of the span, one vector per pivot."""
    if not vectors:
        return []
    R, _ = rref(vectors, n)
    return [list(r) for r in R]


def result_template(pi: Template, V_basis: Sequence[Sequence]) -> Template:
    """Template over fresh parameters whose instances are exactly ``pi[span V]``."""
    if not V_basis:
        return Template({}, 0, pi.nvars)
    for v in V_basis:
        if len(v) != pi.nparams:
            raise DimensionError("basis vector length differs from parameter count")
    return Template.from_columns([pi.instantiate(v) for v in V_basis], pi.nvars)


# ---------------------------------------------------------------------------
# Pseudoideals


class Pseudoideal:
    """The vector space ``{sum h_i s_i : deg(h_i) <= k}``, grown one generator at a time."""

    def __init__(self, nvars: int, k: int):
        if k < 0:
            raise ValueError("k must be non-negative")
        self.k = k
        self.nvars = nvars
        self._shifts = monomials_up_to_degree(nvars, k)
        self._ech = SparseEchelon(order_key=grevlex_key)

    def add(self, s: Polynomial) -> None:
        if s.is_zero():
            return
        for mono in self._shifts:
            self._ech.add(dict(s.mul_term(mono, 1).items()))

    def contains(self, p: Polynomial) -> bool:
        return p.is_zero() or self._ech.contains(dict(p.items()))


def pseudoideal_member(p: Polynomial, S: Sequence[Polynomial], k: int) -> bool:
    """Is ``p = sum h_i S_i`` with every ``deg(h_i) <= k``?  Exact linear solve."""
    if k < 0:
        raise ValueError("k must be non-negative")
    space = Pseudoideal(p.nvars, k)
    for s in S:
        space.add(s)
    return space.contains(p)


# ---------------------------------------------------------------------------
# Double chain


@dataclass
class InvariantResult:
    """Output of the double-chain algorithm.

    ``V_basis`` spans the parameters whose template instances vanish along
    the trajectory; ``J_groebner`` is the smallest invariant containing them.
    """

    m: int
    V_basis: List[List[Fraction]]
    J_generators: List[Polynomial]
    J_groebner: GroebnerBasis
    result_template: Template
    template: Template
    dims: List[int] = field(default_factory=list)
    groebner_checks: int = 0
    pseudoideal_hits: int = 0
    elapsed: float = 0.0

    @property
    def dim(self) -> int:
        return len(self.V_basis)

    def laws(self) -> List[Polynomial]:
        """The basis instances ``pi[b]`` for ``b`` in ``V_basis``."""
        return [self.template.instantiate(b) for b in self.V_basis]


class _Chain:
    """Incremental state: a basis of V_i and the derivative levels pi^(j)[b]."""

    def __init__(self, pi: Template, ivp: IVP):
        self.ivp = ivp
        self.n = pi.nparams
        self.basis = [[Fraction(int(i == k)) for i in range(self.n)] for k in range(self.n)]
        self.levels: List[List[Polynomial]] = []  # levels[j][b]
        self.cols = pi.columns()

    @property
    def dim(self):
        return len(self.basis)

    def next_level(self) -> List[Polynomial]:
        if not self.levels:
            return list(self.cols)
        return [lie_derivative(q, self.ivp.field) for q in self.levels[-1]]

    def restrict(self, level: List[Polynomial]) -> bool:
        """Append ``level`` and impose its vanishing at v0; True if V shrank."""
        self.levels.append(level)
        row = [Fraction(q.evaluate(self.ivp.v0)) for q in level]
        if all(c == 0 for c in row):
            return False
        # one pivot eliminated: new basis vectors are e_k - (row_k / row_p) e_p
        p = next(i for i, c in enumerate(row) if c != 0)
        combos = []
        for k in range(len(row)):
            if k == p:
                continue
            combos.append((k, -row[k] / row[p]))
        self.basis = [
            [bk + f * bp for bk, bp in zip(self.basis[k], self.basis[p])] if f else list(self.basis[k])
            for k, f in combos
        ]
        self.levels = [
            [lvl[k] + lvl[p].scale(f) if f else lvl[k] for k, f in combos] for lvl in self.levels
        ]
        return True

    def generators(self, upto: Optional[int] = None) -> List[Polynomial]:
        lv = self.levels if upto is None else self.levels[: upto + 1]
        return [q for level in lv for q in level if not q.is_zero()]


def _check_template(pi: Template, ivp: IVP):
    if pi.nvars != ivp.nvars:
        raise DimensionError(f"template in {pi.nvars} variables, system has {ivp.nvars}")
    if pi.nparams < 1:
        raise ValueError("template needs at least one parameter")


def double_chain(
    pi: Template,
    ivp: IVP,
    *,
    cap: int = DEFAULT_CHAIN_CAP,
    pseudoideal: Optional[int] = None,
    order: MonomialOrder = GREVLEX,
    linear_shortcut: bool = False,
    groebner_cap: Optional[int] = None,
) -> InvariantResult:
    """All instances of ``pi`` that vanish along the trajectory, plus their invariant.

    ``pseudoideal`` (a degree bound k) enables the linear-algebra
    stabilization test before falling back to Groebner membership.
    ``linear_shortcut`` stops at the first repeated vector space, which is
    only sound for linear systems (see :func:`double_chain_linear`).
    """
    _check_template(pi, ivp)
    t0 = time.perf_counter()
    gb_kw = {} if groebner_cap is None else {"cap": groebner_cap}
    chain = _Chain(pi, ivp)
    chain.restrict(chain.next_level())
    dims = [chain.dim]
    checks = hits = 0
    cached_gb: Optional[GroebnerBasis] = None
    cached_key = None
    pseudo: Optional[Pseudoideal] = None
    pseudo_key = None
    for i in range(cap + 1):
        if chain.dim == 0:
            m = i
            break
        level = chain.next_level()
        shrank = chain.restrict(level)
        dims.append(chain.dim)
        if shrank:
            cached_gb = None
            continue
        if linear_shortcut:
            m = i
            break
        # V_{i+1} == V_i: test pi^(i+1)[B_i] against J_i
        gens_i = chain.generators(upto=i)
        if pseudoideal is not None:
            if pseudo is not None and pseudo_key == (chain.dim, i - 1):
                for q in chain.levels[i]:
                    pseudo.add(q)
            else:
                pseudo = Pseudoideal(ivp.nvars, pseudoideal)
                for q in gens_i:
                    pseudo.add(q)
            pseudo_key = (chain.dim, i)
            if all(pseudo.contains(q) for q in level):
                hits += 1
                m = i
                break
        checks += 1
        key = (chain.dim, i - 1)
        if cached_gb is not None and cached_key == key:
            gb = buchberger(list(cached_gb.generators) + list(chain.levels[i]), order, nvars=ivp.nvars, **gb_kw)
        else:
            gb = buchberger(gens_i, order, nvars=ivp.nvars, **gb_kw)
        cached_gb, cached_key = gb, (chain.dim, i)
        if all(gb.contains(q) for q in level):
            m = i
            break
        log.debug("iteration %d: V stable (dim %d) but ideal grew", i, chain.dim)
    else:
        raise CapExceeded(f"double chain did not stabilize within {cap} iterations")

    V = canonical_basis(chain.basis, pi.nparams)
    J_gens: List[Polynomial] = []
    if V:
        base = [pi.instantiate(v) for v in V]
        level = base
        for j in range(m + 1):
            J_gens.extend(q for q in level if not q.is_zero())
            if j < m:
                level = [lie_derivative(q, ivp.field) for q in level]
        if cached_gb is not None and cached_key == (chain.dim, m):
            gb = cached_gb
        else:
            gb = buchberger(J_gens, order, nvars=ivp.nvars, **gb_kw)
    else:
        gb = GroebnerBasis((), order, True, ivp.nvars)
    return InvariantResult(
        m=m,
        V_basis=V,
        J_generators=J_gens,
        J_groebner=gb,
        result_template=result_template(pi, V),
        template=pi,
        dims=dims,
        groebner_checks=checks,
        pseudoideal_hits=hits,
        elapsed=time.perf_counter() - t0,
    )


def double_chain_linear(pi: Template, ivp: IVP, *, cap: int = DEFAULT_CHAIN_CAP, order: MonomialOrder = GREVLEX) -> InvariantResult:
    """Single-chain variant for linear vector fields (no Groebner termination test)."""
    if not ivp.field.is_linear():
        raise ValueError("double_chain_linear requires drifts of degree <= 1")
    return double_chain(pi, ivp, cap=cap, order=order, linear_shortcut=True)


def default_pseudoideal_degree(pi: Template, ivp: IVP) -> int:
    return max(pi.degree(), 0) + ivp.field.max_degree()


# ---------------------------------------------------------------------------
# Independent chain helpers (recompute V_i and J_i from scratch)


def chain_space(pi: Template, ivp: IVP, i: int) -> List[List[Fraction]]:
    """Basis of V_i from the full constraint matrix of rows 0..i."""
    T = ConstraintMatrix(pi.nparams)
    cols = pi.columns()
    for j in range(i + 1):
        T.add_row([Fraction(c.evaluate(ivp.v0)) for c in cols])
        cols = [lie_derivative(c, ivp.field) for c in cols]
    return canonical_basis(null_space_basis(T), pi.nparams)


def chain_ideal_generators(pi: Template, ivp: IVP, i: int, basis=None) -> List[Polynomial]:
    """Generators of J_i: pi^(j)[b] for j <= i and b in a basis of V_i."""
    if basis is None:
        basis = chain_space(pi, ivp, i)
    level = [pi.instantiate(b) for b in basis]
    out = []
    for j in range(i + 1):
        out.extend(q for q in level if not q.is_zero())
        level = [lie_derivative(q, ivp.field) for q in level]
    return out


# ---------------------------------------------------------------------------
# Certificates


NONZERO_AT_INIT = "NonzeroAtInit"
NOT_CLOSED = "NotClosed"


@dataclass
class CertResult:
    certified: bool
    index: Optional[int] = None
    reason: Optional[str] = None
    groebner: Optional[GroebnerBasis] = None
    derivatives: List[Polynomial] = field(default_factory=list)
    quotients: Optional[List[List[Polynomial]]] = None
    value: object = None

    def __bool__(self):
        return self.certified


def certify_invariant(
    S: Sequence[Polynomial],
    ivp: IVP,
    *,
    order: MonomialOrder = GREVLEX,
    with_certificate: bool = False,
) -> CertResult:
    """Check that ``<S>`` vanishes at v0 and is closed under Lie derivation.

    With ``with_certificate`` the result carries, for every generator ``s``,
    multipliers ``h`` with ``L(s) == sum h_k S_k`` exactly.
    """
    S = list(S)
    if not S:
        raise ValueError("need at least one generator")
    for s in S:
        if s.nvars != ivp.nvars:
            raise DimensionError("generator dimension differs from the system")
    for i, s in enumerate(S):
        val = s.evaluate(ivp.v0)
        if val != 0:
            return CertResult(False, i, NONZERO_AT_INIT, value=val)
    gb = buchberger(S, order, nvars=ivp.nvars)
    derivs = [lie_derivative(s, ivp.field) for s in S]
    for i, d in enumerate(derivs):
        if not gb.contains(d):
            return CertResult(False, i, NOT_CLOSED, gb, derivs)
    quotients = None
    if with_certificate:
        quotients = [membership_certificate(d, S, gb) for d in derivs]
    return CertResult(True, None, None, gb, derivs, quotients)
