"""Multivariate division, Buchberger's algorithm and ideal membership."""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .poly import DimensionError, Monomial, Polynomial, monomial_divides, monomial_lcm

DEFAULT_PAIR_CAP = 100_000


class GroebnerAbort(RuntimeError):
    """Raised when Buchberger's algorithm exceeds its pair-reduction cap."""


class NotGroebnerError(ValueError):
    """A generator list used for membership is not a Groebner basis."""


class MonomialOrder:
    """``lex`` or ``grevlex`` on exponent vectors, after permuting variables.

    ``perm[k]`` is the variable index that plays the role of the k-th
    variable, so ``perm=(2, 0, 1)`` makes the third variable the largest
    under lex.
    """

    def __init__(self, kind: str = "grevlex", perm: Optional[Sequence[int]] = None):
        if kind not in ("lex", "grevlex"):
            raise ValueError(f"unknown monomial order {kind!r}")
        self.kind = kind
        self.perm = tuple(perm) if perm is not None else None

    def key(self, m: Monomial) -> tuple:
        if self.perm is not None:
            m = tuple(m[i] for i in self.perm)
        if self.kind == "lex":
            return tuple(m)
        return (sum(m),) + tuple(-e for e in reversed(m))

    def neg_key(self, m: Monomial) -> tuple:
        return tuple(-k for k in self.key(m))

    def leading(self, p: Polynomial) -> Tuple[Monomial, object]:
        if p.is_zero():
            raise ValueError("zero polynomial has no leading term")
        m = max(p.monomials(), key=self.key)
        return m, p.coeff(m)

    def lm(self, p: Polynomial) -> Monomial:
        return self.leading(p)[0]

    def sort(self, polys):
        return sorted(polys, key=lambda q: self.key(self.lm(q)), reverse=True)

    def __eq__(self, other):
        return isinstance(other, MonomialOrder) and (self.kind, self.perm) == (other.kind, other.perm)

    def __hash__(self):
        return hash((self.kind, self.perm))

    def __repr__(self):
        return f"MonomialOrder({self.kind!r}" + (f", perm={self.perm})" if self.perm else ")")


GREVLEX = MonomialOrder("grevlex")
LEX = MonomialOrder("lex")


def monic(p: Polynomial, order: MonomialOrder = GREVLEX) -> Polynomial:
    if p.is_zero():
        return p
    return p.scale(1 / Fraction(order.leading(p)[1]))


def _reduce(p: Polynomial, divisors, order: MonomialOrder, track: bool):
    """Core division. ``divisors`` is a list of (lm, lc, poly)."""
    n = p.nvars
    work = dict(p.items())
    heap = [(order.neg_key(m), m) for m in work]
    heapq.heapify(heap)
    rem = {}
    quots = [dict() for _ in divisors] if track else None
    lms = [d[0] for d in divisors]
    while heap:
        _, m = heapq.heappop(heap)
        c = work.pop(m, None)
        if c is None:
            continue
        for idx, lm in enumerate(lms):
            if monomial_divides(lm, m):
                _, lc, g = divisors[idx]
                shift = tuple(a - b for a, b in zip(m, lm))
                f = c / lc
                if track:
                    q = quots[idx]
                    q[shift] = q.get(shift, 0) + f
                for gm, gc in g.items():
                    if gm == lm:
                        continue
                    mm = tuple(a + b for a, b in zip(gm, shift))
                    old = work.get(mm)
                    if old is None:
                        work[mm] = -f * gc
                        heapq.heappush(heap, (order.neg_key(mm), mm))
                    else:
                        nv = old - f * gc
                        if nv == 0:
                            del work[mm]
                        else:
                            work[mm] = nv
                break
        else:
            rem[m] = c
    remainder = Polynomial._raw(rem, n)
    if not track:
        return remainder, None
    return remainder, [Polynomial({k: v for k, v in q.items() if v != 0}, n) for q in quots]


def normal_form(
    p: Polynomial,
    G: Sequence[Polynomial],
    order: MonomialOrder = GREVLEX,
    *,
    quotients: bool = True,
):
    """Divide ``p`` by the list ``G``.

    Returns ``(remainder, quotients)`` with ``p == sum(q_i * G_i) + remainder``
    and no term of the remainder divisible by a leading term of ``G``.
    ``quotients`` is None when not requested.
    """
    if isinstance(G, GroebnerBasis):
        order = G.order
    G = list(G)
    divisors = []
    for g in G:
        if g.nvars != p.nvars:
            raise DimensionError("divisor lives in a different ring")
        if g.is_zero():
            raise ZeroDivisionError("zero polynomial in divisor list")
        lm, lc = order.leading(g)
        divisors.append((lm, lc, g))
    if not divisors:
        return p, ([] if quotients else None)
    return _reduce(p, divisors, order, quotients)


def s_polynomial(p: Polynomial, q: Polynomial, order: MonomialOrder = GREVLEX) -> Polynomial:
    if p.is_zero() or q.is_zero():
        raise ValueError("S-polynomial of a zero polynomial")
    (mp, cp), (mq, cq) = order.leading(p), order.leading(q)
    l = monomial_lcm(mp, mq)
    up = tuple(a - b for a, b in zip(l, mp))
    uq = tuple(a - b for a, b in zip(l, mq))
    return p.mul_term(up, 1 / Fraction(cp)) - q.mul_term(uq, 1 / Fraction(cq))


@dataclass(frozen=True)
class GroebnerBasis:
    generators: Tuple[Polynomial, ...]
    order: MonomialOrder
    reduced: bool
    nvars: int

    def __iter__(self):
        return iter(self.generators)

    def __len__(self):
        return len(self.generators)

    def __getitem__(self, i):
        return self.generators[i]

    def is_zero_ideal(self) -> bool:
        return not self.generators

    def is_unit_ideal(self) -> bool:
        return any(g.is_constant() and not g.is_zero() for g in self.generators)

    def reduce(self, p: Polynomial, quotients: bool = False):
        return normal_form(p, self.generators, self.order, quotients=quotients)

    def contains(self, p: Polynomial) -> bool:
        if not self.generators:
            return p.is_zero()
        return normal_form(p, self.generators, self.order, quotients=False)[0].is_zero()

    def __contains__(self, p):
        return self.contains(p)

    def verify(self) -> bool:
        """Every pairwise S-polynomial reduces to zero."""
        return is_groebner(self.generators, self.order)

    def same_ideal(self, other: "GroebnerBasis | Sequence[Polynomial]") -> bool:
        others = other.generators if isinstance(other, GroebnerBasis) else tuple(other)
        if not all(self.contains(q) for q in others):
            return False
        gb = other if isinstance(other, GroebnerBasis) else buchberger(others, self.order)
        return all(gb.contains(g) for g in self.generators)


def is_groebner(G: Sequence[Polynomial], order: MonomialOrder = GREVLEX) -> bool:
    G = [g for g in G if not g.is_zero()]
    for i in range(len(G)):
        for j in range(i + 1, len(G)):
            s = s_polynomial(G[i], G[j], order)
            if not normal_form(s, G, order, quotients=False)[0].is_zero():
                return False
    return True


def _coprime(a: Monomial, b: Monomial) -> bool:
    return all(x == 0 or y == 0 for x, y in zip(a, b))


def _update(lms, pairs, live, h):
    """Gebauer-Moeller update after adding generator ``h``.

    ``pairs`` maps index pairs to their lcm. Returns the new pair map and the
    new list of live generator indices.
    """
    lh = lms[h]
    C = [g for g in live if g != h]
    D = []
    lcm = {g: monomial_lcm(lms[g], lh) for g in C}
    while C:
        g1 = C.pop(0)
        if _coprime(lms[g1], lh) or not any(monomial_divides(lcm[g2], lcm[g1]) for g2 in C + D):
            D.append(g1)
    E = {(g, h): lcm[g] for g in D if not _coprime(lms[g], lh)}
    kept = {}
    for (g1, g2), l12 in pairs.items():
        if (
            not monomial_divides(lh, l12)
            or monomial_lcm(lms[g1], lh) == l12
            or monomial_lcm(lms[g2], lh) == l12
        ):
            kept[(g1, g2)] = l12
    kept.update(E)
    new_live = [g for g in live if g != h and not monomial_divides(lh, lms[g])] + [h]
    return kept, new_live


def buchberger(
    S: Sequence[Polynomial],
    order: MonomialOrder = GREVLEX,
    *,
    reduced: bool = True,
    cap: int = DEFAULT_PAIR_CAP,
    nvars: Optional[int] = None,
) -> GroebnerBasis:
    """Groebner basis of the ideal generated by ``S``.

    Uses the normal selection strategy (least lcm degree, ties by index) and
    the Gebauer-Moeller criteria. Raises :class:`GroebnerAbort` after ``cap``
    pair reductions.
    """
    S = [s for s in S if not s.is_zero()]
    if nvars is None:
        nvars = S[0].nvars if S else 0
    for s in S:
        if s.nvars != nvars:
            raise DimensionError("generators live in different rings")
    if not S:
        return GroebnerBasis((), order, reduced, nvars)
    polys: List[Polynomial] = []
    lms: List[Monomial] = []
    divisors = []  # (lm, lc, poly) aligned with polys
    live: List[int] = []
    pairs: dict = {}

    def insert(f: Polynomial):
        nonlocal pairs
        f = monic(f, order)
        lm = order.lm(f)
        k = len(polys)
        polys.append(f)
        lms.append(lm)
        divisors.append((lm, Fraction(1), f))
        pairs, live[:] = _update(lms, pairs, live, k)

    # inter-reduce the input a little: add in increasing leading-term order
    for s in sorted(S, key=lambda q: order.key(order.lm(q))):
        r, _ = _reduce(s, [divisors[i] for i in live], order, False)
        if not r.is_zero():
            insert(r)
            if r.is_constant():
                return GroebnerBasis((Polynomial.constant(1, nvars),), order, reduced, nvars)

    steps = 0
    while pairs:
        (i, j) = min(pairs, key=lambda ij: (sum(pairs[ij]), order.key(pairs[ij]), ij[1], ij[0]))
        del pairs[(i, j)]
        steps += 1
        if steps > cap:
            raise GroebnerAbort(f"Buchberger exceeded {cap} pair reductions ({len(live)} generators)")
        s = s_polynomial(polys[i], polys[j], order)
        r, _ = _reduce(s, [divisors[k] for k in live], order, False)
        if not r.is_zero():
            insert(r)
            if r.is_constant():
                return GroebnerBasis((Polynomial.constant(1, nvars),), order, reduced, nvars)

    G = [polys[i] for i in live]
    if reduced:
        G = _interreduce(G, order)
    else:
        G = order.sort(G)
    return GroebnerBasis(tuple(G), order, reduced, nvars)


def _interreduce(G: List[Polynomial], order: MonomialOrder) -> List[Polynomial]:
    G = [monic(g, order) for g in G]
    lm = [order.lm(g) for g in G]
    # minimal basis: drop g whose lm is divisible by another's
    keep = []
    for i, g in enumerate(G):
        if any(
            j != i and monomial_divides(lm[j], lm[i]) and (lm[j] != lm[i] or j < i)
            for j in range(len(G))
        ):
            continue
        keep.append(g)
    out = []
    for i, g in enumerate(keep):
        others = [h for k, h in enumerate(keep) if k != i]
        if others:
            divs = [(order.lm(h), Fraction(1), h) for h in others]
            r, _ = _reduce(g, divs, order, False)
        else:
            r = g
        out.append(monic(r, order))
    return order.sort(out)


def ideal_member(p: Polynomial, G: GroebnerBasis | Sequence[Polynomial], order: MonomialOrder = GREVLEX) -> bool:
    """Decide ``p in <G>``. Plain generator lists must already be Groebner bases."""
    if not isinstance(G, GroebnerBasis):
        G = [g for g in G if not g.is_zero()]
        if not is_groebner(G, order):
            raise NotGroebnerError("generator list is not a Groebner basis for the given order")
        G = GroebnerBasis(tuple(G), order, False, p.nvars)
    return G.contains(p)


def membership_certificate(p: Polynomial, gens: Sequence[Polynomial], G: GroebnerBasis):
    """Express ``p`` over the original generators ``gens``, or return None.

    Quotients with respect to the Groebner basis are translated back through
    a cofactor representation of each basis element, computed by division of
    the basis by the extended generating set.  Returns quotient list ``h``
    with ``p == sum(h_i * gens_i)`` exactly.
    """
    rem, q = G.reduce(p, quotients=True)
    if not rem.is_zero():
        return None
    cof = _cofactors(G, gens)
    n = p.nvars
    out = [Polynomial.zero(n) for _ in gens]
    for qi, row in zip(q, cof):
        if qi.is_zero():
            continue
        for k, c in enumerate(row):
            if not c.is_zero():
                out[k] = out[k] + qi * c
    return out


def _cofactors(G: GroebnerBasis, gens: Sequence[Polynomial]):
    """For each element of G, polynomials c with g = sum c_k gens_k.

    Found by running a tracked Buchberger on ``gens``; exact but only meant
    for the small certificate replays the CLI emits.
    """
    order = G.order
    n = G.nvars
    gens = [g for g in gens]
    # each entry: (poly, cofactor row)
    basis = []
    for k, g in enumerate(gens):
        if g.is_zero():
            continue
        row = [Polynomial.zero(n) for _ in gens]
        row[k] = Polynomial.constant(1, n)
        basis.append((g, row))

    def reduce_tracked(f, frow):
        divs = [(order.lm(b), order.leading(b)[1], b) for b, _ in basis]
        r, qs = _reduce(f, divs, order, True)
        rrow = list(frow)
        for qi, (_, brow) in zip(qs, basis):
            if qi.is_zero():
                continue
            rrow = [a - qi * b for a, b in zip(rrow, brow)]
        return r, rrow

    pending = [(i, j) for i in range(len(basis)) for j in range(i + 1, len(basis))]
    steps = 0
    while pending:
        i, j = pending.pop(0)
        steps += 1
        if steps > DEFAULT_PAIR_CAP:
            raise GroebnerAbort("certificate construction exceeded pair cap")
        (p1, r1), (p2, r2) = basis[i], basis[j]
        (m1, c1), (m2, c2) = order.leading(p1), order.leading(p2)
        if all(a == 0 or b == 0 for a, b in zip(m1, m2)):
            continue
        l = monomial_lcm(m1, m2)
        u1 = tuple(a - b for a, b in zip(l, m1))
        u2 = tuple(a - b for a, b in zip(l, m2))
        mono1 = Polynomial({u1: 1 / Fraction(c1)}, n)
        mono2 = Polynomial({u2: 1 / Fraction(c2)}, n)
        s = p1 * mono1 - p2 * mono2
        srow = [a * mono1 - b * mono2 for a, b in zip(r1, r2)]
        r, rrow = reduce_tracked(s, srow)
        if not r.is_zero():
            basis.append((r, rrow))
            k = len(basis) - 1
            pending.extend((t, k) for t in range(k))
    # express each reduced basis element via the tracked basis
    rows = []
    for g in G.generators:
        r, rrow = reduce_tracked(g, [Polynomial.zero(n) for _ in gens])
        assert r.is_zero()
        rows.append([-c for c in rrow])
    return rows
