"""Sparse multivariate polynomials, templates and Lie derivation.

Polynomials are stored as ``{exponent tuple: coefficient}`` dictionaries with
no zero coefficients.  Coefficients are :class:`fractions.Fraction` (or
``int``) everywhere except in the float reduction paths, which build
polynomials with ``float`` coefficients through the same class.
"""
from __future__ import annotations

import numbers
from fractions import Fraction
from typing import Dict, Iterable, Mapping, Sequence, Tuple

Monomial = Tuple[int, ...]


class DimensionError(ValueError):
    """Operands live in polynomial rings of different dimension."""


def _coerce(c):
    if isinstance(c, (Fraction, float)):
        return c
    if isinstance(c, numbers.Rational):
        return Fraction(c)
    return float(c)


def grevlex_key(m: Monomial) -> tuple:
    """Sort key, larger key means larger monomial in graded reverse lex."""
    return (sum(m),) + tuple(-e for e in reversed(m))


def lex_key(m: Monomial) -> tuple:
    return tuple(m)


def monomial_degree(m: Monomial) -> int:
    return sum(m)


def monomial_mul(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


def monomial_divides(a: Monomial, b: Monomial) -> bool:
    """True iff ``a`` divides ``b``."""
    return all(x <= y for x, y in zip(a, b))


def monomial_div(b: Monomial, a: Monomial) -> Monomial:
    return tuple(y - x for x, y in zip(a, b))


def monomial_lcm(a: Monomial, b: Monomial) -> Monomial:
    return tuple(max(x, y) for x, y in zip(a, b))


def monomials_up_to_degree(nvars: int, d: int) -> list:
    """All exponent vectors of total degree <= d, in increasing grevlex order."""
    out = []

    def rec(prefix, remaining, k):
        if k == nvars - 1:
            for e in range(remaining + 1):
                out.append(tuple(prefix) + (e,))
            return
        for e in range(remaining + 1):
            rec(prefix + [e], remaining - e, k + 1)

    if nvars == 0:
        return [()]
    rec([], d, 0)
    return sorted(out, key=grevlex_key)


class Polynomial:
    """Immutable sparse polynomial in ``nvars`` variables.

    Equality is equality of the term mappings; no zero coefficient is ever
    stored.
    """

    __slots__ = ("_terms", "nvars", "_hash")

    def __init__(self, terms: Mapping[Monomial, object] | None = None, nvars: int = 0, *, _trusted=False):
        if _trusted:
            self._terms = terms
        else:
            clean: Dict[Monomial, object] = {}
            for m, c in (terms or {}).items():
                m = tuple(int(e) for e in m)
                if len(m) != nvars:
                    raise DimensionError(f"monomial {m} has length {len(m)}, expected {nvars}")
                if any(e < 0 for e in m):
                    raise ValueError(f"negative exponent in {m}")
                c = _coerce(c)
                if c != 0:
                    clean[m] = clean.get(m, 0) + c
                    if clean[m] == 0:
                        del clean[m]
            self._terms = clean
        self.nvars = nvars
        self._hash = None

    # -- constructors ---------------------------------------------------
    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls({}, nvars, _trusted=True)

    @classmethod
    def constant(cls, c, nvars: int) -> "Polynomial":
        c = _coerce(c)
        if c == 0:
            return cls.zero(nvars)
        return cls({(0,) * nvars: c}, nvars, _trusted=True)

    @classmethod
    def variable(cls, i: int, nvars: int) -> "Polynomial":
        m = [0] * nvars
        m[i] = 1
        return cls({tuple(m): Fraction(1)}, nvars, _trusted=True)

    @classmethod
    def from_monomial(cls, m: Monomial, c=1) -> "Polynomial":
        return cls({tuple(m): c}, len(m))

    @classmethod
    def _raw(cls, terms: dict, nvars: int) -> "Polynomial":
        return cls(terms, nvars, _trusted=True)

    # -- accessors -------------------------------------------------------
    @property
    def terms(self) -> Dict[Monomial, object]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def monomials(self):
        return self._terms.keys()

    def coeff(self, m: Monomial):
        return self._terms.get(tuple(m), 0)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def __len__(self):
        return len(self._terms)

    def degree(self) -> int:
        """Total degree; the zero polynomial has degree -1."""
        if not self._terms:
            return -1
        return max(sum(m) for m in self._terms)

    def is_constant(self) -> bool:
        return all(sum(m) == 0 for m in self._terms)

    def is_exact(self) -> bool:
        return not any(isinstance(c, float) for c in self._terms.values())

    def sorted_terms(self, key=grevlex_key, reverse=True):
        return sorted(self._terms.items(), key=lambda t: key(t[0]), reverse=reverse)

    # -- ring operations -------------------------------------------------
    def _check(self, other: "Polynomial"):
        if other.nvars != self.nvars:
            raise DimensionError(f"dimension mismatch: {self.nvars} vs {other.nvars}")

    def _lift(self, other):
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction, float)):
            return Polynomial.constant(other, self.nvars)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            v = out.get(m, 0) + c
            if v == 0:
                out.pop(m, None)
            else:
                out[m] = v
        return Polynomial._raw(out, self.nvars)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw({m: -c for m, c in self._terms.items()}, self.nvars)

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "Polynomial":
        c = _coerce(c)
        if c == 0:
            return Polynomial.zero(self.nvars)
        return Polynomial._raw({m: v * c for m, v in self._terms.items()}, self.nvars)

    def mul_term(self, mono: Monomial, c) -> "Polynomial":
        """Multiply by the single term ``c * x^mono``."""
        if c == 0:
            return Polynomial.zero(self.nvars)
        return Polynomial._raw(
            {tuple(a + b for a, b in zip(m, mono)): v * c for m, v in self._terms.items()},
            self.nvars,
        )

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, float)):
            return self.scale(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        self._check(other)
        out: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                v = out.get(m, 0) + c1 * c2
                if v == 0:
                    out.pop(m, None)
                else:
                    out[m] = v
        return Polynomial._raw(out, self.nvars)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = Polynomial.constant(1, self.nvars)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.nvars == other.nvars and self._terms == other._terms
        if isinstance(other, (int, Fraction, float)):
            return self == Polynomial.constant(other, self.nvars)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self._terms.items())))
        return self._hash

    def __repr__(self):
        return f"Polynomial({render(self)!r}, nvars={self.nvars})"

    def __str__(self):
        return render(self)

    # -- calculus and evaluation ------------------------------------------
    def diff(self, i: int) -> "Polynomial":
        out = {}
        for m, c in self._terms.items():
            e = m[i]
            if e:
                mm = m[:i] + (e - 1,) + m[i + 1:]
                out[mm] = c * e
        return Polynomial._raw(out, self.nvars)

    def evaluate(self, point: Sequence) -> object:
        if len(point) != self.nvars:
            raise DimensionError(f"point has length {len(point)}, expected {self.nvars}")
        total = 0
        for m, c in self._terms.items():
            v = c
            for x, e in zip(point, m):
                if e:
                    v = v * x ** e
            total = total + v
        return total

    def __call__(self, *point):
        if len(point) == 1 and isinstance(point[0], (list, tuple)):
            point = point[0]
        return self.evaluate(point)

    def substitute(self, images: Sequence["Polynomial"]) -> "Polynomial":
        """Compose: replace variable ``i`` by ``images[i]`` (all in one target ring)."""
        if len(images) != self.nvars:
            raise DimensionError("need one image per variable")
        if not images:
            raise DimensionError("cannot substitute into a 0-variable ring")
        target = images[0].nvars
        powers: dict = {}

        def power(i, e):
            key = (i, e)
            if key not in powers:
                powers[key] = images[i] ** e
            return powers[key]

        acc = Polynomial.zero(target)
        for m, c in self._terms.items():
            term = Polynomial.constant(c, target)
            for i, e in enumerate(m):
                if e:
                    term = term * power(i, e)
            acc = acc + term
        return acc

    def chop(self, tol: float = 1e-12) -> "Polynomial":
        """Drop float coefficients whose magnitude is below ``tol``."""
        return Polynomial._raw(
            {m: c for m, c in self._terms.items() if not (isinstance(c, float) and abs(c) < tol)},
            self.nvars,
        )


class VectorField:
    """The drifts ``(f_1, ..., f_N)`` of a polynomial ODE system."""

    __slots__ = ("drifts",)

    def __init__(self, drifts: Sequence[Polynomial]):
        drifts = tuple(drifts)
        n = len(drifts)
        if n == 0:
            raise DimensionError("a vector field needs at least one variable")
        for f in drifts:
            if f.nvars != n:
                raise DimensionError(f"drift lives in {f.nvars} variables, field has {n}")
        self.drifts = drifts

    @property
    def nvars(self) -> int:
        return len(self.drifts)

    def __len__(self):
        return len(self.drifts)

    def __iter__(self):
        return iter(self.drifts)

    def __getitem__(self, i):
        return self.drifts[i]

    def __eq__(self, other):
        return isinstance(other, VectorField) and self.drifts == other.drifts

    def __hash__(self):
        return hash(self.drifts)

    def max_degree(self) -> int:
        return max(f.degree() for f in self.drifts)

    def is_linear(self) -> bool:
        return self.max_degree() <= 1

    def evaluate(self, point):
        return [f.evaluate(point) for f in self.drifts]


class IVP:
    """A polynomial initial value problem ``x' = F(x), x(0) = v0``."""

    __slots__ = ("field", "v0", "names")

    def __init__(self, field: VectorField | Sequence[Polynomial], v0: Sequence, names: Sequence[str] | None = None):
        if not isinstance(field, VectorField):
            field = VectorField(field)
        n = field.nvars
        if len(v0) != n:
            raise DimensionError(f"initial point has length {len(v0)}, expected {n}")
        if names is None:
            names = [f"x{i + 1}" for i in range(n)]
        names = tuple(names)
        if len(names) != n:
            raise DimensionError("one name per variable required")
        if len(set(names)) != n:
            raise ValueError("variable names must be distinct")
        for nm in names:
            if not nm.isidentifier():
                raise ValueError(f"bad variable name {nm!r}")
        self.field = field
        self.v0 = tuple(_coerce(c) for c in v0)
        self.names = names

    @property
    def nvars(self) -> int:
        return self.field.nvars

    @property
    def drifts(self):
        return self.field.drifts

    def var(self, name_or_index) -> Polynomial:
        i = self.names.index(name_or_index) if isinstance(name_or_index, str) else name_or_index
        return Polynomial.variable(i, self.nvars)

    def variables(self):
        return [Polynomial.variable(i, self.nvars) for i in range(self.nvars)]

    def __eq__(self, other):
        return (
            isinstance(other, IVP)
            and self.field == other.field
            and self.v0 == other.v0
            and self.names == other.names
        )

    def __repr__(self):
        eqs = ", ".join(f"{n}'={render(f, self.names)}" for n, f in zip(self.names, self.drifts))
        return f"IVP({eqs}; v0={[str(c) for c in self.v0]})"


def lie_derivative(p: Polynomial, F: VectorField | IVP) -> Polynomial:
    """Return sum_i dp/dx_i * f_i."""
    if isinstance(F, IVP):
        F = F.field
    if p.nvars != F.nvars:
        raise DimensionError(f"polynomial in {p.nvars} variables, field in {F.nvars}")
    n = p.nvars
    out: dict = {}
    drift_items = [list(f.items()) for f in F.drifts]
    for m, c in p.items():
        for i in range(n):
            e = m[i]
            if not e or not drift_items[i]:
                continue
            base = m[:i] + (e - 1,) + m[i + 1:]
            ce = c * e
            for fm, fc in drift_items[i]:
                mm = tuple(a + b for a, b in zip(base, fm))
                v = out.get(mm, 0) + ce * fc
                if v == 0:
                    out.pop(mm, None)
                else:
                    out[mm] = v
    return Polynomial._raw(out, n)


def lie_derivative_iter(p: Polynomial, F: VectorField | IVP, j: int) -> Polynomial:
    if j < 0:
        raise ValueError("j must be non-negative")
    if isinstance(F, IVP):
        F = F.field
    if p.nvars != F.nvars:
        raise DimensionError(f"polynomial in {p.nvars} variables, field in {F.nvars}")
    for _ in range(j):
        p = lie_derivative(p, F)
    return p


def lie_derivatives(p: Polynomial, F, count: int) -> list:
    """``[p, L(p), ..., L^(count-1)(p)]``."""
    out = []
    for _ in range(count):
        out.append(p)
        p = lie_derivative(p, F)
    return out


def evaluate(p: Polynomial, point: Sequence):
    return p.evaluate(point)


# ---------------------------------------------------------------------------
# Linear expressions and templates


class LinExpr:
    """Homogeneous linear form ``sum_k c_k a_k`` in template parameters."""

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: Mapping[int, object] | None = None):
        clean = {}
        for k, c in (coeffs or {}).items():
            if k < 0:
                raise ValueError("parameter index must be non-negative")
            c = _coerce(c)
            if c != 0:
                clean[int(k)] = c
        self._coeffs = clean

    @property
    def coeffs(self) -> Dict[int, object]:
        return dict(self._coeffs)

    def items(self):
        return self._coeffs.items()

    def is_zero(self):
        return not self._coeffs

    def __add__(self, other: "LinExpr") -> "LinExpr":
        out = dict(self._coeffs)
        for k, c in other._coeffs.items():
            out[k] = out.get(k, 0) + c
        return LinExpr(out)

    def __neg__(self):
        return LinExpr({k: -c for k, c in self._coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "LinExpr":
        return LinExpr({k: v * c for k, v in self._coeffs.items()})

    def value(self, v: Sequence):
        return sum((c * v[k] for k, c in self._coeffs.items()), Fraction(0))

    def __eq__(self, other):
        return isinstance(other, LinExpr) and self._coeffs == other._coeffs

    def __hash__(self):
        return hash(frozenset(self._coeffs.items()))

    def __repr__(self):
        return f"LinExpr({self._coeffs})"


class Template:
    """Polynomial whose coefficients are :class:`LinExpr` in ``nparams`` parameters."""

    __slots__ = ("_terms", "nparams", "nvars")

    def __init__(self, terms: Mapping[Monomial, LinExpr], nparams: int, nvars: int):
        clean = {}
        for m, ell in terms.items():
            m = tuple(m)
            if len(m) != nvars:
                raise DimensionError(f"monomial {m} has length {len(m)}, expected {nvars}")
            if any(k >= nparams for k, _ in ell.items()):
                raise ValueError("parameter index out of range")
            if not ell.is_zero():
                clean[m] = ell
        self._terms = clean
        self.nparams = nparams
        self.nvars = nvars

    @classmethod
    def from_columns(cls, columns: Sequence[Polynomial], nvars: int | None = None) -> "Template":
        """Template ``sum_k a_k * columns[k]``."""
        if nvars is None:
            if not columns:
                raise ValueError("nvars required for an empty template")
            nvars = columns[0].nvars
        acc: Dict[Monomial, dict] = {}
        for k, q in enumerate(columns):
            if q.nvars != nvars:
                raise DimensionError("column dimension mismatch")
            for m, c in q.items():
                acc.setdefault(m, {})[k] = c
        return cls({m: LinExpr(d) for m, d in acc.items()}, len(columns), nvars)

    @classmethod
    def full(cls, monomials: Sequence[Monomial], nvars: int) -> "Template":
        """One fresh parameter per monomial."""
        return cls.from_columns([Polynomial({m: 1}, nvars) for m in monomials], nvars)

    @classmethod
    def linear(cls, nvars: int) -> "Template":
        return cls.from_columns([Polynomial.variable(i, nvars) for i in range(nvars)], nvars)

    @classmethod
    def degree_at_most(cls, nvars: int, d: int) -> "Template":
        return cls.full(monomials_up_to_degree(nvars, d), nvars)

    def items(self):
        return self._terms.items()

    @property
    def terms(self):
        return dict(self._terms)

    def is_zero(self):
        return not self._terms

    def degree(self) -> int:
        return max((sum(m) for m in self._terms), default=-1)

    def columns(self) -> list:
        """``[pi[e_1], ..., pi[e_n]]``."""
        cols = [dict() for _ in range(self.nparams)]
        for m, ell in self._terms.items():
            for k, c in ell.items():
                cols[k][m] = c
        return [Polynomial._raw(c, self.nvars) for c in cols]

    def instantiate(self, v: Sequence) -> Polynomial:
        if len(v) != self.nparams:
            raise DimensionError(f"parameter vector has length {len(v)}, expected {self.nparams}")
        out = {}
        for m, ell in self._terms.items():
            c = ell.value(v)
            if c != 0:
                out[m] = c
        return Polynomial._raw(out, self.nvars)

    def __eq__(self, other):
        return (
            isinstance(other, Template)
            and self.nparams == other.nparams
            and self.nvars == other.nvars
            and self._terms == other._terms
        )

    def __add__(self, other: "Template") -> "Template":
        if other.nvars != self.nvars:
            raise DimensionError("dimension mismatch")
        out = dict(self._terms)
        for m, ell in other._terms.items():
            out[m] = out[m] + ell if m in out else ell
        return Template(out, max(self.nparams, other.nparams), self.nvars)

    def scale(self, c) -> "Template":
        return Template({m: ell.scale(c) for m, ell in self._terms.items()}, self.nparams, self.nvars)

    def __repr__(self):
        return f"Template({render_template(self)!r})"

    def __str__(self):
        return render_template(self)


def instantiate(pi: Template, v: Sequence) -> Polynomial:
    return pi.instantiate(v)


def template_lie_derivative(pi: Template, F: VectorField | IVP) -> Template:
    """Lie derivative with the linear coefficients treated as constants."""
    if isinstance(F, IVP):
        F = F.field
    if pi.nvars != F.nvars:
        raise DimensionError(f"template in {pi.nvars} variables, field in {F.nvars}")
    cols = [lie_derivative(c, F) for c in pi.columns()]
    return Template.from_columns(cols, pi.nvars)


# ---------------------------------------------------------------------------
# Rendering


def _fmt_coeff(c) -> str:
    if isinstance(c, float):
        return repr(c)
    c = Fraction(c)
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


def render_monomial(m: Monomial, names: Sequence[str]) -> str:
    parts = []
    for name, e in zip(names, m):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


def default_names(n: int) -> list:
    return [f"x{i + 1}" for i in range(n)]


def _render_terms(items, names) -> str:
    out = []
    for m, c in items:
        mono = render_monomial(m, names)
        neg = c < 0
        a = -c if neg else c
        if mono:
            body = mono if a == 1 else f"{_fmt_coeff(a)}*{mono}"
        else:
            body = _fmt_coeff(a)
        if not out:
            out.append(f"-{body}" if neg else body)
        else:
            out.append(f" - {body}" if neg else f" + {body}")
    return "".join(out) if out else "0"


def render(p: Polynomial, names: Sequence[str] | None = None) -> str:
    """Human/parseable text, terms in decreasing grevlex order."""
    names = names or default_names(p.nvars)
    return _render_terms(p.sorted_terms(), names)


def render_linexpr(ell: LinExpr, params: Sequence[str] | None = None) -> str:
    items = sorted(ell.items())
    out = []
    for k, c in items:
        name = params[k] if params else f"a{k + 1}"
        neg = c < 0
        a = -c if neg else c
        body = name if a == 1 else f"{_fmt_coeff(a)}*{name}"
        if not out:
            out.append(f"-{body}" if neg else body)
        else:
            out.append(f" - {body}" if neg else f" + {body}")
    return "".join(out) if out else "0"


def render_template(pi: Template, names: Sequence[str] | None = None, params: Sequence[str] | None = None) -> str:
    names = names or default_names(pi.nvars)
    parts = []
    for m, ell in sorted(pi.items(), key=lambda t: grevlex_key(t[0]), reverse=True):
        mono = render_monomial(m, names)
        lin = render_linexpr(ell, params)
        single = len(ell.coeffs) == 1
        if single and not mono:
            parts.append(lin)
        elif single:
            k, c = next(iter(ell.items()))
            pname = params[k] if params else f"a{k + 1}"
            if c == 1:
                parts.append(f"{pname}*{mono}")
            elif c == -1:
                parts.append(f"-{pname}*{mono}")
            else:
                parts.append(f"{_fmt_coeff(c)}*{pname}*{mono}")
        else:
            parts.append(f"({lin})*{mono}" if mono else f"({lin})")
    if not parts:
        return "0"
    text = parts[0]
    for p in parts[1:]:
        text += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
    return text
