"""Reference semantics: Taylor prefixes, numeric trajectories and weighted automata.

These are independent of the invariant and reduction algorithms and serve
as oracles for them.
"""
from __future__ import annotations

import csv
import io
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from .poly import IVP, DimensionError, Monomial, Polynomial, VectorField, lie_derivative, render_monomial

# ---------------------------------------------------------------------------
# Taylor coefficients


@dataclass(frozen=True)
class TaylorPrefix:
    """Exact coefficients ``a_j = L^j(p)(v0) / j!`` for ``j < n``."""

    coefficients: Tuple[Fraction, ...]

    def __len__(self):
        return len(self.coefficients)

    def __iter__(self):
        return iter(self.coefficients)

    def __getitem__(self, j):
        return self.coefficients[j]

    def derivatives(self) -> List[Fraction]:
        """``d^j/dt^j p(x(t))`` at 0, i.e. ``j! a_j``."""
        return [c * math.factorial(j) for j, c in enumerate(self.coefficients)]

    def evaluate(self, t) -> float:
        return sum(float(c) * t ** j for j, c in enumerate(self.coefficients))


def taylor_coefficients(p: Polynomial, ivp: IVP, n: int) -> TaylorPrefix:
    if n < 1:
        raise ValueError("n must be at least 1")
    if p.nvars != ivp.nvars:
        raise DimensionError("polynomial dimension differs from the system")
    out = []
    q = p
    fact = 1
    for j in range(n):
        if j:
            q = lie_derivative(q, ivp.field)
            fact *= j
        out.append(Fraction(q.evaluate(ivp.v0)) / fact)
    return TaylorPrefix(tuple(out))


# ---------------------------------------------------------------------------
# Numeric integration


def compile_field(field: VectorField):
    """Fast float evaluation of the drifts as ``f(t, x) -> ndarray``."""
    parts = []
    for f in field.drifts:
        if f.is_zero():
            parts.append(None)
            continue
        mons = np.array(list(f.monomials()), dtype=float).reshape(-1, field.nvars)
        coefs = np.array([float(c) for c in f.terms.values()])
        parts.append((mons, coefs))

    def rhs(t, x):
        out = np.zeros(len(parts))
        for i, part in enumerate(parts):
            if part is not None:
                mons, coefs = part
                out[i] = coefs @ np.prod(np.power(x, mons), axis=1)
        return out

    return rhs


@dataclass
class Trajectory:
    """Samples ``x[k] = x(t[k])``.  ``blowup`` marks an early stop."""

    t: np.ndarray
    x: np.ndarray
    names: Tuple[str, ...]
    t_end: float
    success: bool = True
    blowup: bool = False
    message: str = ""

    def observe(self, p: Polynomial) -> np.ndarray:
        return np.array([float(p.evaluate(list(row))) for row in self.x])

    def to_csv(self, dest=None) -> str:
        """Write ``t, x1..xN`` rows; returns the text when ``dest`` is None."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", *self.names])
        for tk, row in zip(self.t, self.x):
            w.writerow([repr(float(tk)), *(repr(float(v)) for v in row)])
        text = buf.getvalue()
        if dest is None:
            return text
        if hasattr(dest, "write"):
            dest.write(text)
        else:
            with open(dest, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text


class BlowUp(RuntimeError):
    pass


def integrate_numeric(
    ivp: IVP,
    t_end: float,
    *,
    samples: int = 101,
    t_eval: Optional[Sequence[float]] = None,
    rtol: float = 1e-10,
    atol: float = 1e-10,
    method: str = "DOP853",
    blowup_norm: float = 1e12,
) -> Trajectory:
    """Adaptive explicit Runge-Kutta integration on ``[0, t_end]``.

    Integration stops early, with ``blowup`` set, when the state norm
    exceeds ``blowup_norm`` or the step size underflows.
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    if t_eval is None:
        if samples < 2:
            raise ValueError("need at least two samples")
        t_eval = np.linspace(0.0, t_end, samples)
    t_eval = np.asarray(t_eval, dtype=float)
    rhs = compile_field(ivp.field)
    y0 = np.array([float(c) for c in ivp.v0])

    def escape(t, x):
        return blowup_norm - np.max(np.abs(x))

    escape.terminal = True
    sol = solve_ivp(rhs, (0.0, t_end), y0, method=method, t_eval=t_eval, rtol=rtol, atol=atol, events=escape)
    blow = sol.status == 1 or sol.status == -1
    x = sol.y.T if sol.y.size else np.zeros((0, ivp.nvars))
    msg = sol.message
    if sol.status == 1:
        msg = f"state norm exceeded {blowup_norm:g} at t={sol.t_events[0][0]:.6g}"
    return Trajectory(sol.t, x, tuple(ivp.names), t_end, sol.status >= 0 and not blow, blow, msg)


# ---------------------------------------------------------------------------
# Weighted automata


@dataclass
class WeightedAutomaton:
    """Monomials as states; ``alpha --lam--> beta`` when ``L(alpha)`` has coefficient ``lam`` on ``beta``.

    States in ``frontier`` were discovered but not expanded.
    """

    nvars: int
    states: List[Monomial]
    weights: Dict[Monomial, Fraction]
    transitions: List[Tuple[Monomial, Fraction, Monomial]]
    frontier: set = field(default_factory=set)
    names: Tuple[str, ...] = ()

    @property
    def complete(self) -> bool:
        return not self.frontier

    def successors(self, a: Monomial):
        return [(lam, b) for s, lam, b in self.transitions if s == a]

    def label(self, a: Monomial) -> str:
        names = self.names or tuple(f"x{i + 1}" for i in range(self.nvars))
        return render_monomial(a, names) or "1"

    def to_dict(self) -> dict:
        return {
            "states": [
                {"state": self.label(a), "weight": self.weights[a], "frontier": a in self.frontier}
                for a in self.states
            ],
            "transitions": [
                {"from": self.label(a), "weight": lam, "to": self.label(b)} for a, lam, b in self.transitions
            ],
            "complete": self.complete,
        }

    def to_dot(self) -> str:
        from .poly import _fmt_coeff

        lines = ["digraph automaton {", "  rankdir=TB;"]
        ids = {a: f"s{k}" for k, a in enumerate(self.states)}
        for a in self.states:
            shape = "doublecircle" if self.weights[a] != 0 else "circle"
            style = ", style=dashed" if a in self.frontier else ""
            lines.append(f'  {ids[a]} [label="{self.label(a)} / {_fmt_coeff(self.weights[a])}", shape={shape}{style}];')
        for a, lam, b in self.transitions:
            lines.append(f'  {ids[a]} -> {ids[b]} [label="{_fmt_coeff(lam)}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def export_weighted_automaton(ivp: IVP, depth: int) -> WeightedAutomaton:
    """Breadth-first unfolding from the variables, at most ``depth`` expansion rounds."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    n = ivp.nvars
    start = [tuple(int(i == k) for i in range(n)) for k in range(n)]
    states: List[Monomial] = []
    seen = set()
    for a in start:
        if a not in seen:
            seen.add(a)
            states.append(a)
    transitions = []
    expanded = set()
    queue = deque((a, 0) for a in states)
    while queue:
        a, d = queue.popleft()
        if d >= depth:
            continue
        expanded.add(a)
        deriv = lie_derivative(Polynomial.from_monomial(a), ivp.field)
        for b, lam in deriv.sorted_terms():
            transitions.append((a, Fraction(lam), b))
            if b not in seen:
                seen.add(b)
                states.append(b)
                queue.append((b, d + 1))
    weights = {a: Fraction(Polynomial.from_monomial(a).evaluate(ivp.v0)) for a in states}
    frontier = {a for a in states if a not in expanded}
    return WeightedAutomaton(n, states, weights, transitions, frontier, tuple(ivp.names))


class Stream(list):
    """Values ``sigma(0), sigma(1), ...``; ``truncated`` marks a dependence on unexpanded states."""

    truncated: bool = False


def stream_semantics(W: WeightedAutomaton, state, n: int) -> Stream:
    """``sigma_state(i)`` for ``i < n``: summed weights of runs of length ``i``."""
    if isinstance(state, str):
        matches = [a for a in W.states if W.label(a) == state]
        if not matches:
            raise KeyError(f"no state {state!r}")
        state = matches[0]
    if state not in W.weights:
        raise KeyError(f"no state {state!r}")
    cur = {a: W.weights[a] for a in W.states}
    taint = {a: False for a in W.states}
    out = Stream([cur[state]])
    for _ in range(1, n):
        nxt = {a: Fraction(0) for a in W.states}
        ntaint = {a: a in W.frontier for a in W.states}
        for a, lam, b in W.transitions:
            nxt[a] += lam * cur[b]
            ntaint[a] = ntaint[a] or taint[b]
        cur, taint = nxt, ntaint
        out.append(cur[state])
    out.truncated = n > 1 and taint[state]
    return out
