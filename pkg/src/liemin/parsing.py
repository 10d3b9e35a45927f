"""Text syntax for polynomials, templates and model files.

Expressions use ``+ - * ^`` (``**`` is accepted for ``^``), parentheses,
integer, decimal and ``p/q`` rational literals.  A model file looks like::

    # comments run to end of line
    vars: x, y, z, w
    x' = x*z + z
    y' = y*w + z
    z' = z
    w' = w
    init: x = 0, y = 0, z = 1, w = 1
    template: a1*x + a2*y + a3*z + a4*w

Template parameters are the identifiers ``a1, a2, ...``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence

from .poly import IVP, DimensionError, LinExpr, Polynomial, Template, VectorField, _fmt_coeff, render, render_template

_PARAM_RE = re.compile(r"a([1-9][0-9]*)$")


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
  | (?P<ident>[^\W\d]\w*)
  | (?P<pow>\*\*|\^)
  | (?P<op>[-+*/()])
    """,
    re.VERBOSE | re.UNICODE,
)


def _tokenize(text: str, line: int, col0: int):
    pos = 0
    toks = []
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col0 + pos)
        kind = m.lastgroup
        if kind != "ws":
            val = m.group()
            toks.append((kind if kind != "pow" else "op", "^" if kind == "pow" else val, col0 + pos))
        pos = m.end()
    toks.append(("end", "", col0 + len(text)))
    return toks


class _ExprParser:
    def __init__(self, text: str, names: Sequence[str], line: int = 1, col0: int = 1):
        self.toks = _tokenize(text, line, col0)
        self.i = 0
        self.line = line
        self.index = {n: k for k, n in enumerate(names)}
        self.n = len(names)

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, self.line, tok[2])

    def parse(self) -> Polynomial:
        if self.peek()[0] == "end":
            self.error("empty expression")
        p = self.expr()
        if self.peek()[0] != "end":
            self.error(f"unexpected token {self.peek()[1]!r}")
        return p

    def expr(self):
        acc = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def term(self):
        acc = self.unary()
        while True:
            tok = self.peek()
            if tok[0] == "op" and tok[1] == "*":
                self.take()
                acc = acc * self.unary()
            elif tok[0] == "op" and tok[1] == "/":
                self.take()
                den = self.unary()
                if not den.is_constant() or den.is_zero():
                    self.error("division only by nonzero constants", tok)
                acc = acc.scale(1 / Fraction(den.coeff((0,) * self.n)))
            elif tok[0] in ("num", "ident") or (tok[0] == "op" and tok[1] == "("):
                # juxtaposition such as ``2x`` or ``3(x+y)``
                acc = acc * self.unary()
            else:
                return acc

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("+", "-"):
            self.take()
            p = self.unary()
            return -p if tok[1] == "-" else p
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "^":
            self.take()
            etok = self.take()
            if etok[0] != "num" or not etok[1].isdigit():
                self.error("exponent must be a non-negative integer literal", etok)
            return base ** int(etok[1])
        return base

    def atom(self):
        tok = self.take()
        kind, val, col = tok
        if kind == "num":
            return Polynomial.constant(Fraction(val), self.n)
        if kind == "ident":
            if val not in self.index:
                raise ParseError(f"unknown identifier {val!r}", self.line, col)
            return Polynomial.variable(self.index[val], self.n)
        if kind == "op" and val == "(":
            p = self.expr()
            close = self.take()
            if close[1] != ")":
                raise ParseError("expected ')'", self.line, close[2])
            return p
        raise ParseError(f"unexpected token {val!r}" if val else "unexpected end of input", self.line, col)


def parse_polynomial(text: str, names: Sequence[str], *, line: int = 1, column: int = 1) -> Polynomial:
    """Parse ``text`` as a polynomial over the variables ``names``."""
    if len(names) == 0:
        raise ParseError("no variables declared", line, column)
    return _ExprParser(text, names, line, column).parse()


def parse_rational(text: str, *, line: int = 1, column: int = 1) -> Fraction:
    p = _ExprParser(text, ["_"], line, column).parse()
    if not p.is_constant():
        raise ParseError(f"expected a number, got {text.strip()!r}", line, column)
    return Fraction(p.coeff((0,)))


def param_names_in(text: str) -> List[str]:
    names = set()
    for m in re.finditer(r"[^\W\d]\w*", text):
        if _PARAM_RE.match(m.group()):
            names.add(m.group())
    return sorted(names, key=lambda s: int(s[1:]))


def parse_template(text: str, names: Sequence[str], *, line: int = 1, column: int = 1) -> Template:
    """Parse a template; parameters are ``a1, a2, ...`` and must occur linearly."""
    clash = [n for n in names if _PARAM_RE.match(n)]
    if clash:
        raise ParseError(f"variable names {clash} clash with parameter names", line, column)
    params = param_names_in(text)
    nparams = max((int(p[1:]) for p in params), default=0)
    pnames = [f"a{k + 1}" for k in range(nparams)]
    n = len(names)
    joint = _ExprParser(text, list(names) + pnames, line, column).parse()
    terms: dict = {}
    for m, c in joint.items():
        xm, am = m[:n], m[n:]
        if sum(am) != 1:
            what = "constant term" if sum(am) == 0 else "nonlinear parameter occurrence"
            raise ParseError(f"template has a {what}; coefficients must be linear in a1, a2, ...", line, column)
        k = am.index(1)
        terms.setdefault(xm, {})[k] = c
    return Template({m: LinExpr(d) for m, d in terms.items()}, nparams, n)


# ---------------------------------------------------------------------------
# Model files


@dataclass
class ModelFile:
    ivp: IVP
    templates: List[Template] = field(default_factory=list)
    template_texts: List[str] = field(default_factory=list)
    title: Optional[str] = None

    @property
    def names(self):
        return self.ivp.names


_EQ_RE = re.compile(r"^\s*([^\W\d]\w*)\s*'\s*=(.*)$", re.UNICODE)


def _strip_comment(raw: str) -> str:
    i = raw.find("#")
    return raw if i < 0 else raw[:i]


def parse_model(text: str) -> ModelFile:
    """Parse the model-file format; errors carry line and column."""
    names: Optional[List[str]] = None
    vars_line = 0
    eqs: dict = {}
    init: dict = {}
    init_seen = False
    tmpl_lines = []
    title = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if title is None and raw.strip().startswith("#"):
            title = raw.strip().lstrip("#").strip() or None
        line = _strip_comment(raw)
        if not line.strip():
            continue
        stripped = line.strip()
        col = line.index(stripped[0]) + 1
        head, sep, rest = stripped.partition(":")
        key = head.strip().lower() if sep else ""
        if key == "vars":
            if names is not None:
                raise ParseError("duplicate 'vars:' line", lineno, col)
            names = [s.strip() for s in rest.split(",") if s.strip()]
            vars_line = lineno
            if not names:
                raise ParseError("at least one variable is required", lineno, col)
            for nm in names:
                if not nm.isidentifier():
                    raise ParseError(f"bad variable name {nm!r}", lineno, col)
                if _PARAM_RE.match(nm):
                    raise ParseError(f"variable name {nm!r} is reserved for template parameters", lineno, col)
            if len(set(names)) != len(names):
                raise ParseError("duplicate variable name", lineno, col)
            continue
        if key == "init":
            if names is None:
                raise ParseError("'init:' before 'vars:'", lineno, col)
            init_seen = True
            offset = line.index(":") + 2
            for chunk in _split_with_offsets(rest, offset):
                ctext, ccol = chunk
                if not ctext.strip():
                    continue
                if "=" not in ctext:
                    raise ParseError("expected 'name = value'", lineno, ccol)
                lhs, rhs = ctext.split("=", 1)
                nm = lhs.strip()
                if nm not in names:
                    raise ParseError(f"unknown variable {nm!r} in init", lineno, ccol)
                if nm in init:
                    raise ParseError(f"duplicate initial value for {nm!r}", lineno, ccol)
                init[nm] = parse_rational(rhs, line=lineno, column=ccol + len(lhs) + 1)
            continue
        if key == "template":
            if names is None:
                raise ParseError("'template:' before 'vars:'", lineno, col)
            tcol = line.index(":") + 2
            tmpl_lines.append((rest.strip(), parse_template(rest, names, line=lineno, column=tcol)))
            continue
        m = _EQ_RE.match(line)
        if m:
            if names is None:
                raise ParseError("equation before 'vars:'", lineno, col)
            nm = m.group(1)
            if nm not in names:
                raise ParseError(f"equation for undeclared variable {nm!r}", lineno, col)
            if nm in eqs:
                raise ParseError(f"duplicate equation for {nm!r}", lineno, col)
            ecol = m.start(2) + 1
            eqs[nm] = parse_polynomial(m.group(2), names, line=lineno, column=ecol)
            continue
        raise ParseError(f"cannot parse line {stripped!r}", lineno, col)
    if names is None:
        raise ParseError("missing 'vars:' line", 1, 1)
    missing = [n for n in names if n not in eqs]
    if missing:
        raise ParseError(f"no equation for {missing}", vars_line, 1)
    if not init_seen:
        raise ParseError("missing 'init:' line", vars_line, 1)
    missing = [n for n in names if n not in init]
    if missing:
        raise ParseError(f"no initial value for {missing}", vars_line, 1)
    ivp = IVP(VectorField([eqs[n] for n in names]), [init[n] for n in names], names)
    return ModelFile(ivp, [t for _, t in tmpl_lines], [s for s, _ in tmpl_lines], title)


def _split_with_offsets(text: str, offset: int):
    pos = 0
    for part in text.split(","):
        yield part, offset + pos
        pos += len(part) + 1


def load_model(path) -> ModelFile:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


def render_model(model: ModelFile | IVP, *, title: str | None = None) -> str:
    """Inverse of :func:`parse_model` up to term order and formatting."""
    if isinstance(model, IVP):
        model = ModelFile(model)
    ivp = model.ivp
    names = ivp.names
    lines = []
    title = title if title is not None else model.title
    if title:
        lines.append(f"# {title}")
    lines.append("vars: " + ", ".join(names))
    for nm, f in zip(names, ivp.drifts):
        lines.append(f"{nm}' = {render(f, names)}")
    lines.append("init: " + ", ".join(f"{nm} = {_fmt_coeff(c)}" for nm, c in zip(names, ivp.v0)))
    for t in model.templates:
        lines.append("template: " + render_template(t, names))
    return "\n".join(lines) + "\n"
