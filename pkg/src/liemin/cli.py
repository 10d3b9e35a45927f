"""Command line interface: ``liemin <command> MODEL [options]``.

Exit codes: 0 success, 1 a semantic "no" (refuted, not certified),
2 input error, 3 an iteration or Groebner cap was exceeded.
"""
from __future__ import annotations

import argparse
import os
import re
import sys
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import List, Optional

from . import __version__
from .groebner import GroebnerAbort
from .invariants import (
    CapExceeded,
    certify_invariant,
    default_pseudoideal_degree,
    double_chain,
    double_chain_linear,
    naive_invariant,
)
from .krylov import linearize, reconstruct
from .parsing import ModelFile, ParseError, load_model, parse_model, parse_polynomial, parse_template, render_model
from .poly import DimensionError, Template, _fmt_coeff, render, render_template
from .reduction import minimize, variable_classes
from .semantics import export_weighted_automaton, integrate_numeric, stream_semantics, taylor_coefficients
from .serial import dumps

EXIT_OK, EXIT_NO, EXIT_INPUT, EXIT_CAP = 0, 1, 2, 3

SHIPPED_MODELS = ("example1", "circle", "pendulum", "linear10")


class InputError(Exception):
    pass


@dataclass
class RunReport:
    command: str
    model: str
    result: dict
    elapsed: float = 0.0
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "model": self.model,
            "result": self.result,
            "timing": {"elapsed_seconds": round(self.elapsed, 6)},
            "warnings": list(self.warnings),
        }


# ---------------------------------------------------------------------------
# helpers


def shipped_model_path(name: str) -> str:
    stem = name[:-4] if name.endswith(".ode") else name
    if stem not in SHIPPED_MODELS:
        raise InputError(f"no shipped model named {name!r}")
    return str(resources.files("liemin.models").joinpath(f"{stem}.ode"))


def resolve_model(arg: str) -> ModelFile:
    """Load ``arg`` as a path, or as the name of a shipped model."""
    if os.path.exists(arg):
        return load_model(arg)
    stem = arg[:-4] if arg.endswith(".ode") else arg
    if stem in SHIPPED_MODELS and os.sep not in arg:
        return load_model(shipped_model_path(stem))
    raise InputError(f"model file not found: {arg}")


def _poly(text, model):
    return parse_polynomial(text, model.names)


def _poly_list(texts, model):
    out = []
    for t in texts:
        for part in t.split(","):
            if part.strip():
                out.append(_poly(part, model))
    return out


_DEGREE_RE = re.compile(r"degree\s*<=\s*(\d+)$")


def template_from_text(text: Optional[str], degree: Optional[int], model: ModelFile) -> Template:
    """``linear``, ``degree<=d`` or an explicit template over a1, a2, ...

    Without text the model's first ``template:`` line is used, then the
    full linear template.
    """
    n = model.ivp.nvars
    if text is None:
        if degree is not None:
            return Template.degree_at_most(n, degree)
        if model.templates:
            return model.templates[0]
        return Template.linear(n)
    s = text.strip()
    if s == "linear":
        return Template.linear(n)
    m = _DEGREE_RE.match(s)
    if m or s == "degree":
        d = int(m.group(1)) if m else degree
        if d is None:
            raise InputError("--template degree needs --degree D")
        return Template.degree_at_most(n, d)
    return parse_template(s, model.names)


def _fmt(c):
    return _fmt_coeff(c) if isinstance(c, (Fraction, int)) else repr(float(c))


def _vec(v):
    return "(" + ", ".join(_fmt(c) for c in v) + ")"


# ---------------------------------------------------------------------------
# commands; each returns (exit code, result dict, text lines)


def cmd_check_equiv(args, model):
    p, q = _poly(args.p, model), _poly(args.q, model)
    res = naive_invariant(p - q, model.ivp, cap=args.cap or 200)
    names = model.names
    out = {"p": render(p, names), "q": render(q, names), "equivalent": res.valid}
    lines = [f"equivalent: {'true' if res.valid else 'false'}"]
    if res.valid:
        out["m"] = res.index
        out["groebner_basis"] = [render(g, names) for g in res.groebner.generators]
        lines.append(f"m = {res.index}")
        lines.append("invariant Groebner basis:")
        lines += [f"  {render(g, names)}" for g in res.groebner.generators]
    else:
        out["refuted_at"] = res.index
        out["witness"] = Fraction(res.witness)
        lines.append(f"refuted at derivative {res.index}: value {_fmt(res.witness)} at the initial point")
    return (EXIT_OK if res.valid else EXIT_NO), out, lines


def cmd_invariants(args, model):
    pi = template_from_text(args.template, args.degree, model)
    ivp = model.ivp
    k = None
    if args.pseudoideal is not None:
        k = default_pseudoideal_degree(pi, ivp) if args.pseudoideal < 0 else args.pseudoideal
    kw = {"cap": args.cap} if args.cap else {}
    if args.linear_only:
        res = double_chain_linear(pi, ivp, **kw)
    else:
        res = double_chain(pi, ivp, pseudoideal=k, **kw)
    names = model.names
    tmpl = render_template(res.result_template, names) if res.V_basis else "0"
    out = {
        "template": render_template(pi, names),
        "m": res.m,
        "dim_V": res.dim,
        "dims": res.dims,
        "result_template": tmpl,
        "V_basis": res.V_basis,
        "laws": [render(q, names) for q in res.laws()],
        "groebner_basis": [render(g, names) for g in res.J_groebner.generators],
        "groebner_checks": res.groebner_checks,
        "pseudoideal": k,
    }
    lines = [
        f"template: {out['template']}",
        f"m = {res.m}, dim V = {res.dim}",
        f"result template: {tmpl}",
    ]
    if not res.V_basis:
        lines.append("no nontrivial instance of the template vanishes on the trajectory")
    lines.append("V basis:")
    lines += [f"  {_vec(v)}" for v in res.V_basis]
    lines.append("J Groebner basis:")
    lines += [f"  {g}" for g in out["groebner_basis"]] or ["  (zero ideal)"]
    return EXIT_OK, out, lines


def cmd_certify(args, model):
    S = _poly_list(args.generators, model)
    if not S:
        raise InputError("no generators given")
    res = certify_invariant(S, model.ivp, with_certificate=True)
    names = model.names
    out = {"generators": [render(s, names) for s in S], "certified": res.certified}
    if res.certified:
        lines = ["Certified"]
        certs = []
        for s, d, qs in zip(S, res.derivatives, res.quotients):
            certs.append({"generator": render(s, names), "lie_derivative": render(d, names),
                          "quotients": [render(q, names) for q in qs]})
            lines.append(f"  L({render(s, names)}) = " + " + ".join(
                f"({render(q, names)})*({render(g, names)})" for q, g in zip(qs, S) if not q.is_zero()
            ) if not d.is_zero() else f"  L({render(s, names)}) = 0")
        out["certificate"] = certs
        out["groebner_basis"] = [render(g, names) for g in res.groebner.generators]
        return EXIT_OK, out, lines
    out["failed_index"] = res.index
    out["reason"] = res.reason
    g = render(S[res.index], names)
    if res.value is not None:
        out["value"] = Fraction(res.value)
    return EXIT_NO, out, [f"Failed: generator {res.index} ({g}): {res.reason}"]


def cmd_minimize(args, model):
    R = minimize(model.ivp, args.mode or "rational", cap=args.cap or 500)
    names = model.names
    classes = variable_classes(R)
    out = R.to_dict()
    out["reduced_equations"] = [f"{y}' = {render(g, R.names)}" for y, g in zip(R.names, R.reduced_field)]
    lines = [f"l = {R.l} (N = {R.N}, m = {R.m}, mode {R.mode})"]
    if R.is_minimal_already():
        lines.append(f"already minimal (l = N = {R.N})")
    lines.append("classes: " + "  ".join("{" + ", ".join(names[i] for i in c) + "}" for c in classes))
    lines.append("B:")
    lines += [f"  {names[i]}: {_vec(r)}" for i, r in enumerate(R.rows())]
    lines += out["reduced_equations"]
    if R.l:
        lines.append("init: " + ", ".join(f"{y} = {_fmt(c)}" for y, c in zip(R.names, R.y0)))
    if args.out:
        if R.l == 0:
            raise InputError("reduced system is empty; nothing to write")
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(render_model(R.ivp(), title=f"minimal aggregation of {args.model}"))
        with open(args.out + ".json", "w", encoding="utf-8") as fh:
            fh.write(dumps(R.to_dict()))
        lines.append(f"wrote {args.out} and {args.out}.json")
    return EXIT_OK, out, lines


def cmd_linearize(args, model):
    S = _poly_list(args.observables, model) if args.observables else model.ivp.variables()
    m = args.order or 3
    mode = args.mode or "float"
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        R = linearize(S, model.ivp, m, mode)
    names = model.names
    out = R.to_dict(names)
    checks = []
    lines = [f"l = {R.l}, order m = {m}, mode {mode}, exact = {str(R.exact).lower()} (happy breakdown {str(R.happy).lower()}, truncated {str(R.L.truncated).lower()})"]
    lines.append(f"y0 = {_vec(R.y0)}")
    lines.append("A:")
    lines += [f"  {_vec(r)}" for r in R.A]
    n_check = m + 5 if R.exact else m
    for p in S:
        row = reconstruct(p, R)
        truth = taylor_coefficients(p, model.ivp, n_check)
        approx = R.taylor(row, n_check)
        if mode == "rational":
            ok = list(truth) == list(approx)
        else:
            ok = all(abs(float(a) - float(b)) <= 1e-9 * max(1.0, abs(float(a))) for a, b in zip(truth, approx))
        checks.append({"observable": render(p, names), "row": row, "orders_checked": n_check, "taylor_agree": ok})
        lines.append(f"  {render(p, names)} ~ {_vec(row)} . y   (first {n_check} Taylor coefficients agree: {str(ok).lower()})")
    out["checks"] = checks
    if args.out and R.l:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(render_model(R.ivp(), title=f"order-{m} linearization of {args.model}"))
        with open(args.out + ".json", "w", encoding="utf-8") as fh:
            fh.write(dumps(out))
        lines.append(f"wrote {args.out} and {args.out}.json")
    return EXIT_OK, out, lines, [str(w.message) for w in caught]


def cmd_taylor(args, model):
    p = _poly(args.p, model)
    n = args.order or 8
    pre = taylor_coefficients(p, model.ivp, n)
    out = {"p": render(p, model.names), "coefficients": list(pre)}
    return EXIT_OK, out, ["(" + ", ".join(_fmt(c) for c in pre) + ")"]


def cmd_integrate(args, model):
    tr = integrate_numeric(model.ivp, args.t_end, samples=args.samples)
    text = tr.to_csv(args.out) if args.out else tr.to_csv()
    out = {"t_end": args.t_end, "samples": len(tr.t), "success": tr.success, "blowup": tr.blowup,
           "message": tr.message, "final": [float(v) for v in tr.x[-1]] if len(tr.x) else []}
    lines = [f"wrote {args.out} ({len(tr.t)} samples)"] if args.out else [text.rstrip("\n")]
    warn = [f"integration stopped early: {tr.message}"] if tr.blowup else []
    return EXIT_OK, out, lines, warn


def cmd_export_automaton(args, model):
    W = export_weighted_automaton(model.ivp, args.depth)
    out = W.to_dict()
    if args.stream:
        out["streams"] = {}
        for nm in args.stream:
            s = stream_semantics(W, nm, args.stream_length)
            out["streams"][nm] = {"values": list(s), "truncated": s.truncated}
    dot = W.to_dot()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(dot)
        lines = [f"wrote {args.out} ({len(W.states)} states, {len(W.transitions)} transitions)"]
    else:
        lines = [dot.rstrip("\n")]
    for nm, s in out.get("streams", {}).items():
        flag = " (truncated)" if s["truncated"] else ""
        lines.append(f"sigma_{nm} = (" + ", ".join(_fmt(c) for c in s["values"]) + ")" + flag)
    warn = [] if W.complete else [f"automaton truncated at depth {args.depth}; {len(W.frontier)} frontier states"]
    return EXIT_OK, out, lines, warn


COMMANDS = {
    "check-equiv": cmd_check_equiv,
    "invariants": cmd_invariants,
    "certify": cmd_certify,
    "minimize": cmd_minimize,
    "linearize": cmd_linearize,
    "taylor": cmd_taylor,
    "integrate": cmd_integrate,
    "export-automaton": cmd_export_automaton,
}


# ---------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser):
    p.add_argument("model", help=f"model file, or a shipped model: {', '.join(SHIPPED_MODELS)}")
    p.add_argument("--json", metavar="PATH", help="also write a JSON report")
    p.add_argument("--cap", type=int, metavar="N", help="iteration safety cap")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="liemin", description="Polynomial ODE invariants, minimization and linearization.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("check-equiv", help="decide p(x(t)) == q(x(t))")
    _common(p)
    p.add_argument("p")
    p.add_argument("q")

    p = sub.add_parser("invariants", help="all template instances vanishing on the trajectory")
    _common(p)
    p.add_argument("--template", help="'linear', 'degree<=D' or an explicit template in a1, a2, ...")
    p.add_argument("--degree", type=int, metavar="D", help="shorthand for --template 'degree<=D'")
    p.add_argument("--pseudoideal", type=int, nargs="?", const=-1, metavar="K",
                   help="try the bounded-degree membership test first (default K = deg(template) + deg(F))")
    p.add_argument("--linear-only", action="store_true", help="single-chain variant for linear systems")

    p = sub.add_parser("certify", help="check that generators span an invariant ideal")
    _common(p)
    p.add_argument("generators", nargs="+", help="polynomials (separate arguments or comma separated)")

    p = sub.add_parser("minimize", help="minimal exact linear aggregation")
    _common(p)
    p.add_argument("--mode", choices=["rational", "float"], default="rational")
    p.add_argument("--out", metavar="PATH", help="write the reduced model (and PATH.json with B)")

    p = sub.add_parser("linearize", help="order-m Krylov linearization")
    _common(p)
    p.add_argument("--observables", action="append", metavar="P,...", help="observables (default: all variables)")
    p.add_argument("--order", type=int, metavar="M", default=3)
    p.add_argument("--mode", choices=["float", "rational"], default="float")
    p.add_argument("--out", metavar="PATH", help="write the linear model (and PATH.json)")

    p = sub.add_parser("taylor", help="exact Taylor coefficients of p(x(t)) at 0")
    _common(p)
    p.add_argument("p")
    p.add_argument("--order", type=int, metavar="N", default=8, help="number of coefficients")

    p = sub.add_parser("integrate", help="numeric trajectory as CSV")
    _common(p)
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--out", metavar="PATH", help="CSV file (default: standard output)")

    p = sub.add_parser("export-automaton", help="weighted automaton as Graphviz text")
    _common(p)
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--out", metavar="PATH", help="write the Graphviz text here")
    p.add_argument("--stream", action="append", metavar="STATE", help="also print the stream of STATE")
    p.add_argument("--stream-length", type=int, default=10)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    t0 = time.perf_counter()
    try:
        model = resolve_model(args.model)
        ret = COMMANDS[args.command](args, model)
    except (ParseError, InputError, DimensionError, ValueError, KeyError, OSError) as exc:
        print(f"liemin: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (CapExceeded, GroebnerAbort) as exc:
        print(f"liemin: cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    code, result, lines = ret[:3]
    warns = ret[3] if len(ret) > 3 else []
    report = RunReport(args.command, args.model, result, time.perf_counter() - t0, warns)
    for w in warns:
        print(f"warning: {w}", file=sys.stderr)
    print("\n".join(lines))
    if args.json:
        try:
            with open(args.json, "w", encoding="utf-8") as fh:
                fh.write(dumps(report.to_dict()))
        except OSError as exc:
            print(f"liemin: error: {exc}", file=sys.stderr)
            return EXIT_INPUT
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
