import math
from fractions import Fraction

import numpy as np
import pytest

from liemin.invariants import double_chain
from liemin.parsing import parse_model, parse_polynomial
from liemin.poly import IVP, Polynomial, Template
from liemin.reduction import (
    derivative_vectors,
    lift,
    minimize,
    project,
    reconstruct_state,
    trajectory_subspace,
    variable_classes,
)
from liemin.semantics import integrate_numeric, taylor_coefficients

from conftest import P, close_polys, match_signed_columns, relabel

SQ2 = math.sqrt(2)


def reference_float_reduction():
    """Reduced system with c1 = (1,1,0,0)/sqrt2, c2 = (0,0,1,1)/sqrt2."""
    names = ["y1", "y2"]
    B = [[1 / SQ2, 0], [1 / SQ2, 0], [0, 1 / SQ2], [0, 1 / SQ2]]
    G = [parse_polynomial("y1*y2", names).scale(1 / SQ2) + parse_polynomial("y2", names), parse_polynomial("y2", names)]
    return B, G, [0.0, SQ2]


def test_trajectory_subspace_four_variables(ex1):
    B = trajectory_subspace(ex1, 1)
    cols = [[r[j] for r in B] for j in range(2)]
    assert cols == [[0, 0, 1, 1], [1, 1, 0, 0]]
    Bf = trajectory_subspace(ex1, 1, "float")
    assert np.allclose(Bf.T @ Bf, np.eye(2), atol=1e-12)


def test_trajectory_subspace_degenerate_and_full(circle):
    x = Polynomial.variable(0, 2)
    rest = IVP([x * x, x], [0, 0])
    assert trajectory_subspace(rest, 3) == [[], []]
    assert trajectory_subspace(rest, 3, "float").shape == (2, 0)
    assert len(trajectory_subspace(circle, 1)[0]) == 2


def test_minimize_float_matches_reference(ex1):
    R = minimize(ex1, "float")
    B_ref, G_ref, y0_ref = reference_float_reduction()
    match = match_signed_columns(R.B, B_ref)
    assert match is not None
    perm, signs = match
    for ours, ref in zip(R.reduced_field, relabel(G_ref, perm, signs, 2)):
        assert close_polys(ours, ref)
    for j in range(2):
        assert abs(R.y0[perm[j]] - signs[j] * y0_ref[j]) < 1e-9


def test_minimize_four_variables_rational(ex1):
    R = minimize(ex1)
    assert R.l == 2 and R.m == 1
    assert R.gram == [2, 2]
    assert [[R.B[i][j] for i in range(4)] for j in range(2)] == [[0, 0, 1, 1], [1, 1, 0, 0]]
    names = R.names
    assert R.reduced_field == [parse_polynomial("y1", names), parse_polynomial("y1*y2 + y1", names)]
    assert R.y0 == [1, 0]


def test_gram_is_diagonal_exactly(lin10):
    R = minimize(lin10)
    cols = [[R.B[i][j] for i in range(10)] for j in range(R.l)]
    for a in range(R.l):
        for b in range(R.l):
            dot = sum(x * y for x, y in zip(cols[a], cols[b]))
            assert dot == (R.gram[a] if a == b else 0)


def test_linear10_minimal_size_and_classes(lin10):
    R = minimize(lin10)
    assert R.l == 4 and R.l <= R.m + 1
    classes = variable_classes(R)
    for cls in ([0, 4], [1, 5, 6], [7, 8]):
        assert cls in classes
    assert variable_classes(minimize(lin10, "float")) == classes


def test_circle_already_minimal(circle):
    R = minimize(circle)
    assert R.is_minimal_already()
    tr = integrate_numeric(circle, 1.0, samples=11)
    red = integrate_numeric(R.ivp(), 1.0, samples=11)
    assert np.max(np.abs(tr.x - np.array([reconstruct_state(R, y) for y in red.x]))) < 1e-8


def test_lift(ex1):
    R = minimize(ex1, "float")
    k = next(j for j in range(2) if abs(R.B[0][j]) > 0.5)
    lx = lift(P("x", ex1), R)
    assert close_polys(lx, Polynomial.variable(k, 2).scale(R.B[0][k]))
    assert abs(abs(R.B[0][k]) - 1 / SQ2) < 1e-12
    assert lift(Polynomial.constant(1, 4), R) == Polynomial.constant(1, 2)
    Rq = minimize(ex1)
    assert lift(P("x", ex1), Rq) == Polynomial.variable(1, 2)


def test_degree_preserved(ex1, pendulum, lin10):
    for ivp in (ex1, pendulum, lin10):
        R = minimize(ivp)
        assert max(g.degree() for g in R.reduced_field) <= ivp.field.max_degree()


@pytest.mark.parametrize("name", ["ex1", "lin10"])
def test_mode_equivalence_on_taylor_prefixes(name, request):
    ivp = request.getfixturevalue(name)
    Rq, Rf = minimize(ivp), minimize(ivp, "float")
    for p in ivp.variables() + [ivp.variables()[0] * ivp.variables()[-1]]:
        truth = taylor_coefficients(p, ivp, 8)
        assert taylor_coefficients(lift(p, Rq), Rq.ivp(), 8) == truth
        approx = taylor_coefficients(lift(p, Rf), Rf.ivp(), 8)
        assert all(abs(float(a) - float(b)) < 1e-9 for a, b in zip(approx, truth))


def test_projection_identity(lin10, ex1):
    for ivp in (lin10, ex1):
        R = minimize(ivp)
        B = np.array([[float(x) for x in r] for r in R.rows()])
        Pm = B @ np.linalg.inv(B.T @ B) @ B.T
        for v in derivative_vectors(ivp, R.m):
            v = np.array([float(x) for x in v])
            assert np.allclose(Pm @ v, v, atol=1e-12)


def test_reconstruction_fidelity(ex1, lin10):
    for ivp in (ex1, lin10):
        R = minimize(ivp)
        full = integrate_numeric(ivp, 1.0, samples=51)
        red = integrate_numeric(R.ivp(), 1.0, samples=51)
        err = np.max(np.abs(full.x - np.array([reconstruct_state(R, y) for y in red.x])))
        assert err < 1e-6


def test_minimality_rank(ex1, lin10):
    for ivp in (ex1, lin10):
        R = minimize(ivp)
        times = np.linspace(0.1, 1.0, R.l)
        tr = integrate_numeric(ivp, 1.0, t_eval=times)
        s = np.linalg.svd(tr.x.T, compute_uv=False)
        assert np.sum(s > 1e-6) == R.l


def test_project_with_larger_m_changes_nothing(ex1):
    a, b = project(ex1, 1), project(ex1, 4)
    assert a.B == b.B and a.reduced_field == b.reduced_field


def test_json_sidecar_content(ex1):
    d = minimize(ex1).to_dict()
    assert d["l"] == 2 and d["classes"] == [["x", "y"], ["z", "w"]]
    assert d["gram_diagonal"] == [2, 2]


def test_bad_mode(ex1):
    with pytest.raises(ValueError):
        minimize(ex1, "complex")
