from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liemin.poly import (
    IVP,
    DimensionError,
    LinExpr,
    Polynomial,
    Template,
    VectorField,
    grevlex_key,
    lie_derivative,
    lie_derivative_iter,
    lie_derivatives,
    monomials_up_to_degree,
    render,
    render_template,
    template_lie_derivative,
)

from conftest import P

N = 3


def polys(nvars=N, max_terms=4, max_exp=2):
    mono = st.tuples(*[st.integers(0, max_exp)] * nvars)
    coef = st.fractions(min_value=-5, max_value=5, max_denominator=4)
    return st.dictionaries(mono, coef, max_size=max_terms).map(lambda d: Polynomial(d, nvars))


fields = st.lists(polys(max_terms=3), min_size=N, max_size=N).map(VectorField)


def test_lie_derivative_of_sample_polynomial(ex1):
    p = P("2*x*y^2 + w*z", ex1)
    expected = P("4*w*x*y^2 + 2*w*z + 2*x*y^2*z + 4*x*y*z + 2*y^2*z", ex1)
    assert lie_derivative(p, ex1) == expected


def test_higher_derivatives_of_x_minus_y(ex1):
    p = P("x - y", ex1)
    assert lie_derivative(p, ex1) == P("x*z - y*w", ex1)
    assert lie_derivative_iter(p, ex1, 2) == P("x*z^2 + x*z + z^2 - y*w^2 - y*w - z*w", ex1)
    derivs = lie_derivatives(p, ex1, 4)
    assert len(derivs) == 4 and derivs[0] == p


def test_arithmetic_basics():
    x, y = Polynomial.variable(0, 2), Polynomial.variable(1, 2)
    p = (x + y) ** 2
    assert p == x * x + x * y.scale(2) + y * y
    assert (p - p).is_zero()
    assert p.degree() == 2
    assert Polynomial.zero(2).degree() == -1
    assert (x + 1).evaluate([Fraction(1, 2), 3]) == Fraction(3, 2)
    assert p.diff(0) == x.scale(2) + y.scale(2)


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        Polynomial.variable(0, 2) + Polynomial.variable(0, 3)
    with pytest.raises(DimensionError):
        IVP([Polynomial.variable(0, 2)] * 2, [0])


def test_coefficients_stay_exact():
    p = Polynomial({(1,): Fraction(1, 3)}, 1)
    assert isinstance(p.coeff((1,)), Fraction)
    assert p.scale(3) == Polynomial.variable(0, 1)


def test_grevlex_order():
    # x > y > z and x*z < y^2 in grevlex with x > y > z
    assert grevlex_key((1, 0, 0)) > grevlex_key((0, 1, 0)) > grevlex_key((0, 0, 1))
    assert grevlex_key((0, 2, 0)) > grevlex_key((1, 0, 1))
    mons = monomials_up_to_degree(2, 2)
    assert len(mons) == 6
    assert mons == sorted(mons, key=grevlex_key)


def test_substitute_composes():
    x, y = Polynomial.variable(0, 2), Polynomial.variable(1, 2)
    p = x * y + x
    q = p.substitute([y + 1, x])
    assert q == (y + 1) * x + y + 1


def test_template_instantiation(ex1):
    pi = Template({(1, 2, 0, 0): LinExpr({0: 5, 1: 2, 2: -1}), (1, 0, 1, 0): LinExpr({0: 7})}, 3, 4)
    assert pi.instantiate([1, 0, 0]) == P("5*x*y^2 + 7*x*z", ex1)
    assert pi.instantiate([0, 0, 0]).is_zero()
    with pytest.raises(DimensionError):
        pi.instantiate([1, 0])


def test_template_lie_derivative_commutes(ex1):
    pi = Template.degree_at_most(4, 1)
    v = [Fraction(k, 3) for k in range(pi.nparams)]
    assert template_lie_derivative(pi, ex1).instantiate(v) == lie_derivative(pi.instantiate(v), ex1)


def test_render_roundtrip(ex1):
    p = P("-3/2*x^2*y + x - 7 + w*z", ex1)
    assert P(render(p, ex1.names), ex1) == p
    assert render(Polynomial.zero(4), ex1.names) == "0"


def test_render_template_linear():
    assert render_template(Template.linear(2), ["x", "y"]) == "a1*x + a2*y"


@settings(max_examples=500, deadline=None)
@given(polys(), polys(), fields, st.fractions(min_value=-3, max_value=3, max_denominator=3))
def test_lie_derivation_leibniz_and_linearity(p, q, F, c):
    L = lambda r: lie_derivative(r, F)
    assert L(p * q) == L(p) * q + p * L(q)
    assert L(p + q.scale(c)) == L(p) + L(q).scale(c)
    assert L(Polynomial.constant(c, N)).is_zero()


@settings(max_examples=100, deadline=None)
@given(polys(), polys(), st.lists(st.fractions(min_value=-2, max_value=2, max_denominator=3), min_size=N, max_size=N))
def test_evaluation_is_a_ring_morphism(p, q, pt):
    assert (p * q).evaluate(pt) == p.evaluate(pt) * q.evaluate(pt)
    assert (p - q).evaluate(pt) == p.evaluate(pt) - q.evaluate(pt)
