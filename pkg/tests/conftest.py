import pytest

from liemin.cli import shipped_model_path
from liemin.parsing import load_model, parse_polynomial


def model(name):
    return load_model(shipped_model_path(name))


@pytest.fixture(scope="session")
def ex1():
    return model("example1").ivp


@pytest.fixture(scope="session")
def circle():
    return model("circle").ivp


@pytest.fixture(scope="session")
def pendulum():
    return model("pendulum").ivp


@pytest.fixture(scope="session")
def lin10():
    return model("linear10").ivp


def P(text, ivp):
    """Parse ``text`` over the variables of ``ivp``."""
    return parse_polynomial(text, ivp.names)


def match_signed_columns(B, B_ref, tol=1e-9):
    """Find ``perm, signs`` with ``B[:, perm[j]] * signs[j] == B_ref[:, j]``, or None."""
    import numpy as np

    B, B_ref = np.asarray(B, dtype=float), np.asarray(B_ref, dtype=float)
    if B.shape != B_ref.shape:
        return None
    perm, signs, used = [], [], set()
    for j in range(B_ref.shape[1]):
        for k in range(B.shape[1]):
            if k in used:
                continue
            for s in (1.0, -1.0):
                if np.max(np.abs(s * B[:, k] - B_ref[:, j])) < tol:
                    perm.append(k)
                    signs.append(s)
                    used.add(k)
                    break
            if len(perm) == j + 1:
                break
        else:
            return None
    return perm, signs


def relabel(G_ref, perm, signs, l):
    """Express a reference system ``y_ref' = G_ref(y_ref)`` in our coordinates.

    Our coordinates satisfy ``y[perm[j]] = signs[j] * y_ref[j]``.
    """
    from liemin.poly import Polynomial

    images = [Polynomial.variable(perm[j], l).scale(signs[j]) for j in range(l)]
    out = [None] * l
    for j, g in enumerate(G_ref):
        out[perm[j]] = g.substitute(images).scale(signs[j])
    return out


def close_polys(p, q, tol=1e-9):
    mons = set(p.monomials()) | set(q.monomials())
    return all(abs(float(p.coeff(m)) - float(q.coeff(m))) < tol for m in mons)


# acceptance report ---------------------------------------------------------

ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
