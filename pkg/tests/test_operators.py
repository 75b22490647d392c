import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pnormcl.errors import InvalidScenarioError, UnsupportedError
from pnormcl.fields import Datum, Field, Grid, constant, field_from_datum, riemann
from pnormcl.kernels import Kernel, normalize
from pnormcl.operators import (check_exponential_identity, eval_W_exponential,
                               eval_W_general, eval_W_sup, eval_W_zero, evaluate,
                               identity_residual, sliding_window_max)

G = Grid(-4, 4, 1600)
STEP = field_from_datum(riemann(0.5, 1.0, 0), G)


def at(W, x):
    return W.W_values[int(np.argmin(np.abs(W.edges - x)))]


def test_general_constant_datum():
    q = field_from_datum(constant(0.75), G)
    W = eval_W_general(q, Kernel.constant(), 2, 0.5)
    np.testing.assert_allclose(W.W_values, 0.75, rtol=1e-14)


def test_general_step_values():
    assert at(eval_W_general(STEP, Kernel.constant(), 1, 0.5), -0.25) == pytest.approx(0.75, abs=1e-12)
    assert at(eval_W_general(STEP, Kernel.constant(), 2, 0.5), -0.25) == pytest.approx(
        math.sqrt(0.625), abs=1e-12)


def test_general_rejects_unnormalized_kernel():
    with pytest.raises(InvalidScenarioError):
        eval_W_general(STEP, Kernel.exponential(), 2, 0.5)


@pytest.mark.parametrize("p", [0.3, 1, 2, 5])
def test_exponential_constant_fixed_point(p):
    q = field_from_datum(constant(0.42), G)
    np.testing.assert_allclose(eval_W_exponential(q, p, 0.3).W_values, 0.42, rtol=1e-13)


def step_closed_form(x, p, eta, a=0.5, b=1.0):
    # W**p for a step at 0, upstream of it: a**p (1 - e^{p x/eta}) + b**p e^{p x/eta}
    e = math.exp(p * x / eta)
    return (a ** p * (1 - e) + b ** p * e) ** (1 / p)


def test_exponential_step_values():
    W1 = eval_W_exponential(STEP, 1, 0.5)
    assert at(W1, -0.25) == pytest.approx(0.8032653, abs=1e-7)
    W2 = eval_W_exponential(STEP, 2, 0.5)
    assert at(W2, -0.25) == pytest.approx(step_closed_form(-0.25, 2, 0.5), abs=1e-12)
    x = W2.edges[W2.edges < 0]
    ref = [step_closed_form(xi, 2, 0.5) for xi in x]
    np.testing.assert_allclose(W2.W_values[: x.size], ref, rtol=1e-12)


@pytest.mark.parametrize("p", [0.25, 1, 3])
def test_exponential_paths_agree(p):
    q = field_from_datum(Datum("tanh", a=0.3, b=0.9, jump=0.2, width=0.4), G)
    a = eval_W_exponential(q, p, 0.5).W_values
    b = eval_W_general(q, normalize(Kernel.exponential(), p), p, 0.5).W_values
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_geometric_mean_operator():
    q = field_from_datum(constant(0.6), G)
    np.testing.assert_allclose(eval_W_zero(q, Kernel.constant(), 0.5).W_values, 0.6, rtol=1e-14)
    W = eval_W_zero(STEP, Kernel.constant(), 0.5)
    assert at(W, -0.25) == pytest.approx(math.sqrt(0.5), abs=1e-12)
    assert np.all(W.W_values[W.edges >= 0] == pytest.approx(1.0))


def test_geometric_mean_needs_positive_window():
    q = Field(G, np.where(G.centers > 1, 0.0, 0.5))
    with pytest.raises(InvalidScenarioError):
        eval_W_zero(q, Kernel.constant(), 0.5)
    with pytest.raises(UnsupportedError):
        eval_W_zero(STEP, Kernel.exponential(), 0.5)


def test_weighted_sup():
    q = field_from_datum(constant(0.8), G)
    np.testing.assert_allclose(eval_W_sup(q, Kernel.constant(), 0.5).W_values, 0.8)
    W = eval_W_sup(STEP, Kernel.constant(), 0.5)
    assert at(W, -0.25) == 1.0
    assert at(W, -0.75) == 0.5
    assert W.exploratory
    with pytest.raises(UnsupportedError):
        eval_W_sup(STEP, Kernel.exponential(), 0.5)


@given(st.lists(st.floats(0, 10), min_size=1, max_size=40), st.integers(1, 8))
def test_sliding_window_max_matches_brute_force(vals, w):
    v = np.asarray(vals)
    w = min(w, v.size)
    ref = [v[i:i + w].max() for i in range(v.size - w + 1)]
    np.testing.assert_array_equal(sliding_window_max(v, w), ref)


def test_sup_custom_kernel_uses_left_endpoints():
    k = normalize(Kernel.custom([0, 1], [1, 0.5]), math.inf)
    g = Grid(0, 4, 8)
    q = Field(g, [0.1, 0.1, 0.1, 1.0, 0.1, 0.1, 0.1, 0.1])
    W = eval_W_sup(q, k, 1.0)
    # edge at x = 1.0 sees the spike at offset one cell (s = 0.5): weight 0.75
    assert W.W_values[2] == pytest.approx(0.75)
    assert W.W_values[3] == pytest.approx(1.0)


ALL_P = [0.0, 0.1, 0.5, 1.0, 2.0, 16.0, math.inf]


def positive_fields():
    return st.lists(st.floats(0.1, 2.0), min_size=8, max_size=40).map(
        lambda v: Field(Grid(0, 2, len(v)), v))


@settings(max_examples=40, deadline=None)
@given(positive_fields(), st.sampled_from(ALL_P), st.sampled_from(["constant", "custom"]))
def test_sandwich(q, p, shape):
    k = Kernel.constant() if shape == "constant" else Kernel.custom([0, 0.4, 1], [2, 1, 0.5])
    W = evaluate(q, k, p, 0.3).W_values
    assert W.min() >= q.values.min() - 1e-10
    assert W.max() <= q.values.max() + 1e-10


@settings(max_examples=40, deadline=None)
@given(positive_fields(), st.sampled_from(ALL_P), st.booleans())
def test_monotone_datum_gives_monotone_W(q, p, increasing):
    v = np.sort(q.values)
    q = q.with_values(v if increasing else v[::-1])
    for k in (Kernel.constant(), Kernel.custom([0, 1], [1, 0.2])):
        d = np.diff(evaluate(q, k, p, 0.3).W_values)
        assert (d >= -1e-12).all() if increasing else (d <= 1e-12).all()


def test_p_limits_of_constant_kernel():
    zero = eval_W_zero(STEP, Kernel.constant(), 0.5).W_values
    sup = eval_W_sup(STEP, Kernel.constant(), 0.5).W_values
    dev0 = [np.abs(evaluate(STEP, Kernel.constant(), p, 0.5).W_values - zero).max()
            for p in (0.1, 0.05, 0.02)]
    devi = [np.abs(evaluate(STEP, Kernel.constant(), p, 0.5).W_values - sup).max()
            for p in (8, 16, 32)]
    assert dev0[0] > dev0[1] > dev0[2]
    assert devi[0] > devi[1] > devi[2]


def test_identity_residual_constant():
    q = field_from_datum(constant(0.9), G)
    assert check_exponential_identity(q, eval_W_exponential(q, 2, 0.5)) < 1e-13


def test_identity_first_order():
    d = Datum("tanh", a=0.5, b=1.0, jump=0.0, width=1.0)
    res = []
    for n in (400, 800):
        q = field_from_datum(d, Grid(-4, 4, n))
        res.append(check_exponential_identity(q, eval_W_exponential(q, 1, 0.5)))
    assert 1.5 <= res[0] / res[1] <= 2.5


def test_identity_residual_concentrates_at_jump():
    interior = []
    for n in (400, 800, 1600):
        g = Grid(-4, 4, n)
        q = field_from_datum(riemann(0.5, 1, 0), g)
        r = identity_residual(q, eval_W_exponential(q, 2, 0.5))
        x = g.edges[1:-1]
        assert r[np.abs(x) <= 1.5 * g.dx].max() > 0.1
        interior.append(r[np.abs(x) > 3 * g.dx].max())
    assert interior[0] > interior[1] > interior[2]
