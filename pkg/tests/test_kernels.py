import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pnormcl.errors import InvalidScenarioError, UnsupportedError
from pnormcl.kernels import (Kernel, l0_geometric_norm, lp_norm, normalize,
                             require_normalized)


@pytest.mark.parametrize("p", [0.1, 0.5, 1, 3, 16])
def test_constant_kernel_has_unit_norm(p):
    assert lp_norm(Kernel.constant(), p) == 1.0


def test_exponential_norms():
    k = Kernel.exponential()
    assert lp_norm(k, 1) == 1.0
    assert lp_norm(k, 2) == pytest.approx(0.7071067812, abs=1e-10)


def test_geometric_norms():
    assert l0_geometric_norm(Kernel.constant()) == 1.0
    ramp = Kernel.custom([0, 1], [2, 1])
    assert l0_geometric_norm(ramp) == pytest.approx(math.exp(2 * math.log(2) - 1), rel=1e-12)
    assert l0_geometric_norm(ramp) == pytest.approx(1.4715178, abs=1e-7)
    assert l0_geometric_norm(Kernel.custom([0, 1], [3, 3])) == pytest.approx(3.0)


def test_geometric_norm_errors():
    with pytest.raises(UnsupportedError):
        l0_geometric_norm(Kernel.exponential())
    with pytest.raises(InvalidScenarioError):
        l0_geometric_norm(Kernel.custom([0, 1], [1, 0]))


def test_normalize_examples():
    c = normalize(Kernel.constant(), 3)
    assert c.scale == 1.0 and c.shape == "constant"
    e = normalize(Kernel.exponential(), 2)
    assert e.scale == pytest.approx(math.sqrt(2), rel=1e-14)
    g = normalize(Kernel.custom([0, 1], [2, 2]), 0.0)
    np.testing.assert_allclose(g([0.1, 0.5, 0.9]), 1.0)


@pytest.mark.parametrize("p", [0.25, 1, 2, 7.5])
def test_exponential_normalized_exactly(p):
    assert lp_norm(normalize(Kernel.exponential(), p), p) == pytest.approx(1.0, abs=1e-15)


def test_custom_closed_form_against_quadrature():
    from scipy.integrate import quad
    k = Kernel.custom([0, 0.3, 0.7, 1], [2.0, 1.5, 1.5, 0.2])
    for p in (0.3, 1, 2.5):
        ref = quad(lambda s: float(k(s)) ** p, 0, 1, points=[0.3, 0.7], epsabs=1e-14)[0]
        assert float(k.powered_cumulative(p, 1.0)) == pytest.approx(ref, rel=1e-12)
        assert float(k.powered_cumulative(p, 0.5)) == pytest.approx(
            quad(lambda s: float(k(s)) ** p, 0, 0.5, points=[0.3])[0], rel=1e-12)


def nonincreasing_kernels():
    vals = st.lists(st.floats(0.05, 5), min_size=2, max_size=6)
    return vals.map(lambda v: Kernel.custom(np.linspace(0, 1, len(v)), sorted(v, reverse=True)))


@given(nonincreasing_kernels(), st.sampled_from([0.0, 0.3, 1.0, 2.0, math.inf]))
def test_normalize_idempotent(k, p):
    once = normalize(k, p)
    twice = normalize(once, p)
    assert twice.scale == pytest.approx(once.scale, rel=1e-12)
    require_normalized(once, p)


@given(nonincreasing_kernels(), st.floats(0.05, 10))
def test_power_mean_ordering(k, p):
    assert l0_geometric_norm(k) <= lp_norm(k, p) * (1 + 1e-12)


def test_custom_kernel_validation():
    with pytest.raises(InvalidScenarioError):
        Kernel.custom([0, 1], [1, 2])
    with pytest.raises(InvalidScenarioError):
        Kernel.custom([0, 0.5], [1, 1])
    with pytest.raises(InvalidScenarioError):
        Kernel("gaussian")


def test_kernel_json_roundtrip():
    k = Kernel.custom([0, 0.5, 1], [1, 0.5, 0.25])
    assert Kernel.from_dict(k.to_dict()) == k
    assert Kernel.from_dict({"shape": "exponential"}) == Kernel.exponential()
    assert Kernel.from_dict({"shape": "custom", "params": {"breakpoints": [0, 1],
                                                            "values": [1, 1]}}).shape == "custom"
