import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from anisolab import exponents as ex
from anisolab import grid as g


def test_validate_accepts_planar_pair():
    assert ex.validate(ex.ExponentVector((1.5, 1.8))) is None
    # harmonic mean is 18/11, below the dimension
    assert math.isclose(ex.ExponentVector((1.5, 1.8)).harmonic_mean(), 18 / 11)


def test_validate_rejects_critical_pair():
    message = ex.validate(ex.ExponentVector((2.0, 2.0)))
    assert message is not None and "p<N fails" in message


def test_validate_accepts_spatial_triple():
    ev = ex.ExponentVector((1.2, 1.5, 2.0))
    assert ex.validate(ev) is None
    assert math.isclose(ev.harmonic_mean(), 1.5)


@pytest.mark.parametrize("bad", [(0.9, 1.5), (1.0, 1.5), (float("nan"), 1.5),
                                 (float("inf"), 2.0), (1.8, 1.5), (1.5,), (1.2,) * 4])
def test_validate_rejects_malformed_vectors(bad):
    assert ex.validate(ex.ExponentVector(bad)) is not None


def test_derive_planar_pair():
    d = ex.derive(ex.ExponentVector((1.5, 1.8)))
    assert math.isclose(d.mean, 18 / 11)
    assert math.isclose(d.star, 9.0)
    assert d.conjugates == pytest.approx((3.0, 2.25))


def test_derive_spatial_triple():
    d = ex.derive(ex.ExponentVector((1.2, 1.5, 2.0)))
    assert math.isclose(d.mean, 1.5)
    assert math.isclose(d.star, 3.0)


def test_derive_equal_pair():
    d = ex.derive(ex.ExponentVector((1.5, 1.5)))
    assert math.isclose(d.mean, 1.5)
    assert math.isclose(d.star, 6.0)
    assert d.conjugates == pytest.approx((3.0, 3.0))


def test_derive_rejects_invalid():
    with pytest.raises(ValueError, match="p<N fails"):
        ex.derive(ex.ExponentVector((2.0, 2.0)))


@given(st.lists(st.floats(min_value=1.01, max_value=5.0), min_size=2, max_size=2))
@settings(max_examples=200, deadline=None)
def test_derived_exponent_algebra(ps):
    ev = ex.ExponentVector(sorted(ps))
    if ex.validate(ev) is not None:
        return
    d = ex.derive(ev)
    for pj, pjp in zip(ev.p, d.conjugates):
        assert math.isclose(1.0 / pj + 1.0 / pjp, 1.0, rel_tol=1e-12)
    assert ev.p[0] - 1e-12 <= d.mean <= ev.p[-1] + 1e-12
    assert d.mean < d.star


def _bump(grid):
    return g.sample(grid, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y))


def test_sobolev_quotient_positive_and_ordered():
    ev = ex.ExponentVector((1.5, 1.8))
    q = ex.sobolev_quotient(_bump(g.unit_grid(24)), ev)
    assert q.product > 0.0 and q.mean > 0.0
    # geometric mean never exceeds the arithmetic mean of the gradient norms
    assert q.product >= q.mean - 1e-14
    assert q.product <= ev.N * q.mean + 1e-14


def test_sobolev_quotient_refinement_stability():
    # oracle: the quotient of a fixed smooth bump is stable under refinement
    ev = ex.ExponentVector((1.5, 1.8))
    values = [ex.sobolev_quotient(_bump(g.unit_grid(n)), ev).product for n in (16, 32, 64)]
    assert max(values) / min(values) < 1.05


def test_sobolev_quotient_matches_continuum_quadrature():
    # independent oracle: 1-d quadrature of the separable bump's norms
    ev = ex.ExponentVector((1.5, 1.8))
    d = ex.derive(ev)
    i_star = quad(lambda x: math.sin(math.pi * x) ** d.star, 0, 1)[0]
    u_norm = (i_star * i_star) ** (1.0 / d.star)

    def grad_norm(p_exp, cos_axis):
        cos_part = quad(lambda x: abs(math.cos(math.pi * x)) ** p_exp, 0, 1)[0]
        sin_part = quad(lambda x: math.sin(math.pi * x) ** p_exp, 0, 1)[0]
        return math.pi * (cos_part * sin_part) ** (1.0 / p_exp)

    g1 = grad_norm(ev.p[0], 0)
    g2 = grad_norm(ev.p[1], 1)
    continuum = u_norm / math.sqrt(g1 * g2)
    discrete = ex.sobolev_quotient(_bump(g.unit_grid(64)), ev).product
    assert discrete == pytest.approx(continuum, rel=0.05)


def test_sobolev_quotient_rejects_zero_field():
    with pytest.raises(ValueError, match="zero"):
        ex.sobolev_quotient(g.zeros(g.unit_grid(8)), ex.ExponentVector((1.5, 1.8)))


def test_young_constant_halving_split():
    # ab <= a^2/2 + b^2/2 closes with constant one half
    assert ex.young_constant([2.0], 0.5) == pytest.approx(0.5, rel=1e-3)


def test_young_constant_tight_split():
    # oracle: maximize a*b - a^2/8 over a at fixed b, the supremum is 2*b^2
    assert ex.young_constant([2.0], 0.125) == pytest.approx(2.0, rel=1e-3)


def test_young_constant_triple():
    # oracle: symmetric critical point a=b=10/3 at c=1 gives 100/27
    assert ex.young_constant([3.0, 3.0], 0.1) == pytest.approx(100.0 / 27.0, rel=1e-3)


def test_young_exponent_completion():
    assert ex.complete_young_exponents([2.0]) == (2.0, 2.0)
    assert ex.complete_young_exponents([3.0, 3.0]) == (3.0, 3.0, 3.0)
    with pytest.raises(ValueError):
        ex.complete_young_exponents([1.0])
    with pytest.raises(ValueError):
        ex.complete_young_exponents([1.5, 1.5])   # reciprocals reach 4/3
    with pytest.raises(ValueError):
        ex.young_constant([2.0], 0.0)


@pytest.mark.parametrize("leading,delta,seed", [
    ((2.0,), 0.5, 0),
    ((3.0,), 0.05, 1),
    ((3.0, 3.0), 0.1, 2),
    ((2.5, 4.0), 0.02, 3),
    ((1.5,), 0.3, 4),
])
def test_young_inequality_on_random_cloud(leading, delta, seed):
    constant = ex.young_constant(leading, delta)
    exps = ex.complete_young_exponents(leading)
    rng = np.random.default_rng(seed)
    betas = 10.0 ** rng.uniform(-6.0, 6.0, size=(100_000, len(exps)))
    lhs = np.prod(betas, axis=1)
    rhs = delta * np.sum(betas[:, :-1] ** np.array(exps[:-1]), axis=1)
    rhs = rhs + constant * betas[:, -1] ** exps[-1]
    assert np.all(lhs <= rhs)
