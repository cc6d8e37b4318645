import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anisolab import lower_order as lo
from anisolab.exponents import ExponentVector

EV22 = ExponentVector((2.0, 2.0))
EV18 = ExponentVector((1.5, 1.8))

finite_floats = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


def test_model_pointwise_values():
    spec = lo.model_lower_order(EV22, power=3.0)
    assert lo.evaluate(spec, 2.0, np.array([1.0, 1.0])) == pytest.approx(12.0)
    assert lo.evaluate(spec, 0.0, np.array([5.0, -2.0])) == 0.0
    assert lo.evaluate(spec, -1.0, np.array([0.0, 0.0])) == pytest.approx(-1.0)


def test_zero_kind():
    spec = lo.zero_lower_order(EV18)
    assert np.all(lo.evaluate(spec, np.linspace(-3, 3, 7), np.ones((7, 2))) == 0.0)


def test_saturation_values():
    assert lo.saturate(12.0, 0.25) == pytest.approx(3.0)
    assert lo.saturate(0.0, 0.7) == 0.0
    assert lo.saturate(-1e6, 0.1) == pytest.approx(-10.0, abs=1e-3)
    assert abs(lo.saturate(-1e6, 0.1)) < 10.0
    assert np.array_equal(lo.saturate(np.array([3.0, -4.0]), 0.0), [3.0, -4.0])
    with pytest.raises(ValueError):
        lo.saturate(1.0, -0.1)


@given(finite_floats, st.floats(min_value=1e-6, max_value=1e3))
@settings(max_examples=300, deadline=None)
def test_saturation_laws(value, eps):
    out = lo.saturate(value, eps)
    assert abs(out) <= min(abs(value), 1.0 / eps) * (1 + 1e-12)
    assert out * value >= 0.0


def test_regularized_term_laws():
    spec = lo.model_lower_order(EV22, power=3.0)
    reg = lo.RegularizedLowerOrder(spec, 0.25)
    rng = np.random.default_rng(0)
    t = rng.standard_normal(5000) * 10.0
    xi = rng.standard_normal((5000, 2)) * 5.0
    raw = lo.evaluate(spec, t, xi)
    out = lo.evaluate_regularized(reg, t, xi)
    assert np.all(np.abs(out) <= np.minimum(np.abs(raw), 4.0) * (1 + 1e-12))
    assert np.all(out * t >= 0.0)


def test_regularization_ladder_monotone():
    # pointwise recovery: shrinking the parameter only strengthens the term
    spec = lo.model_lower_order(EV22, power=3.0)
    t, xi = 2.0, np.array([1.0, 1.0])
    values = [abs(lo.evaluate_regularized(lo.RegularizedLowerOrder(spec, eps), t, xi))
              for eps in (1.0, 0.3, 0.1, 0.03, 0.01, 1e-4)]
    assert all(b > a for a, b in zip(values, values[1:]))
    assert values[-1] == pytest.approx(12.0, rel=2e-3)
    # saturation never reaches the cap
    for eps in (1.0, 0.1, 0.01):
        assert eps * abs(lo.saturate(12.0, eps)) < 1.0


def test_model_constants_algebra():
    consts = lo.model_constants(3.0, 1.0)
    scan = np.linspace(0.0, 100.0, 501)
    assert np.allclose(consts.envelope(scan), np.maximum(1.0, scan) ** 2)
    assert consts.offset == 1.0
    assert consts.lower_const == pytest.approx(1.0)
    assert lo.model_constants(2.0, 0.5).lower_const == pytest.approx(0.5)
    # envelope is nondecreasing on the scanned range
    assert np.all(np.diff(consts.envelope(scan)) >= 0.0)


def test_model_passes_all_checks():
    spec = lo.model_lower_order(EV18, power=3.0)
    assert lo.check_sign(spec, 100_000, seed=1).passed
    assert lo.check_growth(spec, 100_000, seed=2).passed
    assert lo.check_lower_bound(spec, 100_000, seed=3).passed


def test_sign_check_catches_counterexample():
    spec = lo.LowerOrderSpec(
        exponents=EV18, kind=lo.KIND_CUSTOM,
        table=lambda t, xi: -np.asarray(t, dtype=float),
        envelope=lambda s: 1.0 + np.asarray(s, dtype=float))
    result = lo.check_sign(spec, 10_000, seed=4)
    assert not result.passed
    assert result.witness is not None and result.witness["product"] < 0.0


def test_model_derivatives_match_fd():
    spec = lo.model_lower_order(EV18, power=3.0)
    rng = np.random.default_rng(5)
    t = rng.standard_normal(50) * 2.0
    xi = rng.standard_normal((50, 2))
    d_t, d_xi = lo.derivatives(spec, t, xi)
    step = 1e-6
    fd_t = (lo.evaluate(spec, t + step, xi) - lo.evaluate(spec, t - step, xi)) / (2 * step)
    assert np.allclose(d_t, fd_t, rtol=1e-5, atol=1e-7)
    for j in range(2):
        bump = np.zeros_like(xi)
        bump[:, j] = step
        fd_j = (lo.evaluate(spec, t, xi + bump) - lo.evaluate(spec, t, xi - bump)) / (2 * step)
        assert np.allclose(d_xi[:, j], fd_j, rtol=1e-5, atol=1e-7)


def test_derivatives_refuse_custom_tables():
    spec = lo.LowerOrderSpec(exponents=EV18, kind=lo.KIND_CUSTOM,
                             table=lambda t, xi: np.zeros_like(np.asarray(t)),
                             envelope=lambda s: np.ones_like(np.asarray(s, dtype=float)))
    with pytest.raises(ValueError, match="check-only"):
        lo.derivatives(spec, np.zeros(3), np.zeros((3, 2)))


def test_spec_validation():
    with pytest.raises(ValueError, match="power"):
        lo.model_lower_order(EV18, power=1.0)
    with pytest.raises(ValueError, match="positive"):
        lo.model_lower_order(EV18, power=2.0, threshold=0.0)
    with pytest.raises(ValueError, match="nondecreasing"):
        lo.LowerOrderSpec(exponents=EV18, kind=lo.KIND_MODEL, power=2.0,
                          envelope=lambda s: -np.asarray(s, dtype=float))
    with pytest.raises(ValueError, match="table"):
        lo.LowerOrderSpec(exponents=EV18, kind=lo.KIND_CUSTOM)
