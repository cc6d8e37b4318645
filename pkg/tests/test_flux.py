import numpy as np
import pytest

from anisolab import flux
from anisolab.exponents import ExponentVector


@pytest.fixture
def proto18():
    return flux.FluxSpec(ExponentVector((1.5, 1.8)))


def test_prototype_pointwise_values():
    spec = flux.FluxSpec(ExponentVector((3.0, 2.0)))
    assert flux.evaluate(spec, 0.0, np.array([2.0, -1.0])) == pytest.approx([4.0, -1.0])
    assert np.all(flux.evaluate(spec, 0.0, np.zeros(2)) == 0.0)
    spec15 = flux.FluxSpec(ExponentVector((1.5, 1.5)))
    assert flux.evaluate(spec15, 0.0, np.array([4.0, 0.0])) == pytest.approx([2.0, 0.0])


def test_smoothed_pointwise_values():
    spec15 = flux.FluxSpec(ExponentVector((1.5, 1.5)))
    smoothed = flux.SmoothedFluxSpec(spec15, 4.0)
    out = flux.evaluate_smoothed(smoothed, 0.0, np.array([3.0, 0.0]))
    assert out == pytest.approx([3.0 / np.sqrt(5.0), 0.0])
    # the smoothing vanishes from the formula for quadratic exponents
    spec2 = flux.FluxSpec(ExponentVector((2.0, 2.0)))
    out2 = flux.evaluate_smoothed(flux.SmoothedFluxSpec(spec2, 0.3), 0.0, np.array([2.0, -1.0]))
    assert out2 == pytest.approx([2.0, -1.0])


def test_odd_symmetry(proto18):
    rng = np.random.default_rng(0)
    xi = rng.standard_normal((500, 2)) * 10.0 ** rng.integers(-3, 3, (500, 1))
    assert np.allclose(flux.evaluate(proto18, 0.0, -xi),
                       -flux.evaluate(proto18, 0.0, xi), atol=0.0)
    smoothed = flux.SmoothedFluxSpec(proto18, 0.05)
    assert np.allclose(flux.evaluate_smoothed(smoothed, 0.0, -xi),
                       -flux.evaluate_smoothed(smoothed, 0.0, xi), atol=0.0)


def test_smoothing_consistency_ladder(proto18):
    xi = np.array([0.7, -1.3])
    exact = flux.evaluate(proto18, 0.0, xi)
    gaps = []
    for delta in (1.0, 0.1, 0.01, 0.001, 1e-4):
        approx = flux.evaluate_smoothed(flux.SmoothedFluxSpec(proto18, delta), 0.0, xi)
        gaps.append(np.max(np.abs(approx - exact)))
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-6


def test_coercivity_prototype_exact(proto18):
    result = flux.check_coercivity(proto18, 50_000, seed=11)
    assert result.passed
    assert result.value == 1.0


def test_coercivity_smoothed_reports_loss(proto18):
    # scan oracle: small gradients lose coercivity against the raw power sum
    smoothed = flux.SmoothedFluxSpec(proto18, 0.1)
    mags = 10.0 ** np.linspace(-6, 6, 200)
    xi = np.stack([mags, mags], axis=-1)
    a = flux.evaluate_smoothed(smoothed, 0.0, xi)
    ratios = np.sum(a * xi, axis=-1) / np.sum(np.abs(xi) ** np.array([1.5, 1.8]), axis=-1)
    assert ratios.min() < 1.0 and ratios.min() > 0.0
    result = flux.check_coercivity(smoothed, 50_000, seed=11)
    assert result.passed and result.value < 1.0


def test_coercivity_scaled_flux():
    ev = ExponentVector((1.5, 1.8))
    base = flux.FluxSpec(ev)
    scaled = flux.FluxSpec(ev, kind=flux.KIND_CUSTOM,
                           table=lambda t, xi: 0.5 * flux.evaluate(base, t, xi))
    result = flux.check_coercivity(scaled, 20_000, seed=3)
    assert result.value == pytest.approx(0.5, abs=1e-12)


def test_monotonicity_quadratic_is_distance():
    spec = flux.FluxSpec(ExponentVector((2.0, 2.0)))
    rng = np.random.default_rng(4)
    xi = rng.standard_normal((1000, 2))
    xi_hat = rng.standard_normal((1000, 2))
    dots = np.sum((flux.evaluate(spec, 0.0, xi) - flux.evaluate(spec, 0.0, xi_hat))
                  * (xi - xi_hat), axis=-1)
    assert np.allclose(dots, np.sum((xi - xi_hat) ** 2, axis=-1))


def test_monotonicity_sampling():
    # ordering of the entries is irrelevant for the pointwise structure
    spec = flux.FluxSpec(ExponentVector((3.0, 1.5)))
    result = flux.check_monotonicity(spec, 100_000, seed=5)
    assert result.passed
    equal = flux.evaluate(spec, 0.0, np.array([1.0, 2.0]))
    assert np.sum((equal - equal) * 0.0) == 0.0


def test_growth_prototype_and_sampling(proto18):
    xi = np.array([3.0, 0.0])
    a = np.abs(flux.evaluate(proto18, 7.0, xi))
    power = np.sum(np.abs(xi) ** np.array([1.5, 1.8]))
    assert a[0] <= power ** (1.0 / 3.0) * (1 + 1e-12)
    assert flux.check_growth(proto18, 100_000, seed=6).passed


def test_growth_catches_cubic_flux():
    spec = flux.FluxSpec(ExponentVector((2.0, 2.0)), kind=flux.KIND_CUSTOM,
                         table=lambda t, xi: np.asarray(xi, dtype=float) ** 3)
    result = flux.check_growth(spec, 20_000, seed=7)
    assert not result.passed
    assert result.witness is not None and "xi" in result.witness


def test_zeroth_coupling_kind():
    spec = flux.FluxSpec(ExponentVector((1.5, 1.8)),
                         kind=flux.KIND_ZEROTH_COUPLING, growth_const=2.0)
    base = flux.FluxSpec(ExponentVector((1.5, 1.8)))
    xi = np.array([1.0, -2.0])
    assert flux.evaluate(spec, 0.0, xi) == pytest.approx(flux.evaluate(base, 0.0, xi))
    assert np.all(np.abs(flux.evaluate(spec, 5.0, xi)) <= 2.0 * np.abs(flux.evaluate(base, 0.0, xi)))
    assert flux.check_coercivity(spec, 20_000, seed=8).passed
    assert flux.check_growth(spec, 20_000, seed=8).passed


def test_smoothed_jacobian_is_diagonal_spd(proto18):
    # finite differences of the smoothed flux: the componentwise structure
    # makes the derivative diagonal with positive entries
    smoothed = flux.SmoothedFluxSpec(proto18, 0.05)
    rng = np.random.default_rng(9)
    for _ in range(10):
        xi = rng.standard_normal(2) * 10.0 ** rng.integers(-2, 2)
        step = 1e-7
        jac = np.zeros((2, 2))
        for j in range(2):
            plus = xi.copy(); plus[j] += step
            minus = xi.copy(); minus[j] -= step
            jac[:, j] = (flux.evaluate_smoothed(smoothed, 0.0, plus)
                         - flux.evaluate_smoothed(smoothed, 0.0, minus)) / (2 * step)
        assert np.allclose(jac, jac.T, atol=1e-8)
        assert np.all(np.linalg.eigvalsh(0.5 * (jac + jac.T)) > 0.0)


def test_smoothed_slope_matches_fd():
    rng = np.random.default_rng(10)
    xi = rng.standard_normal(100)
    for pj in (1.5, 1.8, 2.0, 3.0):
        for delta in (0.1, 0.01):
            slope = flux.smoothed_slope(pj, xi, delta)
            step = 1e-7
            fd = (flux.smoothed_component(pj, xi + step, delta)
                  - flux.smoothed_component(pj, xi - step, delta)) / (2 * step)
            assert np.allclose(slope, fd, rtol=1e-5, atol=1e-8)
            assert np.all(slope > 0.0)


def test_spec_validation():
    with pytest.raises(ValueError, match="exceed 1"):
        flux.FluxSpec(ExponentVector((1.0, 2.0)))
    with pytest.raises(ValueError, match="kind"):
        flux.FluxSpec(ExponentVector((1.5, 1.8)), kind="bogus")
    with pytest.raises(ValueError, match="table"):
        flux.FluxSpec(ExponentVector((1.5, 1.8)), kind=flux.KIND_CUSTOM)
    with pytest.raises(ValueError, match="positive"):
        flux.SmoothedFluxSpec(flux.FluxSpec(ExponentVector((1.5, 1.8))), 0.0)
    with pytest.raises(ValueError):
        flux.check_coercivity(flux.FluxSpec(ExponentVector((1.5, 1.8))), 10)
