import numpy as np
import pytest

from anisolab import grid as g


@pytest.fixture
def grid16():
    return g.unit_grid(16)


def _random_faces(grid, rng):
    return [g.FaceField(grid, j, rng.standard_normal(
        g.forward_diff(g.zeros(grid), j).values.shape)) for j in range(grid.N)]


def test_grid_geometry():
    grid = g.unit_grid(32)
    assert grid.h == (1 / 33, 1 / 33)
    assert grid.cell_volume == pytest.approx(1 / 33 ** 2)
    with pytest.raises(ValueError):
        g.Grid((2, 5))
    with pytest.raises(ValueError):
        g.Grid((5,))


def test_forward_diff_linear_field(grid16):
    u = g.sample(grid16, lambda x, y: x)
    faces = g.forward_diff(u, 0).values
    # zero trace holds at the left wall only, so every face except the last
    # carries the unit slope exactly
    assert np.all(faces[:-1, :] == 1.0 * (1 / grid16.h[0]) * grid16.h[0])
    assert np.allclose(faces[:-1, :], 1.0)
    assert np.allclose(faces[-1, :], -16.0)


def test_forward_diff_constant_field(grid16):
    u = g.constant(grid16, 3.0)
    faces = g.forward_diff(u, 1).values
    h = grid16.h[1]
    assert np.allclose(faces[:, 0], 3.0 / h)
    assert np.allclose(faces[:, -1], -3.0 / h)
    assert np.all(faces[:, 1:-1] == 0.0)


def test_forward_diff_zero_and_linearity(grid16):
    rng = np.random.default_rng(0)
    assert np.all(g.forward_diff(g.zeros(grid16), 0).values == 0.0)
    u = g.Field(grid16, rng.standard_normal(grid16.n))
    v = g.Field(grid16, rng.standard_normal(grid16.n))
    combo = g.Field(grid16, 2.0 * u.values - 3.0 * v.values)
    for j in range(2):
        lhs = g.forward_diff(combo, j).values
        rhs = 2.0 * g.forward_diff(u, j).values - 3.0 * g.forward_diff(v, j).values
        assert np.array_equal(lhs, rhs)


def test_divergence_adjoint_zero(grid16):
    zero_faces = [g.FaceField(grid16, j, np.zeros(g.forward_diff(
        g.zeros(grid16), j).values.shape)) for j in range(2)]
    assert np.all(g.divergence_adjoint(zero_faces).values == 0.0)


def test_adjoint_identity_random_pairs(grid16):
    rng = np.random.default_rng(1)
    for _ in range(20):
        psis = _random_faces(grid16, rng)
        v = g.Field(grid16, rng.standard_normal(grid16.n))
        lhs = g.inner(g.divergence_adjoint(psis), v)
        rhs = sum(g.face_inner(p, g.forward_diff(v, p.axis)) for p in psis)
        assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs(rhs), 1.0)


def test_adjoint_shape_mismatch(grid16):
    psis = [g.FaceField(grid16, 0, np.zeros((17, 16)))]
    with pytest.raises(ValueError):
        g.divergence_adjoint(psis)


def test_discrete_laplacian_second_order():
    # oracle: analytic Laplacian of the sine bump on a refinement pair
    errors = []
    for n in (16, 32):
        grid = g.unit_grid(n)
        u = g.sample(grid, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y))
        lap = g.divergence_adjoint([g.forward_diff(u, j) for j in range(2)])
        err = g.lq_norm(g.Field(grid, lap.values - 2 * np.pi ** 2 * u.values), 2.0)
        errors.append(err)
    assert errors[0] / errors[1] == pytest.approx(4.0, abs=0.5)


def test_integrate_constant():
    grid = g.unit_grid(32)
    value = g.integrate(g.constant(grid, 1.0))
    assert value == pytest.approx((32 / 33) ** 2)
    assert abs(value - 1.0) < 2.5 * max(grid.h)


def test_lq_norm_basics(grid16):
    assert g.lq_norm(g.zeros(grid16), 2.5) == 0.0
    with pytest.raises(ValueError):
        g.lq_norm(g.constant(grid16, 1.0), 0.5)


def test_discrete_hoelder(grid16):
    rng = np.random.default_rng(2)
    for q in (1.5, 2.0, 3.0):
        qp = q / (q - 1.0)
        u = g.Field(grid16, rng.standard_normal(grid16.n))
        v = g.Field(grid16, rng.standard_normal(grid16.n))
        pairing = grid16.cell_volume * np.sum(np.abs(u.values) * np.abs(v.values))
        assert pairing <= g.lq_norm(u, q) * g.lq_norm(v, qp) * (1 + 1e-12)


def test_anisotropic_norm_refinement_consistency():
    values = []
    for n in (64, 128):
        grid = g.unit_grid(n)
        u = g.sample(grid, lambda x, y: x * (1 - x) * y * (1 - y))
        values.append(g.anisotropic_norm(u, (1.5, 1.8)))
    assert abs(values[0] - values[1]) / values[1] < 0.01


def test_node_gradients_are_centered(grid16):
    rng = np.random.default_rng(3)
    u = g.Field(grid16, rng.standard_normal(grid16.n))
    grads = g.node_gradients(u)
    padded = np.pad(u.values, ((1, 1), (0, 0)))
    centered = (padded[2:, :] - padded[:-2, :]) / (2 * grid16.h[0])
    assert np.allclose(grads[0], centered, atol=1e-14)


def test_three_dimensional_calculus():
    grid = g.unit_grid(6, dim=3)
    rng = np.random.default_rng(4)
    psis = _random_faces(grid, rng)
    v = g.Field(grid, rng.standard_normal(grid.n))
    lhs = g.inner(g.divergence_adjoint(psis), v)
    rhs = sum(g.face_inner(p, g.forward_diff(v, p.axis)) for p in psis)
    assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs(rhs), 1.0)
    assert g.integrate(g.constant(grid, 1.0)) == pytest.approx((6 / 7) ** 3)


def test_field_csv_round_trip(tmp_path):
    grid = g.unit_grid(9)
    rng = np.random.default_rng(5)
    field = g.Field(grid, rng.standard_normal(grid.n) * 10.0 ** rng.integers(-8, 8, grid.n))
    path = tmp_path / "field.csv"
    g.write_field_csv(field, path)
    restored = g.read_field_csv(path)
    assert restored.grid == grid
    assert np.array_equal(restored.values, field.values)


def test_field_csv_round_trip_3d(tmp_path):
    grid = g.unit_grid(4, dim=3)
    rng = np.random.default_rng(6)
    field = g.Field(grid, rng.standard_normal(grid.n))
    path = tmp_path / "field3.csv"
    g.write_field_csv(field, path)
    assert np.array_equal(g.read_field_csv(path).values, field.values)


def test_field_csv_rejects_garbage(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("i,j,x,y,value\n")
    with pytest.raises(ValueError, match="header"):
        g.read_field_csv(path)


def test_field_shape_validation():
    grid = g.unit_grid(8)
    with pytest.raises(ValueError):
        g.Field(grid, np.zeros((8, 9)))
    with pytest.raises(ValueError):
        g.FaceField(grid, 0, np.zeros((8, 8)))
