"""Right-hand-side operators and integrable data with their regularization.

The source operator pairs a fixed integrable profile, a divergence-form
functional carried by explicit face data, and a bounded pointwise part
against test fields.  The datum holds a grid sample of an integrable
function, possibly with a point singularity clamped to its cell average, and
its saturation-regularized approximations.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Optional

import numpy as np

from . import grid as grid_mod
from .exponents import ExponentVector
from .grid import FaceField, Field, Grid
from .lower_order import saturate


@dataclasses.dataclass
class SourceOperator:
    """F + divergence-form part + bounded pointwise part, with the growth
    constants the pairing bound is checked against."""

    grid: Grid
    exponents: ExponentVector
    F: Optional[Field] = None
    H: Optional[tuple[FaceField, ...]] = None
    psi: Optional[Callable[[np.ndarray], np.ndarray]] = None
    psi_prime: Optional[Callable[[np.ndarray], np.ndarray]] = None
    r: float = 2.0
    s_exp: float = 2.0
    a0: float = 1.0
    b_exp: Optional[float] = None

    def __post_init__(self) -> None:
        for v in self.exponents.p:
            if not math.isfinite(v) or v <= 1.0:
                raise ValueError(f"every exponent must exceed 1 (got {v})")
        # the embedding exponent caps r and s only while it is defined
        mean = self.exponents.harmonic_mean()
        dim = self.exponents.N
        star = dim * mean / (dim - mean) if mean < dim else math.inf
        if not 1.0 <= self.r < star:
            raise ValueError(f"exponent r must lie in [1, {star:g})")
        if not 1.0 <= self.s_exp < star:
            raise ValueError(f"exponent s must lie in [1, {star:g})")
        if self.a0 < 0.0:
            raise ValueError("a0 must be nonnegative")
        p1 = min(self.exponents.p)
        cap = p1 - 1.0 if self.a0 > 0.0 else p1 * (mean - 1.0) / mean
        if self.b_exp is None:
            self.b_exp = 0.5 * cap
        if not 0.0 < self.b_exp < cap:
            raise ValueError(f"growth exponent b must lie in (0, {cap:g})")
        if self.F is not None and self.F.grid != self.grid:
            raise ValueError("F lives on the wrong grid")
        if self.H is not None:
            if len(self.H) != self.grid.N:
                raise ValueError("need one face field per axis")
            for j, hf in enumerate(self.H):
                if hf.grid != self.grid or hf.axis != j:
                    raise ValueError("face data inconsistent with the grid")


def bounded_psi(g: Field) -> tuple[Callable, Callable]:
    """Default pointwise part u -> g*u/(1+|u|) and its derivative."""
    weight = g.values

    def psi(u: np.ndarray) -> np.ndarray:
        return weight * u / (1.0 + np.abs(u))

    def psi_prime(u: np.ndarray) -> np.ndarray:
        return weight / (1.0 + np.abs(u)) ** 2

    return psi, psi_prime


def pairing(op: SourceOperator, u: Field, v: Field) -> float:
    """Duality pairing of the operator at u against the test field v."""
    if u.grid != op.grid or v.grid != op.grid:
        raise ValueError("fields live on the wrong grid")
    total = 0.0
    if op.F is not None:
        total += grid_mod.inner(op.F, v)
    if op.H is not None:
        for j, hf in enumerate(op.H):
            total += grid_mod.face_inner(hf, grid_mod.forward_diff(v, j))
    if op.psi is not None:
        total += op.grid.cell_volume * float(np.sum(op.psi(u.values) * v.values))
    return total


def dual_field(op: SourceOperator, u: Field) -> Field:
    """Nodal representative of the operator at u: pairing it against any v
    equals the plain volume-weighted product (exact, via the adjoint)."""
    if u.grid != op.grid:
        raise ValueError("field lives on the wrong grid")
    out = np.zeros(op.grid.n)
    if op.F is not None:
        out += op.F.values
    if op.H is not None:
        out += grid_mod.divergence_adjoint(op.H).values
    if op.psi is not None:
        out += op.psi(u.values)
    return Field(op.grid, out)


def psi_derivative(op: SourceOperator, u: Field) -> Optional[np.ndarray]:
    """Pointwise derivative of the bounded part; central differences when no
    analytic derivative was provided."""
    if op.psi is None:
        return None
    if op.psi_prime is not None:
        return np.asarray(op.psi_prime(u.values), dtype=float)
    step = 1e-6 * (1.0 + np.abs(u.values))
    return (op.psi(u.values + step) - op.psi(u.values - step)) / (2.0 * step)


@dataclasses.dataclass
class DatumSpec:
    """Grid sample of an integrable datum."""

    grid: Grid
    values: Field

    def __post_init__(self) -> None:
        if self.values.grid != self.grid:
            raise ValueError("datum lives on the wrong grid")
        if not np.all(np.isfinite(self.values.values)):
            raise ValueError("datum must be finite after sampling")


def zero_datum(grid: Grid) -> DatumSpec:
    return DatumSpec(grid, grid_mod.zeros(grid))


def constant_datum(grid: Grid, value: float) -> DatumSpec:
    return DatumSpec(grid, grid_mod.constant(grid, value))


def singular_datum(grid: Grid, x0, alpha: float = 1.0, amplitude: float = 1.0) -> DatumSpec:
    """Point-singular profile amplitude*|x-x0|^(-alpha), alpha below the
    dimension, with nodes inside half a cell of the singularity clamped to
    the cell average of the profile."""
    if not 0.0 < alpha < grid.N:
        raise ValueError(f"singularity strength must lie in (0, {grid.N})")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (grid.N,):
        raise ValueError("singularity location has the wrong dimension")
    meshes = grid.meshes()
    r2 = sum((m - c) ** 2 for m, c in zip(meshes, x0))
    r = np.sqrt(r2)
    h_eff = max(grid.h)
    # cell average of r^(-alpha) over a ball of radius h/2, per unit volume
    if grid.N == 2:
        cap = 2.0 * math.pi / (2.0 - alpha) * (h_eff / 2.0) ** (2.0 - alpha)
    else:
        cap = 4.0 * math.pi / (3.0 - alpha) * (h_eff / 2.0) ** (3.0 - alpha)
    cap *= abs(amplitude) / grid.cell_volume
    with np.errstate(divide="ignore"):
        raw = np.abs(amplitude) * r ** (-alpha)
    values = np.sign(amplitude) * np.minimum(raw, cap)
    return DatumSpec(grid, Field(grid, values))


def regularize_datum(datum: DatumSpec, epsilon: float) -> Field:
    """Saturated datum; bounded by 1/eps nodewise and by the datum itself."""
    return Field(datum.grid, saturate(datum.values.values, epsilon))


@dataclasses.dataclass
class PairingBoundReport:
    fitted_c: float
    growth_in_u: bool
    ok: bool
    samples: int
    worst: Optional[dict] = None


def _random_smooth_field(grid: Grid, rng: np.random.Generator, amplitude: float) -> Field:
    meshes = grid.meshes()
    values = np.zeros(grid.n)
    modes = range(1, 4) if grid.N == 2 else range(1, 3)
    for index in np.ndindex(*([len(list(modes))] * grid.N)):
        ks = [list(modes)[i] for i in index]
        coeff = rng.standard_normal() / sum(k * k for k in ks)
        term = np.ones(grid.n)
        for m, k in zip(meshes, ks):
            term = term * np.sin(k * math.pi * m)
        values += coeff * term
    return Field(grid, amplitude * values)


def check_pairing_bound(op: SourceOperator, cloud_size: int = 200,
                        seed: int = 0, cap: float = 1e6) -> PairingBoundReport:
    """Fit the smallest constant that closes the pairing growth bound over a
    random cloud; flag growth in the first argument when the fit degrades on
    the large-norm half of the cloud."""
    if cloud_size < 100:
        raise ValueError("need at least 100 pairs")
    rng = np.random.default_rng(seed)
    required = []
    u_norms = []
    worst = None
    for _ in range(cloud_size):
        u = _random_smooth_field(op.grid, rng, 10.0 ** rng.uniform(-1.0, 2.0))
        v = _random_smooth_field(op.grid, rng, 10.0 ** rng.uniform(-1.0, 1.0))
        u_norm = grid_mod.anisotropic_norm(u, op.exponents)
        v_norm = grid_mod.anisotropic_norm(v, op.exponents)
        v_lebesgue = grid_mod.lq_norm(v, op.s_exp)
        value = abs(pairing(op, u, v))
        denom = (1.0 + u_norm ** op.b_exp) * (op.a0 * v_norm + v_lebesgue)
        need = value / denom if denom > 0 else np.inf
        required.append(need)
        u_norms.append(u_norm)
        if worst is None or need > worst["required_c"]:
            worst = {"required_c": float(need), "u_norm": float(u_norm),
                     "v_norm": float(v_norm), "pairing": float(value)}
    required = np.array(required)
    u_norms = np.array(u_norms)
    fitted = float(np.max(required))
    order = np.argsort(u_norms)
    half = cloud_size // 2
    low = float(np.max(required[order[:half]]))
    high = float(np.max(required[order[half:]]))
    growth = high > 10.0 * max(low, 1e-300)
    return PairingBoundReport(fitted_c=fitted, growth_in_u=growth,
                              ok=bool(fitted < cap and not growth),
                              samples=cloud_size, worst=worst)
