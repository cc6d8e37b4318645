"""Divergence-form flux vectors and sampling verifiers for their structure.

The workhorse is the componentwise power-law prototype, odd in each gradient
slot, plus a smoothed variant whose slope stays finite at the origin (needed
by Newton when an exponent is below 2).  Coercivity, monotonicity and the
growth envelope are verified on randomized clouds rather than assumed.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Optional

import numpy as np

from .exponents import ExponentVector

KIND_PROTOTYPE = "prototype"
KIND_ZEROTH_COUPLING = "prototype-with-zeroth-coupling"
KIND_CUSTOM = "custom-table"
_KINDS = (KIND_PROTOTYPE, KIND_ZEROTH_COUPLING, KIND_CUSTOM)

# kinds whose componentwise evaluation the solver can assemble
SOLVABLE_KINDS = (KIND_PROTOTYPE,)


@dataclasses.dataclass
class FluxSpec:
    """A flux vector together with the constants its checks are run against.

    growth_weights holds optional nonnegative per-axis offset samples for the
    growth envelope; the prototype needs none.
    """

    exponents: ExponentVector
    kind: str = KIND_PROTOTYPE
    coercivity_const: float = 1.0
    growth_const: float = 1.0
    growth_weights: Optional[tuple[np.ndarray, ...]] = None
    table: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None

    def __post_init__(self) -> None:
        # pointwise structure only needs every exponent above 1; the global
        # harmonic-mean condition is enforced where embeddings are used
        for v in self.exponents.p:
            if not math.isfinite(v) or v <= 1.0:
                raise ValueError(f"every exponent must exceed 1 (got {v})")
        if self.kind not in _KINDS:
            raise ValueError(f"unknown flux kind {self.kind!r}")
        if self.kind == KIND_CUSTOM and self.table is None:
            raise ValueError("custom-table flux needs a table callable")
        if self.coercivity_const <= 0.0 or self.growth_const <= 0.0:
            raise ValueError("flux constants must be positive")
        if self.growth_weights is not None:
            for w in self.growth_weights:
                if np.any(np.asarray(w) < 0.0):
                    raise ValueError("growth weights must be nonnegative")


@dataclasses.dataclass
class SmoothedFluxSpec:
    """Smoothing of the base flux; recovers it pointwise as delta drops."""

    base: FluxSpec
    delta: float

    def __post_init__(self) -> None:
        if self.delta <= 0.0:
            raise ValueError("smoothing parameter must be positive")


@dataclasses.dataclass
class CheckResult:
    passed: bool
    value: float
    samples: int
    witness: Optional[dict] = None
    detail: str = ""


def _zeroth_factor(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return 1.0 + t * t / (1.0 + t * t)


def evaluate(spec: FluxSpec, t, xi) -> np.ndarray:
    """Flux vector at gradient xi (last axis indexes the direction)."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != spec.exponents.N:
        raise ValueError("gradient has wrong number of components")
    if spec.kind == KIND_CUSTOM:
        return np.asarray(spec.table(t, xi), dtype=float)
    p = np.array(spec.exponents.p)
    out = np.sign(xi) * np.abs(xi) ** (p - 1.0)
    if spec.kind == KIND_ZEROTH_COUPLING:
        out = out * _zeroth_factor(t)[..., None]
    return out


def evaluate_component(spec: FluxSpec, axis: int, xi_j) -> np.ndarray:
    """Single component of a componentwise flux (custom tables excluded)."""
    if spec.kind != KIND_PROTOTYPE:
        raise ValueError(f"componentwise evaluation needs the prototype flux, not {spec.kind!r}")
    xi_j = np.asarray(xi_j, dtype=float)
    pj = spec.exponents.p[axis]
    return np.sign(xi_j) * np.abs(xi_j) ** (pj - 1.0)


def evaluate_smoothed(spec: SmoothedFluxSpec, t, xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if spec.base.kind != KIND_PROTOTYPE:
        raise ValueError("smoothing is defined for the prototype flux only")
    p = np.array(spec.base.exponents.p)
    return (xi * xi + spec.delta ** 2) ** ((p - 2.0) / 2.0) * xi


def smoothed_component(pj: float, xi_j: np.ndarray, delta: float, floor: float = 1e-12) -> np.ndarray:
    """One smoothed component; at delta=0 falls back to the raw power with a
    tiny magnitude floor so the zero-gradient limit stays finite."""
    xi_j = np.asarray(xi_j, dtype=float)
    if delta > 0.0:
        return (xi_j * xi_j + delta * delta) ** ((pj - 2.0) / 2.0) * xi_j
    return np.sign(xi_j) * np.abs(xi_j) ** (pj - 1.0)


def smoothed_slope(pj: float, xi_j: np.ndarray, delta: float, floor: float = 1e-9) -> np.ndarray:
    """d/dxi of the smoothed component; strictly positive, used by Newton."""
    xi_j = np.asarray(xi_j, dtype=float)
    if delta > 0.0:
        s2 = xi_j * xi_j + delta * delta
        return s2 ** ((pj - 4.0) / 2.0) * ((pj - 1.0) * xi_j * xi_j + delta * delta)
    mag = np.maximum(np.abs(xi_j), floor)
    return (pj - 1.0) * mag ** (pj - 2.0)


def _eval_any(spec, t, xi) -> np.ndarray:
    if isinstance(spec, SmoothedFluxSpec):
        return evaluate_smoothed(spec, t, xi)
    return evaluate(spec, t, xi)


def _spec_base(spec) -> FluxSpec:
    return spec.base if isinstance(spec, SmoothedFluxSpec) else spec


def _sample_cloud(n_samples: int, dim: int, rng: np.random.Generator):
    """Log-uniform magnitudes with random signs for gradients and states."""
    mag = 10.0 ** rng.uniform(-3.0, 3.0, size=(n_samples, dim))
    sign = rng.choice([-1.0, 1.0], size=(n_samples, dim))
    xi = mag * sign
    t = 10.0 ** rng.uniform(-3.0, 2.0, size=n_samples) * rng.choice([-1.0, 1.0], size=n_samples)
    t[rng.random(n_samples) < 0.05] = 0.0
    return t, xi


def check_coercivity(spec, n_samples: int = 100_000, seed: int = 0) -> CheckResult:
    """Infimum of the pairing ratio over a random cloud.

    The gradient-power sum in the denominator is factored as
    |xi|^(p-1) * |xi| so the prototype identity holds to the last bit and the
    reported constant is exactly one there.
    """
    if n_samples < 1000:
        raise ValueError("need at least 1000 samples")
    base = _spec_base(spec)
    rng = np.random.default_rng(seed)
    t, xi = _sample_cloud(n_samples, base.exponents.N, rng)
    a = _eval_any(spec, t, xi)
    p = np.array(base.exponents.p)
    numerator = np.sum(a * xi, axis=-1)
    denominator = np.sum(np.abs(xi) ** (p - 1.0) * np.abs(xi), axis=-1)
    ok = denominator > 0.0
    ratio = numerator[ok] / denominator[ok]
    idx = int(np.argmin(ratio))
    estimate = float(ratio[idx])
    passed = estimate > 0.0
    witness = None
    if not passed:
        full = np.flatnonzero(ok)[idx]
        witness = {"t": float(t[full]), "xi": xi[full].tolist(), "ratio": estimate}
    return CheckResult(passed, estimate, int(ok.sum()), witness,
                       detail="infimum of pairing ratio over sampled cloud")


def check_monotonicity(spec, n_pairs: int = 100_000, seed: int = 0,
                       tie_tol: float = 1e-14) -> CheckResult:
    """Pairing of flux differences against gradient differences on random
    pairs; strictness is required away from ties."""
    if n_pairs < 1000:
        raise ValueError("need at least 1000 pairs")
    base = _spec_base(spec)
    rng = np.random.default_rng(seed)
    t, xi = _sample_cloud(n_pairs, base.exponents.N, rng)
    _, xi_hat = _sample_cloud(n_pairs, base.exponents.N, rng)
    dots = np.sum((_eval_any(spec, t, xi) - _eval_any(spec, t, xi_hat)) * (xi - xi_hat), axis=-1)
    separated = np.max(np.abs(xi - xi_hat), axis=-1) > tie_tol
    bad = (dots < 0.0) | (separated & (dots <= 0.0))
    worst = int(np.argmin(dots))
    witness = None
    if bad.any():
        w = int(np.flatnonzero(bad)[0])
        witness = {"t": float(t[w]), "xi": xi[w].tolist(),
                   "xi_hat": xi_hat[w].tolist(), "pairing": float(dots[w])}
    return CheckResult(not bad.any(), float(dots[worst]), n_pairs, witness,
                       detail="minimum monotonicity pairing over sampled pairs")


def check_growth(spec, n_samples: int = 100_000, seed: int = 0,
                 rtol: float = 1e-9) -> CheckResult:
    """Componentwise growth envelope on a random cloud.

    When the harmonic mean reaches the dimension the embedding exponent is
    undefined; the state term then uses a unit exponent, which keeps the
    check meaningful for the componentwise kinds (their bound needs no state
    term at all).
    """
    if n_samples < 1000:
        raise ValueError("need at least 1000 samples")
    base = _spec_base(spec)
    conjugates = tuple(v / (v - 1.0) for v in base.exponents.p)
    mean = base.exponents.harmonic_mean()
    dim = base.exponents.N
    star = dim * mean / (dim - mean) if mean < dim else None
    rng = np.random.default_rng(seed)
    t, xi = _sample_cloud(n_samples, base.exponents.N, rng)
    a = np.abs(_eval_any(spec, t, xi))
    p = np.array(base.exponents.p)
    power_sum = np.sum(np.abs(xi) ** p, axis=-1)
    worst_margin = np.inf
    witness = None
    for j, pj_prime in enumerate(conjugates):
        offset = 0.0
        if base.growth_weights is not None:
            samples = np.asarray(base.growth_weights[j]).ravel()
            offset = samples[rng.integers(0, samples.size, size=n_samples)]
        t_exponent = star / pj_prime if star is not None else 1.0
        bound = base.growth_const * (
            offset + np.abs(t) ** t_exponent + power_sum ** (1.0 / pj_prime)
        )
        margin = bound * (1.0 + rtol) - a[..., j]
        idx = int(np.argmin(margin))
        if margin[idx] < worst_margin:
            worst_margin = float(margin[idx])
            if margin[idx] < 0.0:
                witness = {"axis": j, "t": float(t[idx]), "xi": xi[idx].tolist(),
                           "flux": float(a[idx, j]), "bound": float(bound[idx])}
    return CheckResult(worst_margin >= 0.0, worst_margin, n_samples, witness,
                       detail="worst growth-envelope margin over sampled cloud")
