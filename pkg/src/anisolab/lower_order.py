"""Gradient-dependent lower-order terms, their bounded regularization and the
sign/growth/lower-bound verifiers.

The model term multiplies a gradient-power sum (plus one) by an odd power of
the state, which dissipates energy and is what makes merely integrable data
tractable.  Its structural constants are stored data, filled by
model_constants for the model and supplied by hand for custom tables.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, NamedTuple, Optional

import numpy as np

from .exponents import ExponentVector

KIND_MODEL = "model"
KIND_ZERO = "zero"
KIND_CUSTOM = "custom-table"
_KINDS = (KIND_MODEL, KIND_ZERO, KIND_CUSTOM)

_ENVELOPE_SCAN = np.linspace(0.0, 100.0, 1001)


class ModelConstants(NamedTuple):
    envelope: Callable[[np.ndarray], np.ndarray]
    offset: float
    lower_const: float


@dataclasses.dataclass
class LowerOrderSpec:
    """A lower-order term plus the constants its checks run against.

    envelope is the nondecreasing function bounding the state dependence of
    the growth estimate, offset the integrable additive slack, lower_const
    and threshold the coefficients of the lower bound active at large states.
    """

    exponents: ExponentVector
    kind: str = KIND_MODEL
    power: float = 3.0
    envelope: Optional[Callable[[np.ndarray], np.ndarray]] = None
    offset: float = 1.0
    lower_const: float = 1.0
    threshold: float = 1.0
    table: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None

    def __post_init__(self) -> None:
        for v in self.exponents.p:
            if not math.isfinite(v) or v <= 1.0:
                raise ValueError(f"every exponent must exceed 1 (got {v})")
        if self.kind not in _KINDS:
            raise ValueError(f"unknown lower-order kind {self.kind!r}")
        if self.kind == KIND_MODEL and self.power <= 1.0:
            raise ValueError("model power must exceed 1")
        if self.kind == KIND_CUSTOM and self.table is None:
            raise ValueError("custom-table term needs a table callable")
        if self.lower_const <= 0.0 or self.threshold <= 0.0:
            raise ValueError("lower-bound constants must be positive")
        if np.any(np.asarray(self.offset) < 0.0):
            raise ValueError("offset must be nonnegative")
        if self.envelope is not None:
            values = np.asarray(self.envelope(_ENVELOPE_SCAN))
            if np.any(np.diff(values) < -1e-12):
                raise ValueError("envelope must be nondecreasing")


@dataclasses.dataclass
class RegularizedLowerOrder:
    base: LowerOrderSpec
    epsilon: float

    def __post_init__(self) -> None:
        if self.epsilon <= 0.0:
            raise ValueError("regularization parameter must be positive")


def model_constants(power: float, threshold: float) -> ModelConstants:
    """Constants under which the model term satisfies its growth bound and
    its large-state lower bound."""
    if power <= 1.0:
        raise ValueError("model power must exceed 1")
    if threshold <= 0.0:
        raise ValueError("threshold must be positive")

    def envelope(s):
        return np.maximum(1.0, np.asarray(s, dtype=float)) ** (power - 1.0)

    return ModelConstants(envelope=envelope, offset=1.0,
                          lower_const=threshold ** (power - 1.0))


def model_lower_order(exponents: ExponentVector, power: float = 3.0,
                      threshold: float = 1.0) -> LowerOrderSpec:
    consts = model_constants(power, threshold)
    return LowerOrderSpec(
        exponents=exponents, kind=KIND_MODEL, power=power,
        envelope=consts.envelope, offset=consts.offset,
        lower_const=consts.lower_const, threshold=threshold,
    )


def zero_lower_order(exponents: ExponentVector) -> LowerOrderSpec:
    return LowerOrderSpec(exponents=exponents, kind=KIND_ZERO,
                          envelope=lambda s: np.zeros_like(np.asarray(s, dtype=float)))


def saturate(values, epsilon: float):
    """Bounded regularization v -> v / (1 + eps|v|); identity at eps=0."""
    if epsilon < 0.0:
        raise ValueError("regularization parameter must be nonnegative")
    values = np.asarray(values, dtype=float)
    return values / (1.0 + epsilon * np.abs(values))


def evaluate(spec: LowerOrderSpec, t, xi) -> np.ndarray:
    """Pointwise value of the term at state t and gradient xi (last axis)."""
    t = np.asarray(t, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != spec.exponents.N:
        raise ValueError("gradient has wrong number of components")
    if spec.kind == KIND_ZERO:
        return np.zeros(np.broadcast_shapes(t.shape, xi.shape[:-1]))
    if spec.kind == KIND_CUSTOM:
        return np.asarray(spec.table(t, xi), dtype=float)
    p = np.array(spec.exponents.p)
    power_sum = np.sum(np.abs(xi) ** p, axis=-1)
    odd_power = np.sign(t) * np.abs(t) ** (spec.power - 1.0)
    return (power_sum + 1.0) * odd_power


def evaluate_regularized(reg: RegularizedLowerOrder, t, xi) -> np.ndarray:
    return saturate(evaluate(reg.base, t, xi), reg.epsilon)


def derivatives(spec: LowerOrderSpec, t, xi) -> tuple[np.ndarray, np.ndarray]:
    """State and gradient partials of the model term (solver use only)."""
    if spec.kind == KIND_ZERO:
        t = np.asarray(t, dtype=float)
        xi = np.asarray(xi, dtype=float)
        return np.zeros_like(t), np.zeros_like(xi)
    if spec.kind != KIND_MODEL:
        raise ValueError("custom lower-order terms are check-only and cannot be solved")
    t = np.asarray(t, dtype=float)
    xi = np.asarray(xi, dtype=float)
    p = np.array(spec.exponents.p)
    power_sum = np.sum(np.abs(xi) ** p, axis=-1)
    odd_power = np.sign(t) * np.abs(t) ** (spec.power - 1.0)
    m = spec.power
    if m >= 2.0:
        t_slope = np.abs(t) ** (m - 2.0)
    else:
        # the slope blows up at the origin for powers below 2
        t_slope = np.maximum(np.abs(t), 1e-12) ** (m - 2.0)
    d_t = (power_sum + 1.0) * (m - 1.0) * t_slope
    d_xi = p * np.sign(xi) * np.abs(xi) ** (p - 1.0) * odd_power[..., None]
    return d_t, d_xi


def _cloud(spec: LowerOrderSpec, n_samples: int, rng: np.random.Generator,
           t_floor: float = 0.0):
    mag = 10.0 ** rng.uniform(-3.0, 3.0, size=(n_samples, spec.exponents.N))
    xi = mag * rng.choice([-1.0, 1.0], size=(n_samples, spec.exponents.N))
    t = 10.0 ** rng.uniform(-3.0, 2.0, size=n_samples) * rng.choice([-1.0, 1.0], size=n_samples)
    if t_floor > 0.0:
        t = np.sign(t) * (np.abs(t) + t_floor)
    else:
        t[rng.random(n_samples) < 0.05] = 0.0
    return t, xi


def check_sign(spec: LowerOrderSpec, n_samples: int = 100_000, seed: int = 0):
    """Sampling verification of the dissipation sign condition."""
    from .flux import CheckResult
    if n_samples < 1000:
        raise ValueError("need at least 1000 samples")
    rng = np.random.default_rng(seed)
    t, xi = _cloud(spec, n_samples, rng)
    product = evaluate(spec, t, xi) * t
    idx = int(np.argmin(product))
    passed = product[idx] >= 0.0
    witness = None
    if not passed:
        witness = {"t": float(t[idx]), "xi": xi[idx].tolist(), "product": float(product[idx])}
    return CheckResult(passed, float(product[idx]), n_samples, witness,
                       detail="minimum of term*state over sampled cloud")


def check_growth(spec: LowerOrderSpec, n_samples: int = 100_000, seed: int = 0,
                 rtol: float = 1e-9):
    """Sampling verification of the growth bound with the stored envelope."""
    from .flux import CheckResult
    if n_samples < 1000:
        raise ValueError("need at least 1000 samples")
    if spec.envelope is None:
        raise ValueError("growth check needs an envelope")
    rng = np.random.default_rng(seed)
    t, xi = _cloud(spec, n_samples, rng)
    value = np.abs(evaluate(spec, t, xi))
    p = np.array(spec.exponents.p)
    offset = np.asarray(spec.offset, dtype=float)
    if offset.ndim > 0:
        flat = offset.ravel()
        offset = flat[rng.integers(0, flat.size, size=n_samples)]
    bound = np.asarray(spec.envelope(np.abs(t))) * (np.sum(np.abs(xi) ** p, axis=-1) + offset)
    margin = bound * (1.0 + rtol) - value
    idx = int(np.argmin(margin))
    passed = margin[idx] >= 0.0
    witness = None
    if not passed:
        witness = {"t": float(t[idx]), "xi": xi[idx].tolist(),
                   "value": float(value[idx]), "bound": float(bound[idx])}
    return CheckResult(passed, float(margin[idx]), n_samples, witness,
                       detail="worst growth margin over sampled cloud")


def check_lower_bound(spec: LowerOrderSpec, n_samples: int = 100_000, seed: int = 0,
                      rtol: float = 1e-9):
    """Sampling verification of the large-state lower bound (states are drawn
    beyond the threshold only)."""
    from .flux import CheckResult
    if n_samples < 1000:
        raise ValueError("need at least 1000 samples")
    rng = np.random.default_rng(seed)
    t, xi = _cloud(spec, n_samples, rng, t_floor=spec.threshold)
    value = np.abs(evaluate(spec, t, xi))
    p = np.array(spec.exponents.p)
    floor = spec.lower_const * np.sum(np.abs(xi) ** p, axis=-1)
    margin = value - floor * (1.0 - rtol)
    idx = int(np.argmin(margin))
    passed = margin[idx] >= 0.0
    witness = None
    if not passed:
        witness = {"t": float(t[idx]), "xi": xi[idx].tolist(),
                   "value": float(value[idx]), "floor": float(floor[idx])}
    return CheckResult(passed, float(margin[idx]), n_samples, witness,
                       detail="worst lower-bound margin on large states")
