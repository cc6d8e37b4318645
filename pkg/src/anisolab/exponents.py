"""Anisotropic exponent arithmetic and the inequality diagnostics built on it.

Everything downstream (flux growth bounds, norms, ladder diagnostics) is
parameterised by a vector of per-axis exponents.  This module validates such
vectors, derives the usual companion exponents, and provides two numerical
diagnostics: the Sobolev embedding quotient of a grid function and the
constant in the iterated Young inequality.
"""

from __future__ import annotations

import dataclasses
import math
from typing import NamedTuple, Sequence

import numpy as np

from . import grid as grid_mod

SUPPORTED_DIMENSIONS = (2, 3)

# log10 range and resolution of the search grid used by young_constant
_YOUNG_LOG_RANGE = (-6.0, 6.0)
_YOUNG_GRID_POINTS = 65
_YOUNG_SAFETY = 1.0 + 1e-4


@dataclasses.dataclass(frozen=True)
class ExponentVector:
    """Nondecreasing per-axis exponents, one per coordinate direction."""

    p: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", tuple(float(v) for v in self.p))

    @property
    def N(self) -> int:
        return len(self.p)

    def harmonic_mean(self) -> float:
        return self.N / sum(1.0 / v for v in self.p)


@dataclasses.dataclass(frozen=True)
class DerivedExponents:
    """Companion exponents of a validated vector."""

    mean: float                      # harmonic mean of the entries
    star: float                      # Sobolev exponent N*mean/(N - mean)
    conjugates: tuple[float, ...]    # per-axis Hoelder conjugates
    mean_conjugate: float            # conjugate of the harmonic mean


class SobolevQuotients(NamedTuple):
    product: float   # ||u||_star / geometric mean of directional norms
    mean: float      # ||u||_star / arithmetic mean of directional norms


def validate(exponents: ExponentVector) -> str | None:
    """Return None if the vector is admissible, else a description of the
    violated condition."""
    p = exponents.p
    if len(p) not in SUPPORTED_DIMENSIONS:
        return f"dimension must be one of {SUPPORTED_DIMENSIONS} (got {len(p)})"
    if not all(math.isfinite(v) for v in p):
        return "exponents must be finite"
    for v in p:
        if v <= 1.0:
            return f"every exponent must exceed 1 (got {v})"
    for a, b in zip(p, p[1:]):
        if a > b:
            return f"exponents must be nondecreasing (found {a} > {b})"
    mean = exponents.harmonic_mean()
    if mean >= len(p):
        return f"p<N fails (harmonic mean {mean:g}, N={len(p)})"
    return None


def derive(exponents: ExponentVector) -> DerivedExponents:
    """Harmonic mean, Sobolev exponent and conjugates of a validated vector."""
    problem = validate(exponents)
    if problem is not None:
        raise ValueError(problem)
    n = exponents.N
    mean = exponents.harmonic_mean()
    star = n * mean / (n - mean)
    conjugates = tuple(v / (v - 1.0) for v in exponents.p)
    return DerivedExponents(
        mean=mean,
        star=star,
        conjugates=conjugates,
        mean_conjugate=mean / (mean - 1.0),
    )


def sobolev_quotient(u: "grid_mod.Field", exponents: ExponentVector) -> SobolevQuotients:
    """Embedding quotients of a zero-trace grid function.

    The product form divides the star-norm by the geometric mean of the
    directional gradient norms; the mean form divides by their arithmetic
    mean.  Raises on an identically zero field.
    """
    d = derive(exponents)
    numerator = grid_mod.lq_norm(u, d.star)
    if numerator == 0.0:
        raise ValueError("field is identically zero, quotient undefined")
    grad_norms = [
        grid_mod.lq_norm(grid_mod.forward_diff(u, j), pj)
        for j, pj in enumerate(exponents.p)
    ]
    if min(grad_norms) == 0.0:
        raise ValueError("a directional gradient norm vanishes")
    geometric = math.exp(sum(math.log(g) for g in grad_norms) / exponents.N)
    arithmetic = sum(grad_norms) / exponents.N
    return SobolevQuotients(product=numerator / geometric, mean=numerator / arithmetic)


def complete_young_exponents(leading: Sequence[float]) -> tuple[float, ...]:
    """Append the exponent that makes the reciprocals of the full tuple sum
    to one."""
    lead = tuple(float(r) for r in leading)
    if not lead:
        raise ValueError("need at least one leading exponent")
    for r in lead:
        if not math.isfinite(r) or r <= 1.0:
            raise ValueError(f"leading exponents must exceed 1 (got {r})")
    partial = sum(1.0 / r for r in lead)
    if partial >= 1.0:
        raise ValueError(f"reciprocals of leading exponents must sum below 1 (sum {partial:g})")
    return lead + (1.0 / (1.0 - partial),)


def _young_excess(betas: Sequence[np.ndarray], exps: tuple[float, ...], delta: float) -> np.ndarray:
    prod = betas[0].copy()
    for b in betas[1:]:
        prod = prod * b
    penalty = sum(b ** r for b, r in zip(betas[:-1], exps[:-1]))
    return (prod - delta * penalty) / betas[-1] ** exps[-1]


def young_constant(leading: Sequence[float], delta: float) -> float:
    """Smallest constant (numerically) closing the iterated Young inequality.

    Returns C such that  prod(b_k) <= delta * sum_{k<N} b_k^{R_k} + C * b_N^{R_N}
    on positive tuples, with the last exponent completed so the reciprocals
    sum to one.  The supremum of the excess is located on a log-spaced grid,
    sharpened by local refinement and inflated by a small safety factor so
    the inequality survives randomized sampling.
    """
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    exps = complete_young_exponents(leading)
    n = len(exps)

    lo, hi = _YOUNG_LOG_RANGE
    base = np.linspace(lo, hi, _YOUNG_GRID_POINTS)
    mesh = np.meshgrid(*([base] * n), indexing="ij")
    betas = [10.0 ** m for m in mesh]
    excess = _young_excess(betas, exps, delta)
    flat = int(np.argmax(excess))
    centre = np.array([m.ravel()[flat] for m in mesh])
    best = float(excess.ravel()[flat])

    window = base[1] - base[0]
    for _ in range(26):
        local_axes = [
            np.clip(np.linspace(c - window, c + window, 9), lo, hi) for c in centre
        ]
        mesh = np.meshgrid(*local_axes, indexing="ij")
        betas = [10.0 ** m for m in mesh]
        excess = _young_excess(betas, exps, delta)
        flat = int(np.argmax(excess))
        centre = np.array([m.ravel()[flat] for m in mesh])
        best = max(best, float(excess.ravel()[flat]))
        window *= 0.5

    if best <= 0.0:
        raise ValueError("no positive excess found, exponent configuration is degenerate")
    return best * _YOUNG_SAFETY
