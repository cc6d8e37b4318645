"""The shrinking-regularization ladder and its convergence diagnostics.

Each proof-level quantity of the underlying theory becomes a number computed
along the ladder: truncation distances, the monotonicity defect of truncated
gradients, the exponential-weight inequality margin, the energy identity
residual, the tail-norm bound and uniform-integrability scans.  The limit
object is identified with the final ladder level, so every vanishing claim
turns into a strict-decrease assertion over the last recorded levels.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional, Sequence

import numpy as np

from . import flux as flux_mod
from . import grid as grid_mod
from . import lower_order as lo_mod
from . import source as source_mod
from .grid import FaceField, Field
from .solve import ProblemInstance, SolveReport, solve_regularized

MONOTONE_FLOOR = 1e-12   # sequences entirely below this count as vacuously monotone
DEFECT_SLACK = 1e-12     # relative slack allowed before a negative defect is an error


class LadderCheckError(RuntimeError):
    """A strict ladder assertion failed; the report is attached."""

    def __init__(self, message: str, report: "LadderReport"):
        super().__init__(message)
        self.report = report


def truncate(u: Field, height: float) -> Field:
    if height <= 0.0:
        raise ValueError("truncation height must be positive")
    return Field(u.grid, np.clip(u.values, -height, height))


def tail(u: Field, height: float) -> Field:
    if height <= 0.0:
        raise ValueError("truncation height must be positive")
    return Field(u.grid, u.values - np.clip(u.values, -height, height))


def truncated_gradient(u: Field, height: float, axis: int) -> FaceField:
    """Face gradient of the truncated field with the clipped-face convention.

    Faces with both endpoints (ghosts included) at or beyond the height carry
    zero; all other faces carry the difference of clipped endpoint values.
    This keeps the truncated and tail gradients an exact face-level
    decomposition of the raw gradient and never enlarges a face value.
    """
    if height <= 0.0:
        raise ValueError("truncation height must be positive")
    pad = [(0, 0)] * u.grid.N
    pad[axis] = (1, 1)
    padded = np.pad(u.values, pad)
    lo = [slice(None)] * u.grid.N
    hi = [slice(None)] * u.grid.N
    lo[axis] = slice(0, -1)
    hi[axis] = slice(1, None)
    left = padded[tuple(lo)]
    right = padded[tuple(hi)]
    clipped = (np.clip(right, -height, height) - np.clip(left, -height, height)) / u.grid.h[axis]
    outside = (np.abs(left) >= height) & (np.abs(right) >= height)
    return FaceField(u.grid, axis, np.where(outside, 0.0, clipped))


def tail_gradient(u: Field, height: float, axis: int) -> FaceField:
    raw = grid_mod.forward_diff(u, axis)
    trunc = truncated_gradient(u, height, axis)
    return FaceField(u.grid, axis, raw.values - trunc.values)


def truncated_norm(u: Field, height: float, exponents) -> float:
    return sum(
        grid_mod.lq_norm(truncated_gradient(u, height, j), pj)
        for j, pj in enumerate(exponents.p)
    )


def tail_norm(u: Field, height: float, exponents) -> float:
    return sum(
        grid_mod.lq_norm(tail_gradient(u, height, j), pj)
        for j, pj in enumerate(exponents.p)
    )


def truncation_distance(u: Field, ref: Field, height: float, exponents) -> float:
    """Gradient distance between the truncates of two fields."""
    total = 0.0
    for j, pj in enumerate(exponents.p):
        diff = truncated_gradient(u, height, j).values - truncated_gradient(ref, height, j).values
        total += grid_mod.lq_norm(FaceField(u.grid, j, diff), pj)
    return total


def flux_defect(u: Field, ref: Field, height: float, spec: flux_mod.FluxSpec) -> float:
    """Integrated monotonicity defect of the truncated gradients.

    Nonnegative whenever the flux is monotone; a value below the relative
    slack raises, since that can only mean a misconfigured flux.
    """
    if u.grid != ref.grid:
        raise ValueError("fields live on different grids")
    total = 0.0
    scale = 0.0
    vol = u.grid.cell_volume
    for j in range(u.grid.N):
        gu = truncated_gradient(u, height, j).values
        gr = truncated_gradient(ref, height, j).values
        da = flux_mod.evaluate_component(spec, j, gu) - flux_mod.evaluate_component(spec, j, gr)
        dg = gu - gr
        total += vol * float(np.sum(da * dg))
        scale += vol * float(np.sum(np.abs(da) * np.abs(dg)))
    if total < -DEFECT_SLACK * max(scale, 1.0):
        raise ValueError(
            f"monotonicity defect is negative ({total:g}), flux is misconfigured")
    return max(total, 0.0)


def exp_weight(t, rate: float):
    """Odd exponential weight used to absorb gradient-power growth when
    testing the weak form."""
    t = np.asarray(t, dtype=float)
    with np.errstate(over="ignore"):
        return t * np.exp(rate * t * t)


def exp_weight_rate(height: float, coercivity_const: float, envelope) -> float:
    """Rate that makes the weight inequality hold for all states, with a
    fixed 25 percent margin over the critical threshold."""
    if coercivity_const <= 0.0:
        raise ValueError("coercivity constant must be positive")
    bound = float(np.asarray(envelope(height)))
    return 1.25 * bound ** 2 / (4.0 * coercivity_const ** 2)


def exp_weight_margin(rate: float, bound: float, coercivity_const: float,
                      t_max: float = 50.0, num: int = 1_000_001) -> float:
    """Minimum over a dense scan of the weight inequality margin: derivative
    minus scaled magnitude minus one half."""
    t = np.linspace(-t_max, t_max, num)
    with np.errstate(over="ignore"):
        gauss = np.exp(rate * t * t)
        derivative = (1.0 + 2.0 * rate * t * t) * gauss
        magnitude = np.abs(t) * gauss
    margin = derivative - (bound / coercivity_const) * magnitude - 0.5
    return float(np.min(margin[np.isfinite(margin)]))


def energy_residual(inst: ProblemInstance, u: Field) -> float:
    """Absolute defect of the energy identity at u, assembled term by term."""
    flux_pairing = 0.0
    for j, pj in enumerate(inst.exponents.p):
        g = grid_mod.forward_diff(u, j)
        a = flux_mod.smoothed_component(pj, g.values, 0.0)
        flux_pairing += grid_mod.face_inner(FaceField(inst.grid, j, a), g)
    phi_field = Field(inst.grid, inst.lower_values(u))
    total = flux_pairing + grid_mod.inner(phi_field, u)
    total -= source_mod.pairing(inst.source, u, u)
    f_eps = inst.effective_datum()
    if f_eps is not None:
        total -= grid_mod.inner(f_eps, u)
    return abs(total)


@dataclasses.dataclass
class TailCheck:
    lhs: float
    rhs: float
    margin: float


def tail_norm_check(inst: ProblemInstance, u_level: Field, limit: Field,
                    height: float, tol: float) -> TailCheck:
    """Compare the tail norm of a ladder iterate against the coercivity
    bound driven by the source pairing at the limit, plus a solver-residual
    allowance."""
    lhs = tail_norm(u_level, height, inst.exponents)
    tail_limit = tail(limit, height)
    pairing_val = source_mod.pairing(inst.source, limit, tail_limit)
    f_eps = inst.effective_datum()
    if f_eps is not None:
        pairing_val += grid_mod.inner(f_eps, tail_limit)
    nu0 = inst.flux.coercivity_const
    rhs = sum(
        (max(pairing_val, 0.0) / nu0) ** (1.0 / pj) for pj in inst.exponents.p
    )
    allowance = sum((tol * lhs / nu0) ** (1.0 / pj) for pj in inst.exponents.p)
    rhs += allowance
    return TailCheck(lhs=lhs, rhs=rhs, margin=rhs - lhs)


@dataclasses.dataclass
class ScanTable:
    heights: tuple[float, ...]
    tail_masses: tuple[float, ...]
    fractions: tuple[float, ...]
    greedy_masses: tuple[float, ...]

    def strictly_decreasing_in_height(self) -> bool:
        return _strictly_decreasing(self.tail_masses)

    def strictly_decreasing_in_fraction(self) -> bool:
        return _strictly_decreasing(self.greedy_masses)


def uniform_integrability_scan(inst: ProblemInstance, u: Field,
                               heights: Sequence[float],
                               fractions: Sequence[float]) -> ScanTable:
    """Tail masses of the lower-order term beyond each state height, and its
    worst-case mass over greedy sets of each prescribed measure fraction."""
    phi_abs = np.abs(inst.lower_values(u))
    vol = inst.grid.cell_volume
    tails = tuple(
        vol * float(np.sum(phi_abs[np.abs(u.values) > m])) for m in heights
    )
    flat = np.sort(phi_abs.ravel(), kind="stable")[::-1]
    cumulative = np.cumsum(flat)
    total_nodes = flat.size
    greedy = []
    for frac in fractions:
        if not 0.0 < frac <= 1.0:
            raise ValueError("measure fractions must lie in (0, 1]")
        count = max(1, int(round(frac * total_nodes)))
        greedy.append(vol * float(cumulative[count - 1]))
    return ScanTable(tuple(float(m) for m in heights), tails,
                     tuple(float(f) for f in fractions), tuple(greedy))


@dataclasses.dataclass(frozen=True)
class LadderConfig:
    eps0: float = 0.5
    rho: float = 0.5
    max_levels: int = 12
    stop_tol: float = 1e-6
    k_list: tuple[float, ...] = (1.0, 2.0, 4.0)
    mode: str = "homogeneous"            # or "l1-data"
    diagnostic_only: bool = False
    wnorm_spread_tol: float = 0.05
    energy_tol: float = 1e-6
    scan_heights: tuple[float, ...] = (2.0, 4.0, 8.0, 16.0)
    scan_fractions: tuple[float, ...] = (1.0, 0.1, 0.01)

    def __post_init__(self) -> None:
        if not 0.0 < self.rho < 1.0:
            raise ValueError("level ratio must lie in (0, 1)")
        if self.eps0 <= 0.0:
            raise ValueError("initial regularization must be positive")
        if not self.k_list or list(self.k_list) != sorted(self.k_list):
            raise ValueError("truncation heights must be nonempty and increasing")
        if self.mode not in ("homogeneous", "l1-data"):
            raise ValueError(f"unknown ladder mode {self.mode!r}")


@dataclasses.dataclass
class LevelRecord:
    level: int
    epsilon: float
    w_norm: float
    phi_pairing: float                 # integral of the term against the state
    phi_mass: float                    # integral of its absolute value
    energy_residual: float
    diff_prev: Optional[float]
    trunc_dist: dict[float, float]
    defect: dict[float, float]
    tail_norms: dict[float, float]
    tail_margins: dict[float, float]
    solve_iterations: int
    solve_converged: bool
    solve_residual: float


@dataclasses.dataclass
class LadderReport:
    mode: str
    levels: list[LevelRecord]
    checks: dict[str, bool]
    converged_all: bool
    scan: Optional[ScanTable]
    limit_level: int

    def series(self, name: str, height: Optional[float] = None) -> list[float]:
        if height is None:
            return [getattr(rec, name) for rec in self.levels]
        return [getattr(rec, name)[height] for rec in self.levels]


def _strictly_decreasing(values: Sequence[float], floor: float = MONOTONE_FLOOR) -> bool:
    """Strict decrease, with pairs entirely below the floor passing
    vacuously (an all-zero ladder is monotone by convention)."""
    for a, b in zip(values, values[1:]):
        if a <= floor and b <= floor:
            continue
        if not b < a:
            return False
    return True


def _last_three_decreasing(values: Sequence[float]) -> bool:
    window = list(values)[-3:]
    return _strictly_decreasing(window)


def run_ladder(cfg: LadderConfig, template: ProblemInstance,
               tol: float = 1e-8, max_iter: int = 200) -> LadderReport:
    """Drive the shrinking-regularization ladder with warm starts and turn
    the limit claims into checks on the recorded diagnostics.

    Strict checks (unless diagnostic_only): gradient norms stay within the
    spread tolerance across levels, truncation distances to the final level
    and successive differences both decrease strictly over the last three
    levels.  Everything else lands in the report for the caller to judge.
    """
    if cfg.mode == "homogeneous" and not template.regularize_lower:
        raise ValueError("homogeneous mode needs the regularized lower-order term")
    if cfg.mode == "l1-data" and template.regularize_lower:
        raise ValueError("integrable-data mode needs the full lower-order term")
    if cfg.mode == "l1-data" and template.datum is None:
        raise ValueError("integrable-data mode needs a datum")

    fields: list[Field] = []
    reports: list[SolveReport] = []
    epsilons: list[float] = []
    u_prev: Optional[Field] = None
    converged_all = True
    for level in range(cfg.max_levels):
        eps = cfg.eps0 * cfg.rho ** level
        inst = dataclasses.replace(template, epsilon=eps)
        u, rep = solve_regularized(inst, u0=u_prev, tol=tol, max_iter=max_iter)
        fields.append(u)
        reports.append(rep)
        epsilons.append(eps)
        if not rep.converged:
            converged_all = False
            break
        if u_prev is not None and cfg.stop_tol > 0.0:
            diff = Field(template.grid, u.values - u_prev.values)
            if grid_mod.anisotropic_norm(diff, template.exponents) <= cfg.stop_tol:
                u_prev = u
                break
        u_prev = u

    limit_index = len(fields) - 1
    limit = fields[limit_index]
    final_inst = dataclasses.replace(template, epsilon=epsilons[limit_index])

    records: list[LevelRecord] = []
    for level, (eps, u, rep) in enumerate(zip(epsilons, fields, reports)):
        inst = dataclasses.replace(template, epsilon=eps)
        phi_field = Field(template.grid, inst.lower_values(u))
        diff_prev = None
        if level > 0:
            step = Field(template.grid, u.values - fields[level - 1].values)
            diff_prev = grid_mod.anisotropic_norm(step, template.exponents)
        trunc_dist = {}
        defects = {}
        tail_norms = {}
        tail_margins = {}
        for k in cfg.k_list:
            trunc_dist[k] = truncation_distance(u, limit, k, template.exponents)
            defects[k] = flux_defect(u, limit, k, template.flux)
            tail_norms[k] = tail_norm(u, k, template.exponents)
            tail_margins[k] = tail_norm_check(final_inst, u, limit, k, tol).margin
        records.append(LevelRecord(
            level=level, epsilon=eps,
            w_norm=grid_mod.anisotropic_norm(u, template.exponents),
            phi_pairing=grid_mod.inner(phi_field, u),
            phi_mass=template.grid.cell_volume * float(np.sum(np.abs(phi_field.values))),
            energy_residual=energy_residual(inst, u),
            diff_prev=diff_prev,
            trunc_dist=trunc_dist, defect=defects,
            tail_norms=tail_norms, tail_margins=tail_margins,
            solve_iterations=rep.iterations, solve_converged=rep.converged,
            solve_residual=rep.final_residual,
        ))

    checks: dict[str, bool] = {}
    w_norms = [r.w_norm for r in records if r.solve_converged]
    finite = all(math.isfinite(v) for v in w_norms)
    if max(w_norms) <= MONOTONE_FLOOR:
        checks["wnorm_bounded"] = finite
    else:
        spread = (max(w_norms) - min(w_norms)) / max(w_norms)
        checks["wnorm_bounded"] = finite and spread <= cfg.wnorm_spread_tol
    diffs = [r.diff_prev for r in records if r.diff_prev is not None]
    checks["succ_diff_decreasing"] = _last_three_decreasing(diffs) if diffs else True
    for k in cfg.k_list:
        dists = [r.trunc_dist[k] for r in records]
        checks[f"trunc_dist_decreasing_k{k:g}"] = _last_three_decreasing(dists)
        defect_series = [r.defect[k] for r in records]
        checks[f"defect_decreasing_k{k:g}"] = _last_three_decreasing(defect_series)
        checks[f"tail_margin_nonneg_k{k:g}"] = records[-1].tail_margins[k] >= -1e-12
    checks["energy_final_ok"] = records[-1].energy_residual <= cfg.energy_tol
    checks["all_levels_converged"] = converged_all

    scan = None
    if cfg.mode == "l1-data" and converged_all:
        scan = uniform_integrability_scan(final_inst, limit,
                                          cfg.scan_heights, cfg.scan_fractions)

    report = LadderReport(mode=cfg.mode, levels=records, checks=checks,
                          converged_all=converged_all, scan=scan,
                          limit_level=limit_index)

    strict = ["wnorm_bounded", "succ_diff_decreasing", "all_levels_converged"]
    strict += [f"trunc_dist_decreasing_k{k:g}" for k in cfg.k_list]
    if not cfg.diagnostic_only:
        failed = [name for name in strict if not checks[name]]
        if failed:
            raise LadderCheckError(
                "ladder checks failed: " + ", ".join(failed), report)
    return report
