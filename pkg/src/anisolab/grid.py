"""Tensor grids on the unit box with a mimetic difference calculus.

Scalar unknowns live at interior nodes and carry an implicit homogeneous
Dirichlet condition through zero ghost values.  Forward differences live on
the faces between nodes (boundary faces included), and the discrete
divergence is defined as the exact negative transpose of that map under the
volume-weighted inner products.  Summation by parts therefore holds to
machine precision, which is what makes every weak-form identity downstream
checkable rather than approximate.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Sequence

import numpy as np

_FMT = "%.17g"   # shortest text form that round-trips binary64


@dataclasses.dataclass(frozen=True)
class Grid:
    """Axis-aligned grid of interior nodes on the open unit box."""

    n: tuple[int, ...]

    def __post_init__(self) -> None:
        n = tuple(int(v) for v in self.n)
        if len(n) not in (2, 3):
            raise ValueError(f"grid dimension must be 2 or 3 (got {len(n)})")
        if any(v < 3 for v in n):
            raise ValueError(f"need at least 3 interior nodes per axis (got {n})")
        object.__setattr__(self, "n", n)

    @property
    def N(self) -> int:
        return len(self.n)

    @property
    def h(self) -> tuple[float, ...]:
        return tuple(1.0 / (v + 1) for v in self.n)

    @property
    def cell_volume(self) -> float:
        return math.prod(self.h)

    @property
    def node_count(self) -> int:
        return math.prod(self.n)

    def axis_coords(self, axis: int) -> np.ndarray:
        return np.arange(1, self.n[axis] + 1) * self.h[axis]

    def meshes(self) -> list[np.ndarray]:
        return np.meshgrid(*(self.axis_coords(j) for j in range(self.N)), indexing="ij")


def unit_grid(nodes: int | Sequence[int], dim: int = 2) -> Grid:
    if isinstance(nodes, int):
        return Grid((nodes,) * dim)
    return Grid(tuple(nodes))


@dataclasses.dataclass(eq=False)
class Field:
    """Nodal values at interior nodes; zero trace on the boundary."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.n:
            raise ValueError(
                f"field shape {self.values.shape} does not match grid {self.grid.n}"
            )

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())


@dataclasses.dataclass(eq=False)
class FaceField:
    """Per-axis face values, shaped like a field with one extra slot along
    its axis (boundary faces included)."""

    grid: Grid
    axis: int
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        expected = list(self.grid.n)
        expected[self.axis] += 1
        if self.values.shape != tuple(expected):
            raise ValueError(
                f"face shape {self.values.shape} does not match axis {self.axis} of grid {self.grid.n}"
            )


def zeros(grid: Grid) -> Field:
    return Field(grid, np.zeros(grid.n))


def constant(grid: Grid, value: float) -> Field:
    return Field(grid, np.full(grid.n, float(value)))


def sample(grid: Grid, fn: Callable[..., np.ndarray]) -> Field:
    """Sample fn(x, y[, z]) at the interior nodes."""
    return Field(grid, np.asarray(fn(*grid.meshes()), dtype=float))


def face_constant(grid: Grid, axis: int, value: float) -> FaceField:
    shape = list(grid.n)
    shape[axis] += 1
    return FaceField(grid, axis, np.full(shape, float(value)))


def forward_diff(u: Field, axis: int) -> FaceField:
    """Forward difference along one axis, with zero ghost values outside."""
    if not 0 <= axis < u.grid.N:
        raise ValueError(f"axis {axis} out of range for dimension {u.grid.N}")
    diffs = np.diff(u.values, axis=axis, prepend=0.0, append=0.0) / u.grid.h[axis]
    return FaceField(u.grid, axis, diffs)


def divergence_adjoint(psis: Sequence[FaceField]) -> Field:
    """The unique nodal field pairing against v like the face fields pair
    against the forward differences of v (exact summation by parts)."""
    if not psis:
        raise ValueError("need one face field per axis")
    grid = psis[0].grid
    if len(psis) != grid.N or sorted(p.axis for p in psis) != list(range(grid.N)):
        raise ValueError("need exactly one face field per axis")
    out = np.zeros(grid.n)
    for psi in psis:
        if psi.grid is not grid and psi.grid != grid:
            raise ValueError("face fields live on different grids")
        out -= np.diff(psi.values, axis=psi.axis) / grid.h[psi.axis]
    return Field(grid, out)


def integrate(w: Field) -> float:
    return w.grid.cell_volume * float(np.sum(w.values))


def inner(u: Field, v: Field) -> float:
    if u.grid != v.grid:
        raise ValueError("fields live on different grids")
    return u.grid.cell_volume * float(np.sum(u.values * v.values))


def face_inner(a: FaceField, b: FaceField) -> float:
    if a.grid != b.grid or a.axis != b.axis:
        raise ValueError("face fields are not compatible")
    return a.grid.cell_volume * float(np.sum(a.values * b.values))


def lq_norm(w: Field | FaceField, q: float) -> float:
    if q < 1.0:
        raise ValueError(f"norm exponent must be at least 1 (got {q})")
    total = w.grid.cell_volume * float(np.sum(np.abs(w.values) ** q))
    return total ** (1.0 / q)


def anisotropic_norm(u: Field, exponents) -> float:
    """Sum over axes of the per-axis gradient norms."""
    ps = tuple(getattr(exponents, "p", exponents))
    if len(ps) != u.grid.N:
        raise ValueError("exponent count does not match grid dimension")
    return sum(lq_norm(forward_diff(u, j), pj) for j, pj in enumerate(ps))


def node_gradients(u: Field) -> list[np.ndarray]:
    """Per-axis gradient averaged from the two adjacent faces of each node.

    Equals the centered difference with zero ghosts; used wherever the
    pointwise lower-order term needs a nodal gradient.
    """
    out = []
    for j in range(u.grid.N):
        faces = forward_diff(u, j).values
        lo = [slice(None)] * u.grid.N
        hi = [slice(None)] * u.grid.N
        lo[j] = slice(0, -1)
        hi[j] = slice(1, None)
        out.append(0.5 * (faces[tuple(lo)] + faces[tuple(hi)]))
    return out


def gradient_stack(u: Field) -> np.ndarray:
    """Nodal gradients stacked on a trailing axis, shape (*n, N)."""
    return np.stack(node_gradients(u), axis=-1)


def write_field_csv(field: Field, path) -> None:
    """Plain CSV dump, one row per node, restorable bit for bit."""
    grid = field.grid
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# n=%s h=%s\n" % (
            ",".join(str(v) for v in grid.n),
            ",".join(_FMT % v for v in grid.h),
        ))
        axes = "ijk"[: grid.N]
        coords = "xyz"[: grid.N]
        fh.write(",".join(list(axes) + list(coords) + ["value"]) + "\n")
        coord_arrays = [grid.axis_coords(j) for j in range(grid.N)]
        for index in np.ndindex(*grid.n):
            row = [str(i) for i in index]
            row += [_FMT % coord_arrays[j][index[j]] for j in range(grid.N)]
            row.append(_FMT % field.values[index])
            fh.write(",".join(row) + "\n")


def read_field_csv(path) -> Field:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("# n="):
            raise ValueError(f"{path}: missing grid header")
        meta = dict(part.split("=", 1) for part in header[2:].split(" ") if "=" in part)
        n = tuple(int(v) for v in meta["n"].split(","))
        grid = Grid(n)
        fh.readline()   # column names
        values = np.full(grid.n, np.nan)
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            index = tuple(int(v) for v in parts[: grid.N])
            values[index] = float(parts[-1])
    if np.isnan(values).any():
        raise ValueError(f"{path}: incomplete field dump")
    return Field(grid, values)
