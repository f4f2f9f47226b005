"""Spatial grids and grid functions.

Everything downstream (the semigroup engine, the harness, the CLI) works on
uniform node-centred grids over the box ``[-L, L]^d`` with either periodic
identification or clamped ends.  Node coordinates are always recomputed from
``(L, n, index)`` so that two grids built from the same parameters agree
bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

#: Sentinel for "still infinite" values (point-source initial data).
BIG = 1e12


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on ``[-L, L]^d``, ``d`` in {1, 2}.

    Periodic grids place ``n`` nodes with spacing ``2L/n`` (the right edge is
    identified with the left); clamped grids place ``n`` nodes including both
    ends, spacing ``2L/(n-1)``.
    """

    n: int
    half_width: float = 4.0
    d: int = 1
    boundary: str = "periodic"

    def __post_init__(self) -> None:
        if self.d not in (1, 2):
            raise ConfigError("grid dimension d must be 1 or 2")
        if self.n < 3:
            raise ConfigError("grid must have at least 3 nodes per axis")
        if self.half_width <= 0:
            raise ConfigError("grid half_width must be positive")
        if self.boundary not in ("periodic", "clamped"):
            raise ConfigError("boundary must be 'periodic' or 'clamped'")

    @property
    def h(self) -> float:
        if self.boundary == "periodic":
            return 2.0 * self.half_width / self.n
        return 2.0 * self.half_width / (self.n - 1)

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    def axis_nodes(self) -> np.ndarray:
        i = np.arange(self.n, dtype=np.float64)
        return -self.half_width + i * self.h

    def mesh(self) -> np.ndarray:
        """Node coordinates, shape ``(n,)*d + (d,)``."""
        ax = self.axis_nodes()
        if self.d == 1:
            return ax[:, None]
        xs, ys = np.meshgrid(ax, ax, indexing="ij")
        return np.stack([xs, ys], axis=-1)


def lipschitz_estimate(grid: GridSpec, values: np.ndarray) -> float:
    """Max adjacent-node slope, sentinel nodes excluded."""
    finite = values < BIG / 2
    best = 0.0
    for axis in range(grid.d):
        if grid.periodic:
            diff = np.roll(values, -1, axis=axis) - values
            ok = np.roll(finite, -1, axis=axis) & finite
        else:
            sl_hi = [slice(None)] * grid.d
            sl_lo = [slice(None)] * grid.d
            sl_hi[axis] = slice(1, None)
            sl_lo[axis] = slice(None, -1)
            diff = values[tuple(sl_hi)] - values[tuple(sl_lo)]
            ok = finite[tuple(sl_hi)] & finite[tuple(sl_lo)]
        if np.any(ok):
            best = max(best, float(np.max(np.abs(diff[ok]))) / grid.h)
    return best


@dataclass
class GridFunction:
    """Values attached to the nodes of a :class:`GridSpec`."""

    grid: GridSpec
    values: np.ndarray
    lip_estimate: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.grid.shape:
            raise ConfigError(
                f"values shape {vals.shape} does not match grid shape {self.grid.shape}"
            )
        self.values = vals
        if self.lip_estimate is None:
            self.lip_estimate = lipschitz_estimate(self.grid, vals)

    @classmethod
    def from_callable(cls, grid: GridSpec, fn) -> "GridFunction":
        pts = grid.mesh()
        return cls(grid, np.asarray(fn(pts), dtype=np.float64).reshape(grid.shape))

    def copy(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.copy(), self.lip_estimate)


@dataclass
class SpaceTimeFunction:
    """A time-stack of grid functions on the lattice ``t_j = j*dt``."""

    grid: GridSpec
    dt: float
    values: np.ndarray  # shape (steps+1,) + grid.shape

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.values.shape[0]) * self.dt

    def at_step(self, j: int) -> GridFunction:
        return GridFunction(self.grid, self.values[j].copy())


def point_source_values(grid: GridSpec, index: tuple[int, ...] | int, value: float) -> np.ndarray:
    """All-BIG array with one finite entry (implicit variational sources)."""
    vals = np.full(grid.shape, BIG, dtype=np.float64)
    if isinstance(index, (int, np.integer)):
        index = (int(index),)
    vals[tuple(index)] = value
    return vals
