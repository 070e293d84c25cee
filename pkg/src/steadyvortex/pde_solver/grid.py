"""Uniform Cartesian grid with a Shortley-Weller Dirichlet Laplacian."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spl
from numpy.typing import NDArray

from ..domain_green import DomainSpec

MIN_ARM = 1e-10  # arm fraction below which a node is treated as lying on the boundary


@dataclass(frozen=True)
class Grid:
    """Nodes ``(x[ix], y[iy])`` of a square-cell grid covering the domain.

    Fields on the grid are arrays of shape ``(ny, nx)`` indexed ``[iy, ix]``
    (row-major, rows along ``y``); nodes outside the domain hold 0.
    """

    domain: DomainSpec
    n: int
    h: float
    x: NDArray[np.float64]
    y: NDArray[np.float64]
    inside: NDArray[np.bool_]
    index: NDArray[np.int64]
    laplacian: sp.csc_matrix = field(repr=False)  # discrete -Δ on interior nodes
    _lu: object = field(default=None, repr=False, compare=False)

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.y), len(self.x))

    @property
    def n_unknowns(self) -> int:
        return int(self.inside.sum())

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        return (float(self.x[0]), float(self.x[-1]), float(self.y[0]), float(self.y[-1]))

    def points(self) -> NDArray[np.float64]:
        """Coordinates of the interior nodes, shape ``(N, 2)``, in unknown order."""
        X, Y = np.meshgrid(self.x, self.y)
        return np.c_[X[self.inside], Y[self.inside]]

    def all_points(self) -> NDArray[np.float64]:
        X, Y = np.meshgrid(self.x, self.y)
        return np.stack([X, Y], axis=-1)

    def to_field(self, values: NDArray[np.float64]) -> NDArray[np.float64]:
        out = np.zeros(self.shape)
        out[self.inside] = values
        return out

    def from_field(self, fld: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.asarray(fld)[self.inside]

    def solve(self, rhs: NDArray[np.float64]) -> NDArray[np.float64]:
        """Solve ``-Δ_h u = rhs`` with ``u = 0`` on the boundary."""
        return self._lu.solve(np.asarray(rhs, dtype=float))

    def disk_mask(self, center, radius: float) -> NDArray[np.bool_]:
        """Interior nodes (unknown order) inside ``B_radius(center)``."""
        d = self.points() - np.asarray(center, dtype=float)
        return np.sum(d * d, axis=1) < radius * radius


def build_grid(domain: DomainSpec, n: int) -> Grid:
    """Grid with ``n`` points along the longer bounding-box side."""
    if n < 9:
        raise ValueError("grid_n must be at least 9")
    x0, x1, y0, y1 = domain.bbox()
    side = max(x1 - x0, y1 - y0)
    h = side / (n - 1)
    ny = int(np.ceil((y1 - y0) / h - 1e-9)) + 1
    nx = int(np.ceil((x1 - x0) / h - 1e-9)) + 1
    cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    x = cx + h * (np.arange(nx) - 0.5 * (nx - 1))
    y = cy + h * (np.arange(ny) - 0.5 * (ny - 1))
    X, Y = np.meshgrid(x, y)
    pts = np.stack([X, Y], axis=-1)
    inside = domain.contains(pts)
    inside[0, :] = inside[-1, :] = False
    inside[:, 0] = inside[:, -1] = False

    arms = _arms(domain, inside, pts, h)
    on_boundary = inside & (arms.min(axis=0) < MIN_ARM)
    if np.any(on_boundary):
        inside = inside & ~on_boundary
        arms = _arms(domain, inside, pts, h)
    return _assemble(domain, n, h, x, y, inside, arms)


_SHIFTS = [(0, 1), (0, -1), (1, 0), (-1, 0)]  # (+x, -x, +y, -y) as (d_iy, d_ix)


def _arms(domain, inside, pts, h):
    """Arm fractions (in units of h) from each node to the boundary, per direction."""
    arms = np.ones((4,) + inside.shape)
    for k, (diy, dix) in enumerate(_SHIFTS):
        nb_inside = np.roll(inside, shift=(-diy, -dix), axis=(0, 1))
        cut = inside & ~nb_inside
        if np.any(cut):
            a = pts[cut]
            b = a + h * np.array([dix, diy], dtype=float)
            arms[k][cut] = domain.crossing_fraction(a, b)
    return arms


def _assemble(domain, n, h, x, y, inside, arms) -> Grid:
    N = int(inside.sum())
    index = -np.ones(inside.shape, dtype=np.int64)
    index[inside] = np.arange(N)
    iy, ix = np.nonzero(inside)
    rows, cols, vals = [], [], []
    diag = np.zeros(N)
    for axis_pair in ((0, 1), (2, 3)):
        kp, km = axis_pair
        hp = arms[kp][inside] * h
        hm = arms[km][inside] * h
        diag += 2.0 / (hp * hm)
        for kk, harm, other in ((kp, hp, hm), (km, hm, hp)):
            diy, dix = _SHIFTS[kk]
            nb = index[iy + diy, ix + dix]
            ok = nb >= 0
            rows.append(np.arange(N)[ok])
            cols.append(nb[ok])
            vals.append(-2.0 / (harm[ok] * (harm[ok] + other[ok])))
    rows.append(np.arange(N))
    cols.append(np.arange(N))
    vals.append(diag)
    A = sp.csc_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N)
    )
    lu = spl.splu(A, permc_spec="MMD_AT_PLUS_A")
    inside.setflags(write=False)
    index.setflags(write=False)
    return Grid(domain, n, h, x, y, inside, index, A, lu)
