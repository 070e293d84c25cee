"""Free-boundary extraction and core statistics from a grid solution."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from matplotlib.path import Path
from numpy.typing import NDArray
from skimage.measure import find_contours

from ..errors import EmptyCore, OpenContour
from .grid import Grid


@dataclass(frozen=True)
class CoreMeasurement:
    peak: NDArray[np.float64]  # sub-grid location of max ψ in the mask
    peak_node: NDArray[np.float64]  # grid node carrying the max
    radius: float  # half the diameter of the free-boundary polygon
    cut_level: float
    mass: float
    contour: NDArray[np.float64]  # closed polyline, shape (m, 2), first == last
    fit_center: NDArray[np.float64]
    fit_radius: float
    circularity: float  # max |ρ_i - R| / R about the best-fit circle

    def to_record(self) -> dict:
        return {
            "peak_x": float(self.peak[0]),
            "peak_y": float(self.peak[1]),
            "radius": self.radius,
            "cut_level": self.cut_level,
            "mass": self.mass,
            "fit_center_x": float(self.fit_center[0]),
            "fit_center_y": float(self.fit_center[1]),
            "fit_radius": self.fit_radius,
            "circularity": self.circularity,
            "contour_points": int(len(self.contour)),
        }


def fit_circle(points) -> tuple[NDArray[np.float64], float]:
    """Algebraic (Kasa) least-squares circle through ``points``."""
    P = np.asarray(points, dtype=float)
    A = np.c_[P, np.ones(len(P))]
    b = -np.sum(P * P, axis=1)
    (D, E, F), *_ = np.linalg.lstsq(A, b, rcond=None)
    c = np.array([-D / 2.0, -E / 2.0])
    return c, float(np.sqrt(max(c @ c - F, 0.0)))


def polygon_diameter(points) -> float:
    P = np.asarray(points, dtype=float)
    d = P[:, None, :] - P[None, :, :]
    return float(np.sqrt(np.max(np.sum(d * d, axis=-1))))


def _subgrid_peak(fld, iy, ix, x, y, h):
    """Vertex of the separable parabola through the 3x3 neighbourhood."""
    out = np.array([x[ix], y[iy]], dtype=float)
    for axis, (m, c, p) in enumerate(
        ((fld[iy, ix - 1], fld[iy, ix], fld[iy, ix + 1]), (fld[iy - 1, ix], fld[iy, ix], fld[iy + 1, ix]))
    ):
        den = m - 2.0 * c + p
        if den < 0:
            out[axis] += 0.5 * h * (m - p) / den
    return out


def level_contours(grid: Grid, fld, level: float) -> list[NDArray[np.float64]]:
    """Marching-squares contours of ``fld`` at ``level`` in physical coordinates."""
    out = []
    for c in find_contours(fld, level):
        out.append(np.c_[grid.x[0] + grid.h * c[:, 1], grid.y[0] + grid.h * c[:, 0]])
    return out


def locate_peak(grid: Grid, fld, mask_center, mask_radius):
    """Grid node and sub-grid location of the maximum of ``fld`` in the mask, plus the value."""
    mask_center = np.asarray(mask_center, dtype=float)
    X, Y = np.meshgrid(grid.x, grid.y)
    in_mask = grid.inside & ((X - mask_center[0]) ** 2 + (Y - mask_center[1]) ** 2 < mask_radius**2)
    masked = np.where(in_mask, fld, -np.inf)
    iy, ix = np.unravel_index(int(np.argmax(masked)), fld.shape)
    node = np.array([grid.x[ix], grid.y[iy]])
    return node, _subgrid_peak(fld, iy, ix, grid.x, grid.y, grid.h), float(masked[iy, ix])


def solution_peaks(sol) -> NDArray[np.float64]:
    """Sub-grid maxima of ψ in every mask, shape ``(k, 2)``."""
    fld = sol.psi_field
    return np.array([locate_peak(sol.grid, fld, c, sol.spec.mask_radius)[1] for c in sol.spec.centers])


def measure_core(grid: Grid, fld, mask_center, mask_radius, level, mass) -> CoreMeasurement:
    """Measure the core ``{fld > level}`` inside ``B(mask_center, mask_radius)``."""
    mask_center = np.asarray(mask_center, dtype=float)
    peak_node, peak, top = locate_peak(grid, fld, mask_center, mask_radius)
    if not top > level:
        raise EmptyCore("no grid node exceeds the cut level inside the mask")

    candidates = []
    for c in level_contours(grid, fld, level):
        d = np.sqrt(np.sum((c - mask_center) ** 2, axis=1))
        if np.all(d < mask_radius):
            candidates.append(c)
        elif np.any(d < mask_radius) and _encloses(c, peak_node):
            raise OpenContour("free boundary leaves the mask; the mask radius is too small")
    enclosing = [c for c in candidates if _encloses(c, peak_node)]
    if not enclosing:
        raise OpenContour("no closed level curve around the peak inside the mask")
    contour = max(enclosing, key=len)
    if not np.allclose(contour[0], contour[-1]):
        raise OpenContour("level curve around the peak is not closed")
    center, R = fit_circle(contour[:-1])
    rho = np.sqrt(np.sum((contour[:-1] - center) ** 2, axis=1))
    return CoreMeasurement(
        peak=peak,
        peak_node=peak_node,
        radius=0.5 * polygon_diameter(contour),
        cut_level=float(level),
        mass=float(mass),
        contour=contour,
        fit_center=center,
        fit_radius=R,
        circularity=float(np.max(np.abs(rho - R)) / R),
    )


def _encloses(poly, point) -> bool:
    return bool(Path(poly).contains_point(point))


def measure_vortex_cores(sol) -> list[CoreMeasurement]:
    """Cores of a converged :class:`StreamSolution`, one per mask."""
    fld = sol.psi_field
    spec = sol.spec
    return [
        measure_core(sol.grid, fld, spec.centers[j], spec.mask_radius, sol.cut_levels[j], sol.masses[j])
        for j in range(spec.k)
    ]
