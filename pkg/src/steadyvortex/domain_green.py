"""Planar domains and their Dirichlet Green's function.

The Green's function of ``-Δ`` with zero boundary data is split as

    G(x, y) = (1/2π) ln(1/|x - y|) - H(x, y),

where the regular part ``H(·, x)`` is harmonic and equals the logarithmic
kernel on the boundary.  The Robin function is ``h(x) = H(x, x)``.

For the unit disk the method of images gives everything in closed form.
For a general smooth curve ``H(·, x)`` is represented by the method of
fundamental solutions (MFS): logarithmic sources on a dilated copy of the
boundary, fitted by least squares to the boundary data.  The fit is linear
in the data, so derivatives in both slots are available analytically.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from matplotlib.path import Path as MplPath
from numpy.typing import NDArray
from scipy.interpolate import CubicSpline

from .errors import (
    CoincidentPoints,
    FitFailed,
    InvalidDomain,
    OutsideDomain,
    TooCloseToBoundary,
)

TWO_PI = 2.0 * np.pi
BOUNDARY_MARGIN = 0.05  # fraction of the diameter


def _as_points(p) -> NDArray[np.float64]:
    return np.asarray(p, dtype=float)


def _segments_intersect(pts: NDArray) -> bool:
    """True when the closed polygon ``pts`` has two non-adjacent crossing edges."""
    n = len(pts)
    a = pts
    b = np.roll(pts, -1, axis=0)
    d = b - a
    for i in range(n):
        j = np.arange(i + 2, n)
        if i == 0:
            j = j[j != n - 1]
        if j.size == 0:
            continue
        p, r = a[i], d[i]
        q, s = a[j], d[j]
        rxs = r[0] * s[:, 1] - r[1] * s[:, 0]
        qp = q - p
        par = np.abs(rxs) < 1e-300
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (qp[:, 0] * s[:, 1] - qp[:, 1] * s[:, 0]) / rxs
            u = (qp[:, 0] * r[1] - qp[:, 1] * r[0]) / rxs
        hit = (~par) & (t >= 0) & (t <= 1) & (u >= 0) & (u <= 1)
        if np.any(hit):
            return True
    return False


@dataclass(frozen=True)
class DomainSpec:
    """A bounded simply connected planar domain.

    ``kind`` is ``"unit_disk"`` or ``"boundary_curve"``.  For a curve,
    ``boundary`` holds positively oriented samples of a smooth closed curve
    (closed implicitly); a periodic cubic spline through them is used as the
    boundary itself.
    """

    kind: str
    boundary: NDArray[np.float64] | None = None
    diameter: float = 2.0
    _spline: CubicSpline | None = field(default=None, repr=False, compare=False)
    _period: float = field(default=0.0, repr=False, compare=False)
    _dense: NDArray[np.float64] | None = field(default=None, repr=False, compare=False)
    _path: MplPath | None = field(default=None, repr=False, compare=False)

    # -- constructors -----------------------------------------------------
    @classmethod
    def unit_disk(cls) -> "DomainSpec":
        return cls(kind="unit_disk", boundary=None, diameter=2.0)

    @classmethod
    def from_boundary(cls, points, n_dense: int = 4096) -> "DomainSpec":
        pts = _as_points(points)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 8:
            raise InvalidDomain("boundary needs at least 8 points of shape (n, 2)")
        if np.allclose(pts[0], pts[-1]):
            pts = pts[:-1]
        seg = np.linalg.norm(np.diff(np.vstack([pts, pts[:1]]), axis=0), axis=1)
        if np.any(seg <= 0):
            raise InvalidDomain("repeated consecutive boundary points")
        if _segments_intersect(pts):
            raise InvalidDomain("boundary curve self-intersects")
        area = 0.5 * np.sum(pts[:, 0] * np.roll(pts[:, 1], -1) - np.roll(pts[:, 0], -1) * pts[:, 1])
        if area < 0:
            pts = pts[::-1].copy()
            seg = np.linalg.norm(np.diff(np.vstack([pts, pts[:1]]), axis=0), axis=1)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        closed = np.vstack([pts, pts[:1]])
        spline = CubicSpline(s, closed, bc_type="periodic")
        period = float(s[-1])
        dense = spline(np.linspace(0.0, period, n_dense, endpoint=False))
        diff = dense[:, None, :] - dense[None, ::8, :]
        diam = float(np.sqrt(np.max(np.sum(diff * diff, axis=-1))))
        pts.setflags(write=False)
        dense.setflags(write=False)
        return cls(
            kind="boundary_curve",
            boundary=pts,
            diameter=diam,
            _spline=spline,
            _period=period,
            _dense=dense,
            _path=MplPath(np.vstack([dense, dense[:1]]), closed=True),
        )

    @classmethod
    def ellipse(cls, a: float, b: float, n: int = 512) -> "DomainSpec":
        t = np.linspace(0.0, TWO_PI, n, endpoint=False)
        return cls.from_boundary(np.c_[a * np.cos(t), b * np.sin(t)])

    @classmethod
    def from_csv(cls, path) -> "DomainSpec":
        rows = []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except ValueError:
                    continue  # header line
        return cls.from_boundary(np.array(rows))

    # -- geometry ----------------------------------------------------------
    @property
    def is_disk(self) -> bool:
        return self.kind == "unit_disk"

    def centroid(self) -> NDArray[np.float64]:
        if self.is_disk:
            return np.zeros(2)
        d = self._dense
        x, y = d[:, 0], d[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        area = 0.5 * cross.sum()
        return np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6.0 * area)

    def bbox(self) -> tuple[float, float, float, float]:
        if self.is_disk:
            return (-1.0, 1.0, -1.0, 1.0)
        d = self._dense
        return (float(d[:, 0].min()), float(d[:, 0].max()), float(d[:, 1].min()), float(d[:, 1].max()))

    def boundary_points(self, n: int, offset: float = 0.0) -> NDArray[np.float64]:
        """``n`` points equally spaced in the curve parameter, ``offset`` in (0, 1)."""
        t = (np.arange(n) + offset) / n
        if self.is_disk:
            ang = TWO_PI * t
            return np.c_[np.cos(ang), np.sin(ang)]
        return self._spline(t * self._period)

    def boundary_normals(self, n: int, offset: float = 0.0) -> NDArray[np.float64]:
        t = (np.arange(n) + offset) / n
        if self.is_disk:
            ang = TWO_PI * t
            return np.c_[np.cos(ang), np.sin(ang)]
        tang = self._spline(t * self._period, 1)
        nrm = np.c_[tang[:, 1], -tang[:, 0]]
        return nrm / np.linalg.norm(nrm, axis=1, keepdims=True)

    def contains(self, pts) -> NDArray[np.bool_]:
        p = _as_points(pts)
        flat = p.reshape(-1, 2)
        if self.is_disk:
            out = np.sum(flat * flat, axis=1) < 1.0
        else:
            out = self._path.contains_points(flat)
        return out.reshape(p.shape[:-1])

    def distance_to_boundary(self, pts) -> NDArray[np.float64]:
        p = _as_points(pts)
        flat = p.reshape(-1, 2)
        if self.is_disk:
            out = np.abs(1.0 - np.linalg.norm(flat, axis=1))
        else:
            out = np.empty(len(flat))
            d = self._dense
            for s in range(0, len(flat), 2048):
                blk = flat[s : s + 2048]
                diff = blk[:, None, :] - d[None, :, :]
                out[s : s + 2048] = np.sqrt(np.min(np.sum(diff * diff, axis=-1), axis=1))
        return out.reshape(p.shape[:-1])

    def crossing_fraction(self, inside_pts, outside_pts) -> NDArray[np.float64]:
        """Fraction ``t`` with ``inside + t (outside - inside)`` on the boundary."""
        a = _as_points(inside_pts).reshape(-1, 2)
        b = _as_points(outside_pts).reshape(-1, 2)
        d = b - a
        if self.is_disk:
            # |a + t d|^2 = 1, positive root
            qa = np.sum(d * d, axis=1)
            qb = 2.0 * np.sum(a * d, axis=1)
            qc = np.sum(a * a, axis=1) - 1.0
            disc = np.sqrt(np.maximum(qb * qb - 4.0 * qa * qc, 0.0))
            return (2.0 * -qc) / (qb + disc)
        lo = np.zeros(len(a))
        hi = np.ones(len(a))
        for _ in range(48):
            mid = 0.5 * (lo + hi)
            inside = self.contains(a + mid[:, None] * d)
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        return 0.5 * (lo + hi)

    def to_record(self) -> dict:
        rec = {"kind": self.kind, "diameter": self.diameter}
        if not self.is_disk:
            rec["n_boundary_points"] = int(len(self.boundary))
        return rec


# ---------------------------------------------------------------------------
# closed-form disk kernels (images)


def _disk_q(y, x):
    return np.sum(x * x) * np.sum(y * y, axis=-1) - 2.0 * (y @ x) + 1.0


def _disk_H(y, x):
    return -np.log(_disk_q(y, x)) / (2.0 * TWO_PI)


def _disk_H_dy(y, x):
    q = _disk_q(y, x)[..., None]
    qy = 2.0 * np.sum(x * x) * y - 2.0 * x
    return -qy / q / (2.0 * TWO_PI)


def _disk_H_dx(y, x):
    q = _disk_q(y, x)[..., None]
    qx = 2.0 * np.sum(y * y, axis=-1)[..., None] * x - 2.0 * y
    return -qx / q / (2.0 * TWO_PI)


def _disk_second(y, x, which: str):
    q = _disk_q(y, x)[..., None, None]
    eye = np.eye(2)
    yy = np.sum(y * y, axis=-1)[..., None, None]
    qy = 2.0 * np.sum(x * x) * y - 2.0 * x
    qx = 2.0 * np.sum(y * y, axis=-1)[..., None] * x - 2.0 * y
    if which == "yy":
        a, b = qy, qy
        qab = 2.0 * np.sum(x * x) * eye * np.ones_like(q)
    elif which == "xx":
        a, b = qx, qx
        qab = 2.0 * yy * eye
    else:  # "yx": [a, b] = d/dy_a d/dx_b
        a, b = qy, qx
        qab = 4.0 * y[..., :, None] * x[None, :] if y.ndim > 1 else 4.0 * np.outer(y, x)
        qab = qab - 2.0 * eye
    return -(qab / q - a[..., :, None] * b[..., None, :] / q**2) / (2.0 * TWO_PI)


# ---------------------------------------------------------------------------
# evaluator


@dataclass(frozen=True)
class GreenEvaluator:
    """Evaluator for ``G``, ``H`` and ``h`` on a fixed domain.

    The regular part is stored with the convention ``H(y, x)``: harmonic in
    the first argument ``y``, with logarithmic pole data at ``x``.
    """

    domain: DomainSpec
    method: str
    charge_points: NDArray[np.float64] | None = None
    collocation: NDArray[np.float64] | None = None
    fit_residual: float = 0.0
    tol: float = 0.0
    dilation: float = 0.0
    coincide_eps: float = 1e-12
    _q: NDArray[np.float64] | None = field(default=None, repr=False, compare=False)
    _r: NDArray[np.float64] | None = field(default=None, repr=False, compare=False)

    @property
    def n_sources(self) -> int:
        return 0 if self.charge_points is None else int(len(self.charge_points))

    def diagnostics(self) -> dict:
        return {"method": self.method, "n_sources": self.n_sources, "fit_residual": float(self.fit_residual)}

    # -- MFS internals -----------------------------------------------------
    def charge_weights(self, x, order: int = 0) -> NDArray[np.float64]:
        """Source coefficients fitting the pole at ``x`` (and their x-derivatives).

        Returns shape ``(m,)`` for order 0, ``(m, 2)`` for 1, ``(m, 2, 2)`` for 2.
        """
        x = _as_points(x)
        d = self.collocation - x
        r2 = np.sum(d * d, axis=1)
        if order == 0:
            rhs = -np.log(r2) / (2.0 * TWO_PI)
        elif order == 1:
            rhs = d / r2[:, None] / TWO_PI
        else:
            rhs = (2.0 * d[:, :, None] * d[:, None, :] / r2[:, None, None] ** 2 - np.eye(2) / r2[:, None, None]) / TWO_PI
        shape = rhs.shape
        flat = rhs.reshape(len(r2), -1)
        coef = sla.solve_triangular(self._r, self._q.T @ flat)
        return coef.reshape((coef.shape[0],) + shape[1:])

    def _basis(self, y, order: int):
        z = self.charge_points
        d = y[..., None, :] - z  # (..., ns, 2)
        r2 = np.sum(d * d, axis=-1)
        if order == 0:
            b = 0.5 * np.log(r2)
            return np.concatenate([b, np.ones(b.shape[:-1] + (1,))], axis=-1)
        if order == 1:
            g = d / r2[..., None]
            return np.concatenate([g, np.zeros(g.shape[:-2] + (1, 2))], axis=-2)
        hess = np.eye(2) / r2[..., None, None] - 2.0 * d[..., :, None] * d[..., None, :] / r2[..., None, None] ** 2
        return np.concatenate([hess, np.zeros(hess.shape[:-3] + (1, 2, 2))], axis=-3)

    def _mfs(self, y, x, dy: int, dx: int):
        basis = self._basis(y, dy)
        coef = self.charge_weights(x, dx)
        left = "...m" + "ab"[:dy]
        right = "m" + "cd"[:dx]
        return np.einsum(f"{left},{right}->...{'ab'[:dy]}{'cd'[:dx]}", basis, coef)

    def _chunked(self, fn, y, *args):
        y = _as_points(y)
        if y.ndim == 1:
            return fn(y, *args)
        flat = y.reshape(-1, 2)
        step = max(1, 4_000_000 // max(1, self.n_sources))
        parts = [fn(flat[s : s + step], *args) for s in range(0, len(flat), step)]
        out = np.concatenate(parts, axis=0)
        return out.reshape(y.shape[:-1] + out.shape[1:])

    # -- regular part ------------------------------------------------------
    def regular(self, y, x):
        """``H(y, x)``; ``y`` may be a batch of points."""
        x = _as_points(x)
        if self.method == "images_analytic":
            return _disk_H(_as_points(y), x)
        return self._chunked(self._mfs, y, x, 0, 0)

    def regular_dy(self, y, x):
        x = _as_points(x)
        if self.method == "images_analytic":
            return _disk_H_dy(_as_points(y), x)
        return self._chunked(self._mfs, y, x, 1, 0)

    def regular_dx(self, y, x):
        x = _as_points(x)
        if self.method == "images_analytic":
            return _disk_H_dx(_as_points(y), x)
        return self._chunked(self._mfs, y, x, 0, 1)

    def regular_dyy(self, y, x):
        x = _as_points(x)
        if self.method == "images_analytic":
            return _disk_second(_as_points(y), x, "yy")
        return self._chunked(self._mfs, y, x, 2, 0)

    def regular_dxx(self, y, x):
        x = _as_points(x)
        if self.method == "images_analytic":
            return _disk_second(_as_points(y), x, "xx")
        return self._chunked(self._mfs, y, x, 0, 2)

    def regular_dydx(self, y, x):
        """Mixed second derivative, entry ``[a, b] = ∂_{y_a} ∂_{x_b} H(y, x)``."""
        x = _as_points(x)
        if self.method == "images_analytic":
            return _disk_second(_as_points(y), x, "yx")
        return self._chunked(self._mfs, y, x, 1, 1)

    # -- Green's function ----------------------------------------------------
    def green(self, y, x):
        """``G(y, x)`` for a batch of ``y`` and a single pole ``x``."""
        y = _as_points(y)
        x = _as_points(x)
        d = y - x
        return -0.5 * np.log(np.sum(d * d, axis=-1)) / TWO_PI - self.regular(y, x)

    def green_dy(self, y, x):
        y = _as_points(y)
        x = _as_points(x)
        d = y - x
        return -d / np.sum(d * d, axis=-1)[..., None] / TWO_PI - self.regular_dy(y, x)

    def green_dx(self, y, x):
        y = _as_points(y)
        x = _as_points(x)
        d = y - x
        return d / np.sum(d * d, axis=-1)[..., None] / TWO_PI - self.regular_dx(y, x)

    def green_dyy(self, y, x):
        y = _as_points(y)
        x = _as_points(x)
        d = y - x
        r2 = np.sum(d * d, axis=-1)[..., None, None]
        s = -(np.eye(2) / r2 - 2.0 * d[..., :, None] * d[..., None, :] / r2**2) / TWO_PI
        return s - self.regular_dyy(y, x)

    def green_dxx(self, y, x):
        y = _as_points(y)
        x = _as_points(x)
        d = y - x
        r2 = np.sum(d * d, axis=-1)[..., None, None]
        s = -(np.eye(2) / r2 - 2.0 * d[..., :, None] * d[..., None, :] / r2**2) / TWO_PI
        return s - self.regular_dxx(y, x)

    def green_dydx(self, y, x):
        y = _as_points(y)
        x = _as_points(x)
        d = y - x
        r2 = np.sum(d * d, axis=-1)[..., None, None]
        s = (np.eye(2) / r2 - 2.0 * d[..., :, None] * d[..., None, :] / r2**2) / TWO_PI
        return s - self.regular_dydx(y, x)

    # -- Robin function ------------------------------------------------------
    def robin(self, x) -> float:
        x = _as_points(x)
        if self.method == "images_analytic":
            return float(-np.log(1.0 - x @ x) / TWO_PI)
        return float(self.regular(x, x))

    def robin_grad(self, x) -> NDArray[np.float64]:
        x = _as_points(x)
        if self.method == "images_analytic":
            return x / (np.pi * (1.0 - x @ x))
        return self.regular_dy(x, x) + self.regular_dx(x, x)

    def robin_hess(self, x) -> NDArray[np.float64]:
        x = _as_points(x)
        if self.method == "images_analytic":
            r2 = x @ x
            return (np.eye(2) / (1.0 - r2) + 2.0 * np.outer(x, x) / (1.0 - r2) ** 2) / np.pi
        m = self.regular_dydx(x, x)
        return self.regular_dyy(x, x) + m + m.T + self.regular_dxx(x, x)

    # -- validation helpers ----------------------------------------------------
    def check_interior(self, x, margin: float = 0.0) -> None:
        x = _as_points(x)
        if not np.all(self.domain.contains(x)):
            raise OutsideDomain(f"point {x.tolist()} is outside the domain")
        if margin > 0 and np.any(self.domain.distance_to_boundary(x) < margin * self.domain.diameter):
            raise TooCloseToBoundary(
                f"point {x.tolist()} closer than {margin}*diameter to the boundary"
            )


def _fit_mfs(domain: DomainSpec, n_src: int, dilation: float):
    centre = domain.centroid()
    nb = 2 * n_src
    col = domain.boundary_points(nb)
    src = centre + dilation * (domain.boundary_points(n_src, offset=0.25) - centre)
    d = col[:, None, :] - src[None, :, :]
    mat = np.concatenate([0.5 * np.log(np.sum(d * d, axis=-1)), np.ones((nb, 1))], axis=1)
    q, r = np.linalg.qr(mat)
    return src, col, q, r


def _probe_poles(domain: DomainSpec, n: int = 24) -> NDArray[np.float64]:
    margin = BOUNDARY_MARGIN * domain.diameter
    pts = domain.boundary_points(n, offset=0.37) - margin * domain.boundary_normals(n, offset=0.37)
    return np.vstack([pts, domain.centroid()[None, :]])


def _mfs_residual(ev: GreenEvaluator, n_check: int) -> float:
    chk = ev.domain.boundary_points(n_check, offset=0.5)
    worst = 0.0
    for x in _probe_poles(ev.domain):
        d = chk - x
        target = -0.5 * np.log(np.sum(d * d, axis=1)) / TWO_PI
        worst = max(worst, float(np.max(np.abs(ev.regular(chk, x) - target))))
    return worst


def build_green_evaluator(
    domain: DomainSpec,
    tol: float = 1e-8,
    method: str | None = None,
    dilation: float = 1.2,
    source_counts: tuple[int, ...] = (64, 128, 256, 512),
) -> GreenEvaluator:
    """Construct a Green's function evaluator for ``domain``.

    The unit disk uses closed-form images unless ``method="mfs"`` is forced.
    Otherwise the MFS source count is increased through ``source_counts``
    until the boundary mismatch of ``H(·, x)`` is at most ``tol`` for probe
    poles at distance ``0.05 * diameter`` from the boundary.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if method is None:
        method = "images_analytic" if domain.is_disk else "mfs"
    if method == "images_analytic":
        if not domain.is_disk:
            raise InvalidDomain("closed-form images are available only for the unit disk")
        return GreenEvaluator(domain=domain, method=method, fit_residual=0.0, tol=tol)
    if method != "mfs":
        raise ValueError(f"unknown method {method!r}")
    best = None
    for n_src in source_counts:
        src, col, q, r = _fit_mfs(domain, n_src, dilation)
        for arr in (src, col, q, r):
            arr.setflags(write=False)
        ev = GreenEvaluator(
            domain=domain,
            method="mfs",
            charge_points=src,
            collocation=col,
            tol=tol,
            dilation=dilation,
            _q=q,
            _r=r,
        )
        res = _mfs_residual(ev, 4 * n_src)
        ev = GreenEvaluator(**{**ev.__dict__, "fit_residual": res})
        best = ev
        if res <= tol:
            return ev
    raise FitFailed(
        f"boundary residual {best.fit_residual:.3e} above tol {tol:.1e} with {best.n_sources} sources"
    )


# ---------------------------------------------------------------------------
# operations


def green_value(ev: GreenEvaluator, x, y) -> float:
    """``G(x, y)`` for interior ``x != y``."""
    x = _as_points(x)
    y = _as_points(y)
    ev.check_interior(x)
    ev.check_interior(y)
    if np.linalg.norm(x - y) < ev.coincide_eps * ev.domain.diameter:
        raise CoincidentPoints("G is singular at coincident points")
    return float(ev.green(x, y))


def _fd_robin(ev: GreenEvaluator, x, order: int, step: float):
    e = np.eye(2)

    def grad(hs):
        return np.array([(ev.robin(x + hs * e[a]) - ev.robin(x - hs * e[a])) / (2 * hs) for a in range(2)])

    def hess(hs):
        out = np.empty((2, 2))
        h0 = ev.robin(x)
        for a in range(2):
            out[a, a] = (ev.robin(x + hs * e[a]) - 2 * h0 + ev.robin(x - hs * e[a])) / hs**2
        out[0, 1] = out[1, 0] = (
            ev.robin(x + hs * (e[0] + e[1]))
            - ev.robin(x + hs * (e[0] - e[1]))
            - ev.robin(x - hs * (e[0] - e[1]))
            + ev.robin(x - hs * (e[0] + e[1]))
        ) / (4 * hs**2)
        return out

    fn = grad if order == 1 else hess
    return (4.0 * fn(step / 2) - fn(step)) / 3.0


def robin_derivatives(ev: GreenEvaluator, x, order: int, method: str = "analytic", return_info: bool = False):
    """Robin function ``h`` (order 0), its gradient (1) or Hessian (2).

    ``method="analytic"`` differentiates the closed form or the MFS
    representation exactly; ``method="fd"`` uses central differences with
    step ``1e-4 * diameter`` and one Richardson level.
    """
    x = _as_points(x)
    ev.check_interior(x, BOUNDARY_MARGIN)
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    step = 1e-4 * ev.domain.diameter
    if order == 0:
        val = ev.robin(x)
    elif method == "fd":
        val = _fd_robin(ev, x, order, step)
    elif order == 1:
        val = ev.robin_grad(x)
    else:
        val = ev.robin_hess(x)
    if return_info:
        info = {"method": method if order else "direct", "step": step if (order and method == "fd") else None}
        info.update(ev.diagnostics())
        return val, info
    return val
