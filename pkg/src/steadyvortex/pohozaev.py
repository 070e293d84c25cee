"""Pohozaev-type boundary integrals on small circles.

For a ball ``B_τ(x⁰)`` with outward normal ``ν`` and direction ``i`` the
bilinear form

    Q(u, v) = -∮ ∂_ν v ∂_i u - ∮ ∂_ν u ∂_i v + ∮ (∇u·∇v) ν_i

does not depend on ``τ`` when ``u`` and ``v`` are harmonic in the punctured
ball, and vanishes when both are harmonic in the whole ball.  Pairing Green
functions with their pole derivatives gives identities that link ``Q`` to
second derivatives of ``G`` and of the Robin function.  Circle integrals use
the trapezoid rule, which is spectrally accurate for these analytic
periodic integrands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import NDArray
from scipy.interpolate import RectBivariateSpline

from .domain_green import DomainSpec, GreenEvaluator, robin_derivatives
from .errors import BallExitsDomain, CoincidentPoints, OutsideDomain
from .kirchhoff_routh import VortexConfig, kr_derivatives

MIN_NODES = 64
FD_STEP = 1e-5  # relative to the domain diameter


@dataclass(frozen=True)
class FieldOnBall:
    """A field ``u`` with gradient, restricted to the circle ``∂B_τ(center)``."""

    value: Callable[[NDArray[np.float64]], NDArray[np.float64]]
    grad: Callable[[NDArray[np.float64]], NDArray[np.float64]]
    center: NDArray[np.float64]
    tau: float
    n_nodes: int = 256
    domain: DomainSpec | None = None

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(2)
        object.__setattr__(self, "center", c)
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.n_nodes < MIN_NODES:
            raise ValueError(f"at least {MIN_NODES} quadrature nodes are required")
        if self.domain is not None:
            if not bool(self.domain.contains(c)) or float(self.domain.distance_to_boundary(c)) <= self.tau:
                raise BallExitsDomain("the ball must lie inside the domain")

    def with_ball(self, tau: float | None = None, n_nodes: int | None = None) -> "FieldOnBall":
        return FieldOnBall(
            self.value,
            self.grad,
            self.center,
            self.tau if tau is None else tau,
            self.n_nodes if n_nodes is None else n_nodes,
            self.domain,
        )

    def circle(self) -> tuple[NDArray[np.float64], NDArray[np.float64], float]:
        """Nodes, outward normals and the (uniform) arc-length weight."""
        th = 2.0 * np.pi * np.arange(self.n_nodes) / self.n_nodes
        nu = np.c_[np.cos(th), np.sin(th)]
        return self.center + self.tau * nu, nu, 2.0 * np.pi * self.tau / self.n_nodes


def _check_pair(u: FieldOnBall, v: FieldOnBall) -> None:
    if u.tau != v.tau or u.n_nodes != v.n_nodes or not np.array_equal(u.center, v.center):
        raise ValueError("both fields must live on the same ball")


def q_form(u: FieldOnBall, v: FieldOnBall, i: int) -> float:
    """The bilinear boundary form ``Q(u, v)`` in direction ``i`` (0 or 1)."""
    _check_pair(u, v)
    if i not in (0, 1):
        raise ValueError("direction must be 0 or 1")
    pts, nu, w = u.circle()
    gu = np.asarray(u.grad(pts), dtype=float)
    gv = np.asarray(v.grad(pts), dtype=float)
    dnu_u = np.sum(gu * nu, axis=1)
    dnu_v = np.sum(gv * nu, axis=1)
    integrand = -dnu_v * gu[:, i] - dnu_u * gv[:, i] + np.sum(gu * gv, axis=1) * nu[:, i]
    return float(w * np.sum(integrand))


@dataclass(frozen=True)
class PohozaevSource:
    """Primitive ``F(x, u) = ∫_0^u f(x, s) ds`` and its partial ``x_i`` derivative."""

    F: Callable[[NDArray[np.float64], NDArray[np.float64]], NDArray[np.float64]]
    F_x: Callable[[NDArray[np.float64], NDArray[np.float64], int], NDArray[np.float64]] | None = None


def pohozaev_residual(
    field: FieldOnBall, source: PohozaevSource | None, i: int, n_radial: int = 64
) -> float:
    """Left side minus right side of the local Pohozaev identity for ``-Δu = f(x, u)``.

    ``-∮ ∂_ν u ∂_i u + ½∮|∇u|² ν_i  =  ∮ F(x, u) ν_i - ∫_B F_{x_i}(x, u)``.
    ``source=None`` means ``f = 0``.
    """
    if i not in (0, 1):
        raise ValueError("direction must be 0 or 1")
    pts, nu, w = field.circle()
    g = np.asarray(field.grad(pts), dtype=float)
    lhs = w * np.sum(-np.sum(g * nu, axis=1) * g[:, i] + 0.5 * np.sum(g * g, axis=1) * nu[:, i])
    rhs = 0.0
    if source is not None:
        u = np.asarray(field.value(pts), dtype=float)
        rhs += w * np.sum(np.asarray(source.F(pts, u)) * nu[:, i])
        if source.F_x is not None:
            rhs -= _ball_integral(field, lambda y: source.F_x(y, field.value(y), i), n_radial)
    return float(lhs - rhs)


def _ball_integral(field: FieldOnBall, fn, n_radial: int) -> float:
    """Polar tensor rule: Gauss-Legendre in the radius, trapezoid in the angle."""
    xr, wr = np.polynomial.legendre.leggauss(n_radial)
    r = 0.5 * field.tau * (xr + 1.0)
    wr = 0.5 * field.tau * wr * r
    th = 2.0 * np.pi * np.arange(field.n_nodes) / field.n_nodes
    R, T = np.meshgrid(r, th, indexing="ij")
    pts = field.center + np.c_[(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()]
    vals = np.asarray(fn(pts), dtype=float).reshape(R.shape)
    return float(np.sum(wr[:, None] * vals) * 2.0 * np.pi / field.n_nodes)


# ----------------------------------------------------------------------------
# fields built from the Green function


def green_field(ev: GreenEvaluator, pole, center, tau: float, n_nodes: int = 256) -> FieldOnBall:
    """``u(x) = G(pole, x)``."""
    pole = np.asarray(pole, dtype=float).reshape(2)
    return FieldOnBall(
        value=lambda y: ev.green(y, pole),
        grad=lambda y: ev.green_dy(y, pole),
        center=center,
        tau=tau,
        n_nodes=n_nodes,
        domain=ev.domain,
    )


def pole_derivative_field(ev: GreenEvaluator, pole, j: int, center, tau: float, n_nodes: int = 256) -> FieldOnBall:
    """``v(x) = ∂G(pole, x)/∂pole_j``."""
    pole = np.asarray(pole, dtype=float).reshape(2)
    return FieldOnBall(
        value=lambda y: ev.green_dx(y, pole)[:, j],
        grad=lambda y: ev.green_dydx(y, pole)[:, :, j],
        center=center,
        tau=tau,
        n_nodes=n_nodes,
        domain=ev.domain,
    )


def grid_field(grid, values, center, tau: float, n_nodes: int = 256) -> FieldOnBall:
    """Bicubic interpolant of a grid field (shape ``(ny, nx)``) restricted to a ball."""
    spl = RectBivariateSpline(grid.y, grid.x, values, kx=3, ky=3)

    def value(y):
        return spl.ev(y[:, 1], y[:, 0])

    def grad(y):
        return np.c_[spl.ev(y[:, 1], y[:, 0], dy=1), spl.ev(y[:, 1], y[:, 0], dx=1)]

    return FieldOnBall(value=value, grad=grad, center=center, tau=tau, n_nodes=n_nodes, domain=grid.domain)


def fd_green_mixed(ev: GreenEvaluator, x1, x0, step: float | None = None) -> NDArray[np.float64]:
    """``[i, j] = ∂²G(p, q)/∂q_i ∂p_j`` at ``p = x1, q = x0`` by central differences.

    One Richardson level removes the ``O(step²)`` term.
    """
    step = FD_STEP * ev.domain.diameter if step is None else step
    x1 = np.asarray(x1, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    e = np.eye(2)

    def d(hs):
        out = np.zeros((2, 2))
        for i in range(2):
            q = np.array([x0 + hs * e[i], x0 - hs * e[i]])
            for j in range(2):
                gp = ev.green(q, x1 + hs * e[j])
                gm = ev.green(q, x1 - hs * e[j])
                out[i, j] = (gp[0] - gp[1] - gm[0] + gm[1]) / (4.0 * hs * hs)
        return out

    return (4.0 * d(0.5 * step) - d(step)) / 3.0


def fd_green_hessian(ev: GreenEvaluator, x1, x0, step: float | None = None) -> NDArray[np.float64]:
    """``[i, j] = ∂²G(p, q)/∂q_i ∂q_j`` at ``p = x1, q = x0`` by central differences."""
    step = FD_STEP * ev.domain.diameter if step is None else step
    x1 = np.asarray(x1, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    e = np.eye(2)

    def d(hs):
        out = np.zeros((2, 2))
        g0 = ev.green(x0[None, :], x1)[0]
        for i in range(2):
            for j in range(2):
                if i == j:
                    g = ev.green(np.array([x0 + hs * e[i], x0 - hs * e[i]]), x1)
                    out[i, i] = (g[0] - 2.0 * g0 + g[1]) / (hs * hs)
                else:
                    s = np.array(
                        [
                            x0 + hs * (e[i] + e[j]),
                            x0 + hs * (e[i] - e[j]),
                            x0 - hs * (e[i] - e[j]),
                            x0 - hs * (e[i] + e[j]),
                        ]
                    )
                    g = ev.green(s, x1)
                    out[i, j] = (g[0] - g[1] - g[2] + g[3]) / (4.0 * hs * hs)
        return out

    return (4.0 * d(0.5 * step) - d(step)) / 3.0


@dataclass(frozen=True)
class IdentityRow:
    identity: str
    variant: str  # "literal" or "derived"
    i: int
    j: int
    tau: float
    q: float
    rhs: float

    @property
    def residual(self) -> float:
        return abs(self.q - self.rhs)

    def to_record(self) -> dict:
        return {
            "identity": self.identity,
            "variant": self.variant,
            "i": self.i,
            "j": self.j,
            "tau": self.tau,
            "q": self.q,
            "rhs": self.rhs,
            "residual": self.residual,
        }


IDENTITY_NAMES = ("self_pair", "far_field_near_derivative", "near_field_far_derivative")


def verify_green_identities(ev: GreenEvaluator, x0, x1, tau: float, n_nodes: int = 256) -> list[IdentityRow]:
    """Residual table for the three Green-function pairings on ``∂B_τ(x0)``.

    * ``self_pair``:  ``Q(G(x0,·), ∂_j G(x0,·)) = -½ ∂_i∂_j h(x0)``.
    * ``far_field_near_derivative``: ``Q(G(x1,·), ∂_j G(x0,·))``; literal right
      side ``½ D_{x_i}∂_j G(x1,x0) + ½ D²_{x_i x_j} G(x1,x0)``, derived
      right side ``D²_{x_i x_j} G(x1, x0)``.
    * ``near_field_far_derivative``: ``Q(G(x0,·), ∂_j G(x1,·))``; literal right
      side ``½ D_{x_i}∂_j G(x1,x0)``, derived right side ``D_{x_i}∂_j G(x1,x0)``.

    Here ``∂_j`` differentiates the pole (first) slot and ``D_x`` the field
    slot.  The derived sides follow from ``Q(S, u) = ∂_i u(x0)`` and
    ``Q(u, ∂_j S) = ∂_i∂_j u(x0)`` for the logarithmic kernel ``S`` and any
    ``u`` harmonic near ``x0``.  Right sides use the Robin Hessian and finite
    differences of ``G``; ``Q`` uses the analytic field gradients.
    """
    x0 = np.asarray(x0, dtype=float).reshape(2)
    x1 = np.asarray(x1, dtype=float).reshape(2)
    dom = ev.domain
    if not (bool(dom.contains(x0)) and bool(dom.contains(x1))):
        raise OutsideDomain("both points must be interior")
    if np.linalg.norm(x0 - x1) <= tau:
        raise CoincidentPoints("x1 must lie outside the closed ball around x0")
    if float(dom.distance_to_boundary(x0)) <= tau:
        raise BallExitsDomain("the ball around x0 must lie inside the domain")

    hess_h = np.asarray(robin_derivatives(ev, x0, 2)).reshape(2, 2)
    mixed = fd_green_mixed(ev, x1, x0)
    hess_g = fd_green_hessian(ev, x1, x0)

    u0 = green_field(ev, x0, x0, tau, n_nodes)
    u1 = green_field(ev, x1, x0, tau, n_nodes)
    rows = []
    for j in range(2):
        v0 = pole_derivative_field(ev, x0, j, x0, tau, n_nodes)
        v1 = pole_derivative_field(ev, x1, j, x0, tau, n_nodes)
        for i in range(2):
            q_self = q_form(u0, v0, i)
            q_far = q_form(u1, v0, i)
            q_near = q_form(u0, v1, i)
            self_rhs = -0.5 * hess_h[i, j]
            rows += [
                IdentityRow("self_pair", "literal", i, j, tau, q_self, self_rhs),
                IdentityRow("self_pair", "derived", i, j, tau, q_self, self_rhs),
                IdentityRow(
                    "far_field_near_derivative", "literal", i, j, tau, q_far, 0.5 * mixed[i, j] + 0.5 * hess_g[i, j]
                ),
                IdentityRow("far_field_near_derivative", "derived", i, j, tau, q_far, hess_g[i, j]),
                IdentityRow("near_field_far_derivative", "literal", i, j, tau, q_near, 0.5 * mixed[i, j]),
                IdentityRow("near_field_far_derivative", "derived", i, j, tau, q_near, mixed[i, j]),
            ]
    return rows


@dataclass(frozen=True)
class NecessaryConditionReport:
    peaks: NDArray[np.float64]
    gradient: NDArray[np.float64]  # flattened ∇W_k at the peaks
    grad_norm: float
    radii: NDArray[np.float64] | None
    ratio: float | None  # |∇W_k| / max r

    def to_record(self) -> dict:
        return {
            "peaks": self.peaks.tolist(),
            "gradient": self.gradient.tolist(),
            "grad_norm": self.grad_norm,
            "radii": None if self.radii is None else self.radii.tolist(),
            "ratio": self.ratio,
        }


def necessary_condition_check(ev: GreenEvaluator, peaks, strengths, radii=None) -> NecessaryConditionReport:
    """Kirchhoff-Routh gradient at measured core peaks, and its size relative to the core radius.

    ``peaks`` may be an array of points or a list of core measurements.
    """
    if len(peaks) and hasattr(peaks[0], "peak"):
        if radii is None:
            radii = [c.radius for c in peaks]
        peaks = [c.peak for c in peaks]
    pts = np.asarray(peaks, dtype=float).reshape(-1, 2)
    cfg = VortexConfig(pts, np.asarray(strengths, dtype=float))
    grad, _ = kr_derivatives(ev, cfg)
    norm = float(np.linalg.norm(grad))
    r = None if radii is None else np.asarray(radii, dtype=float)
    return NecessaryConditionReport(
        peaks=pts,
        gradient=np.asarray(grad, dtype=float),
        grad_norm=norm,
        radii=r,
        ratio=None if r is None else norm / float(np.max(r)),
    )


def disk_robin_hessian_at_origin() -> NDArray[np.float64]:
    """Closed form ``∇²h(0) = I/π`` for the unit disk, ``h = -ln(1-|x|²)/(2π)``."""
    return np.eye(2) / math.pi
