"""Radial core profiles.

For ``p != 1`` the profile is the positive radial solution of
``φ'' + φ'/r + φ^p = 0`` on the unit ball with ``φ(1) = 0``.  It is found
by shooting from ``ψ(0) = 1`` to the first zero ``r0`` of ``ψ`` and then
applying the scaling symmetry ``φ(r) = r0^{2/(p-1)} ψ(r0 r)``, which moves
the zero to ``r = 1`` exactly.

For ``p = 1`` the profile is the order-zero Bessel function on ``[0, γ]``
with ``γ`` its first positive zero; both are evaluated from power series.
Outside the core the profile continues as ``|φ'(edge)| edge ln(edge/r)``,
which is C¹ at the edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import quad, solve_ivp

from .errors import InvalidExponent, NoConvergence

R_START = 1e-4  # series launch radius in the shooting variable


def bessel_j0_series(x):
    """``J0`` by its Maclaurin series (accurate for ``|x| <= 6``)."""
    x = np.asarray(x, dtype=float)
    t = -(x * x) / 4.0
    term = np.ones_like(x)
    total = term.copy()
    for k in range(1, 40):
        term = term * t / (k * k)
        total = total + term
    return total


def bessel_j1_series(x):
    """``J1`` by its Maclaurin series (accurate for ``|x| <= 6``)."""
    x = np.asarray(x, dtype=float)
    t = -(x * x) / 4.0
    term = x / 2.0
    total = term.copy()
    for k in range(1, 40):
        term = term * t / (k * (k + 1))
        total = total + term
    return total


def first_bessel_zero(tol: float = 1e-15) -> float:
    """First positive zero of ``J0`` by safeguarded Newton on the series."""
    lo, hi = 2.0, 3.0  # J0(2) > 0 > J0(3)
    x = 2.4
    for _ in range(100):
        f = float(bessel_j0_series(x))
        if f > 0:
            lo = x
        else:
            hi = x
        step = f / float(bessel_j1_series(x))  # J0' = -J1
        x_new = x + step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= tol * x_new:
            return float(x_new)
        x = x_new
    raise NoConvergence("Bessel zero iteration did not converge")


@dataclass(frozen=True)
class RadialProfile:
    """Core profile for exponent ``p`` on ``[0, edge_radius]``.

    ``grid_r``, ``phi`` and ``dphi`` sample the profile; ``dphi_edge`` is the
    (negative) slope at the free edge.
    """

    p: float
    kind: str
    grid_r: NDArray[np.float64]
    phi: NDArray[np.float64]
    dphi: NDArray[np.float64]
    dphi_edge: float
    edge_radius: float
    scale: float = 1.0  # r0 from the shooting run (1 for p = 1)
    tol: float = 1e-12
    _dense: object = field(default=None, repr=False, compare=False)

    @property
    def flux(self) -> float:
        """``edge_radius * |φ'(edge_radius)|``."""
        return self.edge_radius * abs(self.dphi_edge)

    def value(self, r):
        """``(φ(r), φ'(r))`` for ``0 <= r <= edge_radius``."""
        r = np.clip(np.asarray(r, dtype=float), 0.0, self.edge_radius)
        if self.kind == "eigen":
            return bessel_j0_series(r), -bessel_j1_series(r)
        rr = self.scale * r
        small = rr < R_START
        out_v = np.empty_like(rr)
        out_d = np.empty_like(rr)
        if np.any(~small):
            y = self._dense(np.where(small, R_START, rr).ravel()).reshape((2,) + rr.shape)
            out_v = np.where(small, 0.0, y[0])
            out_d = np.where(small, 0.0, y[1])
        v0, d0 = _series(rr, self.p)
        out_v = np.where(small, v0, out_v)
        out_d = np.where(small, d0, out_d)
        factor = self.scale ** (2.0 / (self.p - 1.0))
        return factor * np.maximum(out_v, 0.0), factor * self.scale * out_d

    def mass(self) -> float:
        """``∫ φ^p dA`` over the core by adaptive quadrature of the profile."""
        p = self.p

        def f(r):
            return float(self.value(r)[0]) ** p * r

        brk = np.linspace(0.0, self.edge_radius, 9)
        total = sum(quad(f, a, b, epsabs=0.0, epsrel=1e-13, limit=200)[0] for a, b in zip(brk[:-1], brk[1:]))
        return 2.0 * np.pi * total

    def to_rows(self):
        return [(float(r), float(v), float(d)) for r, v, d in zip(self.grid_r, self.phi, self.dphi)]


def _series(r, p):
    """Launch values ``ψ ≈ 1 - r²/4 + p r⁴/64`` and derivative."""
    r2 = r * r
    return 1.0 - r2 / 4.0 + p * r2 * r2 / 64.0, -r / 2.0 + p * r2 * r / 16.0


def _shoot(p: float, tol: float):
    def rhs(r, y):
        return [y[1], -y[1] / r - max(y[0], 0.0) ** p]

    def hit_zero(r, y):
        return y[0]

    hit_zero.terminal = True
    hit_zero.direction = -1
    v0, d0 = _series(R_START, p)
    sol = solve_ivp(
        rhs,
        (R_START, 50.0),
        [v0, d0],
        method="DOP853",
        rtol=tol,
        atol=tol * 1e-2,
        events=hit_zero,
        dense_output=True,
    )
    if sol.status != 1 or len(sol.t_events[0]) == 0:
        raise NoConvergence(f"shooting for p={p} found no zero")
    r0 = float(sol.t_events[0][0])
    d_edge = float(sol.y_events[0][0][1])
    return sol.sol, r0, d_edge


def solve_radial_profile(p: float, tol: float = 1e-12, n_grid: int = 2001) -> RadialProfile:
    """Radial core profile for exponent ``p > 0``."""
    p = float(p)
    if not p > 0 or not math.isfinite(p):
        raise InvalidExponent(f"exponent must be positive, got {p}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if p == 1.0:
        gamma = first_bessel_zero()
        r = np.linspace(0.0, gamma, n_grid)
        phi = bessel_j0_series(r)
        phi[-1] = 0.0
        d = -bessel_j1_series(r)
        for a in (r, phi, d):
            a.setflags(write=False)
        return RadialProfile(
            p=1.0,
            kind="eigen",
            grid_r=r,
            phi=phi,
            dphi=d,
            dphi_edge=float(-bessel_j1_series(gamma)),
            edge_radius=gamma,
            tol=tol,
        )
    dense, r0, d_edge = _shoot(p, tol)
    factor = r0 ** (2.0 / (p - 1.0))
    prof = RadialProfile(
        p=p,
        kind="nonlinear",
        grid_r=np.empty(0),
        phi=np.empty(0),
        dphi=np.empty(0),
        dphi_edge=factor * r0 * d_edge,
        edge_radius=1.0,
        scale=r0,
        tol=tol,
        _dense=dense,
    )
    r = np.linspace(0.0, 1.0, n_grid)
    v, d = prof.value(r)
    v = np.array(v)
    v[-1] = 0.0
    d = np.array(d)
    for a in (r, v, d):
        a.setflags(write=False)
    return RadialProfile(**{**prof.__dict__, "grid_r": r, "phi": v, "dphi": d})


def eval_w(profile: RadialProfile, r):
    """Glued profile: ``φ`` inside the edge, ``|φ'(e)| e ln(e/r)`` outside.

    Returns ``(value, radial derivative)``.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be non-negative")
    e = profile.edge_radius
    inside = r <= e
    v_in, d_in = profile.value(np.minimum(r, e))
    with np.errstate(divide="ignore"):
        v_out = profile.flux * np.log(e / np.maximum(r, e))
        d_out = -profile.flux / np.maximum(r, e)
    v = np.where(inside, v_in, v_out)
    d = np.where(inside, d_in, d_out)
    if v.ndim == 0:
        return float(v), float(d)
    return v, d


def eval_w_bar(profile: RadialProfile, r):
    """Eigen-core limit profile with the far field written as ``γ|φ'(γ)| ln(1/r)``.

    Unlike :func:`eval_w` this far field is not zero at ``r = γ``; it differs
    from the continuous gluing by the constant ``γ|φ'(γ)| ln(1/γ)``.
    """
    if profile.kind != "eigen":
        raise InvalidExponent("the ln(1/r) far field is defined for p = 1 only")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("r must be positive")
    e = profile.edge_radius
    v_in, d_in = profile.value(np.minimum(r, e))
    v = np.where(r <= e, v_in, profile.flux * np.log(1.0 / r))
    d = np.where(r <= e, d_in, -profile.flux / r)
    if v.ndim == 0:
        return float(v), float(d)
    return v, d
