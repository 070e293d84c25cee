"""Approximate multi-vortex solutions built from truncated radial cores.

A single core of amplitude ``a`` on ``B_R(0)`` solves ``-ε²Δu = (u - a)_+^p``
with ``u = 0`` on ``∂B_R``.  For ``p != 1`` it is

    W(ρ) = a + (ε/s)^{2/(p-1)} φ(ρ/s)      for ρ <= s,
    W(ρ) = a ln(ρ/R) / ln(s/R)             for s <= ρ <= R,

where the core radius ``s`` makes ``W`` C¹.  For ``p = 1`` the core is the
Bessel eigenfunction with radius ``γε`` and amplitude ``A``.  Each core is
corrected by a harmonic function so that it vanishes on ``∂Ω``:

    PW(y) = W(y - x) - a / ln(R/s) * (ln R + 2π H(y, x)),

and the ansatz is the sum of the corrected cores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import brentq, minimize_scalar

from .domain_green import TWO_PI, GreenEvaluator
from .errors import CoreOverlap, InvalidExponent, NoConvergence, NoRoot
from .radial_profile import RadialProfile


def enclosing_radius(ev: GreenEvaluator) -> float:
    """``R = 2 * diameter``: then ``Ω ⊂ B_R(x)`` for every ``x ∈ Ω``."""
    return 2.0 * ev.domain.diameter


def _core_equation_log(t, eps, a, R, profile):
    """Logarithm of ``(ε/s)^{2/(p-1)} |φ'(1)| ln(R/s) / a`` at ``s = e^t``."""
    m = 2.0 / (profile.p - 1.0)
    return m * (math.log(eps) - t) + math.log(abs(profile.dphi_edge)) + math.log(math.log(R) - t) - math.log(a)


def core_radius_residual(s, eps, a, R, profile) -> float:
    """Relative mismatch of the C¹ gluing condition at core radius ``s``."""
    m = 2.0 / (profile.p - 1.0)
    lhs = (eps / s) ** m * abs(profile.dphi_edge) * math.log(R / s)
    return abs(lhs - a) / a


def solve_core_radius(eps: float, a: float, R: float, profile: RadialProfile) -> float:
    """Small root ``s`` of ``(ε/s)^{2/(p-1)} φ'(1) = a / ln(s/R)``."""
    if profile.kind == "eigen":
        raise InvalidExponent("p = 1 has core radius γε; there is no equation to solve")
    if not (eps > 0 and a > 0 and R > 0):
        raise ValueError("eps, a and R must be positive")
    p = profile.p
    lo = math.log(eps) - 60.0
    if p > 1:
        hi = math.log(R) - 1e-14
    else:
        # the left side vanishes at both ends and peaks at R exp(-(1-p)/2)
        hi = math.log(R) - (1.0 - p) / 2.0
    f_lo = _core_equation_log(lo, eps, a, R, profile)
    f_hi = _core_equation_log(hi, eps, a, R, profile)
    if not (f_lo * f_hi < 0):
        raise NoRoot(f"no core radius in (0, R) for eps={eps}, a={a}, R={R}, p={p}")
    t = brentq(_core_equation_log, lo, hi, args=(eps, a, R, profile), xtol=1e-15, rtol=1e-15, maxiter=500)
    return math.exp(t)


def core_radius_expansion_ratio(eps: float, a: float, s: float, profile: RadialProfile) -> float:
    """``s / [ε (φ'(1) ln ε / a)^{(p-1)/2}]``, which tends to 1 as ``ε → 0``."""
    p = profile.p
    lead = eps * (abs(profile.dphi_edge) * abs(math.log(eps)) / a) ** ((p - 1.0) / 2.0)
    return s / lead


@dataclass(frozen=True)
class AnsatzParams:
    eps: float
    R: float
    centers: NDArray[np.float64]
    amplitudes: NDArray[np.float64]
    core_radii: NDArray[np.float64]
    cut_levels: NDArray[np.float64]
    profile: RadialProfile
    targets: NDArray[np.float64] | None = None
    iterations: int = 0
    residual: float = 0.0

    @property
    def k(self) -> int:
        return len(self.amplitudes)

    def amplitude_A(self, j: int) -> float:
        """Core amplitude: ``(ε/s)^{2/(p-1)}``, or ``A`` of the eigen core for ``p = 1``."""
        a = self.amplitudes[j]
        prof = self.profile
        if prof.kind == "eigen":
            g = prof.edge_radius
            return a / (g * prof.dphi_edge * math.log(g * self.eps / self.R))
        return (self.eps / self.core_radii[j]) ** (2.0 / (prof.p - 1.0))

    def to_record(self) -> dict:
        return {
            "eps": self.eps,
            "R": self.R,
            "p": self.profile.p,
            "centers": np.asarray(self.centers).tolist(),
            "amplitudes": np.asarray(self.amplitudes).tolist(),
            "core_radii": np.asarray(self.core_radii).tolist(),
            "cut_levels": np.asarray(self.cut_levels).tolist(),
            "targets": None if self.targets is None else np.asarray(self.targets).tolist(),
            "iterations": self.iterations,
            "residual": self.residual,
        }


def _core_radial(params: AnsatzParams, j: int, rho):
    """Radial value and derivative of the j-th unprojected core."""
    prof = params.profile
    a = params.amplitudes[j]
    s = params.core_radii[j]
    R = params.R
    rho = np.asarray(rho, dtype=float)
    inside = rho <= s
    amp = params.amplitude_A(j)
    scale = params.eps if prof.kind == "eigen" else s
    phi, dphi = prof.value(np.minimum(rho, s) / scale)
    v_in = a + amp * phi
    d_in = amp * dphi / scale
    lg = math.log(s / R)
    with np.errstate(divide="ignore"):
        v_out = a * np.log(np.maximum(rho, s) / R) / lg
        d_out = a / (np.maximum(rho, s) * lg)
    return np.where(inside, v_in, v_out), np.where(inside, d_in, d_out)


def eval_core_profile(params: AnsatzParams, j: int, y) -> NDArray[np.float64]:
    """Unprojected core ``W(y - x_j)``."""
    y = np.asarray(y, dtype=float)
    rho = np.linalg.norm(y - params.centers[j], axis=-1)
    return _core_radial(params, j, rho)[0]


def eval_core_gradient(params: AnsatzParams, j: int, y) -> NDArray[np.float64]:
    y = np.asarray(y, dtype=float)
    d = y - params.centers[j]
    rho = np.linalg.norm(d, axis=-1)
    dr = _core_radial(params, j, rho)[1]
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(rho[..., None] > 0, d / rho[..., None], 0.0)
    return dr[..., None] * unit


def _coupling(params: AnsatzParams, j: int) -> float:
    return params.amplitudes[j] / math.log(params.R / params.core_radii[j])


def project_profile(ev: GreenEvaluator, params: AnsatzParams, j: int, y) -> NDArray[np.float64]:
    """``PW_j(y)``, the j-th core minus its harmonic boundary correction."""
    y = np.asarray(y, dtype=float)
    x = params.centers[j]
    g = math.log(params.R) + TWO_PI * ev.regular(y, x)
    return eval_core_profile(params, j, y) - _coupling(params, j) * g


def project_profile_gradient(ev: GreenEvaluator, params: AnsatzParams, j: int, y):
    y = np.asarray(y, dtype=float)
    x = params.centers[j]
    return eval_core_gradient(params, j, y) - _coupling(params, j) * TWO_PI * ev.regular_dy(y, x)


@dataclass(frozen=True)
class Ansatz:
    """Evaluator for the sum of projected cores."""

    ev: GreenEvaluator
    params: AnsatzParams

    def __call__(self, y):
        return sum(project_profile(self.ev, self.params, j, y) for j in range(self.params.k))

    def gradient(self, y):
        return sum(project_profile_gradient(self.ev, self.params, j, y) for j in range(self.params.k))


def _core_radius_for(eps, a, R, profile):
    if profile.kind == "eigen":
        return profile.edge_radius * eps
    return solve_core_radius(eps, a, R, profile)


def _recenter(params: AnsatzParams, ev: GreenEvaluator, j: int, z) -> NDArray[np.float64]:
    """Center ``x`` with ``∇U(z) = 0`` when the other terms are frozen."""
    others = np.zeros(2)
    for i in range(params.k):
        if i != j:
            others += project_profile_gradient(ev, params, i, z)
    others -= _coupling(params, j) * TWO_PI * ev.regular_dy(z, params.centers[j])
    mag = float(np.linalg.norm(others))
    if mag == 0.0:
        return np.asarray(z, dtype=float).copy()
    s = params.core_radii[j]

    def slope(r):
        return -float(_core_radial(params, j, r)[1])

    peak = minimize_scalar(lambda r: -slope(r), bounds=(0.0, s), method="bounded", options={"xatol": 1e-14 * s})
    r_max = float(peak.x)
    if slope(r_max) <= mag:
        raise NoConvergence("background gradient exceeds the core's restoring slope")
    rho = brentq(lambda r: slope(r) - mag, 0.0, r_max, xtol=1e-16 * s + 1e-300)
    # W'(ρ) (z - x)/ρ = -others, with W' < 0
    return np.asarray(z, dtype=float) - rho * others / mag


def assemble_ansatz(
    ev: GreenEvaluator,
    eps: float,
    cut_levels,
    initial_centers,
    profile: RadialProfile,
    R: float | None = None,
    tol: float = 1e-10,
    max_iter: int = 500,
    damping: float = 0.5,
) -> Ansatz:
    """Solve the matching conditions for amplitudes, core radii and centers.

    ``initial_centers`` are the prescribed maximum points ``z_j``; the core
    centers ``x_j`` are moved (with damping) until ``∇U(z_j) = 0``.  The
    amplitudes satisfy, at fixed centers and radii, the linear system

        a_i (1 - g(x_i, x_i) / ln(R/s_i)) + Σ_{j≠i} a_j 2πG(x_i, x_j) / ln(R/s_j) = κ_i,

    which makes ``U`` equal ``κ_i`` on the i-th core boundary up to
    first-order terms.
    """
    kappa = np.asarray(cut_levels, dtype=float).reshape(-1)
    z = np.asarray(initial_centers, dtype=float).reshape(-1, 2)
    if len(kappa) != len(z):
        raise ValueError("one cut level per center is required")
    if np.any(kappa <= 0):
        raise ValueError("cut levels must be positive")
    for zj in z:
        ev.check_interior(zj)
    R = enclosing_radius(ev) if R is None else float(R)
    k = len(kappa)
    x = z.copy()
    a = kappa.copy()
    s = np.array([_core_radius_for(eps, a[j], R, profile) for j in range(k)])
    change = np.inf
    for it in range(1, max_iter + 1):
        for i in range(k):
            for j in range(i + 1, k):
                if np.linalg.norm(x[i] - x[j]) <= s[i] + s[j]:
                    raise CoreOverlap(f"cores {i} and {j} intersect")
        logs = np.log(R / s)
        mat = np.zeros((k, k))
        for i in range(k):
            g_ii = math.log(R) + TWO_PI * float(ev.regular(x[i], x[i]))
            mat[i, i] = 1.0 - g_ii / logs[i]
            for j in range(k):
                if j != i:
                    mat[i, j] = TWO_PI * float(ev.green(x[i], x[j])) / logs[j]
        a_new = np.linalg.solve(mat, kappa)
        if np.any(a_new <= 0):
            raise NoConvergence("amplitude system produced a non-positive amplitude")
        s_new = np.array([_core_radius_for(eps, a_new[j], R, profile) for j in range(k)])
        params = AnsatzParams(eps, R, x, a_new, s_new, kappa, profile, z)
        x_new = x.copy()
        for j in range(k):
            target = _recenter(params, ev, j, z[j])
            x_new[j] = x[j] + damping * (target - x[j])
        change = max(
            float(np.max(np.abs(a_new - a) / a_new)),
            float(np.max(np.abs(s_new - s) / s_new)),
            float(np.max(np.linalg.norm(x_new - x, axis=1) / s_new)),
        )
        a, s, x = a_new, s_new, x_new
        if change <= tol:
            params = AnsatzParams(eps, R, x, a, s, kappa, profile, z, it, change)
            return Ansatz(ev, params)
    raise NoConvergence(f"ansatz iteration stalled at change {change:.3e}")
