"""Kirchhoff-Routh function of k point vortices and its Hamiltonian flow.

    W(x_1..x_k) = -Σ_{i≠j} κ_i κ_j G(x_i, x_j) + Σ_i κ_i² h(x_i)

(the first sum runs over ordered pairs).  Point vortices move by
``dx_i/dt = -∇⊥_{x_i} W / κ_i`` with ``(a, b)⊥ = (b, -a)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
from numpy.typing import NDArray

from .domain_green import GreenEvaluator
from .errors import CollisionDetected, CoincidentVortices, LeftDomain, NoConvergence, OutsideDomain

DEGENERACY_THRESHOLD = 1e-6
COLLISION_FRACTION = 1e-6


@dataclass(frozen=True)
class VortexConfig:
    points: NDArray[np.float64]
    strengths: NDArray[np.float64]

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, 2)
        kap = np.array(self.strengths, dtype=float).reshape(-1)
        if len(pts) != len(kap) or len(pts) == 0:
            raise ValueError("points and strengths must have the same non-zero length")
        if np.any(~(kap > 0)):
            raise ValueError("vortex strengths must be positive")
        pts.setflags(write=False)
        kap.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "strengths", kap)

    @property
    def k(self) -> int:
        return len(self.strengths)

    def flat(self) -> NDArray[np.float64]:
        return self.points.reshape(-1).copy()

    def with_points(self, pts) -> "VortexConfig":
        return VortexConfig(np.asarray(pts, dtype=float).reshape(-1, 2), self.strengths)


@dataclass(frozen=True)
class CriticalPointReport:
    location: NDArray[np.float64]
    grad_norm: float
    hessian_eigenvalues: NDArray[np.float64]
    classification: str
    iterations: int = 0

    def to_record(self) -> dict:
        return {
            "location": self.location.tolist(),
            "grad_norm": float(self.grad_norm),
            "hessian_eigenvalues": self.hessian_eigenvalues.tolist(),
            "classification": self.classification,
            "iterations": int(self.iterations),
        }


@dataclass(frozen=True)
class Trajectory:
    times: NDArray[np.float64]
    states: NDArray[np.float64]  # (n_samples, k, 2)
    energy: NDArray[np.float64]

    def relative_drift(self) -> float:
        w0 = self.energy[0]
        scale = abs(w0) if w0 != 0 else 1.0
        return float(np.max(np.abs(self.energy - w0)) / scale)

    def rows(self):
        k = self.states.shape[1]
        header = ["t"] + [f"x{i + 1}_{c}" for i in range(k) for c in (1, 2)] + ["W"]
        body = [
            [float(t)] + [float(v) for v in s.reshape(-1)] + [float(w)]
            for t, s, w in zip(self.times, self.states, self.energy)
        ]
        return header, body


def min_pair_distance(pts) -> float:
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    if len(pts) < 2:
        return np.inf
    d = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.sum(d * d, axis=-1))
    np.fill_diagonal(dist, np.inf)
    return float(np.min(dist))


def _validate(ev: GreenEvaluator, cfg: VortexConfig) -> None:
    if not np.all(ev.domain.contains(cfg.points)):
        raise OutsideDomain("a vortex lies outside the domain")
    if min_pair_distance(cfg.points) < ev.coincide_eps * ev.domain.diameter:
        raise CoincidentVortices("two vortices coincide")


def kr_value(ev: GreenEvaluator, cfg: VortexConfig) -> float:
    _validate(ev, cfg)
    x, kap = cfg.points, cfg.strengths
    total = 0.0
    for i in range(cfg.k):
        total += kap[i] ** 2 * ev.robin(x[i])
        for j in range(cfg.k):
            if i != j:
                total -= kap[i] * kap[j] * float(ev.green(x[i], x[j]))
    return float(total)


def kr_derivatives(ev: GreenEvaluator, cfg: VortexConfig):
    """Gradient and Hessian of W in flattened coordinates ``(x_11, x_12, ..., x_k2)``."""
    _validate(ev, cfg)
    x, kap = cfg.points, cfg.strengths
    k = cfg.k
    grad = np.zeros((k, 2))
    hess = np.zeros((k, 2, k, 2))
    for i in range(k):
        grad[i] += kap[i] ** 2 * ev.robin_grad(x[i])
        hess[i, :, i, :] += kap[i] ** 2 * ev.robin_hess(x[i])
        for j in range(k):
            if i == j:
                continue
            c = -kap[i] * kap[j]
            grad[i] += c * ev.green_dy(x[i], x[j])
            grad[j] += c * ev.green_dx(x[i], x[j])
            hess[i, :, i, :] += c * ev.green_dyy(x[i], x[j])
            hess[j, :, j, :] += c * ev.green_dxx(x[i], x[j])
            mixed = c * ev.green_dydx(x[i], x[j])
            hess[i, :, j, :] += mixed
            hess[j, :, i, :] += mixed.T
    return grad.reshape(-1), hess.reshape(2 * k, 2 * k)


def classify(eigs: NDArray[np.float64], threshold: float = DEGENERACY_THRESHOLD) -> str:
    big = np.max(np.abs(eigs))
    if np.min(np.abs(eigs)) < threshold * big:
        return "degenerate"
    if np.all(eigs > 0):
        return "nondegenerate_min"
    if np.all(eigs < 0):
        return "nondegenerate_max"
    return "nondegenerate_saddle"


def _admissible(ev: GreenEvaluator, flat: NDArray) -> bool:
    pts = flat.reshape(-1, 2)
    if not np.all(ev.domain.contains(pts)):
        return False
    return min_pair_distance(pts) >= COLLISION_FRACTION * ev.domain.diameter


def find_critical_point(
    ev: GreenEvaluator, initial: VortexConfig, tol: float = 1e-10, max_iter: int = 100
) -> CriticalPointReport:
    """Damped Newton iteration on ``∇W = 0`` with merit ``|∇W|``.

    Steps are halved when they leave the domain, bring two vortices together
    or fail to decrease the merit.  If plain Newton stalls a Levenberg
    regularization ``(HᵀH + μI)`` is tried before giving up.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    kap = initial.strengths
    z = initial.flat()
    g, hm = kr_derivatives(ev, initial)
    for it in range(max_iter):
        gn = float(np.linalg.norm(g))
        if gn <= tol:
            eigs = np.linalg.eigvalsh(0.5 * (hm + hm.T))
            return CriticalPointReport(z.reshape(-1, 2).copy(), gn, eigs, classify(eigs), it)
        try:
            step = -np.linalg.solve(hm, g)
        except np.linalg.LinAlgError:
            step = -g
        directions = [step]
        mu = 1e-3 * float(np.max(np.abs(hm)))
        for _ in range(6):
            directions.append(-np.linalg.solve(hm.T @ hm + mu * np.eye(len(z)), hm.T @ g))
            mu *= 10.0
        accepted = False
        exited = False
        for direc in directions:
            alpha = 1.0
            while alpha > 1e-12:
                trial = z + alpha * direc
                if not _admissible(ev, trial):
                    exited = True
                    alpha *= 0.5
                    continue
                g_new, h_new = kr_derivatives(ev, VortexConfig(trial.reshape(-1, 2), kap))
                if np.linalg.norm(g_new) < (1.0 - 1e-4 * alpha) * gn:
                    z, g, hm = trial, g_new, h_new
                    accepted = True
                    break
                alpha *= 0.5
            if accepted:
                break
        if not accepted:
            if exited:
                raise LeftDomain("backtracking stalled at the domain boundary or a collision")
            raise NoConvergence(f"no descent direction for |∇W| = {gn:.3e}")
    raise NoConvergence(f"iteration cap {max_iter} reached, |∇W| = {np.linalg.norm(g):.3e}")


# ---------------------------------------------------------------------------
# dynamics


@numba.njit(cache=False)
def _disk_kr_grad(pts, kap):
    k = pts.shape[0]
    g = np.zeros((k, 2))
    for i in range(k):
        x0, x1 = pts[i, 0], pts[i, 1]
        r2 = x0 * x0 + x1 * x1
        c = kap[i] * kap[i] / (np.pi * (1.0 - r2))
        g[i, 0] += c * x0
        g[i, 1] += c * x1
        for j in range(k):
            if j == i:
                continue
            y0, y1 = pts[j, 0], pts[j, 1]
            d0, d1 = x0 - y0, x1 - y1
            dd = d0 * d0 + d1 * d1
            yy = y0 * y0 + y1 * y1
            q = yy * r2 - 2.0 * (x0 * y0 + x1 * y1) + 1.0
            # grad_x G(x, y) for the disk, doubled for the two ordered pairs
            gx0 = -d0 / dd / (2.0 * np.pi) + (2.0 * yy * x0 - 2.0 * y0) / q / (4.0 * np.pi)
            gx1 = -d1 / dd / (2.0 * np.pi) + (2.0 * yy * x1 - 2.0 * y1) / q / (4.0 * np.pi)
            g[i, 0] -= 2.0 * kap[i] * kap[j] * gx0
            g[i, 1] -= 2.0 * kap[i] * kap[j] * gx1
    return g


@numba.njit(cache=False)
def _disk_velocity(pts, kap):
    g = _disk_kr_grad(pts, kap)
    v = np.empty_like(g)
    for i in range(pts.shape[0]):
        v[i, 0] = -g[i, 1] / kap[i]
        v[i, 1] = g[i, 0] / kap[i]
    return v


@numba.njit(cache=False)
def _disk_rk4(pts, kap, dt, n_steps, every, min_sep):
    k = pts.shape[0]
    n_out = n_steps // every + 1
    out = np.empty((n_out, k, 2))
    out[0] = pts
    x = pts.copy()
    status = 0
    last = 0
    for s in range(1, n_steps + 1):
        k1 = _disk_velocity(x, kap)
        k2 = _disk_velocity(x + 0.5 * dt * k1, kap)
        k3 = _disk_velocity(x + 0.5 * dt * k2, kap)
        k4 = _disk_velocity(x + dt * k3, kap)
        x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        for i in range(k):
            if x[i, 0] * x[i, 0] + x[i, 1] * x[i, 1] >= 1.0:
                status = 1
            for j in range(i + 1, k):
                d0 = x[i, 0] - x[j, 0]
                d1 = x[i, 1] - x[j, 1]
                if d0 * d0 + d1 * d1 < min_sep * min_sep:
                    status = 2
        if s % every == 0:
            last = s // every
            out[last] = x
        if status != 0:
            break
    return out[: last + 1], status


def _generic_velocity(ev, kap, x):
    g, _ = kr_derivatives(ev, VortexConfig(x, kap))
    g = g.reshape(-1, 2)
    return np.c_[-g[:, 1], g[:, 0]] / kap[:, None]


def integrate_point_vortices(
    ev: GreenEvaluator, cfg: VortexConfig, T: float, dt: float, sample_every: int | None = None
) -> Trajectory:
    """Classical RK4 integration of the point-vortex system."""
    if not dt > 0 or not T > 0:
        raise ValueError("T and dt must be positive")
    _validate(ev, cfg)
    n_steps = int(round(T / dt))
    if sample_every is None:
        sample_every = max(1, n_steps // 1000)
    kap = np.asarray(cfg.strengths, dtype=float)
    min_sep = COLLISION_FRACTION * ev.domain.diameter
    if ev.method == "images_analytic":
        states, status = _disk_rk4(cfg.points.copy(), kap, dt, n_steps, sample_every, min_sep)
    else:
        x = cfg.points.copy()
        samples = [x.copy()]
        status = 0
        for s in range(1, n_steps + 1):
            k1 = _generic_velocity(ev, kap, x)
            k2 = _generic_velocity(ev, kap, x + 0.5 * dt * k1)
            k3 = _generic_velocity(ev, kap, x + 0.5 * dt * k2)
            k4 = _generic_velocity(ev, kap, x + dt * k3)
            x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(ev.domain.contains(x)):
                status = 1
            elif min_pair_distance(x) < min_sep:
                status = 2
            if s % sample_every == 0:
                samples.append(x.copy())
            if status:
                break
        states = np.array(samples)
    if status == 1:
        raise LeftDomain("a point vortex left the domain")
    if status == 2:
        raise CollisionDetected("two point vortices collided")
    times = dt * sample_every * np.arange(len(states))
    energy = np.array([kr_value(ev, VortexConfig(s, kap)) for s in states])
    return Trajectory(times=times, states=states, energy=energy)
