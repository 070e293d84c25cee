"""Stream-function solver for concentrated steady vortices.

Solves on a grid

    -Δψ = λ Σ_j 1_{B_δ(x_j)} (ψ - c_j)_+^p   in Ω,    ψ = 0 on ∂Ω,
    λ ∫_{B_δ(x_j)} (ψ - c_j)_+^p = κ_j,

for ``ψ`` and the cut levels ``c_j``.  For ``p >= 1`` the pair is found by a
bordered (semismooth) Newton iteration; the mass constraints are part of the
system, which excludes the trivial branch.  For ``p < 1`` the derivative of
``t_+^p`` is unbounded at the free boundary and a damped Picard iteration
is used, with the cut levels reset after every sweep so that each core
carries its prescribed mass.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spl
from numpy.typing import NDArray
from scipy.optimize import brentq

from ..domain_green import DomainSpec, GreenEvaluator
from ..errors import EmptyCore, NoConvergence, ResolutionWarning
from ..radial_profile import RadialProfile, solve_radial_profile
from .grid import Grid, build_grid

_GRID_CACHE: dict = {}
_PROFILE_CACHE: dict = {}


def get_grid(domain: DomainSpec, n: int) -> Grid:
    """Grids are deterministic functions of (domain, n); reuse factorizations."""
    key = (id(domain), n)
    hit = _GRID_CACHE.get(key)
    if hit is None or hit[0] is not domain:
        if len(_GRID_CACHE) > 6:
            _GRID_CACHE.clear()
        hit = (domain, build_grid(domain, n))
        _GRID_CACHE[key] = hit
    return hit[1]


def get_profile(p: float) -> RadialProfile:
    prof = _PROFILE_CACHE.get(float(p))
    if prof is None:
        prof = solve_radial_profile(p)
        _PROFILE_CACHE[float(p)] = prof
    return prof


def default_mask_radius(domain: DomainSpec, centers) -> float:
    """``0.2 * min(pairwise center distance, distance to the boundary)``."""
    c = np.asarray(centers, dtype=float).reshape(-1, 2)
    d = float(np.min(domain.distance_to_boundary(c)))
    if len(c) > 1:
        diff = c[:, None, :] - c[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        np.fill_diagonal(dist, np.inf)
        d = min(d, float(dist.min()))
    return 0.2 * d


def expected_core_radius(lam: float, p: float, kappa: float) -> float:
    """Leading-order core radius from the radial profile scaling."""
    prof = get_profile(p)
    if prof.kind == "eigen":
        return prof.edge_radius / math.sqrt(lam)
    c = (2.0 * math.pi * abs(prof.dphi_edge) / kappa) ** (p - 1.0)
    return math.sqrt(c / lam)


@dataclass(frozen=True)
class SolveSpec:
    domain: DomainSpec
    lam: float
    p: float
    centers: NDArray[np.float64]
    strengths: NDArray[np.float64]
    grid_n: int = 257
    mask_radius: float | None = None
    psi_tol: float = 1e-10
    mass_tol: float = 1e-10
    max_iter: int = 200
    relax: float = 0.5

    def __post_init__(self):
        c = np.array(self.centers, dtype=float).reshape(-1, 2)
        k = np.array(self.strengths, dtype=float).reshape(-1)
        if len(c) != len(k):
            raise ValueError("one strength per center is required")
        if np.any(~(k > 0)):
            raise ValueError("strengths must be positive")
        if not self.lam >= 1:
            raise ValueError("lambda must be at least 1")
        if not self.p > 0:
            raise ValueError("p must be positive")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "strengths", k)
        delta = self.mask_radius
        if delta is None:
            delta = default_mask_radius(self.domain, c)
        if not delta > 0:
            raise ValueError("mask radius must be positive")
        object.__setattr__(self, "mask_radius", float(delta))
        if not np.all(self.domain.distance_to_boundary(c) > delta) or not np.all(self.domain.contains(c)):
            raise ValueError("masks must lie inside the domain")
        if len(c) > 1:
            diff = c[:, None, :] - c[None, :, :]
            dist = np.sqrt(np.sum(diff * diff, axis=-1))
            np.fill_diagonal(dist, np.inf)
            if dist.min() <= 2 * delta:
                raise ValueError("masks must be pairwise disjoint")

    @property
    def k(self) -> int:
        return len(self.strengths)

    def resolution_ok(self, h: float) -> bool:
        r = min(expected_core_radius(self.lam, self.p, kap) for kap in self.strengths)
        return h <= r / 4.0

    def to_record(self) -> dict:
        return {
            "domain": self.domain.to_record(),
            "lambda": self.lam,
            "p": self.p,
            "centers": self.centers.tolist(),
            "strengths": self.strengths.tolist(),
            "grid_n": self.grid_n,
            "mask_radius": self.mask_radius,
            "psi_tol": self.psi_tol,
            "mass_tol": self.mass_tol,
        }


@dataclass(frozen=True)
class StreamSolution:
    spec: SolveSpec
    grid: Grid
    psi: NDArray[np.float64]  # interior unknowns
    cut_levels: NDArray[np.float64]
    masses: NDArray[np.float64]
    history: tuple = ()
    residual: float = 0.0
    warnings: tuple = ()
    masks: NDArray[np.bool_] | None = field(default=None, repr=False)

    @property
    def psi_field(self) -> NDArray[np.float64]:
        return self.grid.to_field(self.psi)

    def vorticity(self) -> NDArray[np.float64]:
        return source_term(self.psi, self.cut_levels, self.masks, self.spec.lam, self.spec.p)

    def core_nodes(self, j: int) -> NDArray[np.bool_]:
        return self.masks[j] & (self.psi > self.cut_levels[j])


def build_masks(grid: Grid, spec: SolveSpec) -> NDArray[np.bool_]:
    return np.array([grid.disk_mask(c, spec.mask_radius) for c in spec.centers])


def source_term(psi, cut, masks, lam, p):
    out = np.zeros_like(psi)
    for j in range(len(cut)):
        t = np.where(masks[j], np.maximum(psi - cut[j], 0.0), 0.0)
        out += lam * t**p
    return out


def core_mass(psi, cut, mask, lam, p, h) -> float:
    t = np.maximum(psi[mask] - cut, 0.0)
    return float(lam * h * h * np.sum(t**p))


def mass_matching_cut(psi, mask, lam, p, h, kappa) -> float:
    """Cut level giving core mass ``kappa`` for a frozen ``psi`` (mass decreases in the cut)."""
    vals = psi[mask]
    top = float(vals.max())
    if lam * h * h * np.sum(np.maximum(vals - (top - 1.0), 0.0) ** p) < kappa:
        lo = top - 1.0
        step = 1.0
        while lam * h * h * np.sum(np.maximum(vals - lo, 0.0) ** p) < kappa:
            step *= 2.0
            lo = top - step
            if step > 1e12:
                raise EmptyCore("no cut level reaches the prescribed mass")
    else:
        lo = top - 1.0

    def f(c):
        return lam * h * h * np.sum(np.maximum(vals - c, 0.0) ** p) - kappa

    return brentq(f, lo, top, xtol=1e-15, rtol=1e-15, maxiter=500)


def initial_guess(grid: Grid, spec: SolveSpec, masks, offsets=None, radius_factors=None, profile=None):
    """Stream function generated by radial cores of the expected size."""
    prof = get_profile(spec.p) if profile is None else profile
    pts = grid.points()
    omega = np.zeros(len(pts))
    for j, (c, kap) in enumerate(zip(spec.centers, spec.strengths)):
        r = expected_core_radius(spec.lam, spec.p, kap)
        r = min(r, 0.9 * spec.mask_radius)
        r = max(r, 2.5 * grid.h)
        if radius_factors is not None:
            r *= radius_factors[j]
        cc = c if offsets is None else c + offsets[j]
        rho = np.linalg.norm(pts - cc, axis=1) / r
        inside = rho < 1.0
        shape = np.zeros(len(pts))
        shape[inside] = prof.value(rho[inside] * prof.edge_radius)[0] ** spec.p
        total = grid.h**2 * shape.sum()
        if total <= 0:
            raise EmptyCore("grid too coarse to represent the initial core")
        omega += kap * shape / total
    psi = grid.solve(omega)
    cut = np.array(
        [mass_matching_cut(psi, masks[j], spec.lam, spec.p, grid.h, spec.strengths[j]) for j in range(spec.k)]
    )
    return psi, cut


def _mask_rim(grid: Grid, mask) -> NDArray[np.bool_]:
    """Mask nodes with a grid neighbour outside the mask."""
    fld = grid.to_field(mask.astype(float)) > 0.5
    rim = np.zeros_like(fld)
    for diy, dix in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        rim |= fld & ~np.roll(fld, shift=(-diy, -dix), axis=(0, 1))
    return grid.from_field(rim)


def _residuals(grid, spec, masks, psi, cut):
    f = source_term(psi, cut, masks, spec.lam, spec.p)
    F = grid.laplacian @ psi - f
    M = np.array(
        [core_mass(psi, cut[j], masks[j], spec.lam, spec.p, grid.h) - spec.strengths[j] for j in range(spec.k)]
    )
    return F, M, f


def _merit(grid, F, M, spec):
    return float(grid.h**2 * np.sum(F * F) + np.sum((M / spec.strengths) ** 2))


def _newton(grid, spec, masks, psi, cut, history):
    lam, p, h = spec.lam, spec.p, grid.h
    F, M, f = _residuals(grid, spec, masks, psi, cut)
    merit = _merit(grid, F, M, spec)
    stalled = 0
    for it in range(spec.max_iter):
        e = []
        for j in range(spec.k):
            t = np.where(masks[j], psi - cut[j], 0.0)
            act = t > 0
            if not np.any(act):
                raise EmptyCore(f"core {j} vanished during the iteration")
            ej = np.zeros_like(psi)
            ej[act] = lam * p * t[act] ** (p - 1.0)
            e.append(ej)
        e = np.array(e)
        K = (grid.laplacian - sp.diags(e.sum(axis=0))).tocsc()
        lu = spl.splu(K, permc_spec="MMD_AT_PLUS_A")
        u0 = lu.solve(-F)
        U = np.array([lu.solve(ej) for ej in e])
        # h² e_j·δψ - h² S_j δc_j = -M_j with δψ = u0 - Σ U_l δc_l
        mat = np.zeros((spec.k, spec.k))
        rhs = np.zeros(spec.k)
        for j in range(spec.k):
            rhs[j] = -M[j] - h * h * e[j] @ u0
            for l in range(spec.k):
                mat[j, l] = -h * h * e[j] @ U[l]
            mat[j, j] -= h * h * e[j].sum()
        dc = np.linalg.solve(mat, rhs)
        dpsi = u0 - U.T @ dc
        alpha = 1.0
        while True:
            psi_t = psi + alpha * dpsi
            cut_t = cut + alpha * dc
            try:
                F_t, M_t, f_t = _residuals(grid, spec, masks, psi_t, cut_t)
                empty = any(not np.any(masks[j] & (psi_t > cut_t[j])) for j in range(spec.k))
            except FloatingPointError:
                empty = True
            m_t = np.inf if empty else _merit(grid, F_t, M_t, spec)
            if m_t < (1.0 - 1e-4 * alpha) * merit or alpha < 1e-3:
                break
            alpha *= 0.5
        if not np.isfinite(m_t):
            raise EmptyCore("Newton step emptied a core")
        step = alpha * float(np.max(np.abs(dpsi))) / max(float(np.max(np.abs(psi_t))), 1e-300)
        stalled = stalled + 1 if alpha < 1e-2 else 0
        if stalled >= 4:
            raise NoConvergence("Newton line search stalled")
        psi, cut, F, M, f, merit = psi_t, cut_t, F_t, M_t, f_t, m_t
        history.append({"iter": it + 1, "step": step, "alpha": alpha, "merit": merit})
        if step <= spec.psi_tol and np.max(np.abs(M) / spec.strengths) <= spec.mass_tol:
            return psi, cut, F, f
    raise NoConvergence(f"Newton iteration did not converge in {spec.max_iter} steps")


def _picard(grid, spec, masks, psi, cut, history, theta=None, tol=None, max_iter=None):
    lam, p, h = spec.lam, spec.p, grid.h
    theta = spec.relax if theta is None else theta
    tol = spec.psi_tol if tol is None else tol
    max_iter = spec.max_iter * 20 if max_iter is None else max_iter
    for it in range(max_iter):
        cut = np.array(
            [mass_matching_cut(psi, masks[j], lam, p, h, spec.strengths[j]) for j in range(spec.k)]
        )
        f = source_term(psi, cut, masks, lam, p)
        new = grid.solve(f)
        step = float(np.max(np.abs(new - psi))) / max(float(np.max(np.abs(new))), 1e-300)
        psi = (1.0 - theta) * psi + theta * new
        history.append({"iter": it + 1, "step": step})
        if step <= tol:
            cut = np.array(
                [mass_matching_cut(psi, masks[j], lam, p, h, spec.strengths[j]) for j in range(spec.k)]
            )
            f = source_term(psi, cut, masks, lam, p)
            F = grid.laplacian @ psi - f
            return psi, cut, F, f
    raise NoConvergence("Picard iteration did not converge")


def _anderson(grid, spec, masks, psi, history, depth=5, tol=1e-6, max_iter=3000):
    """Mass-normalized Picard sweep with Anderson mixing of the last ``depth`` iterates."""
    lam, p, h = spec.lam, spec.p, grid.h
    xs, rs = [], []
    for it in range(max_iter):
        cut = np.array(
            [mass_matching_cut(psi, masks[j], lam, p, h, spec.strengths[j]) for j in range(spec.k)]
        )
        g = grid.solve(source_term(psi, cut, masks, lam, p))
        r = g - psi
        step = float(np.max(np.abs(r))) / max(float(np.max(np.abs(g))), 1e-300)
        history.append({"iter": it + 1, "step": step})
        if step <= tol:
            cut = np.array(
                [mass_matching_cut(g, masks[j], lam, p, h, spec.strengths[j]) for j in range(spec.k)]
            )
            return g, cut
        xs.append(g)
        rs.append(r)
        if len(rs) > depth + 1:
            xs.pop(0)
            rs.pop(0)
        if len(rs) > 1:
            dr = np.diff(np.array(rs), axis=0)
            dx = np.diff(np.array(xs), axis=0)
            gam = np.linalg.lstsq(dr.T, r, rcond=None)[0]
            psi = g - gam @ dx
        else:
            psi = g
    raise NoConvergence("accelerated Picard iteration did not converge")


def solve_stream_function(
    ev: GreenEvaluator | None,
    spec: SolveSpec,
    init: "StreamSolution | tuple | None" = None,
    grid: Grid | None = None,
) -> StreamSolution:
    """Solve the prescribed-strength free-boundary problem on a grid.

    ``init`` may be a previous :class:`StreamSolution` (possibly on the same
    grid) or a tuple ``(psi, cut_levels)`` of interior values.
    """
    grid = get_grid(spec.domain, spec.grid_n) if grid is None else grid
    masks = build_masks(grid, spec)
    warns = []
    if not spec.resolution_ok(grid.h):
        msg = f"grid spacing {grid.h:.3g} exceeds a quarter of the expected core radius"
        warnings.warn(msg, ResolutionWarning, stacklevel=2)
        warns.append(msg)
    for j in range(spec.k):
        if not np.any(masks[j]):
            raise EmptyCore(f"mask {j} contains no grid nodes")
        r = expected_core_radius(spec.lam, spec.p, spec.strengths[j])
        if r >= spec.mask_radius:
            raise EmptyCore(
                f"core {j}: radial core radius {r:.4g} does not fit in the mask of radius "
                f"{spec.mask_radius:.4g}; lambda is too small for the requested strength"
            )
    if init is None:
        psi, cut = initial_guess(grid, spec, masks)
    elif isinstance(init, StreamSolution):
        psi, cut = init.psi.copy(), init.cut_levels.copy()
    else:
        psi, cut = np.asarray(init[0], dtype=float).copy(), np.asarray(init[1], dtype=float).copy()
    history: list = []
    with np.errstate(over="raise", invalid="raise"):
        if spec.p >= 1.0:
            start = (psi.copy(), cut.copy())
            try:
                psi, cut, F, f = _newton(grid, spec, masks, psi, cut, history)
            except (NoConvergence, EmptyCore):
                # Newton stalls when the start is far away along the nearly neutral
                # translation mode; the mass-normalized sweep carries the core there
                # (Anderson mixing removes the slow contraction), Newton then polishes.
                history.append({"fallback": "anderson"})
                psi, cut = _anderson(grid, spec, masks, start[0], history)
                psi, cut, F, f = _newton(grid, spec, masks, psi, cut, history)
        else:
            psi, cut, F, f = _picard(grid, spec, masks, psi, cut, history)
    for j in range(spec.k):
        if np.any(_mask_rim(grid, masks[j]) & (psi > cut[j])):
            msg = f"core {j} reaches the mask boundary; the mask truncates the vorticity set"
            warnings.warn(msg, ResolutionWarning, stacklevel=2)
            warns.append(msg)
    masses = np.array([core_mass(psi, cut[j], masks[j], spec.lam, spec.p, grid.h) for j in range(spec.k)])
    scale = max(float(np.max(f)), 1e-300)
    residual = float(np.max(np.abs(F))) / scale
    psi.setflags(write=False)
    return StreamSolution(
        spec=spec,
        grid=grid,
        psi=psi,
        cut_levels=cut,
        masses=masses,
        history=tuple(history),
        residual=residual,
        warnings=tuple(warns),
        masks=masks,
    )
