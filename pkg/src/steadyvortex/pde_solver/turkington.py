"""Vorticity method: maximize a penalized kinetic energy over a vorticity class.

The functional is

    E(ω) = ½ ∫ ω G ω  -  λ ∫ F*(ω/λ),    F*(s) = p s^{(p+1)/p} / (p + 1),

over ``0 <= ω <= λΛ`` with ``∫ω = κ``.  Each step linearizes the convex
quadratic term at the current iterate and maximizes exactly:

    ω⁺ = min(λΛ, λ (ψ - c)_+^p),    ψ = G ω,

with the scalar ``c`` fixed by the mass constraint.  Because the quadratic
term is convex this is a minorize-maximize scheme and E never decreases
(for the symmetric part of the discrete Green operator).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import brentq

from ..domain_green import GreenEvaluator
from ..errors import CapActive, NoConvergence
from .grid import Grid
from .stream import SolveSpec, get_grid


def conjugate_penalty(s, p: float):
    """``F*(s) = ∫_0^s r^{1/p} dr = p s^{(p+1)/p} / (p+1)`` for ``s >= 0``."""
    s = np.maximum(np.asarray(s, dtype=float), 0.0)
    return p * s ** ((p + 1.0) / p) / (p + 1.0)


@dataclass(frozen=True)
class VorticityField:
    grid: Grid
    omega: NDArray[np.float64]  # interior unknowns
    psi: NDArray[np.float64]  # G ω, zero on the boundary
    mu: float  # boundary level of the stream function ψ = Gω + μ
    cap: float
    energy: float
    energy_history: NDArray[np.float64]
    iterations: int
    cap_active: bool = False

    @property
    def cut_level(self) -> float:
        return -self.mu


def energy(grid: Grid, omega, psi, lam: float, p: float) -> float:
    h2 = grid.h * grid.h
    return float(0.5 * h2 * np.dot(omega, psi) - lam * h2 * np.sum(conjugate_penalty(omega / lam, p)))


def _update(psi, lam, p, cap, kappa, h2):
    top = float(psi.max())

    def mass(c):
        return h2 * np.sum(np.minimum(lam * cap, lam * np.maximum(psi - c, 0.0) ** p)) - kappa

    lo = top - 1.0
    step = 1.0
    while mass(lo) < 0:
        step *= 2.0
        lo = top - step
        if step > 1e12:
            raise NoConvergence("mass constraint cannot be met under the cap")
    c = brentq(mass, lo, top, xtol=1e-15, rtol=1e-15, maxiter=500)
    return np.minimum(lam * cap, lam * np.maximum(psi - c, 0.0) ** p), c


def maximize_vorticity_energy(
    ev: GreenEvaluator | None,
    spec: SolveSpec,
    cap: float | None = None,
    tol: float = 1e-11,
    max_iter: int = 20000,
    omega0: NDArray[np.float64] | None = None,
    grid: Grid | None = None,
) -> VorticityField:
    """Iterate the vorticity method from a uniform start (or ``omega0``)."""
    if spec.k != 1:
        raise ValueError("the vorticity method is implemented for a single vortex (k = 1)")
    grid = get_grid(spec.domain, spec.grid_n) if grid is None else grid
    lam, p = spec.lam, spec.p
    kappa = float(spec.strengths[0])
    cap_val = np.inf if cap is None else float(cap)
    h2 = grid.h * grid.h
    if omega0 is None:
        omega = np.full(grid.n_unknowns, kappa / (h2 * grid.n_unknowns))
    else:
        omega = np.asarray(omega0, dtype=float).copy()
    psi = grid.solve(omega)
    energies = [energy(grid, omega, psi, lam, p)]
    c = 0.0
    for it in range(1, max_iter + 1):
        new, c = _update(psi, lam, p, cap_val, kappa, h2)
        change = float(np.max(np.abs(new - omega))) / max(float(np.max(new)), 1e-300)
        omega = new
        psi = grid.solve(omega)
        energies.append(energy(grid, omega, psi, lam, p))
        if change <= tol:
            break
    else:
        raise NoConvergence(f"vorticity iteration did not settle in {max_iter} steps")
    active = bool(np.isfinite(cap_val) and np.any(omega >= lam * cap_val * (1 - 1e-12)))
    if active:
        warnings.warn("vorticity cap is active at the maximizer", CapActive, stacklevel=2)
    omega.setflags(write=False)
    psi.setflags(write=False)
    return VorticityField(
        grid=grid,
        omega=omega,
        psi=psi,
        mu=-float(c),
        cap=cap_val,
        energy=energies[-1],
        energy_history=np.array(energies),
        iterations=it,
        cap_active=active,
    )
