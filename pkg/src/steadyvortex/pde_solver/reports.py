"""Cross-checks and diagnostics built on converged grid solutions."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spl
from numpy.typing import NDArray
from scipy import ndimage

from ..ansatz import Ansatz, AnsatzParams, assemble_ansatz
from ..domain_green import GreenEvaluator
from ..radial_profile import RadialProfile
from .measure import CoreMeasurement, level_contours, measure_vortex_cores
from .stream import (
    SolveSpec,
    StreamSolution,
    build_masks,
    expected_core_radius,
    get_grid,
    get_profile,
    initial_guess,
    solve_stream_function,
)
from .turkington import VorticityField, maximize_vorticity_energy


def relative_discrepancy(a, b) -> float:
    """``max|a - b| / max|a|``."""
    a = np.asarray(a, dtype=float)
    return float(np.max(np.abs(a - np.asarray(b, dtype=float))) / max(float(np.max(np.abs(a))), 1e-300))


# ----------------------------------------------------------------------------
# stream function vs vorticity method


@dataclass(frozen=True)
class MethodComparison:
    relative_discrepancy: float
    support_symdiff_area: float
    support_bound: float  # 4 h (contour length)
    cut_stream: float
    cut_vorticity: float  # -μ
    stream_iterations: int
    vorticity_iterations: int

    def to_record(self) -> dict:
        return dataclasses.asdict(self)


def compare_methods(
    ev: GreenEvaluator | None,
    spec: SolveSpec,
    stream: StreamSolution | None = None,
    vort: VorticityField | None = None,
) -> MethodComparison:
    if spec.k != 1:
        raise ValueError("method comparison needs a single vortex")
    stream = solve_stream_function(ev, spec) if stream is None else stream
    grid = stream.grid
    vort = maximize_vorticity_energy(ev, spec, grid=grid) if vort is None else vort
    # Gω already vanishes on the boundary, i.e. it is ψ shifted by the boundary level μ.
    disc = relative_discrepancy(stream.psi, vort.psi)
    s_supp = stream.vorticity() > 0
    v_supp = vort.omega > 0
    area = grid.h**2 * float(np.sum(s_supp ^ v_supp))
    length = 0.0
    for c in level_contours(grid, stream.psi_field, float(stream.cut_levels[0])):
        length += float(np.sum(np.sqrt(np.sum(np.diff(c, axis=0) ** 2, axis=1))))
    return MethodComparison(
        relative_discrepancy=disc,
        support_symdiff_area=area,
        support_bound=4.0 * grid.h * length,
        cut_stream=float(stream.cut_levels[0]),
        cut_vorticity=float(-vort.mu),
        stream_iterations=len(stream.history),
        vorticity_iterations=vort.iterations,
    )


# ----------------------------------------------------------------------------
# asymptotic laws


@dataclass(frozen=True)
class AsymptoticRow:
    vortex: int
    lam: float
    p: float
    kappa: float
    cut_level: float
    radius: float
    strength_ratio: float  # 4π κ̃ / (κ ln λ)
    radius_ratio: float  # κ(λr²)^{1/(p-1)}/(2π|φ'(1)|), or r √λ / γ for p = 1
    core_size_monitor: float  # λ (2r)², bounded for p > 1
    mask_radius: float

    @property
    def strength_deviation(self) -> float:
        return self.strength_ratio - 1.0

    @property
    def radius_deviation(self) -> float:
        return self.radius_ratio - 1.0

    def to_record(self) -> dict:
        out = dataclasses.asdict(self)
        out["strength_deviation"] = self.strength_deviation
        out["radius_deviation"] = self.radius_deviation
        return out


def asymptotic_rows(
    cores: list[CoreMeasurement], lam: float, p: float, strengths, profile: RadialProfile, mask_radius: float
) -> list[AsymptoticRow]:
    rows = []
    for j, (core, kap) in enumerate(zip(cores, np.asarray(strengths, dtype=float))):
        r = core.radius
        if profile.kind == "eigen":
            rr = r * math.sqrt(lam) / profile.edge_radius
        else:
            rr = kap * (lam * r * r) ** (1.0 / (p - 1.0)) / (2.0 * math.pi * abs(profile.dphi_edge))
        rows.append(
            AsymptoticRow(
                vortex=j,
                lam=float(lam),
                p=float(p),
                kappa=float(kap),
                cut_level=core.cut_level,
                radius=r,
                strength_ratio=4.0 * math.pi * core.cut_level / (kap * math.log(lam)),
                radius_ratio=float(rr),
                core_size_monitor=float(lam * 4.0 * r * r),
                mask_radius=float(mask_radius),
            )
        )
    return rows


def asymptotic_report(
    sol: StreamSolution, profile: RadialProfile | None = None, cores: list[CoreMeasurement] | None = None
) -> list[AsymptoticRow]:
    spec = sol.spec
    profile = get_profile(spec.p) if profile is None else profile
    cores = measure_vortex_cores(sol) if cores is None else cores
    return asymptotic_rows(cores, spec.lam, spec.p, spec.strengths, profile, spec.mask_radius)


# ----------------------------------------------------------------------------
# comparison with the projected-core approximation


@dataclass(frozen=True)
class Rescaling:
    """``u = scale ψ`` solves ``-Δu = lam_bar Σ 1_B (u - kappa_lambda_j)_+^p``."""

    scale: float
    lam_bar: float
    eps: float
    kappa_lambda: NDArray[np.float64]


def rescale_solution(sol: StreamSolution, cores: list[CoreMeasurement], vortex: int = 0) -> Rescaling:
    """Normalization built from the measured cut level and core radius of ``vortex``.

    For ``p != 1`` the constant uses ``λ r²`` of the chosen vortex; the choice
    is immaterial for the rescaled equation, which holds for any scale.
    """
    spec = sol.spec
    lam, p = spec.lam, spec.p
    if p == 1.0:
        c = 4.0 * math.pi / math.log(lam)
    else:
        prof = get_profile(p)
        r = cores[vortex].radius
        kap = spec.strengths[vortex]
        c = 2.0 * math.pi * abs(prof.dphi_edge) / (kap * (lam * r * r) ** (1.0 / (p - 1.0)))
        c *= 4.0 * math.pi / math.log(lam)
    lam_bar = c ** (1.0 - p) * lam
    return Rescaling(
        scale=float(c),
        lam_bar=float(lam_bar),
        eps=float(lam_bar**-0.5),
        kappa_lambda=c * np.asarray(sol.cut_levels, dtype=float),
    )


def ansatz_for_solution(
    ev: GreenEvaluator, sol: StreamSolution, cores: list[CoreMeasurement] | None = None
) -> tuple[Ansatz, Rescaling]:
    """Projected-core approximation matching the measured cut levels and peaks."""
    cores = measure_vortex_cores(sol) if cores is None else cores
    resc = rescale_solution(sol, cores)
    peaks = np.array([c.peak for c in cores])
    ans = assemble_ansatz(ev, resc.eps, resc.kappa_lambda, peaks, get_profile(sol.spec.p))
    return ans, resc


@dataclass(frozen=True)
class AnsatzResidual:
    max_norm: float
    core_max_norm: float  # over the union of B(x_j, 2 s_j)
    eps: float
    core_radii: NDArray[np.float64]
    normalized: float  # max_norm |ln ε| / max_j s_j

    def to_record(self) -> dict:
        return {
            "max_norm": self.max_norm,
            "core_max_norm": self.core_max_norm,
            "eps": self.eps,
            "core_radii": np.asarray(self.core_radii).tolist(),
            "normalized": self.normalized,
        }


def residual_field(u_values, points, ansatz: Ansatz) -> NDArray[np.float64]:
    return np.asarray(u_values, dtype=float) - ansatz(points)


def residual_against_ansatz(sol: StreamSolution, ansatz: Ansatz, scale: float) -> AnsatzResidual:
    """Norms of ``scale ψ - U`` over the interior grid nodes."""
    pts = sol.grid.points()
    w = residual_field(scale * sol.psi, pts, ansatz)
    return _residual_norms(w, pts, ansatz.params)


def _residual_norms(w, pts, params: AnsatzParams) -> AnsatzResidual:
    near = np.zeros(len(pts), dtype=bool)
    for x, s in zip(params.centers, params.core_radii):
        near |= np.sum((pts - x) ** 2, axis=1) < (2.0 * s) ** 2
    mx = float(np.max(np.abs(w)))
    return AnsatzResidual(
        max_norm=mx,
        core_max_norm=float(np.max(np.abs(w[near]))) if np.any(near) else 0.0,
        eps=params.eps,
        core_radii=np.asarray(params.core_radii),
        normalized=mx * abs(math.log(params.eps)) / float(np.max(params.core_radii)),
    )


# ----------------------------------------------------------------------------
# uniqueness probe


@dataclass(frozen=True)
class UniquenessReport:
    seed: int
    labels: tuple[str, ...]
    cut_levels: NDArray[np.float64]  # (n_runs, k)
    pairs: tuple[tuple[int, int, float], ...]  # (a, b, relative max-norm discrepancy)
    tolerance: float

    @property
    def max_discrepancy(self) -> float:
        return max((d for _, _, d in self.pairs), default=0.0)

    def to_record(self) -> dict:
        return {
            "seed": self.seed,
            "labels": list(self.labels),
            "cut_levels": self.cut_levels.tolist(),
            "pairs": [list(p) for p in self.pairs],
            "tolerance": self.tolerance,
            "max_discrepancy": self.max_discrepancy,
        }


def uniqueness_probe(
    ev: GreenEvaluator | None,
    spec: SolveSpec,
    n_trials: int,
    seed: int,
    include_vorticity: bool = True,
) -> UniquenessReport:
    """Solve from ``n_trials`` randomized starts and compare all pairs.

    Each start places radial cores at centers shifted by up to a quarter of
    the expected radius, with radii scaled in ``[0.8, 1.25]`` and the cut
    levels perturbed by up to 5%.  The vorticity method (k = 1) is added as
    an extra run.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be positive")
    rng = np.random.default_rng(seed)
    grid = get_grid(spec.domain, spec.grid_n)
    masks = build_masks(grid, spec)
    radii = np.array([expected_core_radius(spec.lam, spec.p, kap) for kap in spec.strengths])
    fields, cuts, labels = [], [], []
    for t in range(n_trials):
        offsets = rng.uniform(-0.25, 0.25, size=(spec.k, 2)) * radii[:, None]
        factors = rng.uniform(0.8, 1.25, size=spec.k)
        bump = 1.0 + rng.uniform(-0.05, 0.05, size=spec.k)
        psi0, cut0 = initial_guess(grid, spec, masks, offsets=offsets, radius_factors=factors)
        sol = solve_stream_function(ev, spec, init=(psi0, cut0 * bump), grid=grid)
        fields.append(sol.psi)
        cuts.append(sol.cut_levels)
        labels.append(f"stream-{t}")
    if include_vorticity and spec.k == 1:
        vort = maximize_vorticity_energy(ev, spec, grid=grid)
        fields.append(vort.psi)
        cuts.append(np.array([-vort.mu]))
        labels.append("vorticity")
    pairs = []
    for a in range(len(fields)):
        for b in range(a + 1, len(fields)):
            pairs.append((a, b, relative_discrepancy(fields[a], fields[b])))
    return UniquenessReport(
        seed=int(seed),
        labels=tuple(labels),
        cut_levels=np.array(cuts),
        pairs=tuple(pairs),
        tolerance=spec.psi_tol,
    )


# ----------------------------------------------------------------------------
# velocity, pressure and the Bernoulli law


@dataclass(frozen=True)
class FlowFields:
    """Grid fields, shape ``(ny, nx)``; valid where ``valid`` is set."""

    vx: NDArray[np.float64]
    vy: NDArray[np.float64]
    pressure: NDArray[np.float64]
    divergence: NDArray[np.float64]
    valid: NDArray[np.bool_]  # interior nodes whose stencils stay inside the domain


def _central(f, h):
    fy, fx = np.gradient(f, h)
    return fx, fy


def recover_velocity_pressure(sol: StreamSolution) -> FlowFields:
    """Central-difference velocity ``(∂₂ψ, -∂₁ψ)`` and the closed-form pressure."""
    grid, spec = sol.grid, sol.spec
    psi = sol.psi_field
    h = grid.h
    px, py = _central(psi, h)
    vx, vy = py, -px
    dvx, _ = _central(vx, h)
    _, dvy = _central(vy, h)
    div = dvx + dvy
    pot = np.zeros(grid.shape)
    for j in range(spec.k):
        t = np.where(grid.to_field(sol.masks[j].astype(float)) > 0.5, np.maximum(psi - sol.cut_levels[j], 0.0), 0.0)
        pot += spec.lam / (spec.p + 1.0) * t ** (spec.p + 1.0)
    pressure = pot - 0.5 * (px * px + py * py)
    valid = ndimage.binary_erosion(grid.inside, structure=np.ones((5, 5), dtype=bool))
    return FlowFields(vx=vx, vy=vy, pressure=pressure, divergence=div, valid=valid)


def reconstruct_pressure(grid, vx, vy, region) -> NDArray[np.float64]:
    """Pressure from the momentum balance ``∇P = -(v·∇)v`` over ``region``.

    The acceleration is differenced at the nodes, integrated along grid
    edges with the trapezoid rule, and the edge relations are solved in the
    least-squares sense (one value pinned per connected component).
    """
    h = grid.h
    vxx, vxy = _central(vx, h)
    vyx, vyy = _central(vy, h)
    gx = -(vx * vxx + vy * vxy)
    gy = -(vx * vyx + vy * vyy)
    idx = -np.ones(region.shape, dtype=np.int64)
    n = int(region.sum())
    idx[region] = np.arange(n)
    rows, cols, vals, rhs = [], [], [], []
    e = 0
    for g, (diy, dix) in ((gx, (0, 1)), (gy, (1, 0))):
        a = region[: region.shape[0] - diy, : region.shape[1] - dix]
        b = region[diy:, dix:]
        both = a & b
        ia = idx[: region.shape[0] - diy, : region.shape[1] - dix][both]
        ib = idx[diy:, dix:][both]
        ga = g[: region.shape[0] - diy, : region.shape[1] - dix][both]
        gb = g[diy:, dix:][both]
        m = len(ia)
        r = np.arange(e, e + m)
        rows += [r, r]
        cols += [ib, ia]
        vals += [np.ones(m), -np.ones(m)]
        rhs.append(0.5 * h * (ga + gb))
        e += m
    D = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(e, n))
    b = np.concatenate(rhs)
    labels, n_comp = ndimage.label(region)
    L = (D.T @ D).tolil()
    f = D.T @ b
    for comp in range(1, n_comp + 1):
        pin = int(idx[labels == comp][0])
        L[pin, :] = 0.0
        L[pin, pin] = 1.0
        f[pin] = 0.0
    P = spl.spsolve(L.tocsc(), f)
    out = np.zeros(region.shape)
    out[region] = P
    return out


@dataclass(frozen=True)
class BernoulliReport:
    grid_n: int
    h: float
    stdevs: tuple[float, ...]  # per connected component of the irrotational region
    node_counts: tuple[int, ...]
    band: float

    @property
    def max_stdev(self) -> float:
        return max(self.stdevs)


def bernoulli_statistics(sol: StreamSolution, band: float | None = None, margin_cells: int = 3) -> BernoulliReport:
    """Spread of ``P + |v|²/2`` over the irrotational region, ``P`` from the momentum balance.

    Nodes closer than ``band`` (default 5% of the domain diameter) to a core
    or to the boundary are excluded, as are nodes within ``margin_cells``
    cells, so that no difference stencil reaches the vorticity support or the
    zero extension outside the domain.  A band fixed in physical units keeps
    the sampled region the same under grid refinement.
    """
    grid = sol.grid
    band = 0.05 * sol.spec.domain.diameter if band is None else float(band)
    flow = recover_velocity_pressure(sol)
    core = grid.to_field(sum(sol.core_nodes(j).astype(float) for j in range(sol.spec.k))) > 0.5
    width = max(band, margin_cells * grid.h)
    d_core = ndimage.distance_transform_edt(~core) * grid.h
    d_out = ndimage.distance_transform_edt(grid.inside) * grid.h
    region = grid.inside & (d_core > width) & (d_out > width)
    P = reconstruct_pressure(grid, flow.vx, flow.vy, region)
    B = P + 0.5 * (flow.vx**2 + flow.vy**2)
    labels, n_comp = ndimage.label(region)
    stdevs, counts = [], []
    for comp in range(1, n_comp + 1):
        sel = labels == comp
        stdevs.append(float(np.std(B[sel])))
        counts.append(int(sel.sum()))
    return BernoulliReport(
        grid_n=grid.n, h=grid.h, stdevs=tuple(stdevs), node_counts=tuple(counts), band=width
    )
