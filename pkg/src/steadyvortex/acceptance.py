"""The acceptance matrix: one function per criterion, shared by the test suite and the CLI.

Every criterion returns a :class:`CriterionResult` holding the individual
checks (value, threshold, verdict).  Checks marked ``required=False`` are
reported for context but do not decide the verdict.
"""

from __future__ import annotations

import math
import shutil
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special

from .domain_green import DomainSpec, build_green_evaluator
from .kirchhoff_routh import VortexConfig, find_critical_point, integrate_point_vortices, kr_derivatives, kr_value
from .pde_solver.measure import measure_vortex_cores
from .pde_solver.reports import (
    asymptotic_report,
    bernoulli_statistics,
    compare_methods,
    uniqueness_probe,
)
from .pde_solver.stream import SolveSpec, get_profile, solve_stream_function
from .pohozaev import green_field, pole_derivative_field, q_form, necessary_condition_check, verify_green_identities
from .radial_profile import solve_radial_profile


@dataclass
class Check:
    name: str
    value: float
    threshold: float | str
    passed: bool
    required: bool = True

    def to_record(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "threshold": self.threshold,
            "passed": bool(self.passed),
            "required": self.required,
        }


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list[Check] = field(default_factory=list)
    runtime: float = 0.0
    runtime_limit: float = math.inf

    @property
    def runtime_ok(self) -> bool:
        return self.runtime < self.runtime_limit

    @property
    def passed(self) -> bool:
        return self.runtime_ok and all(c.passed for c in self.checks if c.required)

    def add(self, name, value, threshold, passed, required=True) -> None:
        self.checks.append(Check(name, float(value), threshold, bool(passed), required))

    def failures(self) -> list[str]:
        out = [f"{c.name}: {c.value:.6g} vs {c.threshold}" for c in self.checks if c.required and not c.passed]
        if not self.runtime_ok:
            out.append(f"runtime {self.runtime:.1f}s over {self.runtime_limit}s")
        return out

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number:2d}: {self.title} ({self.runtime:.1f}s)"

    def to_record(self, with_runtime: bool = False) -> dict:
        rec = {
            "number": self.number,
            "title": self.title,
            "passed": self.passed,
            "runtime_ok": self.runtime_ok,
            "runtime_limit": self.runtime_limit,
            "checks": [c.to_record() for c in self.checks],
        }
        if with_runtime:
            rec["runtime"] = self.runtime
        return rec


class _Timer:
    def __init__(self, res: CriterionResult):
        self.res = res

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self.res

    def __exit__(self, *exc):
        self.res.runtime += time.perf_counter() - self.t0
        return False


DISK = DomainSpec.unit_disk()
SWEEP_LAMS = (1e2, 1e3, 1e4)
SWEEP_GRID = 513
DISK_MASK = 0.9  # the λ = 1e2, p = 2 core has radius ≈ 0.70


# ----------------------------------------------------------------------------


def criterion_01() -> CriterionResult:
    res = CriterionResult(1, "radial mass identity")
    worst = 0.0
    for p in (0.5, 1.0, 2.0, 3.0):
        t0 = time.perf_counter()
        prof = solve_radial_profile(p)
        flux = 2.0 * math.pi * prof.edge_radius * abs(prof.dphi_edge)
        rel = abs(prof.mass() - flux) / flux
        dt = time.perf_counter() - t0
        worst = max(worst, dt)
        res.add(f"p={p:g} relative mass-flux gap", rel, 1e-6, rel <= 1e-6)
        res.add(f"p={p:g} runtime [s]", dt, 1.0, dt < 1.0)
    res.runtime = worst
    res.runtime_limit = 1.0
    return res


def criterion_02() -> CriterionResult:
    res = CriterionResult(2, "eigen core constants", runtime_limit=1.0)
    with _Timer(res):
        prof = solve_radial_profile(1.0)
    gamma_oracle = float(special.jn_zeros(0, 1)[0])
    res.add("|gamma - first zero of J0|", abs(prof.edge_radius - gamma_oracle), 1e-10, abs(prof.edge_radius - gamma_oracle) <= 1e-10)
    lhs = prof.edge_radius * abs(prof.dphi_edge)
    rhs = gamma_oracle * float(special.j1(gamma_oracle))
    res.add("|gamma|phi'(gamma)| - gamma J1(gamma)|", abs(lhs - rhs), 1e-8, abs(lhs - rhs) <= 1e-8)
    res.add("gamma J1(gamma)", rhs, "1.248459 (reference)", abs(rhs - 1.248459) < 1e-6, required=False)
    return res


def criterion_03() -> CriterionResult:
    res = CriterionResult(3, "disk Green function by fundamental solutions", runtime_limit=10.0)
    with _Timer(res):
        ev = build_green_evaluator(DISK, method="mfs")
        r = np.linspace(0.0, 0.8, 33)
        th = np.linspace(0.0, 2.0 * np.pi, 24, endpoint=False)
        R, T = np.meshgrid(r, th)
        pts = np.c_[(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()]
        h_num = np.array([ev.robin(x) for x in pts]).ravel()
        h_exact = -np.log(1.0 - np.sum(pts * pts, axis=1)) / (2.0 * np.pi)
        err = float(np.max(np.abs(h_num - h_exact)))
        rng = np.random.default_rng(3)
        rad = 0.9 * np.sqrt(rng.uniform(size=(40, 2)))
        ang = rng.uniform(0, 2 * np.pi, size=(40, 2))
        a = np.c_[rad[:, 0] * np.cos(ang[:, 0]), rad[:, 0] * np.sin(ang[:, 0])]
        b = np.c_[rad[:, 1] * np.cos(ang[:, 1]), rad[:, 1] * np.sin(ang[:, 1])]
        sym = max(abs(float(ev.green(a[k][None, :], b[k])[0]) - float(ev.green(b[k][None, :], a[k])[0])) for k in range(40))
    res.add("max |h_mfs - h_exact| on |x| <= 0.8", err, 1e-6, err <= 1e-6)
    res.add("max |G(x,y) - G(y,x)|", sym, 1e-8, sym <= 1e-8)
    return res


def criterion_04() -> CriterionResult:
    res = CriterionResult(4, "Green-function boundary identities", runtime_limit=30.0)
    x1 = np.array([-0.4, 0.1])
    with _Timer(res):
        ev = build_green_evaluator(DISK)
        worst = {}
        for x0 in (np.zeros(2), np.array([0.3, 0.0])):
            for tau in (0.1, 0.2):
                for row in verify_green_identities(ev, x0, x1, tau):
                    key = (row.identity, row.variant)
                    worst[key] = max(worst.get(key, 0.0), row.residual)
        tau_gap = 0.0
        for x0 in (np.zeros(2), np.array([0.3, 0.0])):
            for j in range(2):
                for i in range(2):
                    pairs = []
                    for tau in (0.1, 0.2):
                        u0 = green_field(ev, x0, x0, tau)
                        u1 = green_field(ev, x1, x0, tau)
                        v0 = pole_derivative_field(ev, x0, j, x0, tau)
                        v1 = pole_derivative_field(ev, x1, j, x0, tau)
                        pairs.append((q_form(u0, v0, i), q_form(u1, v0, i), q_form(u0, v1, i)))
                    tau_gap = max(tau_gap, max(abs(a - b) for a, b in zip(*pairs)))
    for (name, variant), val in sorted(worst.items()):
        res.add(f"{name} ({variant} right side)", val, 1e-4, val <= 1e-4, required=(variant == "literal"))
    res.add("tau-independence of Q", tau_gap, 1e-8, tau_gap <= 1e-8)
    return res


def criterion_05() -> CriterionResult:
    res = CriterionResult(5, "Kirchhoff-Routh critical point and derivatives", runtime_limit=30.0)
    with _Timer(res):
        ev = build_green_evaluator(DISK)
        kap = 1.5
        rep = find_critical_point(ev, VortexConfig([[0.3, 0.2]], [kap]))
        _, H = kr_derivatives(ev, VortexConfig(rep.location, [kap]))
        herr = float(np.max(np.abs(H - kap**2 / math.pi * np.eye(2))))
        rng = np.random.default_rng(5)
        worst = 0.0
        for _ in range(20):
            k = int(rng.integers(1, 4))
            while True:
                pts = rng.uniform(-0.6, 0.6, size=(k, 2))
                d = pts[:, None, :] - pts[None, :, :]
                dist = np.sqrt(np.sum(d * d, axis=-1)) + np.eye(k)
                if np.all(np.sum(pts * pts, axis=1) < 0.5) and dist.min() > 0.1:
                    break
            cfg = VortexConfig(pts, rng.uniform(0.5, 2.0, size=k))
            g, _ = kr_derivatives(ev, cfg)
            z = cfg.flat()
            e = 1e-6
            fd = np.array(
                [
                    (kr_value(ev, cfg.with_points(z + e * ei)) - kr_value(ev, cfg.with_points(z - e * ei))) / (2 * e)
                    for ei in np.eye(2 * k)
                ]
            )
            worst = max(worst, float(np.max(np.abs(fd - g)) / max(1.0, float(np.max(np.abs(g))))))
    res.add("|critical point|", float(np.linalg.norm(rep.location)), 1e-8, np.linalg.norm(rep.location) <= 1e-8)
    res.add("max |Hessian - kappa^2 I / pi|", herr, 1e-5, herr <= 1e-5)
    res.add("finite-difference vs analytic gradient (20 configs)", worst, 1e-5, worst <= 1e-5)
    return res


def criterion_06() -> CriterionResult:
    res = CriterionResult(6, "point-vortex dynamics", runtime_limit=120.0)
    configs = {
        1: ([[0.3, 0.0]], [1.0]),
        2: ([[0.3, 0.0], [-0.3, 0.0]], [1.0, 1.0]),
        3: ([[0.3, 0.0], [-0.2, 0.3], [0.0, -0.4]], [1.0, 1.5, 0.7]),
    }
    with _Timer(res):
        ev = build_green_evaluator(DISK)
        for k, (pts, kap) in configs.items():
            tr = integrate_point_vortices(ev, VortexConfig(pts, kap), 100.0, 1e-3)
            drift = tr.relative_drift()
            res.add(f"k={k} relative W drift", drift, 1e-6, drift <= 1e-6)
        for rho in (0.01, 0.05):
            tr = integrate_point_vortices(ev, VortexConfig([[rho, 0.0]], [1.0]), 100.0, 1e-3)
            excursion = float(np.max(np.linalg.norm(tr.states[:, 0, :], axis=1)))
            res.add(f"rho={rho:g} max distance from the minimum / rho", excursion / rho, 2.0, excursion <= 2 * rho)
    return res


# -- sweep shared by criteria 7 and 10 -----------------------------------------

_SWEEP_CACHE: dict = {}


def disk_sweep(p: float, grid_n: int = SWEEP_GRID, lams=SWEEP_LAMS):
    """Solutions, cores and report rows for the centered single vortex in the unit disk."""
    key = (float(p), int(grid_n), tuple(lams))
    hit = _SWEEP_CACHE.get(key)
    if hit is not None:
        return hit
    out = []
    t0 = time.perf_counter()
    for lam in lams:
        spec = SolveSpec(DISK, lam, p, [[0.0, 0.0]], [1.0], grid_n=grid_n, mask_radius=DISK_MASK)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            sol = solve_stream_function(None, spec)
        cores = measure_vortex_cores(sol)
        out.append((lam, sol, cores, asymptotic_report(sol, get_profile(p), cores)[0]))
    hit = (out, time.perf_counter() - t0)
    _SWEEP_CACHE[key] = hit
    return hit


def _monotone_to_one(vals) -> bool:
    dev = [abs(v - 1.0) for v in vals]
    return all(b < a for a, b in zip(dev, dev[1:]))


def criterion_07() -> CriterionResult:
    res = CriterionResult(7, "asymptotic laws over the lambda sweep", runtime_limit=1200.0)
    for p in (1.0, 2.0):
        rows, dt = disk_sweep(p)
        res.runtime += dt
        a = [r.strength_ratio for _, _, _, r in rows]
        res.add(f"p={p:g} 4pi k~/(k ln lam) approaches 1 monotonically", float(_monotone_to_one(a)), "1 (true)", _monotone_to_one(a))
        res.add(f"p={p:g} |4pi k~/(k ln lam) - 1| at lam=1e4", abs(a[-1] - 1.0), 0.15, abs(a[-1] - 1.0) <= 0.15)
        b = [r.radius_ratio for _, _, _, r in rows]
        if p == 1.0:
            res.add("p=1 max |r sqrt(lam)/gamma - 1|", max(abs(v - 1) for v in b), 0.15, max(abs(v - 1) for v in b) <= 0.15)
        else:
            res.add("p=2 max |k(lam r^2)/(2pi|phi'(1)|) - 1|", max(abs(v - 1) for v in b), 0.20, max(abs(v - 1) for v in b) <= 0.20)
        for lam, _, _, r in rows:
            res.add(f"p={p:g} lam={lam:g} strength ratio", r.strength_ratio, "report", True, required=False)
    return res


def criterion_08() -> CriterionResult:
    res = CriterionResult(8, "stream-function and vorticity methods coincide", runtime_limit=600.0)
    with _Timer(res):
        spec = SolveSpec(DISK, 1e4, 2.0, [[0.0, 0.0]], [1.0], grid_n=SWEEP_GRID, mask_radius=DISK_MASK)
        rep = compare_methods(None, spec)
    res.add("relative max-norm psi discrepancy", rep.relative_discrepancy, 0.01, rep.relative_discrepancy <= 0.01)
    res.add(
        "support symmetric difference / (4 h length)",
        rep.support_symdiff_area / rep.support_bound,
        1.0,
        rep.support_symdiff_area <= rep.support_bound,
        required=False,
    )
    return res


def criterion_09(n_trials: int = 10, seed: int = 2024) -> CriterionResult:
    res = CriterionResult(9, "uniqueness probe", runtime_limit=1200.0)
    with _Timer(res):
        for p in (1.0, 2.0):
            spec = SolveSpec(DISK, 1e4, p, [[0.0, 0.0]], [1.0], grid_n=SWEEP_GRID, mask_radius=DISK_MASK)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                rep = uniqueness_probe(None, spec, n_trials, seed)
            res.add(
                f"p={p:g} max pairwise discrepancy ({len(rep.labels)} runs)",
                rep.max_discrepancy,
                10 * spec.psi_tol,
                rep.max_discrepancy <= 10 * spec.psi_tol,
            )
    return res


def criterion_10() -> CriterionResult:
    res = CriterionResult(10, "necessary condition and free-boundary circularity", runtime_limit=1200.0)
    ev = build_green_evaluator(DISK)
    for p in (1.0, 2.0):
        rows, dt = disk_sweep(p)
        res.runtime += dt
        ratios = []
        circ = []
        for _, sol, cores, _ in rows:
            chk = necessary_condition_check(ev, cores, sol.spec.strengths)
            ratios.append(chk.ratio)
            circ.append(cores[0].circularity)
        res.add(f"p={p:g} max |grad W|/r over the sweep", max(ratios), 1.0, max(ratios) <= 1.0)
        res.add(f"p={p:g} circularity deviation at lam=1e4", circ[-1], 0.10, circ[-1] <= 0.10)
        dec = all(b < a for a, b in zip(circ, circ[1:]))
        res.add(
            f"p={p:g} circularity decreasing in lam ({', '.join(f'{c:.2e}' for c in circ)})",
            float(dec),
            "1 (true)",
            dec,
        )
    return res


def criterion_11() -> CriterionResult:
    res = CriterionResult(11, "Bernoulli law outside the cores", runtime_limit=300.0)
    with _Timer(res):
        for p in (1.0, 2.0):
            stats = []
            for n in (257, 513):
                spec = SolveSpec(DISK, 1e3, p, [[0.0, 0.0]], [1.0], grid_n=n, mask_radius=DISK_MASK)
                stats.append(bernoulli_statistics(solve_stream_function(None, spec)))
            coarse, fine = stats
            ratio = min(c / f for c, f in zip(coarse.stdevs, fine.stdevs))
            res.add(f"p={p:g} stdev(257)/stdev(513)", ratio, 3.0, ratio >= 3.0 and len(coarse.stdevs) == len(fine.stdevs))
    return res


def determinism_configs() -> dict[str, dict]:
    """Small configurations exercising every scenario."""
    disk = {"kind": "disk"}
    one = {"strengths": [1.0], "centers": [[0.0, 0.0]], "mask_radius": 0.9}
    num = {"grid_n": 129, "deterministic": True}
    return {
        "profile": {"scenario": "profile", "physics": {"ps": [0.5, 1.0, 2.0]}},
        "kr": {"scenario": "kr", "domain": disk, "physics": {"strengths": [1.0], "centers": [[0.3, 0.2]]}},
        "solve": {"scenario": "solve", "domain": disk, "physics": {"lam": 1e3, "p": 2.0, **one}, "numerics": num},
        "turkington": {"scenario": "turkington", "domain": disk, "physics": {"lam": 1e3, "p": 2.0, **one}, "numerics": num},
        "compare": {"scenario": "compare", "domain": disk, "physics": {"lam": 1e3, "p": 1.0, **one}, "numerics": num},
        "sweep": {"scenario": "sweep", "domain": disk, "physics": {"lams": [1e2, 1e3], "p": 1.0, **one}, "numerics": num},
        "pohozaev": {"scenario": "pohozaev", "domain": disk, "numerics": {"x0": [0.3, 0.0], "x1": [-0.4, 0.1]}},
        "probe": {
            "scenario": "probe",
            "domain": disk,
            "physics": {"lam": 1e3, "p": 2.0, **one},
            "numerics": {**num, "n_trials": 3, "seed": 7},
        },
        "dynamics": {
            "scenario": "dynamics",
            "domain": disk,
            "physics": {"strengths": [1.0, 1.5], "centers": [[0.3, 0.0], [-0.2, 0.3]]},
            "numerics": {"T": 5.0, "dt": 1e-3},
        },
    }


def _snapshot(d: Path) -> dict[str, bytes]:
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


def criterion_12(workdir: Path) -> CriterionResult:
    """Run every scenario twice into the same directory and compare all bytes."""
    from .cli import run_scenario_dict

    res = CriterionResult(12, "deterministic artifacts")
    workdir = Path(workdir)
    with _Timer(res):
        for name, doc in determinism_configs().items():
            snaps = []
            for _ in range(2):
                out = workdir / name
                if out.exists():
                    shutil.rmtree(out)
                doc = {**doc, "output": {"dir": str(out)}}
                code = run_scenario_dict(doc)
                if code != 0:
                    res.add(f"{name} exit status", code, 0, False)
                    break
                snaps.append(_snapshot(out))
            if len(snaps) == 2:
                same = snaps[0] == snaps[1] and len(snaps[0]) > 1
                res.add(f"{name}: {len(snaps[0])} files byte-identical", float(same), "1 (true)", same)
    return res


CRITERIA = (
    criterion_01,
    criterion_02,
    criterion_03,
    criterion_04,
    criterion_05,
    criterion_06,
    criterion_07,
    criterion_08,
    criterion_09,
    criterion_10,
    criterion_11,
    criterion_12,
)
