"""Scenario runners: each writes its tables, reports and field dumps into a directory."""

from __future__ import annotations

import warnings
from pathlib import Path

import numpy as np

from .config import ScenarioConfig
from .domain_green import DomainSpec, build_green_evaluator, robin_derivatives
from .io import write_csv, write_field, write_json
from .kirchhoff_routh import VortexConfig, find_critical_point, integrate_point_vortices, kr_value
from .pde_solver.measure import measure_vortex_cores
from .pde_solver.reports import asymptotic_report, compare_methods, uniqueness_probe
from .pde_solver.stream import SolveSpec, StreamSolution, solve_stream_function
from .pde_solver.turkington import maximize_vorticity_energy
from .pohozaev import necessary_condition_check, verify_green_identities
from .radial_profile import solve_radial_profile


def build_domain(block: dict) -> DomainSpec:
    kind = block["kind"]
    if kind == "disk":
        return DomainSpec.unit_disk()
    if kind == "ellipse":
        return DomainSpec.ellipse(block["a"], block["b"], block.get("n", 512))
    if "csv" in block:
        return DomainSpec.from_csv(block["csv"])
    return DomainSpec.from_boundary(np.asarray(block["points"], dtype=float))


def _solve_spec(cfg: ScenarioConfig, domain: DomainSpec, lam: float | None = None) -> SolveSpec:
    ph, nu = cfg.physics, cfg.numerics
    return SolveSpec(
        domain=domain,
        lam=ph["lam"] if lam is None else lam,
        p=ph["p"],
        centers=np.asarray(ph["centers"], dtype=float),
        strengths=np.asarray(ph["strengths"], dtype=float),
        grid_n=nu["grid_n"],
        mask_radius=ph.get("mask_radius"),
        psi_tol=nu["psi_tol"],
        mass_tol=nu["mass_tol"],
        max_iter=nu["max_iter"],
    )


def _dump_solution(out: Path, sol: StreamSolution, tag: str = "") -> None:
    bbox = sol.grid.bbox
    write_field(out / f"psi{tag}.bin", sol.psi_field, bbox, "psi")
    write_field(out / f"omega{tag}.bin", sol.grid.to_field(sol.vorticity()), bbox, "omega")


def _solution_record(sol: StreamSolution) -> dict:
    return {
        "spec": sol.spec.to_record(),
        "cut_levels": sol.cut_levels,
        "masses": sol.masses,
        "residual": sol.residual,
        "iterations": len(sol.history),
        "grid_h": sol.grid.h,
        "warnings": list(sol.warnings),
    }


def run_profile(cfg: ScenarioConfig, out: Path) -> None:
    ps = cfg.physics.get("ps", [cfg.physics.get("p")])
    rows = []
    for p in ps:
        prof = solve_radial_profile(p)
        tag = f"{p:g}".replace(".", "_")
        write_csv(
            out / f"profile_p{tag}.csv",
            [{"r": r, "phi": v, "dphi": d} for r, v, d in prof.to_rows()],
            ["r", "phi", "dphi"],
        )
        rows += [
            {"p": p, "name": "kind", "value": prof.kind},
            {"p": p, "name": "edge_radius", "value": prof.edge_radius},
            {"p": p, "name": "dphi_edge", "value": prof.dphi_edge},
            {"p": p, "name": "flux", "value": prof.flux},
            {"p": p, "name": "mass", "value": prof.mass()},
        ]
        if prof.kind == "eigen":
            rows.append({"p": p, "name": "gamma", "value": prof.edge_radius})
    write_csv(out / "constants.csv", rows, ["p", "name", "value"])


def run_kr(cfg: ScenarioConfig, out: Path) -> None:
    ev = build_green_evaluator(build_domain(cfg.domain), tol=cfg.numerics["mfs_tol"])
    init = VortexConfig(np.asarray(cfg.physics["centers"]), np.asarray(cfg.physics["strengths"]))
    rep = find_critical_point(ev, init)
    rec = rep.to_record()
    rec["W"] = kr_value(ev, VortexConfig(rep.location, init.strengths))
    rec["green"] = ev.diagnostics()
    if init.strengths.size == 1:
        rec["robin_hessian"] = np.asarray(robin_derivatives(ev, np.asarray(rep.location).reshape(-1, 2)[0], 2)).reshape(2, 2)
    write_json(out / "critical_point.json", rec)


def run_solve(cfg: ScenarioConfig, out: Path) -> None:
    domain = build_domain(cfg.domain)
    sol = solve_stream_function(None, _solve_spec(cfg, domain))
    cores = measure_vortex_cores(sol)
    write_json(out / "solution.json", _solution_record(sol))
    write_csv(out / "cores.csv", [dict(vortex=j, **c.to_record()) for j, c in enumerate(cores)])
    write_csv(out / "history.csv", [h for h in sol.history if "iter" in h])
    if cfg.numerics["dump_fields"]:
        _dump_solution(out, sol)


def run_turkington(cfg: ScenarioConfig, out: Path) -> None:
    domain = build_domain(cfg.domain)
    spec = _solve_spec(cfg, domain)
    vf = maximize_vorticity_energy(None, spec, cap=cfg.physics.get("cap"))
    write_json(
        out / "vorticity.json",
        {
            "spec": spec.to_record(),
            "mu": vf.mu,
            "energy": vf.energy,
            "iterations": vf.iterations,
            "cap": vf.cap,
            "cap_active": vf.cap_active,
            "mass": float(vf.grid.h**2 * np.sum(vf.omega)),
        },
    )
    write_csv(out / "energy.csv", [{"iter": i, "energy": e} for i, e in enumerate(vf.energy_history)])
    if cfg.numerics["dump_fields"]:
        write_field(out / "omega.bin", vf.grid.to_field(vf.omega), vf.grid.bbox, "omega")
        write_field(out / "psi.bin", vf.grid.to_field(vf.psi), vf.grid.bbox, "psi")


def run_compare(cfg: ScenarioConfig, out: Path) -> None:
    domain = build_domain(cfg.domain)
    rep = compare_methods(None, _solve_spec(cfg, domain))
    write_json(out / "compare.json", rep.to_record())


def run_sweep(cfg: ScenarioConfig, out: Path) -> None:
    domain = build_domain(cfg.domain)
    ev = build_green_evaluator(domain, tol=cfg.numerics["mfs_tol"])
    rows, nec = [], []
    for lam in cfg.physics["lams"]:
        sol = solve_stream_function(None, _solve_spec(cfg, domain, lam))
        cores = measure_vortex_cores(sol)
        for row, core in zip(asymptotic_report(sol, cores=cores), cores):
            rec = row.to_record()
            rec["circularity"] = core.circularity
            rec["peak_x"], rec["peak_y"] = float(core.peak[0]), float(core.peak[1])
            rows.append(rec)
        chk = necessary_condition_check(ev, cores, sol.spec.strengths)
        nec.append({"lam": lam, "grad_norm": chk.grad_norm, "ratio_to_radius": chk.ratio})
    write_csv(out / "asymptotic.csv", rows)
    write_csv(out / "necessary_condition.csv", nec)


def run_pohozaev(cfg: ScenarioConfig, out: Path) -> None:
    ev = build_green_evaluator(build_domain(cfg.domain), tol=cfg.numerics["mfs_tol"])
    nu = cfg.numerics
    rows = []
    for tau in nu["tau"]:
        rows += [r.to_record() for r in verify_green_identities(ev, nu["x0"], nu["x1"], tau, nu["n_nodes"])]
    write_csv(out / "identities.csv", rows, ["identity", "variant", "i", "j", "tau", "q", "rhs", "residual"])


def run_probe(cfg: ScenarioConfig, out: Path) -> None:
    domain = build_domain(cfg.domain)
    rep = uniqueness_probe(None, _solve_spec(cfg, domain), cfg.numerics["n_trials"], cfg.numerics["seed"])
    write_json(out / "uniqueness.json", rep.to_record())
    write_csv(out / "pairs.csv", [{"a": a, "b": b, "discrepancy": d} for a, b, d in rep.pairs], ["a", "b", "discrepancy"])


def run_dynamics(cfg: ScenarioConfig, out: Path) -> None:
    ev = build_green_evaluator(build_domain(cfg.domain), tol=cfg.numerics["mfs_tol"])
    c = VortexConfig(np.asarray(cfg.physics["centers"]), np.asarray(cfg.physics["strengths"]))
    tr = integrate_point_vortices(ev, c, cfg.numerics["T"], cfg.numerics["dt"])
    header, body = tr.rows()
    write_csv(out / "trajectory.csv", [dict(zip(header, r)) for r in body], header)
    write_json(out / "dynamics.json", {"relative_drift": tr.relative_drift(), "samples": len(tr.times)})


RUNNERS = {
    "profile": run_profile,
    "kr": run_kr,
    "solve": run_solve,
    "turkington": run_turkington,
    "compare": run_compare,
    "sweep": run_sweep,
    "pohozaev": run_pohozaev,
    "probe": run_probe,
    "dynamics": run_dynamics,
}


def run(cfg: ScenarioConfig, out: Path) -> list[str]:
    """Run the configured scenario; returns warning messages raised along the way."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        RUNNERS[cfg.scenario](cfg, out)
    return sorted({str(w.message) for w in caught})
