import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from steadyvortex.ansatz import (
    assemble_ansatz,
    core_radius_expansion_ratio,
    core_radius_residual,
    enclosing_radius,
    eval_core_gradient,
    eval_core_profile,
    project_profile,
    solve_core_radius,
)
from steadyvortex.domain_green import DomainSpec, build_green_evaluator
from steadyvortex.errors import InvalidExponent
from steadyvortex.radial_profile import solve_radial_profile

P2 = solve_radial_profile(2.0)
P1 = solve_radial_profile(1.0)
DISK_EV = build_green_evaluator(DomainSpec.unit_disk())


def test_core_radius_solves_gluing_equation():
    s = solve_core_radius(1e-4, 1.0, 4.0, P2)
    assert core_radius_residual(s, 1e-4, 1.0, 4.0, P2) <= 1e-12


def test_core_radius_leading_order():
    r4 = core_radius_expansion_ratio(1e-4, 1.0, solve_core_radius(1e-4, 1.0, 4.0, P2), P2)
    r6 = core_radius_expansion_ratio(1e-6, 1.0, solve_core_radius(1e-6, 1.0, 4.0, P2), P2)
    assert abs(r4 - 1) <= 0.15
    assert abs(r6 - 1) < abs(r4 - 1)


@pytest.mark.parametrize("p", [0.5, 2.0, 3.0])
def test_core_radius_shrinks_with_eps(p):
    prof = solve_radial_profile(p)
    eps = np.logspace(-3, -6, 7)
    s = [solve_core_radius(e, 1.0, 4.0, prof) for e in eps]
    assert all(b < a for a, b in zip(s, s[1:]))


def test_eigen_has_no_radius_equation():
    with pytest.raises(InvalidExponent):
        solve_core_radius(1e-3, 1.0, 4.0, P1)


@pytest.mark.parametrize("prof", [P1, P2], ids=["p1", "p2"])
def test_core_profile_gluing(prof):
    ans = assemble_ansatz(DISK_EV, 1e-3, [1.0], [[0.0, 0.0]], prof)
    par = ans.params
    s, a, R = par.core_radii[0], par.amplitudes[0], par.R
    y = np.array([[s, 0.0], [0.0, R], [s * (1 - 1e-13), 0.0], [s * (1 + 1e-13), 0.0]])
    v = eval_core_profile(par, 0, y)
    assert v[0] == pytest.approx(a, rel=1e-12)
    assert v[1] == pytest.approx(0.0, abs=1e-12)
    g = eval_core_gradient(par, 0, y)
    assert abs(g[2, 0] - g[3, 0]) <= 1e-10 * abs(g[2, 0]) + 1e-10
    if prof.kind == "eigen":
        assert s == pytest.approx(prof.edge_radius * 1e-3, rel=1e-14)


def test_projection_on_disk_center():
    ans = assemble_ansatz(DISK_EV, 1e-3, [1.0], [[0.0, 0.0]], P2)
    par = ans.params
    s, a, R = par.core_radii[0], par.amplitudes[0], par.R
    th = np.linspace(0, 2 * np.pi, 50, endpoint=False)
    bd = np.c_[np.cos(th), np.sin(th)]
    assert np.max(np.abs(ans(bd))) <= 1e-12
    y = np.array([[0.3, 0.1], [0.0, s / 2], [-0.5, 0.5]])
    expected = eval_core_profile(par, 0, y) - a * math.log(R) / math.log(R / s)
    assert np.allclose(project_profile(DISK_EV, par, 0, y), expected, atol=1e-13)
    far = y[[0, 2]]
    green = np.log(1 / np.linalg.norm(far, axis=1)) / (2 * np.pi)
    assert np.allclose(ans(far), a / math.log(R / s) * 2 * np.pi * green, atol=1e-12)
    # amplitude closed form at the center, where g(0, 0) = ln R
    assert a * (1 - math.log(R) / math.log(R / s)) == pytest.approx(1.0, abs=1e-12)
    r = 0.4
    ring = ans(np.c_[r * np.cos(th), r * np.sin(th)])
    assert np.ptp(ring) <= 1e-9


def test_amplitude_correction_decays_like_inverse_log():
    vals = []
    for eps in (1e-3, 1e-4, 1e-5, 1e-6):
        par = assemble_ansatz(DISK_EV, eps, [1.0], [[0.0, 0.0]], P2).params
        vals.append((par.amplitudes[0] - 1.0) * abs(math.log(eps)))
    assert max(vals) / min(vals) < 2.0


def test_two_vortex_assembly_stationary_peaks(ellipse_ev):
    z = np.array([[0.4, 0.0], [-0.4, 0.05]])
    ans = assemble_ansatz(ellipse_ev, 1e-3, [1.0, 1.3], z, P2)
    par = ans.params
    slope = max(par.amplitudes / par.core_radii)
    for zj in z:
        assert np.linalg.norm(ans.gradient(zj[None, :])) <= 1e-8 * slope
    bd = ellipse_ev.domain.boundary_points(300, offset=0.13)
    bound = 2 * 10 * ellipse_ev.fit_residual * max(par.amplitudes / np.log(par.R / par.core_radii))
    assert np.max(np.abs(ans(bd))) <= bound
    assert par.R == enclosing_radius(ellipse_ev)


@given(st.floats(1e-6, 1e-3), st.floats(0.5, 3.0))
def test_radius_residual_property(eps, a):
    s = solve_core_radius(eps, a, 4.0, P2)
    assert 0 < s < 4.0
    assert core_radius_residual(s, eps, a, 4.0, P2) <= 1e-11
