import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from steadyvortex.errors import InvalidExponent
from steadyvortex.radial_profile import eval_w, eval_w_bar, solve_radial_profile

GAMMA = 2.404825557695773


def test_eigen_edge_is_first_bessel_zero():
    prof = solve_radial_profile(1.0)
    assert prof.kind == "eigen"
    assert abs(prof.edge_radius - GAMMA) <= 1e-10
    assert abs(prof.edge_radius - special.jn_zeros(0, 1)[0]) <= 1e-10


def test_eigen_flux_matches_bessel_j1():
    prof = solve_radial_profile(1.0)
    assert prof.flux == pytest.approx(GAMMA * special.j1(GAMMA), abs=1e-8)
    assert prof.flux == pytest.approx(1.248459, abs=1e-6)


@given(st.floats(0.3, 4.0))
def test_mass_identity(p):
    prof = solve_radial_profile(p)
    flux = 2 * math.pi * prof.edge_radius * abs(prof.dphi_edge)
    assert abs(prof.mass() - flux) / flux <= 1e-6


@pytest.mark.parametrize("p", [0.5, 1.0, 2.0, 3.0])
def test_profile_monotone_and_ode_residual(p):
    prof = solve_radial_profile(p)
    r = prof.grid_r
    phi, dphi = prof.phi, prof.dphi
    assert np.all(dphi[1:] < 0)
    h = r[1] - r[0]
    inner = slice(1, -1)
    d2 = (phi[2:] - 2 * phi[1:-1] + phi[:-2]) / h**2
    res = d2 + dphi[inner] / r[inner] + np.maximum(phi[inner], 0) ** p
    scale = np.max(np.maximum(phi, 0) ** p)
    # the three-point stencil itself carries an O(h²) error; p < 1 is not smooth at the edge
    cutoff = -20 if p < 1 else len(res)
    assert np.max(np.abs(res[:cutoff])) <= 1e-5 * scale


@pytest.mark.parametrize("p", [0.5, 1.0, 2.0, 3.0])
def test_glued_profile_is_c1(p):
    prof = solve_radial_profile(p)
    e = prof.edge_radius
    v, _ = eval_w(prof, e)
    assert v == pytest.approx(0.0, abs=1e-12)
    _, d_in = eval_w(prof, e)
    _, d_out = eval_w(prof, e * (1 + 1e-13))
    assert abs(d_in - d_out) <= 1e-8


def test_eigen_far_field_display_value():
    prof = solve_radial_profile(1.0)
    v, _ = eval_w_bar(prof, 2 * GAMMA)
    expected = GAMMA * special.j1(GAMMA) * math.log(1 / (2 * GAMMA))
    assert v == pytest.approx(expected, abs=1e-8)
    assert v < 0


def test_shooting_refinement_order():
    coarse = solve_radial_profile(2.0, tol=1e-8).dphi_edge
    fine = solve_radial_profile(2.0, tol=1e-9).dphi_edge
    ref = solve_radial_profile(2.0, tol=1e-12).dphi_edge
    assert abs(fine - ref) <= max(abs(coarse - ref), 1e-13)


def test_invalid_exponent():
    with pytest.raises(InvalidExponent):
        solve_radial_profile(0.0)
    with pytest.raises(InvalidExponent):
        solve_radial_profile(-1.0)
    with pytest.raises(InvalidExponent):
        eval_w_bar(solve_radial_profile(2.0), 2.0)
