import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from steadyvortex.domain_green import DomainSpec, build_green_evaluator
from steadyvortex.errors import CoincidentVortices, LeftDomain, NoConvergence, OutsideDomain
from steadyvortex.kirchhoff_routh import (
    VortexConfig,
    find_critical_point,
    integrate_point_vortices,
    kr_derivatives,
    kr_value,
)

DISK_EV = build_green_evaluator(DomainSpec.unit_disk())


def test_single_vortex_values():
    assert kr_value(DISK_EV, VortexConfig([[0.0, 0.0]], [1.0])) == pytest.approx(0.0, abs=1e-15)
    v = kr_value(DISK_EV, VortexConfig([[0.5, 0.0]], [2.0]))
    assert v == pytest.approx(4 * math.log(4 / 3) / (2 * math.pi), abs=1e-12)
    # the quoted figure 0.183146 is a rounding of this closed form (0.1831441)
    assert v == pytest.approx(0.183146, abs=5e-6)


def test_label_swap_invariance():
    a = VortexConfig([[0.3, 0.1], [-0.2, 0.4], [0.0, -0.5]], [1.0, 1.0, 2.0])
    b = VortexConfig([[-0.2, 0.4], [0.3, 0.1], [0.0, -0.5]], [1.0, 1.0, 2.0])
    assert kr_value(DISK_EV, a) == pytest.approx(kr_value(DISK_EV, b), abs=1e-14)


def test_center_derivatives():
    g, H = kr_derivatives(DISK_EV, VortexConfig([[0.0, 0.0]], [1.7]))
    assert np.allclose(g, 0.0, atol=1e-15)
    assert np.allclose(H, 1.7**2 / math.pi * np.eye(2), atol=1e-12)


configs = st.integers(1, 3).flatmap(
    lambda k: st.tuples(
        st.lists(st.tuples(st.floats(0.0, 0.7), st.floats(0, 2 * math.pi)), min_size=k, max_size=k),
        st.lists(st.floats(0.2, 3.0), min_size=k, max_size=k),
    )
)


def _cfg(draw):
    polar, kap = draw
    pts = np.array([[r * math.cos(t), r * math.sin(t)] for r, t in polar])
    return VortexConfig(pts, kap)


@given(configs)
def test_gradient_matches_finite_differences(draw):
    cfg = _cfg(draw)
    pts = cfg.points
    if cfg.k > 1:
        d = np.linalg.norm(pts[:, None] - pts[None], axis=-1) + np.eye(cfg.k)
        if d.min() < 0.05:
            return
    g, H = kr_derivatives(DISK_EV, cfg)
    z = cfg.flat()
    e = 3e-6
    fd = np.array(
        [(kr_value(DISK_EV, cfg.with_points(z + e * u)) - kr_value(DISK_EV, cfg.with_points(z - e * u))) / (2 * e) for u in np.eye(z.size)]
    )
    assert np.max(np.abs(fd - g)) <= 1e-5 * max(1.0, np.max(np.abs(g)))
    assert np.allclose(H, H.T, atol=1e-10)


@given(configs, st.floats(0.1, 10.0))
def test_strength_scaling(draw, c):
    cfg = _cfg(draw)
    if cfg.k > 1 and np.min(np.linalg.norm(cfg.points[:, None] - cfg.points[None], axis=-1) + np.eye(cfg.k)) < 0.05:
        return
    scaled = VortexConfig(cfg.points, c * cfg.strengths)
    assert kr_value(DISK_EV, scaled) == pytest.approx(c**2 * kr_value(DISK_EV, cfg), rel=1e-12, abs=1e-14)


def test_critical_point_disk_minimum():
    rep = find_critical_point(DISK_EV, VortexConfig([[0.3, 0.2]], [1.0]))
    assert np.linalg.norm(rep.location) <= 1e-8
    assert rep.classification == "nondegenerate_min"
    assert rep.grad_norm <= 1e-10
    rep2 = find_critical_point(DISK_EV, VortexConfig([[0.3, 0.2]], [5.0]))
    assert np.allclose(rep.location, rep2.location, atol=1e-8)


def test_critical_point_ellipse_matches_scan(ellipse_ev):
    rep = find_critical_point(ellipse_ev, VortexConfig([[0.2, 0.1]], [1.0]))
    xs = np.linspace(-0.9, 0.9, 200)
    ys = np.linspace(-0.54, 0.54, 200)
    best, arg = np.inf, None
    for y in ys:
        for x in xs:
            if (x / 1.0) ** 2 + (y / 0.6) ** 2 < 0.8:
                v = ellipse_ev.robin(np.array([x, y]))
                if v < best:
                    best, arg = v, (x, y)
    cell = max(xs[1] - xs[0], ys[1] - ys[0])
    assert np.max(np.abs(np.asarray(rep.location).ravel() - arg)) <= cell


def test_symmetric_pair_has_no_critical_point():
    # on the symmetric slice W is monotone in the separation, so the iteration leaves
    with pytest.raises((LeftDomain, NoConvergence)):
        find_critical_point(DISK_EV, VortexConfig([[0.3, 0.0], [-0.3, 0.0]], [1.0, 1.0]))


def test_invalid_configurations():
    with pytest.raises(ValueError):
        VortexConfig([[0.1, 0.1]], [-1.0])
    with pytest.raises(OutsideDomain):
        kr_value(DISK_EV, VortexConfig([[1.2, 0.0]], [1.0]))
    with pytest.raises(CoincidentVortices):
        kr_value(DISK_EV, VortexConfig([[0.1, 0.1], [0.1, 0.1]], [1.0, 1.0]))


def test_equilibrium_is_stationary():
    tr = integrate_point_vortices(DISK_EV, VortexConfig([[0.0, 0.0]], [1.0]), 1.0, 1e-3)
    assert np.max(np.abs(tr.states)) == 0.0


def test_circular_orbit_and_conservation():
    tr = integrate_point_vortices(DISK_EV, VortexConfig([[0.3, 0.0]], [1.0]), 100.0, 1e-3)
    r = np.linalg.norm(tr.states[:, 0, :], axis=1)
    assert np.max(np.abs(r - 0.3)) < 1e-6
    assert tr.relative_drift() <= 1e-6
    # the vortex actually moves around the circle
    assert np.ptp(tr.states[:, 0, 1]) > 0.5


def test_drift_scales_with_step():
    cfg = VortexConfig([[0.5, 0.0], [-0.1, 0.4]], [1.0, 2.0])
    d1 = integrate_point_vortices(DISK_EV, cfg, 5.0, 2e-2).relative_drift()
    d2 = integrate_point_vortices(DISK_EV, cfg, 5.0, 1e-2).relative_drift()
    assert d2 <= d1
