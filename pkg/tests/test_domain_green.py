import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from steadyvortex.domain_green import DomainSpec, build_green_evaluator, green_value, robin_derivatives
from steadyvortex.errors import CoincidentPoints, InvalidDomain, OutsideDomain, TooCloseToBoundary

from conftest import image_regular_part


def polar(r, t):
    return np.array([r * math.cos(t), r * math.sin(t)])


disk_points = st.builds(polar, st.floats(0.0, 0.8), st.floats(0.0, 2 * math.pi))


def test_disk_uses_closed_form(disk_ev):
    assert disk_ev.method == "images_analytic"
    assert disk_ev.fit_residual == 0.0


def test_forced_fundamental_solutions_match_images(disk_mfs):
    assert disk_mfs.fit_residual <= 1e-8
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = polar(0.8 * math.sqrt(rng.uniform()), rng.uniform(0, 2 * math.pi))
        y = np.array([polar(0.8 * math.sqrt(rng.uniform()), rng.uniform(0, 2 * math.pi)) for _ in range(10)])
        assert np.max(np.abs(disk_mfs.regular(y, x) - image_regular_part(y, x))) <= 1e-7


def test_green_value_symmetric_pair(disk_ev):
    # |x-y| = 0.6 and |x| |y - x/|x|²| = 0.3 * (10/3 + 0.3) = 1.09
    expected = math.log(1.09 / 0.6) / (2 * math.pi)
    assert green_value(disk_ev, [0.3, 0.0], [-0.3, 0.0]) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.09502, abs=5e-6)


@given(disk_points)
def test_green_at_origin_pole(x):
    if np.linalg.norm(x) < 1e-3:
        return
    from steadyvortex.domain_green import DomainSpec

    ev = build_green_evaluator(DomainSpec.unit_disk())
    assert float(ev.green(x, np.zeros(2))) == pytest.approx(math.log(1 / np.linalg.norm(x)) / (2 * math.pi), abs=1e-12)


@given(disk_points, disk_points)
def test_symmetry_and_positivity_disk(x, y):
    if np.linalg.norm(x - y) < 1e-3:
        return
    ev = build_green_evaluator(DomainSpec.unit_disk())
    gxy, gyx = float(ev.green(x, y)), float(ev.green(y, x))
    assert abs(gxy - gyx) <= 1e-10
    assert gxy > 0


def _ellipse_interior(rng, n):
    r = 0.85 * np.sqrt(rng.uniform(size=n))
    t = rng.uniform(0, 2 * np.pi, size=n)
    return np.c_[r * np.cos(t), 0.6 * r * np.sin(t)]


def test_ellipse_symmetry_positivity_boundary(ellipse_ev):
    rng = np.random.default_rng(1)
    a, b = _ellipse_interior(rng, 30), _ellipse_interior(rng, 30)
    tol = 10 * max(ellipse_ev.fit_residual, 1e-12)
    for x, y in zip(a, b):
        gxy, gyx = float(ellipse_ev.green(x, y)), float(ellipse_ev.green(y, x))
        assert abs(gxy - gyx) <= max(tol, 1e-8)
        assert gxy > 0
    bd = ellipse_ev.domain.boundary_points(200, offset=0.31)
    for x in a[:5]:
        assert np.max(np.abs(ellipse_ev.green(bd, x))) <= tol


def test_regular_part_is_harmonic_second_order(ellipse_ev):
    x = np.array([0.2, 0.1])
    c = np.array([-0.3, 0.05])
    errs = []
    for h in (0.04, 0.02, 0.01):
        pts = np.array([c, c + [h, 0], c - [h, 0], c + [0, h], c - [0, h]])
        v = ellipse_ev.regular(pts, x)
        errs.append(abs(v[1] + v[2] + v[3] + v[4] - 4 * v[0]) / h**2)
    # the Laplacian vanishes; the stencil error is O(h²) until round-off
    assert errs[1] < errs[0] / 3 and errs[2] < 1e-3


def test_robin_closed_form_values(disk_ev):
    assert robin_derivatives(disk_ev, [0.0, 0.0], 0) == pytest.approx(0.0, abs=1e-15)
    assert robin_derivatives(disk_ev, [0.5, 0.0], 0) == pytest.approx(math.log(4 / 3) / (2 * math.pi), abs=1e-12)
    hess = np.asarray(robin_derivatives(disk_ev, [0.0, 0.0], 2))
    assert np.allclose(hess, np.eye(2) / math.pi, atol=1e-12)


@given(disk_points)
def test_robin_fd_agrees_with_analytic(x):
    ev = build_green_evaluator(DomainSpec.unit_disk())
    for order in (1, 2):
        a = np.asarray(robin_derivatives(ev, x, order))
        f = np.asarray(robin_derivatives(ev, x, order, method="fd"))
        assert np.max(np.abs(a - f)) <= 1e-6 * max(1.0, np.max(np.abs(a)))


def test_ellipse_robin_minimum_near_center(ellipse_ev):
    xs = np.linspace(-0.5, 0.5, 41)
    ys = np.linspace(-0.3, 0.3, 25)
    vals = np.array([[ellipse_ev.robin(np.array([x, y])) for x in xs] for y in ys])
    iy, ix = np.unravel_index(np.argmin(vals), vals.shape)
    assert abs(xs[ix]) <= 0.026 and abs(ys[iy]) <= 0.026


def test_domain_errors(disk_ev):
    bowtie = np.array([[0, 0], [1, 1], [1, 0], [0, 1]] * 2, dtype=float) + np.repeat([[0, 0], [0.001, 0.002]], 4, axis=0)
    with pytest.raises(InvalidDomain):
        DomainSpec.from_boundary(bowtie)
    with pytest.raises(CoincidentPoints):
        green_value(disk_ev, [0.1, 0.1], [0.1, 0.1])
    with pytest.raises(OutsideDomain):
        green_value(disk_ev, [1.1, 0.0], [0.1, 0.1])
    with pytest.raises(TooCloseToBoundary):
        robin_derivatives(disk_ev, [0.99, 0.0], 1)
