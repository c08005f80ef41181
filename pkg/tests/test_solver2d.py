import numpy as np
import pytest
from conftest import constructed_suite

from hilbert16.errors import DegenerateDivergence, DegenerateSystem
from hilbert16.poly import BivariatePoly, Box2, PlanarSystem, eval_point, parse_poly
from hilbert16.solver2d import contact_points, solve_system_2d

WINDOW = Box2.square(-3.0, 3.0)


def test_circle_and_line():
    res = solve_system_2d(parse_poly("x^2 + y^2 - 1"), parse_poly("y"), Box2.square(-2, 2))
    assert res.certified
    assert len(res.roots) == 2
    pts = sorted(r.point for r in res.roots)
    np.testing.assert_allclose(pts, [(-1, 0), (1, 0)], atol=1e-12)
    assert all(r.simple for r in res.roots)
    assert sorted(round(r.jacobian_det, 9) for r in res.roots) == [-2.0, 2.0]


def test_coordinate_axes():
    res = solve_system_2d(parse_poly("x"), parse_poly("y"), WINDOW)
    assert len(res.roots) == 1
    assert res.roots[0].point == pytest.approx((0.0, 0.0), abs=1e-14)
    assert res.roots[0].simple


def test_no_roots_empty():
    res = solve_system_2d(parse_poly("x^2 + y^2 + 1"), parse_poly("y"), WINDOW)
    assert res.roots == [] and res.certified


def test_double_root_is_undecided():
    res = solve_system_2d(parse_poly("x^2"), parse_poly("y"), WINDOW)
    assert not res.roots or not any(r.simple for r in res.roots)
    assert res.undecided


def test_zero_polynomial_rejected():
    with pytest.raises(DegenerateSystem):
        solve_system_2d(BivariatePoly(), parse_poly("y"), WINDOW)


def test_vdp_contacts(vdp):
    rep = contact_points(vdp, WINDOW)
    assert rep.N == 2 and rep.certified
    pts = [r.point for r in rep.points]
    np.testing.assert_allclose(pts, [(-1, 2 / 3), (1, -2 / 3)], atol=1e-12)
    assert all(r.radius <= 1e-8 for r in rep.points)
    assert rep.bezout_cap == 8


def test_cubic_circle_no_contacts(cubic_circle):
    rep = contact_points(cubic_circle, WINDOW)
    assert rep.N == 0 and rep.certified


def test_constant_divergence_rejected(center):
    with pytest.raises(DegenerateDivergence):
        contact_points(center, WINDOW)


def test_deterministic(vdp):
    a = contact_points(vdp, WINDOW).to_json()
    b = contact_points(vdp, WINDOW).to_json()
    assert a == b


@pytest.mark.parametrize("case", range(0, 50, 7))
def test_constructed_roots_recovered(case):
    p, q, roots = constructed_suite()[case]
    res = solve_system_2d(p, q, WINDOW)
    assert res.certified
    found = np.array([r.point for r in res.roots]).reshape(-1, 2)
    assert len(found) == len(roots)
    for r in roots:
        d = np.hypot(*(found - r).T)
        k = int(np.argmin(d))
        assert d[k] <= max(res.roots[k].radius, 1e-10)
    for r in res.roots:
        assert abs(eval_point(p, *r.point)) <= 1e-10
        assert abs(eval_point(q, *r.point)) <= 1e-10
        assert r.simple
    assert len(res.roots) <= p.degree() * q.degree()


def test_contact_points_scale_invariant(vdp):
    scaled = PlanarSystem(vdp.P * 3.0, vdp.Q * 3.0)
    a = [r.point for r in contact_points(vdp, WINDOW).points]
    b = [r.point for r in contact_points(scaled, WINDOW).points]
    np.testing.assert_allclose(a, b, atol=1e-12)
