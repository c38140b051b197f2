"""Derivative matrices, dilatation estimation, growth, Harnack ratio."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrdyn.calculus import (
    EstimationError,
    _sample_box,
    derivative_matrix,
    estimate_dilatation,
    harnack_ratio,
    max_modulus,
    singular_values,
)
from qrdyn.maps import build_map
from qrdyn.mapspec import MapSpec


def _linear_map(diag):
    d = np.asarray(diag, dtype=float)
    return MapSpec(name="lin", dimension=len(d), eval=lambda p: p * d)


def test_derivative_of_doubling_map():
    spec = _linear_map([2.0, 2.0])
    jac = derivative_matrix(spec, np.array([0.3, -1.2]))
    assert np.allclose(jac, 2.0 * np.eye(2), atol=1e-9)


def test_derivative_of_exponential_at_origin(exp1):
    jac = derivative_matrix(exp1, np.array([0.0, 0.0]))
    assert np.allclose(jac, np.eye(2), atol=1e-6)


def test_zorich_derivative_norm_scales_exponentially(zorich10):
    j0 = derivative_matrix(zorich10, np.array([0.0, 0.0, 0.0]))
    j1 = derivative_matrix(zorich10, np.array([0.0, 0.0, 1.0]))
    s0, _, _ = singular_values(j0)
    s1, _, _ = singular_values(j1)
    assert abs(s1 / s0 - np.e) < 0.02 * np.e


@pytest.mark.parametrize(
    "matrix,expected",
    [
        (np.diag([2.0, 1.0]), (2.0, 1.0, 2.0)),
        (np.eye(2), (1.0, 1.0, 1.0)),
        (np.diag([3.0, 2.0, 1.0]), (3.0, 1.0, 6.0)),
    ],
)
def test_singular_values_known_matrices(matrix, expected):
    assert np.allclose(singular_values(matrix), expected)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_singular_values_invariants(seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(3, 3))
    smax, smin, det = singular_values(m)
    assert smax >= smin >= 0.0
    assert abs(det) <= smax ** 3 + 1e-9


def test_dilatation_linear_map_exact():
    spec = _linear_map([2.0, 1.0])
    rep = estimate_dilatation(spec, (-1, 1, -1, 1), 200)
    assert abs(rep.K_O_est - 2.0) < 1e-6
    assert abs(rep.K_I_est - 2.0) < 1e-6
    assert rep.K_est == max(rep.K_O_est, rep.K_I_est)
    assert rep.excluded_count == 0


def test_dilatation_definitional_inequalities(annulus005):
    pts = _sample_box((-3, 3, -3, 3), 500, 1)
    keep = annulus005.seam_distance(pts) > 1e-3
    jac = derivative_matrix(annulus005, pts[keep])
    smax, smin, det = singular_values(jac)
    good = det > 1e-12
    assert np.all(smax[good] ** 2 / det[good] >= 1.0 - 1e-6)
    assert np.all(det[good] / smin[good] ** 2 >= 1.0 - 1e-6)


def test_dilatation_monotone_in_annulus_perturbation():
    small = estimate_dilatation(build_map("annulus-fixed", delta=0.01), (-3, 3, -3, 3), 4000)
    large = estimate_dilatation(build_map("annulus-fixed", delta=0.1), (-3, 3, -3, 3), 4000)
    assert small.K_est < large.K_est
    assert np.isfinite(small.K_est) and np.isfinite(large.K_est)


def test_dilatation_monotone_in_band_width():
    wide = estimate_dilatation(build_map("fatou-mod", M=100.0), (0, 300, -100, 100), 4000)
    narrow = estimate_dilatation(build_map("fatou-mod", M=25.0), (0, 75, -25, 25), 4000)
    assert wide.K_est < narrow.K_est


def test_dilatation_all_excluded_raises():
    # sense-reversing map: Jacobian always negative, every sample excluded
    spec = MapSpec(name="flip", dimension=2, eval=lambda p: p * np.array([1.0, -1.0]))
    with pytest.raises(EstimationError):
        estimate_dilatation(spec, (-1, 1, -1, 1), 200)


def test_composition_submultiplicative_on_matched_samples(zorich10):
    twice = MapSpec(
        name="zorich2",
        dimension=3,
        eval=lambda p: zorich10.eval(zorich10.eval(p)),
        seam_distance=zorich10.seam_distance,
    )
    region = (-0.8, 0.8, -0.8, 0.8, 2.5, 4.0)
    pts = _sample_box(region, 600, 3)
    first = estimate_dilatation(zorich10, region, points=pts)
    second = estimate_dilatation(zorich10, region, points=zorich10(pts))
    composed = estimate_dilatation(twice, region, points=pts)
    assert composed.K_I_est <= first.K_I_est * second.K_I_est * 1.05
    assert composed.K_O_est <= first.K_O_est * second.K_O_est * 1.05
    assert composed.K_est <= first.K_est * second.K_est * 1.05


def test_max_modulus_exponential(exp1):
    assert abs(max_modulus(exp1, 1.0, 720) - np.e) < 0.01 * np.e


def test_max_modulus_zorich_beam(zorich10):
    # the beam axis direction attains e^r - a (up to sphere-sampling slack)
    from qrdyn.maps.zorich import zorich_F

    spec = MapSpec(name="F", dimension=3, eval=lambda p: np.atleast_2d(zorich_F(p)))
    r = 3.0
    assert max_modulus(spec, r, 4000) >= np.exp(r) * 0.95


@pytest.mark.parametrize(
    "name,params",
    [
        ("zorich", {}),
        ("qr-sine", {}),
        ("fatou-mod", {}),
        ("annulus-fixed", {}),
        ("exp", {"lambda": 0.2}),
    ],
)
def test_transcendental_growth_accelerates(name, params):
    spec = build_map(name, **params)
    vals = [np.log(max_modulus(spec, r, 1024)) / np.log(r) for r in (10.0, 20.0, 40.0)]
    assert vals[0] < vals[1] < vals[2]


def test_harnack_linear_map():
    spec = _linear_map([3.0, 3.0])
    rep = harnack_ratio(spec, (5.0, 0.0), 1.0, 400)
    assert rep.valid
    assert np.isfinite(rep.theta_est) and rep.theta_est >= 1.0


def test_harnack_exponential_bound(exp1):
    rep = harnack_ratio(exp1, (10.0, 0.0), 1.0, 2000)
    assert rep.valid and not rep.ill_conditioned
    # log|e^z| = Re z, so the ratio cannot exceed (10+1)/(10-1) plus slack
    assert rep.theta_est <= (11.0 / 9.0) * 1.01
    assert rep.theta_est >= 1.0


def test_harnack_invalid_when_zero_inside(annulus005):
    rep = harnack_ratio(annulus005, (0.0, 0.0), 0.5, 300)
    assert not rep.valid


def test_harnack_scale_invariance(exp1):
    scaled = MapSpec(name="3exp", dimension=2, eval=lambda p: 3.0 * exp1.eval(p))
    a = harnack_ratio(exp1, (10.0, 0.0), 1.0, 500)
    b = harnack_ratio(scaled, (10.0, 0.0), 1.0, 500)
    assert a.valid and b.valid
    # post-scaling shifts log|f| by a constant; theta stays of the same order
    assert abs(a.theta_est - b.theta_est) < 0.15
