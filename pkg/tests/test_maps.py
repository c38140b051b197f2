"""The concrete map zoo: evaluation rules, folds, branches, seams, oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrdyn.maps import build_map, registered_maps, registry_manifest
from qrdyn.maps.planar import (
    annulus_fixed_map,
    exp_map,
    fatou_base,
    fatou_modified_map,
)
from qrdyn.maps.sine import qr_sine_map
from qrdyn.maps.zorich import (
    BeamIndex,
    even_beams,
    fold_tent,
    measure_contraction,
    zorich_F,
    zorich_f_a,
    zorich_h,
    zorich_h_inverse,
    zorich_inverse_branch,
)
from qrdyn.mapspec import DomainError, ParameterError


# -- square-to-hemisphere map ---------------------------------------------------

def test_h_center_maps_to_pole():
    assert np.allclose(zorich_h((0.0, 0.0)), (0.0, 0.0, 1.0))


def test_h_axis_boundary_point():
    # direct evaluation of the radial construction at (1, 0)
    assert np.allclose(zorich_h((1.0, 0.0)), (1.0, 0.0, 0.0), atol=1e-12)


def test_h_boundary_lands_on_equator():
    t = np.linspace(-1.0, 1.0, 250)
    ones = np.ones_like(t)
    boundary = np.vstack(
        [
            np.column_stack([t, ones]),
            np.column_stack([t, -ones]),
            np.column_stack([ones, t]),
            np.column_stack([-ones, t]),
        ]
    )
    img = zorich_h(boundary)
    assert np.max(np.abs(img[:, 2])) < 1e-12


def test_h_is_unit_vector_and_invertible():
    rng = np.random.default_rng(0)
    p = rng.uniform(-1, 1, size=(500, 2))
    img = zorich_h(p)
    assert np.allclose(np.linalg.norm(img, axis=1), 1.0)
    assert np.all(img[:, 2] >= -1e-15)
    assert np.allclose(zorich_h_inverse(img), p, atol=1e-9)


def test_h_rejects_outside_square():
    with pytest.raises(DomainError):
        zorich_h((1.5, 0.0))


# -- beam map -------------------------------------------------------------------

def test_F_central_beam_values():
    assert np.allclose(zorich_F((0.0, 0.0, 0.0)), (0.0, 0.0, 1.0))
    assert np.allclose(zorich_F((0.0, 0.0, 1.0)), (0.0, 0.0, np.e))


def test_F_one_fold_reflects_image():
    assert np.allclose(zorich_F((2.0, 0.0, 0.0)), (0.0, 0.0, -1.0))


def test_F_periodicity():
    rng = np.random.default_rng(1)
    x = rng.uniform(-8, 8, size=(1000, 3))
    assert np.array_equal(zorich_F(x + [4.0, 0.0, 0.0]), zorich_F(x))
    assert np.array_equal(zorich_F(x + [0.0, 4.0, 0.0]), zorich_F(x))


def test_F_modulus_depends_only_on_height_in_beam():
    rng = np.random.default_rng(2)
    p = rng.uniform(-1, 1, size=(300, 2))
    x3 = rng.uniform(-2, 2, size=300)
    pts = np.column_stack([p, x3])
    assert np.allclose(np.linalg.norm(zorich_F(pts), axis=1), np.exp(x3))


@settings(max_examples=60, deadline=None)
@given(st.floats(-50, 50, allow_nan=False))
def test_fold_tent_range_and_period(x):
    f, p = fold_tent(np.array([x]))
    assert -1.0 <= f[0] <= 1.0
    f4, p4 = fold_tent(np.array([x + 4.0]))
    assert np.isclose(f4[0], f[0], atol=1e-9)
    assert p4[0] == p[0]


def test_beam_index_parity():
    assert BeamIndex(1, 1).is_even
    assert not BeamIndex(1, 2).is_even
    assert BeamIndex(-2, 0).parity == 0


# -- shifted map and inverse branches --------------------------------------------

def test_f_a_shift_and_parameter_guard():
    assert np.allclose(zorich_f_a((0.0, 0.0, 0.0), a=10.0), (0.0, 0.0, -9.0))
    with pytest.raises(ParameterError):
        zorich_f_a((0.0, 0.0, 0.0), a=-1.0)


def test_f_a_attracting_fixed_point(zorich10, zorich_fixed_point):
    xi = zorich_fixed_point
    assert np.linalg.norm(zorich10(xi) - xi) < 1e-9
    # height sits just above -a as the beam formula predicts
    assert -10.0 < xi[2] < -10.0 + 2e-4


def test_f_a_maps_central_beam_above_minus_a():
    rng = np.random.default_rng(3)
    pts = np.column_stack(
        [rng.uniform(-1, 1, 10_000), rng.uniform(-1, 1, 10_000), rng.uniform(-6, 6, 10_000)]
    )
    img = zorich_f_a(pts, a=10.0)
    assert np.all(img[:, 2] > -10.0)


def test_inverse_branch_central_axis():
    T = 7.0
    y = (0.0, 0.0, np.exp(T) - 10.0)
    assert np.allclose(zorich_inverse_branch(y, (0, 0), a=10.0, M=2.0), (0.0, 0.0, T))


def test_inverse_branch_round_trip_all_even_beams():
    rng = np.random.default_rng(4)
    y = rng.uniform([-30, -30, 2.0], [30, 30, 40.0], size=(1000, 3))
    for r in even_beams(2):
        x = zorich_inverse_branch(y, r, a=10.0, M=2.0)
        assert np.max(np.linalg.norm(zorich_f_a(x, 10.0) - y, axis=1)) < 1e-9
        # tract containment
        assert np.all(np.abs(x[:, 0] - 2 * r[0]) < 1.0)
        assert np.all(np.abs(x[:, 1] - 2 * r[1]) < 1.0)
        assert np.all(x[:, 2] > 2.0)


def test_inverse_branch_translation_between_even_shifts():
    # exact beam-to-beam translation holds for shifts by even integers in
    # both coordinates (the tent fold is a plain translation there)
    rng = np.random.default_rng(5)
    y = rng.uniform([-10, -10, 2.0], [10, 10, 20.0], size=(200, 3))
    base = zorich_inverse_branch(y, (0, 0), a=10.0, M=2.0)
    for r in [(2, 0), (0, 2), (-2, 2), (4, -2)]:
        shifted = zorich_inverse_branch(y, r, a=10.0, M=2.0)
        assert np.allclose(shifted - base, [2 * r[0], 2 * r[1], 0.0], atol=1e-12)


def test_inverse_branch_guards():
    with pytest.raises(DomainError):
        zorich_inverse_branch((0.0, 0.0, 1.0), (0, 0), a=10.0, M=2.0)
    with pytest.raises(ParameterError):
        zorich_inverse_branch((0.0, 0.0, 5.0), (1, 0), a=10.0, M=2.0)


def test_measured_contraction_regimes():
    alpha = measure_contraction(10.0, 2.0, 10_000)
    assert 0.0 < alpha < 1.0
    loose = measure_contraction(0.1, -5.0, 10_000)
    assert loose > 1.0  # flagged regime: no contraction for small shifts


def test_contraction_translation_equivariance():
    rng = np.random.default_rng(6)
    x = rng.uniform([-5, -5, 2.0], [5, 5, 12.0], size=(200, 3))
    y = x + rng.normal(scale=0.1, size=x.shape)
    y[:, 2] = np.maximum(y[:, 2], 2.0)
    lx0 = zorich_inverse_branch(x, (0, 0), a=10.0, M=2.0)
    ly0 = zorich_inverse_branch(y, (0, 0), a=10.0, M=2.0)
    lx2 = zorich_inverse_branch(x, (2, 2), a=10.0, M=2.0)
    ly2 = zorich_inverse_branch(y, (2, 2), a=10.0, M=2.0)
    r0 = np.linalg.norm(lx0 - ly0, axis=1)
    r2 = np.linalg.norm(lx2 - ly2, axis=1)
    assert np.allclose(r0, r2)


# -- trigonometric-type analogue --------------------------------------------------

@pytest.mark.parametrize("n", [2, 3])
def test_sine_fixes_origin(n):
    assert np.allclose(qr_sine_map(np.zeros(n), 6.0), np.zeros(n))


@pytest.mark.parametrize("n", [2, 3])
def test_sine_axis_growth_above_shoulder(n):
    lam = 6.0
    for t in (1.5, 3.0):
        x = np.zeros(n)
        x[-1] = t
        assert np.isclose(np.linalg.norm(qr_sine_map(x, lam)), lam * np.exp(t - 1.0))


def test_sine_reflection_consistency():
    rng = np.random.default_rng(7)
    x = rng.uniform(-3, 3, size=(500, 3))
    mirrored = x.copy()
    mirrored[:, 2] = -mirrored[:, 2]
    a = qr_sine_map(x, 6.0)
    b = qr_sine_map(mirrored, 6.0)
    assert np.array_equal(a[:, :2], b[:, :2])
    assert np.array_equal(a[:, 2], -b[:, 2])


@pytest.mark.parametrize("n", [2, 3])
def test_sine_default_lambda_is_expanding(n):
    from qrdyn.calculus import derivative_matrix, singular_values

    spec = build_map("qr-sine", n=n)
    g = np.linspace(-2.9, 2.9, 9 if n == 3 else 25)
    pts = np.array(np.meshgrid(*([g] * n), indexing="ij")).reshape(n, -1).T
    pts = pts[spec.seam_distance(pts) > 0.05]
    _, smin, _ = singular_values(derivative_matrix(spec, pts))
    assert smin.min() >= 1.2


def test_sine_rejects_bad_parameters():
    with pytest.raises(ParameterError):
        qr_sine_map(np.zeros(3), -1.0)
    with pytest.raises(ParameterError):
        build_map("qr-sine", n=4)


# -- planar band map ---------------------------------------------------------------

def test_fatou_fixed_point_is_exact():
    assert abs(fatou_modified_map(75.0 + 0j, 50.0) - 75.0) < 1e-12


def test_fatou_moves_right_beyond_fixed_point():
    xs = np.array([75.5, 76.0, 90.0, 120.0])
    vals = fatou_modified_map(xs.astype(complex), 50.0)
    assert np.all(vals.real > xs)
    assert np.allclose(vals.imag, 0.0)


def test_fatou_seams_match_base_map():
    M = 50.0
    for seam in (M, 2 * M):
        z = seam + 1.3j
        band = fatou_base(z) + (1 + np.exp(-z)) * np.sin(np.pi * z.real / M)
        assert abs(fatou_base(z) - band) < 1e-12
        left = fatou_modified_map(z - 1e-13, M)
        right = fatou_modified_map(z + 1e-13, M)
        assert abs(left - right) < 1e-10


def test_fatou_rejects_bad_band_width():
    with pytest.raises(ParameterError):
        fatou_modified_map(1.0 + 0j, -5.0)


# -- annulus-pinned map --------------------------------------------------------------

def test_annulus_inner_contraction():
    assert np.isclose(annulus_fixed_map(0.5 + 0j, 0.05), 0.475 + 0j)


def test_annulus_ring_is_pointwise_fixed():
    z = 2.5 * np.exp(1j * np.linspace(0, 2 * np.pi, 17))
    assert np.allclose(annulus_fixed_map(z, 0.05), z)


def test_annulus_seams_continuous():
    for s in (1.0, 2.0, 3.0, 4.0):
        z = s * np.exp(0.7j)
        inner = annulus_fixed_map((s - 1e-9) * np.exp(0.7j), 0.05)
        outer = annulus_fixed_map((s + 1e-9) * np.exp(0.7j), 0.05)
        assert abs(inner - outer) < 1e-7


def test_annulus_ball_three_maps_into_itself():
    rr = np.linspace(0.0, 3.0, 1500, endpoint=False)
    th = np.exp(1j * np.linspace(0, 2 * np.pi, 73))
    z = np.outer(rr, th).ravel()
    vals = np.abs(annulus_fixed_map(z, 0.05))
    assert vals.max() < 3.0
    assert vals.max() > 3.0 - 0.01  # the sup is attained in the limit |z| -> 3


def test_annulus_rejects_bad_delta():
    with pytest.raises(ParameterError):
        annulus_fixed_map(1.0 + 0j, 0.0)


# -- exponential family ----------------------------------------------------------------

def test_exp_basic_value():
    assert np.isclose(exp_map(0.0 + 0j, 0.2), 0.2)


def test_exp_real_fixed_points_against_bisection(exp_fixed_points):
    q, p = exp_fixed_points
    assert abs(0.2 * np.exp(q) - q) < 1e-12
    assert abs(0.2 * np.exp(p) - p) < 1e-12
    assert abs(q - 0.2592) < 1e-4
    assert abs(p - 2.5426) < 1e-4


def test_exp_rejects_zero_lambda():
    with pytest.raises(ParameterError):
        exp_map(0.0 + 0j, 0.0)


# -- MapSpec level properties -------------------------------------------------------------

@pytest.mark.parametrize("name", registered_maps())
def test_eval_total_and_locally_lipschitz(name):
    spec = build_map(name)
    rng = np.random.default_rng(8)
    pts = rng.uniform(-5, 5, size=(200, spec.dimension))
    base = spec(pts)
    assert base.shape == pts.shape
    h = rng.normal(size=pts.shape)
    h *= 1e-6 / np.linalg.norm(h, axis=1)[:, None]
    moved = spec(pts + h)
    ratio = np.linalg.norm(moved - base, axis=1) / 1e-6
    assert np.all(np.isfinite(ratio))


@pytest.mark.parametrize("name", ["zorich", "exp"])
def test_omitted_values_not_hit_on_sample(name):
    spec = build_map(name)
    rng = np.random.default_rng(9)
    pts = rng.uniform(-20, 20, size=(1_000_000, spec.dimension))
    img = spec(pts)
    for v in spec.omitted_values:
        gap = np.min(np.linalg.norm(img - np.asarray(v), axis=1))
        assert gap > 0.0


def test_certificate_soundness_fatou(fatou50):
    cert = fatou50.escape_certificate
    rng = np.random.default_rng(10)
    pts = np.column_stack([rng.uniform(100.0, 400.0, 10_000), rng.uniform(-200, 200, 10_000)])
    assert np.all(cert.contains(pts))
    img = fatou50(pts)
    assert np.all(cert.contains(img))
    assert np.all(cert.drift(img) >= cert.drift(pts) + cert.margin)


def test_certificate_soundness_exp(exp02, exp_fixed_points):
    cert = exp02.escape_certificate
    _, p = exp_fixed_points
    floor = max(10.0, p + 1.0)
    rng = np.random.default_rng(11)
    pts = np.column_stack([rng.uniform(floor + 0.01, 30.0, 10_000), np.zeros(10_000)])
    assert np.all(cert.contains(pts))
    img = exp02(pts)
    assert np.all(cert.contains(img))
    assert np.all(cert.drift(img) >= cert.drift(pts) + cert.margin)


def test_registry_manifest_serialisable():
    manifest = registry_manifest()
    assert set(manifest) == set(registered_maps())
    assert len(manifest) >= 5
    import json

    text = json.dumps(manifest, sort_keys=True)
    assert "zorich" in text and "qr-sine" in text


def test_build_map_rejects_unknown():
    with pytest.raises(ParameterError):
        build_map("not-a-map")
    with pytest.raises(ParameterError):
        build_map("exp", nonsense=1.0)
