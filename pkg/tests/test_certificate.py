"""Convex regions, the (delta, epsilon) certificate, and bound validation."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftle_verify import (
    AffineEnv,
    AnalysisSlice,
    Box,
    ContinuousSystem,
    Disc,
    FtleField,
    GridSystem,
    StabilityCertificate,
    certify_delta,
    compute_ftle_field,
    make_certificate,
    make_scripted,
    region_max_ftle,
    slice_to_grid,
    validate_divergence_bound,
)
from ftle_verify.errors import FtleVerifyError, RegionError


def field_of(values, row_coords=None, col_coords=None, horizon=20):
    values = np.asarray(values, dtype=float)
    h, w = values.shape
    return FtleField(
        values,
        np.ones((h, w), dtype=bool),
        horizon,
        "test",
        np.arange(h, dtype=float) if row_coords is None else np.asarray(row_coords, float),
        np.arange(w, dtype=float) if col_coords is None else np.asarray(col_coords, float),
    )


def affine_sliced(matrix, bounds=((-1, 1), (-1, 1)), resolution=(24, 24), offset=None):
    env = AffineEnv(matrix, offset)
    closed = ContinuousSystem(env, make_scripted("constant_force", env, force=0.0))
    return slice_to_grid(closed, AnalysisSlice((0, 1), (0.0, 0.0), resolution, bounds))


# --------------------------------------------------------------------------
# region_max_ftle

def test_region_max_zero_field():
    field = field_of(np.zeros((8, 8)))
    assert region_max_ftle(field, Disc((4.0, 4.0), 3.0)) == 0.0


def test_region_max_single_hot_cell():
    values = np.zeros((8, 8))
    values[3, 3] = 0.5
    field = field_of(values)
    assert region_max_ftle(field, Disc((3.0, 3.0), 1.5)) == 0.5
    assert region_max_ftle(field, Box((5.0, 5.0), (7.0, 7.0))) == 0.0


def test_region_max_pendulum_case_values():
    # disc of radius 1.60 around the origin over a physical lattice whose
    # max inside is 0.7158
    coords = np.linspace(-np.pi, np.pi, 33)
    values = np.full((33, 33), 0.1)
    values[16, 18] = 0.7158  # inside the disc
    values[0, 0] = 2.0  # outside it
    field = field_of(values, coords, coords)
    assert region_max_ftle(field, Disc((0.0, 0.0), 1.60)) == pytest.approx(0.7158)


def test_region_max_empty_intersection():
    field = field_of(np.zeros((4, 4)))
    with pytest.raises(RegionError):
        region_max_ftle(field, Disc((100.0, 100.0), 0.5))


# --------------------------------------------------------------------------
# certify_delta

def test_certify_delta_zero_exponent():
    assert certify_delta(0.0, 10, 0.05) == pytest.approx(0.05, rel=1e-15)


def test_certify_delta_pendulum_case():
    delta = certify_delta(0.7158, 20, 0.05)
    assert 2.9e-8 <= delta <= 3.1e-8


def test_certify_delta_algebra():
    assert certify_delta(1.0, 1, math.e) == pytest.approx(1.0, rel=1e-12)


def test_certify_delta_validation():
    with pytest.raises(ValueError):
        certify_delta(0.1, 0, 0.05)
    with pytest.raises(ValueError):
        certify_delta(0.1, 5, 0.0)


@given(
    st.floats(0.0, 2.0),
    st.integers(1, 50),
    st.floats(1e-6, 10.0),
)
@settings(max_examples=200, deadline=None)
def test_certify_delta_monotone(sigma, t_int, epsilon):
    base = certify_delta(sigma, t_int, epsilon)
    assert certify_delta(sigma + 0.1, t_int, epsilon) < base
    assert certify_delta(sigma, t_int, epsilon * 2.0) > base
    if sigma > 0:
        assert certify_delta(sigma, t_int + 1, epsilon) < base


# --------------------------------------------------------------------------
# certificates

def test_certificate_round_trip():
    cert = make_certificate(Disc((0.0, 0.0), 1.6), 0.7158, 20, 0.05, (64, 64),
                            timestamp="2026-08-10T00:00:00Z")
    payload = json.dumps(cert.to_dict())
    loaded = StabilityCertificate.from_dict(json.loads(payload))
    assert loaded == cert
    assert loaded.delta < certify_delta(0.7158, 20, 0.05)


def test_certificate_rejects_slack_violation():
    sup = certify_delta(0.5, 10, 0.05)
    with pytest.raises(FtleVerifyError):
        StabilityCertificate(Disc((0.0, 0.0), 1.0), 0.5, 10, 0.05, sup, (8, 8), "t")


def test_box_round_trip():
    cert = make_certificate(Box((-1.0, -1.0), (1.0, 1.0)), 0.0, 5, 0.1, (16, 16),
                            timestamp="2026-08-10T00:00:00Z")
    loaded = StabilityCertificate.from_dict(json.loads(json.dumps(cert.to_dict())))
    assert loaded.region == Box((-1.0, -1.0), (1.0, 1.0))


# --------------------------------------------------------------------------
# region sampling

def test_disc_sampling_inside_and_reproducible():
    disc = Disc((2.0, -1.0), 0.7)
    a = disc.sample(500, np.random.default_rng(3))
    b = disc.sample(500, np.random.default_rng(3))
    assert np.array_equal(a, b)
    assert disc.contains(a).all()


def test_box_sampling_inside():
    box = Box((0.0, 0.0), (2.0, 3.0))
    pts = box.sample(200, np.random.default_rng(1))
    assert box.contains(pts).all()


# --------------------------------------------------------------------------
# validate_divergence_bound

def test_validation_translation_ratio_one():
    sys = affine_sliced(np.eye(2), offset=(0.5, 0.25))
    field = compute_ftle_field(sys, 4)
    region = Disc((0.0, 0.0), 0.8)
    report = validate_divergence_bound(sys, region, field, 4, pairs=300, seed=1, tol=0.0)
    assert report.bound == 1.0
    assert report.max_growth == pytest.approx(1.0, rel=1e-12)
    assert report.n_violations == 0


def test_validation_linear_stretch_at_equality():
    sys = affine_sliced(np.diag([2.0, 1.0]))
    field = compute_ftle_field(sys, 1)
    region = Box((-1.0, -1.0), (1.0, 1.0))
    report = validate_divergence_bound(sys, region, field, 1, pairs=500, seed=2, tol=0.0)
    assert report.bound == pytest.approx(2.0, rel=1e-12)
    assert report.max_growth <= report.bound
    assert report.max_growth == pytest.approx(2.0, rel=1e-2)  # nearly tight
    assert report.n_violations == 0


def test_validation_contracting_map():
    sys = affine_sliced(0.5 * np.eye(2))
    field = compute_ftle_field(sys, 3)
    region = Disc((0.0, 0.0), 0.9)
    report = validate_divergence_bound(sys, region, field, 3, pairs=200, seed=3, tol=0.0)
    assert report.max_growth == pytest.approx(0.125, rel=1e-9)
    assert report.n_violations == 0
    assert report.bound >= report.max_growth


def test_validation_affine_zero_violations_zero_tol():
    rng = np.random.default_rng(12)
    for _ in range(5):
        a = rng.normal(size=(2, 2))
        sys = affine_sliced(a)
        field = compute_ftle_field(sys, 2)
        report = validate_divergence_bound(
            sys, Box((-0.9, -0.9), (0.9, 0.9)), field, 2, pairs=200,
            seed=int(rng.integers(1000)), tol=0.0,
        )
        assert report.n_violations == 0


def test_validation_reports_on_grid_systems(simple_wall):
    # grid maps are discontinuous: the validator must report, not raise
    sys = GridSystem(simple_wall, make_scripted("shortest_path", simple_wall))
    field = compute_ftle_field(sys, 6)
    report = validate_divergence_bound(sys, Box((0.0, 0.0), (11.0, 11.0)),
                                       field, 6, pairs=200, seed=0)
    assert report.n_pairs > 0
    assert report.n_violations >= 0
