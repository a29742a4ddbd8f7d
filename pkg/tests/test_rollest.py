import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from disptrans.core import new_disparity_image
from disptrans.errors import DegenerateGeometryError, UnderdeterminedError
from disptrans.rollest import (GssConfig, count_gss_iterations, energy_at_gamma, estimate_roll_gss,
                               scan_energy_curve)
from disptrans.rotation import rotate_coords
from disptrans.synth import REFERENCE_MODEL, SyntheticSpec, add_noise, generate_ground_truth

from conftest import constant_map


def energy_oracle(disp, gamma):
    """Independent route: polyfit on absolute rotated rows."""
    v, u = np.nonzero(disp.valid)
    d = disp.values[disp.valid]
    _, vr = rotate_coords(u.astype(float), v.astype(float), disp.center_u, disp.center_v, gamma)
    coef = np.polyfit(vr, d, 2)
    r = d - np.polyval(coef, vr)
    return math.sqrt(np.mean(r * r))


def test_noiseless_minimum_recovers_generator(small_spec):
    disp = generate_ground_truth(small_spec)
    e, model = energy_at_gamma(disp, small_spec.gamma)
    assert e <= 1e-6
    absolute = model.shifted(disp.center_v)
    np.testing.assert_allclose(absolute.coefficients, REFERENCE_MODEL.coefficients, rtol=1e-8, atol=1e-8)


def test_constant_map_fits_exactly():
    for g in (0.0, 0.4, -1.1):
        e, model = energy_at_gamma(constant_map(c=12.5), g)
        assert e == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(model.coefficients, (12.5, 0, 0), atol=1e-10)


@pytest.mark.parametrize("gamma", [0.0, 0.13, -0.7, 1.2])
def test_matches_polyfit_oracle(small_spec, gamma):
    disp = add_noise(generate_ground_truth(small_spec), 5.0, 3)
    assert energy_at_gamma(disp, gamma)[0] == pytest.approx(energy_oracle(disp, gamma), rel=1e-9)


def test_half_turn_same_energy(small_spec):
    disp = add_noise(generate_ground_truth(small_spec), 20.0, 1)
    for g in (-1.3, 0.0, 0.2, 0.9):
        assert abs(energy_at_gamma(disp, g)[0] - energy_at_gamma(disp, g + math.pi)[0]) <= 1e-9


def test_underdetermined():
    with pytest.raises(UnderdeterminedError):
        energy_at_gamma(new_disparity_image(2, 1, [1.0, 2.0]), 0.0)


def test_single_row_is_degenerate():
    with pytest.raises(DegenerateGeometryError):
        energy_at_gamma(new_disparity_image(5, 1, [1.0, 2.0, 3.0, 4.0, 5.0]), 0.0)


def test_scan_minimiser_within_one_step():
    disp = generate_ground_truth(SyntheticSpec(width=96, height=72, gamma=0.1))
    step = math.pi / 360
    curve = scan_energy_curve(disp, step)
    g = min(curve, key=lambda c: c[1])[0]
    assert abs(g - 0.1) <= step
    assert [c[0] for c in curve] == sorted(c[0] for c in curve)


def test_scan_constant_map():
    assert all(e == pytest.approx(0, abs=1e-12) for _, e in scan_energy_curve(constant_map(), 0.1))


def test_scan_sample_count():
    curve = scan_energy_curve(constant_map(), math.pi / 4)
    assert len(curve) == 4
    np.testing.assert_allclose([c[0] for c in curve], [-math.pi / 4, 0, math.pi / 4, math.pi / 2])


def test_iteration_count_default_bracket(small_spec):
    est = estimate_roll_gss(generate_ground_truth(small_spec), GssConfig(coarse_scan_steps=0))
    assert est.iterations == 16
    assert est.evaluations == 2 + 2 * 16


@given(st.floats(0.1, 10), st.floats(1e-7, 1e-1))
def test_iteration_bound(width, tol):
    k = 0.618
    n = count_gss_iterations(width, tol, k)
    assert k ** n * width <= tol * (1 + 1e-9)
    if n > 0:
        assert k ** (n - 1) * width > tol * (1 - 1e-9)


def test_recovers_generator_angle():
    disp = generate_ground_truth(SyntheticSpec(width=128, height=96, gamma=0.3))
    est = estimate_roll_gss(disp, GssConfig(tol=1e-6, coarse_scan_steps=64))
    assert abs(est.gamma - 0.3) <= 1e-4
    assert est.e_min == pytest.approx(energy_at_gamma(disp, est.gamma)[0], abs=1e-12)
    assert -math.pi / 2 < est.gamma <= math.pi / 2


def test_constant_map_is_flat():
    est = estimate_roll_gss(constant_map())
    assert est.flat
    assert est.e_min == pytest.approx(0.0, abs=1e-12)
    assert est.gamma == 0.0


def test_bare_search_on_unimodal_curve_agrees_with_scan():
    disp = add_noise(generate_ground_truth(SyntheticSpec(width=96, height=72, gamma=-0.25)), 10.0, 4)
    step = 0.005
    curve = scan_energy_curve(disp, step)
    e = np.array([c[1] for c in curve])
    i = int(np.argmin(e))
    # unimodal near the minimum (the curve is pi-periodic, so it peaks again
    # roughly a quarter turn away)
    w = int(0.8 / step)
    assert np.all(np.diff(e[i - w:i + 1]) < 0) and np.all(np.diff(e[i:i + w]) > 0)
    for steps in (0, 36):
        cfg = GssConfig(tol=1e-5, coarse_scan_steps=steps)
        assert abs(estimate_roll_gss(disp, cfg).gamma - curve[i][0]) <= max(cfg.tol, step)


def test_wraps_into_interval():
    # a roll just below -pi/2 is the same as one just below +pi/2
    disp = generate_ground_truth(SyntheticSpec(width=64, height=48, gamma=math.pi / 2 - 0.01))
    est = estimate_roll_gss(disp, GssConfig(tol=1e-7))
    assert -math.pi / 2 < est.gamma <= math.pi / 2
    assert abs(est.gamma - (math.pi / 2 - 0.01)) < 1e-5


def test_narrow_bracket_is_respected():
    disp = generate_ground_truth(SyntheticSpec(width=64, height=48, gamma=0.05))
    cfg = GssConfig(gamma_lo=0.0, gamma_hi=0.2, tol=1e-7, coarse_scan_steps=8)
    est = estimate_roll_gss(disp, cfg)
    assert 0.0 < est.gamma <= 0.2
    assert abs(est.gamma - 0.05) < 1e-5


@settings(max_examples=15, deadline=None)
@given(st.floats(-0.7, 0.7), st.floats(-0.05, 0.05))
def test_shifting_generator_angle_shifts_estimate(g, shift):
    spec = SyntheticSpec(width=48, height=36, gamma=g)
    cfg = GssConfig(tol=1e-7)
    a = estimate_roll_gss(generate_ground_truth(spec), cfg).gamma
    b = estimate_roll_gss(generate_ground_truth(replace(spec, gamma=g + shift)), cfg).gamma
    assert b - a == pytest.approx(shift, abs=1e-5)


@pytest.mark.parametrize("kw", [dict(gamma_lo=1, gamma_hi=0), dict(k=0.4), dict(tol=0), dict(coarse_scan_steps=-1)])
def test_bad_config(kw):
    with pytest.raises(ValueError):
        GssConfig(**kw)
