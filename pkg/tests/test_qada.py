import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qadapose.errors import ConfigError, OutOfFieldError
from qadapose.qada import (
    CalibrationParams, RatioPair, ideal_ratios, image_point_from_ratios, quadrant_fractions,
    ratios_from_image_point,
)

L = 2.75


def test_reference_constants(ref_cal):
    assert (ref_cal.h_ap, ref_cal.lam, ref_cal.delta, ref_cal.l) == (2.55, 1.25, 0.1, 2.75)
    assert (ref_cal.c_x, ref_cal.c_y) == (0.055, -0.035)


@pytest.mark.parametrize(
    "spot, expected",
    [
        ((0.0, 0.0), (0.25, 0.25, 0.25, 0.25)),
        ((L / 2, L / 2), (1.0, 0.0, 0.0, 0.0)),
        ((L / 4, 0.0), (0.375, 0.125, 0.125, 0.375)),
    ],
    ids=["centre", "corner", "quarter-right"],
)
def test_quadrant_fractions(spot, expected):
    f = quadrant_fractions(*spot, L)
    np.testing.assert_allclose(f.as_array(), expected, atol=1e-15)
    assert f.f1 + f.f4 == pytest.approx(0.75 if spot == (L / 4, 0.0) else f.f1 + f.f4)


def test_quadrant_fractions_out_of_field():
    with pytest.raises(OutOfFieldError):
        quadrant_fractions(1.01 * L, 0.0, L)


def test_quadrant_fractions_saturation_flag():
    assert quadrant_fractions(0.6 * L, 0.0, L).saturated
    assert not quadrant_fractions(0.4 * L, 0.0, L).saturated


@pytest.mark.parametrize(
    "spot, expected",
    [((0.0, 0.0), (0.0, 0.0)), ((L / 4, 0.0), (-0.5, 0.0)), ((-L / 2, -L / 2), (1.0, 1.0))],
)
def test_ideal_ratios(spot, expected):
    r = ideal_ratios(quadrant_fractions(*spot, L))
    np.testing.assert_allclose(r.as_array(), expected, atol=1e-15)


def test_image_point_offset(ref_cal):
    np.testing.assert_allclose(image_point_from_ratios(RatioPair(0.0, 0.0), ref_cal), [0.055, -0.035])


def test_image_point_ideal():
    cal = CalibrationParams(h_ap=2.55, lam=1.0, delta=0.0, l=2.75, c_x=0.0, c_y=0.0)
    np.testing.assert_allclose(image_point_from_ratios(RatioPair(-0.5, 0.0), cal), [0.6875, 0.0])


def test_zero_point_ratios_come_from_offset(ref_cal):
    p = ratios_from_image_point([0.0, 0.0], ref_cal)
    np.testing.assert_allclose(image_point_from_ratios(p, ref_cal), [0.0, 0.0], atol=1e-15)


def test_inverse_matches_linear_solve(ref_cal):
    xr = np.array([0.31, -0.42])
    g, d = ref_cal.gain, ref_cal.delta
    m = -g * np.array([[1.0, d], [-d, 1.0]])
    expected = np.linalg.solve(m, xr - [ref_cal.c_x, ref_cal.c_y])
    np.testing.assert_allclose(ratios_from_image_point(xr, ref_cal), expected, atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.5, 2), st.floats(-0.3, 0.3))
def test_ratio_round_trip(px, py, lam, delta):
    cal = CalibrationParams(h_ap=2.55, lam=lam, delta=delta, l=2.75, c_x=0.01, c_y=-0.02)
    back = ratios_from_image_point(image_point_from_ratios(np.array([px, py]), cal), cal)
    np.testing.assert_allclose(back, [px, py], atol=1e-12)


def test_ideal_ratios_invert_spot_position():
    # with lambda = 1 and no skew the ratios are -2 x / l
    for x, y in [(0.3, -0.2), (-0.9, 0.5)]:
        r = ideal_ratios(quadrant_fractions(x, y, L))
        np.testing.assert_allclose(r.as_array(), [-2 * x / L, -2 * y / L], atol=1e-14)


def test_calibration_text_round_trip(ref_cal):
    assert CalibrationParams.from_text(ref_cal.to_text()) == ref_cal


@pytest.mark.parametrize("text, key", [
    ("h_ap_mm = -1", "h_ap_mm"),
    ("lambda = abc", "lambda"),
    ("delta_rad = 0.7", "delta_rad"),
    ("focal = 3", "focal"),
])
def test_calibration_text_errors_name_key(ref_cal, text, key):
    base = {k: v for k, v in (ln.split(" = ") for ln in ref_cal.to_text().splitlines()[1:])}
    k, v = text.split(" = ")
    base[k] = v
    body = "[calibration]\n" + "".join(f"{a} = {b}\n" for a, b in base.items())
    with pytest.raises(ConfigError) as info:
        CalibrationParams.from_text(body)
    assert info.value.key == key


def test_calibration_missing_key(ref_cal):
    text = "\n".join(ln for ln in ref_cal.to_text().splitlines() if not ln.startswith("l_mm"))
    with pytest.raises(ConfigError) as info:
        CalibrationParams.from_text(text)
    assert info.value.key == "l_mm"
