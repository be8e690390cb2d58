import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cupsense.spectrum import (ComplexImpedance, FeatureKind, FrequencyGrid, Spacing, Spectrum,
                               default_grid, extract_series, from_polar, make_log_grid,
                               parse_kinds, to_polar)


def test_log_grid_endpoints_exact():
    g = make_log_grid(100, 100000, 101)
    assert g.points[0] == 100.0
    assert g.points[100] == 100000.0
    assert g.spacing is Spacing.LOGARITHMIC


def test_log_grid_midpoint_closed_form():
    g = make_log_grid(100, 100000, 101)
    assert g.points[50] == pytest.approx(10 ** (2 + 3 * 50 / 100), rel=1e-12)
    assert g.points[50] == pytest.approx(3162.2776602, abs=1e-6)


@pytest.mark.parametrize("args", [(10, 10, 5), (100, 10, 5), (0, 10, 5), (-1, 10, 5), (1, 10, 1)])
def test_log_grid_rejects_bad_input(args):
    with pytest.raises(ValueError):
        make_log_grid(*args)


@given(st.floats(1e-3, 1e4), st.floats(1.01, 1e4), st.integers(2, 300))
def test_log_grid_constant_ratio(f_min, span, n):
    g = make_log_grid(f_min, f_min * span, n)
    assert np.all(np.diff(g.points) > 0)
    ratios = g.points[1:] / g.points[:-1]
    np.testing.assert_allclose(ratios, ratios[0], rtol=1e-12)


def test_grid_must_increase():
    with pytest.raises(ValueError):
        FrequencyGrid([1.0, 1.0, 2.0])
    with pytest.raises(ValueError):
        FrequencyGrid([0.0, 1.0])


@pytest.mark.parametrize("z, amp, ph", [
    ((1, 0), 1.0, 0.0),
    ((0, -1), 1.0, -math.pi / 2),
    ((3, 4), 5.0, math.atan2(4, 3)),
])
def test_to_polar_examples(z, amp, ph):
    a, p = to_polar(ComplexImpedance(*z))
    assert a == pytest.approx(amp, abs=1e-12)
    assert p == pytest.approx(ph, abs=1e-12)


def test_to_polar_phase_range_includes_pi():
    assert to_polar(ComplexImpedance(-1.0, 0.0))[1] == pytest.approx(math.pi)


def test_from_polar_examples():
    assert from_polar(1, 0) == ComplexImpedance(1.0, 0.0)
    z = from_polar(5, 0.9272952)
    assert z.real == pytest.approx(3.0, abs=1e-6) and z.imag == pytest.approx(4.0, abs=1e-6)
    z = from_polar(5, math.atan2(4, 3))
    assert abs(z.real - 3) < 1e-9 and abs(z.imag - 4) < 1e-9
    assert from_polar(0, 1.234) == ComplexImpedance(0.0, 0.0)
    with pytest.raises(ValueError):
        from_polar(-1, 0)


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@given(finite, finite)
def test_polar_round_trip(re, im):
    if math.hypot(re, im) < 1e-6:
        return
    z = from_polar(*to_polar(ComplexImpedance(re, im)))
    scale = math.hypot(re, im)
    assert abs(z.real - re) <= 1e-9 * scale and abs(z.imag - im) <= 1e-9 * scale


def test_impedance_must_be_finite():
    with pytest.raises(ValueError):
        ComplexImpedance(float("nan"), 0.0)


def test_spectrum_validation():
    g = FrequencyGrid([1.0, 2.0])
    with pytest.raises(ValueError):
        Spectrum(g, [1 + 0j])
    with pytest.raises(ValueError):
        Spectrum(g, [1 + 0j, complex(np.inf, 0)])
    s = Spectrum(g, [ComplexImpedance(3, 4), ComplexImpedance(0, -1)])
    assert s.meta.stimulus_amplitude_mV == 50
    with pytest.raises(ValueError):
        s.values[0] = 0


def test_default_grid():
    g = default_grid()
    assert len(g) == 101 and g.points[0] == 100 and g.points[-1] == 100000


def test_extract_series_examples():
    g = default_grid()
    s = Spectrum(g, np.full(101, 100 + 0j))
    np.testing.assert_array_equal(extract_series(s, FeatureKind.AMPLITUDE), np.full(101, 100.0))
    np.testing.assert_array_equal(extract_series(s, FeatureKind.PHASE), np.zeros(101))
    s2 = Spectrum(FrequencyGrid([1.0, 2.0]), [3 + 4j, -1j])
    np.testing.assert_array_equal(extract_series(s2, FeatureKind.IMAGINARY), [4.0, -1.0])
    np.testing.assert_array_equal(extract_series(s2, FeatureKind.REAL), [3.0, 0.0])


@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=20))
def test_amplitude_pythagoras(pairs):
    g = FrequencyGrid(np.arange(1, len(pairs) + 1, dtype=float))
    s = Spectrum(g, [complex(a, b) for a, b in pairs])
    amp = extract_series(s, FeatureKind.AMPLITUDE)
    re, im = extract_series(s, FeatureKind.REAL), extract_series(s, FeatureKind.IMAGINARY)
    np.testing.assert_allclose(amp ** 2, re ** 2 + im ** 2, rtol=1e-9, atol=1e-300)


def test_feature_kind_has_four_variants():
    assert {k.value for k in FeatureKind} == {"amplitude", "phase", "real", "imaginary"}


def test_parse_kinds():
    assert parse_kinds("real,imaginary") == (FeatureKind.REAL, FeatureKind.IMAGINARY)
    with pytest.raises(ValueError):
        parse_kinds(["phase", "phase"])
