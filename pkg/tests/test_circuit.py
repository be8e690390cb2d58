import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cupsense.circuit import (Capacitor, ClassSpec, ConstantPhase, DegenerateCircuit,
                              DriftModel, Parallel, Resistor, Series, circuit_from_dict,
                              circuit_impedance, circuit_to_dict, drifted_template,
                              element_impedance, generate_freshness_dataset,
                              generate_kind_dataset, parameter_names, parameters,
                              simulate_sweep, with_parameters)
from cupsense.spectrum import FrequencyGrid, default_grid, make_log_grid

RANDLES = Series((Resistor(50.0), Parallel((Resistor(100.0), Capacitor(1e-6)))))


def test_element_examples():
    assert element_impedance(Resistor(100), 10000) == 100
    z = element_impedance(Capacitor(1e-6), 10000)
    assert z.real == pytest.approx(0, abs=1e-12) and z.imag == pytest.approx(-100)
    z = element_impedance(ConstantPhase(1e-6, 1.0), 10000)
    assert z.real == pytest.approx(0, abs=1e-12) and z.imag == pytest.approx(-100)


@pytest.mark.parametrize("omega", [0.0, -1.0])
def test_element_rejects_nonpositive_omega(omega):
    with pytest.raises(ValueError):
        element_impedance(Resistor(1), omega)


@pytest.mark.parametrize("bad", [lambda: Resistor(0), lambda: Capacitor(-1),
                                 lambda: ConstantPhase(0, 0.5), lambda: ConstantPhase(1, 1.2),
                                 lambda: Series((Resistor(1),)), lambda: Parallel(())])
def test_invalid_elements(bad):
    with pytest.raises(ValueError):
        bad()


@given(st.floats(1e-3, 1e8), st.floats(1e-12, 1e3), st.floats(0, 1))
def test_element_phase_bounds(omega, q, alpha):
    for e in (Resistor(q * 1e3 + 1), Capacitor(q), ConstantPhase(q, alpha)):
        ph = np.angle(element_impedance(e, omega))
        assert -math.pi / 2 - 1e-12 <= ph <= 1e-12
    assert np.angle(element_impedance(Resistor(5.0), omega)) == 0
    assert np.angle(element_impedance(Capacitor(q), omega)) == pytest.approx(-math.pi / 2, abs=1e-12)
    assert np.angle(element_impedance(ConstantPhase(q, alpha), omega)) == pytest.approx(
        -alpha * math.pi / 2, abs=1e-12)


def test_circuit_examples():
    assert circuit_impedance(Parallel((Resistor(100), Resistor(100))), 123.0) == pytest.approx(50)
    z = circuit_impedance(Series((Resistor(100), Capacitor(1e-6))), 10000)
    assert z == pytest.approx(100 - 100j)
    assert abs(z) == pytest.approx(141.4214, abs=1e-4)
    assert np.angle(z) == pytest.approx(-math.pi / 4)
    z = circuit_impedance(RANDLES, 1e-3)
    assert abs(z.real - 150) < 1e-3 and abs(z.imag) < 1e-3


@given(st.floats(1e-2, 1e7))
def test_series_is_sum(omega):
    a, b = Parallel((Resistor(100), ConstantPhase(2e-6, 0.8))), Capacitor(3e-7)
    za, zb = circuit_impedance(a, omega), circuit_impedance(b, omega)
    assert abs(circuit_impedance(Series((a, b)), omega) - (za + zb)) <= 1e-12 * abs(za + zb)


def test_series_rc_amplitude_non_increasing():
    amp = np.abs(circuit_impedance(Series((Resistor(100), Capacitor(1e-6))), default_grid().omega))
    assert np.all(np.diff(amp) <= 0)


def test_degenerate_parallel():
    # a 0-exponent CPE is a pure conductance; +1/R and -1/R branches cannot be built,
    # so use a capacitor pair whose admittances cancel only in the limit -> not degenerate
    assert np.isfinite(circuit_impedance(Parallel((Capacitor(1e-6), Capacitor(1e-6))), 1.0))
    from cupsense import circuit as cm

    class Short:  # zero admittance branch
        symbols = ()

        def impedance(self, omega):
            return np.inf

    orig = cm._ELEMENTS
    cm._ELEMENTS = orig + (Short,)
    try:
        with pytest.raises(DegenerateCircuit):
            circuit_impedance(Parallel((Short(), Short())), 1.0)
    finally:
        cm._ELEMENTS = orig


def test_parameter_names_and_rebuild():
    c = Series((Resistor(10), Parallel((Resistor(20), ConstantPhase(1e-6, 0.9)))))
    assert parameter_names(c) == ["R0", "R1", "Q2", "alpha2"]
    c2 = with_parameters(c, {"R1": 30.0})
    assert parameters(c2)["R1"] == 30.0 and parameters(c2)["R0"] == 10.0
    with pytest.raises(KeyError):
        with_parameters(c, {"C9": 1.0})


def test_circuit_dict_round_trip():
    c = Series((Resistor(10), Parallel((Resistor(20), ConstantPhase(1e-6, 0.9))), Capacitor(1e-5)))
    assert circuit_from_dict(circuit_to_dict(c)) == c
    with pytest.raises(ValueError, match="children\\[1\\]"):
        circuit_from_dict({"type": "series", "children": [{"type": "R", "R": 1}, {"type": "X"}]})


def test_simulate_sweep_noiseless():
    c = Series((Resistor(100), Capacitor(1e-6)))
    g = default_grid()
    s = simulate_sweep(c, g, 0.0)
    i = int(np.argmin(np.abs(g.points - 1591.55)))
    z = s.values[i]
    assert z.real == pytest.approx(100, rel=0.02) and z.imag == pytest.approx(-100, rel=0.02)
    assert simulate_sweep(c, g, 0.0) == s


def test_simulate_sweep_seeded_noise():
    c = Series((Resistor(100), Capacitor(1e-6)))
    a = simulate_sweep(c, default_grid(), 0.01, 1)
    assert a == simulate_sweep(c, default_grid(), 0.01, 1)
    assert a != simulate_sweep(c, default_grid(), 0.01, 2)
    with pytest.raises(ValueError):
        simulate_sweep(c, default_grid(), -0.1)


def test_kind_dataset_shape(kind_dataset):
    assert len(kind_dataset) == 200
    assert len(set(kind_dataset.labels)) == 20


def test_kind_dataset_noiseless_equals_templates():
    specs = [ClassSpec("a", RANDLES, 0.0, 0.0), ClassSpec("b", Capacitor(1e-6), 0.0, 0.0)]
    d = generate_kind_dataset(specs, 1, default_grid(), 3)
    assert d.spectra[0].values.tolist() == simulate_sweep(RANDLES).values.tolist()
    assert d.spectra[1].values.tolist() == simulate_sweep(Capacitor(1e-6)).values.tolist()


def test_kind_dataset_deterministic(kind_specs):
    a = generate_kind_dataset(kind_specs[:3], 4, seed=9)
    b = generate_kind_dataset(kind_specs[:3], 4, seed=9)
    assert a == b
    assert a != generate_kind_dataset(kind_specs[:3], 4, seed=10)


def test_kind_dataset_errors():
    with pytest.raises(ValueError, match="duplicate"):
        generate_kind_dataset([ClassSpec("a", RANDLES), ClassSpec("a", RANDLES)], 1)
    with pytest.raises(ValueError):
        generate_kind_dataset([ClassSpec("a", RANDLES)], 1)
    with pytest.raises(ValueError):
        generate_kind_dataset([ClassSpec("a", RANDLES), ClassSpec("b", RANDLES)], 0)


def test_jitter_keeps_alpha_valid():
    spec = ClassSpec("x", ConstantPhase(1e-6, 0.999), {"alpha0": 0.05}, 0.0)
    d = generate_kind_dataset([spec, ClassSpec("y", Resistor(1.0), 0.0, 0.0)], 50, seed=1)
    assert len(d) == 100


def test_freshness_dataset_shape(freshness_dataset):
    assert len(freshness_dataset) == 30
    assert freshness_dataset.classes == ["0", "24", "48"]


def test_freshness_zero_drift_same_distribution():
    base = ClassSpec("m", RANDLES, 0.0, 0.0)
    d = generate_freshness_dataset(base, DriftModel({}), [0, 24, 48], 2, seed=0)
    assert all(s == d.spectra[0].__class__(s.grid, d.spectra[0].values, s.meta) for s in d.spectra)


def test_drift_scales_linearly():
    base = ClassSpec("m", RANDLES, 0.0, 0.0)
    t = drifted_template(base, DriftModel({"R0": -0.005}), 48)
    assert parameters(t)["R0"] == pytest.approx(50 * 0.76, rel=1e-15)
    d = generate_freshness_dataset(base, DriftModel({"R0": -0.005}), [0, 48], 1, seed=0)
    expected = simulate_sweep(with_parameters(RANDLES, {"R0": 50 * (1 - 0.005 * 48)}))
    np.testing.assert_allclose(d.spectra[1].values, expected.values, rtol=1e-14)


def test_freshness_errors():
    base = ClassSpec("m", RANDLES, 0.0, 0.0)
    with pytest.raises(ValueError, match="non-positive"):
        generate_freshness_dataset(base, DriftModel({"R0": -0.05}), [0, 24], 1)
    for hours in ([], [0, 0], [-1, 2]):
        with pytest.raises(ValueError):
            generate_freshness_dataset(base, DriftModel({}), hours, 1)


def test_generation_is_pure_function_of_inputs(kind_specs):
    g = make_log_grid(100, 10000, 11)
    a = generate_kind_dataset(kind_specs[:2], 3, g, 5)
    generate_kind_dataset(kind_specs, 2, default_grid(), 1)   # unrelated call in between
    assert a == generate_kind_dataset(kind_specs[:2], 3, g, 5)
