"""Impedance-spectrum beverage identification: circuit simulation, LM fitting,
SVD frequency importance, from-scratch random forest and dense network, and a
binary acquisition-frame codec."""

__version__ = "0.1.0"

from .spectrum import (ComplexImpedance, FeatureKind, FrequencyGrid, Spectrum, SpectrumMeta,
                       default_grid, extract_series, from_polar, make_log_grid, to_polar)
from .circuit import (Capacitor, ClassSpec, ConstantPhase, Dataset, DriftModel, Parallel,
                      Resistor, Series, circuit_impedance, element_impedance,
                      generate_freshness_dataset, generate_kind_dataset, simulate_sweep)
