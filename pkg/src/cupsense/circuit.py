"""Equivalent-circuit impedance and synthetic sweep/dataset generation.

Circuits are small immutable trees of ``Resistor``, ``Capacitor`` and
``ConstantPhase`` leaves combined with ``Series`` and ``Parallel``.  Every
leaf parameter has a stable name made of its symbol and the leaf's
depth-first index, e.g. ``R0``, ``Q2``, ``alpha2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from .spectrum import FrequencyGrid, Spectrum, SpectrumMeta, default_grid


class DegenerateCircuit(ValueError):
    pass


@dataclass(frozen=True)
class Resistor:
    R: float

    def __post_init__(self):
        if not (math.isfinite(self.R) and self.R > 0):
            raise ValueError(f"resistance must be > 0, got {self.R}")

    symbols = ("R",)

    def impedance(self, omega):
        return np.full(np.shape(omega), complex(self.R)) if np.ndim(omega) else complex(self.R)


@dataclass(frozen=True)
class Capacitor:
    C: float

    def __post_init__(self):
        if not (math.isfinite(self.C) and self.C > 0):
            raise ValueError(f"capacitance must be > 0, got {self.C}")

    symbols = ("C",)

    def impedance(self, omega):
        return 1.0 / (1j * omega * self.C)


@dataclass(frozen=True)
class ConstantPhase:
    Q: float
    alpha: float

    def __post_init__(self):
        if not (math.isfinite(self.Q) and self.Q > 0):
            raise ValueError(f"CPE Q must be > 0, got {self.Q}")
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError(f"CPE alpha must lie in [0, 1], got {self.alpha}")

    symbols = ("Q", "alpha")

    def impedance(self, omega):
        # principal branch: (j w)^a = w^a * exp(j a pi / 2)
        mag = 1.0 / (self.Q * np.power(omega, self.alpha))
        ang = -self.alpha * np.pi / 2.0
        return mag * (np.cos(ang) + 1j * np.sin(ang))


Element = Union[Resistor, Capacitor, ConstantPhase]


@dataclass(frozen=True)
class Series:
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise ValueError("series needs at least two children")


@dataclass(frozen=True)
class Parallel:
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise ValueError("parallel needs at least two children")


CircuitModel = Union[Element, Series, Parallel]
_ELEMENTS = (Resistor, Capacitor, ConstantPhase)


def _check_omega(omega):
    w = np.asarray(omega, dtype=float)
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise ValueError("angular frequency must be > 0")


def element_impedance(e: Element, omega):
    """Impedance of a single element; ``omega`` in rad/s, scalar or array."""
    _check_omega(omega)
    return e.impedance(omega)


def _impedance(c, omega):
    if isinstance(c, _ELEMENTS):
        return c.impedance(omega)
    if isinstance(c, Series):
        return sum(_impedance(ch, omega) for ch in c.children)
    if isinstance(c, Parallel):
        y = sum(1.0 / _impedance(ch, omega) for ch in c.children)
        if np.any(y == 0):
            raise DegenerateCircuit("parallel branch has zero total admittance")
        return 1.0 / y
    raise TypeError(f"not a circuit node: {c!r}")


def circuit_impedance(c: CircuitModel, omega):
    _check_omega(omega)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = _impedance(c, omega)
    if not np.all(np.isfinite(z)):
        raise DegenerateCircuit("circuit impedance is not finite")
    return z


# -- parameters ---------------------------------------------------------------

def leaves(c: CircuitModel) -> list:
    if isinstance(c, _ELEMENTS):
        return [c]
    out = []
    for ch in c.children:
        out.extend(leaves(ch))
    return out


def parameter_names(c: CircuitModel) -> list[str]:
    return [f"{sym}{i}" for i, leaf in enumerate(leaves(c)) for sym in leaf.symbols]


def parameters(c: CircuitModel) -> dict[str, float]:
    return {f"{sym}{i}": float(getattr(leaf, sym))
            for i, leaf in enumerate(leaves(c)) for sym in leaf.symbols}


def with_parameters(c: CircuitModel, values: Mapping[str, float]) -> CircuitModel:
    """Copy of ``c`` with the named parameters replaced (others untouched)."""
    unknown = set(values) - set(parameter_names(c))
    if unknown:
        raise KeyError(f"unknown circuit parameter(s): {sorted(unknown)}")
    counter = iter(range(10**9))

    def rebuild(node):
        if isinstance(node, _ELEMENTS):
            i = next(counter)
            kw = {s: float(values.get(f"{s}{i}", getattr(node, s))) for s in node.symbols}
            return type(node)(**kw)
        return type(node)(tuple(rebuild(ch) for ch in node.children))

    return rebuild(c)


def circuit_to_dict(c: CircuitModel) -> dict:
    if isinstance(c, Resistor):
        return {"type": "R", "R": c.R}
    if isinstance(c, Capacitor):
        return {"type": "C", "C": c.C}
    if isinstance(c, ConstantPhase):
        return {"type": "CPE", "Q": c.Q, "alpha": c.alpha}
    tag = "series" if isinstance(c, Series) else "parallel"
    return {"type": tag, "children": [circuit_to_dict(ch) for ch in c.children]}


def circuit_from_dict(d: Mapping, path: str = "$") -> CircuitModel:
    if not isinstance(d, Mapping) or "type" not in d:
        raise ValueError(f"{path}: circuit node must be an object with a 'type'")
    t = d["type"]
    try:
        if t == "R":
            return Resistor(float(d["R"]))
        if t == "C":
            return Capacitor(float(d["C"]))
        if t == "CPE":
            return ConstantPhase(float(d["Q"]), float(d["alpha"]))
    except KeyError as exc:
        raise ValueError(f"{path}: element {t!r} missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{path}: {exc}") from None
    if t in ("series", "parallel"):
        kids = d.get("children")
        if not isinstance(kids, list):
            raise ValueError(f"{path}: '{t}' needs a 'children' list")
        nodes = [circuit_from_dict(k, f"{path}.children[{i}]") for i, k in enumerate(kids)]
        try:
            return (Series if t == "series" else Parallel)(tuple(nodes))
        except ValueError as exc:
            raise ValueError(f"{path}: {exc}") from None
    raise ValueError(f"{path}: unknown circuit type {t!r}")


# -- simulation ---------------------------------------------------------------

def simulate_sweep(c: CircuitModel, grid: FrequencyGrid | None = None,
                   noise_relative: float = 0.0, rng_seed=0,
                   meta: SpectrumMeta | None = None) -> Spectrum:
    """Evaluate ``c`` over the grid with independent multiplicative Gaussian noise
    on the real and imaginary parts. ``rng_seed`` may be an int or a sequence of ints."""
    grid = default_grid() if grid is None else grid
    if not noise_relative >= 0:
        raise ValueError(f"noise_relative must be >= 0, got {noise_relative}")
    z = np.asarray(circuit_impedance(c, grid.omega), dtype=complex)
    if noise_relative > 0:
        rng = np.random.default_rng(rng_seed)
        eps = rng.normal(0.0, noise_relative, size=(2, z.size))
        z = z.real * (1 + eps[0]) + 1j * z.imag * (1 + eps[1])
    return Spectrum(grid, z, meta or SpectrumMeta())


@dataclass(frozen=True)
class ClassSpec:
    label: str
    template: CircuitModel
    param_jitter: float | Mapping[str, float] = 0.0
    noise_relative: float = 0.01

    def __post_init__(self):
        names = parameter_names(self.template)
        jit = self.param_jitter
        if isinstance(jit, Mapping):
            bad = set(jit) - set(names)
            if bad:
                raise ValueError(f"{self.label}: jitter for unknown parameter(s) {sorted(bad)}")
            vals = list(jit.values())
        else:
            vals = [jit]
        if any(not v >= 0 for v in vals):
            raise ValueError(f"{self.label}: parameter jitter must be >= 0")
        if any(v >= 0.5 for v in vals):
            raise ValueError(f"{self.label}: parameter jitter must be < 0.5 (relative)")
        if not self.noise_relative >= 0:
            raise ValueError(f"{self.label}: noise_relative must be >= 0")

    def jitter_for(self, name: str) -> float:
        if isinstance(self.param_jitter, Mapping):
            return float(self.param_jitter.get(name, 0.0))
        return float(self.param_jitter)


@dataclass(frozen=True)
class DriftModel:
    """Linear relative change per hour for selected template parameters."""

    rates: Mapping[str, float] = field(default_factory=dict)

    def scale(self, name: str, hours: float) -> float:
        return 1.0 + float(self.rates.get(name, 0.0)) * hours


@dataclass(frozen=True, eq=False)
class Dataset:
    spectra: tuple
    labels: tuple
    sample_ids: tuple

    def __post_init__(self):
        object.__setattr__(self, "spectra", tuple(self.spectra))
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        object.__setattr__(self, "sample_ids", tuple(int(x) for x in self.sample_ids))
        if not (len(self.spectra) == len(self.labels) == len(self.sample_ids)):
            raise ValueError("spectra, labels and sample_ids must have equal length")

    def __len__(self):
        return len(self.spectra)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.labels == other.labels and self.sample_ids == other.sample_ids
                and self.spectra == other.spectra)

    @property
    def grid(self) -> FrequencyGrid:
        if not self.spectra:
            raise ValueError("empty dataset has no grid")
        return self.spectra[0].grid

    @property
    def classes(self) -> list[str]:
        return sorted(set(self.labels), key=label_sort_key)


def label_sort_key(label: str):
    """Numeric labels sort numerically and before non-numeric ones."""
    try:
        return (0, float(label), label)
    except ValueError:
        return (1, 0.0, label)


def _jittered(template: CircuitModel, spec: ClassSpec, rng: np.random.Generator,
              max_tries: int = 1000) -> CircuitModel:
    params = parameters(template)
    out = {}
    for name, value in params.items():
        sd = spec.jitter_for(name)
        if sd == 0:
            out[name] = value
            continue
        for _ in range(max_tries):
            v = value * (1.0 + sd * rng.standard_normal())
            if v > 0 and (not name.startswith("alpha") or v <= 1.0):
                out[name] = v
                break
        else:
            raise ValueError(f"could not draw a valid value for {name}")
    return with_parameters(template, out)


def _sample(spec: ClassSpec, template: CircuitModel, grid: FrequencyGrid, seed_path) -> Spectrum:
    rng = np.random.default_rng([*seed_path, 0])
    circuit = _jittered(template, spec, rng)
    return simulate_sweep(circuit, grid, spec.noise_relative, [*seed_path, 1],
                          SpectrumMeta(label=spec.label))


def generate_kind_dataset(specs: Sequence[ClassSpec], samples_per_class: int = 10,
                          grid: FrequencyGrid | None = None, seed: int = 0) -> Dataset:
    """Every (class, sample) draws from its own seed stream ``[seed, class, sample]``."""
    grid = default_grid() if grid is None else grid
    if len(specs) < 2:
        raise ValueError("need at least two class specs")
    if samples_per_class < 1:
        raise ValueError("samples_per_class must be >= 1")
    labels = [s.label for s in specs]
    dupes = sorted({x for x in labels if labels.count(x) > 1})
    if dupes:
        raise ValueError(f"duplicate class label(s): {dupes}")
    spectra, out_labels = [], []
    for ci, spec in enumerate(specs):
        for si in range(samples_per_class):
            spectra.append(_sample(spec, spec.template, grid, [seed, ci, si]))
            out_labels.append(spec.label)
    return Dataset(spectra, out_labels, range(len(spectra)))


def drifted_template(base: ClassSpec, drift: DriftModel, hours: float) -> CircuitModel:
    params = parameters(base.template)
    unknown = set(drift.rates) - set(params)
    if unknown:
        raise ValueError(f"drift for unknown parameter(s): {sorted(unknown)}")
    scaled = {}
    for name in drift.rates:
        v = params[name] * drift.scale(name, hours)
        if not v > 0:
            raise ValueError(f"drift makes {name} non-positive at {hours} h")
        scaled[name] = v
    return with_parameters(base.template, scaled)


def _hour_label(h: float) -> str:
    return str(int(h)) if float(h).is_integer() else repr(float(h))


def generate_freshness_dataset(base: ClassSpec, drift: DriftModel,
                               hours: Sequence[float] = (0, 24, 48),
                               samples_per_hour: int = 10,
                               grid: FrequencyGrid | None = None, seed: int = 0) -> Dataset:
    """One class per hour value (label ``"24"`` etc.) with drifted template parameters."""
    grid = default_grid() if grid is None else grid
    hours = list(hours)
    if not hours:
        raise ValueError("hours must be non-empty")
    if any(h < 0 for h in hours):
        raise ValueError("hours must be non-negative")
    if len(set(hours)) != len(hours):
        raise ValueError("hours must be distinct")
    if samples_per_hour < 1:
        raise ValueError("samples_per_hour must be >= 1")
    spectra, labels = [], []
    for hi, h in enumerate(hours):
        template = drifted_template(base, drift, h)
        spec = ClassSpec(_hour_label(h), template, base.param_jitter, base.noise_relative)
        for si in range(samples_per_hour):
            spectra.append(_sample(spec, template, grid, [seed, hi, si]))
            labels.append(spec.label)
    return Dataset(spectra, labels, range(len(spectra)))
