"""Frequency grids, complex impedance spectra and the polar/Cartesian views of them."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

DEFAULT_F_MIN = 100.0
DEFAULT_F_MAX = 100_000.0
DEFAULT_N_POINTS = 101
DEFAULT_STIMULUS_MV = 50.0


class Spacing(str, enum.Enum):
    LOGARITHMIC = "logarithmic"
    EXPLICIT = "explicit"


class FeatureKind(str, enum.Enum):
    AMPLITUDE = "amplitude"
    PHASE = "phase"
    REAL = "real"
    IMAGINARY = "imaginary"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    points: np.ndarray
    spacing: Spacing = Spacing.EXPLICIT

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 1:
            raise ValueError("frequency grid must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(pts)) or np.any(pts <= 0):
            raise ValueError("frequency grid points must be finite and > 0")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "spacing", Spacing(self.spacing))

    def __len__(self) -> int:
        return self.points.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, FrequencyGrid):
            return NotImplemented
        return self.spacing == other.spacing and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash((self.spacing, self.points.tobytes()))

    @property
    def omega(self) -> np.ndarray:
        return 2.0 * np.pi * self.points


def make_log_grid(f_min: float = DEFAULT_F_MIN, f_max: float = DEFAULT_F_MAX,
                  n: int = DEFAULT_N_POINTS) -> FrequencyGrid:
    """``n`` points with a constant ratio between neighbours; both endpoints exact."""
    if not (math.isfinite(f_min) and math.isfinite(f_max)) or not 0 < f_min < f_max:
        raise ValueError(f"need 0 < f_min < f_max, got {f_min!r}, {f_max!r}")
    if int(n) != n or n < 2:
        raise ValueError(f"need n >= 2 points, got {n!r}")
    n = int(n)
    i = np.arange(n)
    pts = f_min * (f_max / f_min) ** (i / (n - 1))
    pts[0] = f_min
    pts[-1] = f_max
    return FrequencyGrid(pts, Spacing.LOGARITHMIC)


def default_grid() -> FrequencyGrid:
    return make_log_grid(DEFAULT_F_MIN, DEFAULT_F_MAX, DEFAULT_N_POINTS)


@dataclass(frozen=True)
class ComplexImpedance:
    real: float
    imag: float

    def __post_init__(self):
        if not (math.isfinite(self.real) and math.isfinite(self.imag)):
            raise ValueError(f"impedance must be finite, got ({self.real}, {self.imag})")

    @classmethod
    def from_complex(cls, z: complex) -> "ComplexImpedance":
        return cls(float(z.real), float(z.imag))

    def __complex__(self) -> complex:
        return complex(self.real, self.imag)


def to_polar(z: ComplexImpedance | complex) -> tuple[float, float]:
    """Return (amplitude in ohms, phase in radians within (-pi, pi])."""
    re, im = (z.real, z.imag)
    if not (math.isfinite(re) and math.isfinite(im)):
        raise ValueError("impedance must be finite")
    return math.hypot(re, im), math.atan2(im, re)


def from_polar(amplitude: float, phase: float) -> ComplexImpedance:
    if amplitude < 0:
        raise ValueError(f"amplitude must be >= 0, got {amplitude}")
    if amplitude == 0:
        return ComplexImpedance(0.0, 0.0)
    return ComplexImpedance(amplitude * math.cos(phase), amplitude * math.sin(phase))


@dataclass(frozen=True)
class SpectrumMeta:
    stimulus_amplitude_mV: float = DEFAULT_STIMULUS_MV
    temperature_C: Optional[float] = None
    label: Optional[str] = None


@dataclass(frozen=True, eq=False)
class Spectrum:
    """One sweep. ``values`` is a read-only complex128 array aligned with ``grid.points``."""

    grid: FrequencyGrid
    values: np.ndarray
    meta: SpectrumMeta = field(default_factory=SpectrumMeta)

    def __post_init__(self):
        vals = self.values
        if len(vals) and isinstance(vals[0], ComplexImpedance):
            vals = [complex(v) for v in vals]
        vals = np.asarray(vals, dtype=complex)
        if vals.ndim != 1 or vals.size != len(self.grid):
            raise ValueError(f"spectrum has {vals.size} values for a {len(self.grid)}-point grid")
        if not np.all(np.isfinite(vals)):
            bad = np.flatnonzero(~np.isfinite(vals))
            raise ValueError(f"non-finite impedance at point(s) {bad.tolist()}")
        object.__setattr__(self, "values", _frozen(vals))

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, Spectrum):
            return NotImplemented
        return (self.grid == other.grid and self.meta == other.meta
                and np.array_equal(self.values, other.values))

    def impedances(self) -> list[ComplexImpedance]:
        return [ComplexImpedance.from_complex(v) for v in self.values]

    def series(self, kind: FeatureKind) -> np.ndarray:
        return extract_series(self, kind)


def series_of(values: np.ndarray, kind: FeatureKind) -> np.ndarray:
    """Scalar projection of an array of complex impedances (any shape)."""
    kind = FeatureKind(kind)
    if kind is FeatureKind.AMPLITUDE:
        return np.abs(values)
    if kind is FeatureKind.PHASE:
        return np.angle(values)
    if kind is FeatureKind.REAL:
        return np.real(values).copy()
    return np.imag(values).copy()


def extract_series(s: Spectrum, kind: FeatureKind) -> np.ndarray:
    return series_of(s.values, kind)


def parse_kinds(kinds: Sequence[str | FeatureKind] | str) -> tuple[FeatureKind, ...]:
    """Accept enum members, names ("amplitude") or comma lists; keeps order, rejects repeats."""
    if isinstance(kinds, str):
        kinds = [k for k in kinds.split(",") if k.strip()]
    out = []
    for k in kinds:
        kk = k if isinstance(k, FeatureKind) else FeatureKind(str(k).strip().lower())
        if kk in out:
            raise ValueError(f"feature kind {kk.value} given twice")
        out.append(kk)
    if not out:
        raise ValueError("at least one feature kind is required")
    return tuple(out)
