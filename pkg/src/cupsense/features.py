"""Feature matrices, SVD frequency importance, band reduction and standardization."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuit import Dataset
from .spectrum import FeatureKind, make_log_grid, parse_kinds, series_of

STD_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    X: np.ndarray
    col_meta: tuple          # ((FeatureKind, frequency_hz), ...)
    labels: tuple
    sample_ids: tuple = ()

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim != 2:
            raise ValueError("feature matrix must be 2-D")
        meta = tuple((FeatureKind(k), float(f)) for k, f in self.col_meta)
        if X.shape[1] != len(meta):
            raise ValueError(f"{X.shape[1]} columns but {len(meta)} column descriptors")
        labels = tuple(str(x) for x in self.labels)
        if len(labels) != X.shape[0]:
            raise ValueError(f"{X.shape[0]} rows but {len(labels)} labels")
        if np.isnan(X).any():
            raise ValueError("feature matrix contains NaN")
        ids = tuple(int(i) for i in self.sample_ids) or tuple(range(X.shape[0]))
        if len(ids) != X.shape[0]:
            raise ValueError("sample_ids length must match rows")
        X.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "col_meta", meta)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "sample_ids", ids)

    @property
    def shape(self):
        return self.X.shape

    @property
    def kinds(self) -> tuple[FeatureKind, ...]:
        seen = []
        for k, _ in self.col_meta:
            if k not in seen:
                seen.append(k)
        return tuple(seen)

    def frequencies(self, kind: FeatureKind | None = None) -> np.ndarray:
        kind = self.kinds[0] if kind is None else FeatureKind(kind)
        return np.array([f for k, f in self.col_meta if k is kind])

    def rows(self, idx) -> "FeatureMatrix":
        idx = np.asarray(idx, dtype=int)
        return FeatureMatrix(self.X[idx], self.col_meta,
                             [self.labels[i] for i in idx], [self.sample_ids[i] for i in idx])

    def columns(self, idx) -> "FeatureMatrix":
        idx = np.asarray(idx, dtype=int)
        return FeatureMatrix(self.X[:, idx], [self.col_meta[i] for i in idx],
                             self.labels, self.sample_ids)

    def select_kind(self, kind: FeatureKind) -> "FeatureMatrix":
        kind = FeatureKind(kind)
        return self.columns([i for i, (k, _) in enumerate(self.col_meta) if k is kind])


def build_feature_matrix(d: Dataset, kinds: Sequence[FeatureKind | str]) -> FeatureMatrix:
    """Columns grouped by kind in the given order, one per grid frequency."""
    kinds = parse_kinds(kinds)
    if len(d) == 0:
        raise ValueError("dataset is empty")
    grid = d.grid
    for i, s in enumerate(d.spectra):
        if s.grid != grid:
            raise ValueError(f"spectrum {i} uses a different frequency grid")
    Z = np.vstack([s.values for s in d.spectra])
    X = np.hstack([series_of(Z, k) for k in kinds])
    meta = [(k, f) for k in kinds for f in grid.points]
    return FeatureMatrix(X, meta, d.labels, d.sample_ids)


# dataset variants of the kind-classification experiment
VARIANTS = {
    "A": (FeatureKind.REAL, FeatureKind.IMAGINARY),
    "B": (FeatureKind.AMPLITUDE, FeatureKind.PHASE),
    "C": (FeatureKind.AMPLITUDE,),
    "D": (FeatureKind.PHASE,),
}


# -- SVD ----------------------------------------------------------------------

def _jacobi_svd(A: np.ndarray, tol: float = 1e-15, max_sweeps: int = 80):
    """One-sided (Hestenes) Jacobi. Returns (singular values, V) with A = U S V^T."""
    A = np.array(A, dtype=float)
    n = A.shape[1]
    V = np.eye(n)
    for _ in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                ap, aq = A[:, p], A[:, q]
                alpha = ap @ ap
                beta = aq @ aq
                gamma = ap @ aq
                if gamma == 0.0 or abs(gamma) <= tol * math.sqrt(alpha * beta):
                    continue
                rotated = True
                d = float(beta - alpha)
                if abs(d) > 1e150 * abs(gamma):
                    t = float(gamma) / d        # tiny angle: first-order tangent
                else:
                    zeta = d / (2.0 * float(gamma))
                    t = math.copysign(1.0, zeta) / (abs(zeta) + math.hypot(1.0, zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                A[:, [p, q]] = np.column_stack((c * ap - s * aq, s * ap + c * aq))
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
        if not rotated:
            break
    sv = np.linalg.norm(A, axis=0)
    return sv, V


def first_right_singular_vector(M, center: bool = True) -> np.ndarray:
    """Unit right singular vector for the largest singular value of ``M``
    (columns mean-centred first by default). Sign: largest-magnitude entry positive."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.size == 0:
        raise ValueError("matrix must be 2-D and non-empty")
    if np.isnan(M).any():
        raise ValueError("matrix contains NaN")
    if center:
        M = M - M.mean(axis=0)
    if not np.any(M):
        raise ValueError("matrix is all zero after centering; no principal direction")
    # scale out the magnitude so the Jacobi tolerances are relative
    M = M / np.abs(M).max()
    if M.shape[0] > M.shape[1]:
        M = np.linalg.qr(M, mode="r")
    sv, V = _jacobi_svd(M)
    v = V[:, int(np.argmax(sv))]
    v = v / np.linalg.norm(v)
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


@dataclass(frozen=True, eq=False)
class ImportanceProfile:
    kind: FeatureKind
    frequencies: np.ndarray
    weights: np.ndarray
    peak_frequency: float

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "peak_frequency": self.peak_frequency,
                "frequencies": self.frequencies.tolist(), "weights": self.weights.tolist()}


def peak_frequency(freqs, weights) -> float:
    """Frequency of the largest weight; the lowest such frequency on ties."""
    freqs, weights = np.asarray(freqs, dtype=float), np.asarray(weights, dtype=float)
    order = np.argsort(freqs, kind="stable")
    return float(freqs[order][int(np.argmax(weights[order]))])


def importance_profile(fm: FeatureMatrix, center: bool = True) -> ImportanceProfile:
    kinds = fm.kinds
    if len(kinds) != 1:
        raise ValueError(f"importance profile needs a single-kind matrix, got {[k.value for k in kinds]}")
    weights = np.abs(first_right_singular_vector(fm.X, center=center))
    freqs = fm.frequencies()
    order = np.argsort(freqs, kind="stable")
    freqs, weights = freqs[order], weights[order]
    return ImportanceProfile(kinds[0], freqs, weights, peak_frequency(freqs, weights))


# -- band reduction -----------------------------------------------------------

def select_band_frequencies(grid_points, band=(100.0, 1000.0), n: int = 20) -> np.ndarray:
    """Snap ``n`` log-spaced targets in ``band`` to the nearest grid point (log distance)."""
    pts = np.asarray(grid_points, dtype=float)
    f_lo, f_hi = float(band[0]), float(band[1])
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 < f_lo <= f_hi:
        raise ValueError(f"invalid band {band}")
    if f_lo < pts.min() * (1 - 1e-9) or f_hi > pts.max() * (1 + 1e-9):
        raise ValueError(f"band {band} exceeds the grid range [{pts.min()}, {pts.max()}]")
    if n == 1 or f_lo == f_hi:
        targets = np.array([math.sqrt(f_lo * f_hi)])
    else:
        targets = make_log_grid(f_lo, f_hi, n).points
    logp = np.log(pts)
    picked = []
    for t in targets:
        i = int(np.argmin(np.abs(logp - math.log(t))))
        if i not in picked:
            picked.append(i)
    if not picked:
        raise ValueError("band selection is empty")
    return pts[sorted(picked)]


def reduce_to_band(fm: FeatureMatrix, band=(100.0, 1000.0), n: int = 20) -> FeatureMatrix:
    freqs = select_band_frequencies(np.unique(fm.frequencies()), band, n)
    keep = set(freqs.tolist())
    cols = [i for i, (_, f) in enumerate(fm.col_meta) if f in keep]
    if not cols:
        raise ValueError("band selection is empty")
    return fm.columns(cols)


# -- standardization ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StandardizationStats:
    mean: np.ndarray
    std: np.ndarray

    def to_dict(self):
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["std"], dtype=float))


def standardize_fit(train: FeatureMatrix | np.ndarray) -> StandardizationStats:
    """Column mean and population std; std floored at 1e-12."""
    X = train.X if isinstance(train, FeatureMatrix) else np.asarray(train, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("cannot standardize an empty training set")
    mean = X.mean(axis=0)
    const = np.all(X == X[0], axis=0)
    mean[const] = X[0, const]
    std = np.maximum(X.std(axis=0), STD_FLOOR)
    return StandardizationStats(mean, std)


def standardize_array(stats: StandardizationStats, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != stats.mean.size:
        raise ValueError(f"expected {stats.mean.size} columns, got {X.shape[-1]}")
    return (X - stats.mean) / stats.std


def standardize_apply(stats: StandardizationStats, fm: FeatureMatrix) -> FeatureMatrix:
    return FeatureMatrix(standardize_array(stats, fm.X), fm.col_meta, fm.labels, fm.sample_ids)
