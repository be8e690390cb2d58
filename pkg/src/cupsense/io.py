"""Dataset files, label registry, class/drift spec documents and dataset validation.

A dataset on disk is a CSV (``label,sample_id,re_0,im_0,...``) next to a JSON
manifest named ``<stem>.manifest.json``.  Values are stored Cartesian, written
with ``repr`` (shortest round-trip), so write -> read -> write is byte-stable.
"""
from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

from .circuit import ClassSpec, Dataset, DriftModel, circuit_from_dict, circuit_to_dict, label_sort_key
from .spectrum import (FrequencyGrid, Spacing, Spectrum, SpectrumMeta, make_log_grid,
                       DEFAULT_STIMULUS_MV)

SCHEMA_VERSION = 1
STORAGE = "cartesian"


class DatasetFormatError(ValueError):
    """Malformed dataset file; the message names the offending file, row and column."""


class SpecError(ValueError):
    pass


# -- label registry -----------------------------------------------------------

BUILTIN_LABELS = (
    "Mineral water", "Cola Zero 1", "Orange Zero", "Cola Light", "Cola Mix",
    "Cola Classic 1", "Cola Zero 2", "Sprite", "7 UP", "Fanta",
    "Colar classic 2", "Cola Zero 3", "Eistee Pfirsch", "Apfel Schorle", "Banana juice",
    "Pineapple juice", "Currants juice", "Orange juice", "Carrots juice",
    "Mixed vegetable juice",
)


@dataclass(frozen=True)
class LabelRegistry:
    names: Mapping[int, str]
    source: str = "builtin"

    def __post_init__(self):
        ids = sorted(self.names)
        if ids != list(range(len(ids))):
            missing = sorted(set(range(max(ids, default=-1) + 1)) - set(ids))
            raise ValueError(f"label ids must be contiguous from 0; missing {missing}")
        names = list(self.names.values())
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise ValueError(f"duplicate label names: {dupes}")

    def __len__(self):
        return len(self.names)

    def name(self, label: str) -> str:
        try:
            return self.names[int(label)]
        except (ValueError, KeyError):
            return str(label)

    def knows(self, label: str) -> bool:
        if label in self.names.values():
            return True
        try:
            return int(label) in self.names and str(int(label)) == label
        except ValueError:
            return False


def load_label_registry(path=None) -> LabelRegistry:
    """Builtin registry when ``path`` is None, else a JSON object ``{"0": "name", ...}``."""
    if path is None or path == "builtin":
        return LabelRegistry(dict(enumerate(BUILTIN_LABELS)))
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: registry must be a JSON object mapping id -> name")
    names = {}
    for k, v in raw.items():
        try:
            i = int(k)
        except ValueError:
            raise ValueError(f"{path}: registry id {k!r} is not an integer") from None
        if i in names:
            raise ValueError(f"{path}: duplicate registry id {i}")
        names[i] = str(v)
    return LabelRegistry(names, str(path))


# -- spec documents -----------------------------------------------------------

def load_json(path) -> object:
    text = Path(path).read_text() if not hasattr(path, "read_text") else path.read_text()
    return _parse_json(text, str(path))


def _parse_json(text: str, where: str) -> object:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{where}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def class_spec_from_dict(d: Mapping, where: str = "$") -> ClassSpec:
    try:
        return ClassSpec(str(d["label"]), circuit_from_dict(d["circuit"], f"{where}.circuit"),
                         d.get("param_jitter", 0.0), float(d.get("noise_relative", 0.01)))
    except KeyError as exc:
        raise SpecError(f"{where}: missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise SpecError(f"{where}: {exc}") from None


def class_spec_to_dict(s: ClassSpec) -> dict:
    jit = dict(s.param_jitter) if isinstance(s.param_jitter, Mapping) else s.param_jitter
    return {"label": s.label, "circuit": circuit_to_dict(s.template),
            "param_jitter": jit, "noise_relative": s.noise_relative}


def parse_class_specs(doc, where: str = "spec") -> list[ClassSpec]:
    if not isinstance(doc, Mapping) or not isinstance(doc.get("classes"), list):
        raise SpecError(f"{where}: expected an object with a 'classes' list")
    return [class_spec_from_dict(c, f"{where}.classes[{i}]") for i, c in enumerate(doc["classes"])]


def load_class_specs(path=None) -> list[ClassSpec]:
    """Read a class-spec JSON document; ``None`` loads the bundled 20-beverage set."""
    if path is None:
        text = resources.files("cupsense.data").joinpath("beverages.json").read_text()
        return parse_class_specs(_parse_json(text, "beverages.json"), "beverages.json")
    return parse_class_specs(load_json(path), str(path))


@dataclass(frozen=True)
class FreshnessSpec:
    name: str
    base: ClassSpec
    drift: DriftModel
    hours: tuple = (0, 24, 48)


def parse_freshness_spec(d: Mapping, where: str = "drift") -> FreshnessSpec:
    if not isinstance(d, Mapping):
        raise SpecError(f"{where}: expected an object")
    try:
        rates = {str(k): float(v) for k, v in d.get("rates", {}).items()}
        base = class_spec_from_dict(d["base"], f"{where}.base")
        hours = tuple(d.get("hours", (0, 24, 48)))
    except KeyError as exc:
        raise SpecError(f"{where}: missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise SpecError(f"{where}: {exc}") from None
    return FreshnessSpec(str(d.get("name", base.label)), base, DriftModel(rates), hours)


def load_freshness_specs(path=None) -> dict[str, FreshnessSpec]:
    """Freshness profiles keyed by name; a file may hold one profile or ``{"profiles": [...]}``."""
    if path is None:
        text = resources.files("cupsense.data").joinpath("freshness.json").read_text()
        doc, where = _parse_json(text, "freshness.json"), "freshness.json"
    else:
        doc, where = load_json(path), str(path)
    items = doc["profiles"] if isinstance(doc, Mapping) and "profiles" in doc else [doc]
    out = {}
    for i, item in enumerate(items):
        fs = parse_freshness_spec(item, f"{where}.profiles[{i}]")
        out[fs.name] = fs
    return out


# -- dataset files ------------------------------------------------------------

def manifest_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".manifest.json")


def _fmt(x: float) -> str:
    return repr(float(x))


def _grid_doc(grid: FrequencyGrid) -> dict:
    pts = grid.points
    doc = {"f_min": float(pts[0]), "f_max": float(pts[-1]), "n": int(pts.size),
           "spacing": grid.spacing.value}
    if grid.spacing is Spacing.LOGARITHMIC and grid == make_log_grid(pts[0], pts[-1], pts.size):
        return doc
    doc["spacing"] = Spacing.EXPLICIT.value
    doc["points"] = [float(p) for p in pts]
    return doc


def grid_from_doc(doc: Mapping) -> FrequencyGrid:
    if doc.get("spacing") == Spacing.LOGARITHMIC.value:
        return make_log_grid(float(doc["f_min"]), float(doc["f_max"]), int(doc["n"]))
    return FrequencyGrid(np.asarray(doc["points"], dtype=float), Spacing.EXPLICIT)


def dataset_to_csv_text(d: Dataset) -> str:
    if len(d) == 0:
        raise ValueError("cannot write an empty dataset (no observations)")
    grid = d.grid
    n = len(grid)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["label", "sample_id"]
    for i in range(n):
        header += [f"re_{i}", f"im_{i}"]
    w.writerow(header)
    for s, label, sid in zip(d.spectra, d.labels, d.sample_ids):
        if s.grid != grid:
            raise ValueError(f"sample {sid} uses a different grid than the first spectrum")
        row = [label, str(sid)]
        for z in s.values:
            row += [_fmt(z.real), _fmt(z.imag)]
        w.writerow(row)
    return buf.getvalue()


def write_dataset(d: Dataset, path, registry: str = "builtin") -> tuple[Path, Path]:
    """Write ``path`` (CSV) and its sibling manifest; returns both paths."""
    path = Path(path)
    text = dataset_to_csv_text(d)
    amps = {s.meta.stimulus_amplitude_mV for s in d.spectra}
    if len(amps) != 1:
        raise ValueError("all spectra must share one stimulus amplitude")
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "grid": _grid_doc(d.grid),
        "stimulus_amplitude_mV": amps.pop(),
        "storage": STORAGE,
        "registry": registry,
        "n_observations": len(d),
        "columns": 2 + 2 * len(d.grid),
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    mpath = manifest_path(path)
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path, mpath


def read_manifest(path) -> dict:
    mpath = manifest_path(path) if not str(path).endswith(".manifest.json") else Path(path)
    if not mpath.exists():
        raise DatasetFormatError(f"{mpath}: manifest not found")
    try:
        m = json.loads(mpath.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"{mpath}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if m.get("schema_version") != SCHEMA_VERSION:
        raise DatasetFormatError(f"{mpath}: unknown schema_version {m.get('schema_version')!r}")
    if m.get("storage", STORAGE) != STORAGE:
        raise DatasetFormatError(f"{mpath}: unsupported storage {m.get('storage')!r}")
    return m


def read_dataset(path) -> Dataset:
    path = Path(path)
    m = read_manifest(path)
    try:
        grid = grid_from_doc(m["grid"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetFormatError(f"{manifest_path(path)}: bad grid description ({exc})") from None
    meta_amp = float(m.get("stimulus_amplitude_mV", DEFAULT_STIMULUS_MV))
    n = len(grid)
    expected = ["label", "sample_id"] + [f"{p}_{i}" for i in range(n) for p in ("re", "im")]
    spectra, labels, ids = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DatasetFormatError(f"{path}: file is empty")
        if len(header) != len(expected):
            raise DatasetFormatError(
                f"{path}: header has {len(header)} columns, manifest implies {len(expected)}")
        if header != expected:
            bad = next(i for i, (a, b) in enumerate(zip(header, expected)) if a != b)
            raise DatasetFormatError(f"{path}: header column {bad + 1} is {header[bad]!r}, expected {expected[bad]!r}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(expected):
                raise DatasetFormatError(
                    f"{path}: row {lineno} has {len(row)} columns, expected {len(expected)}")
            try:
                sid = int(row[1])
            except ValueError:
                raise DatasetFormatError(
                    f"{path}: row {lineno}, column 2 (sample_id): not an integer: {row[1]!r}") from None
            vals = np.empty(2 * n)
            for j, cell in enumerate(row[2:]):
                try:
                    v = float(cell)
                except ValueError:
                    raise DatasetFormatError(
                        f"{path}: row {lineno}, column {j + 3} ({expected[j + 2]}): "
                        f"non-numeric value {cell!r}") from None
                if not math.isfinite(v):
                    raise DatasetFormatError(
                        f"{path}: row {lineno}, column {j + 3} ({expected[j + 2]}): "
                        f"non-finite value {cell!r}")
                vals[j] = v
            z = vals[0::2] + 1j * vals[1::2]
            spectra.append(Spectrum(grid, z, SpectrumMeta(meta_amp, None, row[0])))
            labels.append(row[0])
            ids.append(sid)
    if not spectra:
        raise DatasetFormatError(f"{path}: no observations")
    return Dataset(spectra, labels, ids)


# -- validation ---------------------------------------------------------------

@dataclass
class ValidationReport:
    findings: list = field(default_factory=list)     # (code, message)
    class_counts: dict = field(default_factory=dict)

    @property
    def clean(self) -> bool:
        return not self.findings

    def codes(self) -> list[str]:
        return [c for c, _ in self.findings]

    def to_dict(self) -> dict:
        return {"clean": self.clean, "class_counts": self.class_counts,
                "findings": [{"code": c, "message": m} for c, m in self.findings]}


def validate_dataset(d: Dataset, registry: LabelRegistry | None = None) -> ValidationReport:
    """Report-only checks. Pass ``registry=None`` to skip the label check (e.g. freshness sets)."""
    rep = ValidationReport()
    counts = Counter(d.labels)
    rep.class_counts = {k: counts[k] for k in sorted(counts, key=label_sort_key)}
    if registry is not None:
        for label in rep.class_counts:
            if not registry.knows(label):
                rep.findings.append(("unknown_label", f"label {label!r} is not in the registry"))
    if d.spectra:
        grid = d.spectra[0].grid
        for i, s in enumerate(d.spectra):
            if s.grid != grid:
                rep.findings.append(("grid_mismatch",
                                     f"row {i} (sample_id {d.sample_ids[i]}) uses a different grid"))
    if len(set(counts.values())) > 1:
        rep.findings.append(("class_imbalance", f"observations per class differ: {rep.class_counts}"))
    for sid, c in sorted(Counter(d.sample_ids).items()):
        if c > 1:
            rep.findings.append(("duplicate_sample_id", f"sample_id {sid} appears {c} times"))
    return rep
