import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cupsense.circuit import Dataset, generate_kind_dataset
from cupsense.io import (BUILTIN_LABELS, DatasetFormatError, SpecError, dataset_to_csv_text,
                         load_class_specs, load_label_registry, load_freshness_specs,
                         manifest_path, parse_class_specs, read_dataset, read_manifest,
                         validate_dataset, write_dataset, class_spec_to_dict)
from cupsense.spectrum import Spectrum, default_grid, make_log_grid


@pytest.fixture
def small(kind_specs):
    return generate_kind_dataset(kind_specs[:3], 2, make_log_grid(100, 1e5, 7), seed=1)


def assert_same(a, b):
    assert a.labels == b.labels and a.sample_ids == b.sample_ids
    assert a.grid == b.grid
    for x, y in zip(a.spectra, b.spectra):
        assert np.array_equal(x.values, y.values)


def test_csv_shape(kind_dataset, tmp_path):
    p, m = write_dataset(kind_dataset, tmp_path / "kinds.csv")
    lines = p.read_text().splitlines()
    assert len(lines) == 201
    assert all(len(l.split(",")) == 204 for l in lines)
    man = json.loads(m.read_text())
    assert man["n_observations"] == 200 and man["columns"] == 204
    assert man["grid"] == {"f_min": 100.0, "f_max": 100000.0, "n": 101, "spacing": "logarithmic"}
    assert man["stimulus_amplitude_mV"] == 50


def test_empty_dataset_write_fails(tmp_path):
    with pytest.raises(ValueError, match="no observations"):
        write_dataset(Dataset([], [], []), tmp_path / "x.csv")


def test_round_trip_and_canonical_bytes(kind_dataset, tmp_path):
    p, _ = write_dataset(kind_dataset, tmp_path / "a.csv")
    back = read_dataset(p)
    assert_same(back, kind_dataset)
    p2, _ = write_dataset(back, tmp_path / "b.csv")
    assert p.read_bytes() == p2.read_bytes()


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 30), st.floats(0, 0.2))
def test_round_trip_property(tmp_path_factory, seed, npts, noise):
    from cupsense.circuit import ClassSpec, Resistor, Series, Capacitor
    specs = [ClassSpec("a", Series((Resistor(10.0), Capacitor(1e-6))), 0.1, noise),
             ClassSpec("b", Resistor(3.0), 0.1, noise)]
    d = generate_kind_dataset(specs, 2, make_log_grid(1, 1e6, npts), seed)
    p, _ = write_dataset(d, tmp_path_factory.mktemp("rt") / "d.csv")
    assert_same(read_dataset(p), d)
    assert dataset_to_csv_text(read_dataset(p)) == p.read_text()


def test_explicit_grid_round_trip(tmp_path):
    from cupsense.spectrum import FrequencyGrid
    g = FrequencyGrid([1.0, 2.0, 7.5])
    d = Dataset([Spectrum(g, [1 - 1j, 2 - 2j, 3 - 0.5j])] * 2, ["a", "b"], [0, 1])
    p, m = write_dataset(d, tmp_path / "e.csv")
    assert json.loads(m.read_text())["grid"]["points"] == [1.0, 2.0, 7.5]
    assert_same(read_dataset(p), d)


def _corrupt(small, tmp_path, fn):
    p, m = write_dataset(small, tmp_path / "c.csv")
    fn(p, m)
    with pytest.raises(DatasetFormatError) as exc:
        read_dataset(p)
    return str(exc.value)


def test_missing_manifest(small, tmp_path):
    msg = _corrupt(small, tmp_path, lambda p, m: m.unlink())
    assert "manifest not found" in msg


def test_unknown_schema_version(small, tmp_path):
    def bump(p, m):
        doc = json.loads(m.read_text())
        doc["schema_version"] = 7
        m.write_text(json.dumps(doc))
    assert "schema_version 7" in _corrupt(small, tmp_path, bump)


def test_header_mismatch(small, tmp_path):
    def rename(p, m):
        p.write_text(p.read_text().replace("im_3", "imag_3", 1))
    assert "header column 10" in _corrupt(small, tmp_path, rename)


def test_row_column_count(small, tmp_path):
    def chop(p, m):
        lines = p.read_text().splitlines()
        lines[2] = lines[2].rsplit(",", 1)[0]
        p.write_text("\n".join(lines) + "\n")
    assert "row 3 has 15 columns, expected 16" in _corrupt(small, tmp_path, chop)


def test_non_numeric_cell(small, tmp_path):
    def poke(p, m):
        lines = p.read_text().splitlines()
        cells = lines[1].split(",")
        cells[5] = "abc"
        lines[1] = ",".join(cells)
        p.write_text("\n".join(lines) + "\n")
    msg = _corrupt(small, tmp_path, poke)
    assert "row 2, column 6 (im_1)" in msg and "non-numeric" in msg


def test_non_finite_cell(small, tmp_path):
    def poke(p, m):
        lines = p.read_text().splitlines()
        cells = lines[4].split(",")
        cells[2] = "nan"
        lines[4] = ",".join(cells)
        p.write_text("\n".join(lines) + "\n")
    msg = _corrupt(small, tmp_path, poke)
    assert "row 5, column 3 (re_0)" in msg and "non-finite" in msg


def test_manifest_path():
    assert manifest_path("out/kinds.csv").name == "kinds.manifest.json"


def test_validate_canonical(kind_dataset):
    rep = validate_dataset(kind_dataset, load_label_registry())
    assert rep.clean
    assert set(rep.class_counts.values()) == {10} and len(rep.class_counts) == 20


def test_validate_findings(kind_dataset):
    s = kind_dataset.spectra
    d = Dataset(list(s[:4]) + [s[4]], ["0", "0", "1", "1", "25"], [0, 1, 2, 2, 4])
    rep = validate_dataset(d, load_label_registry())
    assert "unknown_label" in rep.codes()
    assert "duplicate_sample_id" in rep.codes()
    assert "class_imbalance" in rep.codes()
    odd = Spectrum(make_log_grid(100, 1e5, 101 - 1), np.ones(100, complex))
    rep = validate_dataset(Dataset([s[0], odd], ["0", "1"], [0, 1]))
    assert rep.codes() == ["grid_mismatch"]


def test_registry_builtin():
    reg = load_label_registry("builtin")
    assert len(reg) == 20 == len(BUILTIN_LABELS)
    assert reg.name("0") == "Mineral water"
    assert reg.name("19") == "Mixed vegetable juice"
    assert reg.knows("Mineral water") and reg.knows("7") and not reg.knows("20")


def test_registry_gap(tmp_path):
    p = tmp_path / "reg.json"
    p.write_text(json.dumps({"0": "a", "2": "b"}))
    with pytest.raises(ValueError, match="contiguous"):
        load_label_registry(p)


def test_bundled_specs():
    specs = load_class_specs()
    assert [s.label for s in specs] == [str(i) for i in range(20)]
    assert parse_class_specs({"classes": [class_spec_to_dict(s) for s in specs]})[3].template \
        == specs[3].template
    fresh = load_freshness_specs()
    assert len(fresh) == 4
    assert all(tuple(f.hours) == (0, 24, 48) for f in fresh.values())


def test_spec_json_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "classes": [\n    {"label": "a",, }\n  ]\n}\n')
    with pytest.raises(SpecError, match="line 3, column"):
        load_class_specs(p)
    with pytest.raises(SpecError, match=r"classes\[0\]: missing field 'circuit'"):
        parse_class_specs({"classes": [{"label": "a"}]})
    with pytest.raises(SpecError):
        parse_class_specs([])
