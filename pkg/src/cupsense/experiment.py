"""The kind-classification experiment grid: {RF: A-D, DNN: C-D} x {full, reduced}."""
from __future__ import annotations

from dataclasses import dataclass, field

from .circuit import Dataset
from .classifiers import (ForestHyper, MlpHyper, evaluate, stratified_split_indices,
                          train_forest, train_mlp)
from .features import VARIANTS, build_feature_matrix, reduce_to_band

COLUMNS = (("RF", "A"), ("RF", "B"), ("RF", "C"), ("RF", "D"), ("DNN", "C"), ("DNN", "D"))
ROWS = ("full", "reduced")


@dataclass
class ExperimentConfig:
    test_fraction: float = 0.3
    split_seed: int = 0
    band: tuple = (100.0, 1000.0)
    n_band: int = 20
    forest: ForestHyper = field(default_factory=ForestHyper)
    mlp: MlpHyper = field(default_factory=MlpHyper)

    def to_dict(self) -> dict:
        return {"test_fraction": self.test_fraction, "split_seed": self.split_seed,
                "band": list(self.band), "n_band": self.n_band,
                "forest": self.forest.to_dict(), "mlp": self.mlp.to_dict()}


def feature_config(variant: str, reduced: bool, cfg: ExperimentConfig) -> dict:
    return {"kinds": [k.value for k in VARIANTS[variant]], "variant": variant,
            "reduced": reduced, "band": list(cfg.band) if reduced else None,
            "n_band": cfg.n_band if reduced else None,
            "test_fraction": cfg.test_fraction, "split_seed": cfg.split_seed}


def run_cell(d: Dataset, model: str, variant: str, reduced: bool,
             cfg: ExperimentConfig, split=None):
    fm = build_feature_matrix(d, VARIANTS[variant])
    if reduced:
        fm = reduce_to_band(fm, cfg.band, cfg.n_band)
    train_idx, test_idx = split or stratified_split_indices(d.labels, cfg.test_fraction,
                                                            cfg.split_seed)
    meta = feature_config(variant, reduced, cfg)
    if model == "RF":
        m = train_forest(fm.rows(train_idx), cfg.forest, meta)
    elif model == "DNN":
        m = train_mlp(fm.rows(train_idx), cfg.mlp, meta)
    else:
        raise ValueError(f"unknown model {model!r}")
    return m, evaluate(m, fm.rows(test_idx))


def run_experiment(d: Dataset, cfg: ExperimentConfig | None = None) -> dict:
    cfg = cfg or ExperimentConfig()
    split = stratified_split_indices(d.labels, cfg.test_fraction, cfg.split_seed)
    grid, cells = {}, []
    for row in ROWS:
        grid[row] = {}
        for model, variant in COLUMNS:
            try:
                _, rep = run_cell(d, model, variant, row == "reduced", cfg, split)
            except Exception as exc:
                raise RuntimeError(f"cell ({model}, {variant}, {row}) failed: {exc}") from exc
            grid[row][f"{model}-{variant}"] = rep.accuracy
            cells.append({"model": model, "dataset": variant, "features": row,
                          "report": rep.to_dict()})
    return {"config": cfg.to_dict(), "columns": [f"{m}-{v}" for m, v in COLUMNS],
            "grid": grid, "cells": cells,
            "n_train": int(split[0].size), "n_test": int(split[1].size)}


def format_grid(result: dict) -> str:
    cols = result["columns"]
    lines = ["features," + ",".join(cols)]
    for row in ROWS:
        lines.append(row + "," + ",".join(f"{result['grid'][row][c]:.4f}" for c in cols))
    return "\n".join(lines) + "\n"
