"""``cupsense`` command line: simulate, fit, svd, reduce, train, evaluate, classify,
experiment, replay, ingest, plot, and ``rerun`` of an echoed config."""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import (Dataset, circuit_from_dict, generate_freshness_dataset,
                      generate_kind_dataset)
from .classifiers import (ForestHyper, MlpHyper, TrainedModel, evaluate,
                          stratified_split_indices, train_forest, train_mlp)
from .experiment import ExperimentConfig, format_grid, run_experiment
from .features import (VARIANTS, FeatureMatrix, ImportanceProfile, build_feature_matrix,
                       importance_profile, reduce_to_band)
from .fitting import FitProblem, fit_circuit
from .io import (load_json, grid_from_doc, load_class_specs, load_freshness_specs,
                 load_label_registry, read_dataset, read_manifest, validate_dataset,
                 write_dataset)
from .plot import plot_dataset, plot_profile
from .protocol import FRAME_SIZE, SweepAssembler, iter_frames, stream_sweep
from .spectrum import FeatureKind, SpectrumMeta, default_grid, make_log_grid, parse_kinds


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail("usage", message, code=2)


def _fail(kind: str, message: str, code: int = 1):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    raise SystemExit(code)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _out(args, name: str) -> Path:
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d / name


def _echo(args, outputs: list) -> None:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    doc = {"tool": "cupsense", "version": __version__, "command": args.command,
           "args": cfg, "outputs": [str(p) for p in outputs]}
    _out(args, f"{args.command}.config.json").write_text(_dump(doc))


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


# -- subcommands --------------------------------------------------------------

def cmd_simulate(args):
    grid = make_log_grid(args.f_min, args.f_max, args.points)
    if args.freshness:
        profiles = load_freshness_specs(args.drift)
        name = args.profile or next(iter(profiles))
        if name not in profiles:
            raise CliError(f"unknown freshness profile {name!r}; have {sorted(profiles)}")
        fs = profiles[name]
        base = fs.base
        if args.noise is not None:
            base = type(base)(base.label, base.template, base.param_jitter, args.noise)
        hours = args.hours if args.hours is not None else fs.hours
        d = generate_freshness_dataset(base, fs.drift, hours, args.samples, grid, args.seed)
        registry = "none"
    else:
        specs = load_class_specs(args.spec)
        if args.noise is not None:
            specs = [type(s)(s.label, s.template, s.param_jitter, args.noise) for s in specs]
        d = generate_kind_dataset(specs, args.samples, grid, args.seed)
        registry = "builtin"
    stem = args.name or ("freshness" if args.freshness else "dataset")
    paths = write_dataset(d, _out(args, f"{stem}.csv"), registry=registry)
    report = validate_dataset(d, load_label_registry() if registry == "builtin" else None)
    _out(args, f"{stem}.validation.json").write_text(_dump(report.to_dict()))
    return [*paths, _out(args, f"{stem}.validation.json")]


def cmd_fit(args):
    d = read_dataset(args.dataset)
    if not 0 <= args.row < len(d):
        raise CliError(f"row {args.row} outside dataset of {len(d)} rows")
    target = d.spectra[args.row]
    template = circuit_from_dict(load_json(args.circuit))
    free = tuple(x for x in args.free.split(",") if x) if args.free else ()
    prob = FitProblem(template, target, free, args.weighting)
    p_init = np.array(_floats(args.p0)) if args.p0 else prob.initial
    starts = [p_init]
    rng = np.random.default_rng(args.seed)
    for _ in range(args.restarts):
        starts.append(p_init * np.exp(rng.uniform(-math.log(4), math.log(4), p_init.size)))
    best, tried = None, []
    for p0 in starts:
        res = fit_circuit(prob, p0, max_iter=args.max_iter)
        tried.append({"p0": p0.tolist(), "cost": res.cost, "converged": res.converged})
        if best is None or res.cost < best.cost:
            best = res
    doc = best.to_dict()
    doc.update({"row": args.row, "sample_id": d.sample_ids[args.row],
                "label": d.labels[args.row], "weighting": prob.weighting.value,
                "starts": tried})
    path = _out(args, "fit.json")
    path.write_text(_dump(doc))
    return [path]


def cmd_svd(args):
    d = read_dataset(args.dataset)
    outputs, doc = [], {"center": not args.no_center, "profiles": []}
    for k in parse_kinds(args.kinds):
        prof = importance_profile(build_feature_matrix(d, [k]), center=not args.no_center)
        doc["profiles"].append(prof.to_dict())
        p = _out(args, f"importance_{k.value}.csv")
        p.write_text("frequency_hz,weight\n" + "".join(
            f"{f!r},{w!r}\n" for f, w in zip(prof.frequencies.tolist(), prof.weights.tolist())))
        outputs.append(p)
    path = _out(args, "importance.json")
    path.write_text(_dump(doc))
    return [path, *outputs]


def _feature_csv(fm: FeatureMatrix) -> str:
    head = ["label", "sample_id"] + [f"{k.value}@{f!r}" for k, f in fm.col_meta]
    lines = [",".join(head)]
    for label, sid, row in zip(fm.labels, fm.sample_ids, fm.X):
        lines.append(",".join([label, str(sid)] + [repr(float(v)) for v in row]))
    return "\n".join(lines) + "\n"


def cmd_reduce(args):
    d = read_dataset(args.dataset)
    fm = reduce_to_band(build_feature_matrix(d, parse_kinds(args.kinds)), args.band, args.n)
    if args.format == "json":
        path = _out(args, "features.json")
        path.write_text(_dump({"columns": [[k.value, f] for k, f in fm.col_meta],
                               "labels": list(fm.labels), "sample_ids": list(fm.sample_ids),
                               "X": fm.X.tolist()}))
    else:
        path = _out(args, "features.csv")
        path.write_text(_feature_csv(fm))
    return [path]


def _kinds_from(args):
    return VARIANTS[args.variant] if args.kinds is None else parse_kinds(args.kinds)


def _features_for(d: Dataset, meta: dict, col_meta=None) -> FeatureMatrix:
    fm = build_feature_matrix(d, meta["kinds"])
    if meta.get("reduced"):
        fm = reduce_to_band(fm, meta["band"], meta["n_band"])
    if col_meta is not None:
        index = {(k, f): i for i, (k, f) in enumerate(fm.col_meta)}
        try:
            fm = fm.columns([index[(k, f)] for k, f in col_meta])
        except KeyError as exc:
            raise CliError(f"dataset has no column for model feature {exc.args[0]}") from None
    return fm


def cmd_train(args):
    d = read_dataset(args.dataset)
    meta = {"kinds": [k.value for k in _kinds_from(args)], "reduced": args.reduced,
            "band": list(args.band) if args.reduced else None,
            "n_band": args.n_band if args.reduced else None,
            "test_fraction": args.test_fraction, "split_seed": args.seed,
            "dataset": str(args.dataset)}
    fm = _features_for(d, meta)
    train_idx, _ = stratified_split_indices(d.labels, args.test_fraction, args.seed)
    if args.model == "rf":
        m = train_forest(fm.rows(train_idx), _forest_hyper(args), meta)
    else:
        m = train_mlp(fm.rows(train_idx), _mlp_hyper(args), meta)
    path = _out(args, args.name or "model.json")
    m.save(path)
    return [path]


def _model_rows(args, m: TrainedModel, d: Dataset):
    fm = _features_for(d, m.meta, m.col_meta)
    if getattr(args, "split", "all") == "test":
        _, idx = stratified_split_indices(d.labels, m.meta["test_fraction"], m.meta["split_seed"])
        fm = fm.rows(idx)
    return fm


def cmd_evaluate(args):
    m = TrainedModel.load(args.model)
    d = read_dataset(args.dataset)
    rep = evaluate(m, _model_rows(args, m, d))
    rep.meta["split"] = args.split
    path = _out(args, "report.json")
    path.write_text(_dump(rep.to_dict()))
    return [path]


def cmd_classify(args):
    m = TrainedModel.load(args.model)
    d = read_dataset(args.dataset)
    fm = _model_rows(args, m, d)
    P = m.predict_proba(fm.X)
    pred = [m.classes[i] for i in np.argmax(P, axis=1)]
    registry = load_label_registry(args.registry) if args.registry else None
    if args.format == "json":
        path = _out(args, "predictions.json")
        path.write_text(_dump({"classes": list(m.classes), "predictions": [
            {"sample_id": sid, "true": t, "predicted": p,
             "name": registry.name(p) if registry else p, "probabilities": row.tolist()}
            for sid, t, p, row in zip(fm.sample_ids, fm.labels, pred, P)]}))
    else:
        path = _out(args, "predictions.csv")
        lines = ["sample_id,true_label,predicted_label,predicted_name," +
                 ",".join(f"p_{c}" for c in m.classes)]
        for sid, t, p, row in zip(fm.sample_ids, fm.labels, pred, P):
            name = registry.name(p) if registry else p
            lines.append(",".join([str(sid), t, p, json.dumps(name)] + [repr(float(v)) for v in row]))
        path.write_text("\n".join(lines) + "\n")
    return [path]


def cmd_experiment(args):
    d = read_dataset(args.dataset)
    cfg = ExperimentConfig(args.test_fraction, args.seed, tuple(args.band), args.n_band,
                           _forest_hyper(args), _mlp_hyper(args))
    result = run_experiment(d, cfg)
    result["dataset"] = str(args.dataset)
    path = _out(args, "experiment.json")
    path.write_text(_dump(result))
    grid = _out(args, "experiment_grid.csv")
    grid.write_text(format_grid(result))
    return [path, grid]


def cmd_replay(args):
    d = read_dataset(args.dataset)
    if len(d) > 0x10000:
        raise CliError("at most 65536 sweeps fit the 16-bit sweep id")
    blob = b"".join(b"".join(stream_sweep(s, i)) for i, s in enumerate(d.spectra))
    sidecar = _out(args, "replay.labels.json")
    sidecar.write_text(_dump({"manifest": str(Path(args.dataset)),
                              "sweeps": [{"sweep_id": i, "label": l, "sample_id": sid}
                                         for i, (l, sid) in enumerate(zip(d.labels, d.sample_ids))]}))
    if args.out == "-":
        sys.stdout.buffer.write(blob)
        sys.stdout.buffer.flush()
        return [sidecar]
    path = Path(args.out) if args.out else _out(args, "frames.bin")
    path.write_bytes(blob)
    return [path, sidecar]


def cmd_ingest(args):
    blob = sys.stdin.buffer.read() if args.frames == "-" else Path(args.frames).read_bytes()
    if args.manifest:
        m = read_manifest(args.manifest)
        grid, amp = grid_from_doc(m["grid"]), float(m["stimulus_amplitude_mV"])
    else:
        grid, amp = default_grid(), SpectrumMeta().stimulus_amplitude_mV
    labels = {}
    if args.labels:
        for item in json.loads(Path(args.labels).read_text())["sweeps"]:
            labels[int(item["sweep_id"])] = (str(item["label"]), int(item["sample_id"]))
    errors = []
    assemblers: dict[int, SweepAssembler] = {}
    for frame in iter_frames(blob, errors):
        sid = frame.sweep_id
        if sid not in assemblers:
            label = labels.get(sid, (f"sweep{sid}", sid))[0]
            assemblers[sid] = SweepAssembler(grid, SpectrumMeta(amp, None, label))
        assemblers[sid].feed(frame)
    incomplete = {sid: a.missing() for sid, a in assemblers.items() if a.missing()}
    if incomplete:
        raise CliError("incomplete sweeps: " + "; ".join(
            f"sweep {sid} missing {gaps}" for sid, gaps in sorted(incomplete.items())))
    spectra, out_labels, ids = [], [], []
    for sid in sorted(assemblers):
        spectra.append(assemblers[sid].finish())
        label, sample_id = labels.get(sid, (f"sweep{sid}", sid))
        out_labels.append(label)
        ids.append(sample_id)
    if not spectra:
        raise CliError("no valid frames in input")
    d = Dataset(spectra, out_labels, ids)
    paths = write_dataset(d, _out(args, (args.name or "ingested") + ".csv"))
    log = _out(args, "ingest.log.json")
    log.write_text(_dump({"bytes": len(blob), "frames_expected": len(blob) // FRAME_SIZE,
                          "sweeps": len(spectra),
                          "frame_errors": [{"offset": o, "error": type(e).__name__,
                                            "message": str(e)} for o, e in errors]}))
    return [*paths, log]


def cmd_plot(args):
    if bool(args.dataset) == bool(args.profile):
        raise CliError("give exactly one of --dataset or --profile")
    if args.dataset:
        d = read_dataset(args.dataset)
        registry = load_label_registry() if args.names else None
        svg, csv_text = plot_dataset(d, registry, FeatureKind(args.kind))
    else:
        doc = json.loads(Path(args.profile).read_text())
        profs = doc.get("profiles", [doc])
        chosen = [p for p in profs if p["kind"] == args.kind] or profs[:1]
        p = chosen[0]
        if not p["weights"]:
            raise CliError("profile has no weights")
        svg, csv_text = plot_profile(ImportanceProfile(
            FeatureKind(p["kind"]), np.asarray(p["frequencies"]), np.asarray(p["weights"]),
            float(p["peak_frequency"])))
    stem = args.name or "plot"
    svg_path, csv_path = _out(args, f"{stem}.svg"), _out(args, f"{stem}.csv")
    svg_path.write_text(svg)
    csv_path.write_text(csv_text)
    return [svg_path, csv_path]


def _forest_hyper(args) -> ForestHyper:
    return ForestHyper(n_trees=args.trees, max_depth=args.max_depth,
                       features_per_split=args.features_per_split,
                       bootstrap=not args.no_bootstrap, seed=args.seed)


def _mlp_hyper(args) -> MlpHyper:
    return MlpHyper(hidden_layers=tuple(_ints(args.hidden)), learning_rate=args.lr,
                    epochs=args.epochs, batch_size=args.batch_size, seed=args.seed)


# -- parser -------------------------------------------------------------------

def _add_forest(p):
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--features-per-split", type=int, default=None)
    p.add_argument("--no-bootstrap", action="store_true")


def _add_mlp(p):
    p.add_argument("--hidden", default="64,32", help="comma-separated hidden layer sizes")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=16)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out-dir", default="out")
    common.add_argument("--format", choices=("json", "csv"), default="csv")

    parser = _Parser(prog="cupsense", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", parents=[common], help="generate a synthetic dataset")
    p.add_argument("--spec", help="class-spec JSON (default: bundled 20 beverages)")
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--freshness", action="store_true")
    p.add_argument("--drift", help="freshness profile JSON (default: bundled profiles)")
    p.add_argument("--profile", help="freshness profile name (default: first)")
    p.add_argument("--hours", type=_floats, default=None)
    p.add_argument("--noise", type=float, default=None, help="override relative noise")
    p.add_argument("--f-min", type=float, default=100.0)
    p.add_argument("--f-max", type=float, default=100_000.0)
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--name")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", parents=[common], help="fit a circuit to one spectrum")
    p.add_argument("--dataset", required=True)
    p.add_argument("--row", type=int, default=0)
    p.add_argument("--circuit", required=True, help="circuit JSON")
    p.add_argument("--free", help="comma-separated parameter names, e.g. R0,R1,Q2")
    p.add_argument("--weighting", choices=("unit", "proportional"), default="proportional")
    p.add_argument("--p0", help="comma-separated starting values (default: circuit values)")
    p.add_argument("--restarts", type=int, default=0, help="extra seeded random starts")
    p.add_argument("--max-iter", type=int, default=200)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("svd", parents=[common], help="frequency importance profiles")
    p.add_argument("--dataset", required=True)
    p.add_argument("--kinds", default="amplitude,phase,real,imaginary")
    p.add_argument("--no-center", action="store_true")
    p.set_defaults(func=cmd_svd)

    p = sub.add_parser("reduce", parents=[common], help="reduced-band feature matrix")
    p.add_argument("--dataset", required=True)
    p.add_argument("--kinds", default="amplitude,phase")
    p.add_argument("--band", type=float, nargs=2, default=[100.0, 1000.0])
    p.add_argument("--n", type=int, default=20)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("train", parents=[common], help="train RF or DNN on the train split")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model", choices=("rf", "dnn"), default="rf")
    p.add_argument("--variant", choices=sorted(VARIANTS), default="A")
    p.add_argument("--kinds", default=None, help="overrides --variant")
    p.add_argument("--reduced", action="store_true")
    p.add_argument("--band", type=float, nargs=2, default=[100.0, 1000.0])
    p.add_argument("--n-band", type=int, default=20)
    p.add_argument("--test-fraction", type=float, default=0.3)
    p.add_argument("--name")
    _add_forest(p)
    _add_mlp(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[common], help="score a model")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", choices=("test", "all"), default="test")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("classify", parents=[common], help="predict labels")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", choices=("test", "all"), default="all")
    p.add_argument("--registry", help="label registry JSON or 'builtin' for display names")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("experiment", parents=[common], help="full RF/DNN x A-D grid")
    p.add_argument("--dataset", required=True)
    p.add_argument("--test-fraction", type=float, default=0.3)
    p.add_argument("--band", type=float, nargs=2, default=[100.0, 1000.0])
    p.add_argument("--n-band", type=int, default=20)
    _add_forest(p)
    _add_mlp(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("replay", parents=[common], help="dataset -> binary frame stream")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", help="output file, '-' for stdout (default: OUT_DIR/frames.bin)")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("ingest", parents=[common], help="binary frame stream -> dataset")
    p.add_argument("--frames", required=True, help="frame file or '-' for stdin")
    p.add_argument("--manifest", help="dataset manifest giving the expected grid")
    p.add_argument("--labels", help="labels sidecar written by replay")
    p.add_argument("--name")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("plot", parents=[common], help="SVG chart plus CSV sidecar")
    p.add_argument("--dataset")
    p.add_argument("--profile", help="importance.json written by svd")
    p.add_argument("--kind", default="amplitude")
    p.add_argument("--names", action="store_true", help="legend with registry names")
    p.add_argument("--name")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("rerun", help="re-execute a run from its <command>.config.json echo")
    p.add_argument("config")
    p.set_defaults(func=None)
    return parser


def _dispatch(args) -> list:
    commands = {"simulate": cmd_simulate, "fit": cmd_fit, "svd": cmd_svd,
                "reduce": cmd_reduce, "train": cmd_train, "evaluate": cmd_evaluate,
                "classify": cmd_classify, "experiment": cmd_experiment,
                "replay": cmd_replay, "ingest": cmd_ingest, "plot": cmd_plot}
    if args.command == "rerun":
        doc = json.loads(Path(args.config).read_text())
        if doc.get("tool") != "cupsense" or doc.get("command") not in commands:
            raise CliError(f"{args.config}: not a cupsense config echo")
        args = argparse.Namespace(**doc["args"])
        if hasattr(args, "band") and args.band is not None:
            args.band = list(args.band)
    outputs = commands[args.command](args)
    _echo(args, outputs)
    return outputs


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        outputs = _dispatch(args)
    except SystemExit:
        raise
    except Exception as exc:  # every failure leaves a JSON diagnostic
        _fail(type(exc).__name__, str(exc))
    if not (args.command == "replay" and getattr(args, "out", None) == "-"):
        for p in outputs:
            print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
