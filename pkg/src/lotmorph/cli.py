"""
Command line front end.

Subcommands: ``embed``, ``analyze``, ``visualize``, ``intrinsic-mean`` and
``evaluate``. Exit status is 0 on success, 1 on error and 2 when outputs
were written but some transport solve did not reach its tolerance.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, embedding, grid, solver, stats, viz
from .errors import DimMismatch, EmptyInput, LotmorphError

log = logging.getLogger("lotmorph")

EXIT_OK, EXIT_ERROR, EXIT_PARTIAL = 0, 1, 2


@dataclass
class PipelineConfig:
    """Settings shared by all subcommands; a JSON config file may set any
    field (``solver`` as a nested object) and flags override it."""

    solver: solver.SolverConfig = field(default_factory=solver.SolverConfig)
    variance_threshold: float = 0.96
    alpha_lo: float = 1e-4
    alpha_hi: float = 1e2
    alpha_count: int = 25
    cca_ridge: float = None
    ns_rank: float = 0.99
    ns_space: str = "features"
    k_nn: int = 10
    workers: int = 1
    cache_dir: str = None
    seed: int = 0
    epsilon: float = 1e-8

    def __post_init__(self):
        if not 0 < self.variance_threshold <= 1:
            raise ValueError("variance_threshold must lie in (0, 1]")
        if self.ns_space not in ("features", "pca"):
            raise ValueError("ns_space must be 'features' or 'pca'")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["solver"] = dataclasses.asdict(self.solver)
        d["solver"]["init_floors"] = list(self.solver.init_floors)
        return d


_FLAG_FIELDS = {"var": "variance_threshold", "workers": "workers", "cache": "cache_dir",
                "seed": "seed", "k_nn": "k_nn", "ns_space": "ns_space"}


def build_config(args):
    values = {}
    if getattr(args, "config", None):
        values = json.loads(Path(args.config).read_text())
    solver_kw = dict(values.pop("solver", {}) or {})
    for flag, name in _FLAG_FIELDS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[name] = v
    unknown = set(values) - {f.name for f in dataclasses.fields(PipelineConfig)}
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return PipelineConfig(solver=solver.SolverConfig(**solver_kw), **values)


# ---------------------------------------------------------------------------
# helpers

def _file_hash(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()[:16]


def _write_json(path, obj):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _run_manifest(out, command, argv, cfg, inputs, extra=None):
    rec = {
        "command": command,
        "argv": list(argv),
        "tool_version": __version__,
        "numpy_version": np.__version__,
        "config": cfg.to_dict(),
        "config_hash": cfg.solver.digest(),
        "inputs": {str(p): _file_hash(p) for p in inputs if Path(p).is_file()},
    }
    if extra:
        rec.update(extra)
    _write_json(Path(out) / "run-manifest.json", rec)


def _load_features(path):
    """Features and labels from an embed output directory or a features
    file with ``labels.npy`` next to it."""
    path = Path(path)
    if path.is_dir():
        fpath, lpath = path / "features.npy", path / "labels.npy"
    else:
        fpath, lpath = path, path.with_name("labels.npy")
    X = np.load(fpath, allow_pickle=False).astype(np.float64)
    y = np.load(lpath, allow_pickle=False)
    return X, y, [fpath, lpath]


def _save_npy(path, arr):
    with open(path, "wb") as fh:
        np.lib.format.write_array(fh, np.ascontiguousarray(arr), version=(1, 0),
                                  allow_pickle=False)


def _alpha_grid(Z, y, cfg):
    return stats.alpha_grid(Z, y, cfg.alpha_count, cfg.alpha_lo, cfg.alpha_hi)


def _fmt(a):
    return f"{a:g}"


# ---------------------------------------------------------------------------
# embed

def cmd_embed(args, cfg):
    man = embedding.load_manifest(args.manifest, args.mode)
    vols, labels, ref = embedding.load_dataset(man, args.reference, args.normalized,
                                               cfg.epsilon)
    if ref is None:
        raise EmptyInput("test mode needs --reference")
    cache = embedding.resolve_cache_dir(cfg.cache_dir)
    res = embedding.batch_embed(vols, labels, ref, cfg.solver, cfg.workers, cache)
    out = Path(args.out)
    res.save(out)
    log.info("%d solves performed", res.solves)
    inputs = [Path(args.manifest)] + man.paths + ([Path(args.reference)] if args.reference else [])
    _run_manifest(out, "embed", args.argv, cfg, inputs,
                  {"solves": res.solves, "all_converged": res.all_converged})
    n_bad = sum(not d["converged"] for d in res.diagnostics)
    if n_bad:
        log.warning("%d of %d samples did not converge", n_bad, len(vols))
        return EXIT_PARTIAL
    return EXIT_OK


# ---------------------------------------------------------------------------
# analyze

def _classify(task, Xtr, ytr, Xte, cfg, alpha=None):
    """Fit one classifier; returns (models, test predictions, test scores,
    train scores, info)."""
    models = {}
    info = {}
    if task == "plda" or cfg.ns_space == "pca":
        pca = stats.pca_fit(Xtr, cfg.variance_threshold)
        models["pca"] = pca
        Ztr, Zte = stats.pca_transform(pca, Xtr), stats.pca_transform(pca, Xte)
        info["k"] = pca.k
    else:
        Ztr, Zte = Xtr, Xte
    if task == "plda":
        a = alpha if alpha is not None else stats.calculate_alpha(
            Ztr, ytr, _alpha_grid(Ztr, ytr, cfg))
        m = stats.plda_fit(Ztr, ytr, a)
        models["plda"] = m
        info["alpha"] = a
        return (models, stats.plda_predict(m, Zte), stats.plda_transform(m, Zte) + m.b,
                stats.plda_transform(m, Ztr) + m.b, info)
    m = stats.ns_fit(Ztr, ytr, cfg.ns_rank)
    models["ns"] = m
    Rte = stats.ns_residuals(m, Zte)
    Rtr = stats.ns_residuals(m, Ztr)
    if task == "ns":
        pred = stats.ns_predict(m, Zte)
    else:
        pred = stats.local_ns_predict(m, Zte, cfg.k_nn)
        info["k_nn"] = cfg.k_nn
    # residual gap: positive favors the higher class code
    score = lambda R: R[:, 0] - R[:, -1]
    return models, pred, score(Rte), score(Rtr), info


def cmd_analyze(args, cfg):
    Xtr, ytr, inputs = _load_features(args.features_train)
    if args.features_test:
        Xte, yte, more = _load_features(args.features_test)
        inputs += more
        if Xte.shape[1] != Xtr.shape[1]:
            raise DimMismatch(f"train features have {Xtr.shape[1]} columns, "
                              f"test features {Xte.shape[1]}")
    else:
        Xte, yte = Xtr, ytr
    out = Path(args.out)
    mdir = out / "models"
    task = args.task
    result = {"task": task}
    preds = {}
    if task == "pca":
        pca = stats.pca_fit(Xtr, cfg.variance_threshold)
        stats.save_model(pca, mdir / "pca")
        log.info("PCA keeps k=%d components at threshold %g", pca.k, cfg.variance_threshold)
        result.update(k=pca.k, explained_variance_ratio=pca.explained_ratio.tolist(),
                      cumulative=float(pca.explained_ratio.sum()))
        preds = {"train_scores": stats.pca_transform(pca, Xtr).tolist()}
    elif task == "cca":
        pca = stats.pca_fit(Xtr, cfg.variance_threshold)
        Ztr, Zte = stats.pca_transform(pca, Xtr), stats.pca_transform(pca, Xte)
        cca = stats.cca_fit(Ztr, ytr.astype(np.float64), cfg.cca_ridge)
        stats.save_model(pca, mdir / "pca")
        stats.save_model(cca, mdir / "cca")
        px = stats.cca_transform(cca, Zte)
        yhat = stats.cca_predict(cca, Zte)
        corr = float(np.corrcoef(px, yte.astype(float))[0, 1]) if np.std(yte) > 0 else None
        result.update(k=pca.k, rho=cca.rho, slope=cca.slope, intercept=cca.intercept,
                      test_correlation=corr)
        preds = {"test_projection": px.tolist(), "test_prediction": yhat.tolist(),
                 "test_labels": yte.tolist()}
    else:
        models, pred, s_te, s_tr, info = _classify(task, Xtr, ytr, Xte, cfg, args.alpha)
        for name, m in models.items():
            stats.save_model(m, mdir / name)
        binary = len(np.unique(yte)) == 2
        m = stats.metrics(pred, yte, s_te if binary else None)
        result.update(m)
        result.update(info)
        preds = {"train_scores": s_tr.tolist(), "train_labels": ytr.tolist(),
                 "test_scores": s_te.tolist(), "test_labels": yte.tolist(),
                 "test_predictions": pred.tolist()}
    _write_json(out / "metrics.json", result)
    _write_json(out / "predictions.json", preds)
    _run_manifest(out, "analyze", args.argv, cfg, inputs)
    return EXIT_OK


# ---------------------------------------------------------------------------
# visualize

def _strip(vols, what, mode, alphas, fig_dir, axis, dump):
    paths = []
    # one slice for the whole strip so panels are comparable
    idx = int(round(grid.center_of_mass(vols[0])[{"x": 0, "y": 1, "z": 2}[axis]]))
    for a, v in zip(alphas, vols):
        stem = f"{what}_{mode}_{_fmt(a)}"
        paths.append(viz.emit_montage([v], [f"{_fmt(a)}"], fig_dir / f"{stem}.png",
                                      axis, idx))
        if dump:
            grid.write_volume(v, fig_dir / f"{stem}.npy", dtype=np.float64)
    viz.emit_montage(vols, [_fmt(a) for a in alphas], fig_dir / f"{what}_{mode}.png",
                     axis, idx)
    return paths


def _load(model_dir, name):
    path = Path(model_dir) / "models" / name
    if not (path / "model.json").exists():
        raise EmptyInput(f"no {name} model under {model_dir}")
    return stats.load_model(path)


def cmd_visualize(args, cfg):
    fig_dir = Path(args.out) / "figures"
    what = args.what
    inputs = []
    ref = None
    if what in ("pca-modes", "plda-mode", "cca-mode", "geodesic"):
        if not args.reference:
            raise EmptyInput(f"--reference is required for {what}")
        ref = grid.read_volume(args.reference).astype(np.float64)
        inputs.append(Path(args.reference))
    alphas = tuple(float(a) for a in args.alphas.split(",")) if args.alphas else None
    if what == "pca-modes":
        pca = _load(args.model_dir, "pca")
        modes = [int(m) for m in args.modes.split(",")]
        for i in modes:
            spec = viz.pca_mode_spec(pca, i, alphas or viz.PCA_ALPHAS)
            vols = viz.mode_volumes(spec, pca.mean, ref)
            _strip(vols, what, i, spec.alphas, fig_dir, args.axis, args.dump_volumes)
    elif what == "plda-mode":
        pca, plda = _load(args.model_dir, "pca"), _load(args.model_dir, "plda")
        spec = viz.plda_direction_lift(plda, pca, alphas or viz.PCA_ALPHAS)
        vols = viz.mode_volumes(spec, pca.mean, ref)
        _strip(vols, what, 0, spec.alphas, fig_dir, args.axis, args.dump_volumes)
    elif what == "cca-mode":
        pca, cca = _load(args.model_dir, "pca"), _load(args.model_dir, "cca")
        spec = viz.cca_direction_lift(cca, pca, alphas or viz.CCA_ALPHAS)
        vols = viz.mode_volumes(spec, pca.mean, ref)
        _strip(vols, what, 0, spec.alphas, fig_dir, args.axis, args.dump_volumes)
    elif what == "geodesic":
        if not args.target:
            raise EmptyInput("--target is required for geodesic")
        target = grid.read_volume(args.target).astype(np.float64)
        inputs.append(Path(args.target))
        if args.map:
            f = grid.read_field(args.map).astype(np.float64)
            inputs.append(Path(args.map))
        else:
            f = solver.solve_monge(grid.normalize_mass(ref, cfg.epsilon),
                                   grid.normalize_mass(target, cfg.epsilon), cfg.solver).map
        alphas = alphas or (0.0, 0.25, 0.5, 0.75, 1.0)
        vols = [solver.geodesic_density(target, f, a) for a in alphas]
        _strip(vols, what, 0, alphas, fig_dir, args.axis, args.dump_volumes)
    else:
        ppath = Path(args.model_dir) / "predictions.json"
        if not ppath.exists():
            raise EmptyInput(f"no predictions.json under {args.model_dir}")
        p = json.loads(ppath.read_text())
        inputs.append(ppath)
        if "test_scores" not in p:
            raise EmptyInput("predictions hold no classifier scores")
        if what == "projections":
            viz.emit_projection_plot(p["train_scores"], p["train_labels"],
                                     p["test_scores"], p["test_labels"],
                                     fig_dir / "projections.png")
        elif what == "roc":
            viz.emit_roc(p["test_scores"], p["test_labels"], fig_dir / "roc.png")
        else:
            viz.emit_confusion(p["test_predictions"], p["test_labels"],
                               fig_dir / "confusion.png")
    _run_manifest(args.out, "visualize", args.argv, cfg, inputs)
    return EXIT_OK


# ---------------------------------------------------------------------------
# intrinsic mean

def _load_maps(maps_dir, reference):
    maps_dir = Path(maps_dir)
    if not maps_dir.is_dir():
        raise EmptyInput(f"{maps_dir} is not a directory")
    feats = maps_dir / "features.npy"
    if feats.exists():
        X = np.load(feats, allow_pickle=False).astype(np.float64)
        return [embedding.defeaturize(row, reference) for row in X], [feats]
    maps, used = [], []
    for p in sorted(maps_dir.glob("*.npy")):
        try:
            maps.append(grid.read_field(p).astype(np.float64))
            used.append(p)
        except LotmorphError:
            continue
    return maps, used


def cmd_intrinsic_mean(args, cfg):
    ref = grid.read_volume(args.reference).astype(np.float64)
    ref = grid.normalize_mass(ref, cfg.epsilon)
    maps, inputs = _load_maps(args.maps_dir, ref)
    if not maps:
        raise EmptyInput(f"no maps or features found in {args.maps_dir}")
    targets = None
    if args.iters > 1:
        if not args.targets:
            raise EmptyInput("--iters > 1 needs --targets (manifest of the sample volumes)")
        man = embedding.load_manifest(args.targets)
        targets, _, _ = embedding.load_dataset(man, None, False, cfg.epsilon)
        inputs += [Path(args.targets)] + man.paths
    mean = solver.intrinsic_mean(maps, ref, args.iters, targets, cfg.solver)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid.write_volume(mean, out / "intrinsic_mean.npy", dtype=np.float64)
    viz.emit_montage([mean], ["intrinsic mean"], out / "figures" / "intrinsic_mean.png")
    _run_manifest(out, "intrinsic-mean", args.argv, cfg, [Path(args.reference)] + inputs,
                  {"maps": len(maps), "iters": args.iters})
    return EXIT_OK


# ---------------------------------------------------------------------------
# evaluate

def stratified_split(labels, train_size, test_size, rng):
    """Disjoint train/test index arrays drawn without replacement, with
    class proportions matching the whole set as closely as possible."""
    labels = np.asarray(labels)
    N = len(labels)
    if train_size + test_size > N:
        raise ValueError(f"dataset has {N} samples, split needs {train_size + test_size}")
    classes, counts = np.unique(labels, return_counts=True)

    def quota(total, avail):
        q = np.floor(total * avail / avail.sum()).astype(int)
        rest = total - q.sum()
        order = np.argsort(-(total * avail / avail.sum() - q), kind="stable")
        for j in order[:rest]:
            q[j] += 1
        return np.minimum(q, avail)

    tr_q = quota(train_size, counts)
    te_q = quota(test_size, counts - tr_q)
    train, test = [], []
    for c, nt, ne in zip(classes, tr_q, te_q):
        idx = rng.permutation(np.flatnonzero(labels == c))
        train.append(idx[:nt])
        test.append(idx[nt:nt + ne])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def format_table(summary):
    lines = ["| Classifier | ACC | Balanced acc |", "|---|---|---|"]
    for name, s in summary.items():
        lines.append(f"| {name} | {s['acc_mean']:.3f}±{s['acc_std']:.3f} "
                     f"| {s['bal_mean']:.3f}±{s['bal_std']:.3f} |")
    return "\n".join(lines)


_NAMES = {"plda": "PLDA", "ns": "Nearest Subspace", "lns": "Local Nearest Subspace"}


def cmd_evaluate(args, cfg):
    classifiers = [c.strip() for c in args.classifiers.split(",") if c.strip()]
    for c in classifiers:
        if c not in _NAMES:
            raise ValueError(f"unknown classifier {c!r}; choose from {sorted(_NAMES)}")
    man = embedding.load_manifest(args.manifest, "train")
    if len(man) < args.train_size + args.test_size:
        raise ValueError(f"dataset has {len(man)} samples, split needs "
                         f"{args.train_size + args.test_size}")
    vols, labels, ref = embedding.load_dataset(man, None, args.normalized, cfg.epsilon)
    cache = embedding.resolve_cache_dir(cfg.cache_dir)
    res = embedding.batch_embed(vols, labels, ref, cfg.solver, cfg.workers, cache)
    out = Path(args.out)
    res.save(out)
    log.info("%d solves performed", res.solves)
    X = res.features
    rng = np.random.default_rng(cfg.seed)
    per = {c: {"acc": [], "bal": []} for c in classifiers}
    fig_dir = out / "figures"
    for s in range(args.splits):
        tr, te = stratified_split(labels, args.train_size, args.test_size, rng)
        for c in classifiers:
            _, pred, s_te, s_tr, info = _classify(c, X[tr], labels[tr], X[te], cfg)
            m = stats.metrics(pred, labels[te])
            per[c]["acc"].append(m["accuracy"])
            per[c]["bal"].append(m["balanced_accuracy"])
            log.info("split %d %s acc=%.3f", s, c, m["accuracy"])
            if s == 0 and c == classifiers[0]:
                viz.emit_projection_plot(s_tr, labels[tr], s_te, labels[te],
                                         fig_dir / f"projections_{c}.png")
                viz.emit_roc(s_te, labels[te], fig_dir / f"roc_{c}.png")
                viz.emit_confusion(pred, labels[te], fig_dir / f"confusion_{c}.png")
    ddof = 1 if args.splits > 1 else 0
    summary = {}
    for c in classifiers:
        acc, bal = np.array(per[c]["acc"]), np.array(per[c]["bal"])
        summary[_NAMES[c]] = {"acc_mean": float(acc.mean()), "acc_std": float(acc.std(ddof=ddof)),
                              "bal_mean": float(bal.mean()), "bal_std": float(bal.std(ddof=ddof)),
                              "acc": acc.tolist(), "balanced_acc": bal.tolist()}
    table = format_table(summary)
    print(table)
    (out / "table.md").write_text(table + "\n")
    _write_json(out / "metrics.json", {
        "classifiers": summary, "splits": args.splits, "train_size": args.train_size,
        "test_size": args.test_size, "seed": cfg.seed, "stratified": True,
        "converged": int(sum(d["converged"] for d in res.diagnostics)),
        "samples": len(vols),
    })
    _run_manifest(out, "evaluate", args.argv, cfg, [Path(args.manifest)] + man.paths,
                  {"solves": res.solves})
    return EXIT_OK if res.all_converged else EXIT_PARTIAL


# ---------------------------------------------------------------------------
# argument parsing

class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1 (2 is reserved for partial runs)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="lotmorph", description="Transport-based morphometry of 3D densities.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, workers=False):
        sp.add_argument("--config", help="JSON file with PipelineConfig fields")
        sp.add_argument("--log-level", default="INFO")
        sp.add_argument("--out", required=True, help="output directory")
        if workers:
            sp.add_argument("--workers", type=int)
            sp.add_argument("--cache", help=f"map cache directory ({embedding.CACHE_ENV} wins)")

    sp = sub.add_parser("embed", help="solve transport maps and write features")
    common(sp, workers=True)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--mode", choices=("train", "test"), default="train")
    sp.add_argument("--reference")
    sp.add_argument("--normalized", action="store_true",
                    help="volumes already have unit mass (checked)")
    sp.set_defaults(func=cmd_embed)

    sp = sub.add_parser("analyze", help="fit PCA, PLDA, CCA or nearest subspace models")
    common(sp)
    sp.add_argument("--features-train", required=True)
    sp.add_argument("--features-test")
    sp.add_argument("--task", choices=("pca", "plda", "cca", "ns", "lns"), required=True)
    sp.add_argument("--var", type=float, help="PCA variance threshold (default 0.96)")
    sp.add_argument("--alpha", type=float, help="fixed PLDA penalty (default: automatic)")
    sp.add_argument("--k-nn", type=int)
    sp.add_argument("--ns-space", choices=("features", "pca"))
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("visualize", help="render modes, geodesics and result plots")
    common(sp)
    sp.add_argument("--model-dir", default=".")
    sp.add_argument("--reference")
    sp.add_argument("--what", required=True,
                    choices=("pca-modes", "plda-mode", "cca-mode", "geodesic",
                             "projections", "roc", "confusion"))
    sp.add_argument("--modes", default="0,1,2")
    sp.add_argument("--alphas", help="comma separated sampling multipliers")
    sp.add_argument("--axis", choices=("x", "y", "z"), default="z")
    sp.add_argument("--target", help="target volume for --what geodesic")
    sp.add_argument("--map", help="precomputed map for --what geodesic")
    sp.add_argument("--dump-volumes", action="store_true")
    sp.set_defaults(func=cmd_visualize)

    sp = sub.add_parser("intrinsic-mean", help="barycenter from the mean transport map")
    common(sp)
    sp.add_argument("--maps-dir", required=True)
    sp.add_argument("--reference", required=True)
    sp.add_argument("--iters", type=int, default=1)
    sp.add_argument("--targets", help="manifest of sample volumes (needed for --iters > 1)")
    sp.set_defaults(func=cmd_intrinsic_mean)

    sp = sub.add_parser("evaluate", help="repeated random train/test splits")
    common(sp, workers=True)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--splits", type=int, default=20)
    sp.add_argument("--train-size", type=int, default=200)
    sp.add_argument("--test-size", type=int, default=130)
    sp.add_argument("--classifiers", default="plda,ns,lns")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--var", type=float)
    sp.add_argument("--k-nn", type=int)
    sp.add_argument("--ns-space", choices=("features", "pca"))
    sp.add_argument("--normalized", action="store_true")
    sp.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # usage errors, --help and --version
        return exc.code
    args.argv = argv
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO),
                        format="%(levelname)s %(name)s: %(message)s", force=True)
    try:
        cfg = build_config(args)
        return args.func(args, cfg)
    except (LotmorphError, OSError, ValueError, KeyError) as exc:
        msg = str(exc) if not isinstance(exc, KeyError) or isinstance(exc, LotmorphError) \
            else f"missing key {exc}"
        print(f"lotmorph {args.command}: error: {msg}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
