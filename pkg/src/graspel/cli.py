"""Command-line front end.

Every subcommand prints a single JSON report on stdout; diagnostics go to
stderr.  Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
non-convergence (including a learn run that hits ``--max-iter``).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .cluster import accuracy, kmeans, nmi, spectral_features
from .eigen import ConvergenceError, embed, write_embedding
from .graphcore import DataMatrix, GraphFormatError, connected_components, read_edge_list, write_edge_list
from .learn import LearnConfig, LearnError, center_rows, graspel_learn
from .recover import recovery_experiment
from .sparsify import SparsifyConfig, spectral_sparsify

log = logging.getLogger("graspel")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

# recovery defaults per ground-truth kind; see README
RECOVER_K_INIT = {"gaussian": 8, "er": 2}


class DataFormatError(ValueError):
    """Malformed input data; the message names the offending line."""


class UsageError(ValueError):
    pass


def ingest_csv(path, has_header=False):
    """Read a numeric CSV (rows are data points) and mean-center its rows."""
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if has_header and lineno == 1:
                continue
            if not rec or all(not c.strip() for c in rec):
                continue
            if width is None:
                width = len(rec)
            elif len(rec) != width:
                raise DataFormatError(f"{path}:{lineno}: expected {width} fields, found {len(rec)}")
            try:
                rows.append([float(c) for c in rec])
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: non-numeric value") from None
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    X = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(X)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(X), axis=1))[0])
        raise DataFormatError(f"{path}: non-finite value in data row {bad + 1}")
    log.info("read %d x %d data matrix from %s", X.shape[0], X.shape[1], path)
    return center_rows(DataMatrix(X))


def read_labels(path):
    with open(path) as fh:
        vals = [line.strip() for line in fh if line.strip()]
    try:
        return np.array([int(v) for v in vals], dtype=np.int64)
    except ValueError:
        raise DataFormatError(f"{path}: labels must be integers") from None


def write_labels(labels, path):
    with open(path, "w") as fh:
        fh.writelines(f"{int(x)}\n" for x in labels)


def _learn_config(args, n=None, k_init=None):
    return LearnConfig(
        k_init=args.k_init if k_init is None else k_init,
        sigma=args.sigma,
        tol=args.tol,
        eps=args.eps,
        zeta=args.zeta,
        max_iter=args.max_iter,
        r=args.r,
        sample_budget=args.sample_budget,
        seed=args.seed,
    )


def _config_echo(cfg):
    return {k: getattr(cfg, k) for k in cfg.__dataclass_fields__}


def cmd_learn(args):
    t0 = time.perf_counter()
    X = ingest_csv(args.data, has_header=args.has_header)
    t_read = time.perf_counter() - t0
    cfg = _learn_config(args)
    out = Path(args.out)
    trace_path = Path(args.trace) if args.trace else out.with_name(out.name + ".trace.jsonl")

    t0 = time.perf_counter()
    try:
        g, trace = graspel_learn(X, cfg)
        code, failure = (EXIT_OK if trace.converged else EXIT_NUMERIC), None
    except LearnError as err:
        g, trace, code, failure = err.graph, err.trace, EXIT_NUMERIC, str(err)
        log.error("%s", err)
    t_learn = time.perf_counter() - t0

    write_edge_list(g, out)
    with open(trace_path, "w") as fh:
        for rec in trace.records:
            fh.write(json.dumps(rec.as_dict()) + "\n")
    if code and failure is None:
        log.warning("no convergence within max_iter=%d", cfg.max_iter)

    metrics = {
        "n": X.n,
        "m": X.m,
        "initial_edges": trace.initial_edges,
        "edges": g.num_edges,
        "density": g.density,
        "iterations": len(trace),
        "converged": trace.converged,
        "final_eta_max": trace.eta_max[-1] if len(trace) else None,
        "components": connected_components(g)[0],
    }
    if failure:
        metrics["error"] = failure
    report = {
        "command": "learn",
        "config": _config_echo(cfg),
        "timings": {"read": t_read, "construct": t_learn},
        "outputs": {"graph": str(out), "trace": str(trace_path)},
        "metrics": metrics,
    }
    return report, code


def cmd_cluster(args):
    g = read_edge_list(args.graph)
    if not 2 <= args.k <= g.n:
        raise UsageError(f"--k must lie in [2, n={g.n}], got {args.k}")
    truth = read_labels(args.truth) if args.truth else None
    if truth is not None and len(truth) != g.n:
        raise DataFormatError(f"{args.truth}: {len(truth)} labels for {g.n} nodes")

    t0 = time.perf_counter()
    V = spectral_features(g, args.k, seed=args.seed)
    t_eig = time.perf_counter() - t0
    t0 = time.perf_counter()
    res = kmeans(V, args.k, seed=args.seed)
    t_km = time.perf_counter() - t0
    write_labels(res.labels, args.out)

    metrics = {"k": res.k, "inertia": res.inertia, "empty_cluster": res.empty_cluster}
    if truth is not None:
        metrics["acc"] = accuracy(res.labels, truth)
        metrics["nmi"] = nmi(res.labels, truth)
    report = {
        "command": "cluster",
        "config": {"graph": args.graph, "k": args.k, "seed": args.seed, "truth": args.truth},
        "timings": {"eigen": t_eig, "kmeans": t_km},
        "outputs": {"labels": args.out},
        "metrics": metrics,
    }
    return report, EXIT_OK


def cmd_sparsify(args):
    g = read_edge_list(args.graph)
    cfg = SparsifyConfig(target_density=args.target_density, r=args.r, sigma=args.sigma, seed=args.seed)
    t0 = time.perf_counter()
    try:
        s = spectral_sparsify(g, cfg)
    except ValueError as err:
        raise UsageError(str(err)) from None
    dt = time.perf_counter() - t0
    write_edge_list(s, args.out)
    report = {
        "command": "sparsify",
        "config": {"graph": args.graph, **_config_echo(cfg)},
        "timings": {"sparsify": dt},
        "outputs": {"graph": args.out},
        "metrics": {
            "n": g.n,
            "input_edges": g.num_edges,
            "output_edges": s.num_edges,
            "input_density": g.density,
            "output_density": s.density,
            "input_components": connected_components(g)[0],
            "output_components": connected_components(s)[0],
        },
    }
    return report, EXIT_OK


def cmd_embed(args):
    g = read_edge_list(args.graph)
    if not 2 <= args.r <= g.n:
        raise UsageError(f"--r must lie in [2, n={g.n}], got {args.r}")
    t0 = time.perf_counter()
    emb = embed(g, args.r, args.sigma, seed=args.seed)
    dt = time.perf_counter() - t0
    write_embedding(emb, args.out)
    report = {
        "command": "embed",
        "config": {"graph": args.graph, "r": args.r, "sigma": args.sigma, "seed": args.seed},
        "timings": {"eigen": dt},
        "outputs": {"embedding": args.out},
        "metrics": {"dims": args.r - 1, "eigenvalues": emb.eigenvalues.tolist()},
    }
    return report, EXIT_OK


def cmd_recover(args):
    k_init = args.k_init if args.k_init is not None else RECOVER_K_INIT[args.kind]
    cfg = _learn_config(args, k_init=k_init)
    t0 = time.perf_counter()
    result = recovery_experiment(
        args.kind, args.n, args.m, cfg, seed=args.seed, trials=args.trials,
        theta=args.theta, kappa=args.kappa, p=args.p, signal_sigma=args.signal_sigma,
    )
    dt = time.perf_counter() - t0
    report = {
        "command": "recover",
        "config": {
            "kind": args.kind, "n": args.n, "m": args.m, "trials": args.trials, "theta": args.theta,
            "kappa": args.kappa, "p": args.p, "signal_sigma": args.signal_sigma, "learn": _config_echo(cfg),
        },
        "timings": {"total": dt},
        "outputs": {},
        "metrics": result,
    }
    return report, EXIT_OK


def _add_learn_flags(p, k_init_default=2):
    p.add_argument("--k-init", type=int, default=k_init_default, help="neighbors in the initial kNN graph")
    p.add_argument("--sigma", type=float, default=1e3, help="prior feature standard deviation")
    p.add_argument("--tol", type=float, default=10.0, help="distortion tolerance")
    p.add_argument("--eps", type=float, default=0.05, help="Fiedler window fraction")
    p.add_argument("--zeta", type=float, default=0.001, help="edges added per iteration, as a fraction of n")
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--r", type=int, default=2, help="eigenpairs in the embedding")
    p.add_argument("--sample-budget", type=int, default=None, help="candidate pairs per iteration (default 10n)")
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(prog="graspel", description="Spectral graph learning toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn", help="learn a graph from a CSV data matrix")
    p.add_argument("data")
    p.add_argument("--out", required=True, help="edge-list output path")
    p.add_argument("--trace", help="JSON-lines trace path (default <out>.trace.jsonl)")
    p.add_argument("--has-header", action="store_true")
    _add_learn_flags(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("cluster", help="spectral clustering of a graph")
    p.add_argument("graph")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="labels output path")
    p.add_argument("--truth", help="ground-truth labels, one integer per line")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("sparsify", help="spectrally sparsify a graph")
    p.add_argument("graph")
    p.add_argument("--target-density", type=float, required=True)
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--sigma", type=float, default=1e9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sparsify)

    p = sub.add_parser("embed", help="export spectral embedding coordinates")
    p.add_argument("graph")
    p.add_argument("--r", type=int, default=4)
    p.add_argument("--sigma", type=float, default=1e3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("recover", help="synthetic graph-recovery experiment")
    p.add_argument("--kind", choices=("gaussian", "er"), default="gaussian")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--m", type=int, default=1000)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--kappa", type=float, default=0.75)
    p.add_argument("--p", type=float, default=0.1)
    p.add_argument("--signal-sigma", type=float, default=None, help="GMRF sigma for the signals (default --sigma)")
    _add_learn_flags(p, k_init_default=None)
    p.set_defaults(func=cmd_recover)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        report, code = args.func(args)
    except (DataFormatError, GraphFormatError, FileNotFoundError) as err:
        print(f"graspel: data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except ConvergenceError as err:
        print(f"graspel: numerical error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as err:
        print(f"graspel: usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    json.dump(report, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
