"""Experiment runner: grid search over (alpha, beta), repeated k-means evaluation.

Subcommands::

    scfs run   --data D.csv [--labels-col -1] --out report.json
    scfs trace --data D.csv --alpha-grid 1 --beta-grid 100 --out trace.csv
    scfs synth --out planted.csv [--n-samples 60 --informative 5 --noise 45]
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

from . import __version__
from .data import (
    PREPROCESS_MODES,
    ExperimentReport,
    GridCell,
    generate_planted,
    load_csv,
    preprocess,
    write_dataset_csv,
    write_report,
    write_trace_csv,
)
from .errors import InvalidInputError, SCFSError
from .evaluation import derive_seed, evaluate_selection
from .numerics import DEFAULT_GAMMA, DEFAULT_MAX_ITER, DEFAULT_TOL, SolverConfig
from .solver import fit, select_features

log = logging.getLogger("scfs")

DEFAULT_GRID = (1e-4, 1e-2, 1.0, 1e2, 1e4)
DEFAULT_K_LIST = (50, 100, 150, 200, 250, 300)
DEFAULT_TRIALS = 20


@dataclass
class RunSpec:
    data: str
    out: str | None = None
    labels_col: int | None = -1
    preprocess: str = "shift-nonneg"
    alpha_grid: tuple = DEFAULT_GRID
    beta_grid: tuple = DEFAULT_GRID
    gamma: float = DEFAULT_GAMMA
    clusters: int | None = None
    k_list: tuple = DEFAULT_K_LIST
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    record_timings: bool = True

    def __post_init__(self):
        if not self.alpha_grid or not self.beta_grid:
            raise InvalidInputError("alpha and beta grids must be non-empty")
        if not self.k_list:
            raise InvalidInputError("k list must be non-empty")
        if self.preprocess not in PREPROCESS_MODES:
            raise InvalidInputError(f"unknown preprocessing mode {self.preprocess!r}")


def _threads():
    try:
        n = int(os.environ.get("SCFS_THREADS", "0") or 0)
    except ValueError:
        raise InvalidInputError("SCFS_THREADS must be an integer") from None
    return max(n, 1)


def _load(spec: RunSpec, need_labels=True):
    ds = load_csv(spec.data, label_column=spec.labels_col)
    if need_labels and ds.y is None:
        raise InvalidInputError("evaluation needs ground-truth labels (--labels-col)")
    X = preprocess(ds.X, spec.preprocess)
    c = spec.clusters if spec.clusters is not None else ds.c
    if c is None:
        raise InvalidInputError("cluster count unknown: pass --clusters or a label column")
    return ds, X, c


def _base_config(spec, c, alpha, beta, seed):
    return SolverConfig(
        alpha=alpha, beta=beta, c=c, gamma=spec.gamma, tol=spec.tol,
        max_iter=spec.max_iter, seed=seed,
    )


def _best_cells(cells, feature_counts):
    best = []
    for k in feature_counts:
        def key(cell):
            r = cell.evaluations[k]["report"]
            return (-r.acc_mean, -r.nmi_mean, cell.alpha, cell.beta)
        top = min(cells, key=key)
        r = top.evaluations[k]["report"]
        best.append({
            "k": int(k), "alpha": top.alpha, "beta": top.beta,
            "alpha_index": top.alpha_index, "beta_index": top.beta_index,
            "acc_mean": r.acc_mean, "acc_std": r.acc_std,
            "nmi_mean": r.nmi_mean, "nmi_std": r.nmi_std,
            "features": top.evaluations[k]["features"],
        })
    return best


def _run_cell(X, y, spec, c, ai, bi, alpha, beta):
    cfg = _base_config(spec, c, alpha, beta, derive_seed(spec.seed, ai, bi))
    t0 = time.perf_counter()
    result = fit(X, cfg)
    fit_seconds = time.perf_counter() - t0
    evaluations = {}
    for k in spec.k_list:
        feats = select_features(result, k)
        evaluations[int(k)] = {
            "features": feats,
            "report": evaluate_selection(X, feats, y, trials=spec.trials, seed=cfg.seed),
        }
    return GridCell(
        alpha=float(alpha), beta=float(beta), alpha_index=ai, beta_index=bi,
        config=cfg, iterations=result.iterations, converged=result.converged,
        objective_trace=[float(v) for v in result.objective_trace],
        penalized_trace=[float(v) for v in result.penalized_trace],
        ranking=[int(i) for i in result.ranking], evaluations=evaluations,
        fit_seconds=fit_seconds if spec.record_timings else None,
    )


def run(spec: RunSpec) -> ExperimentReport:
    """Full grid protocol; writes ``spec.out`` when set (also after a failure)."""
    t_start = time.perf_counter()
    ds, X, c = _load(spec)
    bad = [k for k in spec.k_list if k > ds.p]
    if bad:
        raise InvalidInputError(f"feature counts {bad} exceed p={ds.p}")
    settings = asdict(spec)
    for key in ("record_timings", "out"):
        settings.pop(key)
    settings = {k: list(v) if isinstance(v, tuple) else v for k, v in settings.items()}
    settings["clusters"] = c
    report = ExperimentReport(
        dataset={"name": ds.name, "n": ds.n, "p": ds.p, "c": ds.c, "preprocess": spec.preprocess},
        settings=settings,
        feature_counts=[int(k) for k in spec.k_list],
    )
    jobs = [
        (ai, bi, a, b)
        for ai, a in enumerate(spec.alpha_grid)
        for bi, b in enumerate(spec.beta_grid)
    ]
    try:
        with ThreadPoolExecutor(max_workers=_threads()) as pool:
            futures = [pool.submit(_run_cell, X, ds.y, spec, c, *job) for job in jobs]
            for job, fut in zip(jobs, futures):
                try:
                    report.cells.append(fut.result())
                except SCFSError as exc:
                    for f in futures:
                        f.cancel()
                    raise type(exc)(f"cell alpha={job[2]!r} beta={job[3]!r}: {exc}") from exc
                log.info("cell alpha=%g beta=%g done", job[2], job[3])
        report.best = _best_cells(report.cells, spec.k_list)
    except Exception as exc:
        report.error = str(exc)
        raise
    finally:
        if spec.record_timings:
            report.timings = {"total_seconds": time.perf_counter() - t_start}
        if spec.out:
            write_report(report, spec.out)
    return report


def convergence_trace(spec: RunSpec, alpha, beta, path=None):
    """Fit once at ``(alpha, beta)`` and write the objective per iteration as CSV."""
    ds, X, c = _load(spec, need_labels=False)
    result = fit(X, _base_config(spec, c, alpha, beta, spec.seed))
    path = path or spec.out
    if path:
        write_trace_csv(result.objective_trace, path)
    return result


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(prog="scfs", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data", required=True, help="CSV dataset")
    common.add_argument("--labels-col", type=int, default=-1,
                        help="index of the label column (default: last); -1 counts from the end")
    common.add_argument("--no-labels", action="store_true", help="the file has no label column")
    common.add_argument("--preprocess", choices=PREPROCESS_MODES, default="shift-nonneg")
    common.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    common.add_argument("--clusters", type=int, default=None,
                        help="cluster count for the solver (default: number of label classes)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL)
    common.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    common.add_argument("--out", required=True)

    p_run = sub.add_parser("run", parents=[common], help="grid search and repeated evaluation")
    p_run.add_argument("--alpha-grid", type=_floats, default=DEFAULT_GRID)
    p_run.add_argument("--beta-grid", type=_floats, default=DEFAULT_GRID)
    p_run.add_argument("--k-list", type=_ints, default=DEFAULT_K_LIST)
    p_run.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p_run.add_argument("--no-timings", action="store_true",
                       help="omit wall-clock timings so reruns give identical files")

    p_trace = sub.add_parser("trace", parents=[common], help="convergence trace at one (alpha, beta)")
    p_trace.add_argument("--alpha-grid", "--alpha", dest="alpha_grid", type=_floats, required=True)
    p_trace.add_argument("--beta-grid", "--beta", dest="beta_grid", type=_floats, required=True)

    p_synth = sub.add_parser("synth", help="write a planted-feature dataset")
    p_synth.add_argument("--n-samples", type=int, default=60)
    p_synth.add_argument("--informative", type=int, default=5)
    p_synth.add_argument("--noise", type=int, default=45)
    p_synth.add_argument("--clusters", type=int, default=3)
    p_synth.add_argument("--separation", type=float, default=8.0)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", required=True)
    return parser


def _spec_from_args(args):
    return RunSpec(
        data=args.data,
        out=args.out,
        labels_col=None if args.no_labels else args.labels_col,
        preprocess=args.preprocess,
        alpha_grid=args.alpha_grid,
        beta_grid=args.beta_grid,
        gamma=args.gamma,
        clusters=args.clusters,
        k_list=getattr(args, "k_list", DEFAULT_K_LIST),
        trials=getattr(args, "trials", DEFAULT_TRIALS),
        seed=args.seed,
        tol=args.tol,
        max_iter=args.max_iter,
        record_timings=not getattr(args, "no_timings", False),
    )


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "synth":
            ds = generate_planted(args.n_samples, args.informative, args.noise,
                                  args.clusters, args.separation, args.seed)
            write_dataset_csv(ds, args.out)
            meta = Path(args.out).with_suffix(".meta.json")
            meta.write_text(json.dumps(ds.meta, indent=1) + "\n")
            print(f"wrote {args.out} (n={ds.n}, p={ds.p}, c={ds.c}); informative columns in {meta}")
            return 0
        spec = _spec_from_args(args)
        if args.command == "trace":
            if len(spec.alpha_grid) != 1 or len(spec.beta_grid) != 1:
                raise InvalidInputError("trace needs exactly one alpha and one beta")
            result = convergence_trace(spec, spec.alpha_grid[0], spec.beta_grid[0])
            print(f"wrote {spec.out}: {result.iterations} iterations, converged={result.converged}")
            return 0
        report = run(spec)
        print(f"wrote {spec.out}: {len(report.cells)} cells")
        for b in report.best:
            print(f"k={b['k']:>4}  alpha={b['alpha']:g}  beta={b['beta']:g}  "
                  f"acc={100 * b['acc_mean']:.2f}+-{100 * b['acc_std']:.2f}  "
                  f"nmi={100 * b['nmi_mean']:.2f}+-{100 * b['nmi_std']:.2f}")
        return 0
    except (SCFSError, OSError) as exc:
        print(f"scfs: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
