"""Command-line front end: ``wsswr {train,predict,cv,grid,bench}``.

Exit status: 0 success, 1 usage error, 2 data error, 3 training error.
Diagnostics go to standard error; results go to files or standard output.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .bench import FINAL, PARAM_SELECTION, FOUR_SETTINGS, compute_ratios, run_matrix, write_bench_outputs
from .data import DataError, Dataset, load_libsvm, load_named_dataset, scale_to_unit_interval
from .kernel import KERNELS, KernelSpec, parse_size
from .model import load_model, write_diagnostics
from .selection import SELECTORS
from .solver import SolverParams, TrainingError, train
from .tune import TuningError, default_grid, cross_validate_detail, grid_search, reduced_grid, write_grid_csv

log = logging.getLogger("wsswr")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_TRAIN = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _common(p: argparse.ArgumentParser) -> None:
    # -h is the shrinking flag, as in the usual SVM tools, so help is --help only.
    p.add_argument("--help", action="help", help="show this message and exit")
    p.add_argument("-k", "--kernel", choices=KERNELS, default="rbf", help="kernel kind (default: rbf)")
    p.add_argument("-g", "--gamma", type=float, default=None,
                   help="kernel gamma (default: 1/number of features)")
    p.add_argument("-d", "--degree", type=float, default=None,
                   help="polynomial degree (default 3) or sigmoid offset (default 0)")
    p.add_argument("--scale", action="store_true", help="scale every feature to [-1, 1] before use")
    p.add_argument("--quiet", action="store_true", help="only warnings on standard error")
    p.add_argument("-s", "--selector", choices=sorted(SELECTORS), default="wss3",
                   help="working-set selection (default: wss3)")
    p.add_argument("-c", "--cost", type=float, default=1.0, help="C (default: 1)")
    p.add_argument("-e", "--epsilon", type=float, default=1e-3, help="stopping tolerance (default: 1e-3)")
    p.add_argument("--tau", type=float, default=1e-12, help="curvature floor (default: 1e-12)")
    p.add_argument("-m", "--cache", default="100M", help="kernel cache budget, e.g. 100M or 100K (default: 100M)")
    p.add_argument("-h", "--shrinking", type=int, choices=(0, 1), default=1,
                   help="shrinking heuristic on/off (default: 1)")
    p.add_argument("--seed", type=int, default=0, help="fold shuffling seed (default: 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wsswr", description="SMO-based SVM training with WSS-1, WSS-3 and WSS-WR.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", add_help=False, help="train a model and write it in LIBSVM layout")
    _common(p)
    p.add_argument("--diagnostics", metavar="CSV", help="write the objective trace (and selection counts)")
    p.add_argument("data")
    p.add_argument("model")

    p = sub.add_parser("predict", add_help=False, help="predict labels with a saved model")
    p.add_argument("--help", action="help", help="show this message and exit")
    p.add_argument("--scale", action="store_true", help="scale every feature to [-1, 1] before use")
    p.add_argument("--quiet", action="store_true", help="only warnings on standard error")
    p.add_argument("data")
    p.add_argument("model")
    p.add_argument("output", nargs="?", help="file for one predicted label per line (default: stdout)")

    p = sub.add_parser("cv", add_help=False, help="k-fold cross-validation accuracy")
    _common(p)
    p.add_argument("-v", "--folds", type=int, default=5, help="number of folds (default: 5)")
    p.add_argument("data")

    p = sub.add_parser("grid", add_help=False, help="cross-validated grid search over log2 C and log2 gamma")
    _common(p)
    p.add_argument("-v", "--folds", type=int, default=5, help="number of folds (default: 5)")
    p.add_argument("--reduced", action="store_true", help="16-point sub-grid instead of the full grid")
    p.add_argument("-j", "--jobs", type=int, default=1, help="parallel grid points (default: 1)")
    p.add_argument("data")
    p.add_argument("output", nargs="?", help="grid CSV path (default: stdout)")

    p = sub.add_parser("bench", add_help=False, help="WSS-WR vs WSS-3 matrix over cache and shrinking settings")
    _common(p)
    p.add_argument("--phase", choices=(FINAL, PARAM_SELECTION), default=FINAL)
    p.add_argument("--repeats", type=int, default=4, help="timed repeats per final-training cell (default: 4)")
    p.add_argument("--reduced", action="store_true", help="16-point grid for parameter selection")
    p.add_argument("-v", "--folds", type=int, default=5, help="folds for parameter selection (default: 5)")
    p.add_argument("--subsample", type=int, default=None, help="use at most this many samples per dataset")
    p.add_argument("-j", "--jobs", type=int, default=1,
                   help="parallel cells; times are not recorded when > 1 (default: 1)")
    p.add_argument("--out", default="bench_out", help="output directory (default: bench_out)")
    p.add_argument("datasets", help="file listing dataset paths or names, one per line")
    return parser


def _load(path_or_name: str, scale: bool) -> Dataset:
    p = Path(path_or_name)
    d = load_libsvm(p) if p.exists() else load_named_dataset(path_or_name)
    return scale_to_unit_interval(d) if scale else d


def _spec(args, d: Dataset) -> KernelSpec:
    gamma = args.gamma if args.gamma is not None else 1.0 / max(d.n_features, 1)
    degree = args.degree
    if args.kernel == "polynomial" and degree is None:
        degree = 3.0
    if args.kernel == "sigmoid" and degree is None:
        degree = 0.0
    return KernelSpec(args.kernel, gamma, degree)


def _params(args) -> SolverParams:
    return SolverParams(C=args.cost, epsilon=args.epsilon, tau=args.tau,
                        cache_bytes=parse_size(args.cache), shrinking=bool(args.shrinking))


def _cmd_train(args) -> None:
    d = _load(args.data, args.scale)
    spec = _spec(args, d)
    m = train(d, spec, args.selector, _params(args))
    m.save(args.model)
    diag = m.diagnostics
    if args.diagnostics:
        write_diagnostics(diag, args.diagnostics)
    log.info("status=%s violation=%.3g support_vectors=%d", diag.status, diag.violation, m.n_support)
    print(f"iterations={diag.iterations} objective={diag.objective:.10g} seconds={diag.seconds:.6f}")


def _cmd_predict(args) -> None:
    d = _load(args.data, args.scale)
    m = load_model(args.model)
    pred = m.predict(d)
    text = "".join(f"{int(p):d}\n" for p in pred)
    metrics = m.evaluate(d)
    if args.output:
        Path(args.output).write_text(text)
        print(f"accuracy={metrics.accuracy:.4f} mse={metrics.mse:.6g}")
    else:
        sys.stdout.write(text)
        log.info("accuracy=%.4f mse=%.6g", metrics.accuracy, metrics.mse)


def _cmd_cv(args) -> None:
    d = _load(args.data, args.scale)
    res = cross_validate_detail(d, _spec(args, d), args.selector, _params(args), k=args.folds, seed=args.seed)
    print(f"accuracy={res.accuracy:.4f} iterations={res.iterations} seconds={res.seconds:.6f}")


def _cmd_grid(args) -> None:
    d = _load(args.data, args.scale)
    grid = default_grid(args.kernel, degree=_spec(args, d).degree)
    if args.reduced:
        grid = reduced_grid(grid)
    res = grid_search(d, grid, args.selector, k=args.folds, seed=args.seed, params=_params(args), n_jobs=args.jobs)
    write_grid_csv(res.rows, args.output or sys.stdout)
    b = res.best
    line = (f"best log2C={b.log2_c:g} log2gamma={'' if b.log2_gamma is None else f'{b.log2_gamma:g}'} "
            f"accuracy={b.accuracy:.4f} iterations={res.total_iterations} seconds={res.total_seconds:.6f}")
    if args.output:
        print(line)
    else:
        log.info(line)


def _cmd_bench(args) -> None:
    names = [ln.strip() for ln in Path(args.datasets).read_text().splitlines()
             if ln.strip() and not ln.lstrip().startswith("#")]
    if not names:
        raise DataError(f"{args.datasets}: no datasets listed")
    datasets = {}
    for name in names:
        d = _load(name, args.scale)
        if args.subsample and len(d) > args.subsample:
            rng = np.random.default_rng(args.seed)
            d = d.subset(np.sort(rng.choice(len(d), args.subsample, replace=False)))
        datasets[Path(name).stem if Path(name).exists() else name] = d
    first = next(iter(datasets.values()))
    spec = _spec(args, first)
    grids = None
    if args.phase == PARAM_SELECTION:
        g = default_grid(args.kernel, degree=spec.degree)
        grids = {args.kernel: reduced_grid(g) if args.reduced else g}
    records = []
    for name, d in datasets.items():
        spec = _spec(args, d)
        records += run_matrix({name: d}, [(spec, args.cost)], settings=FOUR_SETTINGS, epsilon=args.epsilon,
                              phase=args.phase, repeats=args.repeats, grids=grids, k=args.folds,
                              seed=args.seed, n_jobs=args.jobs)
    out = write_bench_outputs(records, args.out)
    for r in records:
        if r.error:
            log.warning("%s: %s", r.run_id, r.error)
    for row in compute_ratios([r for r in records if r.selector == "wsswr"],
                              [r for r in records if r.selector == "wss3"]):
        print(f"{row.dataset} {row.kernel} {row.phase} " +
              " ".join(f"ratio{n}={x:.4g}" for n, x in enumerate(row.ratios, start=1)))
    log.info("wrote %s", out)


COMMANDS = {"train": _cmd_train, "predict": _cmd_predict, "cv": _cmd_cv, "grid": _cmd_grid, "bench": _cmd_bench}


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.WARNING if getattr(args, "quiet", False) else logging.INFO,
                        format="%(name)s: %(message)s", stream=sys.stderr, force=True)
    try:
        COMMANDS[args.command](args)
    except (DataError, OSError) as exc:
        log.error("data error: %s", exc)
        return EXIT_DATA
    except (TrainingError, TuningError) as exc:
        log.error("training error: %s", exc)
        return EXIT_TRAIN
    except ValueError as exc:
        # invalid parameter values (C <= 0, gamma <= 0, bad cache size, ...)
        log.error("usage error: %s", exc)
        return EXIT_USAGE
    return EXIT_OK


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
