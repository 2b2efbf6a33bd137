"""``gridrisk`` command line: synth, assess, baseline, eval."""
import argparse
import logging
import sys
from pathlib import Path

from . import pipeline
from .bigan import TrainingDivergedError
from .config import ConfigError, RunConfig
from .evaluate import UndefinedMetricError, compute_metrics, match_alarms, write_metrics_csv
from .ingest import EmptyInputError, ParseError, load_matrix_csv, write_matrix_csv
from .synth import generate, read_truth_csv, write_truth_csv

log = logging.getLogger("gridrisk")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_BAD_INPUT = 2
EXIT_NOT_CONVERGED = 3

_INPUT_ERRORS = (ConfigError, ParseError, EmptyInputError, UndefinedMetricError, ValueError, OSError)


class UsageError(ValueError):
    pass


def _load_config(path):
    return RunConfig.load(path) if path else RunConfig()


def cmd_synth(config, out_dir, seed=None):
    cfg = _load_config(config)
    seed = cfg.resolved_seed(seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ds = generate(cfg.P, cfg.T, cfg.baseline, cfg.noise_sigma, cfg.anomalies, cfg.coupling, seed,
                  cfg.tick_seconds)
    write_matrix_csv(ds.matrix, out / "data.csv")
    write_truth_csv(ds.anomalies, out / "truth.csv")
    (out / "manifest.txt").write_text(cfg.with_seed(seed).to_text(), encoding="utf-8")
    log.info("wrote %d x %d matrix and %d anomalies to %s", cfg.P, cfg.T, len(ds.anomalies), out)
    return EXIT_OK


def _finish(result, out, windows):
    pipeline.write_meta(result, out, windows)
    if not result.all_converged:
        bad = sum(not s.converged for s in result.segments)
        log.warning("%d of %d segments did not converge; rows are flagged", bad, len(result.segments))
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_assess(config, data, out, seed=None, workers=1):
    cfg = _load_config(config)
    seed = cfg.resolved_seed(seed)
    matrix = load_matrix_csv(data, cfg.tick_seconds)
    result = pipeline.run_bigan(matrix, cfg, seed, workers)
    pipeline.write_assessment_csv(result, out)
    return _finish(result, out, len(result.segments))


def cmd_baseline(method, config, data, out, seed=None, workers=1):
    cfg = _load_config(config)
    seed = cfg.resolved_seed(seed)
    matrix = load_matrix_csv(data, cfg.tick_seconds)
    if method == "tha":
        result = pipeline.run_tha(matrix, cfg)
        pipeline.write_tha_csv(result, out)
        pipeline.write_meta(result, out, len(result.end_ticks))
        return EXIT_OK
    if method == "pca":
        result = pipeline.run_pca(matrix, cfg)
    elif method == "dae":
        result = pipeline.run_dae(matrix, cfg, seed, workers)
    else:
        raise UsageError(f"unknown baseline {method!r}")
    pipeline.write_assessment_csv(result, out)
    return _finish(result, out, len(result.segments))


def _parse_assessment(spec):
    method, sep, path = spec.partition("=")
    if not sep or not method.strip() or not path.strip():
        raise UsageError(f"--assessment expects METHOD=PATH, got {spec!r}")
    return method.strip(), path.strip()


def cmd_eval(assessments, truths, out, config=None):
    """Score each method over paired (assessment, truth) files.

    The k-th file listed for a method is paired with the k-th ``--truth``;
    counts and timings are pooled per method.
    """
    if not truths:
        raise UsageError("eval needs at least one --truth file")
    cfg = _load_config(config)
    by_method = {}
    for spec in assessments:
        method, path = _parse_assessment(spec)
        by_method.setdefault(method, []).append(path)
    if not by_method:
        raise UsageError("eval needs at least one --assessment METHOD=PATH")
    truth_sets = [read_truth_csv(t) for t in truths]
    rows = {}
    for method, paths in by_method.items():
        if len(paths) != len(truth_sets):
            raise UsageError(
                f"method {method!r} has {len(paths)} assessment files but {len(truth_sets)} truth files"
            )
        n_cr = n_gt = n_al = windows = 0
        elapsed = 0.0
        for path, truth in zip(paths, truth_sets):
            alarms, nrows = pipeline.read_alarms(path)
            meta = pipeline.read_meta(path)
            N_w, N_s = int(meta.get("N_w", cfg.N_w)), int(meta.get("N_s", cfg.N_s))
            n_cr += match_alarms(alarms, truth, N_w, N_s, cfg.slack_windows)
            n_gt += len(truth)
            n_al += len(alarms)
            elapsed += float(meta.get("elapsed_seconds", 0.0))
            windows += int(meta.get("windows", nrows))
        rows[method] = compute_metrics(n_cr, n_gt, n_al, elapsed, windows)
    write_metrics_csv(rows, out)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="gridrisk", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True):
        p.add_argument("--config", help="key = value run configuration (defaults apply when omitted)")
        if data:
            p.add_argument("--data", required=True, help="wide CSV: tick,<channel>,...")
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int, help="overrides the config seed and $GRIDRISK_SEED")

    p = sub.add_parser("synth", help="generate a labeled synthetic dataset")
    common(p, data=False)

    p = sub.add_parser("assess", help="BiGAN risk assessment of every segment")
    common(p)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("baseline", help="run a comparison detector")
    p.add_argument("method", choices=("tha", "pca", "dae"))
    common(p)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("eval", help="TDR / FAR / ACT against ground truth")
    p.add_argument("--assessment", action="append", default=[], metavar="METHOD=PATH")
    p.add_argument("--truth", action="append", default=[])
    p.add_argument("--config", help="supplies N_w, N_s and slack when a result has no sidecar")
    p.add_argument("--out", required=True)
    return parser


def _dispatch(args):
    workers = getattr(args, "workers", 1)
    if workers is not None and workers < 1:
        raise UsageError("--workers must be at least 1")
    if args.command == "synth":
        return cmd_synth(args.config, args.out, args.seed)
    if args.command == "assess":
        return cmd_assess(args.config, args.data, args.out, args.seed, workers)
    if args.command == "baseline":
        return cmd_baseline(args.method, args.config, args.data, args.out, args.seed, workers)
    return cmd_eval(args.assessment, args.truth, args.out, args.config)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_BAD_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except TrainingDivergedError as exc:
        print(f"gridrisk: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except _INPUT_ERRORS as exc:
        print(f"gridrisk: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
