"""Command-line interface.

Subcommands: ``sample``, ``fit``, ``bench-convergence``, ``bench-error``,
``classify``, ``cluster``, ``check-model``.  Each reads an experiment
config file, honors ``--seed``, writes its outputs under ``--out`` and
exits 0 on success.  Exit codes: 2 malformed config or arguments, 3
numeric failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import (
    DivergenceError,
    ModelError,
    NumericInputError,
    ParameterError,
    RangeError,
    SingularityError,
    TrainingError,
)
from .estimation import fit as run_fit
from .experiments import (
    FAST_REPETITIONS,
    crb_reference,
    random_center,
    run_convergence_study,
    run_error_study,
    summarize_error_study,
)
from .learning import align_labels, ew_kmeans, ewda_predict, ewda_train
from .models import check_assumptions, metric_coefficients, sample as draw_samples
from . import storage

_EXIT_CONFIG = 2
_EXIT_NUMERIC = 3
_EXIT_IO = 4


def _load_config(args):
    config = storage.load_config(args.config)
    if getattr(args, "seed", None) is not None:
        config = replace(config, seed=args.seed)
    if getattr(args, "threads", None) is not None:
        config = replace(config, threads=args.threads)
    if getattr(args, "algorithm", None) is not None:
        config = replace(
            config,
            fit_options=replace(
                config.fit_options, algorithm=storage.algorithm_from_alias(args.algorithm)
            ),
        )
    if getattr(args, "fast", False):
        config = replace(config, repetitions=min(config.repetitions, FAST_REPETITIONS))
    return config


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_sample(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    rng = np.random.default_rng(config.seed)
    model = config.model()
    if config.p >= 2:
        center = random_center(config.p, config.condition_number, rng)
    else:
        center = np.eye(1)
    data = draw_samples(model, center, config.K, rng)
    storage.save_samples(out / "samples.csv", data, config.n)
    storage.save_matrix(out / "center.csv", center)
    print(f"wrote {config.K} samples (p={config.p}, n={config.n}) to {out / 'samples.csv'}")
    return 0


def _cmd_fit(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    data, n, _ = storage.load_samples(args.data)
    config = replace(config, p=data.shape[-1], n=n, K=data.shape[0])
    model = config.model()
    report = run_fit(model, data, config.fit_options)
    storage.save_matrix(out / "estimate.csv", report.estimate)
    storage.write_trace_csv(out / "fit_trace.csv", report)
    payload = {
        "config": storage.config_echo(config),
        "converged": report.converged,
        "iterations": report.iterations,
        "termination_reason": report.termination_reason,
        "final_cost": float(report.trace_cost[-1]) if report.iterations else None,
    }
    (out / "fit_report.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(
        f"fit: {config.fit_options.algorithm} finished in {report.iterations} iterations "
        f"(converged={report.converged})"
    )
    return 0


def _cmd_bench_convergence(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    records = run_convergence_study(config)
    storage.write_records_csv(out / "convergence_records.csv", records)
    for record in records:
        if record.trace_error is None:
            continue
        path = out / f"trace_rep{record.repetition:03d}_{record.estimator}.csv"
        with open(path, "w", newline="") as handle:
            handle.write("iteration,error,seconds\n")
            for i, (err, sec) in enumerate(zip(record.trace_error, record.trace_seconds)):
                handle.write(f"{i + 1},{err:.17g},{sec:.17g}\n")
    summary = {
        "estimators": [
            {
                "name": name,
                "K": config.K,
                "mean_err": float(np.nanmean([r.error for r in records if r.estimator == name])),
                "std_err": float(np.nanstd([r.error for r in records if r.estimator == name])),
                "mean_iters": float(np.mean([r.iterations for r in records if r.estimator == name])),
                "mean_seconds": float(np.nanmean([r.seconds for r in records if r.estimator == name])),
            }
            for name in sorted({r.estimator for r in records})
        ],
        "crb_reference": {
            "formula": "p(p+1)/(2K)",
            "kind": "first-order reference",
            "values": {str(config.K): crb_reference(config.p, config.K)},
        },
    }
    storage.write_summary_json(out / "convergence_summary.json", config, summary)
    print(f"bench-convergence: {config.repetitions} repetitions written to {out}")
    return 0


def _cmd_bench_error(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    records = run_error_study(config)
    storage.write_records_csv(out / "error_records.csv", records)
    storage.write_summary_json(
        out / "error_summary.json", config, summarize_error_study(config, records)
    )
    print(f"bench-error: K grid {list(config.K_grid)} x {config.repetitions} repetitions -> {out}")
    return 0


def _cmd_classify(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    train, n_train, train_labels = storage.load_samples(args.train)
    if train_labels is None:
        raise ParameterError(f"{args.train}: training file must carry a labels line")
    test, _, test_labels = storage.load_samples(args.test)
    config = replace(config, p=train.shape[-1], n=n_train, K=train.shape[0])
    model = config.model()
    ewda = ewda_train(model, train, train_labels, config.fit_options)
    predictions = ewda_predict(ewda, test)
    np.savetxt(out / "predictions.csv", predictions, fmt="%d")
    payload = {"config": storage.config_echo(config), "n_test": int(test.shape[0])}
    if test_labels is not None:
        payload["accuracy"] = float(np.mean(predictions == test_labels))
    (out / "classify_report.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    if "accuracy" in payload:
        print(f"classify: accuracy {payload['accuracy']:.4f} on {test.shape[0]} samples")
    else:
        print(f"classify: wrote predictions for {test.shape[0]} samples")
    return 0


def _cmd_cluster(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    settings = storage.cluster_settings(args.config)
    if args.clusters is not None:
        settings["n_clusters"] = args.clusters
    data, n, truth = storage.load_samples(args.data)
    config = replace(config, p=data.shape[-1], n=n, K=data.shape[0])
    model = config.model()
    rng = np.random.default_rng(config.seed)
    result = ew_kmeans(
        model,
        data,
        settings["n_clusters"],
        n_init=settings["n_init"],
        label_change_tol=settings["label_change_tol"],
        max_sweeps=settings["max_sweeps"],
        fit_options=config.fit_options,
        rng=rng,
    )
    np.savetxt(out / "labels.csv", result.labels, fmt="%d")
    payload = {
        "config": storage.config_echo(config),
        "inertia": result.inertia,
        "chosen_init": result.chosen_init,
        "sweeps_per_init": result.iterations_per_init.tolist(),
    }
    if truth is not None:
        _, accuracy, miou = align_labels(result.labels, truth, settings["n_clusters"])
        payload["aligned_accuracy"] = accuracy
        payload["miou"] = miou
    (out / "cluster_report.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"cluster: {settings['n_clusters']} clusters, inertia {result.inertia:.6g}")
    return 0


def _cmd_check_model(args) -> int:
    config = _load_config(args)
    model = config.model()
    grid = np.geomspace(1e-6, 100.0 * model.n * model.p, 256)
    report = check_assumptions(model.generator, model.n, model.p, grid)
    coeff = metric_coefficients(model)
    sup_verdict = (
        "inconclusive" if report.psi_sup_exceeds_np is None else str(report.psi_sup_exceeds_np)
    )
    print(f"generator: {model.generator.name} (n={model.n}, p={model.p})")
    print(f"  u nonnegative:        {report.u_nonnegative}")
    print(f"  u non-increasing:     {report.u_nonincreasing}")
    print(f"  psi non-decreasing:   {report.psi_nondecreasing}")
    print(f"  sup psi > n*p:        {sup_verdict} (sup={report.psi_sup}, n*p={report.required_sup})")
    print(f"  log-generator convex: {report.log_generator_convex}")
    print(f"  metric: alpha={coeff.alpha:.6g}, beta={coeff.beta:.6g}")
    print(f"  overall: {'pass' if report.passed else 'FAIL'}")
    return 0 if report.passed else _EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ewishart",
        description="Elliptical Wishart estimation, classification and clustering tools",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        if out:
            p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("sample", help="draw and save a synthetic sample set")
    common(p)
    p.set_defaults(handler=_cmd_sample)

    p = sub.add_parser("fit", help="estimate the center of a saved sample set")
    common(p)
    p.add_argument("--data", required=True, help="sample-set CSV")
    p.add_argument("--algorithm", choices=["fp", "rsd", "rcg"], default=None)
    p.set_defaults(handler=_cmd_fit)

    p = sub.add_parser("bench-convergence", help="fixed-point vs Riemannian CG study")
    common(p)
    p.add_argument("--fast", action="store_true", help="cap repetitions at 20")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(handler=_cmd_bench_convergence)

    p = sub.add_parser("bench-error", help="estimation error vs number of matrices")
    common(p)
    p.add_argument("--fast", action="store_true", help="cap repetitions at 20")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(handler=_cmd_bench_error)

    p = sub.add_parser("classify", help="train and evaluate the EWDA classifier")
    common(p)
    p.add_argument("--train", required=True, help="labeled sample-set CSV")
    p.add_argument("--test", required=True, help="sample-set CSV (labels optional)")
    p.set_defaults(handler=_cmd_classify)

    p = sub.add_parser("cluster", help="Elliptical Wishart K-means clustering")
    common(p)
    p.add_argument("--data", required=True, help="sample-set CSV")
    p.add_argument("--clusters", type=int, default=None, help="override cluster count")
    p.set_defaults(handler=_cmd_cluster)

    p = sub.add_parser("check-model", help="assumption diagnostics for the configured model")
    common(p, out=False)
    p.set_defaults(handler=_cmd_check_model)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return _EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        return args.handler(args)
    except (ParameterError, ModelError, TrainingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except (
        DivergenceError,
        SingularityError,
        NumericInputError,
        RangeError,
        np.linalg.LinAlgError,
        FloatingPointError,
    ) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return _EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return _EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
