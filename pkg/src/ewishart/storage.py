"""File formats: sample sets, matrices, configs, traces and summaries.

Sample-set CSV layout: a header line ``p=<int>,n=<int>,K=<int>``, then K
blocks of p comma-separated rows, and optionally a trailing
``labels=<comma list>`` line.  Matrices use a one-line ``p=<int>`` header
followed by p rows.  Configs are flat ``key = value`` text under section
headers (INI style); the parsed config is echoed into every output file
so a run can be reproduced from its artifacts alone.
"""

from __future__ import annotations

import configparser
import csv
import json
from dataclasses import asdict
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from .errors import ParameterError
from .estimation import FitOptions, FitReport
from .experiments import DEFAULT_K_GRID, ExperimentConfig, RunRecord

_FLOAT_FORMAT = "%.17g"


def save_samples(path, samples: NDArray, n: int, labels: Optional[NDArray] = None) -> None:
    """Write a sample set (and optional labels) to CSV."""
    samples = np.asarray(samples, dtype=float)
    k, p, _ = samples.shape
    lines = [f"p={p},n={int(n)},K={k}"]
    for mat in samples:
        for row in mat:
            lines.append(",".join(_FLOAT_FORMAT % v for v in row))
    if labels is not None:
        labels = np.asarray(labels, dtype=int)
        if labels.shape != (k,):
            raise ParameterError("labels must match the number of samples")
        lines.append("labels=" + ",".join(str(v) for v in labels))
    Path(path).write_text("\n".join(lines) + "\n")


def load_samples(path) -> Tuple[NDArray, int, Optional[NDArray]]:
    """Read a sample set written by :func:`save_samples`.

    Returns ``(samples, n, labels)`` with ``labels`` None when absent.
    """
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("p="):
        raise ParameterError(f"{path}: missing 'p=...,n=...,K=...' header")
    try:
        header = dict(item.split("=") for item in lines[0].split(","))
        p, n, k = int(header["p"]), int(header["n"]), int(header["K"])
    except (ValueError, KeyError) as exc:
        raise ParameterError(f"{path}: malformed header {lines[0]!r}") from exc
    body = lines[1:]
    labels = None
    if body and body[-1].startswith("labels="):
        labels = np.asarray([int(v) for v in body[-1][len("labels="):].split(",")], dtype=int)
        body = body[:-1]
    if len(body) != k * p:
        raise ParameterError(f"{path}: expected {k * p} matrix rows, found {len(body)}")
    rows = np.asarray([[float(v) for v in ln.split(",")] for ln in body])
    if rows.shape[1] != p:
        raise ParameterError(f"{path}: rows have {rows.shape[1]} columns, expected {p}")
    if labels is not None and labels.shape != (k,):
        raise ParameterError(f"{path}: labels length {labels.shape[0]} != K={k}")
    return rows.reshape(k, p, p), n, labels


def save_matrix(path, matrix: NDArray) -> None:
    """Write one matrix as CSV with a ``p=<int>`` header (row-major)."""
    matrix = np.asarray(matrix, dtype=float)
    lines = [f"p={matrix.shape[0]}"]
    lines += [",".join(_FLOAT_FORMAT % v for v in row) for row in matrix]
    Path(path).write_text("\n".join(lines) + "\n")


def load_matrix(path) -> NDArray:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("p="):
        raise ParameterError(f"{path}: missing 'p=<int>' header")
    p = int(lines[0][2:])
    if len(lines) != p + 1:
        raise ParameterError(f"{path}: expected {p} rows, found {len(lines) - 1}")
    return np.asarray([[float(v) for v in ln.split(",")] for ln in lines[1:]])


_ALGORITHM_ALIASES = {
    "fp": "fixed_point",
    "rsd": "riemann_sd",
    "rcg": "riemann_cg",
    "fixed_point": "fixed_point",
    "riemann_sd": "riemann_sd",
    "riemann_cg": "riemann_cg",
}


def algorithm_from_alias(name: str) -> str:
    try:
        return _ALGORITHM_ALIASES[name.strip().lower()]
    except KeyError as exc:
        raise ParameterError(f"unknown algorithm {name!r} (use fp, rsd or rcg)") from exc


def load_config(path) -> ExperimentConfig:
    """Parse an experiment config file.

    Recognized keys: ``[problem] p, n, K, nu`` (omit ``nu`` for the
    Wishart model); ``[fit] algorithm, max_iterations, tolerance, init``;
    ``[study] repetitions, seed, condition_number, K_grid, threads``.
    Unknown sections or keys are rejected.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        read = parser.read(path)
    except configparser.Error as exc:
        raise ParameterError(f"{path}: {exc}") from exc
    if not read:
        raise ParameterError(f"config file not found: {path}")

    known = {
        "problem": {"p", "n", "k", "nu"},
        "fit": {"algorithm", "max_iterations", "tolerance", "init"},
        "study": {"repetitions", "seed", "condition_number", "k_grid", "threads"},
        "cluster": {"clusters", "inits", "label_change_tol", "max_sweeps"},
    }
    for section in parser.sections():
        if section not in known:
            raise ParameterError(f"{path}: unknown section [{section}]")
        extra = set(parser[section]) - known[section]
        if extra:
            raise ParameterError(f"{path}: unknown keys {sorted(extra)} in [{section}]")

    try:
        problem = parser["problem"] if parser.has_section("problem") else {}
        fit_sec = parser["fit"] if parser.has_section("fit") else {}
        study = parser["study"] if parser.has_section("study") else {}
        nu_raw = problem.get("nu", "").strip() if hasattr(problem, "get") else ""
        options = FitOptions(
            algorithm=algorithm_from_alias(fit_sec.get("algorithm", "rcg")),
            max_iterations=int(fit_sec["max_iterations"]) if "max_iterations" in fit_sec else None,
            tolerance=float(fit_sec.get("tolerance", 1e-8)),
            init=fit_sec.get("init", "wishart_mle"),
        )
        grid_raw = study.get("k_grid", "")
        k_grid = (
            tuple(int(v) for v in grid_raw.split(",")) if grid_raw.strip() else DEFAULT_K_GRID
        )
        return ExperimentConfig(
            p=int(problem.get("p", 10)),
            n=int(problem.get("n", 100)),
            K=int(problem.get("k", 300)),
            nu=float(nu_raw) if nu_raw else None,
            repetitions=int(study.get("repetitions", 200)),
            seed=int(study.get("seed", 0)),
            condition_number=float(study.get("condition_number", 10.0)),
            K_grid=k_grid,
            threads=int(study.get("threads", 1)),
            fit_options=options,
        )
    except (ValueError, KeyError) as exc:
        raise ParameterError(f"{path}: malformed config value ({exc})") from exc


def cluster_settings(path) -> dict:
    """Clustering keys from the optional ``[cluster]`` config section."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.read(path)
    section = parser["cluster"] if parser.has_section("cluster") else {}
    try:
        return {
            "n_clusters": int(section.get("clusters", 2)),
            "n_init": int(section.get("inits", 5)),
            "label_change_tol": float(section.get("label_change_tol", 1e-3)),
            "max_sweeps": int(section.get("max_sweeps", 100)),
        }
    except ValueError as exc:
        raise ParameterError(f"{path}: malformed [cluster] value ({exc})") from exc


def config_echo(config: ExperimentConfig) -> dict:
    """JSON-ready copy of a config, embedded in every output file."""
    echo = asdict(config)
    echo["K_grid"] = list(config.K_grid)
    echo["fit_options"] = {
        k: (v.tolist() if isinstance(v, np.ndarray) else v)
        for k, v in asdict(config.fit_options).items()
    }
    return echo


def write_trace_csv(path, report: FitReport, errors: Optional[NDArray] = None) -> None:
    """Per-iteration trace as CSV (iteration, cost, grad_norm, step, seconds[, error])."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        header = ["iteration", "cost", "grad_norm", "step", "seconds"]
        if errors is not None:
            header.append("error")
        writer.writerow(header)
        for i in range(report.iterations):
            row = [
                i + 1,
                _FLOAT_FORMAT % report.trace_cost[i],
                _FLOAT_FORMAT % report.trace_grad_norm[i],
                _FLOAT_FORMAT % report.trace_step[i],
                _FLOAT_FORMAT % report.trace_seconds[i],
            ]
            if errors is not None:
                row.append(_FLOAT_FORMAT % errors[i])
            writer.writerow(row)


def write_records_csv(path, records: List[RunRecord]) -> None:
    """Per-repetition records as CSV, one row per repetition x estimator."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["repetition", "estimator", "K", "error", "iterations", "seconds", "converged", "failure"]
        )
        for r in records:
            writer.writerow(
                [
                    r.repetition,
                    r.estimator,
                    r.K,
                    _FLOAT_FORMAT % r.error,
                    r.iterations,
                    _FLOAT_FORMAT % r.seconds,
                    int(r.converged),
                    r.failure or "",
                ]
            )


def write_summary_json(path, config: ExperimentConfig, summary: dict) -> None:
    payload = {"config": config_echo(config), **summary}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
