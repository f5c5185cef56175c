"""Command-line front end: metric queries, experiment suites, slice grids.

One entry point driven by a JSON run configuration; all randomness is
seeded and reports are byte-identical across runs with the same seed.
Exit codes: 0 success, 2 domain/point error, 3 configuration error,
4 suite failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
import time

import numpy as np

from . import __version__
from .domains import (
    ExtremeSearchBudget,
    OperatorNormBall,
    RProperBudget,
    body_from_descriptor,
    is_r_proper,
    sample_interior,
    sample_rank_one_pair,
)
from .errors import (
    DescriptorError,
    GeometryError,
    PointOutside,
    ProbeOutside,
    WitnessNotFound,
)
from .lingeom import matrix_from_lists
from .metric import MetricBudget, hilbert_lower_bound, k_estimate, rho
from .rescaling import (
    AdjacencySearchBudget,
    extreme_equivalence_suite,
    nested_body_metric_convergence,
    pnotq_failure_demo,
    tangent_cone_convergence,
)
from .serialize import dump_csv, dump_json
from .symmetry import random_so_pp

EXIT_OK = 0
EXIT_POINT = 2
EXIT_CONFIG = 3
EXIT_SUITE = 4

_TOP_KEYS = {
    "command", "domain", "seed", "tolerances", "budget", "output",
    "x", "y", "suite", "slice", "p", "q", "points",
}
_SUITES = ("rproper", "extreme", "converge", "pnotq", "isometry")


class _ConfigError(Exception):
    pass


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="grhilbert",
        description="Generalized Hilbert metrics on Grassmannian chart domains",
    )
    parser.add_argument("--config", required=True, help="path to a JSON run config")
    parser.add_argument("--seed", type=int, default=None, help="override the seed")
    parser.add_argument("--out", default=None, help="output path (default stdout)")
    parser.add_argument("--format", choices=["json", "csv"], default=None)
    parser.add_argument("--budget-scale", type=float, default=1.0)
    parser.add_argument("--tol-scale", type=float, default=1.0)
    args = parser.parse_args(argv)

    started = time.monotonic()
    try:
        config = _load_config(args.config)
        seed = args.seed if args.seed is not None else int(config.get("seed", 0))
        out_path, out_format = _output_settings(config, args)
        command = config.get("command")
        if command == "metric":
            payload, fmt = _cmd_metric(config, seed, args.budget_scale), "json"
        elif command == "suite":
            payload, fmt = _cmd_suite(config, seed, args.budget_scale, args.tol_scale)
        elif command == "plot_slice":
            payload, fmt = _cmd_plot_slice(config, seed, args.budget_scale), "csv"
        else:
            raise _ConfigError(f"unknown command {command!r}")
        out_format = out_format or fmt
    except (_ConfigError, DescriptorError) as exc:
        print(f"grhilbert: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PointOutside, ProbeOutside) as exc:
        print(f"grhilbert: domain error: {exc}", file=sys.stderr)
        return EXIT_POINT
    except WitnessNotFound as exc:
        print(f"grhilbert: suite failure: {exc}", file=sys.stderr)
        return EXIT_SUITE

    failures = payload.pop("_failures", [])
    csv_rows = payload.pop("_csv_rows", None)
    csv_columns = payload.pop("_csv_columns", None)
    if out_format == "csv":
        if command == "plot_slice":
            rows, columns = payload["rows"], payload["columns"]
        elif csv_rows is not None:
            rows, columns = csv_rows, csv_columns
        else:
            print("grhilbert: configuration error: this command has no CSV form",
                  file=sys.stderr)
            return EXIT_CONFIG
        text = dump_csv(rows, columns)
    else:
        if command == "plot_slice":
            print("grhilbert: configuration error: plot_slice emits CSV only",
                  file=sys.stderr)
            return EXIT_CONFIG
        text = dump_json(payload)
    _emit(text, out_path)
    elapsed = time.monotonic() - started
    print(f"grhilbert: wall clock {elapsed:.3f}s", file=sys.stderr)
    if failures:
        print(f"grhilbert: suite failure: {failures[0]}", file=sys.stderr)
        return EXIT_SUITE
    return EXIT_OK


def _load_config(path: str) -> dict:
    import json

    try:
        with open(path, "r", encoding="utf-8") as handle:
            config = json.load(handle)
    except OSError as exc:
        raise _ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _ConfigError(f"malformed JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise _ConfigError("config must be a JSON object")
    unknown = set(config) - _TOP_KEYS
    if unknown:
        raise _ConfigError(f"unknown config fields: {sorted(unknown)}")
    if "command" not in config:
        raise _ConfigError("config requires a 'command' field")
    return config


def _output_settings(config: dict, args) -> tuple:
    out_path = args.out
    out_format = args.format
    output = config.get("output")
    if output is not None:
        if not isinstance(output, dict) or set(output) - {"path", "format"}:
            raise _ConfigError("output must be {path?, format?}")
        out_path = out_path or output.get("path")
        out_format = out_format or output.get("format")
        if out_format not in (None, "json", "csv"):
            raise _ConfigError(f"unknown output format {out_format!r}")
    return out_path, out_format


def _emit(text: str, out_path) -> None:
    if out_path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out_path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".grhilbert-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp_path, out_path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def _parse_point(config: dict, key: str, shape) -> np.ndarray:
    if key not in config:
        raise _ConfigError(f"config requires field {key!r}")
    try:
        point = matrix_from_lists(config[key])
    except (ValueError, TypeError) as exc:
        raise _ConfigError(f"field {key!r}: {exc}") from exc
    if point.shape != shape:
        raise _ConfigError(f"field {key!r} must be a {shape[0]}x{shape[1]} matrix")
    return point


def _metric_budget(config: dict, seed: int, scale: float) -> MetricBudget:
    overrides = config.get("budget", {})
    if not isinstance(overrides, dict):
        raise _ConfigError("budget must be an object")
    budget = MetricBudget(seed=seed)
    known = set(budget.to_jsonable()) | {"improve_rtol", "inner_tol", "restart_rounds"}
    unknown = set(overrides) - known
    if unknown:
        raise _ConfigError(f"unknown budget fields: {sorted(unknown)}")
    for key, value in overrides.items():
        current = getattr(budget, key)
        setattr(budget, key, value if current is None else type(current)(value))
    if scale != 1.0:
        budget = budget.scaled(scale)
    budget.seed = seed
    return budget


def _report_shell(config: dict, seed: int) -> dict:
    return {
        "tool": {"name": "grhilbert", "version": __version__},
        "command": config.get("command"),
        "seed": seed,
        "config": config,
    }


def _cmd_metric(config: dict, seed: int, budget_scale: float) -> dict:
    body = body_from_descriptor(config.get("domain"))
    x = _parse_point(config, "x", body.shape)
    y = _parse_point(config, "y", body.shape)
    budget = _metric_budget(config, seed, budget_scale)
    estimate = k_estimate(body, x, y, budget=budget)
    lower = hilbert_lower_bound(body, x, y)
    report = _report_shell(config, seed)
    report["budgets"] = {"metric": budget.to_jsonable()}
    report["result"] = {
        "estimate": estimate.to_jsonable(),
        "hilbert_lower_bound": lower,
    }
    return report


def _cmd_plot_slice(config: dict, seed: int, budget_scale: float) -> dict:
    body = body_from_descriptor(config.get("domain"))
    spec = config.get("slice")
    if not isinstance(spec, dict):
        raise _ConfigError("plot_slice requires a 'slice' object")
    allowed = {"center", "u", "v", "grid", "levels"}
    unknown = set(spec) - allowed
    if unknown:
        raise _ConfigError(f"unknown slice fields: {sorted(unknown)}")
    center = _parse_point(spec, "center", body.shape)
    u_dir = _parse_point(spec, "u", body.shape)
    v_dir = _parse_point(spec, "v", body.shape)
    if np.linalg.norm(u_dir) == 0.0 or np.linalg.norm(v_dir) == 0.0:
        raise _ConfigError("slice directions must be nonzero")
    grid = spec.get("grid")
    if not (isinstance(grid, (list, tuple)) and len(grid) == 3):
        raise _ConfigError("slice grid must be [n_u, n_v, extent]")
    n_u, n_v, extent = int(grid[0]), int(grid[1]), float(grid[2])
    if min(n_u, n_v) > 1:
        cos = abs(float(np.sum(u_dir * v_dir))) / (
            np.linalg.norm(u_dir) * np.linalg.norm(v_dir)
        )
        if cos > 1.0 - 1e-12:
            raise _ConfigError("slice directions must be linearly independent")
    if not body.contains(center):
        raise PointOutside("slice center is outside the body")
    budget = _metric_budget(config, seed, budget_scale)
    rows = []
    u_values = np.linspace(-extent, extent, n_u) if n_u > 1 else np.array([0.0])
    v_values = np.linspace(-extent, extent, n_v) if n_v > 1 else np.array([0.0])
    for i, u_val in enumerate(u_values):
        for j, v_val in enumerate(v_values):
            point = center + u_val * u_dir + v_val * v_dir
            inside = body.contains(point)
            row = {"i": i, "j": j, "u": float(u_val), "v": float(v_val),
                   "inside": 1 if inside else 0, "k_hat": "", "h_lower": ""}
            if inside:
                row["k_hat"] = k_estimate(body, center, point, budget=budget).value
                row["h_lower"] = hilbert_lower_bound(body, center, point)
            rows.append(row)
    return {
        "rows": rows,
        "columns": ["i", "j", "u", "v", "inside", "k_hat", "h_lower"],
    }


# ---------------------------------------------------------------------------
# Suites


def _cmd_suite(config: dict, seed: int, budget_scale: float, tol_scale: float):
    suite = config.get("suite")
    if suite not in _SUITES:
        raise _ConfigError(f"suite must be one of {_SUITES}")
    handler = {
        "rproper": _suite_rproper,
        "extreme": _suite_extreme,
        "converge": _suite_converge,
        "pnotq": _suite_pnotq,
        "isometry": _suite_isometry,
    }[suite]
    report, failures, fmt = handler(config, seed, budget_scale, tol_scale)
    shell = _report_shell(config, seed)
    if fmt == "csv":
        shell = report
    else:
        shell.update(report)
    shell["_failures"] = failures
    return shell, fmt


def _suite_rproper(config: dict, seed: int, budget_scale: float, tol_scale: float):
    body = body_from_descriptor(config.get("domain"))
    budget = RProperBudget(seed=seed).scaled(budget_scale)
    verdict = is_r_proper(body, budget)
    failures = []
    if body.bounding_radius is not None and verdict.violation:
        failures.append("bounded body produced a rank-one-line witness")
    report = {
        "budgets": {"rproper": verdict.stats},
        "result": {
            "status": verdict.status,
            "witness_point": None
            if verdict.witness_point is None
            else verdict.witness_point.tolist(),
        },
    }
    return report, failures, "json"


def _suite_extreme(config: dict, seed: int, budget_scale: float, tol_scale: float):
    body = body_from_descriptor(config.get("domain"))
    if "points" in config:
        points = [matrix_from_lists(entry) for entry in config["points"]]
    elif isinstance(body, OperatorNormBall) and body.p == body.q:
        points = _default_ball_points(body.p)
    else:
        raise _ConfigError("extreme suite requires 'points' for this domain")
    rows = extreme_equivalence_suite(
        body,
        points,
        adjacency_budget=AdjacencySearchBudget(seed=seed).scaled(budget_scale),
        z_budget=ExtremeSearchBudget(seed=seed).scaled(budget_scale),
        rproper_budget=RProperBudget(seed=seed).scaled(budget_scale),
    )
    failures = [
        f"inconsistent verdicts at point index {idx}"
        for idx, row in enumerate(rows)
        if not row.consistent
    ]
    report = {
        "budgets": {"scale": budget_scale},
        "result": {"rows": [row.to_jsonable() for row in rows]},
        "_csv_rows": [
            {
                "index": idx,
                "adjacency_extreme": row.adjacency_extreme,
                "z_extreme": row.z_test.is_extreme,
                "tangent_cone_proper": not row.tangent_cone_verdict.violation,
                "consistent": row.consistent,
            }
            for idx, row in enumerate(rows)
        ],
        "_csv_columns": [
            "index", "adjacency_extreme", "z_extreme",
            "tangent_cone_proper", "consistent",
        ],
    }
    return report, failures, "json"


def _default_ball_points(p: int) -> list:
    points = [np.eye(p)]
    for theta in (0.4, 1.1, 2.0):
        block = np.array(
            [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
        )
        rotation = np.eye(p)
        rotation[:2, :2] = block
        points.append(rotation)
    for s in (0.0, 0.5):
        diag = np.eye(p)
        diag[p - 1, p - 1] = s
        points.append(diag)
    return points


def _suite_converge(config: dict, seed: int, budget_scale: float, tol_scale: float):
    body = body_from_descriptor(config.get("domain"))
    if "points" in config:
        point = matrix_from_lists(config["points"][0])
    elif isinstance(body, OperatorNormBall) and body.p == body.q:
        point = np.eye(body.p)
    else:
        raise _ConfigError("converge suite requires 'points' with one boundary point")
    report_obj = tangent_cone_convergence(
        body, point, list(range(9)), radius=2.0,
        hausdorff_directions=max(16, int(round(64 * budget_scale))),
        seed=seed,
    )
    failures = []
    if report_obj.verdict != "convergent_trend":
        failures.append("tangent-cone rescalings show no convergent trend")
    if report_obj.hausdorff_values[-1] > 0.05 * tol_scale:
        failures.append("final clipped Hausdorff gap above threshold")
    report = {
        "budgets": {"scale": budget_scale},
        "result": report_obj.to_jsonable(),
        "_csv_rows": report_obj.to_csv_rows(),
        "_csv_columns": ["parameter", "hausdorff", "metric_disagreement"],
    }
    return report, failures, "json"


def _suite_pnotq(config: dict, seed: int, budget_scale: float, tol_scale: float):
    p = config.get("p")
    q = config.get("q")
    if not isinstance(p, int) or not isinstance(q, int):
        raise _ConfigError("pnotq suite requires integer fields 'p' and 'q'")
    budget = RProperBudget(seed=seed).scaled(budget_scale)
    verdict = pnotq_failure_demo(p, q, budget)
    failures = []
    if p == q and verdict.violation:
        failures.append("square control found a rank-one line in the tangent cone")
    report = {
        "budgets": {"rproper": verdict.stats},
        "result": {
            "status": verdict.status,
            "witness_point": None
            if verdict.witness_point is None
            else verdict.witness_point.tolist(),
            "witness_direction": None
            if verdict.witness_direction is None
            else verdict.witness_direction.matrix.tolist(),
        },
    }
    return report, failures, "json"


def _suite_isometry(config: dict, seed: int, budget_scale: float, tol_scale: float):
    domain = config.get("domain") or {"kind": "operator_ball", "p": 2, "q": 2}
    body = body_from_descriptor(domain)
    if not isinstance(body, OperatorNormBall) or body.p != body.q:
        raise _ConfigError("isometry suite runs on the square operator ball")
    p = body.p
    transforms = max(2, int(round(6 * budget_scale)))
    pairs = max(2, int(round(10 * budget_scale)))
    rng = np.random.default_rng(seed)
    rho_tol = 1e-8 * tol_scale
    k_tol = 1e-3 * tol_scale
    budget = _metric_budget(config, seed, 1.0)
    worst_rho = 0.0
    worst_k = 0.0
    failures = []
    for index in range(transforms):
        transform = random_so_pp(p, seed=seed + index).transform()
        for _ in range(pairs):
            x, y, _, _ = sample_rank_one_pair(body, rng)
            gap = abs(
                rho(body, x, y).value
                - rho(body, transform.apply(x), transform.apply(y)).value
            )
            worst_rho = max(worst_rho, gap)
        x = sample_interior(body, rng, 1)[0]
        y = sample_interior(body, rng, 1)[0]
        base = k_estimate(body, x, y, budget=budget).value
        moved = k_estimate(
            body, transform.apply(x), transform.apply(y), budget=budget
        ).value
        worst_k = max(worst_k, abs(base - moved) / max(base, 1e-12))
    if worst_rho > rho_tol:
        failures.append(f"rho invariance defect {worst_rho:.3e} above tolerance")
    if worst_k > k_tol:
        failures.append(f"metric estimate invariance defect {worst_k:.3e} above tolerance")
    report = {
        "budgets": {"transforms": transforms, "pairs": pairs,
                    "metric": budget.to_jsonable()},
        "result": {"max_rho_defect": worst_rho, "max_k_relative_defect": worst_k},
    }
    return report, failures, "json"


if __name__ == "__main__":
    sys.exit(main())
