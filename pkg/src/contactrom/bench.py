"""
Benchmark studies: run one configured stage end to end and write its report
files into the output directory.
"""
import csv
import json
import math
from pathlib import Path

import numpy as np

from .contact import solve_hf
from .convexhull import chls_test, convex_solve, monolithic_dictionary
from .lib.errors import UsageError
from .lib.logger import debug, log, warn
from .models.problem import RigidObstacle
from .models.run_config import Stage
from .problems import build_problem
from .rom_offline import (
    build_reduced_model,
    check_model,
    generate_snapshots,
    load_model,
    manifest_hash,
    parse_design,
    save_model,
    validation_design,
)
from .rom_online import (
    bracket_offset,
    evaluate_query_set,
    greedy_active_set,
    reference_solutions,
    relative_errors,
)
from .version import __name__ as TOOL, __version__

SUMMARY = "summary.json"
HERTZ_TAU_QUERY = (0.25,)


def _clean(value):
    """JSON-safe copy: numpy scalars to Python, nan and inf to None."""
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def _num(value):
    return f"{float(value):.17g}"


def _mu_columns(names):
    return [f"mu_{n}" for n in names]


# ─── REPORT FILES ───────────────────────────────────────────────────────────


def write_points(path, report):
    """Deterministic per-point results (no timings)."""
    with open(path, "w", newline="") as file:
        out = csv.writer(file)
        out.writerow(
            _mu_columns(report.parameter_names)
            + [
                "primal_err",
                "dual_err",
                "iters",
                "active_size",
                "converged",
                "reason",
            ]
        )
        for r in report.rows:
            out.writerow(
                [_num(m) for m in r.mu]
                + [
                    _num(r.primal_err),
                    _num(r.dual_err),
                    r.iterations,
                    len(r.active),
                    int(r.converged),
                    r.reason,
                ]
            )


def write_timings(path, report):
    with open(path, "w", newline="") as file:
        out = csv.writer(file)
        out.writerow(
            _mu_columns(report.parameter_names)
            + ["time", "per_iter_time", "operator_time", "hf_time"]
        )
        for r in report.rows:
            out.writerow(
                [_num(m) for m in r.mu]
                + [
                    _num(r.wall_time),
                    _num(r.per_iter_time),
                    _num(r.operator_time),
                    _num(r.hf_time),
                ]
            )


def write_error_curve(path, report):
    with open(path, "w", newline="") as file:
        out = csv.writer(file)
        out.writerow(
            _mu_columns(report.parameter_names)
            + ["primal_err", "dual_err", "converged"]
        )
        for r in report.rows:
            out.writerow(
                [_num(m) for m in r.mu]
                + [_num(r.primal_err), _num(r.dual_err), int(r.converged)]
            )


def write_bars(path, report):
    summary = report.summary()
    keys = (
        "mean_primal_err",
        "mean_dual_err",
        "rank",
        "dict_size",
        "mean_iterations",
        "median_active",
        "bracket_hit_fraction",
        "mean_time",
        "mean_iter_time",
        "mean_hf_time",
    )
    with open(path, "w", newline="") as file:
        out = csv.writer(file)
        out.writerow(["metric", "value"])
        for key in keys:
            out.writerow([key, _num(summary[key])])


def write_sparsity(path, report):
    """Selected columns per query point as a coordinate list."""
    with open(path, "w") as file:
        file.write("# point column coefficient\n")
        for point, col, val in report.sparsity_pattern():
            file.write(f"{point} {col} {_num(val)}\n")


def write_dictionary_pattern(path, dictionary):
    rows, cols = np.nonzero(dictionary)
    with open(path, "w") as file:
        file.write(f"# {dictionary.shape[0]} {dictionary.shape[1]}\n")
        for r, c in zip(rows, cols):
            file.write(f"{r} {c}\n")


def _write_json(path, data):
    Path(path).write_text(json.dumps(_clean(data), indent=1, sort_keys=True))


# ─── STAGES ─────────────────────────────────────────────────────────────────


def _offline(config, problem, out):
    design = parse_design(config.design, problem.parameter_box)
    log(f"OFFLINE: {problem.problem_id} {design.label}, {len(design)} points")
    snaps = generate_snapshots(problem, design, config.hf_tol, config.workers)
    model = build_reduced_model(snaps, config.delta, problem, config.tau)
    save_model(model, config.model_dir)
    write_dictionary_pattern(out / "dictionary_pattern.txt", model.dual_dict)
    return {
        "design": design.label,
        "snapshots": len(snaps),
        "rank": model.rank,
        "dict_size": model.dict_size,
        "energy_fraction": model.phi.energy_fraction,
        "snapshot_hf_time": float(np.mean(snaps.solve_times)),
    }


def _load_checked(config, problem):
    model = load_model(config.model_dir)
    check_model(model, problem)
    return model


def _validation(config, design, problem):
    if config.validation is None:
        return validation_design(design)
    return parse_design(config.validation, problem.parameter_box)


def _online(config, problem, out):
    model = _load_checked(config, problem)
    vdesign = _validation(config, model.design, problem)
    log(f"ONLINE: {problem.problem_id} {vdesign.label}, {len(vdesign)} points")
    report = evaluate_query_set(
        model,
        problem,
        vdesign.points,
        hf_tol=config.hf_tol,
        workers=config.workers,
        tau=config.tau,
        k_max=config.k_max,
        conv_tol=config.conv_tol,
        warm_pairing=config.warm_pairing,
    )
    write_points(out / "points.csv", report)
    write_timings(out / "timings.csv", report)
    write_error_curve(out / "error_curve.csv", report)
    write_bars(out / "bars.csv", report)
    write_sparsity(out / "sparsity.txt", report)
    if report.n_unconverged:
        warn(
            f"REPORT: {report.n_unconverged} of {len(report)} queries "
            "did not converge"
        )
    summary = report.summary()
    summary["validation"] = vdesign.label
    log(
        f"REPORT: mean primal {summary['mean_primal_err']:.3e}, "
        f"mean dual {summary['mean_dual_err']:.3e}, "
        f"speed-up {summary['speedup']:.1f}"
    )
    return summary


def _convex_rows(dictionary, problem, points, refs, config, label):
    rows = []
    for mu, ref in zip(points, refs):
        res = convex_solve(
            dictionary,
            problem,
            mu,
            delta_B=config.delta_B,
            sketch_size=config.sketch_size,
            seed=config.seed,
        )
        if ref is None:
            primal, dual = float("nan"), float("nan")
        else:
            primal, dual = relative_errors(problem, res.u, res.lam, *ref)
        rows.append((label, mu, res, primal, dual))
    return rows


def _chls(config, problem, out):
    if not isinstance(problem.contact, RigidObstacle):
        raise UsageError(
            "the convex-hull stage needs contact operators that do not "
            f"depend on the configuration; '{problem.problem_id}' has none"
        )
    design = parse_design(config.design, problem.parameter_box)
    snaps = generate_snapshots(problem, design, config.hf_tol, config.workers)
    dictionary = monolithic_dictionary(snaps)
    errors = chls_test(dictionary.D_u)
    names = _mu_columns(problem.parameter_names)
    with open(out / "chls.csv", "w", newline="") as file:
        w = csv.writer(file)
        w.writerow(["column"] + names + ["chls_err"])
        for j, (mu, err) in enumerate(zip(design.points, errors)):
            w.writerow([j] + [_num(m) for m in mu] + [_num(err)])

    nodes = problem.contact.nodes
    train_refs = [
        (snaps.U[:, j], snaps.Lam[:, j], nodes) for j in range(len(snaps))
    ]
    vdesign = _validation(config, design, problem)
    val_refs = [
        None if s is None else (s.u, s.lam, nodes)
        for s in reference_solutions(
            problem, vdesign.points, config.hf_tol, config.workers
        )
    ]
    rows = _convex_rows(
        dictionary, problem, design.points, train_refs, config, "training"
    ) + _convex_rows(
        dictionary, problem, vdesign.points, val_refs, config, "validation"
    )

    with open(out / "compliance.csv", "w", newline="") as file:
        w = csv.writer(file)
        w.writerow(
            ["set"]
            + names
            + ["convex_defect", "penetration", "slackness", "sparsity"]
        )
        for label, mu, res, _, _ in rows:
            w.writerow(
                [label]
                + [_num(m) for m in mu]
                + [
                    _num(res.convex_defect),
                    _num(res.penetration),
                    _num(res.slackness),
                    res.sparsity,
                ]
            )
    with open(out / "convex_errors.csv", "w", newline="") as file:
        w = csv.writer(file)
        w.writerow(["set"] + names + ["primal_err", "dual_err", "sparsity"])
        for label, mu, res, primal, dual in rows:
            w.writerow(
                [label]
                + [_num(m) for m in mu]
                + [_num(primal), _num(dual), res.sparsity]
            )

    summary = {"snapshots": len(snaps), "chls_max": float(errors.max())}
    for label in ("training", "validation"):
        mine = [r for r in rows if r[0] == label]
        for key in ("convex_defect", "penetration", "slackness"):
            summary[f"{label}_max_{key}"] = max(
                (getattr(r[2], key) for r in mine), default=float("nan")
            )
        summary[f"{label}_mean_primal_err"] = _nanmean([r[3] for r in mine])
        summary[f"{label}_mean_dual_err"] = _nanmean([r[4] for r in mine])
    return summary


def _nanmean(values):
    values = np.asarray(values, dtype=float)
    values = values[np.isfinite(values)]
    return float(values.mean()) if values.size else float("nan")


def _tau_study(config, problem, out):
    try:
        model = _load_checked(config, problem)
    except UsageError:
        debug("REPORT: no usable model for the tau study, building one")
        _offline(config, problem, out)
        model = _load_checked(config, problem)
    if config.tau_query is not None:
        mu = config.tau_query
    elif problem.problem_id == "hertz":
        mu = HERTZ_TAU_QUERY
    else:
        mu = problem.reference_mu
    ref = solve_hf(problem, mu, tol=config.hf_tol)
    nodes = ref.contact.slave_nodes

    runs = {}
    for label, tau in (("tau_zero", 0.0), ("tau_delta", model.delta)):
        res = greedy_active_set(
            model,
            problem,
            mu,
            tau=tau,
            k_max=config.k_max,
            conv_tol=config.conv_tol,
            warm_pairing=config.warm_pairing,
        )
        primal, dual = relative_errors(
            problem, res.u, res.lam, ref.u, ref.lam, nodes
        )
        runs[label] = {
            "tau": tau,
            "active": sorted(res.active),
            "primal_err": primal,
            "dual_err": dual,
            "converged": res.converged,
            "iterations": res.iterations,
            "bracket_offset": bracket_offset(model.design, mu, res.active),
        }
    _write_json(out / "tau_study.json", {"mu": list(mu), "runs": runs})
    zero, delta = runs["tau_zero"], runs["tau_delta"]
    return {
        "tau_query": list(mu),
        "dual_err_tau_zero": zero["dual_err"],
        "dual_err_tau_delta": delta["dual_err"],
        "bracket_offset_tau_zero": zero["bracket_offset"],
        "bracket_offset_tau_delta": delta["bracket_offset"],
    }


# ─── DRIVER ─────────────────────────────────────────────────────────────────


def _metrics(summary):
    """Flat numeric metrics of every stage section of a summary."""
    metrics = {}
    for section in ("offline", "online", "chls", "tau"):
        for key, value in (summary.get(section) or {}).items():
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                metrics[key] = value
    return metrics


def check_thresholds(metrics, thresholds, ratios=None):
    """
    Failures of ``metrics`` against ``{metric: {"min": a, "max": b}}``.
    ``ratio:<metric>`` limits apply to ``ratios`` and are skipped without it.
    """
    failures = []
    for name, bounds in sorted((thresholds or {}).items()):
        if name.startswith("ratio:"):
            if ratios is None:
                continue
            value = ratios.get(name[len("ratio:") :])
        else:
            value = metrics.get(name)
        if value is None or not math.isfinite(value):
            failures.append(f"{name}: no value")
            continue
        if "min" in bounds and value < bounds["min"]:
            failures.append(f"{name}: {value:.4g} < {bounds['min']}")
        if "max" in bounds and value > bounds["max"]:
            failures.append(f"{name}: {value:.4g} > {bounds['max']}")
    return failures


def run(config):
    """
    Run ``config.stage`` and write its files to ``config.output_dir``.
    Returns the summary, also written to ``summary.json``.
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    problem = build_problem(str(config.problem), **config.mesh)
    summary = {
        "tool": TOOL,
        "version": __version__,
        "problem": problem.problem_id,
        "stage": str(config.stage),
        "config_hash": config.digest(),
        "config": config.to_dict(),
    }
    stage = config.stage
    if stage in (Stage.OFFLINE, Stage.FULL):
        summary["offline"] = _offline(config, problem, out)
    if stage in (Stage.ONLINE, Stage.FULL):
        summary["online"] = _online(config, problem, out)
    if stage == Stage.CHLS:
        summary["chls"] = _chls(config, problem, out)
    if stage == Stage.TAU:
        summary["tau"] = _tau_study(config, problem, out)

    model_manifest = Path(config.model_dir) / "manifest.json"
    summary["model_manifest_hash"] = (
        manifest_hash(config.model_dir) if model_manifest.exists() else None
    )
    failures = check_thresholds(_metrics(_clean(summary)), config.thresholds)
    summary["acceptance"] = {"passed": not failures, "failures": failures}
    for failure in failures:
        warn(f"REPORT: threshold failed, {failure}")
    _write_json(out / SUMMARY, summary)
    return _clean(summary)


def load_summary(report):
    if isinstance(report, dict):
        return report
    path = Path(report)
    if path.is_dir():
        path = path / SUMMARY
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise UsageError(f"no report at {path}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"unreadable report {path}: {e}") from None


def _ratio(a, b):
    if a == b:
        return 1.0
    if a is None or b is None or a == 0:
        return float("nan")
    return b / a


def compare_tables(report_a, report_b, thresholds=None):
    """
    Ratio table (b / a) of the metrics both reports carry, and the
    threshold failures of ``report_b`` (ratio limits against ``report_a``).
    """
    a, b = load_summary(report_a), load_summary(report_b)
    if a.get("problem") != b.get("problem"):
        raise UsageError(
            f"reports are for different problems: {a.get('problem')} "
            f"and {b.get('problem')}"
        )
    ma, mb = _metrics(a), _metrics(b)
    rows = [
        (name, ma[name], mb[name], _ratio(ma[name], mb[name]))
        for name in sorted(set(ma) & set(mb))
    ]
    ratios = {name: ratio for name, _, _, ratio in rows}
    failures = check_thresholds(mb, thresholds, ratios)
    return rows, failures


def print_table(rows, failures):
    print(f"{'metric':<28}{'a':>14}{'b':>14}{'b/a':>10}")
    for name, va, vb, ratio in rows:
        print(f"{name:<28}{va:>14.4g}{vb:>14.4g}{ratio:>10.3g}")
    for failure in failures:
        print(f"FAIL {failure}")
