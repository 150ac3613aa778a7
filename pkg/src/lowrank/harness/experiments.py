"""Experiment runners: instances from config, trial scheduling, artifacts.

The parallelism unit is one trial.  Each trial derives its streams from
(base_seed, axis values, trial index) alone, so any sub-grid reproduces the
full grid's cells and the worker count never changes a single output byte.
"""

from __future__ import annotations

import concurrent.futures
import statistics

import numpy as np

from .. import __version__ as _version
from .. import operators as ops, penalties, problems, regularity, solvers
from .._rng import child_seed
from ..proxsub import Quadratic, QuadPlusLinear, RowNormSquared
from . import io, svg

SENSING_KINDS = (ops.GAUSSIAN, ops.QUADRATIC_I, ops.QUADRATIC_II, ops.BILINEAR)


# ---------------------------------------------------------------------------
# instance and solver dispatch

def build_instance(problem: dict, seed: int):
    """Construct a ProblemInstance from a concrete (list-free) problem spec."""
    kind = problem["kind"]
    d1 = problem["d1"]
    r = problem.get("r", 1)
    delta = problem.get("delta", 0.0)
    dense = ops.ScaledNoise(delta) if delta else None
    if kind in SENSING_KINDS:
        d2 = problem.get("d2", d1)
        m = problem.get("m")
        if m is None:
            m = int(round(problem.get("m_multiplier", 8) * r * (d1 + d2) / 2))
        return problems.make_sensing_instance(
            kind, d1, d2, r, m,
            penalty=problem.get("penalty", penalties.SCALED_L1),
            p_fail=problem.get("p_fail", 0.0),
            outlier_model=_outlier_model(problem.get("outlier_model")),
            dense_noise=dense, seed=seed)
    if kind == "matrix-completion":
        return problems.make_completion_instance(
            d1, r, problem["p"], nu=problem.get("nu", 3.0),
            penalty=problem.get("penalty", penalties.FROBENIUS),
            dense_noise=dense, seed=seed)
    if kind == "rpca-l1":
        return problems.make_rpca_l1_instance(
            d1, r, problem.get("tau", 0.1),
            radius_factor=problem.get("radius_factor", 2.0),
            sigma=problem.get("sigma", 1.0), seed=seed)
    if kind == "rpca-euclidean":
        return problems.make_rpca_euclidean_instance(
            d1, r, nu=problem.get("nu", 3.0),
            sparsity=problem.get("sparsity", 8),
            sigma=problem.get("sigma", 1.0), seed=seed)
    raise ValueError(f"unknown problem kind {kind!r}")


def _outlier_model(spec):
    if spec is None or spec.get("name") == "none":
        return None
    sigma = spec.get("sigma", 1.0)
    if spec["name"] == "additive-gaussian":
        return ops.AdditiveGaussian(sigma)
    return ops.ReplaceGaussian(sigma)


def _step_penalty(inst, solver: dict, seed: int):
    if solver.get("a") is not None:
        return QuadPlusLinear(solver["a"], solver.get("b", 0.0))
    if inst.penalty == penalties.ENTRYWISE_L1:
        return RowNormSquared(solver.get("gamma", 10.0))
    if inst.ensemble.kind == ops.MASK and inst.penalty == penalties.FROBENIUS \
            and "p" in inst.meta:
        eps = solver.get("epsilon", 0.01)
        p = inst.meta["p"]
        return QuadPlusLinear(np.sqrt(p * (1.0 + eps)), np.sqrt(p * eps))
    beta = solver.get("beta", "auto")
    if beta == "auto":
        norm_kind = "scaled-l1" if inst.penalty == penalties.SCALED_L1 \
            else "scaled-l2"
        _, k2 = regularity.estimate_rip(inst.ensemble, inst.r, norm_kind,
                                        solver.get("beta_samples", 200),
                                        child_seed(seed, "beta"))
        beta = k2
    return Quadratic(beta)


_DEFAULT_ITERS = {"polyak": 5000, "geometric": 5000, "prox-linear": 30,
                  "gradient-descent": 5000}


def run_solver(inst, x0, solver: dict, seed: int) -> solvers.SolveTrace:
    """Dispatch one solve according to the config's solver section."""
    name = solver["name"]
    cfg = solvers.SolverConfig(
        max_iters=solver.get("max_iters", _DEFAULT_ITERS[name]),
        stop_rel_error=solver.get("stop_rel_error", 1e-5),
        record_every=solver.get("record_every", 1),
        seed=seed,
        min_f=solver.get("min_f"),
        subproblem_tol=solver.get("subproblem_tol"),
        subproblem_max_iter=solver.get("subproblem_max_iter"))
    if name == "polyak":
        return solvers.polyak(inst, x0, cfg)
    if name == "geometric":
        return solvers.geometric(inst, x0, solver.get("lam", 1.0),
                                 solver.get("q", 0.98), cfg)
    if name == "prox-linear":
        return solvers.prox_linear(inst, x0, _step_penalty(inst, solver, seed), cfg)
    if name == "gradient-descent":
        rule = ("polyak",) if solver.get("step_rule") == "polyak" \
            else ("constant", solver.get("eta", 1e-3))
        return solvers.gradient_descent(inst, x0, rule, cfg)
    raise ValueError(f"unknown solver {name!r}")


# ---------------------------------------------------------------------------
# trial scheduling

def _axis_tag(value) -> str:
    return f"{float(value):.17g}"


def _trial_seed(base_seed, axis1, axis2, trial) -> int:
    return child_seed(base_seed, "cell", _axis_tag(axis1), _axis_tag(axis2),
                      trial)


def _run_trial(task: dict) -> dict:
    seed = _trial_seed(task["base_seed"], task["axis1"], task["axis2"],
                       task["trial"])
    inst = build_instance(task["problem"], child_seed(seed, "instance"))
    x0 = solvers.initialize(inst.truth, task["init_delta"],
                            child_seed(seed, "init"))
    trace = run_solver(inst, x0, task["solver"], seed)
    return {
        "axis1": task["axis1"], "axis2": task["axis2"], "trial": task["trial"],
        "success": trace.status == solvers.CONVERGED,
        "final_k": trace.final_k,
        "final_rel": trace.final_rel_error,
        "ks": trace.ks, "objectives": trace.objectives,
        "rel_errors": trace.rel_errors, "dists": trace.dists,
        "step_sizes": trace.step_sizes, "sub_iters": trace.sub_iters,
        "times": trace.times, "status": trace.status,
    }


def _execute(tasks, threads):
    if threads <= 1:
        return [_run_trial(t) for t in tasks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_run_trial, tasks, chunksize=1))


def _cell_overrides(problem, axis2_name, r, v):
    spec = dict(problem)
    spec.pop("r_list", None)
    spec.pop(axis2_name + "_list", None)
    spec["r"] = int(r)
    spec[axis2_name] = v
    return spec


def _axis2(problem):
    for name in ("p_fail", "p", "tau"):
        if name + "_list" in problem:
            return name, list(problem[name + "_list"])
    for name in ("p_fail", "p", "tau"):
        if name in problem:
            return name, [problem[name]]
    return "p_fail", [0.0]


# ---------------------------------------------------------------------------
# experiments

def run_phase_transition(config, out_dir, threads=1, no_timing=False):
    """Success-rate grid over rank x corruption (or observation) level."""
    problem = config["problem"]
    r_values = [int(r) for r in problem.get("r_list", [problem.get("r", 1)])]
    axis2_name, axis2_values = _axis2(problem)
    if not r_values or not axis2_values:
        raise ValueError("phase-transition grid is empty")
    tasks = [
        {"problem": _cell_overrides(problem, axis2_name, r, v),
         "solver": config["solver"], "init_delta": config["init_delta"],
         "base_seed": config["base_seed"], "axis1": r, "axis2": v, "trial": t}
        for r in r_values for v in axis2_values
        for t in range(config["trials"])
    ]
    results = _execute(tasks, threads)

    rows = []
    rates = [[0.0] * len(axis2_values) for _ in r_values]
    for i, r in enumerate(r_values):
        for j, v in enumerate(axis2_values):
            cell = [res for res in results
                    if res["axis1"] == r and res["axis2"] == v]
            wins = [res["final_k"] for res in cell if res["success"]]
            rates[i][j] = len(wins) / len(cell)
            med = statistics.median(wins) if wins else -1
            rows.append((r, v, len(wins), len(cell), med))

    name = config["name"]
    meta = io.meta_lines(config, _version)
    csv_path = io.write_csv(f"{out_dir}/{name}_phase.csv",
                            ["axis1", "axis2", "successes", "trials",
                             "median_iters"], rows, meta)
    svg_path = io.write_text(
        f"{out_dir}/{name}_phase.svg",
        svg.heatmap(rates, axis2_values, r_values,
                    title=f"recovery rate: {problem['kind']}",
                    xlabel=axis2_name, ylabel="rank"))
    return {"csv": csv_path, "svg": svg_path, "rates": rates}


def _trace_rows(results, label_fn, no_timing):
    rows = []
    for res in results:
        label = label_fn(res)
        for i, k in enumerate(res["ks"]):
            row = [label, res["trial"], k, res["objectives"][i],
                   res["rel_errors"][i], res["dists"][i],
                   res["step_sizes"][i], res["sub_iters"][i]]
            if not no_timing:
                row.append(res["times"][i])
            rows.append(row)
    return rows


_TRACE_HEADER = ["series", "trial", "k", "objective", "rel_error", "dist",
                 "step_size", "sub_iters"]


def run_convergence(config, out_dir, threads=1, no_timing=False):
    """Per-iteration traces for each (rank, corruption) configuration."""
    problem = config["problem"]
    r_values = [int(r) for r in problem.get("r_list", [problem.get("r", 1)])]
    axis2_name, axis2_values = _axis2(problem)
    tasks = [
        {"problem": _cell_overrides(problem, axis2_name, r, v),
         "solver": config["solver"], "init_delta": config["init_delta"],
         "base_seed": config["base_seed"], "axis1": r, "axis2": v, "trial": t}
        for r in r_values for v in axis2_values
        for t in range(config["trials"])
    ]
    results = _execute(tasks, threads)

    def label(res):
        return f"r={res['axis1']};{axis2_name}={res['axis2']:.4g}"

    header = _TRACE_HEADER + ([] if no_timing else ["time_s"])
    rows = _trace_rows(results, label, no_timing)
    name = config["name"]
    meta = io.meta_lines(config, _version)
    csv_path = io.write_csv(f"{out_dir}/{name}_convergence.csv", header, rows,
                            meta)

    series = []
    for r in r_values:
        for v in axis2_values:
            cell = [res for res in results
                    if res["axis1"] == r and res["axis2"] == v]
            finals = sorted(cell, key=lambda res: res["final_rel"])
            rep = finals[len(finals) // 2]  # median-final trial
            series.append((f"r={r},{axis2_name}={v:.4g}", rep["ks"],
                           [max(e, 1e-16) for e in rep["rel_errors"]]))
    svg_path = io.write_text(
        f"{out_dir}/{name}_convergence.svg",
        svg.line_plot(series, title=f"convergence: {problem['kind']}",
                      xlabel="iteration", ylabel="relative error", log_y=True))
    return {"csv": csv_path, "svg": svg_path, "results": results}


def _plateau_theory(spec, delta, base_seed):
    """Estimated 14*eps/mu distance tolerance for one noise level (diagnostic)."""
    if delta <= 0 or spec.get("kind") not in SENSING_KINDS:
        return float("nan")
    seed = child_seed(base_seed, "plateau-theory", _axis_tag(delta))
    inst = build_instance({**spec, "delta": delta}, seed)
    eps = penalties.value(inst.penalty, inst.observation.noise)
    mu = regularity.estimate_sharpness(inst, 60, 0.3 * inst.truth.norm(), seed)
    return 14.0 * eps / mu if mu > 0 else float("nan")


def run_tolerance_sweep(config, out_dir, threads=1, no_timing=False):
    """Dense-noise sweep: traces per noise level plus extracted plateaus."""
    problem = config["problem"]
    deltas = list(problem["dense_noise_deltas"])
    spec = dict(problem)
    spec.pop("dense_noise_deltas", None)
    tasks = [
        {"problem": {**spec, "delta": d}, "solver": config["solver"],
         "init_delta": config["init_delta"], "base_seed": config["base_seed"],
         "axis1": problem.get("r", 1), "axis2": d, "trial": t}
        for d in deltas for t in range(config["trials"])
    ]
    results = _execute(tasks, threads)

    def label(res):
        return f"delta={res['axis2']:.4g}"

    header = _TRACE_HEADER + ([] if no_timing else ["time_s"])
    rows = _trace_rows(results, label, no_timing)
    name = config["name"]
    meta = io.meta_lines(config, _version)
    trace_path = io.write_csv(f"{out_dir}/{name}_tolerance_traces.csv", header,
                              rows, meta)

    plateau_rows = []
    series = []
    plateaus = {}
    for d in deltas:
        cell = [res for res in results if res["axis2"] == d]
        per_trial = []
        for res in cell:
            tail = max(1, len(res["rel_errors"]) // 10)
            per_trial.append(statistics.median(res["rel_errors"][-tail:]))
        plateau = statistics.median(per_trial)
        plateaus[d] = plateau
        # theoretical distance tolerance 14*eps/mu, for plotting context only
        theory = _plateau_theory(spec, d, config["base_seed"])
        plateau_rows.append((d, plateau, theory, len(cell)))
        rep = sorted(cell, key=lambda res: res["final_rel"])[len(cell) // 2]
        series.append((f"delta={d:.4g}", rep["ks"],
                       [max(e, 1e-16) for e in rep["rel_errors"]]))
    plateau_path = io.write_csv(f"{out_dir}/{name}_tolerance_plateaus.csv",
                                ["delta", "plateau", "dist_tol_theory",
                                 "trials"], plateau_rows, meta)
    svg_path = io.write_text(
        f"{out_dir}/{name}_tolerance.svg",
        svg.line_plot(series, title="dense-noise plateaus",
                      xlabel="iteration", ylabel="relative error", log_y=True))
    return {"csv": trace_path, "plateau_csv": plateau_path, "svg": svg_path,
            "plateaus": plateaus}


def run_rip_audit(config, out_dir, threads=1, no_timing=False):
    """Estimate regularity constants over the configured ensemble grid."""
    problem = config["problem"]
    rip_cfg = config.get("rip", {})
    n_samples = rip_cfg.get("n_samples", 400)
    norm_kind = rip_cfg.get("norm_kind", "scaled-l1")
    radius = rip_cfg.get("radius", 0.5)
    p_fail = rip_cfg.get("p_fail", problem.get("p_fail", 0.0))
    with_instance = rip_cfg.get("with_instance", False)
    approx_pairs = rip_cfg.get("approx_pairs", 60)

    kinds = problem.get("kind_list") or [problem["kind"]]
    r_values = [int(r) for r in problem.get("r_list", [problem.get("r", 1)])]
    multipliers = problem.get("m_multiplier_list",
                              [problem.get("m_multiplier", 8)])
    if not kinds or not r_values or not multipliers:
        raise ValueError("rip-audit grid is empty")

    base_seed = config["base_seed"]
    rows = []
    for kind in kinds:
        for r in r_values:
            for mult in multipliers:
                d1 = problem["d1"]
                d2 = problem.get("d2", d1)
                spec = dict(problem)
                spec.update({"kind": kind, "r": r, "m_multiplier": mult})
                spec.pop("kind_list", None)
                spec.pop("r_list", None)
                spec.pop("m_multiplier_list", None)
                seed = child_seed(base_seed, "rip", kind, r,
                                  _axis_tag(mult))
                m = int(round(mult * r * (d1 + d2) / 2))
                ensemble = ops.make_ensemble(kind, d1, d2, m,
                                             child_seed(seed, "ensemble"))
                k1, k2 = regularity.estimate_rip(ensemble, r, norm_kind,
                                                 n_samples, seed)
                n_out = int(round(p_fail * m))
                if n_out:
                    perm = np.sort(np.random.default_rng(
                        child_seed(seed, "outliers")).permutation(m)[:n_out])
                else:
                    perm = np.empty(0, dtype=np.int64)
                k3 = regularity.estimate_outlier_margin(ensemble, perm, r,
                                                        n_samples, seed)
                rho = mu = lip = float("nan")
                if with_instance and kind in SENSING_KINDS:
                    inst = build_instance(spec, child_seed(seed, "instance"))
                    rho = regularity.estimate_approx_modulus(
                        inst, approx_pairs, radius, seed, two_term=False)
                    mu = regularity.estimate_sharpness(inst, approx_pairs,
                                                       radius, seed)
                    lip = regularity.estimate_lipschitz(inst, approx_pairs,
                                                        radius, seed)
                report = regularity.RegularityReport(
                    kappa1_hat=k1, kappa2_hat=k2, kappa3_hat=k3, rho_hat=rho,
                    mu_hat=mu, L_hat=lip, n_samples=n_samples, seed=seed,
                    norm_kind=norm_kind)
                rd = report.to_dict()
                rows.append((kind, d1, d2, r, m, rd["norm_kind"],
                             rd["n_samples"], rd["kappa1_hat"],
                             rd["kappa2_hat"], rd["kappa3_hat"], rd["rho_hat"],
                             rd["mu_hat"], rd["L_hat"]))

    name = config["name"]
    meta = io.meta_lines(config, _version)
    csv_path = io.write_csv(
        f"{out_dir}/{name}_rip.csv",
        ["kind", "d1", "d2", "r", "m", "norm_kind", "n_samples", "kappa1_hat",
         "kappa2_hat", "kappa3_hat", "rho_hat", "mu_hat", "L_hat"],
        rows, meta)
    return {"csv": csv_path, "rows": rows}
