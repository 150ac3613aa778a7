"""Experiment configuration: one JSON document, validated fail-fast.

Unknown keys are errors (typos must not silently change an experiment), and
every diagnostic names the offending field path.
"""

from __future__ import annotations

import json

EXPERIMENTS = ("convergence", "phase-transition", "rip-audit", "tolerance-sweep")

PROBLEM_KINDS = ("gaussian-sensing", "quadratic-I", "quadratic-II", "bilinear",
                 "matrix-completion", "rpca-l1", "rpca-euclidean")

SOLVERS = ("polyak", "geometric", "prox-linear", "gradient-descent")

_TOP_KEYS = {"experiment", "name", "problem", "solver", "init_delta", "trials",
             "base_seed", "rip"}
_PROBLEM_KEYS = {"kind", "kind_list", "d1", "d2", "r", "r_list", "m",
                 "m_multiplier", "m_multiplier_list", "p", "p_list", "p_fail",
                 "p_fail_list", "tau", "tau_list", "outlier_model",
                 "dense_noise_deltas", "penalty", "nu", "sparsity", "sigma",
                 "radius_factor", "delta"}
_SOLVER_KEYS = {"name", "max_iters", "stop_rel_error", "record_every", "lam",
                "q", "beta", "beta_samples", "gamma", "a", "b", "epsilon",
                "eta", "step_rule", "min_f", "subproblem_tol",
                "subproblem_max_iter"}
_OUTLIER_KEYS = {"name", "sigma"}
_RIP_KEYS = {"n_samples", "norm_kind", "radius", "p_fail", "with_instance",
             "approx_pairs"}


class ConfigError(Exception):
    """Invalid or unreadable experiment configuration."""


def _check_keys(section: dict, allowed: set, path: str):
    if not isinstance(section, dict):
        raise ConfigError(f"{path}: expected an object, got {type(section).__name__}")
    for key in section:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown key")


def _require(cond, message):
    if not cond:
        raise ConfigError(message)


def validate_config(cfg: dict) -> dict:
    """Validate and normalize a parsed configuration document."""
    _check_keys(cfg, _TOP_KEYS, "config")
    experiment = cfg.get("experiment")
    _require(experiment in EXPERIMENTS,
             f"config.experiment: must be one of {EXPERIMENTS}, got {experiment!r}")
    _require("problem" in cfg, "config.problem: required")
    problem = cfg["problem"]
    _check_keys(problem, _PROBLEM_KEYS, "config.problem")

    kinds = problem.get("kind_list", [problem.get("kind")])
    for kind in kinds:
        _require(kind in PROBLEM_KINDS,
                 f"config.problem.kind: must be one of {PROBLEM_KINDS}, got {kind!r}")
    _require(isinstance(problem.get("d1"), int) and problem["d1"] >= 1,
             "config.problem.d1: positive integer required")

    if "outlier_model" in problem:
        om = problem["outlier_model"]
        _check_keys(om, _OUTLIER_KEYS, "config.problem.outlier_model")
        _require(om.get("name") in ("additive-gaussian", "replace-gaussian", "none"),
                 "config.problem.outlier_model.name: unknown model")

    for key in ("r_list", "p_list", "p_fail_list", "tau_list",
                "m_multiplier_list", "dense_noise_deltas", "kind_list"):
        if key in problem:
            _require(isinstance(problem[key], list) and len(problem[key]) > 0,
                     f"config.problem.{key}: nonempty list required")

    if experiment in ("convergence", "phase-transition", "tolerance-sweep"):
        _require("solver" in cfg, "config.solver: required for this experiment")
    if "solver" in cfg:
        solver = cfg["solver"]
        _check_keys(solver, _SOLVER_KEYS, "config.solver")
        _require(solver.get("name") in SOLVERS,
                 f"config.solver.name: must be one of {SOLVERS}, got "
                 f"{solver.get('name')!r}")
        if "q" in solver:
            _require(0.0 < solver["q"] < 1.0, "config.solver.q: needs 0 < q < 1")
        if "step_rule" in solver:
            _require(solver["step_rule"] in ("constant", "polyak"),
                     "config.solver.step_rule: constant or polyak")

    if "rip" in cfg:
        _check_keys(cfg["rip"], _RIP_KEYS, "config.rip")
        nk = cfg["rip"].get("norm_kind", "scaled-l1")
        _require(nk in ("scaled-l1", "scaled-l2"),
                 "config.rip.norm_kind: scaled-l1 or scaled-l2")

    trials = cfg.get("trials", 50)
    _require(isinstance(trials, int) and trials >= 1,
             "config.trials: integer >= 1 required")

    if experiment == "phase-transition":
        axes = [k for k in ("p_fail_list", "p_list", "tau_list") if k in problem]
        _require(len(axes) == 1,
                 "config.problem: phase-transition needs exactly one of "
                 "p_fail_list, p_list, tau_list")
        _require("r_list" in problem,
                 "config.problem.r_list: required for phase-transition")
    if experiment == "tolerance-sweep":
        _require("dense_noise_deltas" in problem,
                 "config.problem.dense_noise_deltas: required for tolerance-sweep")

    normalized = dict(cfg)
    normalized.setdefault("name", experiment)
    normalized.setdefault("trials", 50)
    normalized.setdefault("base_seed", 0)
    normalized.setdefault("init_delta", 0.5)
    return normalized


def load_config(path: str) -> dict:
    """Read, parse, and validate a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})") from exc
    return validate_config(cfg)
