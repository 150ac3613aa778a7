"""Experiment harness: config-driven runs, CSV/SVG artifacts, and the CLI."""

from .config import ConfigError, load_config, validate_config
from .experiments import (build_instance, run_convergence, run_phase_transition,
                          run_rip_audit, run_solver, run_tolerance_sweep)
