"""Nonsmooth composite formulations and solvers for low-rank matrix recovery."""

from . import composite, operators, penalties, points, problems, proxsub, regularity, solvers
from ._rng import child_seed, rng_from
from .composite import (ProblemInstance, model_value, objective, recovered_matrix,
                        rel_error, residual, smooth_gradient, subgradient)
from .operators import (MeasurementEnsemble, Observation, AdditiveGaussian,
                        ReplaceGaussian, ScaledNoise, adjoint, apply,
                        explicit_ensemble, make_ensemble, observe)
from .points import AsymPoint, FactorSparsePoint, Point, SymPoint
from .proxsub import (Box, Quadratic, QuadPlusLinear, RowBall, RowNormSquared,
                      RpcaEuclidean, Unconstrained, project, prox_row_norm,
                      solve_subproblem)
from .regularity import (RegularityReport, dist_procrustes, dist_orbit,
                         estimate_approx_modulus, estimate_lipschitz,
                         estimate_outlier_margin, estimate_rip,
                         estimate_sharpness, rank1_l1_sharpness_check,
                         rank_r_l1_sharpness_probe, rpca_cross_term_check)
from .solvers import (SolveTrace, SolverConfig, geometric, gradient_descent,
                      initialize, polyak, prox_linear)

__version__ = "0.1.0"
