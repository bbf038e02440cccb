"""Numerical laboratory for Zeno product formulas and their limits."""
__version__ = "0.1.0"

from .linalg import (HermitianOperator, OrthogonalProjection, apply_spectral_fn, hermitian_eig,
                     matrix_exp_general, operator_sqrt, validate_projection)
from .operators import (GridSpec, ProjectionFamily, build_discrete_laplacian, build_indicator_projection,
                        build_multiplication_operator, build_projection_family, build_random_hermitian,
                        build_random_projection, build_rank_r_projection, interval_grid, square_grid)
from .zeno import (EvolutionTrace, Sampling, Shape, TimeGrid, ZenoScheme, compute_HP, reference_evolve,
                   zeno_evolve)
from .reduced_evolution import (chernoff_gap, commutator, compute_F, compute_Hzeta, compute_S, decompose_BA,
                     nonsym_identity_residual, resolvent_S)
from .diagnostics import (ErrorMetrics, WeightFunction, convergence_sweep, error_metrics, l2loc_error,
                          phi_averaged_error, resolvent_convergence_probe, sup_error)
from .counterexample import scalar_zeno_trajectory, subsequence_limits, v_asymptotic, v_of_t
