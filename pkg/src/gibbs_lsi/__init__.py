"""Numerical laboratory for Gibbs measures of the focusing NLS on the torus.

Spectral Gaussian sampling, cutoff Gibbs weights, Hessian convexity scans
with Bakry-Emery log-Sobolev bounds, a two-sided single-mode bracket,
variational (stochastic-control) benchmarks, and the dyadic blow-up scan.
"""

from .boue_dupuis import (BdObjective, DriftPath, LinearPotential,
                          OptimizerConfig, SmoothedPotential, SoftPotential,
                          TimeGrid, TransferReport, bd_objective, bd_optimize,
                          epsilon_optimizer_transfer, exact_linear_optimizer,
                          simulate_y, simulate_y_block)
from .dim2 import BracketResult, Dim2Measure, GridTooSmallError, lsi_bracket
from .experiments import (ExperimentReport, ScalingFamily, blowup_scan,
                          convexity_scan, estimate_v_t, hessian_of_v_check,
                          lsi_bracket_dim2, v_t_scan)
from .hessian import (NO_BOUND, HessianReport, bakry_emery_bound,
                      dense_hessian_matrix, grad_H, hessian_apply_exact,
                      hessian_form_exact, hessian_form_majorant, lambda_star,
                      min_eigenvalue, reg_hamiltonian, sobolev_chain_constant)
from .mc import (ChainConfig, DegenerateSampleError, McEstimate,
                 chain_estimate, estimate_ratio_custom, estimate_reweighted,
                 log_partition, log_partition_multi, pcn_chain,
                 tv_discrepancy)
from .measures import (GibbsParams, MixtureProposal, field_from_bytes,
                       field_from_csv_row, field_to_bytes, field_to_csv_row,
                       hamiltonian, make_log_weight_polynomial,
                       make_log_weight_sharp, make_log_weight_smoothed,
                       make_log_weight_soft, mass, mass_tilted_mixture,
                       mu_proposal, sample_mu, sample_mu_bar,
                       sample_mu_bar_block, sample_mu_block,
                       shifted_spread_mixture)
from .rng import RngStream
from .spectral import (SpectralField, SpectralSpace, japanese_bracket,
                       lp_norm_p, project, real_inner, sobolev_norms)

__version__ = "0.1.0"
