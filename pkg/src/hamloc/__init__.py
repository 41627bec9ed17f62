"""Localization certificates and Nystrom solutions for Hammerstein systems."""
from .certify import (Certificate, LocalizationSpec, MultiplicitySpec, certify_H5, certify_H6, certify_H7,
                      certify_H8, certify_multiplicity, certify_th_Ham, certify_th_Ham2)
from .expr import Box3, SamplingPolicy, bound_on_box, evaluate, parse
from .kernels import (CONE_K1, CONE_K2, K1, K2, ConeData, GridSpec, Kernel, compute_cone_constant, eval_k1,
                      eval_k2, verify_upper_envelope)
from .operators import (GridFunction, Problem, apply_T1, apply_T2, bvp_residual, cone_margin_K1, cone_margin_K2,
                        min_on_window, residual, sup_norm)
from .quadrature import kernel_profile, make_rule, profile_extrema
from .solve import SolveParams, check_localization, default_initial_guess, newton_nystrom, picard, solve

__all__ = [name for name in dir() if not name.startswith("_")]
