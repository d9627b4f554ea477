"""Exact monomer-dimer series: amplitude recursion, lambda_d(p), and a convergence certificate."""
from .certifier import Certificate, certify, certify_membership, empirical_contraction, eps_max, p0
from .fixpoint import (
    AlphaNumeric,
    AlphaSymbolic,
    apply_master1_numeric,
    apply_master1_symbolic,
    iterate_numeric,
    iterate_to_stability,
    support_check,
)
from .formal_series import BiSeries, Rat
from .kernels import ATable, KernelTable, derived_kernels, paper_a_table, solve_from_a_table
from .lambda_series import LambdaExpansion, a_table, assemble_symbolic, c_table, eval_numeric, s_eval
from .oracle import LatticeSpec, count_matchings, finite_lambda, lambda1_exact

__all__ = [
    "ATable", "AlphaNumeric", "AlphaSymbolic", "BiSeries", "Certificate", "KernelTable",
    "LambdaExpansion", "LatticeSpec", "Rat", "a_table", "apply_master1_numeric",
    "apply_master1_symbolic", "assemble_symbolic", "c_table", "certify", "certify_membership",
    "count_matchings", "derived_kernels", "empirical_contraction", "eps_max", "eval_numeric",
    "finite_lambda", "iterate_numeric", "iterate_to_stability", "lambda1_exact",
    "paper_a_table", "p0", "s_eval", "solve_from_a_table", "support_check",
]
