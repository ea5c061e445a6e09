"""Numerical s-numbers of operators between finite-dimensional l_p spaces."""

from ._snum import (
    SnumError,
    __version__,
    brute_rank_approx,
    duality_report,
    injection_gap_study,
    operator_norm,
    profile,
    run_spec,
    s_number,
    shift_decompose,
)

__all__ = [
    "SnumError",
    "brute_rank_approx",
    "duality_report",
    "injection_gap_study",
    "operator_norm",
    "profile",
    "run_spec",
    "s_number",
    "shift_decompose",
]
