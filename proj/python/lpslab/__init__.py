"""Littlewood-Paley square functionals on finite weighted graphs.

Thin re-export of the compiled core. Build the project with CMake (or
scikit-build-core) so that the `_core` extension is importable, e.g. by
adding the build directory to PYTHONPATH.
"""

from lpslab._core import (
    InvalidInput,
    Manifold,
    NumericalGuard,
    Operator,
    assemble,
    compute_p0,
    conical_g,
    conical_g_forms,
    cz_decompose,
    d_op,
    dstar_op,
    gaussian_fit,
    hodge_assemble,
    horizontal_s,
    lp_norm,
    maximal_function,
    poisson_p,
    ratio_search,
    run_scenario,
    s_phi0,
    scenario_names,
    subcriticality_alpha,
    vertical_h,
    weak_lp,
)

__all__ = [
    "InvalidInput",
    "Manifold",
    "NumericalGuard",
    "Operator",
    "assemble",
    "compute_p0",
    "conical_g",
    "conical_g_forms",
    "cz_decompose",
    "d_op",
    "dstar_op",
    "gaussian_fit",
    "hodge_assemble",
    "horizontal_s",
    "lp_norm",
    "maximal_function",
    "poisson_p",
    "ratio_search",
    "run_scenario",
    "s_phi0",
    "scenario_names",
    "subcriticality_alpha",
    "vertical_h",
    "weak_lp",
]

__version__ = "0.1.0"
