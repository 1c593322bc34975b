"""Cuckoo hashing with pages: primary-page cell choices plus a backup page.

Core pieces: deterministic MT19937 randomness (`Rng`), random paged
cuckoo graphs (`Config`, `generate`), an optimal offline placement solver
(`solve`), an online random-walk table (`PagedTable`), per-page Bloom
filters, analysis helpers, and reproducible experiment drivers with a CLI.
"""

from .analysis import (
    C_STAR_2L_OVER_L,
    C_STAR_3,
    C_STAR_4,
    FitRefusedError,
    SigmoidFit,
    SignificanceBound,
    TrialOutcome,
    TrialStats,
    aggregate,
    expected_page_requests,
    fit_sigmoid,
    poisson_success_estimate,
    significance_bound,
    sigmoid,
    unsuccessful_search_requests,
)
from .filters import PageFilters
from .graph import Config, CuckooGraph, KeyChoices, draw_choices, dump_graph, generate, load_graph, page_of
from .offline_solver import UNPLACED, Placement, SolverState, residual_cost, solve, solve_raw
from .paged_table import InsertResult, LookupResult, PagedTable, WalkParams, dump_trace
from .rng import Rng, derive_seed

__version__ = "0.1.0"

__all__ = [
    "C_STAR_2L_OVER_L",
    "C_STAR_3",
    "C_STAR_4",
    "Config",
    "CuckooGraph",
    "FitRefusedError",
    "InsertResult",
    "KeyChoices",
    "LookupResult",
    "PageFilters",
    "PagedTable",
    "Placement",
    "Rng",
    "SigmoidFit",
    "SignificanceBound",
    "SolverState",
    "TrialOutcome",
    "TrialStats",
    "UNPLACED",
    "WalkParams",
    "aggregate",
    "derive_seed",
    "draw_choices",
    "dump_graph",
    "dump_trace",
    "expected_page_requests",
    "fit_sigmoid",
    "generate",
    "load_graph",
    "page_of",
    "poisson_success_estimate",
    "residual_cost",
    "significance_bound",
    "sigmoid",
    "solve",
    "solve_raw",
    "unsuccessful_search_requests",
    "__version__",
]
