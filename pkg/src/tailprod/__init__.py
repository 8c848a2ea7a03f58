"""Tail asymptotics of joint exceedances of random power products.

``P(prod_j X_j**a_ij > c_i x, i = 1..n)`` for independent heavy-tailed
factors decays like ``x**index`` with an index and limit constant read off
an exact linear program in the exponent matrix ``A``.
"""

from .analysis import (
    HypothesisCheck,
    HypothesisViolation,
    InfiniteMoment,
    ProblemSpec,
    TailAnalysisError,
    TailReport,
    analyze,
    limit_constant,
    positivize,
    rescale_column,
    rescale_marginal,
)
from .lp import (
    BudgetExceeded,
    DualInfo,
    PrimalSolution,
    RationalMatrix,
    UniquenessReport,
    certify_uniqueness,
    dual_info,
    enumerate_vertices,
    lemma42_epsilon,
    solve_primal,
)
from .marginals import Constant, Pareto, moment, sample, survival
from .verification import (
    SimulationConfig,
    SimulationResult,
    estimate_ratio,
    exact_prob,
    oracle_curve,
    slope_fit,
)

__version__ = "0.1.0"
