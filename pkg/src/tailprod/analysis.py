"""Joint-exceedance asymptotics for power products of independent factors.

For ``P(prod_j X_j**a_ij > c_i x for all i)`` the decay index and limit
constant follow from the exponent LP in :mod:`tailprod.lp`.  :func:`analyze`
checks every hypothesis needed for the closed-form limit, records the
outcome in a log, and assembles a :class:`TailReport`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .lp import (
    DualInfo,
    HypothesisError,
    PrimalSolution,
    RationalMatrix,
    UniquenessReport,
    dual_info,
    parse_rational,
    solve_primal,
)
from .marginals import Constant, Extended, MarginalModel, Pareto, rational_power

__all__ = [
    "HypothesisCheck",
    "HypothesisViolation",
    "InfiniteMoment",
    "ProblemSpec",
    "TailAnalysisError",
    "TailReport",
    "analyze",
    "default_positivize_epsilon",
    "ext_mul",
    "limit_constant",
    "positivize",
    "rescale_column",
    "rescale_marginal",
]


@dataclass(frozen=True)
class ProblemSpec:
    A: RationalMatrix
    c: tuple[Fraction, ...]
    marginals: tuple[MarginalModel, ...]

    def __post_init__(self):
        c = tuple(parse_rational(v) for v in self.c)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "marginals", tuple(self.marginals))
        n, m = self.A.shape
        if len(c) != n:
            raise ValueError(f"c has {len(c)} entries but A has {n} rows")
        if len(self.marginals) != m:
            raise ValueError(f"{len(self.marginals)} marginals given but A has {m} columns")
        for i, ci in enumerate(c):
            if ci <= 0:
                raise ValueError(f"threshold c[{i}] = {ci} must be positive")
        for j, mod in enumerate(self.marginals):
            if not isinstance(mod, (Pareto, Constant)):
                raise TypeError(f"marginal {j} is not a supported model: {mod!r}")

    @property
    def n(self) -> int:
        return self.A.rows

    @property
    def m(self) -> int:
        return self.A.cols


@dataclass(frozen=True)
class HypothesisCheck:
    condition: str
    status: str  # "pass" | "fail" | "inconclusive"
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"


@dataclass(frozen=True)
class TailReport:
    spec: ProblemSpec
    primal: PrimalSolution
    dual: DualInfo
    kappa: tuple[Fraction, ...]
    kappa_hat: tuple[Fraction, ...]
    rv_index: Fraction
    beta: Mapping[int, Fraction]
    moment_values: Mapping[int, Extended]
    eps_max: Mapping[int, Extended]
    det_A_kappa: Fraction
    coefficient: Fraction
    constant_at_c: Extended
    hypothesis_log: tuple[HypothesisCheck, ...] = field(default=())

    @property
    def support(self) -> tuple[int, ...]:
        return self.dual.support

    @property
    def is_finite(self) -> bool:
        return not (isinstance(self.constant_at_c, float) and math.isinf(self.constant_at_c))

    @property
    def theorem_applies(self) -> bool:
        return all(h.passed for h in self.hypothesis_log)

    def normalizer(self, x: float) -> float:
        """``prod_{j: kappa_j > 0} P(X_j > x**kappa_j)``."""
        out = 1.0
        for j in self.support:
            out *= float(self.spec.marginals[j].survival(float(x) ** float(self.kappa[j])))
        return out


class TailAnalysisError(Exception):
    def __init__(self, message, log=(), primal=None, uniqueness=None, report=None):
        super().__init__(message)
        self.log = tuple(log)
        self.primal = primal
        self.uniqueness = uniqueness
        self.report = report


class HypothesisViolation(TailAnalysisError):
    """The closed-form limit does not apply to this problem."""


class InfiniteMoment(TailAnalysisError):
    """Hypotheses hold but some required moment is infinite (limit is +inf)."""


def ext_mul(*values: Extended) -> Extended:
    """Product in [0, inf]; stays a Fraction while every factor is one."""
    if any(isinstance(v, float) and math.isinf(v) for v in values):
        return math.inf
    out: Extended = Fraction(1)
    for v in values:
        out = out * v
    return out


def _eps_max(model: MarginalModel, beta: Fraction) -> Extended:
    # support in [1, inf): lower moments never blow up
    if isinstance(model, Constant):
        return math.inf
    return model.alpha - beta if beta < model.alpha else Fraction(0)


def analyze(spec: ProblemSpec, *, budget: int | None = None, allow_infinite: bool = False) -> TailReport:
    """Solve the exponent LP, check hypotheses and evaluate the limit constant.

    Raises :class:`HypothesisViolation` when the closed form does not apply
    and :class:`InfiniteMoment` when it applies but equals +inf (unless
    ``allow_infinite``).  Both carry the hypothesis log; the report is
    attached whenever the dual data could be computed.
    """
    A = spec.A
    n, m = A.shape
    log: list[HypothesisCheck] = []
    sol = solve_primal(A, budget=budget)
    if sol.status != "optimal":
        detail = "no x >= 0 with A x >= 1"
        if sol.infeasible_row is not None:
            detail += f"; row {sol.infeasible_row + 1} has no positive entry"
        log.append(HypothesisCheck("lp_feasible", "fail", detail))
        raise HypothesisViolation("linear program is infeasible", log, sol)
    log.append(HypothesisCheck("lp_feasible", "pass", f"optimal value {sol.objective}"))

    uq: UniquenessReport = sol.uniqueness
    if uq.unique is True:
        log.append(HypothesisCheck("unique_optimum", "pass", f"certified by {uq.method}"))
    elif uq.unique is False:
        wit = "; ".join("(" + ", ".join(str(v) for v in w) + ")" for w in uq.witnesses)
        log.append(HypothesisCheck("unique_optimum", "fail", f"optimal solution not unique; witnesses {wit}"))
    else:
        log.append(HypothesisCheck("unique_optimum", "inconclusive", uq.reason))

    npos = len(sol.support)
    log.append(
        HypothesisCheck(
            "non_degenerate",
            "pass" if sol.is_nondegenerate else "fail",
            f"{npos} positive components for {n} rows",
        )
    )
    log.append(HypothesisCheck("rows_le_cols", "pass" if n <= m else "fail", f"n={n}, m={m}"))

    if uq.unique is not True or not sol.is_nondegenerate:
        failed = [h.condition for h in log if not h.passed]
        msg = "theorem hypotheses fail: " + ", ".join(failed)
        if uq.unique is False:
            msg = "optimal solution not unique; " + msg
        raise HypothesisViolation(msg, log, sol, uq)

    dual = dual_info(A, sol)
    support = dual.support
    log.append(HypothesisCheck("a_kappa_invertible", "pass", f"det = {dual.det_A_kappa}"))

    row = A.vecmat(dual.kappa_hat)
    beta = {j: row[j] for j in range(m) if j not in support}
    bad_beta = [j for j, b in beta.items() if not b < 1]
    if bad_beta:
        raise AssertionError(f"certified optimum with beta >= 1 at columns {bad_beta}")

    for j in support:
        mod = spec.marginals[j]
        ok = mod.is_index_minus_one
        log.append(
            HypothesisCheck(
                f"regular_variation_index_-1[x{j + 1}]",
                "pass" if ok else "fail",
                f"{mod} on a column with kappa = {sol.kappa[j]}",
            )
        )

    moments: dict[int, Extended] = {}
    eps: dict[int, Extended] = {}
    for j, b in beta.items():
        mod = spec.marginals[j]
        moments[j] = mod.moment(b)
        eps[j] = _eps_max(mod, b)
        log.append(
            HypothesisCheck(
                f"moment_condition[x{j + 1}]",
                "pass" if eps[j] > 0 else "fail",
                f"E(X^{b}) = {moments[j]} for {mod}; eps_max = {eps[j]}",
            )
        )

    prod_hat = Fraction(1)
    for k in dual.kappa_hat:
        prod_hat *= k
    coefficient = 1 / (abs(dual.det_A_kappa) * prod_hat)
    partial = dict(
        spec=spec,
        primal=sol,
        dual=dual,
        kappa=sol.kappa,
        kappa_hat=dual.kappa_hat,
        rv_index=-sol.objective,
        beta=beta,
        moment_values=moments,
        eps_max=eps,
        det_A_kappa=dual.det_A_kappa,
        coefficient=coefficient,
        hypothesis_log=tuple(log),
    )
    report = TailReport(constant_at_c=Fraction(0), **partial)
    report = TailReport(constant_at_c=limit_constant(report, spec.c), **partial)

    rv_fail = [h.condition for h in log if h.condition.startswith("regular_variation") and not h.passed]
    if rv_fail:
        raise HypothesisViolation(
            "factors with positive kappa must be regularly varying with index -1: "
            + ", ".join(rv_fail),
            log,
            sol,
            uq,
            report,
        )
    if not report.is_finite and not allow_infinite:
        cols = ", ".join(f"x{j + 1}" for j, v in moments.items() if v == math.inf)
        raise InfiniteMoment(f"limit constant is +inf: infinite moment at {cols}", log, sol, uq, report)
    return report


def limit_constant(report: TailReport, c: Sequence) -> Extended:
    """Limit measure of the rectangle ``prod_i (c_i, inf)`` without re-solving the LP."""
    c = [parse_rational(v) for v in c]
    if len(c) != len(report.kappa_hat):
        raise ValueError(f"expected {len(report.kappa_hat)} thresholds, got {len(c)}")
    if any(v <= 0 for v in c):
        raise ValueError("thresholds must be positive")
    powers = [rational_power(ci, -k) for ci, k in zip(c, report.kappa_hat)]
    return ext_mul(report.coefficient, *powers, *report.moment_values.values())


def rescale_column(A: RationalMatrix, j: int, s) -> RationalMatrix:
    """Exponent matrix after substituting ``X_j -> X_j**s`` (column j divided by s)."""
    s = parse_rational(s)
    if s == 0:
        raise ValueError("scale must be nonzero")
    if not 0 <= j < A.cols:
        raise IndexError(f"column {j} out of range")
    return RationalMatrix(
        tuple(tuple(v / s if k == j else v for k, v in enumerate(row)) for row in A.entries)
    )


def rescale_marginal(model: MarginalModel, s) -> MarginalModel:
    """Law of ``X**s`` for positive s, within the supported families."""
    s = parse_rational(s)
    if s <= 0:
        raise ValueError("only positive powers keep the support in [1, inf)")
    if isinstance(model, Pareto):
        return Pareto(model.alpha / s)
    v = rational_power(model.value, s)
    if not isinstance(v, Fraction):
        raise ValueError(f"{model}^{s} is not a rational constant")
    return Constant(v)


def default_positivize_epsilon(A: RationalMatrix, kappa: Sequence[Fraction]) -> Fraction:
    J = [j for j, v in enumerate(kappa) if v > 0]
    base = -min(A[i, j] for i in range(A.rows) for j in J)
    return max(abs(base) / 10, Fraction(1, 100))


def positivize(A: RationalMatrix, kappa, kappa_hat, epsilon=None) -> RationalMatrix:
    """Equivalent-bound matrix whose columns with positive kappa are all positive.

    Uses ``(a_ij + a_min (A^T kappa_hat)_j) / (1 + a_min sum(kappa))`` with
    ``a_min = -min_{i, kappa_j > 0} a_ij + epsilon``.  Returns A unchanged if
    those columns are already positive.
    """
    kappa = tuple(parse_rational(v) for v in kappa)
    kappa_hat = tuple(parse_rational(v) for v in kappa_hat)
    n, m = A.shape
    if len(kappa) != m or len(kappa_hat) != n:
        raise HypothesisError("kappa must have one entry per column, kappa_hat one per row")
    if any(v < 0 for v in kappa) or any(v < 0 for v in kappa_hat):
        raise HypothesisError("kappa and kappa_hat must be nonnegative")
    Ak = A.matvec(kappa)
    if any(v < 1 for v in Ak):
        raise HypothesisError("kappa is not primal feasible (A kappa >= 1 fails)")
    At = A.vecmat(kappa_hat)
    if any(v > 1 for v in At):
        raise HypothesisError("kappa_hat is not dual feasible (A^T kappa_hat <= 1 fails)")
    if sum(kappa) != sum(kappa_hat):
        raise HypothesisError(
            f"objectives differ (sum kappa = {sum(kappa)}, sum kappa_hat = {sum(kappa_hat)}); "
            "not a primal/dual optimal pair"
        )
    J = [j for j in range(m) if kappa[j] > 0]
    if not all(At[j] == 1 for j in J):
        raise HypothesisError("complementary slackness fails on the support of kappa")
    if all(A[i, j] > 0 for i in range(n) for j in J):
        return A
    if epsilon is None:
        epsilon = default_positivize_epsilon(A, kappa)
    epsilon = parse_rational(epsilon)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    a_min = -min(A[i, j] for i in range(n) for j in J) + epsilon
    denom = 1 + a_min * sum(kappa)
    return RationalMatrix(
        tuple(tuple((A[i, j] + a_min * At[j]) / denom for j in range(m)) for i in range(n))
    )
