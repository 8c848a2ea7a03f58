"""Exact rational linear programming for the power-product exponent problem.

The central program is

    minimize  sum_j x_j   subject to  A x >= 1,  x >= 0,

solved on its standard form ``[A | -I] s = 1, s >= 0`` with a two-phase
simplex method using Bland's rule.  Every quantity is a
:class:`fractions.Fraction`, so equalities such as ``A kappa = 1`` and strict
signs of reduced costs are decided exactly.

Column indices are 0-based throughout: standard-form columns ``0..m-1`` are
the structural variables, ``m..m+n-1`` the surplus variables.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

__all__ = [
    "BudgetExceeded",
    "DEFAULT_ENUM_BUDGET",
    "DualInfo",
    "HypothesisError",
    "PrimalSolution",
    "RationalMatrix",
    "UniquenessReport",
    "Vertex",
    "certify_uniqueness",
    "default_budget",
    "determinant",
    "dual_info",
    "enumerate_vertices",
    "format_rational",
    "lemma42_epsilon",
    "parse_rational",
    "solve_linear",
    "solve_primal",
]

DEFAULT_ENUM_BUDGET = 100_000
ENUM_BUDGET_ENV = "TAILPROD_ENUM_BUDGET"


class BudgetExceeded(RuntimeError):
    """Basis enumeration would exceed the configured budget."""

    def __init__(self, required: int, budget: int):
        super().__init__(
            f"vertex enumeration needs {required} bases, budget is {budget}"
        )
        self.required = required
        self.budget = budget


class HypothesisError(ValueError):
    """An operation was called on a solution that fails its preconditions."""


def default_budget() -> int:
    raw = os.environ.get(ENUM_BUDGET_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_ENUM_BUDGET
    budget = int(raw)
    if budget < 1:
        raise ValueError(f"{ENUM_BUDGET_ENV} must be positive, got {raw!r}")
    return budget


# --------------------------------------------------------------------------
# rationals and matrices
# --------------------------------------------------------------------------


def parse_rational(value) -> Fraction:
    """Convert an int, Fraction or ``"p/q"`` string to a Fraction.

    Floats are refused: a binary float silently turns ``0.1`` into a
    55-bit fraction, which defeats exact certification.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not text:
            raise ValueError("empty rational string")
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational: {value!r}") from exc
    raise TypeError(f"expected int, Fraction or 'p/q' string, got {type(value).__name__}")


def format_rational(q: Fraction) -> str:
    return str(q)


@dataclass(frozen=True)
class RationalMatrix:
    """Dense n x m matrix of exact rationals."""

    entries: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        if len(self.entries) < 1:
            raise ValueError("matrix needs at least one row")
        width = len(self.entries[0])
        if width < 1:
            raise ValueError("matrix needs at least one column")
        for i, row in enumerate(self.entries):
            if len(row) != width:
                raise ValueError(
                    f"row {i} has {len(row)} entries, expected {width} (matrix not rectangular)"
                )
            for v in row:
                if not isinstance(v, Fraction):
                    raise TypeError("entries must be Fractions; use RationalMatrix.of()")

    @classmethod
    def of(cls, rows: Iterable[Iterable]) -> "RationalMatrix":
        return cls(tuple(tuple(parse_rational(v) for v in row) for row in rows))

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def __getitem__(self, ij: tuple[int, int]) -> Fraction:
        i, j = ij
        return self.entries[i][j]

    def column(self, j: int) -> tuple[Fraction, ...]:
        return tuple(row[j] for row in self.entries)

    def columns(self, idx: Sequence[int]) -> "RationalMatrix":
        return RationalMatrix(tuple(tuple(row[j] for j in idx) for row in self.entries))

    def transpose(self) -> "RationalMatrix":
        return RationalMatrix(tuple(zip(*self.entries)))

    def matvec(self, x: Sequence[Fraction]) -> tuple[Fraction, ...]:
        if len(x) != self.cols:
            raise ValueError("dimension mismatch")
        return tuple(sum((a * b for a, b in zip(row, x)), Fraction(0)) for row in self.entries)

    def vecmat(self, y: Sequence[Fraction]) -> tuple[Fraction, ...]:
        """Row vector times matrix, ``y^T A``."""
        if len(y) != self.rows:
            raise ValueError("dimension mismatch")
        return tuple(
            sum((y[i] * self.entries[i][j] for i in range(self.rows)), Fraction(0))
            for j in range(self.cols)
        )

    def tolist(self) -> list[list[Fraction]]:
        return [list(row) for row in self.entries]

    def to_strings(self) -> list[list[str]]:
        return [[format_rational(v) for v in row] for row in self.entries]

    def __str__(self) -> str:
        cells = self.to_strings()
        width = max(len(c) for row in cells for c in row)
        return "\n".join("[" + " ".join(c.rjust(width) for c in row) + "]" for row in cells)


def _gauss(M: list[list[Fraction]], rhs: list[list[Fraction]] | None):
    """In-place Gauss-Jordan on M (square).  Returns (det, solved rhs) or (0, None)."""
    n = len(M)
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return Fraction(0), None
        if piv != col:
            M[col], M[piv] = M[piv], M[col]
            if rhs is not None:
                rhs[col], rhs[piv] = rhs[piv], rhs[col]
            det = -det
        p = M[col][col]
        det *= p
        inv = 1 / p
        M[col] = [v * inv for v in M[col]]
        if rhs is not None:
            rhs[col] = [v * inv for v in rhs[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
                if rhs is not None:
                    rhs[r] = [a - f * b for a, b in zip(rhs[r], rhs[col])]
    return det, rhs


def determinant(M: Sequence[Sequence[Fraction]]) -> Fraction:
    det, _ = _gauss([list(r) for r in M], None)
    return det


def solve_linear(M: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> tuple[Fraction, ...] | None:
    """Solve ``M x = b`` exactly; ``None`` when M is singular."""
    det, sol = _gauss([list(r) for r in M], [[v] for v in b])
    if det == 0:
        return None
    return tuple(r[0] for r in sol)


# --------------------------------------------------------------------------
# generic two-phase simplex (standard form, Bland's rule)
# --------------------------------------------------------------------------


@dataclass
class _LPResult:
    status: str
    x: tuple[Fraction, ...] = ()
    basis: tuple[int, ...] = ()
    objective: Fraction | None = None
    # reduced costs of every original column at the final basis
    reduced: tuple[Fraction, ...] = ()
    pivots: int = 0


def _pivot(T: list[list[Fraction]], r: int, c: int) -> None:
    row = T[r]
    p = row[c]
    if p != 1:
        inv = 1 / p
        row = [v * inv for v in row]
        T[r] = row
    for k, other in enumerate(T):
        if k != r:
            f = other[c]
            if f != 0:
                T[k] = [a - f * b for a, b in zip(other, row)]


def _bland(T, basis, allowed: int) -> tuple[str, int]:
    """Minimize the objective stored in the last row of T (reduced costs, -z in rhs).

    ``allowed`` bounds the column indices eligible to enter.
    """
    pivots = 0
    nrow = len(T) - 1
    while True:
        obj = T[-1]
        enter = next((j for j in range(allowed) if obj[j] < 0), None)
        if enter is None:
            return "optimal", pivots
        best = None
        for i in range(nrow):
            a = T[i][enter]
            if a > 0:
                key = (T[i][-1] / a, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            return "unbounded", pivots
        leave = best[1]
        _pivot(T, leave, enter)
        basis[leave] = enter
        pivots += 1


def _simplex(A_eq: Sequence[Sequence[Fraction]], b: Sequence[Fraction], c: Sequence[Fraction]) -> _LPResult:
    """Minimize c^T x subject to A_eq x = b, x >= 0, exactly."""
    nrow = len(A_eq)
    ncol = len(c)
    rows = []
    rhs = []
    for row, bi in zip(A_eq, b):
        if bi < 0:
            rows.append([-v for v in row])
            rhs.append(-bi)
        else:
            rows.append(list(row))
            rhs.append(bi)
    # phase one: artificials ncol..ncol+nrow-1
    T = []
    for i in range(nrow):
        art = [Fraction(0)] * nrow
        art[i] = Fraction(1)
        T.append(rows[i] + art + [rhs[i]])
    phase1 = [Fraction(0)] * (ncol + nrow + 1)
    for i in range(nrow):
        for k in range(ncol):
            phase1[k] -= T[i][k]
        phase1[-1] -= T[i][-1]
    T.append(phase1)
    basis = list(range(ncol, ncol + nrow))
    status, pivots = _bland(T, basis, ncol + nrow)
    if status != "optimal":
        raise RuntimeError("phase one cannot be unbounded")
    if T[-1][-1] != 0:
        return _LPResult("infeasible", pivots=pivots)

    # drive zero-level artificials out of the basis, dropping redundant rows
    i = 0
    while i < len(T) - 1:
        if basis[i] >= ncol:
            col = next((k for k in range(ncol) if T[i][k] != 0), None)
            if col is None:
                del T[i]
                del basis[i]
                continue
            _pivot(T, i, col)
            basis[i] = col
            pivots += 1
        i += 1

    # phase two on the structural columns only
    T = [row[:ncol] + [row[-1]] for row in T[:-1]]
    obj = [Fraction(v) for v in c] + [Fraction(0)]
    for i, bj in enumerate(basis):
        cb = obj[bj]
        if cb != 0:
            obj = [o - cb * t for o, t in zip(obj, T[i])]
    T.append(obj)
    status, more = _bland(T, basis, ncol)
    pivots += more
    if status == "unbounded":
        return _LPResult("unbounded", pivots=pivots)
    x = [Fraction(0)] * ncol
    for i, bj in enumerate(basis):
        x[bj] = T[i][-1]
    return _LPResult(
        "optimal",
        x=tuple(x),
        basis=tuple(basis),
        objective=-T[-1][-1],
        reduced=tuple(T[-1][:ncol]),
        pivots=pivots,
    )


# --------------------------------------------------------------------------
# the exponent program
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class UniquenessReport:
    """Outcome of :func:`certify_uniqueness`.

    ``unique`` is ``None`` when the question could not be settled within
    the enumeration budget.
    """

    unique: bool | None
    method: str
    witnesses: tuple[tuple[Fraction, ...], ...] = ()
    reason: str = ""

    @property
    def inconclusive(self) -> bool:
        return self.unique is None


@dataclass(frozen=True)
class PrimalSolution:
    status: str
    kappa: tuple[Fraction, ...] = ()
    basis: tuple[int, ...] = ()
    objective: Fraction | None = None
    is_unique: bool = False
    is_nondegenerate: bool = False
    tight_rows: frozenset[int] = frozenset()
    infeasible_row: int | None = None
    uniqueness: UniquenessReport | None = field(default=None, compare=False)

    @property
    def support(self) -> tuple[int, ...]:
        """Columns with strictly positive kappa."""
        return tuple(j for j, v in enumerate(self.kappa) if v > 0)


@dataclass(frozen=True)
class DualInfo:
    kappa_hat: tuple[Fraction, ...]
    reduced_costs: tuple[Fraction, ...]
    basis_inverse_row: tuple[Fraction, ...]
    support: tuple[int, ...]
    det_A_kappa: Fraction


@dataclass(frozen=True)
class Vertex:
    basis: tuple[int, ...]
    kappa: tuple[Fraction, ...]
    objective: Fraction


def _standard_form(A: RationalMatrix) -> list[list[Fraction]]:
    n, m = A.shape
    rows = []
    for i in range(n):
        surplus = [Fraction(0)] * n
        surplus[i] = Fraction(-1)
        rows.append(list(A.entries[i]) + surplus)
    return rows


def _nonpositive_row(A: RationalMatrix) -> int | None:
    for i, row in enumerate(A.entries):
        if all(v <= 0 for v in row):
            return i
    return None


def _reduced_cost_certificate(A: RationalMatrix, kappa, basis) -> tuple[bool, DualInfo | None]:
    """Sound sufficient test: non-degenerate basis with all non-basic reduced costs > 0."""
    n, m = A.shape
    support = tuple(j for j, v in enumerate(kappa) if v > 0)
    if len(support) != n or sorted(basis) != list(support):
        return False, None
    info = _dual_from_support(A, support)
    if info is None:
        return False, None
    nonbasic_x = [info.reduced_costs[j] for j in range(m) if j not in support]
    # surplus columns are all non-basic here; their reduced cost is kappa_hat_i
    ok = all(r > 0 for r in nonbasic_x) and all(k > 0 for k in info.kappa_hat)
    return ok, info


def _dual_from_support(A: RationalMatrix, support: Sequence[int]) -> DualInfo | None:
    n = A.rows
    Ak = A.columns(support)
    det = determinant(Ak.entries)
    if det == 0:
        return None
    # kappa_hat solves A_kappa^T y = 1
    y = solve_linear(Ak.transpose().entries, [Fraction(1)] * n)
    row = A.vecmat(y)
    reduced = tuple(1 - v for v in row)
    return DualInfo(
        kappa_hat=y,
        reduced_costs=reduced,
        basis_inverse_row=y,
        support=tuple(support),
        det_A_kappa=det,
    )


def solve_primal(A: RationalMatrix, *, budget: int | None = None) -> PrimalSolution:
    """Exact optimum of ``min sum(x)`` s.t. ``A x >= 1, x >= 0``.

    The returned ``kappa`` is a vertex.  ``is_unique`` is only set when
    uniqueness is proven (reduced-cost test, or enumeration within
    ``budget``).
    """
    n, m = A.shape
    bad = _nonpositive_row(A)
    if bad is not None:
        return PrimalSolution(status="infeasible", infeasible_row=bad)
    res = _simplex(_standard_form(A), [Fraction(1)] * n, [Fraction(1)] * m + [Fraction(0)] * n)
    if res.status == "infeasible":
        return PrimalSolution(status="infeasible")
    if res.status == "unbounded":
        raise AssertionError("objective is bounded below by 0; unbounded status is unreachable")
    kappa = res.x[:m]
    basis = tuple(sorted(res.basis))
    Akappa = A.matvec(kappa)
    positive = sum(1 for v in kappa if v > 0)
    nondeg = positive == n and all(res.x[b] > 0 for b in basis)
    base = PrimalSolution(
        status="optimal",
        kappa=kappa,
        basis=basis,
        objective=sum(kappa, Fraction(0)),
        is_nondegenerate=nondeg,
        tight_rows=frozenset(i for i, v in enumerate(Akappa) if v == 1),
    )
    report = certify_uniqueness(A, base, budget=budget)
    return PrimalSolution(
        status=base.status,
        kappa=base.kappa,
        basis=base.basis,
        objective=base.objective,
        is_unique=report.unique is True,
        is_nondegenerate=base.is_nondegenerate,
        tight_rows=base.tight_rows,
        uniqueness=report,
    )


def dual_info(A: RationalMatrix, sol: PrimalSolution) -> DualInfo:
    """Dual solution ``(A_kappa^{-1})^T 1`` and reduced costs at a non-degenerate optimum."""
    if sol.status != "optimal":
        raise HypothesisError(f"dual_info needs an optimal solution, got status {sol.status!r}")
    if not sol.is_nondegenerate:
        raise HypothesisError(
            f"dual_info needs a non-degenerate solution: {len(sol.support)} positive "
            f"components, {A.rows} rows"
        )
    info = _dual_from_support(A, sol.support)
    if info is None:
        raise HypothesisError("A_kappa is singular")
    return info


def certify_uniqueness(A: RationalMatrix, sol: PrimalSolution, *, budget: int | None = None) -> UniquenessReport:
    if sol.status != "optimal":
        raise HypothesisError("uniqueness is only defined for an optimal solution")
    ok, _ = _reduced_cost_certificate(A, sol.kappa, sol.basis)
    if ok:
        return UniquenessReport(True, "reduced_costs", (sol.kappa,))
    try:
        verts = enumerate_vertices(A, budget=budget)
    except BudgetExceeded as exc:
        return UniquenessReport(
            None,
            "inconclusive",
            (sol.kappa,),
            reason=f"reduced-cost test failed and {exc}",
        )
    best = min(v.objective for v in verts)
    optima = sorted({v.kappa for v in verts if v.objective == best})
    if best != sol.objective:
        raise AssertionError("simplex optimum disagrees with vertex enumeration")
    if len(optima) == 1:
        # a bounded optimal face with one vertex is that vertex
        return UniquenessReport(True, "enumeration", tuple(optima))
    return UniquenessReport(
        False,
        "enumeration",
        tuple(optima),
        reason=f"{len(optima)} distinct optimal vertices",
    )


def enumerate_vertices(A: RationalMatrix, *, budget: int | None = None) -> list[Vertex]:
    """All basic feasible solutions of ``[A | -I] s = 1, s >= 0``.

    Distinct bases may share a vertex under degeneracy; each basis is
    listed.  Raises :class:`BudgetExceeded` when there are more than
    ``budget`` candidate bases.
    """
    if budget is None:
        budget = default_budget()
    n, m = A.shape
    required = math.comb(m + n, n)
    if required > budget:
        raise BudgetExceeded(required, budget)
    S = _standard_form(A)
    out = []
    for basis in itertools.combinations(range(m + n), n):
        B = [[S[i][j] for j in basis] for i in range(n)]
        s = solve_linear(B, [Fraction(1)] * n)
        if s is None or any(v < 0 for v in s):
            continue
        full = [Fraction(0)] * (m + n)
        for j, v in zip(basis, s):
            full[j] = v
        kappa = tuple(full[:m])
        out.append(Vertex(basis, kappa, sum(kappa, Fraction(0))))
    return out


def lemma42_epsilon(A: RationalMatrix, sol: PrimalSolution, j: int) -> Fraction:
    """Largest epsilon with ``min_i sum_{k!=j} (a_ik/a_ij) x_k <= (1-eps) sum_{k!=j} x_k``.

    Equals ``1 - V`` where V maximizes ``min_i sum_k (a_ik/a_ij) x_k`` over
    the unit simplex in the coordinates ``k != j``; V is found as an exact LP
    in the variables (x, t+, t-, surplus).  ``j`` must lie in the support
    of ``sol``.
    """
    n, m = A.shape
    if not 0 <= j < m:
        raise IndexError(f"column {j} out of range for {m} columns")
    if len(sol.kappa) != m or sol.kappa[j] <= 0:
        raise HypothesisError(f"column {j} is not in the support of the primal solution")
    col = A.column(j)
    if any(v <= 0 for v in col):
        raise HypothesisError(
            f"column {j} must be strictly positive in every row (positivize first)"
        )
    others = [k for k in range(m) if k != j]
    if not others:
        # both sides of the inequality are empty sums
        return Fraction(1)
    d = len(others)
    # variables: x_0..x_{d-1}, t+, t-, s_0..s_{n-1}
    rows = []
    rhs = []
    for i in range(n):
        ratios = [A[i, k] / col[i] for k in others]
        surplus = [Fraction(0)] * n
        surplus[i] = Fraction(-1)
        rows.append(ratios + [Fraction(-1), Fraction(1)] + surplus)
        rhs.append(Fraction(0))
    rows.append([Fraction(1)] * d + [Fraction(0), Fraction(0)] + [Fraction(0)] * n)
    rhs.append(Fraction(1))
    cost = [Fraction(0)] * d + [Fraction(-1), Fraction(1)] + [Fraction(0)] * n
    res = _simplex(rows, rhs, cost)
    if res.status != "optimal":
        raise AssertionError(f"minimax program ended with status {res.status}")
    V = -res.objective
    return 1 - V
