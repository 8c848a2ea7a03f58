"""Acceptance criteria, one check per criterion.

Run with ``pytest tests/test_acceptance.py -v`` or standalone with
``python3 tests/test_acceptance.py``; either way one PASS/FAIL line is
printed per criterion.
"""

import math
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from tailprod import (  # noqa: E402
    Pareto,
    ProblemSpec,
    analyze,
    dual_info,
    enumerate_vertices,
    limit_constant,
    positivize,
    sample,
    solve_primal,
    survival,
)
from tailprod.verification import SimulationConfig, estimate_ratio, exact_prob, oracle_curve, slope_fit  # noqa: E402

from instances import (  # noqa: E402
    CHAIN,
    CHAIN_QUARTER,
    breiman_spec,
    chain_spec,
    random_matrix,
    reparam_spec,
    two_by_two_spec,
)

F = Fraction


class Check:
    def __init__(self, name: str, limit: float):
        self.name, self.limit = name, limit
        self.failures: list[str] = []
        self.notes: list[str] = []

    def expect(self, ok: bool, what: str):
        if not ok:
            self.failures.append(what)

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        if exc[0] is not None:
            self.failures.append(f"{exc[0].__name__}: {exc[1]}")
        if self.elapsed >= self.limit:
            self.failures.append(f"took {self.elapsed:.2f}s, limit {self.limit:g}s")
        status = "PASS" if not self.failures else "FAIL"
        detail = "; ".join(self.failures or self.notes)
        print(f"{status} {self.name} ({self.elapsed:.2f}s){': ' + detail if detail else ''}", file=sys.__stdout__)
        return True

    @property
    def ok(self) -> bool:
        return not self.failures


def check_chain() -> Check:
    with Check("chain (base)", 1.0) as c:
        rep = analyze(chain_spec())
        c.expect(rep.kappa == (F(7, 4), F(3, 2), F(1), F(0)), f"kappa {rep.kappa}")
        c.expect(rep.rv_index == F(-17, 4), f"index {rep.rv_index}")
        c.expect(rep.beta == {3: F(-7, 8)}, f"beta {rep.beta}")
        c.expect(rep.coefficient == F(8, 21), f"coefficient {rep.coefficient}")
        c.expect(rep.constant_at_c == F(128, 483), f"constant {rep.constant_at_c}")
    return c


def check_chain_quarter() -> Check:
    with Check("chain (-1/4 variant)", 1.0) as c:
        sol = solve_primal(CHAIN_QUARTER)
        c.expect(sol.kappa == (F(21, 16), F(5, 4), F(1), F(0)), f"kappa {sol.kappa}")
        c.expect(-sol.objective == F(-57, 16), f"index {-sol.objective}")
    return c


def check_chain_reparam() -> Check:
    with Check("chain (reparametrized)", 1.0) as c:
        rep = analyze(reparam_spec())
        c.expect(rep.kappa == (F(3, 2), F(1), F(0), F(1)), f"kappa {rep.kappa}")
        c.expect(rep.rv_index == F(-7, 2), f"index {rep.rv_index}")
        c.expect(rep.coefficient == F(2, 3), f"coefficient {rep.coefficient}")
        c.expect(rep.constant_at_c == F(16, 21), f"constant {rep.constant_at_c}")
    return c


_INSTANCES: list = []


def certified_instances(count: int = 200, seed: int = 20240601):
    if not _INSTANCES:
        rng = random.Random(seed)
        while len(_INSTANCES) < count:
            A = random_matrix(rng, max_n=3, max_m=5)
            sol = solve_primal(A)
            if sol.status == "optimal" and sol.is_unique and sol.is_nondegenerate:
                _INSTANCES.append((A, sol))
    return _INSTANCES


def check_duality() -> Check:
    with Check("duality suite", 30.0) as c:
        insts = certified_instances()
        for k, (A, sol) in enumerate(insts):
            info = dual_info(A, sol)
            kh = info.kappa_hat
            weights = A.vecmat(kh)
            c.expect(sum(kh) == sum(sol.kappa), f"#{k}: sums differ")
            c.expect(all(w <= 1 for w in weights), f"#{k}: dual infeasible")
            c.expect(all(v == 1 for v in A.matvec(sol.kappa)), f"#{k}: A kappa != 1")
            nonbasic = [j for j in range(A.cols) if j not in sol.basis]
            c.expect(all(info.reduced_costs[j] > 0 for j in nonbasic), f"#{k}: reduced cost <= 0")
            rep = analyze(ProblemSpec(A, (1,) * A.rows, (Pareto(1),) * A.cols))
            c.expect(all(b < 1 for b in rep.beta.values()), f"#{k}: beta >= 1")
        c.notes.append(f"{len(insts)} instances")
    return c


def check_oracle_equivalence() -> Check:
    with Check("LP vs vertex enumeration", 30.0) as c:
        for k, (A, sol) in enumerate(certified_instances()):
            best = min(v.objective for v in enumerate_vertices(A))
            c.expect(best == sol.objective, f"#{k}: {sol.objective} vs {best}")
    return c


def check_breiman() -> Check:
    with Check("Breiman verification", 120.0) as c:
        spec = breiman_spec()
        rep = analyze(spec)
        c.expect(rep.constant_at_c == F(4, 3), f"constant {rep.constant_at_c}")
        r = exact_prob(spec, 1e4).value / rep.normalizer(1e4)
        c.expect(abs(r / (4 / 3) - 1) < 0.01, f"oracle ratio {r}")
        cfg = SimulationConfig((100.0,), 10**7, seed=12345, chunks=4)
        p = estimate_ratio(spec, rep, cfg).points[0]
        truth = exact_prob(spec, 100.0).value
        z = (p.p_hat - truth) / math.sqrt(p.p_hat * (1 - p.p_hat) / p.n)
        c.expect(abs(z) < 4, f"MC z-score {z:.2f}")
        c.notes.append(f"oracle ratio {r:.5f}, MC ratio {p.ratio:.4f} (z={z:+.2f})")
    return c


def check_slopes() -> Check:
    with Check("slope check", 60.0) as c:
        xs = (1e2, 1e3, 1e4, 1e5)
        b = slope_fit(oracle_curve(breiman_spec(), xs)).slope
        c.expect(abs(b + 1) <= 0.02, f"Breiman slope {b}")
        spec = two_by_two_spec()
        target = float(analyze(spec).rv_index)
        s = slope_fit(oracle_curve(spec, xs)).slope
        c.expect(abs(s - target) <= 0.05, f"2x2 slope {s} vs {target}")
        c.notes.append(f"slopes {b:.4f}, {s:.4f} (target {target})")
    return c


def _positivize_checks(c: Check, A, rng: np.random.Generator, samples: int):
    sol = solve_primal(A)
    kh = dual_info(A, sol).kappa_hat
    P = positivize(A, sol.kappa, kh)
    J = sol.support
    c.expect(all(P[i, j] > 0 for i in range(A.rows) for j in J), "positivity")
    c.expect(all(v == 1 for v in P.matvec(sol.kappa)), "A~ kappa != 1")
    # exact comparison on float-drawn log coordinates
    pts = [[F(float(v)) for v in row] for row in np.log(10.0 * (1.0 - rng.random((samples, A.cols + 1))))]
    bad = 0
    for row in pts:
        lx, ly = row[0], row[1:]
        if all(v > lx for v in A.matvec(ly)) and not all(v > lx for v in P.matvec(ly)):
            bad += 1
    c.expect(bad == 0, f"{bad} implication counterexamples")


def check_properties() -> Check:
    with Check("property suites", 60.0) as c:
        rep = analyze(chain_spec())
        rnd = random.Random(77)
        for _ in range(100):
            r = F(rnd.randint(1, 12), rnd.randint(1, 12))
            cs = tuple(F(rnd.randint(1, 9), rnd.randint(1, 9)) ** 4 for _ in range(3))
            lhs = limit_constant(rep, tuple(r**4 * v for v in cs))
            c.expect(lhs == r ** (4 * rep.rv_index) * limit_constant(rep, cs), f"homogeneity at {r}, {cs}")

        rng = np.random.default_rng(31337)
        _positivize_checks(c, CHAIN, rng, 10**4)
        for A, _ in certified_instances()[:20]:
            _positivize_checks(c, A, rng, 500)

        u = 1.0 - rng.random(10**4)
        for alpha in (F(1), F(2), F(1, 2), F(7, 3)):
            m = Pareto(alpha)
            back = np.array([survival(m, x) for x in sample(m, u)], dtype=float)
            err = np.max(np.abs(back / u - 1))
            c.expect(err <= 1e-12, f"Pareto({alpha}) sample/survival error {err:.2e}")

        spec = two_by_two_spec()
        rep2 = analyze(spec)
        cfg = SimulationConfig((10.0, 100.0), 500_000, seed=4, chunks=3)
        runs = [estimate_ratio(spec, rep2, cfg, workers=w).to_csv().encode() for w in (1, 3, None)]
        c.expect(runs[0] == runs[1] == runs[2], "MC reruns differ")
    return c


CRITERIA = [
    check_chain,
    check_chain_quarter,
    check_chain_reparam,
    check_duality,
    check_oracle_equivalence,
    check_breiman,
    check_slopes,
    check_properties,
]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f.__name__ for f in CRITERIA])
def test_criterion(criterion):
    result = criterion()
    assert result.ok, "; ".join(result.failures)


if __name__ == "__main__":
    results = [f() for f in CRITERIA]
    sys.exit(0 if all(r.ok for r in results) else 1)
