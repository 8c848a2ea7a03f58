import math
import random
from fractions import Fraction

import numpy as np
import pytest

from tailprod import (
    Constant,
    HypothesisViolation,
    InfiniteMoment,
    Pareto,
    ProblemSpec,
    RationalMatrix,
    analyze,
    dual_info,
    limit_constant,
    positivize,
    rescale_column,
    rescale_marginal,
    solve_primal,
)
from tailprod.lp import HypothesisError

from instances import (
    BREIMAN,
    CHAIN,
    CHAIN_REPARAM,
    breiman_spec,
    chain_spec,
    random_matrix,
    reparam_spec,
)

F = Fraction


class TestAnalyze:
    def test_chain(self):
        rep = analyze(chain_spec())
        assert rep.kappa == (F(7, 4), F(3, 2), F(1), F(0))
        assert rep.rv_index == F(-17, 4)
        assert rep.beta == {3: F(-7, 8)}
        assert rep.coefficient == F(8, 21)
        assert rep.moment_values[3] == F(16, 23)
        assert rep.constant_at_c == F(128, 483)
        assert rep.det_A_kappa == 1
        assert rep.eps_max[3] == F(23, 8)
        assert rep.theorem_applies

    def test_reparametrized(self):
        rep = analyze(reparam_spec())
        assert rep.kappa == (F(3, 2), F(1), F(0), F(1))
        assert rep.rv_index == F(-7, 2)
        assert rep.beta == {2: F(1, 4)}
        assert rep.coefficient == F(2, 3)
        assert rep.constant_at_c == F(16, 21)

    def test_single_factor(self):
        spec = ProblemSpec(RationalMatrix.of([[1]]), (F(5, 2),), (Pareto(1),))
        rep = analyze(spec)
        assert rep.rv_index == -1
        assert rep.constant_at_c == F(2, 5)
        assert rep.beta == {}

    def test_breiman(self):
        rep = analyze(breiman_spec())
        assert rep.kappa == (F(1), F(0))
        assert rep.kappa_hat == (F(1),)
        assert rep.beta == {1: F(1, 2)}
        assert rep.constant_at_c == F(4, 3)

    def test_constant_factor(self):
        spec = ProblemSpec(BREIMAN, (1,), (Pareto(1), Constant(4)))
        rep = analyze(spec)
        assert rep.constant_at_c == 2
        assert rep.eps_max[1] == math.inf

    def test_non_unique(self):
        spec = ProblemSpec(RationalMatrix.of([[1, 1]]), (1,), (Pareto(1), Pareto(1)))
        with pytest.raises(HypothesisViolation, match="not unique") as info:
            analyze(spec)
        assert set(info.value.uniqueness.witnesses) == {(F(1), F(0)), (F(0), F(1))}
        assert any(h.condition == "unique_optimum" and h.status == "fail" for h in info.value.log)

    def test_degenerate(self):
        spec = ProblemSpec(RationalMatrix.of([[1], [1]]), (1, 1), (Pareto(1),))
        with pytest.raises(HypothesisViolation, match="non_degenerate"):
            analyze(spec)

    def test_infeasible(self):
        spec = ProblemSpec(RationalMatrix.of([[-1, 0]]), (1,), (Pareto(1), Pareto(1)))
        with pytest.raises(HypothesisViolation, match="infeasible"):
            analyze(spec)

    def test_wrong_tail_index_on_support(self):
        spec = ProblemSpec(BREIMAN, (1,), (Pareto(2), Pareto(2)))
        with pytest.raises(HypothesisViolation, match="index -1") as info:
            analyze(spec)
        assert info.value.report is not None
        assert not info.value.report.theorem_applies

    def test_infinite_moment(self):
        spec = ProblemSpec(BREIMAN, (1,), (Pareto(1), Pareto(F(1, 2))))
        with pytest.raises(InfiniteMoment) as info:
            analyze(spec)
        rep = info.value.report
        assert rep.constant_at_c == math.inf and not rep.is_finite
        assert rep.eps_max[1] == 0
        rep = analyze(spec, allow_infinite=True)
        assert rep.constant_at_c == math.inf

    def test_spec_validation(self):
        with pytest.raises(ValueError, match="positive"):
            ProblemSpec(BREIMAN, (0,), (Pareto(1), Pareto(1)))
        with pytest.raises(ValueError, match="marginals"):
            ProblemSpec(BREIMAN, (1,), (Pareto(1),))
        with pytest.raises(ValueError, match="rows"):
            ProblemSpec(BREIMAN, (1, 1), (Pareto(1), Pareto(1)))

    def test_normalizer_pareto_one(self):
        rep = analyze(chain_spec())
        for x in (2.0, 10.0, 123.4):
            assert rep.normalizer(x) == pytest.approx(x ** (-17 / 4), rel=1e-12)

    def test_beta_below_one_on_random_certified(self):
        rng = random.Random(3)
        done = 0
        while done < 60:
            A = random_matrix(rng)
            sol = solve_primal(A)
            if sol.status != "optimal" or not (sol.is_unique and sol.is_nondegenerate):
                continue
            spec = ProblemSpec(A, (1,) * A.rows, (Pareto(1),) * A.cols)
            rep = analyze(spec)
            assert all(b < 1 for b in rep.beta.values())
            done += 1


class TestLimitConstant:
    def test_scaling_first_threshold(self):
        rep = analyze(chain_spec())
        assert limit_constant(rep, (2, 1, 1)) == F(1, 2) * F(128, 483)

    def test_matches_closed_form(self):
        rep = analyze(chain_spec())
        c = (3, 5, 7)
        expected = F(8, 21) * 3**-1 * 5**-1.5 * 7**-1.75 * 16 / 23
        assert float(limit_constant(rep, c)) == pytest.approx(expected, rel=1e-14)

    def test_homogeneity_exact(self):
        rep = analyze(chain_spec())
        rng = random.Random(5)
        # fourth powers keep every c_i ** kappa_hat_i rational
        for _ in range(100):
            r = F(rng.randint(1, 9), rng.randint(1, 9))
            c = tuple(F(rng.randint(1, 9), rng.randint(1, 9)) ** 4 for _ in range(3))
            lam = r**4
            lhs = limit_constant(rep, tuple(lam * ci for ci in c))
            rhs = r ** (-17) * limit_constant(rep, c)
            assert isinstance(lhs, Fraction)
            assert lhs == rhs

    def test_rejects_bad_thresholds(self):
        rep = analyze(chain_spec())
        with pytest.raises(ValueError):
            limit_constant(rep, (1, 1))
        with pytest.raises(ValueError):
            limit_constant(rep, (1, 0, 1))


class TestRescale:
    def test_chain_to_reparametrized(self):
        assert rescale_column(CHAIN, 3, F(-1, 2)) == CHAIN_REPARAM

    def test_identity(self):
        assert rescale_column(CHAIN, 1, 1) == CHAIN

    def test_involution(self):
        s = F(-3, 7)
        assert rescale_column(rescale_column(CHAIN, 2, s), 2, 1 / s) == CHAIN

    def test_zero_scale(self):
        with pytest.raises(ValueError):
            rescale_column(CHAIN, 0, 0)

    def test_marginal(self):
        assert rescale_marginal(Pareto(2), F(1, 2)) == Pareto(4)
        assert rescale_marginal(Constant(9), F(1, 2)) == Constant(3)
        with pytest.raises(ValueError):
            rescale_marginal(Pareto(1), -1)


class TestPositivize:
    def _example(self):
        sol = solve_primal(CHAIN)
        info = dual_info(CHAIN, sol)
        return sol.kappa, info.kappa_hat

    def test_chain(self):
        kappa, khat = self._example()
        P = positivize(CHAIN, kappa, khat, F(1, 10))
        assert all(P[i, j] > 0 for i in range(3) for j in range(3))
        assert P.matvec(kappa) == (1, 1, 1)
        # a_min = 1/2 + 1/10, denominator 1 + (3/5)(17/4)
        a_min = F(3, 5)
        denom = 1 + a_min * F(17, 4)
        col_weights = CHAIN.vecmat(khat)
        for i in range(3):
            for j in range(4):
                assert P[i, j] == (CHAIN[i, j] + a_min * col_weights[j]) / denom

    def test_already_positive(self):
        A = RationalMatrix.of([[1, -1]])
        P = positivize(A, (1, 0), (1,), F(1, 2))
        assert P == A

    def test_default_epsilon(self):
        kappa, khat = self._example()
        P = positivize(CHAIN, kappa, khat)
        assert all(P[i, j] > 0 for i in range(3) for j in range(3))

    def test_rejects_inconsistent_pair(self):
        kappa, _ = self._example()
        with pytest.raises(HypothesisError):
            positivize(CHAIN, kappa, (1, 1, 1))
        with pytest.raises(HypothesisError):
            positivize(CHAIN, (1, 1, 1, 0), (1, F(3, 2), F(7, 4)))

    def test_implication(self):
        kappa, khat = self._example()
        P = positivize(CHAIN, kappa, khat, F(1, 10))
        A = np.array(CHAIN.tolist(), dtype=float)
        At = np.array(P.tolist(), dtype=float)
        rng = np.random.default_rng(4242)
        pts = 10.0 * (1.0 - rng.random((10**4, 5)))
        lx, lxs = np.log(pts[:, 0]), np.log(pts[:, 1:])
        before = np.all(lxs @ A.T > lx[:, None], axis=1)
        after = np.all(lxs @ At.T > lx[:, None], axis=1)
        assert before.sum() > 100
        assert not np.any(before & ~after)
