import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from tailprod.marginals import (
    Constant,
    Pareto,
    marginal_from_json,
    marginal_to_json,
    moment,
    rational_power,
    sample,
    survival,
)

F = Fraction


def test_pareto_moment_matches_numeric_integral():
    expected, _ = integrate.quad(lambda x: 2 * x**-3 * x ** (-7 / 8), 1, np.inf)
    value = moment(Pareto(2), F(-7, 8))
    assert value == F(16, 23)
    assert float(value) == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize(
    "model,beta,expected",
    [
        (Pareto(1), 0, F(1)),
        (Pareto(1), 1, math.inf),
        (Pareto(2), F(1, 4), F(8, 7)),
        (Pareto(2), 3, math.inf),
        (Constant(3), 2, F(9)),
        (Constant(4), F(1, 2), F(2)),
        (Constant(F(9, 4)), F(-1, 2), F(2, 3)),
    ],
)
def test_moment_values(model, beta, expected):
    assert moment(model, beta) == expected


def test_constant_irrational_moment_is_float():
    v = moment(Constant(2), F(1, 2))
    assert isinstance(v, float)
    assert v == pytest.approx(math.sqrt(2), rel=1e-12)


@pytest.mark.parametrize(
    "model,x,expected",
    [
        (Pareto(1), 1000, F(1, 1000)),
        (Pareto(2), 10, F(1, 100)),
        (Pareto(2), F(1, 2), F(1)),
        (Constant(3), 2, F(1)),
        (Constant(3), 4, F(0)),
        (Constant(3), 3, F(0)),
    ],
)
def test_survival(model, x, expected):
    assert survival(model, x) == expected


def test_survival_float_argument():
    assert survival(Pareto(1), 1000.0) == pytest.approx(1e-3, rel=1e-15)


@pytest.mark.parametrize("model,u,expected", [(Pareto(1), 0.5, 2.0), (Pareto(2), 0.25, 2.0), (Constant(3), 0.7, 3.0)])
def test_sample(model, u, expected):
    assert sample(model, u) == pytest.approx(expected, rel=1e-15)


@given(
    st.floats(min_value=1e-12, max_value=1 - 1e-12),
    st.sampled_from([F(1, 2), F(1), F(2), F(7, 3)]),
)
def test_survival_inverts_sample(u, alpha):
    model = Pareto(alpha)
    assert float(survival(model, sample(model, u))) == pytest.approx(u, rel=1e-12)


@given(st.sampled_from([Pareto(1), Pareto(3), Constant(5), Constant(F(3, 2))]))
def test_zeroth_moment(model):
    assert moment(model, 0) == 1


@given(
    st.fractions(min_value=-10, max_value=F(199, 100), max_denominator=100),
    st.fractions(min_value=0, max_value=1, max_denominator=100),
)
def test_pareto_moment_monotone(beta, step):
    model = Pareto(2)
    lo, hi = moment(model, beta), moment(model, beta + step)
    assert lo <= hi


@pytest.mark.parametrize(
    "model,beta",
    [(Pareto(2), -1), (Pareto(2), F(1, 2)), (Pareto(2), F(9, 10)), (Pareto(1), F(-1, 2)), (Pareto(1), F(1, 4)), (Pareto(3), F(6, 5))],
)
def test_empirical_moment(model, beta):
    rng = np.random.default_rng(31337)
    u = 1.0 - rng.random(10**6)
    vals = sample(model, u) ** float(beta)
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean() - float(moment(model, beta))) <= 4 * se


def test_invalid_parameters():
    with pytest.raises(ValueError):
        Pareto(0)
    with pytest.raises(ValueError):
        Constant(F(1, 2))


def test_json_round_trip():
    for model in (Pareto(2), Constant(F(3, 2))):
        text = json.dumps(marginal_to_json(model))
        assert marginal_from_json(json.loads(text)) == model
    assert marginal_to_json(Constant(F(3, 2))) == {"type": "constant", "value": "3/2"}
    assert marginal_to_json(Pareto(2)) == {"type": "pareto", "alpha": "2"}


def test_json_unknown_type():
    with pytest.raises(ValueError, match="unknown"):
        marginal_from_json({"type": "lognormal"})


def test_rational_power_exact_roots():
    assert rational_power(F(16, 81), F(3, 4)) == F(8, 27)
    assert rational_power(F(2), F(-3)) == F(1, 8)
    assert isinstance(rational_power(F(3), F(1, 2)), float)
    big = F(3**200)
    assert rational_power(big, F(1, 2)) == F(3**100)
