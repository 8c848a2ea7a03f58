"""Factor laws with closed-form tails and power moments.

Two families are supported, both with support in ``[1, inf)``:

* ``Pareto(alpha)``: ``P(X > x) = x**-alpha`` for ``x >= 1``.
* ``Constant(v)``: ``X = v`` almost surely, ``v >= 1``.

Values that can be represented exactly are returned as ``Fraction``;
irrational values fall back to binary floats (about 1e-15 relative
precision, documented bound 1e-12) and ``+inf`` is ``math.inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .lp import format_rational, parse_rational

__all__ = [
    "Constant",
    "Extended",
    "MarginalModel",
    "Pareto",
    "marginal_from_json",
    "marginal_to_json",
    "moment",
    "rational_power",
    "sample",
    "survival",
]

# exact rational, float, or math.inf
Extended = Union[Fraction, float]


def _iroot(n: int, k: int) -> int | None:
    """Exact integer k-th root of n >= 0, or None."""
    if n < 0:
        return None
    if n in (0, 1):
        return n
    # start above the root; integer Newton then decreases monotonically
    r = 1 << (n.bit_length() // k + 1)
    while True:
        nxt = ((k - 1) * r + n // r ** (k - 1)) // k
        if nxt >= r:
            break
        r = nxt
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand**k == n:
            return cand
    return None


def rational_power(base: Fraction, exponent: Fraction) -> Extended:
    """``base ** exponent`` for base > 0: exact when the result is rational."""
    base = Fraction(base)
    exponent = Fraction(exponent)
    if base <= 0:
        raise ValueError("base must be positive")
    p, q = exponent.numerator, exponent.denominator
    if q == 1:
        return base**p
    # keep the exact path cheap: huge roots are not worth chasing
    if q <= 64 and max(base.numerator, base.denominator).bit_length() <= 4096:
        num = _iroot(base.numerator, q)
        den = _iroot(base.denominator, q)
        if num is not None and den is not None:
            return Fraction(num, den) ** p
    return math.exp(float(exponent) * (math.log(base.numerator) - math.log(base.denominator)))


@dataclass(frozen=True)
class Pareto:
    alpha: Fraction

    def __post_init__(self):
        object.__setattr__(self, "alpha", parse_rational(self.alpha))
        if self.alpha <= 0:
            raise ValueError(f"Pareto index must be positive, got {self.alpha}")

    def moment(self, beta) -> Extended:
        beta = Fraction(beta)
        if beta >= self.alpha:
            return math.inf
        return self.alpha / (self.alpha - beta)

    def survival(self, x) -> Extended:
        if x <= 1:
            return Fraction(1) if isinstance(x, (int, Fraction)) else 1.0
        if isinstance(x, (int, Fraction)):
            return 1 / rational_power(Fraction(x), self.alpha)
        return float(x) ** -float(self.alpha)

    def sample(self, u):
        return np.power(u, -1.0 / float(self.alpha))

    def log_sample(self, u):
        """``log X`` from uniforms: an Exponential(alpha) variate."""
        return -np.log(u) / float(self.alpha)

    @property
    def is_index_minus_one(self) -> bool:
        return self.alpha == 1

    def __str__(self) -> str:
        return f"Pareto({format_rational(self.alpha)})"


@dataclass(frozen=True)
class Constant:
    value: Fraction

    def __post_init__(self):
        object.__setattr__(self, "value", parse_rational(self.value))
        if self.value < 1:
            raise ValueError(f"constant factor must be >= 1, got {self.value}")

    def moment(self, beta) -> Extended:
        return rational_power(self.value, Fraction(beta))

    def survival(self, x) -> Extended:
        hit = x < self.value
        if isinstance(x, (int, Fraction)):
            return Fraction(int(hit))
        return float(hit)

    def sample(self, u):
        return np.full(np.shape(u), float(self.value))

    def log_sample(self, u):
        return np.full(np.shape(u), math.log(self.value))

    @property
    def is_index_minus_one(self) -> bool:
        return False

    def __str__(self) -> str:
        return f"Constant({format_rational(self.value)})"


MarginalModel = Union[Pareto, Constant]


def moment(model: MarginalModel, beta) -> Extended:
    """``E(X**beta)`` in ``[0, inf]``."""
    return model.moment(beta)


def survival(model: MarginalModel, x) -> Extended:
    """``P(X > x)``."""
    return model.survival(x)


def sample(model: MarginalModel, u):
    """Inverse-transform draw; ``u`` uniform on (0, 1), scalar or array."""
    out = model.sample(np.asarray(u, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def marginal_to_json(model: MarginalModel) -> dict:
    if isinstance(model, Pareto):
        return {"type": "pareto", "alpha": format_rational(model.alpha)}
    return {"type": "constant", "value": format_rational(model.value)}


def marginal_from_json(obj: dict) -> MarginalModel:
    if not isinstance(obj, dict) or "type" not in obj:
        raise ValueError(f"marginal must be an object with a 'type' field, got {obj!r}")
    kind = obj["type"]
    if kind == "pareto":
        return Pareto(parse_rational(obj["alpha"]))
    if kind == "constant":
        return Constant(parse_rational(obj["value"]))
    raise ValueError(f"unknown marginal type {kind!r}")
