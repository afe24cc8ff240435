"""Diagonal-entry-parameterized separability functions (DESFs) and the jacobian.

A DESF ``S(xi)`` is the conditional probability that a random state with
diagonal cross-ratio variable ``xi`` passes some separability test.  Every
catalog curve is piecewise analytic with a branch point at ``xi = 0``.

The printed closed forms are rewritten where they would lose precision in
floating point (large cancellations near ``|xi| -> inf`` or ``xi -> 0``);
``tests/test_desf.py`` checks every rewrite against the printed form
evaluated in extended precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

Branch = Callable[[np.ndarray], np.ndarray]

PI2 = math.pi**2


@dataclass(frozen=True)
class DesfCurve:
    """A DESF given by one analytic branch per half-axis.

    ``right`` is used for ``xi > 0`` and ``left`` for ``xi < 0``; both must
    accept float arrays and stay finite at ``xi = 0``, where the curve takes
    the average of the two one-sided limits unless ``at_zero`` is given.
    """

    name: str
    right: Branch
    left: Branch
    at_zero: float | None = None
    provenance: str = "closed-form"

    def __call__(self, xi):
        x = np.asarray(xi, dtype=float)
        out = np.empty_like(x)
        pos, neg = x > 0, x < 0
        if pos.any():
            out[pos] = self.right(x[pos])
        if neg.any():
            out[neg] = self.left(x[neg])
        zero = ~(pos | neg)
        if zero.any():
            out[zero] = self.value_at_zero()
        return out if out.ndim else float(out)

    def limits_at_zero(self) -> tuple[float, float]:
        z = np.zeros(1)
        return float(self.left(z)[0]), float(self.right(z)[0])

    def value_at_zero(self) -> float:
        if self.at_zero is not None:
            return self.at_zero
        lo, hi = self.limits_at_zero()
        return 0.5 * (lo + hi)

    def renamed(self, name: str) -> "DesfCurve":
        return DesfCurve(name, self.right, self.left, self.at_zero, self.provenance)


# ---------------------------------------------------------------------------
# Branch building blocks


def _exp_poly(coeffs: dict) -> Branch:
    """``t -> sum_k c_k exp(-k |t|)``: the decaying exponential sums."""

    def f(t):
        a = np.abs(t)
        return sum(c * np.exp(-k * a) for k, c in coeffs.items())

    return f


def _sqrt1mx2_series(n: int) -> list:
    # x sqrt(1 - x^2) = sum_k binom(1/2, k) (-1)^k x^(2k+1)
    out, c = [], Fraction(1)
    for k in range(n):
        out.append(c)
        c = c * (Fraction(1, 2) - k) / (k + 1) * -1
    return out


def _arcsin_series(n: int) -> list:
    # arcsin x = sum_k (2k)! / (4^k (k!)^2 (2k+1)) x^(2k+1)
    return [Fraction(math.comb(2 * k, k), 4**k * (2 * k + 1)) for k in range(n)]


class SqrtArcsinBranch:
    """``scale * x^-power * (x sqrt(1-x^2) P(x^2) + Q(x^2) arcsin x)`` with ``x = e^-|t|``.

    For ``x`` below ``switch`` the bracket cancels to leading order, so the
    branch is summed from its exact power series instead.
    """

    n_terms = 48
    switch = 0.5

    def __init__(self, scale: float, power: int, p: Sequence[int], q: Sequence[int]):
        self.scale = scale
        self.power = power
        self.p = tuple(p)
        self.q = tuple(q)
        a = _sqrt1mx2_series(self.n_terms)
        b = _arcsin_series(self.n_terms)
        coeffs = []
        for n in range(self.n_terms):
            c = sum(pi * a[n - i] for i, pi in enumerate(self.p) if n - i >= 0)
            c += sum(qi * b[n - i] for i, qi in enumerate(self.q) if n - i >= 0)
            coeffs.append(c)
        # x^(2n+1-power) must not blow up at x -> 0
        for n, c in enumerate(coeffs):
            if 2 * n + 1 < power and c != 0:
                raise ValueError("branch is singular at x = 0")
        self._first = (power) // 2
        self._coeffs = np.array([float(c) for c in coeffs[self._first:]])
        self._offset = 2 * self._first + 1 - power

    def _direct(self, a):
        x = np.exp(-a)
        x2 = x * x
        root = np.sqrt(-np.expm1(-2.0 * a))
        asin = np.arctan2(x, root)
        pv = np.polyval(self.p[::-1], x2)
        qv = np.polyval(self.q[::-1], x2)
        return self.scale * (x * root * pv + qv * asin) / x**self.power

    def _series(self, a):
        x = np.exp(-a)
        x2 = x * x
        acc = np.polyval(self._coeffs[::-1], x2)
        return self.scale * acc * x**self._offset

    def __call__(self, t):
        a = np.abs(np.asarray(t, dtype=float))
        small_x = a > -math.log(self.switch)
        out = np.empty_like(a)
        if (~small_x).any():
            out[~small_x] = self._direct(a[~small_x])
        if small_x.any():
            out[small_x] = self._series(a[small_x])
        return out


def _mirror(f: Branch) -> Branch:
    return lambda t: f(-np.asarray(t))


# ---------------------------------------------------------------------------
# The catalog

# c * exp(-3 xi) * (a exp(2 xi) - b) for xi > 0, mirrored for xi < 0
def _cubic_family(c: float, a: float, b: float) -> tuple:
    f = _exp_poly({1: c * a, 3: -c * b})
    return f, f


def _dominant():
    return _cubic_family(0.5, 3, 1)


def _intermediate():
    return _cubic_family(9 * PI2 / 2048, 27, 7)


def _conjecture():
    return _cubic_family(315 * PI2 / 2**16, 18, 5)


def _previous_conjecture():
    return _cubic_family(135 * PI2 / (2**8 * 17), 3, 1)


def _paired_intermediate():
    return _cubic_family(3 * PI2 / 573440, 18873, 4037)


def _s3x3():
    right = _exp_poly({1: 9 * PI2 / 2048 * 27, 3: -9 * PI2 / 2048 * 7})
    left = SqrtArcsinBranch(3 * math.pi / 1024, 3, (21, 37, 2), (-21, 81))
    return right, left


def _s2x2():
    # e^{-2xi} (2 sinh xi + cosh xi) = 3/2 e^{-xi} - 1/2 e^{-3xi}
    return _exp_poly({1: 1.5, 3: -0.5}), (lambda t: np.ones_like(np.asarray(t, dtype=float)))


def _scenario_complex_pair():
    f = _exp_poly({2: 4.0 / 3.0, 4: -1.0 / 3.0})
    return f, f


def _paired_dominant():
    f = SqrtArcsinBranch(-math.pi / 71680, 2, (-5346, -7665, 1696, 188), (5346, -21819, 5346))
    return f, f


def _paired_greater():
    s = -3 * PI2 / 573440
    f = _exp_poly({0: -17745 * s, 2: 2457 * s, 4: 432 * s, 6: 20 * s})
    return f, f


_BUILDERS = {
    "dominant": _dominant,
    "intermediate": _intermediate,
    "s3x3": _s3x3,
    "s2x2": _s2x2,
    "conjecture": _conjecture,
    "previous_conjecture": _previous_conjecture,
    "scenario_complex_pair": _scenario_complex_pair,
    "paired_dominant": _paired_dominant,
    "paired_intermediate": _paired_intermediate,
    "paired_greater": _paired_greater,
}

CATALOG_NAMES = tuple(_BUILDERS)


@lru_cache(maxsize=None)
def catalog(name: str) -> DesfCurve:
    """Closed-form DESF by name; see ``CATALOG_NAMES``."""
    try:
        right, left = _BUILDERS[name]()
    except KeyError:
        raise KeyError(f"unknown DESF {name!r}; choose from {', '.join(CATALOG_NAMES)}") from None
    return DesfCurve(name, right, left)


# ---------------------------------------------------------------------------
# Combinators


def reflect(c: DesfCurve) -> DesfCurve:
    return DesfCurve(f"reflect({c.name})", _mirror(c.left), _mirror(c.right), c.at_zero, "combined")


def envelope_min(a: DesfCurve, b: DesfCurve) -> DesfCurve:
    """Pointwise lesser branch on each half-axis."""
    return DesfCurve(
        f"min({a.name},{b.name})",
        lambda t: np.minimum(a.right(t), b.right(t)),
        lambda t: np.minimum(a.left(t), b.left(t)),
        provenance="combined",
    )


def envelope_max(a: DesfCurve, b: DesfCurve) -> DesfCurve:
    return DesfCurve(
        f"max({a.name},{b.name})",
        lambda t: np.maximum(a.right(t), b.right(t)),
        lambda t: np.maximum(a.left(t), b.left(t)),
        provenance="combined",
    )


def splice(right_from: DesfCurve, left_from: DesfCurve) -> DesfCurve:
    """Right branch of one curve joined to the left branch of another."""
    return DesfCurve(
        f"splice({right_from.name}|{left_from.name})",
        right_from.right,
        left_from.left,
        provenance="combined",
    )


def product(a: DesfCurve, b: DesfCurve) -> DesfCurve:
    return DesfCurve(
        f"{a.name}*{b.name}",
        lambda t: a.right(t) * b.right(t),
        lambda t: a.left(t) * b.left(t),
        provenance="combined",
    )


def power(c: DesfCurve, k: int) -> DesfCurve:
    return DesfCurve(
        f"{c.name}^{k}",
        lambda t: c.right(t) ** k,
        lambda t: c.left(t) ** k,
        provenance="combined",
    )


def combine(op: str, curves: Sequence[DesfCurve], k: int | None = None) -> DesfCurve:
    """Dispatch by name: reflect, envelope_min, envelope_max, splice, product, power."""
    if op == "reflect":
        (c,) = curves
        return reflect(c)
    if op == "power":
        (c,) = curves
        if k not in (2, 4):
            raise ValueError(f"power exponent must be 2 or 4, got {k}")
        return power(c, k)
    binary = {"envelope_min": envelope_min, "envelope_max": envelope_max,
              "splice": splice, "product": product}
    if op not in binary:
        raise ValueError(f"unknown combinator {op!r}")
    a, b = curves
    return binary[op](a, b)


def paired_minor_curve(pair: tuple = (1, 4)) -> DesfCurve:
    """The curve from jointly enforcing minors 1 and 4 (or its mirror for 2 and 3)."""
    c = splice(catalog("paired_intermediate"), catalog("paired_greater")).renamed("paired_14")
    if tuple(sorted(pair)) == (1, 4):
        return c
    if tuple(sorted(pair)) == (2, 3):
        return reflect(c).renamed("paired_23")
    raise ValueError("only the (1,4) and (2,3) pairings give non-dominant curves")


def paired_product_curve() -> DesfCurve:
    """Independence ansatz: product of the (1,4) and (2,3) pairing curves."""
    return product(paired_minor_curve((1, 4)), paired_minor_curve((2, 3))).renamed("paired_product")


def s3x3_product_curve() -> DesfCurve:
    """Independence ansatz on single minors: s3x3 times its reflection."""
    s = catalog("s3x3")
    return product(s, reflect(s)).renamed("s3x3_product")


# ---------------------------------------------------------------------------
# Jacobian


def _jacobian_numerator_series(n_terms: int = 40) -> np.ndarray:
    # N(xi) = -160 sinh 2xi - 25 sinh 4xi + 12 xi (16 cosh 2xi + cosh 4xi + 18)
    #       = sum_k c_k xi^(2k+1); c_0..c_3 vanish and the rest are positive.
    out = []
    for k in range(n_terms):
        odd = Fraction(-160 * 2 ** (2 * k + 1) - 25 * 4 ** (2 * k + 1), math.factorial(2 * k + 1))
        even = Fraction(12 * (16 * 2 ** (2 * k) + 4 ** (2 * k) + (18 if k == 0 else 0)), math.factorial(2 * k))
        out.append(odd + even)
    if any(out[:4]):
        raise AssertionError("jacobian numerator should vanish to order xi^9")
    return np.array([float(c) for c in out[4:]])


_J_SERIES = _jacobian_numerator_series()
_J_SCALE = 64.0 / (27.0 * PI2)
JACOBIAN_SERIES_RADIUS = 2.0


def jacobian_series(xi):
    """Series form, accurate for ``|xi| <= 2`` (used there by :func:`jacobian_closed`)."""
    x = np.asarray(xi, dtype=float)
    x2 = x * x
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(x == 0, 1.0, x / np.sinh(x))
    return _J_SCALE * np.polyval(_J_SERIES[::-1], x2) * ratio**9


def jacobian_direct(xi):
    """The printed formula with every term scaled by e^{-4|xi|}.

    Loses all precision as ``xi -> 0`` (the numerator is O(xi^9)); fine for
    ``|xi| >= 1`` and free of overflow for any ``xi``.
    """
    a = np.abs(np.asarray(xi, dtype=float))
    q = np.exp(-2.0 * a)
    q2 = q * q
    bracket = (
        -80.0 * q * (1.0 - q2)
        - 12.5 * (1.0 - q2 * q2)
        + 12.0 * a * (8.0 * q * (1.0 + q2) + 0.5 * (1.0 + q2 * q2) + 18.0 * q2)
    )
    # csch^9(a) = 2^9 e^{-9a} (1 - q)^-9 ; e^{4a} from the bracket
    return _J_SCALE * 512.0 * np.exp(-5.0 * a) * bracket / (-np.expm1(-2.0 * a)) ** 9


def jacobian_closed(xi):
    """Marginal density of ``xi`` for real states under the Hilbert-Schmidt measure."""
    x = np.asarray(xi, dtype=float)
    inner = np.abs(x) <= JACOBIAN_SERIES_RADIUS
    out = np.empty_like(x)
    if inner.any():
        out[inner] = jacobian_series(x[inner])
    if (~inner).any():
        out[~inner] = jacobian_direct(x[~inner])
    return out if out.ndim else float(out)


def curve_table(curve: DesfCurve, grid: np.ndarray) -> list:
    """``[(xi, value), ...]`` rows for export."""
    g = np.asarray(grid, dtype=float)
    return list(zip(g.tolist(), np.asarray(curve(g)).tolist()))
