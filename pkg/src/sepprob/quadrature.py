"""One-dimensional integration of DESFs against the jacobian, and bound bookkeeping.

The separability probability of a DESF ``S`` is ``P = int S(xi) J(xi) dxi``.
Every integrand here decays at least like ``exp(-|xi|)``, so the real line is
truncated to ``|xi| <= 40`` and split into fixed panels that put a breakpoint
at the branch point ``xi = 0``.  Panels are integrated in a fixed order, so
results are bit-identical however callers parallelise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache
from typing import Callable

import mpmath as mp
import numpy as np
from scipy import integrate, special

from .desf import (
    DesfCurve,
    catalog,
    jacobian_closed,
    paired_product_curve,
    power,
    s3x3_product_curve,
)

TAIL_CUTOFF = 40.0
PANELS = (-TAIL_CUTOFF, -16.0, -8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0, 16.0, TAIL_CUTOFF)


class QuadratureError(RuntimeError):
    """Raised when an integral fails to converge; carries the partial result."""

    def __init__(self, message: str, partial: "QuadratureResult"):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError("quadrature value is not finite")
        if not self.error_estimate >= 0:
            raise ValueError("error estimate must be non-negative")

    def __float__(self):
        return self.value


class Beta(IntEnum):
    """Dyson index: 1 real, 2 complex, 4 quaternionic."""

    REAL = 1
    COMPLEX = 2
    QUATERNIONIC = 4


def as_beta(beta) -> Beta:
    try:
        return Beta(int(beta))
    except (ValueError, TypeError):
        raise ValueError(f"beta must be one of 1, 2, 4; got {beta!r}") from None


def integrate_line(
    f: Callable[[float], float],
    tol: float = 1e-12,
    panels=PANELS,
    limit: int = 200,
) -> QuadratureResult:
    """Integrate ``f`` over the real line.

    Adaptive Gauss-Kronrod on each fixed panel of ``[-40, 40]``; mass beyond
    ``|xi| = 40`` is below ``e^-40`` for every integrand used here.

    Raises
    ------
    QuadratureError
        If any panel fails to reach ``tol``; ``err.partial`` holds the
        accumulated estimate.
    """
    total, err, nev = 0.0, 0.0, 0
    per_panel = tol / (len(panels) - 1)
    failed = None
    for a, b in zip(panels[:-1], panels[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            v, e, info = integrate.quad(
                f, a, b, epsabs=per_panel, epsrel=0.0, limit=limit, full_output=1
            )[:3]
        total += v
        err += e
        nev += info["neval"]
        if not (e <= per_panel and math.isfinite(v)) and failed is None:
            failed = (a, b, e)
    if not math.isfinite(total):
        raise QuadratureError("integrand produced non-finite values", QuadratureResult(0.0, math.inf, nev))
    result = QuadratureResult(total, err, nev)
    if failed is not None:
        a, b, e = failed
        raise QuadratureError(f"panel [{a}, {b}] did not converge (error {e:.3g})", result)
    return result


def sep_probability(curve: DesfCurve, jac: Callable = jacobian_closed, tol: float = 1e-12) -> float:
    """``int S(xi) J(xi) dxi`` for a DESF and a jacobian density."""
    return integrate_line(lambda x: curve(x) * jac(x), tol=tol).value


# ---------------------------------------------------------------------------
# Jacobians for every beta


@lru_cache(maxsize=None)
def _log_dirichlet_norm(beta: int) -> float:
    p = 1.5 * beta
    return special.gammaln(4 * p + 4) - 4 * special.gammaln(p + 1)


def _jacobian_simplex(beta: int, xi: float) -> float:
    # rho33 solved from xi; (a, b) = (rho11, rho22) on the unit triangle
    p = 1.5 * beta
    nu = math.exp(2.0 * xi)

    def inner(b, a):
        s = 1.0 - a - b
        den = a + nu * b
        c = a * s / den
        d = nu * b * s / den
        dc = 2.0 * nu * a * b * s / den**2
        return (a * b * c * d) ** p * dc

    def outer(a):
        top = 1.0 - a
        # the integrand peaks near b = a / nu
        pts = [a / nu] if 0.0 < a / nu < top else None
        return integrate.quad(inner, 0.0, top, args=(a,), points=pts, epsabs=0.0, epsrel=1e-12, limit=200)[0]

    v = integrate.quad(outer, 0.0, 1.0, epsabs=0.0, epsrel=1e-11, limit=200)[0]
    return v * math.exp(_log_dirichlet_norm(beta))


@lru_cache(maxsize=None)
def _log_ratio_norm(beta: int) -> float:
    p = 1.5 * beta
    a = p + 1
    return math.log(2.0) + 2 * special.gammaln(2 * p + 2) - special.gammaln(4 * p + 4) + special.gammaln(4 * a) - 4 * special.gammaln(a)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _jacobian_ratio(beta: int, xi: float) -> float:
    # With (d1, d2) and (d3, d4) split into pair sums and ratios, xi depends on
    # the two within-pair log-ratios only, leaving a single convolution in s.
    # The integrand is smooth with unit-scale features at s = 0 and s = 2 xi,
    # so fixed unit panels of 24-point Gauss-Legendre reach double precision.
    p = 1.5 * beta
    m = 2 * p + 1
    lo = math.floor(min(0.0, 2 * xi)) - 40.0
    hi = math.ceil(max(0.0, 2 * xi)) + 40.0
    edges = np.arange(lo, hi + 0.5, 1.0)
    s = (0.5 * (edges[1:, None] + edges[:-1, None]) + 0.5 * _GL_X[None, :]).ravel()
    f = np.exp((m + 1) * s - (m + 1) * np.logaddexp(0.0, s) - (m + 1) * np.logaddexp(s, 2 * xi))
    v = 0.5 * float(np.sum(f.reshape(-1, _GL_X.size) @ _GL_W))
    return math.exp((p + 1) * 2 * xi + _log_ratio_norm(beta)) * v


def jacobian_numeric(beta, xi: float, method: str = "simplex") -> float:
    """Marginal density of ``xi`` under the diagonal law ``(prod rho_ii)^(3 beta / 2)``.

    Parameters
    ----------
    beta : {1, 2, 4}
    xi : float
    method : {"simplex", "ratio"}
        ``"simplex"`` changes variables ``rho33 -> xi`` and integrates over
        ``(rho11, rho22)``.  ``"ratio"`` uses the equivalent one-dimensional
        convolution of the two within-pair log-ratios, which is ~50x faster.
    """
    b = int(as_beta(beta))
    xi = float(xi)
    if not math.isfinite(xi):
        raise ValueError("xi must be finite")
    if method == "simplex":
        return _jacobian_simplex(b, xi)
    if method == "ratio":
        return _jacobian_ratio(b, xi)
    raise ValueError(f"unknown method {method!r}")


def dirichlet_xi_density(alpha, xi: float) -> float:
    """Density of ``xi`` when the diagonal is Dirichlet(alpha_1, .., alpha_4).

    ``log(d1/d2)`` and ``log(d4/d3)`` are independent logits of
    Beta(alpha_1, alpha_2) and Beta(alpha_4, alpha_3) variables and ``2 xi``
    is their sum, so the density is a one-dimensional convolution.
    """
    a1, a2, a3, a4 = (float(a) for a in alpha)
    lb12, lb43 = special.betaln(a1, a2), special.betaln(a4, a3)

    def f(s):
        t = 2.0 * xi - s
        return math.exp(a1 * s - (a1 + a2) * np.logaddexp(0.0, s) - lb12
                        + a4 * t - (a4 + a3) * np.logaddexp(0.0, t) - lb43)

    lo, hi = min(0.0, 2 * xi) - 60.0, max(0.0, 2 * xi) + 60.0
    return 2.0 * integrate.quad(f, lo, hi, points=sorted({0.0, 2 * xi}), epsabs=0.0, epsrel=1e-12, limit=200)[0]


def jacobian_for(beta, method: str = "ratio") -> Callable[[float], float]:
    b = as_beta(beta)
    if b == Beta.REAL and method == "closed":
        return jacobian_closed
    return lambda x: jacobian_numeric(b, x, method=method)


def power_class_probability(curve: DesfCurve, beta, method: str = "ratio", tol: float = 1e-12) -> float:
    """``int S(xi)^beta J_beta(xi) dxi`` for ``beta`` in {2, 4}, unit proportionality constant."""
    b = as_beta(beta)
    if b == Beta.REAL:
        raise ValueError("the power class is defined for beta = 2 and 4")
    c = power(curve, int(b))
    jac = jacobian_for(b, method)
    return integrate_line(lambda x: c(x) * jac(x), tol=tol).value


def boundary_halve(p: float) -> float:
    """Probability for minimally degenerate (boundary) states: half the generic value."""
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"probability out of range: {p}")
    return 0.5 * p


# ---------------------------------------------------------------------------
# Bound table


@dataclass(frozen=True)
class BoundSpec:
    name: str
    curve: Callable[[], DesfCurve]
    target: Callable[[], mp.mpf]
    target_text: str
    tol: float = 1e-9
    beta: int = 1


def _mp(expr):
    def f():
        with mp.workdps(40):
            return +expr()
    return f


PI = mp.pi
BOUNDS = (
    BoundSpec("dominant", lambda: catalog("dominant"), _mp(lambda: 1024 / (135 * PI**2)), "1024/(135 pi^2)"),
    BoundSpec("intermediate", lambda: catalog("intermediate"), _mp(lambda: mp.mpf(22) / 35), "22/35"),
    BoundSpec("paired_intermediate", lambda: catalog("paired_intermediate"), _mp(lambda: mp.mpf(1129) / 2100), "1129/2100"),
    BoundSpec("conjecture", lambda: catalog("conjecture"), _mp(lambda: mp.mpf(29) / 64), "29/64"),
    BoundSpec("previous_conjecture", lambda: catalog("previous_conjecture"), _mp(lambda: mp.mpf(8) / 17), "8/17"),
    BoundSpec("paired_dominant", lambda: catalog("paired_dominant"), _mp(lambda: mp.mpf("0.585542")), "0.585542", 1e-6),
    BoundSpec("s3x3_product", s3x3_product_curve, _mp(lambda: mp.mpf("0.576219")), "0.576219", 1e-6),
    BoundSpec("paired_greater", lambda: catalog("paired_greater"),
              _mp(lambda: mp.mpf(7724) / 525 - 5751 * PI**2 / 4096), "7724/525 - 5751 pi^2/4096"),
    BoundSpec("paired_product", paired_product_curve,
              _mp(lambda: PI**2 * (18031791 * PI**2 - 177044420) / (2**14 * 5**2 * 7**2)),
              "pi^2 (18031791 pi^2 - 177044420)/(2^14 5^2 7^2)", 1e-6),
    BoundSpec("paired_dominant_squared", lambda: power(catalog("paired_dominant"), 2),
              _mp(lambda: mp.mpf("0.367762")), "0.367762", 1e-6),
    BoundSpec("conjecture_beta2", lambda: catalog("conjecture"),
              _mp(lambda: 30660525 * PI**4 / 11811160064), "30660525 pi^4/11811160064", 1e-8, 2),
    BoundSpec("conjecture_beta4", lambda: catalog("conjecture"), _mp(lambda: mp.mpf("0.0867454")), "0.0867454", 1e-6, 4),
    BoundSpec("intermediate_beta2", lambda: catalog("intermediate"),
              _mp(lambda: 752517 * PI**4 / 149946368), "752517 pi^4/149946368", 1e-8, 2),
    BoundSpec("intermediate_beta4", lambda: catalog("intermediate"), _mp(lambda: mp.mpf("0.327414")), "0.327414", 1e-6, 4),
)

BOUND_NAMES = tuple(b.name for b in BOUNDS)


@dataclass(frozen=True)
class BoundRow:
    name: str
    value: float
    target: float
    target_text: str
    abs_error: float
    tol: float
    beta: int

    @property
    def passed(self) -> bool:
        return self.abs_error <= self.tol


def evaluate_bound(spec: BoundSpec) -> BoundRow:
    curve = spec.curve()
    if spec.beta == 1:
        value = sep_probability(curve)
    else:
        value = power_class_probability(curve, spec.beta)
    target = float(spec.target())
    return BoundRow(spec.name, value, target, spec.target_text, abs(value - target), spec.tol, spec.beta)


def bounds_table(names=None) -> list[BoundRow]:
    specs = BOUNDS if names is None else [b for b in BOUNDS if b.name in set(names)]
    if names is not None and len(specs) != len(set(names)):
        unknown = set(names) - {b.name for b in specs}
        raise KeyError(f"unknown bound(s): {sorted(unknown)}")
    return [evaluate_bound(s) for s in specs]
