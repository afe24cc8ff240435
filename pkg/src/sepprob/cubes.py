"""Minor-constrained integrals over cubes of correlation coordinates.

Under the flat measure on real two-qubit correlation matrices the three
correlations in any row are independent with density ``w(z) = 3/4 (1 - z^2)``
on ``[-1, 1]``.  A 3x3 principal minor of the partial transpose involves one
coordinate rescaled by ``lam = exp(+-xi)`` (``x = lam * z``) and two plain
ones ``u, v``, and is nonnegative iff ``1 - x^2 - u^2 - v^2 + 2 x u v >= 0``.

With ``u = cos(theta)`` and ``x = cos(tau)`` the admissible ``v`` form the
interval ``[cos(theta + tau), cos(theta - tau)]``, so the innermost
integration is the closed-form mass

    F(cos(theta - tau)) - F(cos(theta + tau)),   F(z) = 3/4 (z - z^3/3) + 1/2,

and what remains is a trigonometric polynomial in the angles.  Tensor
Gauss-Legendre rules in ``(theta, tau)`` are therefore exact to rounding once
the kinks introduced by clipping (triple scheme, ``xi < 0``) are used as
panel breakpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .bloore import MINOR3_VARIABLES

WEIGHT = 0.75
DEFAULT_NODES = 64

# minor -> sign s with lam = exp(s * xi) for its rescaled coordinate
_SCALE_SIGN = {1: 1, 4: 1, 2: -1, 3: -1}


def weight(z):
    return WEIGHT * (1.0 - z * z)


def weight_cdf(z):
    return WEIGHT * (z - z**3 / 3.0) + 0.5


def shared_variable(a: int, b: int) -> tuple:
    """The single correlation coordinate common to minors ``a`` and ``b``."""
    if a == b or a not in MINOR3_VARIABLES or b not in MINOR3_VARIABLES:
        raise ValueError(f"need two distinct minors in 1..4, got ({a}, {b})")
    common = set(MINOR3_VARIABLES[a]) & set(MINOR3_VARIABLES[b])
    (pair,) = common
    return pair


@dataclass(frozen=True)
class CubeSchemeSpec:
    minors: tuple
    shared: dict = field(default_factory=dict)
    weight: float = WEIGHT

    @classmethod
    def for_minors(cls, *minors: int) -> "CubeSchemeSpec":
        ms = tuple(sorted(set(minors)))
        if not ms or len(ms) != len(minors) or any(m not in MINOR3_VARIABLES for m in ms):
            raise ValueError(f"invalid minor set {minors}")
        shared = {(a, b): shared_variable(a, b) for i, a in enumerate(ms) for b in ms[i + 1:]}
        return cls(ms, shared)


def _gl(a: float, b: float, n: int):
    x, w = leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def _panels(edges, n: int):
    xs, ws = zip(*(_gl(a, b, n) for a, b in zip(edges[:-1], edges[1:]) if b > a))
    return np.concatenate(xs), np.concatenate(ws)


def _plain(n: int):
    """Nodes for an unscaled coordinate ``u = cos(theta)``, weights including ``w(u) du``."""
    th, wt = _gl(0.0, math.pi, n)
    return th, wt * weight(np.cos(th)) * np.sin(th)


def _scaled(lam: float, n: int):
    """Nodes ``tau`` for a rescaled coordinate with ``lam * z = cos(tau)``.

    The weights carry ``w(z) dz`` and cover only ``|lam z| <= 1``.
    """
    if lam >= 1.0:
        a, b = 0.0, math.pi
    else:
        a = math.acos(lam)
        b = math.pi - a
    ta, wt = _gl(a, b, n)
    return ta, wt * weight(np.cos(ta) / lam) * np.sin(ta) / lam


def _mass(theta, tau):
    return weight_cdf(np.cos(theta - tau)) - weight_cdf(np.cos(theta + tau))


def _lam(k: int, xi: float) -> float:
    return math.exp(_SCALE_SIGN[k] * xi)


def _check_xi(xi: float) -> float:
    xi = float(xi)
    if not math.isfinite(xi):
        raise ValueError("xi must be finite")
    return xi


def cube_single(k: int, xi: float, n: int = DEFAULT_NODES, indicator: bool = True) -> float:
    """Probability that 3x3 minor ``k`` of the partial transpose is nonnegative.

    With ``indicator=False`` the same quadrature integrates the bare weight
    over the full cube and returns 1 up to rounding.
    """
    if k not in MINOR3_VARIABLES:
        raise ValueError(f"minor index must be in 1..4, got {k}")
    xi = _check_xi(xi)
    if not indicator:
        z, wz = _gl(-1.0, 1.0, n)
        return float(np.sum(wz * weight(z))) ** 3
    th, wth = _plain(n)
    ta, wta = _scaled(_lam(k, xi), n)
    return float(wth @ _mass(th[:, None], ta[None, :]) @ wta)


def _given_plain(lam: float, th: np.ndarray, n: int) -> np.ndarray:
    # P(minor >= 0 | plain shared coordinate cos(th))
    ta, wta = _scaled(lam, n)
    return _mass(th[:, None], ta[None, :]) @ wta


def _given_scaled(ta: np.ndarray, n: int) -> np.ndarray:
    # P(minor >= 0 | rescaled shared coordinate cos(ta) / lam)
    th, wth = _plain(n)
    return _mass(th[None, :], ta[:, None]) @ wth


def cube_paired(a: int, b: int, xi: float, n: int = DEFAULT_NODES, indicator: bool = True) -> float:
    """Probability that minors ``a`` and ``b`` are both nonnegative.

    The two minors share one coordinate ``z_s``; conditionally on it they are
    independent, so the result is ``int w(z_s) f_a(z_s) f_b(z_s) dz_s``.
    """
    s = shared_variable(a, b)
    xi = _check_xi(xi)
    if not indicator:
        z, wz = _gl(-1.0, 1.0, n)
        return float(np.sum(wz * weight(z))) ** 5
    scaled_a = MINOR3_VARIABLES[a][0] == s
    scaled_b = MINOR3_VARIABLES[b][0] == s
    if scaled_a != scaled_b:
        raise AssertionError("shared coordinate is rescaled in one minor only")
    if not scaled_a:
        th, wth = _plain(n)
        return float(wth @ (_given_plain(_lam(a, xi), th, n) * _given_plain(_lam(b, xi), th, n)))
    # both minors rescale the shared coordinate by the same lam
    lam = _lam(a, xi)
    ta, wta = _scaled(lam, n)
    f = _given_scaled(ta, n)
    return float(wta @ (f * f))


TRIPLE_MINORS = (2, 3, 4)


def _clipped_scaled_mass(th12: np.ndarray, th13: np.ndarray, lam: float) -> np.ndarray:
    # minor 4 conditioned on z12, z13: its rescaled coordinate z14 is private,
    # with lam z14 in [cos(th12 + th13), cos(th12 - th13)] and |z14| <= 1
    lo = np.cos(th12 + th13) / lam
    hi = np.cos(th12 - th13) / lam
    lo = np.clip(lo, -1.0, 1.0)
    hi = np.clip(hi, -1.0, 1.0)
    return weight_cdf(hi) - weight_cdf(lo)


def cube_triple(xi: float, n: int = 48, indicator: bool = True) -> float:
    """Probability that minors 2, 3 and 4 are simultaneously nonnegative.

    The three minors pairwise share ``z23`` (2, 3), ``z13`` (2, 4) and ``z12``
    (3, 4); each also owns one private coordinate (``z34``, ``z24``, ``z14``).
    Integrating the private ones in closed form leaves

        int w(z12) w(z13) w(z23) g2(z13, z23) g3(z12, z23) g4(z12, z13),

    a three-dimensional integral over the shared coordinates under the same
    product weight.  ``z23`` is rescaled by ``exp(-xi)`` in minors 2 and 3;
    minor 4 rescales its private ``z14`` by ``exp(xi)``, which must be clipped
    to ``[-1, 1]`` when ``xi < 0``.
    """
    xi = _check_xi(xi)
    if not indicator:
        z, wz = _gl(-1.0, 1.0, n)
        return float(np.sum(wz * weight(z))) ** 6
    lam23 = math.exp(-xi)
    lam14 = math.exp(xi)
    ta, wta = _scaled(lam23, n)
    th12, w12 = _plain(n)
    g3 = _mass(th12[:, None], ta[None, :])  # (i12, t)
    total = 0.0
    if lam14 >= 1.0:
        th13, w13 = _plain(n)
        g2 = _mass(th13[:, None], ta[None, :])  # (j13, t)
        g4 = _clipped_scaled_mass(th12[:, None], th13[None, :], lam14)  # (i12, j13)
        total = np.einsum("i,j,t,it,jt,ij->", w12, w13, wta, g3, g2, g4)
        return float(total)
    alpha = math.acos(lam14)
    rows = []
    for i, t12 in enumerate(th12):
        # kinks of the clipped mass in th13
        brk = [t12 - alpha, t12 + alpha, math.pi - alpha - t12, math.pi + alpha - t12]
        edges = np.unique(np.clip([0.0, *brk, math.pi], 0.0, math.pi))
        th13, wt = _panels(edges, n)
        w13 = wt * weight(np.cos(th13)) * np.sin(th13)
        g4 = _clipped_scaled_mass(t12, th13, lam14)
        g2 = _mass(th13[:, None], ta[None, :])
        rows.append(w12[i] * ((w13 * g4) @ g2))  # (t,)
    inner = np.array(rows)  # (i12, t)
    return float(np.sum(inner * g3 * wta[None, :]))
