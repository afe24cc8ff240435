"""Real two-qubit density matrices in Bloore (correlation) coordinates.

A state is written ``rho = D^(1/2) Z D^(1/2)`` with ``D`` the diagonal and
``Z`` a unit-diagonal correlation matrix whose six off-diagonal entries are
``z_ij = rho_ij / sqrt(rho_ii rho_jj)``.  Positivity of ``rho`` depends only
on ``Z``; the Peres-Horodecki test depends on the diagonal only through

    xi = 1/2 log(rho_11 rho_44 / (rho_22 rho_33)).

Scalar functions take a 6-vector ``z`` ordered as ``PAIRS``.  The ``*_batch``
functions take ``(N, 6)`` arrays and are what the samplers use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

#: 1-based index pairs of the six off-diagonal coordinates, in storage order.
PAIRS = ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4))
PAIR_INDEX = {pair: k for k, pair in enumerate(PAIRS)}

PSD_TOL = 1e-12
SIMPLEX_TOL = 1e-12

# Variables entering each 3x3 principal minor of the partial transpose
# (k = deleted row/column).  The first entry is the coordinate rescaled by
# exp(+-xi) under partial transposition.
MINOR3_VARIABLES = {
    1: ((1, 4), (2, 4), (3, 4)),
    2: ((2, 3), (1, 3), (3, 4)),
    3: ((2, 3), (1, 2), (2, 4)),
    4: ((1, 4), (1, 2), (1, 3)),
}


class DomainError(ValueError):
    """Input outside the domain of a state-space operation."""


@dataclass(frozen=True)
class XiValue:
    """The diagonal cross-ratio variable and its older aliases ``nu`` and ``mu``."""

    xi: float

    @property
    def nu(self) -> float:
        return math.exp(2.0 * self.xi)

    @property
    def mu(self) -> float:
        return math.exp(self.xi)

    def __float__(self) -> float:
        return float(self.xi)


XiLike = Union[XiValue, float]


def _check_diag(diag: Sequence[float]) -> np.ndarray:
    d = np.asarray(diag, dtype=float)
    if d.shape != (4,):
        raise DomainError(f"diagonal must have 4 entries, got shape {d.shape}")
    if np.any(d < -SIMPLEX_TOL) or abs(d.sum() - 1.0) > SIMPLEX_TOL:
        raise DomainError(f"diagonal {d.tolist()} is not on the probability simplex")
    return np.clip(d, 0.0, None)


def _check_z(z: Sequence[float]) -> np.ndarray:
    v = np.asarray(z, dtype=float)
    if v.shape != (6,):
        raise DomainError(f"z must have 6 entries, got shape {v.shape}")
    if np.any(np.abs(v) > 1.0):
        raise DomainError(f"correlation coordinates must lie in [-1, 1], got {v.tolist()}")
    return v


@dataclass(frozen=True)
class BlooreState:
    """Diagonal simplex point plus six correlation coordinates.

    Construction validates the simplex and ``|z| <= 1`` but not positivity;
    use :meth:`is_valid` (or :func:`correlation_psd`) for that.
    """

    diag: tuple
    z: tuple
    _rho: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        d = _check_diag(self.diag)
        v = _check_z(self.z)
        object.__setattr__(self, "diag", tuple(d.tolist()))
        object.__setattr__(self, "z", tuple(v.tolist()))
        object.__setattr__(self, "_rho", rho_from_bloore(d, v))

    @classmethod
    def from_rho(cls, rho: np.ndarray) -> "BlooreState":
        rho = np.asarray(rho, dtype=float)
        d = np.diag(rho).copy()
        if np.any(d <= 0):
            raise DomainError("from_rho needs a strictly positive diagonal")
        s = np.sqrt(d)
        z = [rho[i - 1, j - 1] / (s[i - 1] * s[j - 1]) for i, j in PAIRS]
        return cls(tuple(d), tuple(np.clip(z, -1.0, 1.0)))

    @property
    def rho(self) -> np.ndarray:
        return self._rho.copy()

    @property
    def xi(self) -> XiValue:
        return xi_of(self.diag)

    def is_valid(self) -> bool:
        return correlation_psd(self.z)


def rho_from_bloore(diag: Sequence[float], z: Sequence[float]) -> np.ndarray:
    """Assemble the 4x4 density matrix; positivity is not checked."""
    d = _check_diag(diag)
    v = _check_z(z)
    s = np.sqrt(d)
    return correlation_matrix(v) * np.outer(s, s)


def xi_of(diag: Sequence[float]) -> XiValue:
    d = _check_diag(diag)
    if np.any(d <= 0.0):
        raise DomainError("xi is infinite when a diagonal entry vanishes")
    return XiValue(0.5 * (math.log(d[0]) + math.log(d[3]) - math.log(d[1]) - math.log(d[2])))


def correlation_matrix(z: Sequence[float]) -> np.ndarray:
    v = np.asarray(z, dtype=float)
    m = np.eye(4)
    for k, (i, j) in enumerate(PAIRS):
        m[i - 1, j - 1] = m[j - 1, i - 1] = v[k]
    return m


def correlation_psd(z: Sequence[float]) -> bool:
    """True iff the correlation matrix built from ``z`` is positive semidefinite."""
    v = _check_z(z)
    return bool(np.linalg.eigvalsh(correlation_matrix(v))[0] >= -PSD_TOL)


def pt_correlation(z: Sequence[float], xi: XiLike) -> np.ndarray:
    """Correlation coordinates of the partial transpose.

    Partial transposition exchanges rho_14 and rho_23; renormalising by the
    unchanged diagonal turns that into ``z'_14 = e^-xi z_23`` and
    ``z'_23 = e^xi z_14``.  The result may leave [-1, 1].
    """
    v = np.array(z, dtype=float)
    if v.shape != (6,):
        raise DomainError(f"z must have 6 entries, got shape {v.shape}")
    x = float(xi)
    out = v.copy()
    out[2] = math.exp(-x) * v[3]
    out[3] = math.exp(x) * v[2]
    return out


def pt_principal_minor(z: Sequence[float], xi: XiLike, order: int, index: int | None = None) -> float:
    """A principal minor of the partial-transposed correlation matrix.

    ``order=2``: ``index`` 1..6 selects the pair in ``PAIRS`` order.
    ``order=3``: ``index`` k = 1..4 is the deleted row/column.
    ``order=4``: the full determinant; ``index`` is ignored.
    """
    zp = correlation_matrix(pt_correlation(z, xi))
    if order == 2:
        if index not in range(1, 7):
            raise DomainError(f"2x2 minor index must be 1..6, got {index}")
        i, j = PAIRS[index - 1]
        return float(1.0 - zp[i - 1, j - 1] ** 2)
    if order == 3:
        if index not in range(1, 5):
            raise DomainError(f"3x3 minor index must be 1..4, got {index}")
        keep = [r for r in range(4) if r != index - 1]
        return float(np.linalg.det(zp[np.ix_(keep, keep)]))
    if order == 4:
        return float(np.linalg.det(zp))
    raise DomainError(f"minor order must be 2, 3 or 4, got {order}")


def _require_valid(state: BlooreState) -> None:
    if not state.is_valid():
        raise DomainError("state is not a density matrix (correlation matrix not PSD)")


def pt_min_eigenvalue(state: BlooreState) -> float:
    zp = correlation_matrix(pt_correlation(state.z, state.xi))
    return float(np.linalg.eigvalsh(zp)[0])


def peres_separable(state: BlooreState, method: str = "eigenvalue") -> bool:
    """Peres-Horodecki test (exact for two qubits).

    ``method="eigenvalue"`` checks the smallest eigenvalue of the transposed
    correlation matrix; ``method="determinant"`` checks the sign of its
    determinant, which suffices because a two-qubit partial transpose has at
    most one negative eigenvalue.
    """
    _require_valid(state)
    if method == "eigenvalue":
        return pt_min_eigenvalue(state) >= -PSD_TOL
    if method == "determinant":
        return pt_principal_minor(state.z, state.xi, 4) >= -PSD_TOL
    raise ValueError(f"unknown method {method!r}")


def absolute_separability_gap(eigenvalues: np.ndarray) -> np.ndarray:
    """``l1 - l3 - 2 sqrt(l2 l4)`` for eigenvalues sorted in decreasing order.

    Works on a trailing axis of length 4, so batches are accepted.
    """
    lam = np.sort(np.asarray(eigenvalues, dtype=float), axis=-1)[..., ::-1]
    prod = np.clip(lam[..., 1] * lam[..., 3], 0.0, None)
    return lam[..., 0] - lam[..., 2] - 2.0 * np.sqrt(prod)


def absolutely_separable(state: BlooreState) -> bool:
    """Separable under every global unitary; decided from the spectrum alone."""
    lam = np.linalg.eigvalsh(state.rho)
    return bool(absolute_separability_gap(lam) <= PSD_TOL)


# ---------------------------------------------------------------------------
# Batched kernels.  Rows of ``z`` follow PAIRS; ``xi`` broadcasts against rows.


def correlation_matrices(z: np.ndarray) -> np.ndarray:
    """Stack ``(N, 6)`` coordinates (real or complex) into ``(N, 4, 4)`` Hermitian matrices."""
    z = np.asarray(z)
    m = np.zeros(z.shape[:-1] + (4, 4), dtype=z.dtype)
    m[..., range(4), range(4)] = 1.0
    for k, (i, j) in enumerate(PAIRS):
        m[..., i - 1, j - 1] = z[..., k]
        m[..., j - 1, i - 1] = np.conj(z[..., k])
    return m


def ldl_pivots(m: np.ndarray) -> np.ndarray:
    """Pivots of an unpivoted LDL^H factorisation of each matrix in a stack.

    A Hermitian matrix with unit diagonal is positive definite iff every
    pivot is positive.  A zero pivot (boundary, measure zero) propagates as
    inf/nan and is treated as a failure by :func:`psd_mask`.
    """
    m = np.asarray(m)
    n = m.shape[-1]
    lower = np.zeros_like(m)
    piv = np.zeros(m.shape[:-2] + (n,), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        for j in range(n):
            acc = m[..., j, j].real.copy()
            for k in range(j):
                acc -= np.abs(lower[..., j, k]) ** 2 * piv[..., k]
            piv[..., j] = acc
            for i in range(j + 1, n):
                s = m[..., i, j].copy()
                for k in range(j):
                    s -= lower[..., i, k] * np.conj(lower[..., j, k]) * piv[..., k]
                lower[..., i, j] = s / acc
    return piv


def psd_mask(z: np.ndarray) -> np.ndarray:
    """Vectorised positivity screen for ``(N, 6)`` real or complex coordinates.

    Real input uses the leading principal minors in closed form (the LDL
    pivots are their successive ratios); complex input factorises.
    """
    z = np.asarray(z)
    if not np.iscomplexobj(z):
        a, b, d = z[..., 0], z[..., 1], z[..., 3]  # z12 z13 z23
        m2 = 1.0 - a * a
        m3 = m2 - b * b - d * d + 2.0 * a * b * d
        return (m2 >= -PSD_TOL) & (m3 >= -PSD_TOL) & (det4_batch(z) >= -PSD_TOL)
    piv = ldl_pivots(correlation_matrices(z))
    return np.all(piv >= -PSD_TOL, axis=-1) & np.all(np.isfinite(piv), axis=-1)


def pt_correlation_batch(z: np.ndarray, xi) -> np.ndarray:
    """Batched :func:`pt_correlation`; complex inputs also conjugate z_12 and z_34."""
    z = np.asarray(z)
    xi = np.asarray(xi, dtype=float)
    out = z.copy()
    out[..., 2] = np.exp(-xi) * z[..., 3]
    out[..., 3] = np.exp(xi) * z[..., 2]
    if np.iscomplexobj(z):
        out[..., 0] = np.conj(z[..., 0])
        out[..., 5] = np.conj(z[..., 5])
    return out


def det4_batch(z: np.ndarray) -> np.ndarray:
    """Determinant of real unit-diagonal 4x4 correlation matrices, closed form."""
    a, b, c, d, e, f = (z[..., k] for k in range(6))  # z12 z13 z14 z23 z24 z34
    return (
        1.0
        - (a * a + b * b + c * c + d * d + e * e + f * f)
        + (a * a * f * f + b * b * e * e + c * c * d * d)
        + 2.0 * (a * b * d + a * c * e + b * c * f + d * e * f)
        - 2.0 * (a * b * e * f + a * c * d * f + b * c * d * e)
    )


def minor3_batch(zp: np.ndarray, k: int) -> np.ndarray:
    """3x3 principal minor ``k`` of already-transposed real coordinates ``zp``."""
    s, u, v = (zp[..., PAIR_INDEX[p]] for p in PAIRS if k not in p)
    return 1.0 + 2.0 * s * u * v - s * s - u * u - v * v


def minor2_all_batch(zp: np.ndarray) -> np.ndarray:
    """True where all six 2x2 principal minors are nonnegative."""
    return np.all(1.0 - np.abs(zp) ** 2 >= -PSD_TOL, axis=-1)
