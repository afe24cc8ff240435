"""Quasi-Monte Carlo estimation of DESFs and separability probabilities.

Points come from a scrambled Sobol sequence.  A point supplies three
uniforms for the diagonal (inverse-CDF stick breaking onto a symmetric
Dirichlet law) and one uniform per real correlation coordinate; candidates
outside the correlation elliptope are rejected.

Estimators split the index range into contiguous blocks.  Each block is
generated independently by fast-forwarding a fresh generator, reduced to
integer counts, and the counts are summed in block order.  Results therefore
depend only on ``(seed, n, block_size)``, never on the number of workers.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, special
from scipy.stats import qmc

from .bloore import (
    PAIR_INDEX,
    PSD_TOL,
    absolute_separability_gap,
    correlation_matrices,
    det4_batch,
    minor2_all_batch,
    minor3_batch,
    psd_mask,
    pt_correlation_batch,
)
from .desf import jacobian_closed

MAX_DIMENSION = 15
DEFAULT_BLOCK = 1 << 16
DEFAULT_SEED = 20240611
GENERATOR_NAME = "scipy.stats.qmc.Sobol (Owen-scrambled, Joe-Kuo direction numbers)"
MIN_ACCEPTED = 100


class LowDiscrepancySequence:
    """A scrambled Sobol stream with an index counter and random access by block.

    Parameters
    ----------
    dimension : int
        At most :data:`MAX_DIMENSION`.
    seed : int or None
        Scrambling seed; ``scramble=False`` gives the raw digital sequence.
    """

    def __init__(self, dimension: int, seed: int | None = DEFAULT_SEED, scramble: bool = True):
        if not 1 <= dimension <= MAX_DIMENSION:
            raise ValueError(f"dimension must be in 1..{MAX_DIMENSION}, got {dimension}")
        self.dimension = dimension
        self.seed = seed
        self.scramble = scramble
        self.index = 0
        self._engine = self._fresh()

    def _fresh(self):
        return qmc.Sobol(self.dimension, scramble=self.scramble, seed=self.seed)

    def points(self, count: int) -> np.ndarray:
        """The next ``count`` points; advances the index."""
        if count < 1:
            raise ValueError("count must be >= 1")
        with warnings.catch_warnings():
            # balance warnings for non-power-of-two counts are irrelevant here
            warnings.simplefilter("ignore", UserWarning)
            out = self._engine.random(count)
        self.index += count
        return out

    def skip(self, count: int) -> None:
        self._engine.fast_forward(count)
        self.index += count

    def block(self, start: int, count: int) -> np.ndarray:
        """Points ``start .. start + count - 1`` without touching this stream's index."""
        other = LowDiscrepancySequence(self.dimension, self.seed, self.scramble)
        if start:
            other.skip(start)
        return other.points(count)

    def metadata(self) -> dict:
        return {"generator": GENERATOR_NAME, "dimension": self.dimension, "seed": self.seed,
                "scramble": self.scramble}


def lds_points(seq: LowDiscrepancySequence, count: int) -> np.ndarray:
    return seq.points(count)


# ---------------------------------------------------------------------------
# Sampling maps


def dirichlet_parameter(beta: int) -> float:
    """Per-coordinate Dirichlet parameter of the diagonal law ``(prod rho_ii)^(3 beta/2)``."""
    return 1.5 * beta + 1.0


def sample_dirichlet(u: np.ndarray, alpha) -> np.ndarray:
    """Map ``(N, 3)`` uniforms to Dirichlet(alpha_1..alpha_4) by stick breaking."""
    u = np.asarray(u, dtype=float)
    a = np.broadcast_to(np.asarray(alpha, dtype=float), (4,))
    out = np.empty(u.shape[:-1] + (4,))
    rest = np.ones(u.shape[:-1])
    for i in range(3):
        b = special.betaincinv(a[i], a[i + 1:].sum(), u[..., i])
        out[..., i] = rest * b
        rest = rest - out[..., i]
    out[..., 3] = rest
    return np.clip(out, 0.0, None)


def sample_diag(beta: int, u: np.ndarray) -> np.ndarray:
    """Diagonal entries distributed as ``(rho11 rho22 rho33 rho44)^(3 beta/2)`` on the simplex."""
    return sample_dirichlet(u, dirichlet_parameter(beta))


def xi_from_diag(d: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return 0.5 * (np.log(d[..., 0]) + np.log(d[..., 3]) - np.log(d[..., 1]) - np.log(d[..., 2]))


def unit_disk(u: np.ndarray) -> np.ndarray:
    """Area-uniform points of the unit disk from ``(..., 2)`` uniforms."""
    return np.sqrt(u[..., 0]) * np.exp(2j * np.pi * u[..., 1])


# ---------------------------------------------------------------------------
# Estimates and tables


@dataclass(frozen=True)
class Estimate:
    mean: float
    std_error: float
    n_samples: int
    n_candidates: int = 0
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def ci_low(self) -> float:
        return self.mean - 4.0 * self.std_error

    @property
    def ci_high(self) -> float:
        return self.mean + 4.0 * self.std_error

    @property
    def acceptance_rate(self) -> float:
        return self.n_samples / self.n_candidates if self.n_candidates else math.nan

    def z_score(self, target: float) -> float:
        return (self.mean - target) / self.std_error if self.std_error > 0 else math.inf

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(ci_low=self.ci_low, ci_high=self.ci_high)
        return d


def binary_estimate(hits: int, n: int, n_candidates: int = 0, metadata: dict | None = None) -> Estimate:
    """Mean and ``sqrt(p (1 - p) / n)`` standard error of a 0/1 indicator."""
    if n <= 0:
        return Estimate(math.nan, math.nan, 0, n_candidates, metadata or {})
    p = hits / n
    return Estimate(p, math.sqrt(p * (1.0 - p) / n), int(n), int(n_candidates), metadata or {})


@dataclass(frozen=True)
class DesfRow:
    xi: float
    value: float
    std_error: float
    n_accepted: int

    @property
    def flagged(self) -> bool:
        return self.n_accepted < MIN_ACCEPTED


@dataclass(frozen=True)
class DesfTable:
    test: str
    rows: tuple
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def xi(self) -> np.ndarray:
        return np.array([r.xi for r in self.rows])

    @property
    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.rows])

    @property
    def std_errors(self) -> np.ndarray:
        return np.array([r.std_error for r in self.rows])

    def at(self, xi: float) -> DesfRow:
        i = int(np.argmin(np.abs(self.xi - xi)))
        return self.rows[i]


def default_grid() -> np.ndarray:
    """81 uniform points on [-4, 4]; exact symmetry about 0."""
    k = np.arange(-40, 41)
    return k / 10.0


# ---------------------------------------------------------------------------
# Separability tests: (z, xi, diag) -> boolean mask


@dataclass(frozen=True)
class SeparabilityTest:
    name: str
    fn: Callable
    complex_ok: bool = False
    needs_diag: bool = False

    def __call__(self, z, xi, diag=None):
        if np.iscomplexobj(z) and not self.complex_ok:
            raise ValueError(f"test {self.name!r} supports real coordinates only")
        return self.fn(z, xi, diag)


def _full_ph(z, xi, diag):
    zp = pt_correlation_batch(z, xi)
    if np.iscomplexobj(zp):
        return np.linalg.det(correlation_matrices(zp)).real >= -PSD_TOL
    return det4_batch(zp) >= -PSD_TOL


def _minors2(z, xi, diag):
    return minor2_all_batch(pt_correlation_batch(z, xi))


def _minor2(pair):
    idx = PAIR_INDEX[pair]

    def f(z, xi, diag):
        return 1.0 - np.abs(pt_correlation_batch(z, xi)[..., idx]) ** 2 >= -PSD_TOL
    return f


def _single(k):
    def f(z, xi, diag):
        return minor3_batch(pt_correlation_batch(z, xi), k) >= -PSD_TOL
    return f


def _pair(a, b):
    def f(z, xi, diag):
        zp = pt_correlation_batch(z, xi)
        return (minor3_batch(zp, a) >= -PSD_TOL) & (minor3_batch(zp, b) >= -PSD_TOL)
    return f


def _absolute(z, xi, diag):
    s = np.sqrt(diag)
    rho = correlation_matrices(z) * s[:, :, None] * s[:, None, :]
    return absolute_separability_gap(np.linalg.eigvalsh(rho)) <= PSD_TOL


def get_test(name: str) -> SeparabilityTest:
    """Look up a test by name.

    ``full_ph``, ``minors2x2_all``, ``minors2x2_single:A,B`` (A,B = 1,4 or
    2,3; the only 2x2 minors that depend on xi), ``minors3x3_single:K``,
    ``minors3x3_pair:A,B`` and ``absolute`` (dashes accepted for underscores).
    """
    key = name.strip().lower().replace("-", "_")
    if key == "full_ph":
        return SeparabilityTest("full_ph", _full_ph, complex_ok=True)
    if key == "minors2x2_all":
        return SeparabilityTest("minors2x2_all", _minors2, complex_ok=True)
    if key == "absolute":
        return SeparabilityTest("absolute", _absolute, complex_ok=True, needs_diag=True)
    head, _, arg = key.partition(":")
    try:
        idx = [int(t) for t in arg.split(",")] if arg else []
    except ValueError:
        idx = []
    if head == "minors2x2_single" and sorted(idx) in ([1, 4], [2, 3]):
        a, b = sorted(idx)
        return SeparabilityTest(f"minors2x2_single:{a},{b}", _minor2((a, b)), complex_ok=True)
    if head == "minors3x3_single" and len(idx) == 1 and idx[0] in range(1, 5):
        return SeparabilityTest(f"minors3x3_single:{idx[0]}", _single(idx[0]))
    if head == "minors3x3_pair" and len(idx) == 2 and idx[0] != idx[1] and set(idx) <= {1, 2, 3, 4}:
        a, b = sorted(idx)
        return SeparabilityTest(f"minors3x3_pair:{a},{b}", _pair(a, b))
    raise ValueError(f"unknown separability test {name!r}")


# ---------------------------------------------------------------------------
# Block machinery


def _blocks(n: int, block_size: int):
    if n < 1:
        raise ValueError("n must be >= 1")
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    return [(s, min(block_size, n - s)) for s in range(0, n, block_size)]


def _run_blocks(work: Callable, n: int, block_size: int, workers: int):
    blocks = _blocks(n, block_size)
    if workers <= 1:
        parts = [work(s, c) for s, c in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda sc: work(*sc), blocks))
    total = parts[0]
    for p in parts[1:]:
        total = {k: total[k] + p[k] for k in total}
    return total


def _real_candidates(u: np.ndarray) -> np.ndarray:
    return 2.0 * u - 1.0


def _complex_candidates(u: np.ndarray) -> np.ndarray:
    return unit_disk(u.reshape(u.shape[0], -1, 2))


# ---------------------------------------------------------------------------
# Estimators


def estimate_desf(
    test: str,
    xi_grid=None,
    n: int = 1 << 20,
    seed: int = DEFAULT_SEED,
    block_size: int = DEFAULT_BLOCK,
    workers: int = 1,
) -> DesfTable:
    """Empirical DESF on a grid.

    The positivity region of the correlation coordinates does not depend on
    ``xi``, so one set of accepted points serves every grid value.

    Parameters
    ----------
    n : int
        Number of candidate points drawn from the 6-D sequence.
    """
    t = get_test(test)
    if t.needs_diag:
        raise ValueError("the absolute-separability test depends on the full diagonal, not on xi alone")
    grid = default_grid() if xi_grid is None else np.asarray(xi_grid, dtype=float)
    seq = LowDiscrepancySequence(6, seed)

    def work(start, count):
        z = _real_candidates(seq.block(start, count))
        z = z[psd_mask(z)]
        hits = np.array([np.count_nonzero(t(z, x)) for x in grid], dtype=np.int64)
        return {"accepted": len(z), "hits": hits}

    tot = _run_blocks(work, n, block_size, workers)
    acc = int(tot["accepted"])
    rows = []
    for x, h in zip(grid, tot["hits"]):
        e = binary_estimate(int(h), acc)
        rows.append(DesfRow(float(x), e.mean, e.std_error, acc))
    meta = dict(seq.metadata(), n=n, block_size=block_size, test=t.name, accepted=acc)
    return DesfTable(t.name, tuple(rows), meta)


def default_xi_bins() -> np.ndarray:
    inner = np.linspace(-3.0, 3.0, 25)
    return np.concatenate([[-np.inf], inner, [np.inf]])


@dataclass(frozen=True)
class SepProbResult:
    estimate: Estimate
    bin_edges: np.ndarray
    bin_accepted: np.ndarray
    bin_hits: np.ndarray

    def binned_table(self) -> DesfTable:
        rows = []
        for lo, hi, a, h in zip(self.bin_edges[:-1], self.bin_edges[1:], self.bin_accepted, self.bin_hits):
            e = binary_estimate(int(h), int(a))
            mid = 0.5 * (lo + hi) if np.isfinite(lo) and np.isfinite(hi) else (hi if np.isfinite(hi) else lo)
            rows.append(DesfRow(float(mid), e.mean, e.std_error, int(a)))
        return DesfTable(self.estimate.metadata.get("test", ""), tuple(rows), self.estimate.metadata)


def _run_joint(t: SeparabilityTest, beta: int, n: int, seed: int, block_size: int, workers: int,
               bins: np.ndarray, candidates: Callable, zdim: int, alpha, assemble=None) -> SepProbResult:
    seq = LowDiscrepancySequence(3 + zdim, seed)
    nb = len(bins) - 1

    def work(start, count):
        u = seq.block(start, count)
        z = candidates(u[:, 3:])
        if assemble is not None:
            z = assemble(z)
        keep = psd_mask(z)
        z = z[keep]
        d = sample_dirichlet(u[keep, :3], alpha)
        xi = xi_from_diag(d)
        ok = t(z, xi, d)
        b = np.clip(np.searchsorted(bins, xi, side="right") - 1, 0, nb - 1)
        return {
            "accepted": len(z),
            "hits": int(np.count_nonzero(ok)),
            "bin_acc": np.bincount(b, minlength=nb).astype(np.int64),
            "bin_hits": np.bincount(b, weights=ok, minlength=nb).astype(np.int64),
        }

    tot = _run_blocks(work, n, block_size, workers)
    meta = dict(seq.metadata(), n=n, block_size=block_size, test=t.name, beta=beta)
    est = binary_estimate(int(tot["hits"]), int(tot["accepted"]), n, meta)
    return SepProbResult(est, np.asarray(bins, dtype=float), tot["bin_acc"], tot["bin_hits"])


def estimate_sep_prob(
    test: str = "full_ph",
    beta: int = 1,
    n: int = 1 << 20,
    seed: int = DEFAULT_SEED,
    block_size: int = DEFAULT_BLOCK,
    workers: int = 1,
    bins=None,
) -> SepProbResult:
    """Direct joint sampling of diagonal and correlations.

    ``n`` counts candidate points; ``estimate.n_samples`` counts those inside
    the correlation elliptope.  For ``beta = 2`` the six correlations are
    complex, drawn uniformly from the unit disk (15-dimensional points).
    """
    t = get_test(test)
    if beta not in (1, 2):
        raise ValueError("direct sampling supports beta = 1 and 2")
    if beta == 2 and t.name != "full_ph":
        raise ValueError("complex sampling is implemented for the full_ph test only")
    bins = default_xi_bins() if bins is None else np.asarray(bins, dtype=float)
    if beta == 1:
        return _run_joint(t, 1, n, seed, block_size, workers, bins, _real_candidates, 6, dirichlet_parameter(1))
    return _run_joint(t, 2, n, seed, block_size, workers, bins, _complex_candidates, 12, dirichlet_parameter(2))


def estimate_absolute(n: int = 1 << 20, seed: int = DEFAULT_SEED, block_size: int = DEFAULT_BLOCK,
                      workers: int = 1) -> SepProbResult:
    """Fraction of real Hilbert-Schmidt states that are absolutely separable."""
    return estimate_sep_prob("absolute", 1, n, seed, block_size, workers)


def absolute_implies_separable(n: int = 1 << 18, seed: int = DEFAULT_SEED) -> int:
    """Number of sampled states that are absolutely separable yet fail the PPT test (should be 0)."""
    seq = LowDiscrepancySequence(9, seed)
    u = seq.points(n)
    z = _real_candidates(u[:, 3:])
    keep = psd_mask(z)
    z = z[keep]
    d = sample_diag(1, u[keep, :3])
    xi = xi_from_diag(d)
    ab = _absolute(z, xi, d)
    ph = _full_ph(z, xi, d)
    return int(np.count_nonzero(ab & ~ph))


# Complex-pair family: z12, z14, z23 complex, the other correlations zero,
# diagonal weight rho11^2 rho22^2 rho33 rho44.
SCENARIO_ALPHA = (3.0, 3.0, 2.0, 2.0)
SCENARIO_PAIRS = ((1, 2), (1, 4), (2, 3))


def _scenario_assemble(w: np.ndarray) -> np.ndarray:
    z = np.zeros((w.shape[0], 6), dtype=complex)
    for k, p in enumerate(SCENARIO_PAIRS):
        z[:, PAIR_INDEX[p]] = w[:, k]
    return z


def estimate_scenario(n: int = 1 << 20, seed: int = DEFAULT_SEED, block_size: int = DEFAULT_BLOCK,
                      workers: int = 1, bins=None) -> SepProbResult:
    """Separability probability of the three-complex-entry family (9-D points)."""
    t = get_test("full_ph")
    bins = default_xi_bins() if bins is None else np.asarray(bins, dtype=float)
    res = _run_joint(t, 2, n, seed, block_size, workers, bins, _complex_candidates, 6, SCENARIO_ALPHA,
                     assemble=_scenario_assemble)
    meta = dict(res.estimate.metadata, test="scenario_complex_pair", beta=None)
    est = Estimate(res.estimate.mean, res.estimate.std_error, res.estimate.n_samples, res.estimate.n_candidates, meta)
    return SepProbResult(est, res.bin_edges, res.bin_accepted, res.bin_hits)


# ---------------------------------------------------------------------------
# Checks built on the estimators


def desf_table_probability(table: DesfTable, jac: Callable = jacobian_closed) -> tuple[float, float]:
    """``int S_hat J`` over the table grid (Simpson on each side of 0) and its standard error.

    Grid values share one set of samples, so the error is bounded by the
    fully-correlated sum ``sum |w_i| se_i``.
    """
    x = table.xi
    if not np.allclose(x, -x[::-1]) or 0.0 not in x or len(x) % 4 != 1:
        raise ValueError("need a symmetric grid with an even number of intervals on each side of 0")
    mid = len(x) // 2
    y = table.values * jac(x)
    s = table.std_errors * jac(x)
    left, right = slice(0, mid + 1), slice(mid, None)
    val = integrate.simpson(y[left], x=x[left]) + integrate.simpson(y[right], x=x[right])
    err = integrate.simpson(s[left], x=x[left]) + integrate.simpson(s[right], x=x[right])
    return float(val), float(err)


def binned_probability(result: SepProbResult, jac: Callable = jacobian_closed) -> tuple[float, float]:
    """``sum_b P(xi in b) S_hat_b`` with exact bin masses from ``jac``, and its standard error."""
    edges = np.clip(result.bin_edges, -40.0, 40.0)
    mass = np.array([integrate.quad(jac, a, b, points=[0.0] if a < 0 < b else None, limit=200)[0]
                     for a, b in zip(edges[:-1], edges[1:])])
    acc = result.bin_accepted.astype(float)
    hits = result.bin_hits.astype(float)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(acc > 0, hits / acc, 0.0)
        var = np.where(acc > 0, p * (1 - p) / acc, 0.0)
    return float(mass @ p), float(math.sqrt(mass**2 @ var))


def binned_curve_check(result: SepProbResult, curve, jac: Callable) -> np.ndarray:
    """Z-scores of binned estimates against ``curve`` averaged over each bin under ``jac``."""
    z = []
    for lo, hi, a, h in zip(result.bin_edges[:-1], result.bin_edges[1:], result.bin_accepted, result.bin_hits):
        if a < MIN_ACCEPTED:
            continue
        lo, hi = max(lo, -40.0), min(hi, 40.0)
        pts = [0.0] if lo < 0 < hi else None
        m = integrate.quad(jac, lo, hi, points=pts, limit=200)[0]
        s = integrate.quad(lambda x: curve(x) * jac(x), lo, hi, points=pts, limit=200)[0] / m
        p = h / a
        se = math.sqrt(max(s * (1 - s), 1e-300) / a)
        z.append((p - s) / se)
    return np.array(z)


def xi_histogram(beta: int = 1, n: int = 1 << 18, edges=None, seed: int = DEFAULT_SEED, jac: Callable | None = None):
    """Counts of sampled ``xi`` per bin and the counts expected from the jacobian.

    Returns ``(edges, observed, expected, chi2, dof)``.
    """
    edges = np.linspace(-3.0, 3.0, 25) if edges is None else np.asarray(edges, dtype=float)
    if jac is None:
        if beta == 1:
            jac = jacobian_closed
        else:
            from .quadrature import jacobian_for
            jac = np.vectorize(jacobian_for(beta))
    full = np.concatenate([[-40.0], edges, [40.0]])
    u = LowDiscrepancySequence(3, seed).points(n)
    xi = xi_from_diag(sample_diag(beta, u))
    obs = np.histogram(np.clip(xi, -40.0, 40.0), bins=full)[0]
    mass = np.array([integrate.quad(jac, a, b, limit=200)[0] for a, b in zip(full[:-1], full[1:])])
    exp_ = n * mass
    use = exp_ >= 5
    chi2 = float(np.sum((obs[use] - exp_[use]) ** 2 / exp_[use]))
    return full, obs, exp_, chi2, int(use.sum() - 1)


def dominance_violations(tables: dict, k: float = 3.0) -> list:
    """Pointwise chain checks ``full <= pair <= single`` and ``min(single) <= 2x2`` within ``k`` SE.

    ``tables`` maps test names to DesfTables on a common grid.  Returns a list
    of ``(lesser, greater, xi, z)`` for every violation.
    """
    out = []

    def check(a, b):
        ta, tb = tables[a], tables[b]
        se = np.sqrt(ta.std_errors**2 + tb.std_errors**2)
        gap = ta.values - tb.values
        for x, g, s in zip(ta.xi, gap, se):
            if g > k * s + 1e-15:
                out.append((a, b, float(x), float(g / s) if s > 0 else math.inf))

    pairs = [n for n in tables if n.startswith("minors3x3_pair")]
    singles = [n for n in tables if n.startswith("minors3x3_single")]
    if "full_ph" in tables:
        for p in pairs:
            check("full_ph", p)
    for p in pairs:
        a, b = (int(c) for c in p.split(":")[1].split(","))
        for s in singles:
            if int(s.split(":")[1]) in (a, b):
                check(p, s)
    if singles and "minors2x2_all" in tables:
        stack = np.array([tables[s].values for s in singles])
        idx = np.argmin(stack, axis=0)
        cols = np.arange(stack.shape[1])
        vals = stack[idx, cols]
        ses = np.array([tables[s].std_errors for s in singles])[idx, cols]
        t2 = tables["minors2x2_all"]
        se = np.sqrt(ses**2 + t2.std_errors**2)
        for x, g, s in zip(t2.xi, vals - t2.values, se):
            if g > k * s + 1e-15:
                out.append(("min_single", "minors2x2_all", float(x), float(g / s) if s > 0 else math.inf))
    return out
