"""The acceptance suite: numbered criteria with pinned tolerances and time budgets.

``run_criteria()`` evaluates them in order and returns one
:class:`CriterionResult` each.  ``scale="full"`` uses the stated sample sizes
(10^7 candidate points for the headline estimates); ``scale="quick"`` shrinks
the QMC runs for smoke testing, which loosens nothing but the statistics.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import mpmath as mp
import numpy as np

from . import bloore
from .cubes import cube_paired, cube_single, cube_triple
from .desf import catalog, jacobian_closed, paired_minor_curve, paired_product_curve, reflect, s3x3_product_curve
from .qmc import (
    SCENARIO_ALPHA,
    absolute_implies_separable,
    binned_curve_check,
    binned_probability,
    desf_table_probability,
    dominance_violations,
    estimate_absolute,
    estimate_desf,
    estimate_scenario,
    estimate_sep_prob,
)
from .quadrature import (
    boundary_halve,
    dirichlet_xi_density,
    integrate_line,
    jacobian_numeric,
    power_class_probability,
    sep_probability,
)

PI = mp.pi


@dataclass(frozen=True)
class CriterionResult:
    id: str
    title: str
    passed: bool
    detail: str
    seconds: float
    budget: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.id:>3} {self.title}: {self.detail} ({self.seconds:.1f}s / {self.budget:.0f}s)"


def _hp(expr: Callable) -> float:
    with mp.workdps(40):
        return float(expr())


class _Checks:
    """Accumulates sub-checks of one criterion into a pass flag and a detail string."""

    def __init__(self):
        self.ok = True
        self.parts = []

    def close(self, label, value, target, tol):
        err = abs(value - target)
        good = err <= tol
        self.ok &= good
        self.parts.append(f"{label} {value:.10g} vs {target:.10g} |d|={err:.2e}{'' if good else ' > ' + format(tol, '.0e')}")

    def within_se(self, label, est, target, k=3.0):
        z = est.z_score(target)
        good = abs(z) < k
        self.ok &= good
        self.parts.append(f"{label} {est.mean:.6f}+-{est.std_error:.1e} vs {target:.7f} z={z:+.2f}")

    def flag(self, label, good, info=""):
        self.ok &= bool(good)
        self.parts.append(f"{label}{': ' + info if info else ''}{'' if good else ' FAILED'}")


@dataclass(frozen=True)
class Scale:
    n_direct: int
    n_desf: int
    n_tables: int
    n_props: int


SCALES = {
    "full": Scale(n_direct=10_000_000, n_desf=1 << 22, n_tables=1 << 20, n_props=100_000),
    "quick": Scale(n_direct=1 << 19, n_desf=1 << 18, n_tables=1 << 17, n_props=20_000),
}


# ---------------------------------------------------------------------------
# criteria


def c1(s):
    c = _Checks()
    c.close("int J", integrate_line(jacobian_closed).value, 1.0, 1e-9)
    return c


def _exact(name, expr, tol=1e-9):
    def f(s):
        c = _Checks()
        c.close(name, sep_probability(catalog(name)), _hp(expr), tol)
        return c
    return f


def c5(s):
    c = _Checks()
    c.close("conjecture", sep_probability(catalog("conjecture")), 29 / 64, 1e-9)
    c.close("previous_conjecture", sep_probability(catalog("previous_conjecture")), 8 / 17, 1e-9)
    return c


def c6(s):
    c = _Checks()
    c.close("paired_dominant", sep_probability(catalog("paired_dominant")), 0.585542, 1e-6)
    target = _hp(lambda: PI**2 * (18031791 * PI**2 - 177044420) / (2**14 * 5**2 * 7**2))
    c.close("paired product", sep_probability(paired_product_curve()), target, 1e-6)
    return c


def c7(s):
    c = _Checks()
    # the single-minor product ansatz: s3x3 times its reflection
    c.close("s3x3 x reflect(s3x3)", sep_probability(s3x3_product_curve()), 0.576219, 1e-6)
    c.close("paired_greater", sep_probability(catalog("paired_greater")),
            _hp(lambda: mp.mpf(7724) / 525 - 5751 * PI**2 / 4096), 1e-9)
    return c


def c8(s):
    c = _Checks()
    pi2 = math.pi**2
    c.close("intermediate(0)", catalog("intermediate")(0.0), 45 * pi2 / 512, 1e-12)
    c.close("conjecture(0)", catalog("conjecture")(0.0), 4095 * pi2 / 2**16, 1e-12)
    meet = 11127 * pi2 / 143360
    c.close("paired(1,4)(0)", paired_minor_curve((1, 4))(0.0), meet, 1e-12)
    c.close("paired(2,3)(0)", paired_minor_curve((2, 3))(0.0), meet, 1e-12)
    c.close("product(0)", paired_product_curve()(0.0), 123810129 * math.pi**4 / (2**24 * 5**2 * 7**2), 1e-12)
    return c


def c9(s):
    c = _Checks()
    grid = np.linspace(-4.0, 4.0, 21)
    rel = max(abs(jacobian_numeric(1, x) / jacobian_closed(x) - 1) for x in grid)
    c.flag("max rel err on 21 points", rel <= 1e-6, f"{rel:.2e}")
    return c


def c10(s):
    c = _Checks()
    conj, inter = catalog("conjecture"), catalog("intermediate")
    c.close("conjecture b=2", power_class_probability(conj, 2), _hp(lambda: 30660525 * PI**4 / 11811160064), 1e-8)
    c.close("conjecture b=4", power_class_probability(conj, 4), 0.0867454, 1e-6)
    c.close("intermediate b=2", power_class_probability(inter, 2), _hp(lambda: 752517 * PI**4 / 149946368), 1e-8)
    c.close("intermediate b=4", power_class_probability(inter, 4), 0.327414, 1e-6)
    return c


def c11(s):
    c = _Checks()
    c.close("dominant/2", boundary_halve(sep_probability(catalog("dominant"))), 512 / (135 * math.pi**2), 1e-9)
    c.close("intermediate/2", boundary_halve(sep_probability(catalog("intermediate"))), 11 / 35, 1e-9)
    c.close("conjecture/2", boundary_halve(sep_probability(catalog("conjecture"))), 29 / 128, 1e-9)
    return c


def c12(s):
    c = _Checks()
    s3 = catalog("s3x3")
    worst = 0.0
    for x in (-1.0, -0.5, -0.25, 0.25, 0.5, 1.0):
        for k in (1, 2, 3, 4):
            ref = s3(x) if k in (1, 4) else s3(-x)
            worst = max(worst, abs(cube_single(k, x) - ref))
    c.flag("max |cube - curve|", worst <= 1e-4, f"{worst:.1e}")
    c.close("cube_single(0)", cube_single(4, 0.0), 45 * math.pi**2 / 512, 1e-4)
    return c


def c13(s):
    c = _Checks()
    grid = (-1.0, -0.3, 0.2, 0.6, 1.5)
    dom, lesser, greater = catalog("paired_dominant"), catalog("paired_intermediate"), catalog("paired_greater")
    e1 = max(abs(cube_paired(1, 2, x) - dom(x)) for x in grid)
    e2 = max(abs(min(cube_paired(1, 4, x), cube_paired(2, 3, x)) - lesser(x)) for x in grid)
    e3 = max(abs(max(cube_paired(1, 4, x), cube_paired(2, 3, x)) - greater(x)) for x in grid)
    c.flag("(1,2) vs paired_dominant", e1 <= 1e-4, f"{e1:.1e}")
    c.flag("lesser splice", e2 <= 1e-4, f"{e2:.1e}")
    c.flag("greater splice", e3 <= 1e-4, f"{e3:.1e}")
    return c


def c14(s):
    c = _Checks()
    c.close("cube_triple(0)", cube_triple(0.0), 159104 / 231525, 1e-4)
    return c


def c15(s):
    c = _Checks()
    r = estimate_sep_prob("full_ph", 1, n=s.n_direct)
    e = r.estimate
    c.flag("mean in (0.451634, 0.454051)", 0.451634 < e.mean < 0.454051, f"{e.mean:.6f}+-{e.std_error:.1e}")
    b, sb = binned_probability(r)
    z = (b - e.mean) / math.hypot(sb, e.std_error)
    c.flag("binned DESF integral", abs(z) < 3, f"{b:.6f} z={z:+.2f}")
    t = estimate_desf("full_ph", n=s.n_desf)
    v, sv = desf_table_probability(t)
    z = (v - e.mean) / math.hypot(sv, e.std_error)
    c.flag("grid DESF integral", abs(z) < 3, f"{v:.6f} z={z:+.2f}")
    return c


def c16(s):
    c = _Checks()
    t = estimate_desf("full_ph", n=s.n_desf)
    row = t.at(0.0)
    c.close("S_hat(0)", row.value, 0.612243, 0.01)
    v, se = t.values, t.std_errors
    zmax = float(np.max(np.abs(v - v[::-1]) / np.maximum(np.sqrt(se**2 + se[::-1] ** 2), 1e-300)))
    c.flag("even within 3 SE", zmax < 3, f"max z {zmax:.2f}")
    return c


def c17(s):
    c = _Checks()
    e = estimate_absolute(n=s.n_direct).estimate
    c.within_se("absolute", e, _hp(lambda: (6928 - 2205 * PI) / mp.mpf(2) ** mp.mpf(4.5)))
    bad = absolute_implies_separable(n=min(s.n_direct, 1 << 20))
    c.flag("absolute => separable", bad == 0, f"{bad} violations")
    return c


def c18(s):
    c = _Checks()
    e = estimate_sep_prob("minors2x2_all", 1, n=s.n_direct).estimate
    c.within_se("minors2x2_all", e, 1024 / (135 * math.pi**2))
    names = ["full_ph", "minors2x2_all"] + [f"minors3x3_single:{k}" for k in (1, 2, 3, 4)] + [
        f"minors3x3_pair:{a},{b}" for a, b in ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4))]
    tables = {n: estimate_desf(n, n=s.n_tables) for n in names}
    v = dominance_violations(tables)
    c.flag("dominance chain", not v, f"{len(v)} violations")
    return c


def c19(s):
    c = _Checks()
    e = estimate_sep_prob("full_ph", 2, n=s.n_direct).estimate
    c.close("complex full_ph", e.mean, 8 / 33, 0.005)
    return c


def c20(s):
    c = _Checks()
    r = estimate_scenario(n=s.n_direct)
    c.within_se("direct", r.estimate, 17 / 35)
    jac = lambda x: dirichlet_xi_density(SCENARIO_ALPHA, x)
    z = binned_curve_check(r, catalog("scenario_complex_pair"), jac)
    c.flag("binned vs curve", bool(np.all(np.abs(z) < 3)), f"{len(z)} bins, max |z| {np.max(np.abs(z)):.2f}")
    c.close("curve integral", sep_probability(catalog("scenario_complex_pair"), jac), 17 / 35, 1e-9)
    return c


# ---------------------------------------------------------------------------
# property suites


def _random_states(n: int, seed: int = 7, complex_: bool = False):
    rng = np.random.default_rng(seed)
    out = []
    while sum(len(z) for z, _ in out) < n:
        if complex_:
            r = np.sqrt(rng.uniform(size=(n, 6)))
            z = r * np.exp(2j * np.pi * rng.uniform(size=(n, 6)))
        else:
            z = rng.uniform(-1, 1, size=(n, 6))
        z = z[bloore.psd_mask(z)]
        d = rng.dirichlet([2.5] * 4, size=len(z))
        out.append((z, d))
    z = np.concatenate([a for a, _ in out])[:n]
    d = np.concatenate([b for _, b in out])[:n]
    return z, d


def p_determinism(s):
    c = _Checks()
    n = 200_000
    a = estimate_sep_prob("full_ph", 1, n=n, workers=1)
    b = estimate_sep_prob("full_ph", 1, n=n, workers=4, block_size=1 << 13)
    c.flag("thread count / sharding", a.estimate.mean == b.estimate.mean
           and np.array_equal(a.bin_hits, b.bin_hits) and np.array_equal(a.bin_accepted, b.bin_accepted))
    from .cli import run_to_text

    t1 = run_to_text(["curves", "--name", "dominant", "--grid", "-1:1:0.5"])
    t2 = run_to_text(["curves", "--name", "dominant", "--grid", "-1:1:0.5"])
    c.flag("identical artifacts", t1 == t2)
    return c


def p_involution(s):
    c = _Checks()
    worst = 0.0
    for cplx in (False, True):
        z, d = _random_states(s.n_props, complex_=cplx)
        x = 0.5 * np.log(d[:, 0] * d[:, 3] / (d[:, 1] * d[:, 2]))
        back = bloore.pt_correlation_batch(bloore.pt_correlation_batch(z, x), x)
        worst = max(worst, float(np.max(np.abs(back - z))))
    c.flag("PT(PT(z)) = z", worst <= 1e-12, f"max dev {worst:.1e}")
    return c


def p_diag_independence(s):
    c = _Checks()
    z, d = _random_states(s.n_props // 10, seed=11)
    rng = np.random.default_rng(12)
    d2 = rng.dirichlet([1.0] * 4, size=len(z))
    bad = 0
    for zi, di, ei in zip(z, d, d2):
        a = np.linalg.eigvalsh(bloore.rho_from_bloore(di, zi))[0] >= -1e-12
        b = np.linalg.eigvalsh(bloore.rho_from_bloore(ei, zi))[0] >= -1e-12
        bad += a != b
    c.flag("PSD of rho independent of diagonal", bad == 0, f"{bad} mismatches in {len(z)}")
    return c


def p_det_vs_eig(s):
    c = _Checks()
    z, d = _random_states(s.n_props, seed=13)
    x = 0.5 * np.log(d[:, 0] * d[:, 3] / (d[:, 1] * d[:, 2]))
    zp = bloore.pt_correlation_batch(z, x)
    det_ok = bloore.det4_batch(zp) >= 0
    eig_ok = np.linalg.eigvalsh(bloore.correlation_matrices(zp))[:, 0] >= 0
    mism = int(np.count_nonzero(det_ok != eig_ok))
    c.flag("det vs eigenvalue", mism == 0, f"{mism} mismatches in {len(z)}")
    return c


CRITERIA = [
    ("1", "jacobian normalisation", c1, 1),
    ("2", "dominant -> 1024/(135 pi^2)", _exact("dominant", lambda: 1024 / (135 * PI**2)), 1),
    ("3", "intermediate -> 22/35", _exact("intermediate", lambda: mp.mpf(22) / 35), 1),
    ("4", "paired_intermediate -> 1129/2100", _exact("paired_intermediate", lambda: mp.mpf(1129) / 2100), 1),
    ("5", "conjecture 29/64, previous 8/17", c5, 1),
    ("6", "paired_dominant 0.585542, paired product", c6, 1),
    ("7", "single-minor product 0.576219, paired_greater", c7, 1),
    ("8", "intercepts", c8, 1),
    ("9", "numeric vs closed jacobian", c9, 60),
    ("10", "power-class probabilities", c10, 1),
    ("11", "boundary halving", c11, 1),
    ("12", "cube_single", c12, 300),
    ("13", "cube_paired", c13, 300),
    ("14", "cube_triple(0)", c14, 300),
    ("15", "direct full_ph estimate and DESF consistency", c15, 1800),
    ("16", "empirical DESF at 0 and evenness", c16, 1800),
    ("17", "absolute separability", c17, 1800),
    ("18", "2x2 relaxation and dominance chain", c18, 1800),
    ("19", "complex full_ph vs 8/33", c19, 1800),
    ("20", "complex-pair family 17/35", c20, 1800),
    ("P1", "determinism", p_determinism, 300),
    ("P2", "PT involution", p_involution, 60),
    ("P3", "PSD diagonal independence", p_diag_independence, 120),
    ("P4", "det vs eigenvalue separability", p_det_vs_eig, 60),
]

CRITERION_IDS = tuple(cid for cid, *_ in CRITERIA)


def run_criterion(cid: str, scale: str = "full") -> CriterionResult:
    table = {c[0]: c for c in CRITERIA}
    if cid not in table:
        raise KeyError(f"unknown criterion {cid!r}")
    _, title, fn, budget = table[cid]
    s = SCALES[scale]
    t0 = time.perf_counter()
    try:
        chk = fn(s)
        ok, detail = chk.ok, "; ".join(chk.parts)
    except Exception as e:  # reported, not raised: the suite must finish
        ok, detail = False, f"error: {type(e).__name__}: {e}"
    dt = time.perf_counter() - t0
    if dt > budget:
        ok = False
        detail += "; over time budget"
    return CriterionResult(cid, title, ok, detail, dt, budget)


def run_criteria(ids=None, scale: str = "full", log: Callable | None = None) -> list[CriterionResult]:
    out = []
    for cid in (ids or CRITERION_IDS):
        r = run_criterion(cid, scale)
        if log:
            log(r.line())
        out.append(r)
    return out
