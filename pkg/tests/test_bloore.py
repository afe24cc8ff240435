import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sepprob.bloore import (
    PAIRS,
    BlooreState,
    DomainError,
    absolutely_separable,
    correlation_matrices,
    correlation_matrix,
    correlation_psd,
    det4_batch,
    minor2_all_batch,
    minor3_batch,
    peres_separable,
    psd_mask,
    pt_correlation,
    pt_correlation_batch,
    pt_principal_minor,
    rho_from_bloore,
    xi_of,
)

Z0 = (0.0,) * 6
FLAT = (0.25, 0.25, 0.25, 0.25)


def zvec(**kw):
    z = [0.0] * 6
    for name, val in kw.items():
        z[PAIRS.index((int(name[1]), int(name[2])))] = val
    return z


def werner(w):
    diag = ((1 + w) / 4, (1 - w) / 4, (1 - w) / 4, (1 + w) / 4)
    return BlooreState(diag, zvec(z14=(w / 2) / ((1 + w) / 4)))


coord = st.floats(-1.0, 1.0, allow_nan=False)
zs = st.lists(coord, min_size=6, max_size=6)
xis = st.floats(-3.0, 3.0, allow_nan=False)


# -- rho_from_bloore ---------------------------------------------------------

def test_rho_identity():
    assert np.array_equal(rho_from_bloore(FLAT, Z0), np.eye(4) / 4)


def test_rho_single_entry():
    rho = rho_from_bloore(FLAT, zvec(z12=1.0))
    assert rho[0, 1] == rho[1, 0] == 0.25


def test_rho_scaled_entry():
    rho = rho_from_bloore((0.4, 0.3, 0.2, 0.1), zvec(z14=0.5))
    assert rho[0, 3] == pytest.approx(0.1, abs=1e-15)
    assert np.trace(rho) == pytest.approx(1.0, abs=1e-12)
    assert np.array_equal(rho, rho.T)


@pytest.mark.parametrize(
    "diag, z",
    [((0.5, 0.5, 0.5, -0.5), Z0), ((0.3, 0.3, 0.3, 0.3), Z0), (FLAT, zvec(z13=1.2))],
)
def test_rho_rejects_bad_input(diag, z):
    with pytest.raises(DomainError):
        rho_from_bloore(diag, z)


# -- xi ----------------------------------------------------------------------

def test_xi_values():
    assert xi_of(FLAT).xi == 0.0
    assert xi_of((0.4, 0.1, 0.1, 0.4)).xi == pytest.approx(math.log(4), abs=1e-15)
    d2 = d3 = 0.2
    d1 = d4 = math.sqrt(math.e**2 * d2 * d3)
    s = d1 + d2 + d3 + d4
    x = xi_of((d1 / s, d2 / s, d3 / s, d4 / s))
    assert x.xi == pytest.approx(1.0, abs=1e-14)
    assert x.nu == pytest.approx(x.mu**2, rel=1e-15)


def test_xi_zero_diagonal():
    with pytest.raises(DomainError):
        xi_of((0.5, 0.5, 0.0, 0.0))


# -- correlation_psd ---------------------------------------------------------

def test_psd_examples():
    assert correlation_psd(Z0)
    assert correlation_psd(zvec(z12=0.9, z34=0.9))
    # 1 + 2(-0.9)^3 - 3(0.9)^2 < 0
    assert 1 + 2 * (-0.9) ** 3 - 3 * 0.81 < 0
    assert not correlation_psd(zvec(z12=-0.9, z13=-0.9, z23=-0.9))


@settings(max_examples=200, deadline=None)
@given(zs, st.lists(st.floats(0.01, 1.0), min_size=4, max_size=4))
def test_psd_independent_of_diagonal(z, raw):
    Z = correlation_matrix(z)
    lam = np.linalg.eigvalsh(Z)[0]
    if abs(lam) < 1e-9:
        return
    d = np.array(raw) / sum(raw)
    rho = rho_from_bloore(d, z)
    assert (np.linalg.eigvalsh(rho)[0] >= -1e-12) == correlation_psd(z)


# -- partial transpose -------------------------------------------------------

def test_pt_at_zero_is_swap():
    z = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6]
    assert pt_correlation(z, 0.0).tolist() == [0.1, 0.2, 0.4, 0.3, 0.5, 0.6]


def test_pt_scaling():
    assert pt_correlation(zvec(z23=0.6), math.log(2))[2] == pytest.approx(0.3, abs=1e-15)


def test_pt_matches_full_matrix_transpose():
    rng = np.random.default_rng(3)
    for _ in range(50):
        d = rng.dirichlet(np.ones(4))
        z = rng.uniform(-1, 1, 6)
        rho = rho_from_bloore(d, z)
        # transpose on the second qubit: (ab),(cd) -> (ad),(cb)
        r = rho.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)
        s = np.sqrt(d)
        expect = correlation_matrix(pt_correlation(z, xi_of(d)))
        np.testing.assert_allclose(r / np.outer(s, s), expect, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(zs, xis)
def test_pt_involution(z, xi):
    back = pt_correlation(pt_correlation(z, xi), xi)
    np.testing.assert_allclose(back, z, rtol=4e-16, atol=1e-300)


@settings(max_examples=200, deadline=None)
@given(zs, xis)
def test_untouched_2x2_minors_agree(z, xi):
    for idx, pair in enumerate(PAIRS, start=1):
        if pair in ((1, 4), (2, 3)):
            continue
        assert pt_principal_minor(z, xi, 2, idx) == 1.0 - z[idx - 1] ** 2


def test_sample_minor_form():
    rng = np.random.default_rng(0)
    for _ in range(20):
        z = rng.uniform(-1, 1, 6)
        xi = rng.normal()
        z12, z13, z14 = z[0], z[1], z[2]
        e = math.exp(xi)
        expect = 1 + 2 * e * z12 * z13 * z14 - z12**2 - z13**2 - e * e * z14**2
        assert pt_principal_minor(z, xi, 3, 4) == pytest.approx(expect, abs=1e-13)


def test_minor_k1_expansion():
    rng = np.random.default_rng(1)
    for _ in range(20):
        z = rng.uniform(-1, 1, 6)
        xi = rng.normal()
        z14, z24, z34 = z[2], z[4], z[5]
        e = math.exp(xi)
        expect = 1 + 2 * e * z14 * z24 * z34 - e * e * z14**2 - z24**2 - z34**2
        assert pt_principal_minor(z, xi, 3, 1) == pytest.approx(expect, abs=1e-13)


def test_minor_examples():
    assert pt_principal_minor(zvec(z12=1, z13=1, z14=1), 0.0, 3, 4) == pytest.approx(0.0, abs=1e-14)
    assert all(pt_principal_minor(Z0, 0.7, 2, i) == 1.0 for i in range(1, 7))
    for bad in [(2, 0), (2, 7), (3, 5), (5, 1)]:
        with pytest.raises(DomainError):
            pt_principal_minor(Z0, 0.0, *bad)


@pytest.mark.parametrize("k, expected", [(1, {(1, 4), (2, 4), (3, 4)}), (2, {(1, 3), (2, 3), (3, 4)}),
                                         (3, {(1, 2), (2, 3), (2, 4)}), (4, {(1, 2), (1, 3), (1, 4)})])
def test_minor_variable_sets(k, expected):
    rng = np.random.default_rng(k)
    z = rng.uniform(-0.5, 0.5, 6)
    base = pt_principal_minor(z, 0.3, 3, k)
    for idx, pair in enumerate(PAIRS):
        bumped = z.copy()
        bumped[idx] += 0.1
        moved = pt_principal_minor(bumped, 0.3, 3, k) != base
        assert moved == (pair in expected)


# -- separability ------------------------------------------------------------

def test_unswapped_state_is_separable():
    z = zvec(z12=0.5, z13=-0.3, z24=0.2, z34=0.4)
    st_ = BlooreState((0.1, 0.2, 0.3, 0.4), z)
    assert st_.is_valid()
    assert peres_separable(st_) and peres_separable(st_, "determinant")


@pytest.mark.parametrize("w, sep", [(0.25, True), (0.5, False), (0.3, True), (0.34, False)])
def test_werner_threshold(w, sep):
    s = werner(w)
    # PT spectrum (1-w)/4 +- w/2 on the 2-3 block
    rho_pt = s.rho.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)
    assert (np.linalg.eigvalsh(rho_pt)[0] >= 0) == (w <= 1 / 3)
    assert peres_separable(s) is sep
    assert peres_separable(s, "determinant") is sep


def test_boundary_swap_state_is_separable():
    # z23 = 1 puts the PT at z'14 = 1 with z'23 = 0: spectrum {0, 1, 1, 2},
    # a boundary state counted as separable by the closed-set convention.
    s = BlooreState(FLAT, zvec(z23=1.0))
    zp = correlation_matrix(pt_correlation(s.z, s.xi))
    np.testing.assert_allclose(np.linalg.eigvalsh(zp), [0, 1, 1, 2], atol=1e-15)
    assert peres_separable(s)


def test_peres_rejects_invalid_state():
    with pytest.raises(DomainError):
        peres_separable(BlooreState(FLAT, zvec(z12=-0.9, z13=-0.9, z23=-0.9)))


def test_peres_depends_on_xi_only():
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 300:
        z = rng.uniform(-1, 1, 6)
        if not correlation_psd(z):
            continue
        d = rng.dirichlet(np.ones(4))
        # another diagonal with the same cross-ratio: scale rows 1,2 by t
        t = rng.uniform(0.2, 5.0)
        e = d * np.array([t, t, 1, 1])
        e /= e.sum()
        a, b = BlooreState(tuple(d), tuple(z)), BlooreState(tuple(e), tuple(z))
        assert a.xi.xi == pytest.approx(b.xi.xi, abs=1e-12)
        zp = correlation_matrix(pt_correlation(z, a.xi))
        if abs(np.linalg.eigvalsh(zp)[0]) < 1e-9:
            continue
        assert peres_separable(a) == peres_separable(b)
        checked += 1


def test_det_and_eigenvalue_classification_agree():
    rng = np.random.default_rng(2024)
    n_checked = 0
    while n_checked < 100_000:
        z = rng.uniform(-1, 1, (200_000, 6))
        z = z[np.linalg.eigvalsh(correlation_matrices(z))[:, 0] >= 0]
        xi = rng.normal(scale=1.5, size=len(z))
        zp = pt_correlation_batch(z, xi)
        lam = np.linalg.eigvalsh(correlation_matrices(zp))[:, 0]
        det = det4_batch(zp)
        keep = (np.abs(lam) > 1e-9) & (np.abs(det) > 1e-9)
        assert np.array_equal(lam[keep] >= 0, det[keep] >= 0)
        n_checked += int(keep.sum())


# -- absolute separability ---------------------------------------------------

def test_absolute_examples():
    assert absolutely_separable(BlooreState(FLAT, Z0))
    assert not absolutely_separable(BlooreState((0.7, 0.1, 0.1, 0.1), Z0))
    assert 0.7 - 0.1 - 2 * 0.1 == pytest.approx(0.4)
    pure = BlooreState((1.0, 0.0, 0.0, 0.0), Z0)
    assert not absolutely_separable(pure)


def test_absolute_implies_separable():
    rng = np.random.default_rng(11)
    hits = 0
    for _ in range(4000):
        z = rng.uniform(-1, 1, 6) * 0.4
        d = rng.dirichlet(np.full(4, 6.0))
        s = BlooreState(tuple(d), tuple(z))
        if not s.is_valid():
            continue
        if absolutely_separable(s):
            hits += 1
            assert peres_separable(s)
    assert hits > 100


# -- batch kernels agree with scalar versions --------------------------------

def test_batch_kernels_match_scalar():
    rng = np.random.default_rng(5)
    z = rng.uniform(-1, 1, (3000, 6))
    xi = rng.normal(size=3000)
    Z = correlation_matrices(z)
    lam = np.linalg.eigvalsh(Z)[:, 0]
    mask = psd_mask(z)
    away = np.abs(lam) > 1e-9
    assert np.array_equal(mask[away], lam[away] >= 0)
    np.testing.assert_allclose(det4_batch(z), np.linalg.det(Z), atol=1e-12)
    zp = pt_correlation_batch(z, xi)
    for i in range(0, 3000, 150):
        for k in range(1, 5):
            assert minor3_batch(zp[i], k) == pytest.approx(pt_principal_minor(z[i], xi[i], 3, k), abs=1e-12)
        all2 = all(pt_principal_minor(z[i], xi[i], 2, j) >= -1e-12 for j in range(1, 7))
        assert minor2_all_batch(zp[i]) == all2


def test_complex_psd_mask():
    rng = np.random.default_rng(9)
    r = np.sqrt(rng.uniform(size=(4000, 6)))
    z = r * np.exp(2j * np.pi * rng.uniform(size=(4000, 6)))
    lam = np.linalg.eigvalsh(correlation_matrices(z))[:, 0]
    away = np.abs(lam) > 1e-9
    assert np.array_equal(psd_mask(z)[away], lam[away] >= 0)
    assert psd_mask(z).any()


def test_complex_partial_transpose_matches_full_matrix():
    rng = np.random.default_rng(12)
    z = rng.uniform(-0.4, 0.4, 6) + 1j * rng.uniform(-0.4, 0.4, 6)
    d = rng.dirichlet(np.ones(4))
    s = np.sqrt(d)
    rho = correlation_matrices(z[None])[0] * np.outer(s, s)
    r = rho.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)
    xi = 0.5 * math.log(d[0] * d[3] / (d[1] * d[2]))
    expect = correlation_matrices(pt_correlation_batch(z[None], xi))[0]
    np.testing.assert_allclose(r / np.outer(s, s), expect, atol=1e-12)
