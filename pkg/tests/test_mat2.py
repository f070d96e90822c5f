import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from canonsys import mat2
from canonsys.errors import NonTraceFree, NotPositiveDefinite, PoleHit

J = mat2.J
floats = st.floats(-3.0, 3.0, allow_nan=False)


def taylor_exp(a, terms=60):
    out = np.eye(2, dtype=complex)
    term = np.eye(2, dtype=complex)
    for k in range(1, terms):
        term = term @ a / k
        out = out + term
    return out


def test_expm_examples():
    assert np.allclose(mat2.expm_tracefree(np.zeros((2, 2))), np.eye(2), atol=0)
    n = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert np.allclose(mat2.expm_tracefree(n), np.eye(2) + n, atol=1e-15)
    x, t = 1.7, 2.3
    rot = np.array([[np.cos(x * t), np.sin(x * t)], [-np.sin(x * t), np.cos(x * t)]])
    assert np.allclose(mat2.expm_tracefree(-x * J * t), rot, atol=1e-13)


@settings(max_examples=200, deadline=None)
@given(floats, floats, floats, floats, floats)
def test_expm_matches_series(a, b, c, re_z, im_z):
    z = complex(re_z, im_z)
    m = z * np.array([[a, b], [c, -a]])
    assert np.allclose(mat2.expm_tracefree(m), taylor_exp(m), atol=1e-10 * (1 + np.abs(taylor_exp(m)).max()))


def test_expm_series_branch_is_accurate():
    for eps in (1e-3, 1e-5, 1e-8, 0.0):
        m = np.array([[0.0, eps], [eps, 0.0]]) + 1e-3 * J
        assert np.allclose(mat2.expm_tracefree(m), taylor_exp(m), rtol=0, atol=1e-16)


def test_expm_inverse_and_det(rng):
    a = rng.uniform(-5, 5, (500, 2, 2)) + 1j * rng.uniform(-5, 5, (500, 2, 2))
    a[..., 1, 1] = -a[..., 0, 0]
    e, f = mat2.expm_tracefree(a), mat2.expm_tracefree(-a)
    scale = np.abs(e).max(axis=(-2, -1)) * np.abs(f).max(axis=(-2, -1))
    assert np.all(np.abs(e @ f - np.eye(2)).max(axis=(-2, -1)) <= 1e-12 * scale)
    d = mat2.det2(e)
    assert np.all(np.abs(d - 1) <= 1e-12 * np.abs(e).max(axis=(-2, -1)) ** 2)


def test_expm_rejects_trace():
    with pytest.raises(NonTraceFree):
        mat2.expm_tracefree(np.eye(2))


def test_expm2_general():
    a = np.array([[0.3, 1.0], [-0.2, 1.1]])
    assert np.allclose(mat2.expm2(a), taylor_exp(a), atol=1e-13)


def test_cholesky_examples():
    assert np.allclose(mat2.cholesky_upper(np.eye(2)), np.eye(2))
    assert np.allclose(mat2.cholesky_upper([[4, 2], [2, 2]]), [[2, 1], [0, 1]])
    s = np.sqrt(2)
    assert np.allclose(mat2.cholesky_upper([[2, 1], [1, 1]]), [[s, 1 / s], [0, 1 / s]])
    with pytest.raises(NotPositiveDefinite):
        mat2.cholesky_upper(np.diag([1.0, 0.0]))


def test_cholesky_property(rng):
    a = mat2.random_psd(rng, 1000) + 1e-3 * np.eye(2)
    lam = mat2.cholesky_upper(a)
    assert np.allclose(mat2.transpose(lam) @ lam, a, rtol=1e-13, atol=1e-13)
    assert np.all(lam[..., 1, 0] == 0) and np.all(lam[..., 0, 0] > 0) and np.all(lam[..., 1, 1] > 0)


def test_mobius_examples():
    assert mat2.mobius(np.eye(2), 1j) == 1j
    m = 0.3 + 0.8j
    assert abs(mat2.mobius(J, m) + 1 / m) < 1e-15
    assert mat2.mobius(np.array([[1.0, 1.0], [0.0, 1.0]]), 1j) == 1 + 1j
    with pytest.raises(PoleHit):
        mat2.mobius(np.array([[1.0, 0.0], [1.0, 0.0]]), 0.0)


def test_mobius_preserves_upper_half_plane(rng):
    a = mat2.random_sl2(rng, 500)
    z = rng.normal(size=500) + 1j * rng.uniform(0.01, 3, 500)
    w = mat2.mobius(a, z)
    den = a[..., 1, 0] * z + a[..., 1, 1]
    assert np.allclose(w.imag, z.imag / np.abs(den) ** 2, rtol=1e-9)


def test_predicates_consistent(rng):
    a = mat2.random_psd(rng, 200)
    assert np.all(mat2.is_symmetric(a)) and np.all(mat2.is_psd(a))
    assert not mat2.is_psd(np.diag([-1.0, 1.0]))
    assert not mat2.is_psd(np.array([[1.0, 2.0], [0.0, 1.0]]))
    assert np.all(mat2.is_sl2(mat2.random_sl2(rng, 200)))


def test_opnorm_and_eigvalsh(rng):
    a = rng.normal(size=(300, 2, 2))
    assert np.allclose(mat2.opnorm(a), np.linalg.norm(a, 2, axis=(-2, -1)), rtol=1e-12)
    c = a + 1j * rng.normal(size=(300, 2, 2))
    assert np.allclose(mat2.opnorm(c), np.linalg.norm(c, 2, axis=(-2, -1)), rtol=1e-10)
    s = mat2.sym(a)
    assert np.allclose(mat2.eigvalsh2(s), np.linalg.eigvalsh(s), atol=1e-12)


def test_sqrtm_psd(rng):
    a = mat2.random_psd(rng, 200)
    r = mat2.sqrtm_psd(a)
    assert np.allclose(r @ r, a, atol=1e-12)


def test_det_lemma_examples():
    i, z = np.eye(2), np.zeros((2, 2))
    assert mat2.det2(i + i) == 4.0
    assert mat2.det2(i + z) == 1.0
    rep = mat2.check_det_lemmas([(i, i), (i, z)])
    assert all(v == 0 for v in rep.values())


def test_det_lemmas_random(rng):
    a = mat2.random_psd(rng, 10000, rank_one_fraction=0.2)
    b = mat2.random_psd(rng, 10000, rank_one_fraction=0.2)
    rep = mat2.check_det_lemmas(list(zip(a, b)))
    assert rep == {k: 0 for k in rep}


def test_sl2_identities(rng):
    r1, r2, r3 = mat2.sl2_identity_residuals(mat2.random_sl2(rng, 1000, bound=1.0, amin=0.1))
    assert max(r1.max(), r2.max(), r3.max()) < 1e-12


def test_omega_j_omega_identity(rng):
    om = mat2.random_psd(rng, 2000) + 1e-6 * np.eye(2)
    lhs = mat2.opnorm(om @ J @ om)
    assert np.allclose(lhs, mat2.det2(om), rtol=1e-10, atol=1e-12)


def test_scalar_inequalities():
    x = np.logspace(-6, 6, 4001)
    f = 1 / x + x - 2
    outside = (x < 0.5) | (x > 2)
    assert np.all(np.abs(1 / x[outside] - x[outside]) / 3 <= f[outside])
    assert np.all(x[outside] / 4 <= f[outside])
    inside = ~outside
    assert np.all(2 / 9 * np.abs(1 / x[inside] - x[inside]) ** 2 <= f[inside] + 1e-15)


def test_random_det1_ranges(rng):
    a = mat2.random_det1(rng, 1000)
    assert np.allclose(mat2.det2(a), 1, atol=1e-12)
    assert np.all((a[..., 0, 0] >= 0.25) & (a[..., 0, 0] <= 4))
    assert np.all((a[..., 1, 1] >= 0.25 - 1e-12) & (a[..., 1, 1] <= 4 + 1e-12))
