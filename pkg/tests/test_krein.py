import warnings

import numpy as np
import pytest

from canonsys import factorization as fz
from canonsys import hamiltonian as hm
from canonsys import krein as kr
from canonsys import mat2, models, solver
from canonsys.hamiltonian import PiecewiseHamiltonian as PH


def flat(ell=3.0):
    h = PH([ell], [np.eye(2)], np.eye(2))
    return h, fz.identity_factorization(h)


def example2(eps, T):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return models.example2(eps, T)


def test_trivial_coefficients():
    _, f = flat()
    c = kr.KreinCoefficients(f)
    r = np.linspace(0, 4, 9)
    assert np.all(c.f(r, 1.3 + 0.2j) == 0) and np.all(c.g(r) == 0)


def test_example2_generator():
    eps = 0.1
    ex = example2(eps, 20)
    c = kr.KreinCoefficients(ex.continuum_factorization)
    z = np.array([0.3, 0.05 + 0.2j])
    a = c.generator(np.array([1.5, 7.25]), z)
    ref = mat2.mat(np.zeros(2, complex), -eps + 0 * z, -eps + 0 * z, 2j * z)
    assert np.allclose(a, ref[None], atol=1e-15)


def test_dual_negates_f(random_instances):
    f = fz.factorize_oscillation(random_instances[0])
    c, cd = kr.KreinCoefficients(f), kr.KreinCoefficients(f.dual())
    r = np.linspace(0.01, f.extent - 0.01, 37)
    z = 0.7 + 0.4j
    assert np.allclose(cd.f(r, z), -c.f(r, z), atol=1e-12)
    assert np.allclose(cd.g(r), c.g(r), atol=1e-12)


def test_trivial_propagation():
    _, f = flat()
    r = np.linspace(0.5, 3, 6)
    z = np.array([0.4, -1.0 + 0.3j])
    path = kr.propagate_krein(kr.KreinCoefficients(f), z, 3.0, init=(1.0, 1.0), r_eval=r)
    assert set(r) <= set(path.r)
    assert np.allclose(path.pstar, 1.0, atol=1e-13)
    assert np.allclose(path.p, np.exp(2j * z[None] * path.r[:, None]), atol=1e-13)


def test_example2_closed_form():
    eps, T = 0.1, 500
    ex = example2(eps, T)
    x = np.array([eps / 10, eps / 2, 9 * eps / 10])
    path = kr.propagate_krein(kr.KreinCoefficients(ex.continuum_factorization), x, float(T))
    ps, p = path.at_end()
    ref_ps, ref_p = models.example2_pstar(eps, x, T)
    assert np.all(np.abs(ps / ref_ps - 1) < 1e-8)
    assert np.all(np.abs(p / ref_p - 1) < 1e-8)


def test_two_paths_agree(ex3, random_instances):
    cases = [(ex3.h, ex3.factorization),
             (random_instances[0], fz.factorize_oscillation(random_instances[0]))]
    z = np.array([0.8, -1.5 + 0.1j, 2j])
    for h, f in cases:
        r = float(np.floor(f.extent * 0.7 * 16) / 16)
        path = kr.propagate_krein(kr.KreinCoefficients(f), z, r)
        via = kr.pstar_via_theta(h, f, r, z)
        assert np.allclose(path.pstar[-1], via, rtol=1e-8, atol=1e-10)


def test_conjugation_identity(ex3):
    f = ex3.factorization
    z = np.array([0.3 + 0.2j, -1.2 + 0.5j])
    r = 1.25
    a = kr.propagate_krein(kr.KreinCoefficients(f), z, r)
    b = kr.propagate_krein(kr.KreinCoefficients(f), np.conj(z), r)
    assert np.allclose(a.p[-1], np.exp(2j * z * r) * np.conj(b.pstar[-1]), rtol=1e-8)


def test_initial_data():
    a = 0.6
    h = PH([1.0], [np.diag([a * a, 1 / (a * a)])], np.diag([a * a, 1 / (a * a)]))
    f = fz.factorize_oscillation(h)
    assert np.allclose(f.G(0.0)[0], np.diag([a, 1 / a]))
    path = kr.propagate_krein(kr.KreinCoefficients(f), np.array([0.5]), 1e-12, r_eval=np.array([0.0]))
    assert np.allclose(path.pstar[0], a) and np.allclose(path.p[0], a)


def test_theta_tilde(ex3, random_instances):
    h, f = flat()
    assert np.allclose(kr.theta_tilde(h, f, 0.0, 1 + 1j), [1, 0])
    h = random_instances[1]
    f = fz.factorize_spectral(h)
    for r in (0.3, 1.1):
        z = 0.4 + 0.9j
        tt = kr.theta_tilde(h, f, r, z)
        th = solver.transfer(h, r, z)[:, 0]
        assert abs((tt[0] * np.conj(tt[1])).imag - (th[0] * np.conj(th[1])).imag) < 1e-10
    t = 0.5 * (ex3.h.edges[5] + ex3.h.edges[6])
    assert kr.theta_tilde_residual(ex3.h, ex3.factorization, t, 0.7 + 0.1j) < 1e-6


def test_density_trivial_and_examples():
    _, f = flat()
    x = np.linspace(-3, 3, 13)
    assert np.allclose(kr.density_via_pstar(f, 3.0, x), 1.0, atol=1e-13)
    ex = models.example1(2.0)
    w = kr.density_via_pstar(ex.factorization, 2.0, x)
    assert np.allclose(w, 1 / (1 + 4 * x * x), rtol=1e-8)
    eps, T = 0.1, 200
    e2 = example2(eps, T)
    x = np.linspace(0.01, 0.09, 5)
    w = kr.density_via_pstar(e2.continuum_factorization, float(T), x)
    assert np.allclose(w, 1 / np.abs(e2.oracle["pstar"](x)) ** 2, rtol=1e-8)


def test_outer_check():
    assert kr.outer_check(lambda x: np.ones_like(np.asarray(x, dtype=complex)), 1.0) < 1e-12
    L = 2.0
    ex = models.example1(L)
    func = kr.outer_pstar(ex.h, ex.factorization, L)
    assert kr.outer_check(func, func(1j), scale=2 * L + 1) < 1e-5


def test_outer_check_example3():
    ex = models.example3([1.0], [0.2])
    f = ex.factorization
    ell = ex.h.ell
    func = kr.outer_pstar(ex.h, f, ell)
    assert kr.outer_check(func, func(1j), scale=2 * ell + 1) < 1e-5


def test_l44_trivial_and_small_v():
    _, f = flat()
    rep = kr.l44_bounds_audit(f)
    assert abs(rep["sup_product"] - 1) < 1e-12 and rep["a"] == 1.0
    prods = []
    for v in (0.2, 0.05, 0.0125):
        ex = models.example3([1.0], [v])
        prods.append(kr.l44_bounds_audit(ex.continuum_factorization)["sup_product"])
    dev = np.abs(np.array(prods) - 1)
    assert np.all(np.diff(dev) < 0) and dev[-1] < 1e-3


def test_l44_example2_sweep():
    sups = []
    for eps in (0.4, 0.2, 0.1):
        T = int(round(2.0 / eps ** 2))
        rep = kr.l44_bounds_audit(example2(eps, T).continuum_factorization)
        assert rep["gronwall_ok"]
        sups.append(rep["sup_product"])
    assert max(sups) < 10 * min(sups)
