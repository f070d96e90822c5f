"""The oscillation functional K~(H) and the entropy K_m."""

from dataclasses import dataclass, field

import numpy as np

from . import mat2
from .errors import NotUnitDeterminant
from .hamiltonian import PiecewiseHamiltonian, XiProfile
from .quadrature import adaptive_gk, poisson_log_integral
from .solver import entropy_edges, spectral_density, weyl_m

DET1_TOL = 1e-10


@dataclass
class KtildeReport:
    terms: np.ndarray  # shape (n_cutoff,)
    total: float
    n_cutoff: int
    eta: np.ndarray = field(repr=False)

    def rows(self):
        return [(n, float(t)) for n, t in enumerate(self.terms)]


def ktilde(h):
    """Sum over n of det(integral of H over [eta_n, eta_{n+2}]) - 4."""
    xi = XiProfile(h)
    n_cut = int(np.ceil(xi.xi_ell)) + 2
    eta = np.array([xi.eta(n) for n in range(n_cut + 2)])
    terms = np.zeros(n_cut)
    for n in range(n_cut):
        if eta[n] >= h.ell:
            # window inside the constant tail: the term is exactly zero
            continue
        w = h.integral(eta[n], eta[n + 2])
        terms[n] = mat2.det2(w) - 4.0
    return KtildeReport(terms, float(np.sum(terms)), n_cut, eta)


def require_det1(h, tol=DET1_TOL):
    d = np.append(mat2.det2(h.cells), mat2.det2(h.tail))
    if np.any(np.abs(d - 1.0) > tol):
        raise NotUnitDeterminant(f"max |det H - 1| = {np.max(np.abs(d - 1.0)):.3e}")


def inverse_hamiltonian(h):
    return PiecewiseHamiltonian(h.lengths, mat2.inv2(h.cells), mat2.inv2(h.tail))


def ktilde_a2(h):
    """4 * sum (||<H>^{1/2} <H^{-1}>^{1/2}||^2 - 1) over the windows [n, n+2]."""
    require_det1(h)
    hinv = inverse_hamiltonian(h)
    n_cut = int(np.ceil(h.ell)) + 2
    total = []
    for n in range(n_cut):
        if n >= h.ell:
            break
        a = 0.5 * h.integral(n, n + 2)
        b = 0.5 * hinv.integral(n, n + 2)
        p = mat2.sqrtm_psd(a) @ mat2.sqrtm_psd(b)
        total.append(4.0 * (mat2.opnorm(p) ** 2 - 1.0))
    return float(np.sum(total))


def diag_a2_bound(h):
    """(sum over [n, n+2] of (int h1)(int 1/h1) - 4, K~(H)); lhs <= rhs."""
    require_det1(h)
    h1 = np.append(h.cells[:, 0, 0], h.tail[0, 0])
    if np.any(h1 <= 0):
        raise NotUnitDeterminant("h1 must be positive")
    inv = PiecewiseHamiltonian(h.lengths, (1.0 / h1[:-1])[:, None, None] * mat2.I2,
                               mat2.I2 / h1[-1])
    n_cut = int(np.ceil(h.ell)) + 2
    lhs = []
    for n in range(n_cut):
        if n >= h.ell:
            break
        lhs.append(h.integral(n, n + 2)[0, 0] * inv.integral(n, n + 2)[0, 0] - 4.0)
    return float(np.sum(lhs)), ktilde(h).total


@dataclass
class EntropyReport:
    K: float
    logI: float
    J: float
    quadrature_error_estimate: float
    method: str


def entropy_closed(h):
    k_edges, ms = entropy_edges(h)
    log_i = float(np.log(ms[0].imag))
    k = float(k_edges[0])
    return EntropyReport(k, log_i, log_i - k, 0.0, "closed-form")


def oscillation_scale(h):
    """Largest frequency of log w at infinity: 2 xi(ell)."""
    return 2.0 * XiProfile(h).xi_ell + 1.0


def entropy_quadrature(h, tol=1e-7):
    """K = log Im m(i) - (1/pi) int log w(x)/(1+x^2) dx by quadrature."""
    log_i = float(np.log(weyl_m(h, 1j).imag))

    def logw(x):
        return np.log(spectral_density(h, x))

    j, err = poisson_log_integral(logw, scale=oscillation_scale(h), tol=tol)
    return EntropyReport(log_i - j, log_i, j, err, "quadrature")


def entropy_diagnostics(h, n=257):
    """(theta, log w(tan theta)) on an open grid of (-pi/2, pi/2)."""
    theta = (np.arange(n) + 0.5) / n * np.pi - 0.5 * np.pi
    return theta, np.log(spectral_density(h, np.tan(theta)))


def entropy_profile(h, boundaries=None):
    """[(r, K_H(r))]; boundaries default to the cell edges."""
    if boundaries is None:
        boundaries = list(h.edges)
    hs = h
    for r in boundaries:
        if r < hs.ell:
            hs = hs.split_at(r)
    k_edges, _ = entropy_edges(hs)
    out = []
    for r in boundaries:
        if r >= hs.ell:
            out.append((float(r), 0.0))
        else:
            out.append((float(r), float(k_edges[hs.matching_edge(r)])))
    return out


def log_minus_integral(w_func, a, b, panels=64):
    """int_a^b log^-(w(x)) / (1 + x^2) dx with log^- = max(-log, 0)."""
    def g(x):
        return np.maximum(-np.log(w_func(x)), 0.0) / (1.0 + x * x)
    return adaptive_gk(g, np.linspace(a, b, panels + 1), tol_density=1e-13)[0]


def min_growth_constant(k_m, k_t):
    """Smallest C >= 0 with k_t <= C k_m exp(C k_m)."""
    if k_t <= 0:
        return 0.0
    if k_m <= 0 or not np.isfinite(k_m):
        return np.inf
    lo, hi = 0.0, 1.0
    while hi * k_m * np.exp(hi * k_m) < k_t:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid * k_m * np.exp(mid * k_m) < k_t:
            lo = mid
        else:
            hi = mid
    return hi


def theorem1_audit(h):
    """Both sides of the two-sided entropy bound, with ratios and a finiteness flag."""
    try:
        k_m = entropy_closed(h).K
    except (ArithmeticError, ValueError):
        k_m = np.inf
    try:
        k_t = ktilde(h).total
    except ValueError:
        k_t = np.inf
    fin_m, fin_t = bool(np.isfinite(k_m)), bool(np.isfinite(k_t))
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = k_t / k_m if k_m > 0 else (0.0 if k_t == 0 else np.inf)
        r2 = k_t / (k_m * np.exp(k_m)) if k_m > 0 else (0.0 if k_t == 0 else np.inf)
    return {
        "K_m": float(k_m),
        "ktilde": float(k_t),
        "ratio": float(r1),
        "ratio_exp": float(r2),
        "growth_constant": float(min_growth_constant(k_m, k_t)) if fin_m and fin_t else np.inf,
        "finiteness_mismatch": fin_m != fin_t,
    }
