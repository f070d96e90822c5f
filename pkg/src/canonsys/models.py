"""Dirac reduction and the exactly solvable examples with their oracles."""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import mat2
from .errors import NonTraceFree, PreconditionError
from .factorization import (GaugeFactorization, PiecewiseConstantFactorization,
                            identity_factorization)
from .hamiltonian import PiecewiseHamiltonian

SERIES_X = 1e-4


@dataclass
class DiracPotential:
    """Piecewise-constant symmetric trace-free V on [0, T), zero afterwards."""

    lengths: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.lengths = np.asarray(self.lengths, dtype=float).reshape(-1)
        self.values = np.asarray(self.values, dtype=float).reshape(-1, 2, 2)
        if len(self.lengths) != len(self.values):
            raise PreconditionError("lengths and values differ in number")
        if np.any(self.lengths <= 0):
            raise PreconditionError("potential cells need positive length")
        if not np.all(mat2.is_symmetric(self.values)):
            raise PreconditionError("potential must be symmetric")
        scale = 1.0 + np.abs(self.values).max(axis=(-2, -1)) if len(self.values) else 1.0
        if np.any(np.abs(mat2.tr2(self.values)) > 1e-12 * scale):
            raise NonTraceFree("potential must be trace free")

    @property
    def edges(self):
        return np.concatenate([[0.0], np.cumsum(self.lengths)])

    @property
    def extent(self):
        return float(self.edges[-1])

    @classmethod
    def offdiag(cls, lengths, v):
        """V = ((0, v), (v, 0)) cellwise."""
        v = np.asarray(v, dtype=float)
        z = np.zeros_like(v)
        return cls(lengths, mat2.mat(z, v, v, z))

    @classmethod
    def diagonal(cls, lengths, v):
        """V = diag(v, -v) cellwise."""
        v = np.asarray(v, dtype=float)
        z = np.zeros_like(v)
        return cls(lengths, mat2.mat(v, z, z, -v))

    def to_dict(self):
        return {"cells": [{"len": float(n), "v": [[float(x) for x in row] for row in m]}
                          for n, m in zip(self.lengths, self.values)]}

    @classmethod
    def from_dict(cls, d):
        try:
            cells = d["cells"]
            return cls([float(c["len"]) for c in cells],
                       np.array([c["v"] for c in cells], dtype=float).reshape(-1, 2, 2))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed potential JSON: {exc}") from exc


def _sinhc(x):
    small = np.abs(x) < SERIES_X
    xs = np.where(small, 1.0, x)
    return np.where(small, 1.0 + x * x / 6.0, np.sinh(xs) / xs)


def _coshm1c(x):
    """2 (cosh x - 1) / x^2."""
    small = np.abs(x) < SERIES_X
    xs = np.where(small, 1.0, x)
    return np.where(small, 1.0 + x * x / 12.0, 2.0 * (np.cosh(xs) - 1.0) / (xs * xs))


def _n0_step(jv, dt):
    return np.real(mat2.expm_tracefree(dt * jv))


def _subcell_mean_and_slope(na, jv, rho, d):
    """Mean of N^T N over [a, a + d] and its derivative at a + d/2."""
    x = 2.0 * rho * d
    inner = _sinhc(x) * np.eye(2) + d * _coshm1c(x) * jv
    mean = na.T @ inner @ na
    slope = na.T @ (2.0 * jv @ _n0_step(jv, d)) @ na
    return mat2.sym(mean), mat2.sym(slope)


def _moment_pair(mean, slope):
    """Two det-1 matrices with average `mean`, ordered along `slope`."""
    det = mat2.det2(mean)
    if det - 1.0 <= 1e-15:
        return None
    s = np.sqrt((det - 1.0) / det)
    root = mat2.sqrtm_psd(mean)
    ri = mat2.inv2(root)
    t = mat2.sym(ri @ slope @ ri)
    t0 = t - 0.5 * mat2.tr2(t) * np.eye(2)
    nrm = np.sqrt(max(-mat2.det2(t0), 0.0))
    sdir = t0 / nrm if nrm > 1e-300 else np.diag([1.0, -1.0])
    lo = mat2.sym(root @ (np.eye(2) - s * sdir) @ root)
    hi = mat2.sym(root @ (np.eye(2) + s * sdir) @ root)
    return lo, hi


def dirac_to_hamiltonian(pot, step=1.0 / 16):
    """H = N0^T N0 with N0' = J V N0, N0(0) = I, sampled into det-1 cells.

    Each potential cell is cut into subcells of length <= step.  A subcell
    with exact mean M (det M >= 1) becomes two half-cells whose matrices
    have det 1 and average M, so integrals of H over subcell unions are
    exact and det H = 1 everywhere.  The tail is N0(T)^T N0(T).
    """
    na = np.eye(2)
    lengths, cells = [], []
    for length, v in zip(pot.lengths, pot.values):
        jv = mat2.J @ v
        rho = np.sqrt(max(-mat2.det2(jv), 0.0))
        m = max(1, int(np.ceil(length / step - 1e-12)))
        d = length / m
        step_mat = _n0_step(jv, d)
        for _ in range(m):
            mean, slope = _subcell_mean_and_slope(na, jv, rho, d)
            pair = _moment_pair(mean, slope)
            if pair is None:
                lengths.append(d)
                cells.append(mean / np.sqrt(mat2.det2(mean)))
            else:
                lengths += [0.5 * d, 0.5 * d]
                cells += [pair[0], pair[1]]
            na = step_mat @ na
            # keep det N0 = 1 to rounding so window determinants do not drift
            na = na / np.sqrt(mat2.det2(na))
    tail = mat2.sym(na.T @ na)
    return PiecewiseHamiltonian(lengths, np.array(cells).reshape(-1, 2, 2), tail)


def dirac_n0(pot, t):
    """N0(t) in closed form (cellwise exponentials)."""
    t = float(t)
    na = np.eye(2)
    for a, length, v in zip(pot.edges[:-1], pot.lengths, pot.values):
        if t <= a:
            break
        na = _n0_step(mat2.J @ v, min(t - a, length)) @ na
    return na


def dirac_gauge_factorization(h, pot):
    """Exact factorization of the sampled H: G = N0, V = potential (all in V2), Q = G^-T H G^-1."""
    n = len(pot.lengths)
    return GaugeFactorization(h, pot.edges, np.zeros((n, 2, 2)), pot.values)


def dirac_continuum_factorization(pot):
    """The factorization G = N0, Q = I, V2 = potential of the unsampled N0^T N0."""
    n = len(pot.lengths)
    return PiecewiseConstantFactorization(pot.edges, np.broadcast_to(np.eye(2), (n, 2, 2)),
                                          np.zeros((n, 2, 2)), pot.values)


@dataclass
class Instance:
    name: str
    h: PiecewiseHamiltonian
    oracle: dict = field(default_factory=dict)
    factorization: object = None
    continuum_factorization: object = None
    potential: DiracPotential = None


def example1(L):
    """H = diag(1, 0) on [0, L], I afterwards."""
    L = float(L)
    if L <= 0:
        raise PreconditionError("L must be positive")
    h = PiecewiseHamiltonian([L], [np.diag([1.0, 0.0])], np.eye(2))
    oracle = {
        "ktilde": 2.0 * L,
        "K": float(np.log1p(L)),
        "m_i": 1j / (1.0 + L),
        "m": lambda z: 1j / (1.0 - 1j * np.asarray(z) * L),
        "density": lambda x: 1.0 / (1.0 + (np.asarray(x) * L) ** 2),
        "eta": lambda n: 0.0 if n == 0 else L + n,
    }
    return Instance("example1", h, oracle, identity_factorization(h))


def example2_ktilde(eps, T):
    """The closed-form sum for K~ of the exponential diagonal Hamiltonian."""
    e = eps
    a = (T - 1) * ((1.0 - np.exp(-4 * e)) * (np.exp(4 * e) - 1.0) / (4 * e * e) - 4.0)
    b = ((np.exp(2 * e) - 1.0) / (2 * e) + 1.0) * ((1.0 - np.exp(-2 * e)) / (2 * e) + 1.0) - 4.0
    return float(a + b)


def example2_pstar(eps, x, r):
    """(P*_{2r}(x), P_{2r}(x)) from the eigen-decomposition with mu = ix +- sqrt(eps^2 - x^2)."""
    x = np.asarray(x, dtype=complex)
    root = np.sqrt(eps * eps - x * x + 0j)
    mp, mm = 1j * x + root, 1j * x - root
    dmu = mp - mm
    ps = (eps + mp) / dmu * np.exp(mm * r) - (eps + mm) / dmu * np.exp(mp * r)
    p = -mm * (eps + mp) / (eps * dmu) * np.exp(mm * r) + mp * (eps + mm) / (eps * dmu) * np.exp(mp * r)
    return ps, p


def example2(eps, T, step=1.0):
    """Dirac potential ((0, eps), (eps, 0)) on [0, T]; unit cells by default."""
    eps, T = float(eps), int(T)
    if not 0 < eps <= 0.5 or T < 1:
        raise PreconditionError("need 0 < eps <= 1/2 and T >= 1")
    if eps * T < 10.0 / eps:
        warnings.warn("example2 is meant for eps*T >= 10/eps", stacklevel=2)
    pot = DiracPotential.offdiag([float(T)], [eps])
    h = dirac_to_hamiltonian(pot, step=step)
    oracle = {
        "ktilde": example2_ktilde(eps, T),
        "L": eps * eps * T,
        "pstar": lambda x, r=T: example2_pstar(eps, x, r)[0],
        "p": lambda x, r=T: example2_pstar(eps, x, r)[1],
        "hamiltonian": lambda t: np.array([[np.exp(-2 * eps * min(t, T)), 0.0],
                                           [0.0, np.exp(2 * eps * min(t, T))]]),
    }
    return Instance("example2", h, oracle, dirac_gauge_factorization(h, pot),
                    dirac_continuum_factorization(pot), pot)


def example3(lengths, v, step=1.0 / 16):
    """Dirac potential diag(v, -v) with v piecewise constant."""
    pot = DiracPotential.diagonal(lengths, v)
    h = dirac_to_hamiltonian(pot, step=step)
    edges = pot.edges
    vv = np.asarray(v, dtype=float)

    def phi(t):
        t = np.asarray(t, dtype=float)
        seg = np.clip(t[..., None] - edges[:-1], 0.0, pot.lengths)
        return seg @ vv

    def ham(t):
        p = 2.0 * phi(t)
        return mat2.mat(np.cosh(p), np.sinh(p), np.sinh(p), np.cosh(p))

    oracle = {"det": 1.0, "phi": phi, "hamiltonian": ham,
              "v2_norm": float(np.sqrt(np.sum(pot.lengths * vv ** 2) * 1.0))}
    return Instance("example3", h, oracle, dirac_gauge_factorization(h, pot),
                    dirac_continuum_factorization(pot), pot)


def random_fc_det1(rng, max_cells=12, lo=0.25, hi=4.0, len_lo=0.25, len_hi=2.0):
    """Random det-1 FC Hamiltonian: up to max_cells cells plus tail, diagonals in [lo, hi]."""
    n = int(rng.integers(1, max_cells + 1))
    cells = mat2.random_det1(rng, n, lo, hi)
    tail = mat2.random_det1(rng, None, lo, hi)
    return PiecewiseHamiltonian(rng.uniform(len_lo, len_hi, n), cells, tail)
