"""Transfer matrices, Weyl functions, densities and the closed-form entropy.

The canonical system J M' = z H M is solved cell by cell with the exact
propagator exp(-z J H dt).  Weyl functions are pulled back from the tail
through the cells one at a time (m_prev = Mob(E_k, m_next)), which is the
composition law of the Weyl function applied at every cell boundary; the
recursion never forms long products, so it cannot overflow.
"""

from dataclasses import dataclass

import numpy as np

from . import mat2
from .errors import NotPositiveDefinite, PoleHit
from .hamiltonian import XiProfile


def cell_propagator(h, dt, z):
    """exp(-z J h dt) for scalar or array z (cells broadcast against z)."""
    z = np.asarray(z, dtype=complex)
    gen = mat2.J @ np.asarray(h, dtype=float)
    a = -(z * np.asarray(dt, dtype=float))[..., None, None] * gen
    return mat2.expm_tracefree(a)


def transfer(h, t, z):
    """M(t, z), shape z.shape + (2, 2)."""
    z = np.asarray(z, dtype=complex)
    m = np.broadcast_to(mat2.I2.astype(complex), z.shape + (2, 2)).copy()
    if t <= 0:
        return m
    e = h.edges
    for k in range(h.n_cells):
        if e[k] >= t:
            break
        dt = min(t, e[k + 1]) - e[k]
        m = cell_propagator(h.cells[k], dt, z) @ m
    if t > h.ell:
        m = cell_propagator(h.tail, t - h.ell, z) @ m
    return m


def weyl_constant(a):
    """Weyl value of the constant Hamiltonian A: (a12 + i sqrt(det A))/a11."""
    a = np.asarray(a, dtype=float)
    d = mat2.det2(a)
    if a[0, 0] <= 0 or d <= 0:
        raise NotPositiveDefinite("tail must be positive definite")
    return complex(0.5 * (a[0, 1] + a[1, 0]), np.sqrt(d)) / a[0, 0]


def pullback(e, m):
    """Weyl value at the left end of a cell from the value m at its right end."""
    num = e[..., 0, 1] + m * e[..., 1, 1]
    den = e[..., 0, 0] + m * e[..., 1, 0]
    return num / den, den


@dataclass
class HerglotzPoint:
    z: complex
    m: complex

    @property
    def I(self):
        return float(np.imag(self.m))

    @property
    def R(self):
        return float(np.real(self.m))


def weyl_edges(h, z):
    """m_r(z) at every cell boundary r = edges[k]; shape (n_cells+1,) + z.shape.

    Also returns the log-moduli of the denominators, log|Theta+ + m Theta-|
    of each cell, used by the entropy formula.
    """
    z = np.asarray(z, dtype=complex)
    n = h.n_cells
    ms = np.empty((n + 1,) + z.shape, dtype=complex)
    logf = np.zeros((n,) + z.shape)
    ms[n] = weyl_constant(h.tail)
    for k in range(n - 1, -1, -1):
        e = cell_propagator(h.cells[k], h.lengths[k], z)
        ms[k], den = pullback(e, ms[k + 1])
        if np.any(den == 0):
            raise PoleHit(f"denominator vanished in cell {k}")
        logf[k] = np.log(np.abs(den))
    return ms, logf


def weyl_m(h, z):
    return weyl_edges(h, z)[0][0]


def weyl_fc(h, z):
    z = complex(z)
    if z.imag <= 0:
        raise PoleHit("weyl_fc needs Im z > 0")
    return HerglotzPoint(z, complex(weyl_m(h, z)))


def weyl_at_r(h, r, z):
    """Weyl function of the shifted Hamiltonian t -> H(t + r)."""
    if r >= h.ell:
        return weyl_constant(h.tail) + 0 * np.asarray(z, dtype=complex)
    hs = h.split_at(r)
    return weyl_m(hs.shifted(r), z)


def weyl_at_r_inverse(h, r, z, m=None):
    """m_r from m through the inverted composition law (Theta+ m - Phi+)/(Phi- - Theta- m)."""
    if m is None:
        m = weyl_m(h, z)
    mm = transfer(h, r, z)
    num = mm[..., 0, 0] * m - mm[..., 0, 1]
    den = mm[..., 1, 1] - mm[..., 1, 0] * m
    return num / den


def compose_weyl(h, r, z, m_r):
    """m from m_r via the composition law at r."""
    mm = transfer(h, r, z)
    return (mm[..., 0, 1] + m_r * mm[..., 1, 1]) / (mm[..., 0, 0] + m_r * mm[..., 1, 0])


def spectral_density(h, x):
    """w(x) = Im m(x + i0) on a real grid.

    Equal to I_tail / |Theta+(ell, x) + m_ell Theta-(ell, x)|^2; evaluated by
    the backward recursion, where each step divides Im m by |den|^2.
    """
    x = np.asarray(x, dtype=float)
    ms, _ = weyl_edges(h, x.astype(complex))
    return np.imag(ms[0])


def weyl_limit_probe(h, z, omega, t_list):
    """(omega Phi+ + Phi-)/(omega Theta+ + Theta-) at each t; inf means Phi+/Theta+.

    Samples whose denominator vanishes are returned as nan (reported, not fatal).
    """
    out = []
    for t in t_list:
        m = transfer(h, t, z)
        if np.isinf(omega):
            num, den = m[..., 0, 1], m[..., 0, 0]
        else:
            num = omega * m[..., 0, 1] + m[..., 1, 1]
            den = omega * m[..., 0, 0] + m[..., 1, 0]
        out.append(complex(num / den) if den != 0 else complex(np.nan, np.nan))
    return out


def entropy_edges(h):
    """K_H(r) at every cell boundary via the entropy shift formula.

    K_H(r) = log I_H(r) - log I_tail - 2 (xi(ell) - xi(r)) + 2 log|F_{r->ell}(i)|,
    where log|F| is accumulated from the per-cell denominators.  The value at
    r = ell is exactly 0.
    """
    ms, logf = weyl_edges(h, 1j)
    s = np.sqrt(np.maximum(mat2.det2(h.cells), 0.0)) * h.lengths
    per_cell = 2.0 * logf - 2.0 * s
    # suffix sums, accumulated from the tail
    acc = np.zeros(h.n_cells + 1)
    for k in range(h.n_cells - 1, -1, -1):
        acc[k] = acc[k + 1] + per_cell[k]
    log_tail = np.log(ms[-1].imag)
    k_vals = (np.log(ms.imag) - log_tail) + acc
    k_vals[-1] = 0.0
    return k_vals, ms


def entropy_closed_form(h):
    return float(entropy_edges(h)[0][0])


def entropy_at_r(h, r):
    """K_H(r); r is split into a cell boundary first. Exactly 0 for r >= ell."""
    if r >= h.ell:
        return 0.0
    hs = h.split_at(r)
    k = hs.matching_edge(r)
    return float(entropy_edges(hs)[0][k])


class InteriorWeyl:
    """I_H(t), R_H(t) and K_H(t) at arbitrary t, cellwise in closed form.

    `cell` forces the analytic formula of one cell to be used, which is how
    one-sided derivatives at cell boundaries are obtained by centred
    differences.
    """

    def __init__(self, h):
        self.h = h
        self.k_edges, self.m_edges = entropy_edges(h)
        self.sdet = np.sqrt(np.maximum(mat2.det2(h.cells), 0.0))
        self.m_tail = weyl_constant(h.tail)

    def cell_of(self, t):
        return np.minimum(self.h.cell_index(t), self.h.n_cells)

    def m(self, t, cell=None):
        t = np.asarray(t, dtype=float)
        k = self.cell_of(t) if cell is None else np.broadcast_to(cell, t.shape)
        out = np.empty(t.shape, dtype=complex)
        for kk in np.unique(k):
            sel = k == kk
            if kk >= self.h.n_cells:
                out[sel] = self.m_tail
                continue
            b = self.h.edges[kk + 1]
            e = cell_propagator(self.h.cells[kk], b - t[sel], 1j)
            out[sel] = pullback(e, self.m_edges[kk + 1])[0]
        return out

    def entropy(self, t, cell=None):
        t = np.asarray(t, dtype=float)
        k = self.cell_of(t) if cell is None else np.broadcast_to(cell, t.shape)
        out = np.zeros(t.shape)
        log_tail = np.log(self.m_tail.imag)
        for kk in np.unique(k):
            sel = k == kk
            if kk >= self.h.n_cells:
                continue
            b = self.h.edges[kk + 1]
            e = cell_propagator(self.h.cells[kk], b - t[sel], 1j)
            m, den = pullback(e, self.m_edges[kk + 1])
            rest = self.k_edges[kk + 1] - (np.log(self.m_edges[kk + 1].imag) - log_tail)
            out[sel] = (np.log(m.imag) - log_tail) + rest + 2.0 * np.log(np.abs(den)) \
                - 2.0 * self.sdet[kk] * (b - t[sel])
        return out


def xi_profile(h):
    return XiProfile(h)
