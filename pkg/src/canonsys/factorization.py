"""Factorizations H = G^T Q G with G' = J V G.

A factorization is a list of pieces [edges[k], edges[k+1]) on which the
factors are given by closed-form (analytic) expressions, followed by a
constant tail (V = 0, G and Q constant).  Every piece formula can be
evaluated at any t, which gives exact one-sided derivatives at piece ends by
centred differences.
"""

import json

import numpy as np

from . import mat2
from .errors import (DerivativeUnstable, GridMismatch, NotUnitDeterminant,
                     SingularWindow)
from .functionals import require_det1
from .hamiltonian import PiecewiseHamiltonian
from .solver import InteriorWeyl, weyl_constant

GL_X, GL_W = np.polynomial.legendre.leggauss(12)

EPS_SPLIT = 0.25


class Factorization:
    """Base class. Subclasses set `edges`, `g_end`, `q_tail` and implement `_piece`."""

    edges = np.array([0.0])
    piecewise_constant = False

    def _piece(self, k, t):
        """(G, Q, V1, V2) of piece k at times t (array), by the piece formula."""
        raise NotImplementedError

    def constant_on_piece(self, k):
        """True when Q and V are constant on piece k."""
        return self.piecewise_constant

    @property
    def extent(self):
        return float(self.edges[-1])

    def piece_index(self, t):
        return np.searchsorted(self.edges, np.asarray(t, dtype=float), side="right") - 1

    def evaluate(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        k = self.piece_index(t)
        n = len(self.edges) - 1
        g = np.empty(t.shape + (2, 2))
        q = np.empty_like(g)
        v1 = np.zeros_like(g)
        v2 = np.zeros_like(g)
        tail = k >= n
        g[tail] = self.g_end
        q[tail] = self.q_tail
        for kk in np.unique(k[~tail]):
            sel = k == kk
            g[sel], q[sel], v1[sel], v2[sel] = self._piece(int(kk), t[sel])
        return g, q, v1, v2

    def G(self, t):
        return self.evaluate(t)[0]

    def Q(self, t):
        return self.evaluate(t)[1]

    def V(self, t):
        _, _, v1, v2 = self.evaluate(t)
        return v1 + v2

    def hamiltonian_at(self, t):
        g, q, _, _ = self.evaluate(t)
        return mat2.transpose(g) @ q @ g

    def grid(self, step=1.0 / 64, margin=2.0):
        end = self.extent + margin
        pts = np.concatenate([np.arange(0.0, end + 0.5 * step, step), self.edges,
                              np.arange(0.0, np.floor(end) + 1.0)])
        pts = np.unique(np.round(pts, 12))
        return pts[pts <= end + 1e-12]

    def quadrature_nodes(self, max_width=0.125):
        """Gauss-Legendre nodes/weights covering [0, extent] piece by piece."""
        xs, ws = [], []
        for a, b in zip(self.edges[:-1], self.edges[1:]):
            n = max(1, int(np.ceil((b - a) / max_width)))
            sub = np.linspace(a, b, n + 1)
            half = 0.5 * np.diff(sub)
            mid = 0.5 * (sub[:-1] + sub[1:])
            xs.append((mid[:, None] + half[:, None] * GL_X).ravel())
            ws.append((half[:, None] * GL_W).ravel())
        if not xs:
            return np.zeros(0), np.zeros(0)
        return np.concatenate(xs), np.concatenate(ws)

    def norms(self):
        """q = int |tr Q - 2|, v1 = int ||V1||, v2 = (int ||V2||^2)^(1/2)."""
        x, w = self.quadrature_nodes()
        if x.size == 0:
            return {"q": 0.0, "v1": 0.0, "v2": 0.0}
        _, q, v1, v2 = self.evaluate(x)
        return {
            "q": float(np.sum(w * np.abs(mat2.tr2(q) - 2.0))),
            "v1": float(np.sum(w * mat2.opnorm(v1))),
            "v2": float(np.sqrt(np.sum(w * mat2.opnorm(v2) ** 2))),
        }

    def trace_integral(self):
        """int (tr Q - 2) over [0, extent] (the tail contributes nothing when Q = I there)."""
        x, w = self.quadrature_nodes()
        if x.size == 0:
            return 0.0
        return float(np.sum(w * (mat2.tr2(self.Q(x)) - 2.0)))

    def trace_v_integral(self, r):
        """int_0^r trace V."""
        r = float(r)
        x, w = self.quadrature_nodes()
        sel = x < r
        total = np.sum(w[sel] * mat2.tr2(self.V(x[sel])))
        # correct the piece that straddles r
        k = int(self.piece_index(r))
        if 0 <= k < len(self.edges) - 1 and r > self.edges[k]:
            a, b = self.edges[k], self.edges[k + 1]
            selk = (x >= a) & (x < b) & sel
            total -= np.sum(w[selk] * mat2.tr2(self.V(x[selk])))
            n = max(1, int(np.ceil((r - a) / 0.125)))
            sub = np.linspace(a, r, n + 1)
            half = 0.5 * np.diff(sub)
            mid = 0.5 * (sub[:-1] + sub[1:])
            xx = (mid[:, None] + half[:, None] * GL_X).ravel()
            ww = (half[:, None] * GL_W).ravel()
            total += np.sum(ww * mat2.tr2(self._piece(k, xx)[2] + self._piece(k, xx)[3]))
        return float(total)

    def to_dict(self, grid=None):
        if grid is None:
            grid = self.grid()
        g, q, v1, v2 = self.evaluate(grid)
        lst = lambda a: [[[float(x) for x in row] for row in m] for m in a]  # noqa: E731
        return {"grid": [float(t) for t in grid], "G": lst(g), "Q": lst(q),
                "V1": lst(v1), "V2": lst(v2), "norms": self.norms()}

    def to_json(self, grid=None, **kw):
        return json.dumps(self.to_dict(grid), **kw)

    # derived factorizations
    def conjugated(self, left, right):
        return ConjugatedFactorization(self, left, right)

    def dual(self):
        return ConjugatedFactorization(self, mat2.J.T, mat2.J)

    def truncated(self, ell):
        return TruncatedFactorization(self, ell)


class PiecewiseConstantFactorization(Factorization):
    """Q and V constant on each piece; G(t) = exp((t - a) J V) G(a)."""

    piecewise_constant = True

    def __init__(self, edges, qs, v1s, v2s, g0=None, q_tail=None):
        self.edges = np.asarray(edges, dtype=float)
        self.qs = np.asarray(qs, dtype=float).reshape(-1, 2, 2)
        self.v1s = np.asarray(v1s, dtype=float).reshape(-1, 2, 2)
        self.v2s = np.asarray(v2s, dtype=float).reshape(-1, 2, 2)
        g = np.eye(2) if g0 is None else np.asarray(g0, dtype=float)
        gs = [g]
        for k in range(len(self.edges) - 1):
            e = mat2.expm_tracefree((self.edges[k + 1] - self.edges[k]) * mat2.J @ (self.v1s[k] + self.v2s[k]))
            g = np.real(e) @ g
            gs.append(g)
        self.g_edges = np.array(gs)
        self.g_end = gs[-1]
        self.q_tail = np.eye(2) if q_tail is None else np.asarray(q_tail, dtype=float)

    def _piece(self, k, t):
        v = self.v1s[k] + self.v2s[k]
        dt = np.asarray(t) - self.edges[k]
        e = np.real(mat2.expm_tracefree(dt[..., None, None] * (mat2.J @ v)))
        g = e @ self.g_edges[k]
        shape = g.shape
        return (g, np.broadcast_to(self.qs[k], shape).copy(),
                np.broadcast_to(self.v1s[k], shape).copy(), np.broadcast_to(self.v2s[k], shape).copy())


class GaugeFactorization(Factorization):
    """Any potential V, with Q := G^{-T} H G^{-1}; exact for every H.

    V (split as V1 + V2) is constant on the cells of `v_edges`; G solves
    G' = J V G from g0.  With V = 0 and g0 = I this is the trivial
    factorization Q = H.  Pieces where V = 0 have constant Q.
    """

    def __init__(self, h, v_edges=None, v1s=None, v2s=None, g0=None):
        self.h = h
        if v_edges is None:
            v_edges = np.array([0.0])
            v1s = v2s = np.zeros((0, 2, 2))
        v_edges = np.asarray(v_edges, dtype=float)
        self.v_edges = v_edges
        self.v1s_cells = np.asarray(v1s, dtype=float).reshape(-1, 2, 2)
        self.v2s_cells = np.asarray(v2s, dtype=float).reshape(-1, 2, 2)
        edges = np.unique(np.concatenate([h.edges, v_edges]))
        self.edges = edges
        n = len(edges) - 1
        kv = np.searchsorted(v_edges, edges[:-1], side="right") - 1
        inside = kv < len(v_edges) - 1
        self.v1s = np.zeros((n, 2, 2))
        self.v2s = np.zeros((n, 2, 2))
        self.v1s[inside] = self.v1s_cells[kv[inside]]
        self.v2s[inside] = self.v2s_cells[kv[inside]]
        self.hs = h.value_at(edges[:-1]) if n else np.zeros((0, 2, 2))
        g = np.eye(2) if g0 is None else np.asarray(g0, dtype=float)
        gs = [g]
        for k in range(n):
            e = mat2.expm_tracefree((edges[k + 1] - edges[k]) * mat2.J @ (self.v1s[k] + self.v2s[k]))
            g = np.real(e) @ g
            gs.append(g)
        self.g_edges = np.array(gs)
        self.g_end = gs[-1]
        gi = mat2.inv2(self.g_end)
        self.q_tail = gi.T @ h.tail @ gi
        self.piecewise_constant = bool(np.all(self.v1s + self.v2s == 0.0))

    def _piece(self, k, t):
        v = self.v1s[k] + self.v2s[k]
        dt = np.asarray(t) - self.edges[k]
        e = np.real(mat2.expm_tracefree(dt[..., None, None] * (mat2.J @ v)))
        g = e @ self.g_edges[k]
        gi = mat2.inv2(g)
        q = mat2.transpose(gi) @ self.hs[k] @ gi
        shape = g.shape
        return (g, q, np.broadcast_to(self.v1s[k], shape).copy(),
                np.broadcast_to(self.v2s[k], shape).copy())

    def constant_on_piece(self, k):
        return bool(np.all(self.v1s[k] + self.v2s[k] == 0.0))


def identity_factorization(h):
    """G = I, Q = H, V = 0 (valid for any H; det Q = det H)."""
    return GaugeFactorization(h)


class ConjugatedFactorization(Factorization):
    """G -> L G A, Q -> L^{-T} Q L^{-1}, V -> L^{-T} V L^{-1}.

    This factorizes A^T H A.  With L = J^T, A = J it is the dual.
    """

    def __init__(self, base, left, right):
        self.base = base
        self.left = np.asarray(left, dtype=float)
        self.right = np.asarray(right, dtype=float)
        self.li = mat2.inv2(self.left)
        self.edges = base.edges
        self.piecewise_constant = base.piecewise_constant
        self.g_end = self.left @ base.g_end @ self.right
        self.q_tail = self.li.T @ base.q_tail @ self.li

    def _map(self, g, q, v1, v2):
        li, lit = self.li, self.li.T
        return (self.left @ g @ self.right, lit @ q @ li, lit @ v1 @ li, lit @ v2 @ li)

    def _piece(self, k, t):
        return self._map(*self.base._piece(k, t))

    def constant_on_piece(self, k):
        return self.base.constant_on_piece(k)


class TruncatedFactorization(Factorization):
    """Q = I and V = 0 after ell, G frozen at G(ell)."""

    def __init__(self, base, ell):
        self.base = base
        self.ell = float(ell)
        e = base.edges
        inner = e[e < self.ell]
        self.edges = np.append(inner, self.ell) if self.ell > 0 else np.array([0.0])
        self.piecewise_constant = base.piecewise_constant
        self.g_end = base.G(self.ell)[0]
        self.q_tail = np.eye(2)

    def _piece(self, k, t):
        # the edges before ell are those of the base, so piece k is base piece k
        return self.base._piece(k, t)

    def constant_on_piece(self, k):
        return self.base.constant_on_piece(k)


# --- oscillation construction -------------------------------------------------

def lambda_of(a):
    return mat2.cholesky_upper(a)


def triangular_step(a, b):
    """Lambda_C for C = Lambda_A^{-T} B Lambda_A^{-1}, so that Lambda_B = Lambda_C Lambda_A.

    Returns (Lambda_C, x, y, z, delta) with Lambda_C = ((x, y), (0, z)) and
    delta = det((A + B)/2) - 1.
    """
    la = lambda_of(a)
    lai = mat2.inv2(la)
    c = mat2.sym(lai.T @ np.asarray(b, dtype=float) @ lai)
    lc = lambda_of(c)
    delta = float(mat2.det2(0.5 * (np.asarray(a) + np.asarray(b))) - 1.0)
    return lc, float(lc[0, 0]), float(lc[0, 1]), float(lc[1, 1]), delta


class OscillationFactorization(Factorization):
    """Windowed triangular construction for det-1 Hamiltonians."""

    def __init__(self, h):
        require_det1(h)
        self.h = h
        n_win = int(np.ceil(h.ell)) if h.ell > 0 else 0
        hn = []
        for n in range(n_win + 1):
            w = h.integral(n, n + 1)
            if mat2.det2(w) <= 0 or w[0, 0] <= 0:
                raise SingularWindow(f"window {n} is not positive definite")
            hn.append(w)
        self.hn = np.array(hn)
        # G_n = Lambda_n ... Lambda_0 = upper Cholesky factor of H_n
        self.gn = np.array([lambda_of(w) for w in hn])
        self.lam = []
        self.eps = []
        self.diag = []
        for n in range(n_win):
            lc, x, y, z, d = triangular_step(hn[n], hn[n + 1])
            self.lam.append(self.gn[n + 1] @ mat2.inv2(self.gn[n]))
            self.eps.append(d)
            self.diag.append((x, y, z, d))
        self.lam = np.array(self.lam).reshape(-1, 2, 2)
        self.eps = np.array(self.eps)
        cuts = np.arange(0.0, n_win + 1.0)
        edges = np.unique(np.concatenate([cuts, h.edges[h.edges <= n_win]]))
        self.edges = edges if n_win > 0 else np.array([0.0])
        self.window = np.floor(self.edges[:-1] + 1e-12).astype(int)
        self.hs = h.value_at(self.edges[:-1]) if len(self.edges) > 1 else np.zeros((0, 2, 2))
        g_last = self.gn[n_win]
        self.g_end = g_last / np.sqrt(mat2.det2(g_last))
        gi = mat2.inv2(self.g_end)
        self.q_tail = gi.T @ h.tail @ gi

    def _piece(self, k, t):
        n = int(self.window[k])
        tl = np.asarray(t, dtype=float) - n
        lam = self.lam[n]
        x, y, z = lam[0, 0], lam[0, 1], lam[1, 1]
        a11 = 1.0 - tl + tl * x
        a22 = 1.0 - tl + tl * z
        u, v = 1.0 / a11, 1.0 / a22
        zero = np.zeros_like(tl)
        step = mat2.mat(a11, tl * y, zero, a22)
        g = step @ self.gn[n]
        dg = mat2.det2(g)
        nu = 1.0 / np.sqrt(dg)
        gg = nu[..., None, None] * g
        # Q = nu^-2 (G_n g^-1)^T Q_n (G_n g^-1), Q_n = G_n^-T H G_n^-1;
        # with T = G_n g^-1 = step^-1 this is nu^-2 step^-T G_n^-T H G_n^-1 step^-1
        gni = mat2.inv2(self.gn[n])
        qn = gni.T @ self.hs[k] @ gni
        si = mat2.mat(u, -tl * y * u * v, zero, v)
        q = (1.0 / nu ** 2)[..., None, None] * (mat2.transpose(si) @ qn @ si)
        zeta = 1.0 if self.eps[n] < EPS_SPLIT else 0.0
        xu = (x - 1.0) * u
        zv = (z - 1.0) * v
        yuv = y * u * v
        trz = xu + zv
        v1_12 = 0.5 * trz - xu * (1.0 - zeta)
        v1 = mat2.mat(zero, v1_12, v1_12, -(1.0 - zeta) * yuv)
        v2_12 = -xu * zeta
        v2 = mat2.mat(zero, v2_12, v2_12, -zeta * yuv)
        return gg, q, v1, v2

    def z_matrix(self, t):
        """Z = g' g^{-1} (closed form) at times t inside [0, extent)."""
        t = np.asarray(t, dtype=float)
        n = np.floor(t).astype(int)
        lam = self.lam[n]
        tl = t - n
        x, y, z = lam[..., 0, 0], lam[..., 0, 1], lam[..., 1, 1]
        u = 1.0 / (1.0 - tl + tl * x)
        v = 1.0 / (1.0 - tl + tl * z)
        return mat2.mat((x - 1.0) * u, y * u * v, np.zeros_like(t), (z - 1.0) * v)

    def g_raw(self, t):
        t = np.asarray(t, dtype=float)
        n = np.minimum(np.floor(t).astype(int), len(self.lam) - 1)
        tl = t - n
        lam = self.lam[n]
        return (np.eye(2) + tl[..., None, None] * (lam - np.eye(2))) @ self.gn[n]


def factorize_oscillation(h, grid_step=1.0 / 64):
    f = OscillationFactorization(h)
    f.grid_step = grid_step
    return f


# --- spectral construction ----------------------------------------------------

class SpectralFactorization(Factorization):
    """G, Q, V built from I_H(t) = Im m_t(i), R_H(t) = Re m_t(i)."""

    def __init__(self, h, fd_step=1e-5):
        require_det1(h)
        self.h = h
        self.fd_step = fd_step
        self.weyl = InteriorWeyl(h)
        self.edges = np.array(h.edges)
        m = weyl_constant(h.tail)
        self.g_end = self._g(np.array(m.imag), np.array(m.real))
        self.q_tail = np.eye(2)

    @staticmethod
    def _g(i, r):
        s = np.sqrt(i)
        return mat2.mat(1.0 / s, r / s, np.zeros_like(s), s)

    def ir(self, k, t):
        m = self.weyl.m(t, cell=k)
        return m.imag, m.real

    def derivatives(self, k, t):
        """(I', R') by centred differences with one Richardson step."""
        t = np.asarray(t, dtype=float)
        hh = self.fd_step
        mp, mm = self.weyl.m(t + hh, cell=k), self.weyl.m(t - hh, cell=k)
        mp2, mm2 = self.weyl.m(t + 0.5 * hh, cell=k), self.weyl.m(t - 0.5 * hh, cell=k)
        d1 = (mp - mm) / (2 * hh)
        d2 = (mp2 - mm2) / hh
        dr = (4.0 * d2 - d1) / 3.0
        if np.any(np.abs(dr - d2) > 1e-4 * (1.0 + np.abs(dr))):
            raise DerivativeUnstable("Richardson estimates disagree")
        return dr.imag, dr.real

    def _piece(self, k, t):
        t = np.asarray(t, dtype=float)
        i, r = self.ir(k, t)
        di, dr = self.derivatives(k, t)
        hc = self.h.cells[k]
        h1, hh, h2 = hc[0, 0], 0.5 * (hc[0, 1] + hc[1, 0]), hc[1, 1]
        g = self._g(i, r)
        off = -r * h1 + hh
        q = mat2.mat(i * h1, off, off, (r * r * h1 - 2 * r * hh + h2) / i)
        a = di / (2 * i)
        b = -dr / i
        ih = i * h1
        s1 = (ih >= 0.5) & (ih <= 2.0)
        g2 = np.where(s1, 0.5 * (ih - 1.0 / ih), 0.0)
        g1 = a - g2
        zero = np.zeros_like(t)
        v1 = mat2.mat(zero, g1, g1, np.where(s1, 0.0, b))
        v2 = mat2.mat(zero, g2, g2, np.where(s1, b, 0.0))
        return g, q, v1, v2

    def identity_rhs(self, k, t):
        """Right-hand sides of the derivative identities for I'/I and R'/I."""
        i, r = self.ir(k, t)
        hc = self.h.cells[k]
        h1, hh = hc[0, 0], hc[0, 1]
        rp_over_i = 2 * r * h1 - 2 * hh
        ip_over_i = (i * h1 - 1.0 / (i * h1)) - rp_over_i ** 2 / (4 * i * h1)
        return ip_over_i, rp_over_i


def factorize_spectral(h, fd_step=1e-5):
    return SpectralFactorization(h, fd_step)


# --- verification and normalization ------------------------------------------

def verify_factorization(h, f, grid=None, fd_step=1e-5):
    """Residuals of the factorization conditions on a grid."""
    if grid is None:
        grid = f.grid()
    g, q, v1, v2 = f.evaluate(grid)
    hv = h.value_at(grid)
    recon = mat2.transpose(g) @ q @ g
    scale = 1.0 + np.abs(hv).max(axis=(-2, -1))
    v = v1 + v2
    # G' = J V G by centred differences of each piece formula
    k = f.piece_index(grid)
    inside = k < len(f.edges) - 1
    dres = 0.0
    for kk in np.unique(k[inside]):
        tt = grid[k == kk]
        gp = f._piece(int(kk), tt + fd_step)[0]
        gm = f._piece(int(kk), tt - fd_step)[0]
        g0, _, a1, a2 = f._piece(int(kk), tt)
        dg = (gp - gm) / (2 * fd_step)
        res = np.abs(dg - mat2.J @ (a1 + a2) @ g0).max(axis=(-2, -1)) / (1.0 + np.abs(dg).max(axis=(-2, -1)))
        dres = max(dres, float(res.max()))
    eig_q = mat2.eigvalsh2(mat2.sym(q))[..., 0]
    return {
        "residual": float((np.abs(hv - recon).max(axis=(-2, -1)) / scale).max()),
        "det_G": float(np.abs(mat2.det2(g) - 1.0).max()),
        "det_Q": float(np.abs(mat2.det2(q) - 1.0).max()),
        "min_eig_Q": float(eig_q.min()),
        "trace_Q_minus_2_min": float((mat2.tr2(q) - 2.0).min()),
        "V_asymmetry": float(np.abs(v[..., 0, 1] - v[..., 1, 0]).max()),
        "dG_residual": dres,
        "norms": f.norms(),
    }


def lemma_b_matrix(i_val, r_val):
    """The symmetric B of the normalization lemma."""
    d = (i_val + 1.0) / np.sqrt(i_val * (r_val ** 2 + (i_val + 1.0) ** 2))
    a = d * (i_val + r_val ** 2 / (1.0 + i_val))
    b = -d * r_val / (1.0 + i_val)
    return np.array([[a, b], [b, d]])


def normalize_l18(h, f):
    """A in SL(2, R) with m_A(i) = i and a diagonal G_A(0) = diag(a, 1/a), a <= 1.

    Returns (A, H_A, F_A) where F_A = C^T G A, C^T Q C, C^T V C.
    """
    from .hamiltonian import conjugate_sl2
    from .solver import weyl_m
    g0 = f.G(0.0)[0]
    g0i = mat2.inv2(g0)
    m = weyl_m(h, 1j)
    # m of H_{G^{-1}(0)}
    a11, a12, a21, a22 = g0i[0, 0], g0i[0, 1], g0i[1, 0], g0i[1, 1]
    m1 = (a22 * m + a12) / (a21 * m + a11)
    bmat = lemma_b_matrix(m1.imag, m1.real)
    # rotation C diagonalizing B with the smaller eigenvalue first
    w, vecs = np.linalg.eigh(bmat)
    c = vecs
    if np.linalg.det(c) < 0:
        c[:, 1] = -c[:, 1]
    amat = g0i @ bmat @ c
    h_a = conjugate_sl2(h, amat, tol=1e-9)
    f_a = ConjugatedFactorization(f, c.T, amat)
    return amat, h_a, f_a


def truncate_factorized(h, f, ell, grid=None):
    """(H_(ell), F_(ell)): H on [0, ell] then G(ell)^T G(ell); Q = I, V = 0 after ell."""
    if grid is None:
        grid = f.grid()
    if not np.any(np.abs(np.asarray(grid) - ell) <= 1e-12 * (1.0 + abs(ell))):
        raise GridMismatch(f"ell = {ell} is not a grid point of the factorization")
    ft = TruncatedFactorization(f, ell)
    g = ft.g_end
    tail = g.T @ g
    if ell >= h.ell:
        hs = h.split_at(ell) if ell > h.ell else h
    else:
        hs = h.split_at(ell)
    return hs.head(ell, tail), ft


def lemma72_split_norms(f):
    """L1 norm of |q1 - q2 + 2iq| off S = {tr Q - 2 <= 1} and its L2 norm on S."""
    x, w = f.quadrature_nodes()
    q = f.Q(x)
    mod = np.abs(q[..., 0, 0] - q[..., 1, 1] + 2j * q[..., 0, 1])
    s = mat2.tr2(q) - 2.0 <= 1.0
    return float(np.sum(w * mod * ~s)), float(np.sqrt(np.sum(w * mod ** 2 * s)))


def factorization_from_dict(d):
    """Arrays (grid, G, Q, V1, V2) from the JSON export."""
    try:
        grid = np.array(d["grid"], dtype=float)
        arrs = [np.array(d[k], dtype=float).reshape(-1, 2, 2) for k in ("G", "Q", "V1", "V2")]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed factorization JSON: {exc}") from exc
    if any(len(a) != len(grid) for a in arrs):
        raise ValueError("malformed factorization JSON: lengths differ")
    return (grid, *arrs)


def verify_sampled(h, grid, g, q, v1, v2):
    """Pointwise checks on sampled factors; G' = J V G by centred differences
    over neighbouring grid points that lie in one cell of H."""
    hv = h.value_at(grid)
    recon = mat2.transpose(g) @ q @ g
    scale = 1.0 + np.abs(hv).max(axis=(-2, -1))
    v = v1 + v2
    cell = h.cell_index(grid)
    dres = 0.0
    if len(grid) >= 3:
        same = (cell[:-2] == cell[2:]) & (cell[1:-1] == cell[:-2])
        dg = (g[2:] - g[:-2]) / (grid[2:] - grid[:-2])[:, None, None]
        res = np.abs(dg - mat2.J @ v[1:-1] @ g[1:-1]).max(axis=(-2, -1))
        res = res / (1.0 + np.abs(dg).max(axis=(-2, -1)))
        if np.any(same):
            dres = float(res[same].max())
    return {
        "residual": float((np.abs(hv - recon).max(axis=(-2, -1)) / scale).max()),
        "det_G": float(np.abs(mat2.det2(g) - 1.0).max()),
        "det_Q": float(np.abs(mat2.det2(q) - 1.0).max()),
        "min_eig_Q": float(mat2.eigvalsh2(mat2.sym(q))[..., 0].min()),
        "V_asymmetry": float(np.abs(v[..., 0, 1] - v[..., 1, 0]).max()),
        "dG_residual_fd": dres,
    }
