"""The generalized Krein system for (P*_{2r}(z), P_{2r}(z)).

With f0 = z q - v + i(v11 - v22)/2 - i z (q11 - q22)/2 and g = tr Q/2 - 1,

    d/dr P*_{2r} = e^{2iu} f0(r, z) P_{2r} - i z g P*_{2r}
    d/dr P_{2r}  = i z (2 + g) P_{2r} + e^{-2iu} conj(f0(r, conj z)) P*_{2r}

where u = -1/2 int trace V.  The system is integrated for the gauged pair
Y = (e^{-iu} P*, e^{iu} P), whose generator

    A(r, z) = ((-i u' - i z g, f0), (conj f0(conj z), i u' + i z (2 + g)))

has trace 2iz.  On pieces with constant Q and V the step is the exact
exponential; elsewhere a sixth-order Magnus step with step-doubling error
control is used.
"""

from dataclasses import dataclass

import numpy as np

from . import mat2
from .errors import StepUnderflow
from .quadrature import poisson_log_integral
from .solver import transfer

MIN_STEP = 1e-9
GAUSS3 = np.array([0.5 - np.sqrt(15) / 10, 0.5, 0.5 + np.sqrt(15) / 10])
GAUSS3_W = np.array([5.0, 8.0, 5.0]) / 18.0
# nodes of one full step followed by those of its two halves
STEP_NODES = np.concatenate([GAUSS3, 0.5 * GAUSS3, 0.5 + 0.5 * GAUSS3])


@dataclass
class KreinCoefficients:
    """f0, g and u' of a factorization, evaluated from its piece formulas."""

    factorization: object

    def _parts(self, q, v):
        qq = q[..., 0, 1]
        vv = 0.5 * (v[..., 0, 1] + v[..., 1, 0])
        dq = q[..., 0, 0] - q[..., 1, 1]
        dv = v[..., 0, 0] - v[..., 1, 1]
        return qq, vv, dq, dv

    def at(self, r, k=None):
        """(q, v, dq, dv, g, u') at times r; k forces the piece formula."""
        f = self.factorization
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if k is None:
            _, q, v1, v2 = f.evaluate(r)
        else:
            _, q, v1, v2 = f._piece(k, r)
        v = v1 + v2
        qq, vv, dq, dv = self._parts(q, v)
        g = 0.5 * mat2.tr2(q) - 1.0
        du = -0.5 * mat2.tr2(v)
        return qq, vv, dq, dv, g, du

    def f0(self, r, z):
        qq, vv, dq, dv, _, _ = self.at(r)
        z = np.asarray(z, dtype=complex)
        return z * qq - vv + 0.5j * dv - 0.5j * z * dq

    def g(self, r):
        return self.at(r)[4]

    def u(self, r):
        return -0.5 * self.factorization.trace_v_integral(r)

    def f(self, r, z):
        """The coefficient multiplying P in the equation for P*: e^{2iu} f0."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        u = np.array([self.u(t) for t in r])
        return np.exp(2j * u) * self.f0(r, z)

    def generator(self, r, z, k=None):
        """A(r, z) of the gauged system, shape r.shape + z.shape + (2, 2)."""
        return self.generator_du(r, z, k)[0]

    def generator_du(self, r, z, k=None):
        """(A(r, z), u'(r))."""
        qq, vv, dq, dv, g, du = self.at(r, k)
        du_r = du
        z = np.asarray(z, dtype=complex)
        ex = (Ellipsis,) + (None,) * z.ndim
        qq, vv, dq, dv, g, du = (a[ex] for a in (qq, vv, dq, dv, g, du))
        f0 = z * qq - vv + 0.5j * dv - 0.5j * z * dq
        f0c = np.conj(np.conj(z) * qq - vv + 0.5j * dv - 0.5j * np.conj(z) * dq)
        a11 = -1j * du - 1j * z * g
        a22 = 1j * du + 1j * z * (2.0 + g)
        return mat2.mat(a11, f0, f0c, a22), du_r


def krein_coefficients(f):
    return KreinCoefficients(f)


@dataclass
class KreinPath:
    r: np.ndarray          # recorded times
    z: np.ndarray
    pstar: np.ndarray      # (len(r),) + z.shape
    p: np.ndarray
    u: np.ndarray
    gronwall: np.ndarray   # bound exp(1/2 int lambda_max) * |init| at each r
    gronwall_ok: bool

    def at_end(self):
        return self.pstar[-1], self.p[-1]


def _expm_gen(a, h):
    """exp(h A) for generators with trace 2iz (any trace works)."""
    half_tr = 0.5 * (a[..., 0, 0] + a[..., 1, 1])
    b = h * (a - half_tr[..., None, None] * np.eye(2))
    return np.exp(h * half_tr)[..., None, None] * mat2.expm_tracefree(b, tol=1e-6)


def _lam_max_herm(a):
    """Largest eigenvalue of A + A^*."""
    b11 = 2.0 * a[..., 0, 0].real
    b22 = 2.0 * a[..., 1, 1].real
    b12 = a[..., 0, 1] + np.conj(a[..., 1, 0])
    return 0.5 * (b11 + b22 + np.sqrt((b11 - b22) ** 2 + 4.0 * np.abs(b12) ** 2))


def _comm(a, b):
    return a @ b - b @ a


def _magnus6(a, h):
    """Sixth-order Magnus propagator from A at the three Gauss nodes."""
    a1, a2, a3 = a[0], a[1], a[2]
    b1 = h * a2
    b2 = (np.sqrt(15) * h / 3.0) * (a3 - a1)
    b3 = (10.0 * h / 3.0) * (a3 - 2.0 * a2 + a1)
    c1 = _comm(b1, b2)
    c2 = -_comm(b1, 2.0 * b3 + c1) / 60.0
    omega = b1 + b3 / 12.0 + _comm(-20.0 * b1 - b3 + c1, b2 + c2) / 240.0
    return _expm_gen(omega, 1.0)


def _attempt(coef, k, r, h, z):
    """Full step and two half steps from one batch of coefficient values."""
    a, du = coef.generator_du(r + h * STEP_NODES, z, k)
    lam = _lam_max_herm(a)
    full = _magnus6(a[0:3], h)
    halves = _magnus6(a[6:9], 0.5 * h) @ _magnus6(a[3:6], 0.5 * h)
    w = 0.5 * h * np.concatenate([GAUSS3_W, GAUSS3_W])
    du_int = float(np.sum(w * du[3:]))
    lam_int = 0.5 * np.tensordot(w, lam[3:], axes=1)
    return full, halves, du_int, lam_int


def _norm(y):
    return np.sqrt(np.abs(y[..., 0]) ** 2 + np.abs(y[..., 1]) ** 2)


def propagate_krein(coef, z, r_max, init=None, r_eval=None, rtol=1e-10, h0=1.0 / 16):
    """Integrate the Krein system from 0 to r_max for all z at once.

    init defaults to (g11 + i g21, g11 - i g21) with (g11, g21) the first
    column of G(0).  Values are recorded at piece edges and at r_eval.
    """
    f = coef.factorization
    z = np.asarray(z, dtype=complex)
    r_max = float(r_max)
    if init is None:
        g0 = f.G(0.0)[0]
        init = (g0[0, 0] + 1j * g0[1, 0], g0[0, 0] - 1j * g0[1, 0])
    y = np.empty(z.shape + (2,), dtype=complex)
    y[..., 0] = init[0]
    y[..., 1] = init[1]
    y0n = _norm(y)
    stops = [0.0, r_max] + [e for e in f.edges if 0 < e < r_max]
    if r_eval is not None:
        stops += [float(t) for t in np.atleast_1d(r_eval) if 0 < t < r_max]
    stops = np.unique(stops)
    rec_r, rec_y, rec_u, rec_b = [0.0], [y.copy()], [0.0], [y0n.copy()]
    u = 0.0
    lam_int = np.zeros(z.shape)
    ok = True
    n_pieces = len(f.edges) - 1
    for a, b in zip(stops[:-1], stops[1:]):
        k = int(f.piece_index(0.5 * (a + b)))
        if k >= n_pieces:
            k = None
        constant = k is None or f.constant_on_piece(k)
        if constant:
            gen = coef.generator(np.array([0.5 * (a + b)]), z, k)[0]
            y = np.einsum("...ij,...j->...i", _expm_gen(gen, b - a), y)
            u += (b - a) * coef.at(np.array([0.5 * (a + b)]), k)[5][0]
            lam_int = lam_int + 0.5 * (b - a) * _lam_max_herm(gen)
        else:
            r, h = a, min(h0, b - a)
            while r < b - 1e-15 * (1 + abs(b)):
                h = min(h, b - r)
                p1, p2, du_step, lam_step = _attempt(coef, k, r, h, z)
                y1 = np.einsum("...ij,...j->...i", p1, y)
                y2 = np.einsum("...ij,...j->...i", p2, y)
                err = np.max(_norm(y1 - y2) / np.maximum(_norm(y2), 1e-300))
                tol = rtol * h
                if err <= tol or h <= MIN_STEP:
                    if err > tol:
                        raise StepUnderflow(f"step below {MIN_STEP} at r = {r}")
                    y = y2 + (y2 - y1) / 63.0
                    u += du_step
                    lam_int = lam_int + lam_step
                    r += h
                    h = h * min(3.0, 0.9 * (tol / max(err, 1e-300)) ** (1.0 / 7.0))
                else:
                    h = max(h * max(0.2, 0.9 * (tol / err) ** (1.0 / 7.0)), 0.5 * MIN_STEP)
        bound = y0n * np.exp(lam_int)
        if np.any(_norm(y) > bound * (1.0 + 1e-8) + 1e-300):
            ok = False
        rec_r.append(b)
        rec_y.append(y.copy())
        rec_u.append(u)
        rec_b.append(bound)
    rec_y = np.array(rec_y)
    rec_u = np.array(rec_u)
    ph = np.exp(1j * rec_u)[(Ellipsis,) + (None,) * z.ndim]
    return KreinPath(np.array(rec_r), z, ph * rec_y[..., 0], np.conj(ph) * rec_y[..., 1],
                     rec_u, np.array(rec_b), ok)


def theta_tilde(h, f, r, z):
    """G(r) Theta(r, z), Theta the first column of the transfer matrix."""
    m = transfer(h, r, z)
    th = m[..., :, 0]
    g = f.G(r)[0]
    return np.einsum("ij,...j->...i", g, th)


def pstar_via_theta(h, f, r, z):
    """e^{irz + iu(r)} (Theta~+ + i Theta~-)."""
    z = np.asarray(z, dtype=complex)
    tt = theta_tilde(h, f, r, z)
    u = -0.5 * f.trace_v_integral(r)
    return np.exp(1j * r * z + 1j * u) * (tt[..., 0] + 1j * tt[..., 1])


def outer_pstar(h, f, r):
    """z -> e^{i xi(r) z + iu(r)} (Theta~+ + i Theta~-)(r, z).

    Equal to P*_{2r} when det H = 1 (then xi(r) = r).  When det H vanishes
    on a set of positive length, e^{irz} carries an inner factor
    e^{i(r - xi(r))z}, and this is the outer part.
    """
    from .hamiltonian import XiProfile
    xi = float(XiProfile(h).xi(r))
    u = -0.5 * f.trace_v_integral(r)

    def func(z):
        z = np.asarray(z, dtype=complex)
        tt = theta_tilde(h, f, r, z)
        return np.exp(1j * xi * z + 1j * u) * (tt[..., 0] + 1j * tt[..., 1])
    return func


def theta_tilde_residual(h, f, t, z, step=1e-5):
    """|J Theta~' + V Theta~ - z Q Theta~| at interior points t (centred differences)."""
    k = int(f.piece_index(t))

    def tt(s):
        th = transfer(h, s, z)[..., :, 0]
        return np.einsum("ij,...j->...i", f._piece(k, np.array([s]))[0][0], th)

    d = (tt(t + step) - tt(t - step)) / (2 * step)
    _, q, v1, v2 = f._piece(k, np.array([t]))
    x = tt(t)
    res = mat2.J @ d + (v1[0] + v2[0]) @ x - z * q[0] @ x
    return float(np.max(np.abs(res)) / (1.0 + np.max(np.abs(x))))


def density_via_pstar(f, ell, x, coef=None):
    """w(x) = |P*_{2 ell}(x)|^{-2} for the truncation at ell."""
    from .factorization import TruncatedFactorization
    ft = f if isinstance(f, TruncatedFactorization) and f.ell == ell else TruncatedFactorization(f, ell)
    coef = KreinCoefficients(ft) if coef is None else coef
    path = propagate_krein(coef, np.asarray(x, dtype=float), ell)
    ps = path.pstar[-1]
    if np.min(np.abs(ps)) <= 1e-12:
        raise ArithmeticError("P* vanished on the real grid")
    return 1.0 / np.abs(ps) ** 2


def outer_check(pstar_func, value_at_i, scale=1.0, tol=1e-8):
    """|(1/pi) int log|P*(x)|^2/(1+x^2) dx - log|P*(i)|^2|."""
    def logmod(x):
        return np.log(np.abs(pstar_func(x)) ** 2)
    val, _ = poisson_log_integral(logmod, scale=scale, tol=tol)
    return float(abs(val - 2.0 * np.log(abs(value_at_i))))


def l44_bounds_audit(f, grid=None):
    """sup_r |P*_{2r}(i)|, |P*_{2r,d}(i)| and |P* P*_d| with the norms of f."""
    if grid is None:
        grid = np.linspace(0.0, f.extent, 65)[1:]
    grid = np.asarray(grid, dtype=float)
    fd = f.dual()
    pa = propagate_krein(KreinCoefficients(f), 1j, f.extent, r_eval=grid)
    pd = propagate_krein(KreinCoefficients(fd), 1j, f.extent, r_eval=grid)
    a = float(f.G(0.0)[0][0, 0])
    prod = np.abs(pa.pstar * pd.pstar)
    return {
        "a": a,
        "sup_pstar": float(np.abs(pa.pstar).max()),
        "sup_pstar_dual": float(np.abs(pd.pstar).max()),
        "sup_product": float(prod.max()),
        "final_product": float(prod[-1]),
        "norms": f.norms(),
        "gronwall_ok": bool(pa.gronwall_ok and pd.gronwall_ok),
    }
