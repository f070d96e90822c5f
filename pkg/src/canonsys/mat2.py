"""Closed-form 2x2 matrix algebra.

Matrices are numpy arrays of shape (..., 2, 2); every function broadcasts
over the leading axes so that grids of spectral parameters or times are
handled in one call.
"""

import numpy as np

from .errors import NonTraceFree, NotPositiveDefinite, PoleHit

J = np.array([[0.0, -1.0], [1.0, 0.0]])
I2 = np.eye(2)

RHO_SERIES = 1e-4
PSD_TOL = 1e-12


def det2(a):
    a = np.asarray(a)
    return a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]


def tr2(a):
    a = np.asarray(a)
    return a[..., 0, 0] + a[..., 1, 1]


def mat(a11, a12, a21, a22):
    """Stack entry arrays into (..., 2, 2)."""
    a11, a12, a21, a22 = np.broadcast_arrays(a11, a12, a21, a22)
    out = np.empty(a11.shape + (2, 2), dtype=np.result_type(a11, a12, a21, a22))
    out[..., 0, 0] = a11
    out[..., 0, 1] = a12
    out[..., 1, 0] = a21
    out[..., 1, 1] = a22
    return out


def adj2(a):
    """Adjugate, so that a @ adj2(a) = det(a) I."""
    a = np.asarray(a)
    return mat(a[..., 1, 1], -a[..., 0, 1], -a[..., 1, 0], a[..., 0, 0])


def inv2(a):
    a = np.asarray(a)
    d = det2(a)
    return adj2(a) / d[..., None, None]


def transpose(a):
    return np.swapaxes(np.asarray(a), -1, -2)


def sym(a):
    a = np.asarray(a)
    return 0.5 * (a + transpose(a))


def fro2(a):
    return np.sum(np.abs(np.asarray(a)) ** 2, axis=(-2, -1))


def opnorm(a):
    """Largest singular value via the closed-form 2x2 SVD."""
    a = np.asarray(a)
    if not np.iscomplexobj(a):
        # sum of two norms; no cancellation when the singular values are close
        p = np.hypot(a[..., 0, 0] + a[..., 1, 1], a[..., 0, 1] - a[..., 1, 0])
        m = np.hypot(a[..., 0, 0] - a[..., 1, 1], a[..., 0, 1] + a[..., 1, 0])
        return 0.5 * (p + m)
    f = fro2(a)
    d = np.abs(det2(a))
    disc = np.sqrt(np.maximum(f * f - 4.0 * d * d, 0.0))
    return np.sqrt(0.5 * (f + disc))


def eigvalsh2(a):
    """Eigenvalues (ascending) of a real symmetric 2x2 matrix."""
    a = np.asarray(a)
    m = 0.5 * (a[..., 0, 0] + a[..., 1, 1])
    h = 0.5 * (a[..., 0, 0] - a[..., 1, 1])
    r = np.hypot(h, 0.5 * (a[..., 0, 1] + a[..., 1, 0]))
    return np.stack([m - r, m + r], axis=-1)


def is_symmetric(a, tol=1e-12):
    a = np.asarray(a)
    scale = 1.0 + np.abs(a).max(axis=(-2, -1))
    return np.abs(a[..., 0, 1] - a[..., 1, 0]) <= tol * scale


def is_psd(a, tol=PSD_TOL):
    a = np.asarray(a)
    lo = eigvalsh2(a)[..., 0]
    return is_symmetric(a) & (lo >= -tol * (1.0 + np.abs(tr2(a))))


def is_sl2(a, tol=1e-10):
    return np.abs(det2(a) - 1.0) <= tol


def _cosh_sinhc(s):
    """cosh(rho) and sinh(rho)/rho as functions of s = rho**2."""
    s = np.asarray(s, dtype=complex)
    rho = np.sqrt(s)
    small = np.abs(rho) < RHO_SERIES
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        c = np.cosh(rho)
        sc = np.where(small, 1.0, np.sinh(rho) / np.where(small, 1.0, rho))
    if np.any(small):
        ss = np.where(small, s, 0.0)
        # six terms of each series
        c_ser = np.zeros_like(ss)
        sc_ser = np.zeros_like(ss)
        term_c = np.ones_like(ss)
        term_s = np.ones_like(ss)
        for k in range(6):
            c_ser = c_ser + term_c
            sc_ser = sc_ser + term_s
            term_c = term_c * ss / ((2 * k + 1) * (2 * k + 2))
            term_s = term_s * ss / ((2 * k + 2) * (2 * k + 3))
        c = np.where(small, c_ser, c)
        sc = np.where(small, sc_ser, sc)
    return c, sc


def expm_tracefree(a, tol=1e-10):
    """exp(A) = cosh(rho) I + sinh(rho)/rho A, rho^2 = -det A, for trace A = 0."""
    a = np.asarray(a, dtype=complex)
    t = tr2(a)
    if np.any(np.abs(t) > tol * (1.0 + opnorm(a))):
        raise NonTraceFree(f"trace {np.max(np.abs(t)):.3e} is not zero")
    c, sc = _cosh_sinhc(-det2(a))
    return c[..., None, None] * I2 + sc[..., None, None] * a


def expm2(a):
    """General 2x2 exponential by splitting off the trace."""
    a = np.asarray(a, dtype=complex)
    half = 0.5 * tr2(a)
    e = expm_tracefree(a - half[..., None, None] * I2)
    return np.exp(half)[..., None, None] * e


def cholesky_upper(a, tol=1e-14):
    """Upper triangular L with positive diagonal and L^T L = A."""
    a = np.asarray(a, dtype=float)
    a1, b, a2 = a[..., 0, 0], 0.5 * (a[..., 0, 1] + a[..., 1, 0]), a[..., 1, 1]
    d = a1 * a2 - b * b
    if np.any(a1 <= tol) or np.any(d <= tol * (1.0 + np.abs(a1 + a2)) ** 2):
        raise NotPositiveDefinite("matrix is not positive definite")
    s1 = np.sqrt(a1)
    return mat(s1, b / s1, np.zeros_like(s1), np.sqrt(d / a1))


def sqrtm_psd(a):
    """Principal square root of a symmetric PSD 2x2 matrix."""
    a = np.asarray(a, dtype=float)
    sd = np.sqrt(np.maximum(det2(a), 0.0))
    den = np.sqrt(tr2(a) + 2.0 * sd)
    return (a + sd[..., None, None] * I2) / den[..., None, None]


def mobius(a, z, tol=1e-300):
    """(a z + b) / (c z + d) for A = ((a, b), (c, d))."""
    a = np.asarray(a)
    num = a[..., 0, 0] * z + a[..., 0, 1]
    den = a[..., 1, 0] * z + a[..., 1, 1]
    if np.any(np.abs(den) <= tol):
        raise PoleHit("denominator of the Mobius map vanishes")
    return num / den


def rotation(phi):
    c, s = np.cos(phi), np.sin(phi)
    return mat(c, s, -s, c)


def random_sl2(rng, size=None, bound=2.0, amin=1e-2):
    """A = ((a, b), (c, (1 + b c)/a)) with a, b, c uniform in [-bound, bound]."""
    shape = () if size is None else (size,)
    a = rng.uniform(-bound, bound, shape)
    a = np.where(np.abs(a) < amin, np.copysign(amin, a + 0.0), a)
    b = rng.uniform(-bound, bound, shape)
    c = rng.uniform(-bound, bound, shape)
    return mat(a, b, c, (1.0 + b * c) / a)


def random_psd(rng, size=None, scale=1.0, rank_one_fraction=0.0):
    """Random symmetric PSD matrices B B^T; a fraction is made rank one."""
    shape = () if size is None else (size,)
    b = rng.normal(size=shape + (2, 2)) * np.sqrt(scale)
    if rank_one_fraction:
        r1 = rng.uniform(size=shape) < rank_one_fraction
        b[..., :, 1] = np.where(r1[..., None], 0.0, b[..., :, 1])
    return b @ transpose(b)


def random_det1(rng, size=None, lo=0.25, hi=4.0):
    """Random symmetric det-1 matrices with all diagonal entries in [lo, hi]."""
    shape = () if size is None else (size,)
    h1 = rng.uniform(lo, hi, shape)
    # h2 = (1 + h^2)/h1 must stay in [lo, hi]
    hmax = np.sqrt(np.maximum(hi * h1 - 1.0, 0.0))
    hmin2 = np.maximum(lo * h1 - 1.0, 0.0)
    mag = np.sqrt(rng.uniform(hmin2, hmax ** 2))
    h = mag * rng.choice([-1.0, 1.0], shape)
    return mat(h1, h, h, (1.0 + h * h) / h1)


def check_det_lemmas(pairs, slack=1e-10):
    """Appendix determinant inequalities on PSD pairs (A, B).

    Returns a dict name -> number of violations beyond `slack` (scaled by
    the size of the quantities compared).
    """
    a = np.asarray([p[0] for p in pairs], dtype=float)
    b = np.asarray([p[1] for p in pairs], dtype=float)
    da, db, ds = det2(a), det2(b), det2(a + b)
    da, db = np.maximum(da, 0.0), np.maximum(db, 0.0)
    scale = 1.0 + np.abs(ds)
    out = {
        "minkowski": int(np.sum(ds - (np.sqrt(da) + np.sqrt(db)) ** 2 < -slack * scale)),
        "superadditive": int(np.sum(ds - da - db < -slack * scale)),
        "geometric_mean": int(np.sum(det2(0.5 * (a + b)) - np.sqrt(da * db) < -slack * scale)),
        # A <= A + B
        "monotone": int(np.sum(ds - da < -slack * scale)),
    }
    return out


def sl2_identity_residuals(a):
    """Residuals of A^T J A = J, A^{-1} = -J A^T J and J A J^T = (A^T)^{-1}."""
    a = np.asarray(a, dtype=float)
    at = transpose(a)
    r1 = np.abs(at @ J @ a - J).max(axis=(-2, -1))
    r2 = np.abs(inv2(a) + J @ at @ J).max(axis=(-2, -1))
    r3 = np.abs(J @ a @ J.T - inv2(at)).max(axis=(-2, -1))
    return r1, r2, r3
