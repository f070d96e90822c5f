"""Poisson integrals of logarithmic integrands over the real line.

    P[f] = (1/pi) * integral f(x) / (1 + x^2) dx

f is vectorized and may grow like log|x| and oscillate (quasi-periodically)
at infinity.  The window [-X, X] is integrated with vectorized adaptive
Gauss-Kronrod (7/15) panels whose starting width resolves the oscillation
scale.  Beyond X/2 the integrand is blended, through a smooth partition of
unity, into the model f ~ A + B log|x| fitted with a smooth bump weight on
[X/4, X]; the model is integrated in closed form beyond X.  X doubles until
two successive estimates agree.
"""

import numpy as np

from .errors import QuadratureNotConverged

_XGK = np.array([0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                 0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                 0.207784955007898467600689403773245, 0.0])
_WGK = np.array([0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                 0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                 0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                0.381830050505118944950369775488975, 0.417959183673469387755102040816327])

ROUNDOFF = 1e3 * np.finfo(float).eps

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
# the 7 Gauss nodes are the odd-indexed Kronrod nodes
WG = np.zeros(15)
WG[1::2] = np.concatenate([_WG[:3], [_WG[3]], _WG[:3][::-1]])


def adaptive_gk(func, edges, tol_density=1e-12, max_depth=40):
    """Integrate func over the panels given by `edges`, bisecting until
    |K15 - G7| <= tol_density * width on every panel.

    Returns (integral, error_estimate, x, wx, fx) where x, wx, fx are the
    accepted nodes, their Kronrod weights and function values (sorted by x).
    """
    a = np.asarray(edges[:-1], dtype=float)
    b = np.asarray(edges[1:], dtype=float)
    acc_a, acc_x, acc_w, acc_f, acc_k, acc_e = [], [], [], [], [], []
    depth = 0
    while a.size:
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        x = mid[:, None] + half[:, None] * NODES[None, :]
        fx = np.asarray(func(x.ravel()), dtype=float).reshape(x.shape)
        k = half * (fx @ WK)
        g = half * (fx @ WG)
        err = np.abs(k - g)
        # rounding floor: K15 and G7 cannot agree better than the noise in f
        floor = ROUNDOFF * half * (np.abs(fx) @ WK)
        ok = (err <= np.maximum(tol_density * 2 * half, floor)) | (depth >= max_depth)
        ok |= half < 1e-13 * (1 + np.abs(mid))
        ok &= np.all(np.isfinite(fx), axis=1) | (depth >= max_depth)
        acc_a.append(a[ok])
        acc_x.append(x[ok])
        acc_w.append(half[ok, None] * WK[None, :])
        acc_f.append(fx[ok])
        acc_k.append(k[ok])
        acc_e.append(err[ok])
        a, b = a[~ok], b[~ok]
        if a.size:
            m = 0.5 * (a + b)
            a, b = np.concatenate([a, m]), np.concatenate([m, b])
        depth += 1
    order = np.argsort(np.concatenate(acc_a), kind="stable")
    kk = np.concatenate(acc_k)[order]
    ee = np.concatenate(acc_e)[order]
    xs = np.concatenate(acc_x)[order].ravel()
    ws = np.concatenate(acc_w)[order].ravel()
    fs = np.concatenate(acc_f)[order].ravel()
    return float(np.sum(kk)), float(np.sum(ee)), xs, ws, fs


def _tail_log_integral(x0, terms=40):
    """integral_{x0}^inf log(x)/(1 + x^2) dx for x0 >= 2."""
    lx = np.log(x0)
    q2 = 1.0 / (x0 * x0)
    qp = 1.0 / x0
    total = 0.0
    for k in range(terms):
        p = 2 * k + 1
        total += (-1) ** k * qp * (lx / p + 1.0 / (p * p))
        qp *= q2
    return total


def _g(s):
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)


def smooth_step(s):
    """C-infinity step: 1 for s <= 0, 0 for s >= 1."""
    s = np.clip(s, 0.0, 1.0)
    a, b = _g(1.0 - s), _g(s)
    return a / (a + b)


def bump(s):
    """C-infinity bump supported on (0, 1)."""
    inside = (s > 0) & (s < 1)
    ss = np.where(inside, s, 0.5)
    return np.where(inside, np.exp(-1.0 / (ss * (1.0 - ss))), 0.0)


def _side_sums(x, w, f, xmax):
    """Window part and tail model for one side (x > 0 given as |x|)."""
    inner = x <= 0.5 * xmax
    psi = np.where(inner, 1.0, smooth_step((x - 0.5 * xmax) / (0.5 * xmax)))
    psi = np.where(x >= xmax, 0.0, psi)
    weight = 1.0 / (1.0 + x * x)
    window = np.sum(w * f * psi * weight)
    # smooth-weighted fit f ~ A + B log x over (X/4, X)
    phi = w * bump((x - 0.25 * xmax) / (0.75 * xmax))
    lx = np.log(np.maximum(x, 1e-300))
    m = np.array([[np.sum(phi), np.sum(phi * lx)], [np.sum(phi * lx), np.sum(phi * lx * lx)]])
    rhs = np.array([np.sum(phi * f), np.sum(phi * f * lx)])
    try:
        a, b = np.linalg.solve(m, rhs)
    except np.linalg.LinAlgError:
        a, b = rhs[0] / m[0, 0], 0.0
    sel = (x > 0.5 * xmax) & (x < xmax)
    tail = np.sum(w[sel] * (a + b * lx[sel]) * (1.0 - psi[sel]) * weight[sel])
    tail += a * (0.5 * np.pi - np.arctan(xmax)) + b * _tail_log_integral(xmax)
    return window + tail


def poisson_log_integral(func, scale=1.0, tol=1e-7, x0=16.0, max_level=10, tol_density=1e-12,
                         max_depth=20):
    """(1/pi) * integral func(x)/(1+x^2) dx over R.

    `scale` is the oscillation frequency of func for large |x| (0 if none).
    The window [-X, X] is blended into the tail model with a smooth partition
    of unity, so mean-zero oscillations beyond X/2 contribute errors that
    decay faster than any power of X.
    Returns (value, error_estimate).  Raises QuadratureNotConverged when
    successive window doublings still differ by more than tol.
    """
    h0 = min(1.0, np.pi / max(scale, 1e-300))

    def panels(lo, hi):
        n = max(1, int(np.ceil((hi - lo) / h0)))
        return np.linspace(lo, hi, n + 1)

    _, _, xs, ws, fs = adaptive_gk(_weighted(func), panels(-x0, x0), tol_density, max_depth)
    xs_l, ws_l, fs_l = [xs], [ws], [fs]
    xmax = x0
    prev = None
    for level in range(max_level + 1):
        x_all = np.concatenate(xs_l)
        w_all = np.concatenate(ws_l)
        f_all = np.concatenate(fs_l) * (1.0 + x_all ** 2)
        pos = x_all >= 0
        est = (_side_sums(x_all[pos], w_all[pos], f_all[pos], xmax)
               + _side_sums(-x_all[~pos], w_all[~pos], f_all[~pos], xmax)) / np.pi
        if prev is not None and abs(est - prev) < tol:
            return est, abs(est - prev)
        if level == max_level:
            raise QuadratureNotConverged(est, prev)
        prev = est
        new = xmax * 2.0
        for lo, hi in ((xmax, new), (-new, -xmax)):
            _, _, x1, w1, f1 = adaptive_gk(_weighted(func), panels(lo, hi), tol_density, max_depth)
            xs_l.append(x1)
            ws_l.append(w1)
            fs_l.append(f1)
        xmax = new
    raise QuadratureNotConverged(prev, prev)  # pragma: no cover


def _weighted(func):
    def g(x):
        return func(x) / (1.0 + x * x)
    return g
