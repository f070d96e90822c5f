"""Figures for the report command (files only, Agg backend)."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "figure.figsize": (6.0, 3.8),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "savefig.dpi": 130,
    "savefig.bbox": "tight",
}


def _save(fig, path):
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_density(x, w, path, w_krein=None):
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.semilogy(x, w, lw=1.2, label="solver")
        if w_krein is not None:
            ax.semilogy(x, w_krein, "--", lw=1.0, label=r"$|P^*_{2\ell}(x)|^{-2}$")
            ax.legend()
        ax.set_xlabel("x")
        ax.set_ylabel("w(x)")
        ax.set_title("spectral density")
        return _save(fig, path)


def plot_profile(r, k, path):
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.step(r, k, where="post", lw=1.2, marker=".", ms=3)
        ax.set_xlabel("r")
        ax.set_ylabel(r"$K_H(r)$")
        ax.set_title("entropy profile")
        return _save(fig, path)


def plot_ktilde_terms(n, terms, path):
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.bar(n, terms, width=0.8)
        ax.set_xlabel("n")
        ax.set_ylabel(r"det$\int_{\eta_n}^{\eta_{n+2}} H$ - 4")
        ax.set_title(r"terms of $\widetilde{K}(H)$")
        return _save(fig, path)


def plot_factorization(grid, q_trace, v1_norm, v2_norm, path):
    with plt.rc_context(RC):
        fig, axes = plt.subplots(2, 1, sharex=True, figsize=(6.0, 5.0))
        axes[0].plot(grid, q_trace, lw=1.0)
        axes[0].set_ylabel("tr Q - 2")
        axes[1].plot(grid, v1_norm, lw=1.0, label=r"$\|V_1\|$")
        axes[1].plot(grid, v2_norm, lw=1.0, label=r"$\|V_2\|$")
        axes[1].set_ylabel("potential")
        axes[1].set_xlabel("t")
        axes[1].legend()
        return _save(fig, path)


def plot_krein(r, p_abs, pd_abs, path):
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.plot(r, p_abs, lw=1.2, label=r"$|P^*_{2r}(i)|$")
        ax.plot(r, pd_abs, lw=1.2, label=r"$|P^*_{2r,d}(i)|$")
        ax.plot(r, np.asarray(p_abs) * np.asarray(pd_abs), "k:", lw=1.0, label="product")
        ax.set_xlabel("r")
        ax.legend()
        ax.set_title("Krein system at z = i")
        return _save(fig, path)


def plot_log_integrand(theta, logw, path):
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.plot(theta, logw, lw=1.0)
        ax.set_xlabel(r"$\theta$, $x = \tan\theta$")
        ax.set_ylabel(r"$\log w(\tan\theta)$")
        return _save(fig, path)
