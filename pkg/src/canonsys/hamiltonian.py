"""Piecewise-constant Hamiltonians with a constant tail."""

import json
from dataclasses import dataclass

import numpy as np

from . import mat2
from .errors import (DegenerateCell, EtaUnreachable, GridMismatch,
                     NotPositiveDefinite, NotSL2, PreconditionError)

EDGE_TOL = 1e-12
TRIVIAL_TOL = 1e-12


class PiecewiseHamiltonian:
    """H(t) = cells[k] on [edges[k], edges[k+1]), H(t) = tail for t >= ell.

    Values are right-continuous. Arrays are read-only after construction.
    """

    def __init__(self, lengths, cells, tail):
        lengths = np.array(lengths, dtype=float).reshape(-1)
        cells = np.array(cells, dtype=float).reshape(-1, 2, 2)
        tail = np.array(tail, dtype=float).reshape(2, 2)
        if lengths.shape[0] != cells.shape[0]:
            raise PreconditionError("cells and lengths differ in number")
        for a in (lengths, cells, tail):
            a.setflags(write=False)
        self.lengths = lengths
        self.cells = cells
        self.tail = tail
        edges = np.concatenate([[0.0], np.cumsum(lengths)])
        edges.setflags(write=False)
        self.edges = edges

    @property
    def ell(self):
        return float(self.edges[-1])

    @property
    def n_cells(self):
        return len(self.lengths)

    def __repr__(self):
        return f"PiecewiseHamiltonian(n_cells={self.n_cells}, ell={self.ell:g})"

    def __eq__(self, other):
        if not isinstance(other, PiecewiseHamiltonian):
            return NotImplemented
        return (np.array_equal(self.lengths, other.lengths)
                and np.array_equal(self.cells, other.cells)
                and np.array_equal(self.tail, other.tail))

    def cell_index(self, t):
        """Index of the cell containing t; n_cells for the tail."""
        return np.searchsorted(self.edges, np.asarray(t, dtype=float), side="right") - 1

    def value_at(self, t):
        t = np.asarray(t, dtype=float)
        k = np.minimum(self.cell_index(t), self.n_cells)
        table = np.concatenate([self.cells, self.tail[None]], axis=0)
        return table[k]

    def matching_edge(self, r):
        """Index of the edge equal to r (within tolerance) or None."""
        k = int(np.argmin(np.abs(self.edges - r)))
        if abs(self.edges[k] - r) <= EDGE_TOL * (1.0 + abs(r)):
            return k
        return None

    def split_at(self, r):
        """Same Hamiltonian with an extra cell boundary at r (if r < ell)."""
        r = float(r)
        if r < 0:
            raise PreconditionError("split point must be nonnegative")
        if r >= self.ell or self.matching_edge(r) is not None:
            if r > self.ell and self.matching_edge(r) is None:
                # split the tail into a cell plus the same tail
                return PiecewiseHamiltonian(np.append(self.lengths, r - self.ell),
                                            np.concatenate([self.cells, self.tail[None]]),
                                            self.tail)
            return self
        k = int(self.cell_index(r))
        a, b = self.edges[k], self.edges[k + 1]
        lengths = np.concatenate([self.lengths[:k], [r - a, b - r], self.lengths[k + 1:]])
        cells = np.concatenate([self.cells[:k], self.cells[k:k + 1], self.cells[k:]])
        return PiecewiseHamiltonian(lengths, cells, self.tail)

    def shifted(self, r):
        """H_r(t) = H(t + r); r must be a cell boundary or >= ell."""
        if r >= self.ell:
            return PiecewiseHamiltonian([], np.zeros((0, 2, 2)), self.tail)
        k = self.matching_edge(r)
        if k is None:
            raise GridMismatch(f"r = {r} is not a cell boundary")
        return PiecewiseHamiltonian(self.lengths[k:], self.cells[k:], self.tail)

    def head(self, r, tail):
        """H on [0, r) followed by the constant `tail`; r a cell boundary."""
        if r > self.ell and self.matching_edge(r) is None:
            return self.split_at(r).head(r, tail)
        k = self.matching_edge(r)
        if k is None:
            raise GridMismatch(f"r = {r} is not a cell boundary")
        return PiecewiseHamiltonian(self.lengths[:k], self.cells[:k], tail)

    def integral(self, a, b):
        """Exact integral of H over [a, b] assembled from cell pieces."""
        if b <= a:
            return np.zeros((2, 2))
        e = self.edges
        lo = max(int(self.cell_index(a)), 0)
        total = np.zeros((2, 2))
        k = lo
        while k < self.n_cells and e[k] < b:
            s = min(b, e[k + 1]) - max(a, e[k])
            if s > 0:
                total = total + s * self.cells[k]
            k += 1
        if b > self.ell:
            total = total + (b - max(a, self.ell)) * self.tail
        return total

    def to_dict(self):
        cells = [{"len": float(n), "h": [[float(x) for x in row] for row in h]}
                 for n, h in zip(self.lengths, self.cells)]
        return {"cells": cells, "tail": {"h": [[float(x) for x in row] for row in self.tail]}}

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        try:
            cells = d["cells"]
            lengths = [float(c["len"]) for c in cells]
            hs = [np.array(c["h"], dtype=float) for c in cells]
            tail = np.array(d["tail"]["h"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed Hamiltonian JSON: {exc}") from exc
        if any(h.shape != (2, 2) for h in hs) or tail.shape != (2, 2):
            raise ValueError("malformed Hamiltonian JSON: matrices must be 2x2")
        return cls(lengths, np.array(hs).reshape(-1, 2, 2), tail)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    @classmethod
    def constant(cls, a):
        return cls([], np.zeros((0, 2, 2)), a)


@dataclass(frozen=True)
class Classification:
    kind: str  # "valid-nontrivial-singular" | "trivial" | "invalid"
    reason: str = ""

    @property
    def ok(self):
        return self.kind == "valid-nontrivial-singular"


def _rank_one_vec(a):
    return np.array([a[0, 0], a[0, 1], a[1, 1]])


def validate(h):
    for k, n in enumerate(h.lengths):
        if not np.isfinite(n) or n <= 0:
            return Classification("invalid", f"cell {k} has nonpositive length")
    for k, c in enumerate(h.cells):
        if not np.all(np.isfinite(c)):
            return Classification("invalid", f"cell {k} not finite")
        if not mat2.is_psd(c):
            return Classification("invalid", f"cell {k} not PSD")
        if mat2.tr2(c) <= 0:
            return Classification("invalid", f"cell {k} has zero trace")
    if not np.all(np.isfinite(h.tail)) or not mat2.is_psd(h.tail):
        return Classification("invalid", "tail not PSD")
    if mat2.tr2(h.tail) <= 0:
        return Classification("invalid", "tail has zero trace")
    mats = list(h.cells) + [h.tail]
    scale = [mat2.tr2(m) for m in mats]
    rank_one = all(abs(mat2.det2(m)) <= TRIVIAL_TOL * s * s for m, s in zip(mats, scale))
    if rank_one:
        v0 = _rank_one_vec(h.tail)
        if all(np.linalg.norm(np.cross(v0, _rank_one_vec(m))) <= TRIVIAL_TOL * s * scale[-1]
               for m, s in zip(mats, scale)):
            return Classification("trivial", "all cells proportional to one rank-1 matrix")
    return Classification("valid-nontrivial-singular")


def require_valid(h):
    c = validate(h)
    if c.kind == "invalid":
        raise NotPositiveDefinite(c.reason)
    return c


class XiProfile:
    """xi(t) = integral of sqrt(det H), piecewise linear."""

    def __init__(self, h):
        self.breakpoints = h.edges
        self.slopes = np.sqrt(np.maximum(mat2.det2(h.cells), 0.0))
        self.tail_slope = float(np.sqrt(max(mat2.det2(h.tail), 0.0)))
        self.values = np.concatenate([[0.0], np.cumsum(self.slopes * h.lengths)])
        self.ell = h.ell

    def xi(self, t):
        t = np.asarray(t, dtype=float)
        e = self.breakpoints
        k = np.clip(np.searchsorted(e, t, side="right") - 1, 0, len(e) - 1)
        base = self.values[k]
        slope = np.append(self.slopes, self.tail_slope)[k]
        return base + slope * (t - e[k])

    @property
    def xi_ell(self):
        return float(self.values[-1])

    def eta(self, n):
        """Leftmost t with xi(t) = n."""
        if n <= 0:
            return 0.0
        x = self.values
        j = int(np.searchsorted(x, n, side="left"))
        if j < len(x):
            if x[j] == n:
                return float(self.breakpoints[j])
            k = j - 1
            return float(self.breakpoints[k] + (n - x[k]) / self.slopes[k])
        if self.tail_slope <= 0:
            raise EtaUnreachable(n, self.xi_ell)
        return float(self.ell + (n - x[-1]) / self.tail_slope)


def xi_eta(h):
    return XiProfile(h)


def conjugate_sl2(h, a, tol=1e-10):
    a = np.asarray(a, dtype=float)
    if not mat2.is_sl2(a, tol):
        raise NotSL2(f"det A = {mat2.det2(a)!r}")
    at = a.T
    return PiecewiseHamiltonian(h.lengths, at @ h.cells @ a, at @ h.tail @ a)


def dual(h):
    """H_d = J^T H J."""
    return conjugate_sl2(h, mat2.J)


def renormalize_det1(h, tol=1e-14):
    d = mat2.det2(h.cells)
    dt = mat2.det2(h.tail)
    if np.any(d <= tol) or dt <= tol:
        raise DegenerateCell("renormalization needs det H > 0 on every cell and the tail")
    s = np.sqrt(d)
    return PiecewiseHamiltonian(h.lengths * s, h.cells / s[:, None, None], h.tail / np.sqrt(dt))


def tail_from_weyl(i_val, r_val):
    """Constant det-1 matrix whose Weyl value at i is R + iI."""
    return np.array([[1.0 / i_val, r_val / i_val],
                     [r_val / i_val, (i_val * i_val + r_val * r_val) / i_val]])


def bernstein_szego(h, r):
    """H on [0, r) followed by the constant matrix encoding m_r(i)."""
    from .solver import weyl_at_r
    if r < h.ell and h.matching_edge(r) is None:
        raise GridMismatch(f"r = {r} is not a cell boundary")
    m = weyl_at_r(h, r, 1j)
    return h.head(r, tail_from_weyl(m.imag, m.real))
