"""Masked rectangular grids, finite-difference stencils, and discrete jets.

The solver reads second-order data off a uniform lattice: value r at the
node, centered gradient p, and a Hessian A assembled from directional second
differences (axis + diagonal directions), or from a least-squares quadratic
fit for the wide stencil.  The center value enters A affinely, which the
node update exploits: jets along the bisection line are base + r * slope.

Dimensions 1, 2 and 3 are supported ("9pt" in 3-d means axes plus face
diagonals; any stencil name degrades to the 3-point stencil in 1-d).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError, GeometryError
from .linalg import SymMatrix
from .core import Jet, Subequation


def stencil_offsets(name: str, n: int) -> np.ndarray:
    if n == 1:
        return np.array([[1], [-1]], dtype=int)
    axes = []
    for i in range(n):
        e = np.zeros(n, dtype=int)
        e[i] = 1
        axes += [e.copy(), -e]
    diags = []
    for i, j in itertools.combinations(range(n), 2):
        for si, sj in ((1, 1), (-1, -1), (1, -1), (-1, 1)):
            d = np.zeros(n, dtype=int)
            d[i], d[j] = si, sj
            diags.append(d)
    if name == "5pt":
        out = axes
    elif name == "9pt":
        out = axes + diags
    elif name == "wide16":
        if n != 2:
            raise ConfigError("wide16 stencil is 2-d only")
        knights = [np.array(d) for d in
                   ((2, 1), (1, 2), (-1, 2), (-2, 1),
                    (-2, -1), (-1, -2), (1, -2), (2, -1))]
        out = axes + diags + knights
    else:
        raise ConfigError(f"unknown stencil {name!r}")
    return np.array(out, dtype=int)


def _quad_columns(d: np.ndarray, n: int) -> np.ndarray:
    """Row of the quadratic model for displacement d: [d, d_i^2/2, d_i d_j]."""
    cols = list(d)
    cols += [0.5 * d[i] * d[i] for i in range(n)]
    cols += [d[i] * d[j] for i, j in itertools.combinations(range(n), 2)]
    return np.array(cols, dtype=float)


class JetAssembler:
    """Maps frozen neighbor values (+ center r) to (p, A) batches."""

    def __init__(self, stencil: str, n: int, h: float):
        self.name = stencil
        self.n = n
        self.h = float(h)
        self.offsets = stencil_offsets(stencil, n)
        self.K = len(self.offsets)
        self.mode = "ls" if stencil == "wide16" else "direct"
        key = {tuple(d): i for i, d in enumerate(self.offsets)}
        if self.mode == "direct":
            self._ax_plus = []
            self._ax_minus = []
            for i in range(n):
                e = np.zeros(n, dtype=int)
                e[i] = 1
                self._ax_plus.append(key[tuple(e)])
                self._ax_minus.append(key[tuple(-e)])
            self._pairs = []
            for i, j in itertools.combinations(range(n), 2):
                d = np.zeros(n, dtype=int)
                d[i], d[j] = 1, 1
                s = np.zeros(n, dtype=int)
                s[i], s[j] = 1, -1
                if tuple(d) in key:
                    self._pairs.append((i, j, key[tuple(d)], key[tuple(-d)],
                                        key[tuple(s)], key[tuple(-s)]))
        else:
            M = np.stack([_quad_columns(self.h * d, n) for d in self.offsets])
            self._pinv = np.linalg.pinv(M)
            self._slope_vec = -self._pinv.sum(axis=1)

    # -- batched assembly ---------------------------------------------------

    def assemble(self, V: np.ndarray, r: np.ndarray):
        """V: (K, M) frozen neighbor values; r: (M,) center values."""
        n, h = self.n, self.h
        M = V.shape[1]
        if self.mode == "ls":
            coef = np.einsum("qk,km->qm", self._pinv, V - r[None, :])
            return self._unpack(coef, M)
        p = np.empty((M, n))
        A = np.zeros((M, n, n))
        for i in range(n):
            vp, vm = V[self._ax_plus[i]], V[self._ax_minus[i]]
            p[:, i] = (vp - vm) / (2.0 * h)
            A[:, i, i] = (vp + vm - 2.0 * r) / h ** 2
        for (i, j, ipp, imm, ipm, imp) in self._pairs:
            mixed = (V[ipp] + V[imm] - V[ipm] - V[imp]) / (4.0 * h ** 2)
            A[:, i, j] = mixed
            A[:, j, i] = mixed
        return p, A

    def _unpack(self, coef: np.ndarray, M: int):
        n = self.n
        p = coef[:n].T.copy()
        A = np.zeros((M, n, n))
        for i in range(n):
            A[:, i, i] = coef[n + i]
        for idx, (i, j) in enumerate(itertools.combinations(range(n), 2)):
            A[:, i, j] = coef[2 * n + idx]
            A[:, j, i] = coef[2 * n + idx]
        return p, A

    def slopes(self):
        """d(p)/dr and d(A)/dr for the center value (constants of the stencil)."""
        n, h = self.n, self.h
        if self.mode == "ls":
            p_s = self._slope_vec[:n].copy()
            A_s = np.zeros((n, n))
            for i in range(n):
                A_s[i, i] = self._slope_vec[n + i]
            for idx, (i, j) in enumerate(itertools.combinations(range(n), 2)):
                A_s[i, j] = A_s[j, i] = self._slope_vec[2 * n + idx]
            return p_s, A_s
        return np.zeros(n), (-2.0 / h ** 2) * np.eye(n)


@dataclass(frozen=True)
class Grid:
    lo: np.ndarray
    h: float
    shape: tuple

    @property
    def n(self) -> int:
        return len(self.shape)

    @classmethod
    def regular(cls, bounds: Sequence, m: int) -> "Grid":
        """Uniform lattice with m nodes per axis over [a1,b1]x...; spacing
        must agree across axes."""
        b = np.asarray(bounds, dtype=float).reshape(-1, 2)
        if m < 3:
            raise ConfigError("need at least 3 nodes per axis")
        hs = (b[:, 1] - b[:, 0]) / (m - 1)
        if hs.min() <= 0:
            raise ConfigError("empty box")
        if np.ptp(hs) > 1e-12 * hs.max():
            raise ConfigError("anisotropic spacing unsupported")
        return cls(b[:, 0].copy(), float(hs[0]), (m,) * len(b))

    def points(self) -> np.ndarray:
        axes = [self.lo[i] + self.h * np.arange(self.shape[i])
                for i in range(self.n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def size(self) -> int:
        return int(np.prod(self.shape))


@dataclass
class SolverParams:
    max_sweeps: int = 100_000
    sweep_tol: Optional[float] = None       # default 1e-10 * data range
    bisection_tol: Optional[float] = None   # default sweep_tol / 16
    stencil: str = "9pt"
    order: str = "color"                    # "color" (blocked) or "lex"
    eps_b: float = 1e-9
    omega: Optional[float] = None           # over-relaxation; None = auto
    init: str = "auto"                      # "auto" | "cascade" | "flat"

    def resolved(self, data_range: float):
        st = self.sweep_tol
        if st is None:
            st = 1e-10 * (data_range if data_range > 0 else 1.0)
        bt = self.bisection_tol
        if bt is None:
            bt = st / 16.0
        return st, bt

    def resolved_omega(self, min_cells: int) -> float:
        """Acceleration factor; the classical optimum for the model problem
        at this resolution, clipped away from the stability edge."""
        if self.omega is not None:
            return float(self.omega)
        w = 2.0 / (1.0 + np.sin(np.pi / max(min_cells, 2)))
        return float(np.clip(w, 1.0, 1.97))


class GridProblem:
    """Masked Dirichlet problem: F on {rho_dom < 0} with data on cut nodes.

    Node roles: *interior* nodes carry the full stencil inside the domain
    and get updated; in-domain nodes missing a neighbor are *boundary* and
    hold the data.  For a None domain the whole box is used and the box
    faces are the boundary.
    """

    def __init__(self, grid: Grid, F: Subequation, bc: Callable,
                 domain=None, params: Optional[SolverParams] = None):
        if F.n != grid.n:
            raise ConfigError(f"operator dimension {F.n} != grid {grid.n}")
        self.grid = grid
        self.F = F
        self.bc = bc
        self.domain = domain
        self.params = params or SolverParams()
        self.assembler = JetAssembler(self.params.stencil, grid.n, grid.h)
        self._build()

    def _build(self):
        g = self.grid
        pts = g.points()
        self.pts = pts
        if self.domain is None:
            inside = np.ones(g.size(), dtype=bool)
        else:
            dvals = np.asarray(self.domain.rho_dom(pts), dtype=float)
            inside = dvals < 0.0
        inside_nd = inside.reshape(g.shape)

        offs = self.assembler.offsets
        idx_nd = np.arange(g.size()).reshape(g.shape)
        full = np.ones(g.shape, dtype=bool)
        for d in offs:
            full &= self._shift_bool(inside_nd, d)
        interior_nd = inside_nd & full
        boundary_nd = inside_nd & ~interior_nd
        self.inside = inside
        self.interior_idx = idx_nd[interior_nd].ravel()
        self.boundary_idx = idx_nd[boundary_nd].ravel()
        if len(self.interior_idx) == 0:
            raise ConfigError("no interior nodes at this resolution")
        if len(self.boundary_idx) == 0:
            raise ConfigError("domain touches no boundary nodes")

        # flat neighbor index table for the interior nodes
        multi = np.stack(np.nonzero(interior_nd), axis=1)       # (Ni, n)
        nb = np.empty((len(offs), len(multi)), dtype=np.int64)
        for k, d in enumerate(offs):
            nb[k] = np.ravel_multi_index(tuple((multi + d).T), g.shape)
        self.nb = nb

        phi = np.asarray(self.bc(pts[self.boundary_idx]), dtype=float)
        if not np.all(np.isfinite(phi)):
            raise ConfigError("boundary data not finite")
        self.phi = phi

        # coloring: nodes in one class share no stencil edge for reach-1
        # stencils; for wider reach the classes are still a valid fixed-point
        # schedule, just closer to Jacobi within the class
        self.colors = []
        parity = multi % 2
        code = np.zeros(len(multi), dtype=int)
        for axis in range(g.n):
            code = code * 2 + parity[:, axis]
        for c in range(2 ** g.n):
            sel = np.flatnonzero(code == c)
            if len(sel):
                self.colors.append(sel)
        self.lex_order = np.argsort(self.interior_idx)

    @staticmethod
    def _shift_bool(mask: np.ndarray, d: np.ndarray) -> np.ndarray:
        """mask shifted so that out[i] = mask[i + d], False past the edge."""
        out = np.zeros_like(mask)
        src = []
        dst = []
        for di, m in zip(d, mask.shape):
            if di >= 0:
                src.append(slice(di, m))
                dst.append(slice(0, m - di))
            else:
                src.append(slice(0, m + di))
                dst.append(slice(-di, m))
        out[tuple(dst)] = mask[tuple(src)]
        return out

    def data_range(self) -> float:
        return float(self.phi.max() - self.phi.min())

    def initial_field(self) -> np.ndarray:
        u = np.full(self.grid.size(), np.nan)
        u[self.inside] = self.phi.min()
        u[self.boundary_idx] = self.phi
        return u

    def jets_at(self, u: np.ndarray, which: Optional[np.ndarray] = None):
        """Batched discrete jets (r, p, A) at interior nodes (or a subset)."""
        sel = slice(None) if which is None else which
        nb = self.nb[:, sel]
        V = u[nb]
        r = u[self.interior_idx[sel]]
        p, A = self.assembler.assemble(V, r)
        return r, p, A


def discrete_jet(u: np.ndarray, node, h: float, stencil: str = "9pt") -> Jet:
    """Second-order jet of a sampled field at one node of a uniform grid.

    ``u`` is the full nd-array of samples; ``node`` a multi-index.  Raises
    when the stencil pokes past the array edge.
    """
    u = np.asarray(u, dtype=float)
    n = u.ndim
    node = tuple(int(i) for i in np.atleast_1d(node))
    asm = JetAssembler(stencil, n, h)
    V = np.empty((asm.K, 1))
    for k, d in enumerate(asm.offsets):
        tgt = tuple(node[i] + d[i] for i in range(n))
        if any(t < 0 or t >= u.shape[i] for i, t in enumerate(tgt)):
            raise GeometryError(f"stencil leaves the grid at {node}")
        V[k, 0] = u[tgt]
    r = np.array([u[node]])
    p, A = asm.assemble(V, r)
    return Jet(float(r[0]), p[0],
               SymMatrix.from_dense(0.5 * (A[0] + A[0].T), check=False))
