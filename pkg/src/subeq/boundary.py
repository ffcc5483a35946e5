"""Domain geometry and strict boundary-convexity tests.

A domain is {rho_dom < 0} for a smooth defining function with nonvanishing
gradient on the zero set.  Curvature data is read off the second fundamental
form II = P_T (Hess rho / |grad rho|) P_T in an orthonormal tangent frame.

Whether the Dirichlet problem for a constraint set F admits boundary
barriers at a point is decided by the jets (lam, nu, t*nu⊗nu + II): the
boundary is strictly convex for F when those jets sit in the asymptotic
interior for all large t (and every relevant value level lam).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import GeometryError
from .linalg import SymMatrix
from .core import (Jet, Subequation, asymptotic_interior_member,
                   _unit_sphere_qmc)

_H_GEO = 1e-4
_GRAD_FLOOR = 1e-6
_ONSET_TOL = 1e-8


def _fd_gradient(f: Callable, x: np.ndarray, h: float) -> np.ndarray:
    n = len(x)
    E = np.eye(n) * h
    pts = np.concatenate([x[None, :] + E, x[None, :] - E])
    vals = np.asarray(f(pts), dtype=float)
    return (vals[:n] - vals[n:]) / (2.0 * h)


def _fd_hessian(f: Callable, x: np.ndarray, h: float) -> np.ndarray:
    n = len(x)
    E = np.eye(n) * h
    f0 = float(np.asarray(f(x[None, :]), dtype=float)[0])
    H = np.empty((n, n))
    plus = np.asarray(f(x[None, :] + E), dtype=float)
    minus = np.asarray(f(x[None, :] - E), dtype=float)
    for i in range(n):
        H[i, i] = (plus[i] - 2.0 * f0 + minus[i]) / h ** 2
    if n > 1:
        ii, jj = np.triu_indices(n, k=1)
        pp = x[None, :] + E[ii] + E[jj]
        pm = x[None, :] + E[ii] - E[jj]
        mp = x[None, :] - E[ii] + E[jj]
        mm = x[None, :] - E[ii] - E[jj]
        cross = np.asarray(f(np.concatenate([pp, pm, mp, mm])), dtype=float)
        k = len(ii)
        vals = (cross[:k] - cross[k:2 * k] - cross[2 * k:3 * k]
                + cross[3 * k:]) / (4.0 * h ** 2)
        H[ii, jj] = vals
        H[jj, ii] = vals
    return H


@dataclass(frozen=True)
class DomainSpec:
    """Region {rho_dom < 0} with geometry callbacks or difference fallbacks.

    rho_dom maps batched points (N, n) to (N,).  When analytic gradient or
    Hessian callbacks are absent, central differences at step h_geo are used
    and cross-checked by a half-step Richardson pass.
    """
    n: int
    rho_dom: Callable
    grad: Optional[Callable] = None
    hess: Optional[Callable] = None
    h_geo: float = _H_GEO
    label: str = "domain"

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.asarray(self.rho_dom(x[None, :]), dtype=float)[0])

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=float)
        g1 = _fd_gradient(self.rho_dom, x, self.h_geo)
        g2 = _fd_gradient(self.rho_dom, x, 0.5 * self.h_geo)
        return (4.0 * g2 - g1) / 3.0

    def hessian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.hess is not None:
            H = np.asarray(self.hess(x), dtype=float)
        else:
            H1 = _fd_hessian(self.rho_dom, x, self.h_geo)
            H2 = _fd_hessian(self.rho_dom, x, 0.5 * self.h_geo)
            H = (4.0 * H2 - H1) / 3.0
        return 0.5 * (H + H.T)

    def contains(self, x) -> bool:
        return self.value(x) < 0.0


def ball_domain(n: int, radius: float = 1.0, center=None) -> DomainSpec:
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    r2 = radius ** 2

    def rho(x):
        d = np.asarray(x, dtype=float) - c
        return np.einsum("ni,ni->n", d, d) - r2

    def grad(x):
        return 2.0 * (np.asarray(x, dtype=float) - c)

    def hess(x):
        return 2.0 * np.eye(n)

    return DomainSpec(n, rho, grad, hess, label=f"ball:r={radius}")


def annulus_domain(n: int, r_in: float = 1.0, r_out: float = 2.0) -> DomainSpec:
    """{r_in < |x| < r_out} via the product defining function."""
    def rho(x):
        s = np.linalg.norm(np.asarray(x, dtype=float), axis=1)
        return (s - r_in) * (s - r_out)

    return DomainSpec(n, rho, label=f"annulus:{r_in}:{r_out}")


def ellipsoid_domain(axes, rotation=None) -> DomainSpec:
    axes = np.asarray(axes, dtype=float)
    n = len(axes)
    Q = np.eye(n) if rotation is None else np.asarray(rotation, dtype=float)
    D = Q @ np.diag(1.0 / axes ** 2) @ Q.T

    def rho(x):
        x = np.asarray(x, dtype=float)
        return np.einsum("ni,ij,nj->n", x, D, x) - 1.0

    def grad(x):
        return 2.0 * D @ np.asarray(x, dtype=float)

    def hess(x):
        return 2.0 * D

    return DomainSpec(n, rho, grad, hess, label="ellipsoid")


def star_domain(n: int, amplitude: float = 0.2, lobes: int = 5,
                seed: int = 0) -> DomainSpec:
    """Star-shaped wobble of the unit ball, |x| < 1 + amp*cos(lobes*theta).

    In 2-d the radius is modulated by the polar angle; higher dimensions use
    a fixed random bounded trigonometric bump.  Smooth away from the origin,
    which is never a boundary point for amplitude < 1.
    """
    if not 0 <= amplitude < 0.5:
        raise GeometryError("amplitude must sit in [0, 0.5)")
    rng = np.random.default_rng(seed)
    freq = rng.integers(1, 4, size=n)
    phase = rng.uniform(0, 2 * np.pi, size=n)

    def rho(x):
        x = np.asarray(x, dtype=float)
        s = np.linalg.norm(x, axis=1)
        if n == 2:
            z = x[:, 0] + 1j * x[:, 1]
            bump = np.real(z ** lobes) / np.maximum(s, 1e-12) ** lobes
        else:
            bump = np.prod(np.sin(freq[None, :] * x + phase[None, :]), axis=1)
        return s - 1.0 - amplitude * bump

    return DomainSpec(n, rho, label="star")


# ---------------------------------------------------------------------------
# curvature


def second_fundamental_form(D: DomainSpec, x) -> tuple:
    """Outward unit normal and tangential curvature form at a boundary point.

    Returns (nu, II, T): nu in R^n, II an (n-1)x(n-1) SymMatrix in the
    orthonormal tangent frame given by the columns of T.
    """
    x = np.asarray(x, dtype=float)
    val = D.value(x)
    if abs(val) > _ONSET_TOL:
        raise GeometryError(f"not a boundary point: rho_dom = {val:.3e}")
    g = D.gradient(x)
    gn = float(np.linalg.norm(g))
    if gn < _GRAD_FLOOR:
        raise GeometryError(f"degenerate gradient |grad| = {gn:.3e}")
    nu = g / gn
    # frame from the Householder reflection taking e1 to nu
    v = nu.copy()
    v[0] += 1.0 if v[0] >= 0 else -1.0
    Hh = np.eye(D.n) - 2.0 * np.outer(v, v) / (v @ v)
    T = Hh[:, 1:]
    H = D.hessian(x) / gn
    II = T.T @ H @ T
    return nu, SymMatrix.from_dense(0.5 * (II + II.T), check=False), T


def sample_boundary_points(D: DomainSpec, k: int, seed: int = 0,
                           center=None) -> np.ndarray:
    """Boundary points by ray bisection from an interior anchor.

    Works for domains star-shaped about the anchor (default: origin; if the
    origin is exterior, as for an annulus, a deterministic scan picks an
    interior anchor instead)."""
    c = np.zeros(D.n) if center is None else np.asarray(center, dtype=float)
    if D.value(c) >= 0 and center is None:
        rng = np.random.default_rng(seed + 1)
        cand = rng.uniform(-1.5, 1.5, (4096, D.n))
        vals = np.asarray(D.rho_dom(cand), dtype=float)
        if vals.min() < -1e-9:
            c = cand[int(np.argmin(vals))]
    if D.value(c) >= 0:
        raise GeometryError("anchor is not interior")
    dirs = _unit_sphere_qmc(D.n, k, seed=seed)
    pts = np.empty((k, D.n))
    for i, e in enumerate(dirs):
        hi = 1.0
        tries = 0
        while D.value(c + hi * e) < 0:
            hi *= 2.0
            tries += 1
            if tries > 60:
                raise GeometryError("ray never leaves the domain")
        lo = 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if D.value(c + mid * e) < 0:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-14 * max(1.0, hi):
                break
        t = 0.5 * (lo + hi)
        # polish along the ray until the defining function is tiny
        pts[i] = c + t * e
    return pts


# ---------------------------------------------------------------------------
# strict convexity


@dataclass(frozen=True)
class ConvexityVerdict:
    point: np.ndarray
    lambda_grid: tuple
    per_lambda: tuple      # bool per lambda value
    overall: bool
    trace_II: float
    min_eig_II: float

    def to_json_dict(self) -> dict:
        return {"point": self.point.tolist(),
                "lambda_grid": list(self.lambda_grid),
                "per_lambda": [bool(b) for b in self.per_lambda],
                "overall": bool(self.overall),
                "trace_II": self.trace_II, "min_eig_II": self.min_eig_II}


DEFAULT_LAMBDA_GRID = (-2.0, -1.0, 0.0, 1.0, 2.0)


def strict_convexity_test(F: Subequation, D: DomainSpec, x,
                          lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
                          t_max: float = 2.0 ** 16) -> ConvexityVerdict:
    """Strict boundary convexity of {rho_dom<0} for F at a boundary point.

    For each lam on the grid, the jets (lam, nu, t nu⊗nu + II_ambient) are
    pushed through the asymptotic-interior test along the geometric t-grid
    1, 2, 4, ..., t_max; the verdict per lam is stabilization (membership at
    the last four grid points), and the overall verdict requires all lam.
    Reduced F collapses the grid to a single representative.
    """
    x = np.asarray(x, dtype=float)
    nu, II, T = second_fundamental_form(D, x)
    II_amb = T @ II.mat @ T.T
    grid = tuple(lambda_grid)
    reduced = F.reduced or F.pure_second_order
    n_last = 4
    ts = [1.0]
    while ts[-1] < t_max:
        ts.append(min(2.0 * ts[-1], t_max))
    ts = np.array(ts)

    def verdict_at(lam: float) -> bool:
        tail = []
        for t in ts:
            A = t * np.outer(nu, nu) + II_amb
            J = Jet(lam, nu, SymMatrix.from_dense(A, check=False))
            tail.append(asymptotic_interior_member(
                F, J, x=x if F.x_dependent else None))
        return all(tail[-n_last:])

    if reduced:
        per_lam = (verdict_at(0.0),) * len(grid)
    else:
        per_lam = tuple(verdict_at(lam) for lam in grid)
    overall = all(per_lam)
    from .linalg import ordered_eigenvalues
    eigs = ordered_eigenvalues(II)
    return ConvexityVerdict(x, grid, per_lam, overall,
                            float(II.trace()), float(eigs[0]))


def tangent_trace_test(D: DomainSpec, x, frames: np.ndarray,
                       tol: float = 1e-9) -> bool:
    """Direct geometric criterion: tr_W II > 0 over tangent plane samples.

    ``frames`` stacks orthonormal (n, p) frames; each is projected to the
    tangent space at x and re-orthonormalized, dropping frames that collapse.
    """
    x = np.asarray(x, dtype=float)
    nu, II, T = second_fundamental_form(D, x)
    II_amb = T @ II.mat @ T.T
    P = np.eye(D.n) - np.outer(nu, nu)
    ok = True
    found = 0
    for W in frames:
        Wt = P @ W
        q, r = np.linalg.qr(Wt)
        if np.abs(np.diag(r)).min() < 1e-8:
            continue                # frame had no tangent representative
        found += 1
        tr = float(np.einsum("ip,ij,jp->", q, II_amb, q))
        if tr <= tol:
            ok = False
    if found == 0:
        raise GeometryError("no tangent planes among the sampled frames")
    return ok
