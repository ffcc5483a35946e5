"""Perron-style Dirichlet solver on masked grids.

The update rule is the discrete counterpart of the upper-envelope
definition: each node is raised to the largest value whose discrete jet
(neighbors frozen) still satisfies rho >= 0.  Positivity makes that
predicate monotone in the node value — raising r lowers the assembled
Hessian by a PSD multiple — so bisection is exact, and negativity keeps
the r-slot itself monotone.  Sweeps repeat until the largest node change
drops below tolerance.

Two schedules: "color" updates the 2^n lattice parity classes in turn with
fully vectorized bisection (the default; deterministic), "lex" is the
scalar reference schedule, lexicographic then reversed, alternating.
Updates are over-relaxed by default (SolverParams.omega, auto-tuned from
the grid resolution); omega=1.0 recovers the plain envelope iteration.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import BracketError, ConfigError
from .core import Subequation, dual, axiom_check
from .grid import Grid, GridProblem, SolverParams, discrete_jet

_BRACKET_PAD = 10.0


@dataclass
class SolveReport:
    u: np.ndarray                # nd field, NaN outside the domain
    sweeps: int
    final_update: float
    residual: float
    converged: bool
    min_margin: float = 0.0
    degenerate_nodes: int = 0
    contact_nodes: int = 0
    wall_time: float = 0.0
    label: str = ""
    h: float = 0.0
    sweep_tol: float = 0.0

    def to_json_dict(self) -> dict:
        # wall_time stays out: reports must be byte-stable for a fixed config
        return {"label": self.label, "sweeps": self.sweeps,
                "final_update": self.final_update, "residual": self.residual,
                "converged": bool(self.converged),
                "min_margin": self.min_margin,
                "degenerate_nodes": self.degenerate_nodes,
                "contact_nodes": self.contact_nodes, "h": self.h,
                "sweep_tol": self.sweep_tol}


class _NodeUpdater:
    """Vectorized largest-member-value solve at a subset of interior nodes."""

    def __init__(self, P: GridProblem, bt: float, eps_b: float):
        self.P = P
        self.bt = bt
        self.eps_b = eps_b
        self.p_slope, self.A_slope = P.assembler.slopes()
        self.p_static = not np.any(self.p_slope)
        slope_eigs = np.linalg.eigvalsh(self.A_slope)
        if slope_eigs.max() > 1e-12:
            # bisection leans on membership being monotone in r
            warnings.warn("stencil center slope not negative semidefinite; "
                          "bisection may be unreliable", RuntimeWarning)
        self.xb_all = P.pts[P.interior_idx] if P.F.x_dependent else None

    def margins(self, rr, p_base, A_base, xb):
        p = p_base if self.p_static else p_base + rr[:, None] * self.p_slope
        A = A_base + rr[:, None, None] * self.A_slope
        return self.P.F.value_batch(rr, p, A, x=xb)

    def solve(self, u: np.ndarray, sel: np.ndarray, warm: float):
        """Returns (r_new, degenerate_mask) for interior nodes ``sel``."""
        P = self.P
        nb_vals = u[P.nb[:, sel]]
        r_cur = u[P.interior_idx[sel]]
        p_base, A_base = P.assembler.assemble(nb_vals, np.zeros_like(r_cur))
        xb = None if self.xb_all is None else self.xb_all[sel]

        min_nb = nb_vals.min(axis=0)
        max_nb = nb_vals.max(axis=0)
        lo_full = min_nb - _BRACKET_PAD
        hi_full = max_nb + _BRACKET_PAD
        width_full = hi_full - lo_full

        member = lambda rr: self.margins(rr, p_base, A_base, xb) >= -self.eps_b

        if np.isfinite(warm):
            lo = np.maximum(r_cur - warm, lo_full)
            hi = np.minimum(r_cur + warm, hi_full)
            hi = np.maximum(hi, lo + self.bt)
        else:
            lo, hi = lo_full.copy(), hi_full.copy()

        # lower end must be a member; fall back to the full bracket, then
        # expand twice before declaring the fiber empty
        bad = ~member(lo)
        if bad.any():
            lo[bad] = lo_full[bad]
            bad = bad & ~member(lo)
            grow = width_full.copy()
            for _ in range(2):
                if not bad.any():
                    break
                lo[bad] -= grow[bad]
                grow *= 2.0
                bad = bad & ~member(lo)
            if bad.any():
                i = int(np.flatnonzero(bad)[0])
                raise BracketError(
                    f"{P.F.label}: no admissible value at node "
                    f"{P.interior_idx[sel][i]} (empty fiber)")

        # upper end must be outside; a fiber that never exits is degenerate
        # (the operator ignores r there) and falls back to the neighbor max
        still = member(hi)
        if still.any():
            hi[still] = hi_full[still]
            still = still & member(hi)
            grow = width_full.copy()
            for _ in range(2):
                if not still.any():
                    break
                hi[still] += grow[still]
                grow *= 2.0
                still = still & member(hi)
        degen = still
        if degen.any():
            hi[degen] = np.maximum(lo[degen], max_nb[degen])

        active = ~degen
        span = float(np.max(hi - lo, initial=0.0))
        iters = int(np.ceil(np.log2(max(span, self.bt) / self.bt))) + 1
        for _ in range(min(iters, 64)):
            mid = 0.5 * (lo + hi)
            ok = member(mid) & active
            lo = np.where(ok, mid, lo)
            hi = np.where(ok | degen, hi, mid)
        r_new = np.where(degen, np.maximum(max_nb, r_cur), lo)
        return r_new, degen


def _clamp(r_new: np.ndarray, cap: Optional[np.ndarray]) -> np.ndarray:
    return r_new if cap is None else np.minimum(r_new, cap)


def _refine_axis(a: np.ndarray, axis: int) -> np.ndarray:
    """Double the resolution along one axis (midpoint interpolation)."""
    a = np.moveaxis(a, axis, 0)
    out = np.empty((2 * a.shape[0] - 1,) + a.shape[1:], dtype=a.dtype)
    out[::2] = a
    out[1::2] = 0.5 * (a[:-1] + a[1:])
    return np.moveaxis(out, 0, axis)


def _prolong(u_coarse: np.ndarray) -> np.ndarray:
    for ax in range(u_coarse.ndim):
        u_coarse = _refine_axis(u_coarse, ax)
    return u_coarse


def _solve_loop(P: GridProblem, cap: Optional[np.ndarray] = None,
                label: str = "", u0: Optional[np.ndarray] = None) -> SolveReport:
    t0 = time.perf_counter()
    st, bt = P.params.resolved(P.data_range())
    omega = P.params.resolved_omega(min(P.grid.shape) - 1)
    # the delivered field error is the per-sweep update amplified by the
    # iteration's contraction gap (~2-omega), so iterate past the reported
    # tolerance; the report still quotes the documented sweep_tol
    st_run = st * (2.0 - omega) / 8.0 if omega > 1.0 else 0.5 * st
    bt = min(bt, st_run / 16.0)
    upd = _NodeUpdater(P, bt, P.params.eps_b)
    u = P.initial_field()
    if u0 is not None:
        ii0 = P.interior_idx
        u[ii0] = np.asarray(u0, dtype=float).ravel()[ii0]
    if cap is not None:
        ii = P.interior_idx
        u[ii] = np.minimum(u[ii], cap)
    order = P.params.order
    if order not in ("color", "lex"):
        raise ConfigError(f"unknown sweep order {order!r}")

    sweeps = 0
    final_update = np.inf
    warm = np.inf
    degen_total = 0
    converged = False
    ii = P.interior_idx
    n_int = len(ii)
    for sweep in range(1, P.params.max_sweeps + 1):
        max_upd = 0.0
        degen_total = 0
        if order == "color":
            groups = P.colors
        else:
            fwd = np.arange(n_int)
            groups = [fwd] if sweep % 2 else [fwd[::-1]]
            groups = [np.array([j]) for g in groups for j in g]
        for sel in groups:
            r_star, degen = upd.solve(u, sel, warm)
            r_old = u[ii[sel]]
            # over-relax toward the envelope value (same fixed point);
            # degenerate fibers take their fallback value verbatim
            r_new = np.where(degen, r_star, r_old + omega * (r_star - r_old))
            r_new = _clamp(r_new, None if cap is None else cap[sel])
            delta = np.abs(r_new - r_old)
            if len(delta):
                max_upd = max(max_upd, float(delta.max()))
            degen_total += int(degen.sum())
            u[ii[sel]] = r_new
        sweeps = sweep
        final_update = max_upd
        # shrink the warm bracket with the observed update scale
        warm = max(8.0 * max_upd, 1024.0 * bt)
        if max_upd <= st_run:
            converged = True
            break
    converged = converged or final_update <= st

    r, p, A = P.jets_at(u)
    xb = P.pts[ii] if P.F.x_dependent else None
    vals = P.F.value_batch(r, p, A, x=xb)
    if cap is not None:
        off = u[ii] < cap - 2.0 * P.grid.h
        residual = float(np.abs(vals[off]).max()) if off.any() else 0.0
        contact = int(np.sum(~off))
    else:
        residual = float(np.abs(vals).max())
        contact = 0
    report = SolveReport(
        u=u.reshape(P.grid.shape), sweeps=sweeps, final_update=final_update,
        residual=residual, converged=converged,
        min_margin=float(vals.min()), degenerate_nodes=degen_total,
        contact_nodes=contact, wall_time=time.perf_counter() - t0,
        label=label or P.F.label, h=P.grid.h, sweep_tol=st)
    return report


def _precheck(F: Subequation):
    if F.x_dependent:
        return
    try:
        for ax in ("P", "N"):
            rep = axiom_check(F, ax, trials=512, seed=7)
            if rep.violations:
                warnings.warn(
                    f"{F.label}: sampled axiom ({ax}) check found "
                    f"{rep.violations} violations; solver semantics rely on it",
                    RuntimeWarning)
    except Exception:                        # sampler exhaustion etc.
        warnings.warn(f"{F.label}: axiom precheck skipped", RuntimeWarning)


def _cascade_ladder(P: GridProblem) -> list:
    """Coarsened copies of P (factor-2 in every axis), coarsest first.

    Only meaningful for full-rectangle problems; the boundary data callable
    is re-evaluated exactly on every level.
    """
    levels = []
    g = P.grid
    shape = g.shape
    h = g.h
    while (min(shape) >= 33 and all((s - 1) % 2 == 0 for s in shape)
           and len(levels) < 6):
        shape = tuple((s - 1) // 2 + 1 for s in shape)
        h = 2.0 * h
        levels.append(GridProblem(Grid(g.lo, h, shape), P.F, P.bc,
                                  params=P.params))
    return levels[::-1]


def perron_solve(P: GridProblem) -> SolveReport:
    """Upper-envelope solve for the Dirichlet problem on P.

    On plain rectangles the iteration is warm-started from coarsened grids
    (params.init="auto"/"cascade"; "flat" forces the single-level start at
    the boundary minimum).  Never raises on slow convergence: the report
    carries converged=False.
    """
    _precheck(P.F)
    cascade = P.params.init in ("auto", "cascade") and P.domain is None
    ladder = _cascade_ladder(P) if cascade else []
    u0 = None
    extra_sweeps = 0
    for Pc in ladder:
        rep_c = _solve_loop(Pc, u0=u0)
        extra_sweeps += rep_c.sweeps
        u0 = _prolong(rep_c.u)          # now at the next level's resolution
    rep = _solve_loop(P, u0=u0)
    rep.sweeps += extra_sweeps
    return rep


def obstacle_solve(P: GridProblem, g: Callable) -> SolveReport:
    """Perron solve constrained below the obstacle g (node updates clamped).

    Boundary data exceeding the obstacle is rejected up front.
    """
    gb = np.asarray(g(P.pts[P.boundary_idx]), dtype=float)
    scale = max(1.0, float(np.abs(P.phi).max()))
    if np.any(P.phi > gb + 1e-12 * scale):
        k = int(np.argmax(P.phi - gb))
        raise ConfigError(
            f"boundary data exceeds the obstacle at node {P.boundary_idx[k]}: "
            f"phi={P.phi[k]:.6g} > g={gb[k]:.6g}")
    _precheck(P.F)
    gi = np.asarray(g(P.pts[P.interior_idx]), dtype=float)
    rep = _solve_loop(P, cap=gi, label=f"obstacle({P.F.label})")
    return rep


@dataclass
class BracketResult:
    U: np.ndarray
    U_tilde: np.ndarray
    report: SolveReport
    report_dual: SolveReport
    max_gap: float        # max over nodes of U - U_tilde
    min_gap: float        # min over nodes (bracket violation if very negative)

    def to_json_dict(self) -> dict:
        return {"report": self.report.to_json_dict(),
                "report_dual": self.report_dual.to_json_dict(),
                "max_gap": self.max_gap, "min_gap": self.min_gap}


def dual_bracket_solve(P: GridProblem) -> BracketResult:
    """Solve for F and for its dual with negated data; bracket U_tilde <= U.

    U_tilde = -perron(dual F, -phi) is the lower Perron function; for
    operators with uniqueness the two coincide to solver accuracy.
    """
    rep_U = perron_solve(P)
    bc = P.bc
    P2 = GridProblem(P.grid, dual(P.F),
                     lambda pts, _bc=bc: -np.asarray(_bc(pts), dtype=float),
                     domain=P.domain, params=P.params)
    rep_D = perron_solve(P2)
    U = rep_U.u
    Ut = -rep_D.u
    gap = U - Ut
    finite = np.isfinite(gap)
    return BracketResult(U, Ut, rep_U, rep_D,
                         float(np.nanmax(gap[finite])),
                         float(np.nanmin(gap[finite])))


# ---------------------------------------------------------------------------
# discrete comparison / zero-maximum-principle check


@dataclass
class ComparisonReport:
    status: str           # pass | zmp_fail | precondition_fail | vacuous
    witness: Optional[dict]
    boundary_max: float
    interior_max: float
    sub_margin: float     # min F-margin of u jets
    dual_margin: float    # min dual-F-margin of v jets

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_json_dict(self) -> dict:
        return {"status": self.status, "witness": self.witness,
                "boundary_max": self.boundary_max,
                "interior_max": self.interior_max,
                "sub_margin": self.sub_margin,
                "dual_margin": self.dual_margin}


def _mask_interior(K_nd: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    inner = K_nd.copy()
    for d in offsets:
        inner &= GridProblem._shift_bool(K_nd, d)
    return inner


def comparison_check(grid: Grid, u: np.ndarray, v: np.ndarray,
                     F: Subequation, K: Optional[np.ndarray] = None,
                     stencil: str = "9pt", jet_tol: Optional[float] = None,
                     zmp_tol: Optional[float] = None) -> ComparisonReport:
    """Discrete zero-maximum-principle check for the pair (u, v) on K.

    Preconditions: the jets of u on the interior of K lie in F and those of
    v lie in dual(F), both within jet_tol (default 10 h, the discretization
    slack for twice-differentiable fields).  Then u + v <= 0 on the edge
    band of K must propagate to all of K; a node where it fails is returned
    as the witness.  If the edge condition itself fails the implication is
    vacuous and reported as such.
    """
    from .grid import JetAssembler

    u = np.asarray(u, dtype=float).reshape(grid.shape)
    v = np.asarray(v, dtype=float).reshape(grid.shape)
    if K is None:
        K_nd = np.ones(grid.shape, dtype=bool)
    else:
        K_nd = np.asarray(K, dtype=bool).reshape(grid.shape)
    jet_tol = 10.0 * grid.h if jet_tol is None else float(jet_tol)
    scale = max(1.0, float(np.nanmax(np.abs(u[K_nd]))),
                float(np.nanmax(np.abs(v[K_nd]))))
    zmp_tol = 1e-9 * scale if zmp_tol is None else float(zmp_tol)

    asm = JetAssembler(stencil, grid.n, grid.h)
    inner = _mask_interior(K_nd, asm.offsets)
    if not inner.any():
        raise ConfigError("mask has no interior at this resolution")
    edge = K_nd & ~inner

    flat_idx = np.flatnonzero(inner.ravel())
    multi = np.stack(np.nonzero(inner), axis=1)
    nb = np.empty((asm.K, len(flat_idx)), dtype=np.int64)
    for k, d in enumerate(asm.offsets):
        nb[k] = np.ravel_multi_index(tuple((multi + d).T), grid.shape)

    pts = grid.points()

    def jet_margins(field: np.ndarray, G: Subequation) -> np.ndarray:
        vals_nb = field.ravel()[nb]
        r = field.ravel()[flat_idx]
        p, A = asm.assemble(vals_nb, r)
        xb = pts[flat_idx] if G.x_dependent else None
        return G.value_batch(r, p, A, x=xb)

    mu = jet_margins(u, F)
    mv = jet_margins(v, dual(F))
    sub_margin = float(mu.min())
    dual_margin = float(mv.min())

    def node_witness(i_flat: int, value: float) -> dict:
        return {"point": pts[i_flat].tolist(), "value": float(value)}

    if sub_margin < -jet_tol or dual_margin < -jet_tol:
        bad_u = mu.argmin() if sub_margin < -jet_tol else None
        i = int(flat_idx[bad_u if bad_u is not None else mv.argmin()])
        val = sub_margin if bad_u is not None else dual_margin
        return ComparisonReport("precondition_fail", node_witness(i, val),
                                np.nan, np.nan, sub_margin, dual_margin)

    s = u + v
    boundary_max = float(s[edge].max()) if edge.any() else -np.inf
    interior_max = float(s[inner].max())
    if boundary_max > zmp_tol:
        return ComparisonReport("vacuous", None, boundary_max, interior_max,
                                sub_margin, dual_margin)
    if interior_max > zmp_tol:
        w_nd = np.unravel_index(int(np.nanargmax(np.where(inner, s, -np.inf))),
                                grid.shape)
        i = int(np.ravel_multi_index(w_nd, grid.shape))
        return ComparisonReport("zmp_fail", node_witness(i, interior_max),
                                boundary_max, interior_max,
                                sub_margin, dual_margin)
    return ComparisonReport("pass", None, boundary_max, interior_max,
                            sub_margin, dual_margin)


def membership_scan(grid: Grid, u: np.ndarray, F: Subequation,
                    K: Optional[np.ndarray] = None,
                    stencil: str = "9pt") -> float:
    """Minimum F-margin of the discrete jets of u over the interior of K."""
    u = np.asarray(u, dtype=float).reshape(grid.shape)
    K_nd = (np.ones(grid.shape, dtype=bool) if K is None
            else np.asarray(K, dtype=bool).reshape(grid.shape))
    from .grid import JetAssembler
    asm = JetAssembler(stencil, grid.n, grid.h)
    inner = _mask_interior(K_nd, asm.offsets)
    if not inner.any():
        raise ConfigError("mask has no interior at this resolution")
    flat_idx = np.flatnonzero(inner.ravel())
    multi = np.stack(np.nonzero(inner), axis=1)
    nb = np.empty((asm.K, len(flat_idx)), dtype=np.int64)
    for k, d in enumerate(asm.offsets):
        nb[k] = np.ravel_multi_index(tuple((multi + d).T), grid.shape)
    V = u.ravel()[nb]
    r = u.ravel()[flat_idx]
    p, A = asm.assemble(V, r)
    xb = grid.points()[flat_idx] if F.x_dependent else None
    return float(F.value_batch(r, p, A, x=xb).min())
