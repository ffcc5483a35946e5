"""Affine automorphisms of jet space and transformed subequations.

A map acts on 2-jets by

    Psi(r, p, A) = (r, g p, h A h^t + L(p)) + S

with g, h invertible, L linear from vectors into symmetric matrices, and S a
jet-valued translation.  Any of the four fields may depend on the base point
x, in which case it is supplied as a batch-aware callback (x of shape (N, n)
in, stacked field values out).  These maps form a group; composing, inverting
and pushing subequations through them is exact linear algebra.

Transformed sets satisfy rho'(x, J) = rho(x, Psi^{-1} J), so the constraint
set is Psi(F).  The companion identity used in the duality tests:
the dual of Psi(F) is the linear part applied to dual(F), translated by -S.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional, Union

import numpy as np

from .errors import ConfigError, DimensionMismatch
from .core import Jet, Subequation
from .linalg import SymMatrix, _as_dense, hermitian_part_batch, ComplexStructure

MatField = Union[np.ndarray, Callable]      # (n,n) or x->(N,n,n)
TenField = Union[np.ndarray, Callable]      # (n,n,n) or x->(N,n,n,n)
JetField = Union[tuple, Callable]           # (r, p(n,), A(n,n)) or x->triple


def _sym_tensor(L: np.ndarray, n: int) -> np.ndarray:
    L = np.asarray(L, dtype=float)
    if L.shape != (n, n, n):
        raise DimensionMismatch(f"L tensor shape {L.shape}, want {(n, n, n)}")
    return 0.5 * (L + np.swapaxes(L, 1, 2))


@dataclass(frozen=True)
class AffineJetMap:
    n: int
    g: MatField
    h: MatField
    L: TenField
    S: JetField
    label: str = "psi"

    @property
    def x_dependent(self) -> bool:
        return any(callable(f) for f in (self.g, self.h, self.L, self.S))

    @classmethod
    def identity(cls, n: int) -> "AffineJetMap":
        return cls(n, np.eye(n), np.eye(n), np.zeros((n, n, n)),
                   (0.0, np.zeros(n), np.zeros((n, n))), label="id")

    @classmethod
    def linear(cls, g, h, L=None, n: Optional[int] = None,
               label: str = "phi") -> "AffineJetMap":
        g = np.asarray(g, dtype=float)
        n = n or g.shape[0]
        if L is None:
            L = np.zeros((n, n, n))
        return cls(n, g, np.asarray(h, dtype=float), _sym_tensor(L, n),
                   (0.0, np.zeros(n), np.zeros((n, n))), label=label)

    @classmethod
    def translation(cls, S, n: Optional[int] = None,
                    label: str = "shift") -> "AffineJetMap":
        if not callable(S):
            r0, p0, A0 = S
            p0 = np.asarray(p0, dtype=float)
            n = n or len(p0)
            S = (float(r0), p0, _as_dense(A0) if hasattr(A0, "packed")
                 else np.asarray(A0, dtype=float))
        elif n is None:
            raise ConfigError("x-dependent translation needs explicit n")
        return cls(n, np.eye(n), np.eye(n), np.zeros((n, n, n)), S, label=label)

    def condition(self, x=None) -> dict:
        g, h = self._gh(x)
        return {"cond_g": float(np.linalg.cond(g[0])),
                "cond_h": float(np.linalg.cond(h[0]))}

    # -- field resolution to batch arrays -----------------------------------

    def _gh(self, x, N: int = 1):
        g = self.g(x) if callable(self.g) else np.broadcast_to(self.g, (N, self.n, self.n))
        h = self.h(x) if callable(self.h) else np.broadcast_to(self.h, (N, self.n, self.n))
        return np.asarray(g, dtype=float), np.asarray(h, dtype=float)

    def _Lten(self, x, N: int = 1):
        if callable(self.L):
            return np.asarray(self.L(x), dtype=float)
        return np.broadcast_to(self.L, (N, self.n, self.n, self.n))

    def _Sjet(self, x, N: int = 1):
        if callable(self.S):
            r0, p0, A0 = self.S(x)
            return (np.asarray(r0, dtype=float), np.asarray(p0, dtype=float),
                    np.asarray(A0, dtype=float))
        r0, p0, A0 = self.S
        return (np.broadcast_to(r0, (N,)), np.broadcast_to(p0, (N, self.n)),
                np.broadcast_to(A0, (N, self.n, self.n)))


def apply_batch(Psi: AffineJetMap, r, p, A, x=None):
    """Push a batch of jets through the map; returns (r, p, A) arrays."""
    r = np.asarray(r, dtype=float)
    p = np.asarray(p, dtype=float)
    A = np.asarray(A, dtype=float)
    N = len(r)
    if Psi.x_dependent and x is None:
        raise ConfigError(f"{Psi.label} is x-dependent; base points required")
    g, h = Psi._gh(x, N)
    L = Psi._Lten(x, N)
    r0, p0, A0 = Psi._Sjet(x, N)
    p_out = np.einsum("nij,nj->ni", g, p)
    A_out = (np.einsum("nij,njk,nlk->nil", h, A, h)
             + np.einsum("niab,ni->nab", L, p))
    return r + r0, p_out + p0, A_out + A0


def apply(Psi: AffineJetMap, x, J: Jet) -> Jet:
    """Image of a single jet (x ignored by constant-coefficient maps)."""
    xb = None if x is None else np.asarray(x, dtype=float)[None, :]
    r, p, A = apply_batch(Psi, np.array([J.r]), J.p[None, :],
                          J.A.mat[None, :, :], x=xb)
    return Jet(float(r[0]), p[0], SymMatrix.from_dense(
        0.5 * (A[0] + A[0].T), check=False))


def _compose_const(P2: AffineJetMap, P1: AffineJetMap) -> AffineJetMap:
    n = P1.n
    g = P2.g @ P1.g
    h = P2.h @ P1.h
    # composed linear fill-in: conjugate the inner one, chain the outer
    L = (np.einsum("ab,ibc,dc->iad", P2.h, P1.L, P2.h)
         + np.einsum("jab,ji->iab", P2.L, P1.g))
    r1, p1, A1 = P1.S
    r0 = r1 + P2.S[0]
    p0 = P2.g @ p1 + P2.S[1]
    A0 = (P2.h @ A1 @ P2.h.T + np.einsum("iab,i->ab", P2.L, p1) + P2.S[2])
    return AffineJetMap(n, g, h, L, (float(r0), p0, A0),
                        label=f"{P2.label}*{P1.label}")


def compose(P2: AffineJetMap, P1: AffineJetMap) -> AffineJetMap:
    """compose(P2, P1) acts as P2 after P1."""
    if P2.n != P1.n:
        raise DimensionMismatch("composing maps of different dimension")
    if not (P2.x_dependent or P1.x_dependent):
        return _compose_const(P2, P1)
    n = P1.n

    def g_c(x):
        N = len(np.atleast_2d(x))
        g2, _ = P2._gh(x, N)
        g1, _ = P1._gh(x, N)
        return np.einsum("nij,njk->nik", g2, g1)

    def h_c(x):
        N = len(np.atleast_2d(x))
        _, h2 = P2._gh(x, N)
        _, h1 = P1._gh(x, N)
        return np.einsum("nij,njk->nik", h2, h1)

    def L_c(x):
        N = len(np.atleast_2d(x))
        _, h2 = P2._gh(x, N)
        g1, _ = P1._gh(x, N)
        L1 = P1._Lten(x, N)
        L2 = P2._Lten(x, N)
        return (np.einsum("nab,nibc,ndc->niad", h2, L1, h2)
                + np.einsum("njab,nji->niab", L2, g1))

    def S_c(x):
        N = len(np.atleast_2d(x))
        g2, h2 = P2._gh(x, N)
        L2 = P2._Lten(x, N)
        r1, p1, A1 = P1._Sjet(x, N)
        r2, p2, A2 = P2._Sjet(x, N)
        r0 = r1 + r2
        p0 = np.einsum("nij,nj->ni", g2, p1) + p2
        A0 = (np.einsum("nij,njk,nlk->nil", h2, A1, h2)
              + np.einsum("niab,ni->nab", L2, p1) + A2)
        return r0, p0, A0

    return AffineJetMap(n, g_c, h_c, L_c, S_c,
                        label=f"{P2.label}*{P1.label}")


def _invert_const(P: AffineJetMap) -> AffineJetMap:
    n = P.n
    try:
        gi = np.linalg.inv(P.g)
        hi = np.linalg.inv(P.h)
    except np.linalg.LinAlgError as exc:
        raise ConfigError(f"{P.label}: singular g or h") from exc
    Lg = np.einsum("jab,ji->iab", P.L, gi)
    Li = -np.einsum("ab,ibc,dc->iad", hi, Lg, hi)
    r1, p1, A1 = P.S
    ri = -float(r1)
    pi = -(gi @ p1)
    Ai = -(hi @ A1 @ hi.T + np.einsum("iab,i->ab", Li, p1))
    return AffineJetMap(n, gi, hi, Li, (ri, pi, Ai), label=f"{P.label}^-1")


def invert(P: AffineJetMap) -> AffineJetMap:
    if not P.x_dependent:
        return _invert_const(P)
    n = P.n

    def g_i(x):
        g, _ = P._gh(x, len(np.atleast_2d(x)))
        return np.linalg.inv(g)

    def h_i(x):
        _, h = P._gh(x, len(np.atleast_2d(x)))
        return np.linalg.inv(h)

    def L_i(x):
        N = len(np.atleast_2d(x))
        g, h = P._gh(x, N)
        gi, hi = np.linalg.inv(g), np.linalg.inv(h)
        L = P._Lten(x, N)
        Lg = np.einsum("njab,nji->niab", L, gi)
        return -np.einsum("nab,nibc,ndc->niad", hi, Lg, hi)

    def S_i(x):
        N = len(np.atleast_2d(x))
        g, h = P._gh(x, N)
        gi, hi = np.linalg.inv(g), np.linalg.inv(h)
        Li = L_i(x)
        r1, p1, A1 = P._Sjet(x, N)
        ri = -r1
        pi = -np.einsum("nij,nj->ni", gi, p1)
        Ai = -(np.einsum("nij,njk,nlk->nil", hi, A1, hi)
               + np.einsum("niab,ni->nab", Li, p1))
        return ri, pi, Ai

    return AffineJetMap(n, g_i, h_i, L_i, S_i, label=f"{P.label}^-1")


def linear_part(P: AffineJetMap) -> AffineJetMap:
    zero = ((0.0, np.zeros(P.n), np.zeros((P.n, P.n)))
            if not callable(P.S) else
            (lambda x: ((lambda N: (np.zeros(N), np.zeros((N, P.n)),
                                    np.zeros((N, P.n, P.n))))(len(np.atleast_2d(x))))))
    return AffineJetMap(P.n, P.g, P.h, P.L, zero, label=f"lin({P.label})")


def negate_translation(P: AffineJetMap) -> AffineJetMap:
    """Same linear part, translation flipped to -S."""
    if callable(P.S):
        def S_neg(x, _S=P.S):
            r0, p0, A0 = _S(x)
            return (-np.asarray(r0, dtype=float), -np.asarray(p0, dtype=float),
                    -np.asarray(A0, dtype=float))
        return replace(P, S=S_neg, label=f"{P.label}(-S)")
    r0, p0, A0 = P.S
    return replace(P, S=(-float(r0), -np.asarray(p0, dtype=float),
                         -np.asarray(A0, dtype=float)), label=f"{P.label}(-S)")


# ---------------------------------------------------------------------------
# pushing subequations through maps


def _is_zero_tensor(L) -> bool:
    return (not callable(L)) and np.all(np.asarray(L) == 0.0)


def _is_zero_translation(S) -> bool:
    if callable(S):
        return False
    r0, p0, A0 = S
    return float(r0) == 0.0 and np.all(np.asarray(p0) == 0.0) \
        and np.all(np.asarray(A0) == 0.0)


def transform_subequation(F: Subequation, Psi: AffineJetMap) -> Subequation:
    """The image set Psi(F): membership of J tests F at Psi^{-1}(J).

    Flags are recomputed conservatively: properties are kept only when the
    map provably preserves them (no gradient fill-in for pure second-order,
    no translation for the cone property).
    """
    if F.n != Psi.n:
        raise DimensionMismatch("map and subequation dimensions differ")
    inv = invert(Psi)
    base = F.rho_batch
    x_dep = F.x_dependent or Psi.x_dependent

    if x_dep:
        def rho(r, p, A, x):
            rr, pp, AA = apply_batch(inv, r, p, A, x=x)
            if F.x_dependent:
                return base(rr, pp, AA, x)
            return base(rr, pp, AA)
    else:
        def rho(r, p, A):
            rr, pp, AA = apply_batch(inv, r, p, A)
            return base(rr, pp, AA)

    pso = F.pure_second_order and _is_zero_tensor(Psi.L)
    cone = F.cone and _is_zero_translation(Psi.S) and not Psi.x_dependent
    return Subequation(F.n, rho, f"{Psi.label}({F.label})",
                       pure_second_order=pso, reduced=F.reduced,
                       cone=cone, x_dependent=x_dep)


# ---------------------------------------------------------------------------
# stock constructions


def inhom_branch(k: int, n: int, f: Callable) -> Subequation:
    """Constraint set whose boundary is {k-th Hessian eigenvalue = f(x)}.

    ``f`` takes batched base points (N, n) and returns (N,).  Built as a
    translate of the homogeneous branch by (0, 0, f(x) Id).
    """
    from .catalog import make_branch

    def S(x, _f=f):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        N = len(x)
        fx = np.asarray(_f(x), dtype=float)
        A0 = fx[:, None, None] * np.eye(n)[None, :, :]
        return np.zeros(N), np.zeros((N, n)), A0

    Psi = AffineJetMap.translation(S, n=n, label=f"inhom:k={k}")
    return transform_subequation(make_branch("real", k, n), Psi)


def calabi_yau_map(h: Union[float, Callable], n: int) -> AffineJetMap:
    """(r, p, A) -> (r, p, h^2 A + (h^2 - 1) I), with h scalar or a field."""
    if callable(h):
        def h_mat(x, _h=h):
            x = np.atleast_2d(np.asarray(x, dtype=float))
            hv = np.asarray(_h(x), dtype=float)
            return hv[:, None, None] * np.eye(n)[None, :, :]

        def S(x, _h=h):
            x = np.atleast_2d(np.asarray(x, dtype=float))
            N = len(x)
            hv = np.asarray(_h(x), dtype=float)
            A0 = (hv ** 2 - 1.0)[:, None, None] * np.eye(n)[None, :, :]
            return np.zeros(N), np.zeros((N, n)), A0

        return AffineJetMap(n, np.eye(n), h_mat, np.zeros((n, n, n)), S,
                            label="cy-map")
    hv = float(h)
    if hv == 0.0:
        raise ConfigError("conformal factor h must be nonzero")
    return AffineJetMap(n, np.eye(n), hv * np.eye(n), np.zeros((n, n, n)),
                        (0.0, np.zeros(n), (hv ** 2 - 1.0) * np.eye(n)),
                        label="cy-map")


def complex_calabi_yau(m: int) -> Subequation:
    """Determinant-form constraint on R^{2m}: the hermitian part of A plus
    the identity must be positive with complex determinant at least one."""
    structure = ComplexStructure.standard_complex(m)
    amb = 2 * m

    def rho(r, p, A, _s=structure):
        H = hermitian_part_batch(np.asarray(A, dtype=float), _s)
        B = H + np.eye(amb)[None, :, :]
        eigs = np.linalg.eigvalsh(B)
        detc = eigs[:, 0::2].prod(axis=1)   # one copy of each doubled value
        return np.minimum(eigs[:, 0], detc - 1.0)

    return Subequation(amb, rho, f"cy-complex:n={m}")
