"""Constructors for the named subequations and monotonicity cones.

Every entry authors its defining function so that the represented closed set
is {rho >= 0} and the interior is {rho > 0} (the registration contract).
Batch evaluation uses the LAPACK symmetric eigensolver; the Jacobi routine in
``linalg`` is the scalar routine of record and the two are cross-checked in
the test suite.

Known caveat, documented once here: the k-Laplacian entries use the raw
polynomial rho = |p|^2 tr A + (k-2) p^t A p, which vanishes identically on
the degenerate fiber p = 0.  On that fiber {rho >= 0} is a proper superset
of the closure of {rho > 0}; everywhere else the contract holds.  The grid
solver carries a dedicated update rule for these fibers.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError, DimensionMismatch, GeometryError
from .core import Jet, Subequation
from .linalg import (ComplexStructure, SymMatrix, hermitian_part_batch,
                     eigvalsh_batch)

_EIG = eigvalsh_batch


def _as_batch(A) -> np.ndarray:
    return np.asarray(A, dtype=float)


def _trace(A) -> np.ndarray:
    return np.einsum("nii->n", _as_batch(A))


def _esym_batch(eigs: np.ndarray, kmax: int) -> np.ndarray:
    """Elementary symmetric polynomials e_0..e_kmax of each eigenvalue row."""
    N, n = eigs.shape
    e = np.zeros((N, kmax + 1))
    e[:, 0] = 1.0
    for i in range(n):
        x = eigs[:, i]
        top = min(kmax, i + 1)
        for j in range(top, 0, -1):
            e[:, j] += x * e[:, j - 1]
    return e


# ---------------------------------------------------------------------------
# plane families and directional cones


@dataclass(frozen=True)
class GrassmannSet:
    """Finite list of orthonormal p-frames standing in for a compact family
    of p-planes.  A finite min is an outer approximation of the full set's
    subequation: the represented constraint set can only get larger.
    """

    p: int
    frames: tuple  # of (n, p) arrays with orthonormal columns

    def __post_init__(self):
        if not self.frames:
            raise GeometryError("empty frame list")
        fr = tuple(np.asarray(W, dtype=float) for W in self.frames)
        n = fr[0].shape[0]
        for W in fr:
            if W.shape != (n, self.p):
                raise DimensionMismatch(f"frame shape {W.shape}, want ({n},{self.p})")
            G = W.T @ W
            if np.max(np.abs(G - np.eye(self.p))) > 1e-10:
                raise GeometryError("frame not orthonormal to 1e-10")
        object.__setattr__(self, "frames", fr)

    @property
    def n(self) -> int:
        return self.frames[0].shape[0]

    @property
    def stack(self) -> np.ndarray:
        return np.stack(self.frames)  # (F, n, p)


def grassmann_sample(p: int, n: int, count: int = 256) -> GrassmannSet:
    """Deterministic frame sample of the full Grassmannian G(p, R^n).

    Lines (p=1) get golden-angle samples of the (half-)sphere; general p
    orthonormalizes rows of a fixed-seed Sobol stream.  Same inputs, same
    frames, every run.
    """
    if not (1 <= p <= n):
        raise ConfigError(f"plane dimension {p} out of range for n={n}")
    if p == n:
        return GrassmannSet(p, (np.eye(n),))
    if p == 1 and n == 2:
        th = np.pi * (np.arange(count) + 0.5) / count
        frames = tuple(np.array([[np.cos(t)], [np.sin(t)]]) for t in th)
        return GrassmannSet(1, frames)
    if p == 1 and n == 3:
        # golden-angle spiral on the upper hemisphere (lines are antipodal)
        i = np.arange(count) + 0.5
        z = i / count
        phi = i * np.pi * (3.0 - np.sqrt(5.0))
        s = np.sqrt(1.0 - z ** 2)
        frames = tuple(
            np.array([[s[j] * np.cos(phi[j])], [s[j] * np.sin(phi[j])], [z[j]]])
            for j in range(count))
        return GrassmannSet(1, frames)
    from scipy.stats import qmc
    from scipy.special import ndtri
    eng = qmc.Sobol(d=n * p, scramble=True, seed=0)
    U = eng.random(count)
    Z = ndtri(np.clip(U, 1e-12, 1 - 1e-12)).reshape(count, n, p)
    Q, _ = np.linalg.qr(Z)
    return GrassmannSet(p, tuple(Q[i] for i in range(count)))


@dataclass(frozen=True)
class DirectionalCone:
    """Convex directional cone D in R^n with a margin function.

    Stored as a finite generator list (conic hull) plus, when available,
    exact analytic data:

    * built via :func:`circular` -- margin <u, p> - cos(theta) |p| is exact;
    * n = 2 generator pairs -- the two edge half-planes are exact;
    * n >= 3 generator lists -- facet normals from the convex hull of
      {0} by the generators; exact for polyhedral hulls.
    """

    generators: np.ndarray            # (k, n) unit rows
    _halfspaces: Optional[np.ndarray] = None   # (m, n) inward unit normals
    _axis: Optional[np.ndarray] = None
    _cos_half: Optional[float] = None

    @property
    def n(self) -> int:
        return self.generators.shape[1]

    def margin_batch(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self._axis is not None:
            norms = np.linalg.norm(p, axis=-1)
            return p @ self._axis - self._cos_half * norms
        if self._halfspaces is None or len(self._halfspaces) == 0:
            return np.linalg.norm(p, axis=-1)   # whole space / halfspace hull
        return (p @ self._halfspaces.T).min(axis=-1)

    def margin(self, p) -> float:
        return float(self.margin_batch(np.asarray(p, dtype=float)[None, :])[0])

    def sample(self, rng: np.random.Generator, size: int,
               radius: float = 5.0) -> np.ndarray:
        """Points of D with |p| <= radius (not uniform; full angular cover)."""
        if self._axis is not None:
            th = np.arccos(np.clip(self._cos_half, -1, 1))
            u = self._axis
            n = self.n
            raw = rng.standard_normal((size, n))
            raw -= np.outer(raw @ u, u)
            nrm = np.linalg.norm(raw, axis=1, keepdims=True)
            nrm[nrm == 0] = 1.0
            perp = raw / nrm
            ang = th * rng.uniform(0.0, 1.0, size) ** (1.0 / max(n - 1, 1))
            dirs = np.cos(ang)[:, None] * u + np.sin(ang)[:, None] * perp
        else:
            w = rng.dirichlet(np.ones(len(self.generators)), size)
            dirs = w @ self.generators
            nrm = np.linalg.norm(dirs, axis=1, keepdims=True)
            nrm[nrm == 0] = 1.0
            dirs = dirs / nrm
        r = radius * rng.uniform(0.0, 1.0, size) ** (1.0 / self.n)
        return dirs * r[:, None]


def _cone_halfspaces(gens: np.ndarray) -> np.ndarray:
    """Inward unit facet normals of cone(gens), via the hull of {0} u gens."""
    n = gens.shape[1]
    if n == 2:
        # planar sector: edges are the two extreme generators
        ang = np.arctan2(gens[:, 1], gens[:, 0])
        ref = ang[0]
        rel = np.mod(ang - ref + np.pi, 2 * np.pi) - np.pi
        lo, hi = rel.min(), rel.max()
        if hi - lo >= np.pi:
            raise GeometryError("generator spread >= pi; not a salient sector")
        rot = np.array([[0.0, -1.0], [1.0, 0.0]])   # +90 degrees
        e_lo = np.array([np.cos(ref + lo), np.sin(ref + lo)])
        e_hi = np.array([np.cos(ref + hi), np.sin(ref + hi)])
        return np.stack([rot @ e_lo, -(rot @ e_hi)])
    from scipy.spatial import ConvexHull
    pts = np.vstack([np.zeros(n), gens])
    hull = ConvexHull(pts)
    eqs = hull.equations   # normal . x + offset <= 0 inside
    through0 = np.abs(eqs[:, -1]) <= 1e-12
    normals = -eqs[through0, :-1]
    if len(normals) == 0:
        return np.zeros((0, n))
    # dedupe
    keep = []
    for v in normals:
        if not any(np.allclose(v, w, atol=1e-10) for w in keep):
            keep.append(v)
    return np.asarray(keep)


def directional_cone(generators) -> DirectionalCone:
    gens = np.asarray(generators, dtype=float)
    if gens.ndim != 2:
        raise GeometryError("generators must be a list of vectors")
    nrm = np.linalg.norm(gens, axis=1)
    if np.any(nrm < 1e-12):
        raise GeometryError("zero generator")
    gens = gens / nrm[:, None]
    n = gens.shape[1]
    if np.linalg.matrix_rank(gens, tol=1e-10) < n:
        raise GeometryError("generators do not span; cone has empty interior")
    hs = _cone_halfspaces(gens)
    cone = DirectionalCone(gens, _halfspaces=hs)
    centroid = gens.mean(axis=0)
    if cone.margin(centroid) <= 0:
        raise GeometryError("generator centroid not interior; degenerate cone")
    return cone


def circular_cone(axis, half_angle: float, count: int = 16) -> DirectionalCone:
    """Round cone about ``axis`` with the given half-angle (radians)."""
    u = np.asarray(axis, dtype=float)
    nu = np.linalg.norm(u)
    if nu < 1e-12:
        raise GeometryError("zero axis")
    u = u / nu
    if not (0 < half_angle < np.pi / 2):
        raise GeometryError("half-angle must lie in (0, pi/2)")
    n = len(u)
    # ring of generators for the record; margin uses the exact axis form
    rng = np.random.default_rng(12345)
    gens = [u]
    for i in range(count - 1):
        raw = rng.standard_normal(n)
        raw -= (raw @ u) * u
        nr = np.linalg.norm(raw)
        if nr < 1e-12:
            continue
        gens.append(np.cos(half_angle) * u + np.sin(half_angle) * raw / nr)
    return DirectionalCone(np.asarray(gens), _axis=u,
                           _cos_half=float(np.cos(half_angle)))


# ---------------------------------------------------------------------------
# samplers shared by the cone constructors


def _haar_psd(rng: np.random.Generator, n: int, size: int,
              eig_lo: float = 0.0, eig_hi: float = 5.0) -> np.ndarray:
    G = rng.standard_normal((size, n, n))
    Q, R = np.linalg.qr(G)
    sgn = np.sign(np.einsum("nii->ni", R))
    sgn[sgn == 0] = 1.0
    Q = Q * sgn[:, None, :]
    eigs = rng.uniform(eig_lo, eig_hi, (size, n))
    A = np.einsum("nij,nj,nkj->nik", Q, eigs, Q)
    return 0.5 * (A + np.swapaxes(A, 1, 2))


def _ball(rng: np.random.Generator, n: int, size: int,
          radius: float = 5.0) -> np.ndarray:
    d = rng.standard_normal((size, n))
    d /= np.maximum(np.linalg.norm(d, axis=1, keepdims=True), 1e-300)
    r = radius * rng.uniform(0.0, 1.0, size) ** (1.0 / n)
    return d * r[:, None]


# ---------------------------------------------------------------------------
# branches of the Monge-Ampere operator over R, C, H


def make_branch(kind: str, k: int, n: int) -> Subequation:
    """Branch {k-th ordered eigenvalue >= 0} of det over the scalar field.

    ``n`` counts eigenvalues over the field; the ambient real dimension is
    n, 2n, 4n for kind real, complex, quaternionic.  Field eigenvalues are
    read off the real spectrum of the hermitian symmetric part, which
    repeats each of them 2 (complex) or 4 (quaternionic) times.
    """
    if not (1 <= k <= n):
        raise ConfigError(f"branch index k={k} out of range 1..{n}")
    if kind == "real":
        amb = n
        idx = k - 1

        def rho(r, p, A):
            return _EIG(_as_batch(A))[:, idx]
        label = f"branch:real:k={k}:n={n}"
    elif kind in ("complex", "quaternionic"):
        if kind == "complex":
            structure = ComplexStructure.standard_complex(n)
            mult = 2
        else:
            structure = ComplexStructure.standard_quaternionic(n)
            mult = 4
        amb = mult * n
        idx = mult * (k - 1)

        def rho(r, p, A, _s=structure, _i=idx):
            H = hermitian_part_batch(_as_batch(A), _s)
            return _EIG(H)[:, _i]
        label = f"branch:{kind}:k={k}:n={n}"
    else:
        raise ConfigError(f"unknown branch kind {kind!r}")
    return Subequation(amb, rho, label, pure_second_order=True,
                       reduced=True, cone=True)


def make_pcone(p: float, n: int) -> Subequation:
    """Partial-trace cone: lowest floor(p) eigenvalues plus the fractional
    piece of the next one.  Integer p is the trace over the worst p-plane.

    The fractional index is read as floor(p)+1 (ascending order), the
    reading that matches the integer case on both sides.
    """
    if not (1 <= p <= n):
        raise ConfigError(f"p={p} out of range [1, {n}]")
    m = int(math.floor(p))
    frac = p - m

    def rho(r, pg, A):
        eigs = _EIG(_as_batch(A))
        s = eigs[:, :m].sum(axis=1)
        if frac > 0:
            s = s + frac * eigs[:, m]
        return s

    return Subequation(n, rho, f"pcone:p={p:g}:n={n}",
                       pure_second_order=True, reduced=True, cone=True)


def make_pbranch(k: int, p: int, n: int) -> Subequation:
    """k-th branch of the p-plane trace operator: k-th smallest sum of p
    distinct eigenvalues (integer p only)."""
    if not (1 <= p <= n) or p != int(p):
        raise ConfigError(f"pbranch needs integer p in 1..{n}, got {p}")
    combos = np.array(list(itertools.combinations(range(n), int(p))))
    nb = len(combos)
    if not (1 <= k <= nb):
        raise ConfigError(f"branch index k={k} out of range 1..{nb}")

    def rho(r, pg, A):
        eigs = _EIG(_as_batch(A))
        sums = eigs[:, combos].sum(axis=2)
        sums.sort(axis=1)
        return sums[:, k - 1]

    return Subequation(n, rho, f"pbranch:k={k}:p={p}:n={n}",
                       pure_second_order=True, reduced=True, cone=True)


# ---------------------------------------------------------------------------
# uniformly elliptic cones


def make_uniformly_elliptic(kind: str, n: int, lam: float = None,
                            Lam: float = None, d: float = None) -> Subequation:
    """Pucci extremal cone or the delta-trace-regularized positivity cone."""
    if kind == "pucci":
        if lam is None or Lam is None or not (0 < lam < Lam):
            raise ConfigError(f"need 0 < lam < Lam, got lam={lam}, Lam={Lam}")

        def rho(r, p, A, _l=float(lam), _L=float(Lam)):
            eigs = _EIG(_as_batch(A))
            pos = np.clip(eigs, 0.0, None).sum(axis=1)
            neg = np.clip(eigs, None, 0.0).sum(axis=1)
            return _l * pos + _L * neg

        def sampler(rng, size, _l=float(lam), _L=float(Lam)):
            # eigenvalue profiles resampled until the Pucci value clears 0
            out = []
            got = 0
            while got < size:
                m = 4 * (size - got) + 64
                A = _haar_psd(rng, n, m, eig_lo=-5.0, eig_hi=5.0)
                eigs = _EIG(A)
                v = _l * np.clip(eigs, 0, None).sum(1) + _L * np.clip(eigs, None, 0).sum(1)
                A = A[v >= 0]
                out.append(A)
                got += len(A)
            A = np.concatenate(out)[:size]
            return rng.uniform(-5, 5, size), _ball(rng, n, size), A

        return Subequation(n, rho, f"pucci:lam={lam:g}:Lam={Lam:g}:n={n}",
                           pure_second_order=True, reduced=True, cone=True,
                           member_sampler=sampler)
    if kind == "delta":
        if d is None or d <= 0:
            raise ConfigError(f"need d > 0, got {d}")

        def rho(r, p, A, _d=float(d)):
            eigs = _EIG(_as_batch(A))
            return eigs[:, 0] + _d * eigs.sum(axis=1)

        return Subequation(n, rho, f"delta:d={d:g}:n={n}",
                           pure_second_order=True, reduced=True, cone=True)
    raise ConfigError(f"unknown uniformly elliptic kind {kind!r}")


def make_delta_branch(k: int, d: float, n: int) -> Subequation:
    """Branch {lambda_k(A) + d tr A >= 0} of the trace-regularized operator."""
    if not (1 <= k <= n):
        raise ConfigError(f"branch index k={k} out of range 1..{n}")
    if d <= 0:
        raise ConfigError(f"need d > 0, got {d}")

    def rho(r, p, A, _d=float(d), _i=k - 1):
        eigs = _EIG(_as_batch(A))
        return eigs[:, _i] + _d * eigs.sum(axis=1)

    return Subequation(n, rho, f"deltabranch:k={k}:d={d:g}:n={n}",
                       pure_second_order=True, reduced=True, cone=True)


# ---------------------------------------------------------------------------
# named families


def make_named(name: str, n: int, **params) -> Subequation:
    """Family constructor; see the individual branches for the formulas."""
    if name == "laplace":
        def rho(r, p, A):
            return _trace(A)
        return Subequation(n, rho, f"laplace:n={n}", pure_second_order=True,
                           reduced=True, cone=True)

    if name == "sigma_k":
        k = int(params["k"])
        if not (1 <= k <= n):
            raise ConfigError(f"sigma_k needs 1 <= k <= n, got k={k}")
        scales = np.array([math.comb(n, l) for l in range(1, k + 1)], dtype=float)

        def rho(r, p, A, _k=k, _sc=scales):
            eigs = _EIG(_as_batch(A))
            e = _esym_batch(eigs, _k)
            return (e[:, 1:_k + 1] / _sc[None, :]).min(axis=1)

        return Subequation(n, rho, f"sigma:k={k}:n={n}",
                           pure_second_order=True, reduced=True, cone=True)

    if name == "special_lagrangian":
        c = float(params.get("c", 0.0))
        if abs(c) >= n * np.pi / 2:
            raise ConfigError(f"phase |c|={abs(c):g} >= n*pi/2; set is trivial")

        def rho(r, p, A, _c=c):
            eigs = _EIG(_as_batch(A))
            return np.arctan(eigs).sum(axis=1) - _c

        return Subequation(n, rho, f"slag:c={c:g}:n={n}",
                           pure_second_order=True, reduced=True, cone=False)

    if name == "calabi_yau":
        def rho(r, p, A):
            eigs = _EIG(_as_batch(A))
            tr = eigs.sum(axis=1)
            return np.minimum(tr + n - np.exp(np.asarray(r, dtype=float)),
                              eigs[:, 0] + 1.0)
        return Subequation(n, rho, f"cy:n={n}")

    if name == "k_laplacian":
        k = params["k"]
        if isinstance(k, str) and k.lower() in ("inf", "infinity"):
            k = math.inf
        k = float(k)
        if not (k >= 1):
            raise ConfigError(f"k-Laplacian needs k >= 1, got {k}")
        if math.isinf(k):
            def rho(r, p, A):
                p = np.asarray(p, dtype=float)
                return np.einsum("ni,nij,nj->n", p, _as_batch(A), p)
            label = f"klap:k=inf:n={n}"
        else:
            def rho(r, p, A, _k=k):
                p = np.asarray(p, dtype=float)
                A = _as_batch(A)
                pp = np.einsum("ni,ni->n", p, p)
                pAp = np.einsum("ni,nij,nj->n", p, A, p)
                return pp * _trace(A) + (_k - 2.0) * pAp
            label = f"klap:k={k:g}:n={n}"
        return Subequation(n, rho, label, reduced=True, cone=True)

    if name == "geometric":
        G: GrassmannSet = params["G"]
        if G.n != n:
            raise DimensionMismatch(f"frames live in R^{G.n}, not R^{n}")
        W = G.stack  # (F, n, p)

        def rho(r, p, A, _W=W):
            vals = np.einsum("fip,nij,fjp->nf", _W, _as_batch(A), _W)
            return vals.min(axis=1)

        return Subequation(n, rho, f"geom:p={G.p}:n={n}:frames={len(G.frames)}",
                           pure_second_order=True, reduced=True, cone=True)

    raise ConfigError(f"unknown family {name!r}")


# ---------------------------------------------------------------------------
# basic monotonicity cones (the six stock cases)


def make_monotonicity_cone(case: int, n: int, gamma: float = None,
                           D: DirectionalCone = None, lam: float = None,
                           R: float = None,
                           directions: int = 64) -> Subequation:
    """The stock convex monotonicity cones, numbered 1-6.

    1. A >= 0 only.
    2. r <= 0 and A >= 0.
    3. r <= 0, p in D, A >= 0.
    4. r <= -gamma |p|, p in D, A >= 0.
    5. <Ae, e> >= lam |<p, e>| for all unit e  (min over a 64-direction
       sample plus the eigenvector frame of A and the p-direction; the
       sampled min is an outer approximation).
    6. A >= (|p|/R) Id, written exactly as lambda_1(A) - |p|/R.

    Cases 3 and 4 need a :class:`DirectionalCone`; 4 needs gamma > 0;
    5 needs lam >= 0; 6 needs R > 0.  All carry direct member samplers so
    rejection never has to fight thin acceptance regions.
    """
    if case == 1:
        def rho(r, p, A):
            return _EIG(_as_batch(A))[:, 0]

        def sampler(rng, size):
            return (rng.uniform(-5, 5, size), _ball(rng, n, size),
                    _haar_psd(rng, n, size))
        return Subequation(n, rho, f"appb:case=1:n={n}", pure_second_order=True,
                           reduced=True, cone=True, member_sampler=sampler)

    if case == 2:
        def rho(r, p, A):
            return np.minimum(-np.asarray(r, dtype=float),
                              _EIG(_as_batch(A))[:, 0])

        def sampler(rng, size):
            return (-rng.uniform(0, 5, size), _ball(rng, n, size),
                    _haar_psd(rng, n, size))
        return Subequation(n, rho, f"appb:case=2:n={n}", cone=True,
                           member_sampler=sampler)

    if case == 3:
        if D is None:
            raise ConfigError("case 3 needs a directional cone D")
        if D.n != n:
            raise DimensionMismatch("directional cone dimension mismatch")

        def rho(r, p, A, _D=D):
            return np.minimum(np.minimum(-np.asarray(r, dtype=float),
                                         _D.margin_batch(p)),
                              _EIG(_as_batch(A))[:, 0])

        def sampler(rng, size, _D=D):
            return (-rng.uniform(0, 5, size), _D.sample(rng, size),
                    _haar_psd(rng, n, size))
        return Subequation(n, rho, f"appb:case=3:n={n}", cone=True,
                           member_sampler=sampler)

    if case == 4:
        if D is None:
            raise ConfigError("case 4 needs a directional cone D")
        if D.n != n:
            raise DimensionMismatch("directional cone dimension mismatch")
        if gamma is None or gamma <= 0:
            raise ConfigError(f"case 4 needs gamma > 0, got {gamma}")

        def rho(r, p, A, _D=D, _g=float(gamma)):
            p = np.asarray(p, dtype=float)
            head = -np.asarray(r, dtype=float) - _g * np.linalg.norm(p, axis=-1)
            return np.minimum(np.minimum(head, _D.margin_batch(p)),
                              _EIG(_as_batch(A))[:, 0])

        def sampler(rng, size, _D=D, _g=float(gamma)):
            p = _D.sample(rng, size)
            r = -_g * np.linalg.norm(p, axis=1) - rng.uniform(0, 5, size)
            return r, p, _haar_psd(rng, n, size)
        return Subequation(n, rho, f"appb:case=4:n={n}:gamma={gamma:g}",
                           cone=True, member_sampler=sampler)

    if case == 5:
        if lam is None or lam < 0:
            raise ConfigError(f"case 5 needs lam >= 0, got {lam}")
        from .core import _unit_sphere_qmc
        E = _unit_sphere_qmc(n, directions, seed=0)   # (K, n)

        def rho(r, p, A, _E=E, _l=float(lam)):
            p = np.asarray(p, dtype=float)
            A = _as_batch(A)
            quad = np.einsum("ki,nij,kj->nk", _E, A, _E)
            lin = np.abs(p @ _E.T)
            vals = (quad - _l * lin).min(axis=1)
            # tighten with the eigenvector frame of each A ...
            w, V = np.linalg.eigh(A)
            lin_v = np.abs(np.einsum("ni,nik->nk", p, V))
            vals = np.minimum(vals, (w - _l * lin_v).min(axis=1))
            # ... and the direction of p itself
            nrm = np.linalg.norm(p, axis=-1)
            ok = nrm > 1e-300
            if np.any(ok):
                ph = p[ok] / nrm[ok][:, None]
                quad_p = np.einsum("mi,mij,mj->m", ph, A[ok], ph)
                vals[ok] = np.minimum(vals[ok], quad_p - _l * nrm[ok])
            return vals

        def sampler(rng, size, _l=float(lam)):
            # inner recipe: lambda_1(A) >= lam |p| certifies membership
            p = _ball(rng, n, size)
            lo = _l * np.linalg.norm(p, axis=1)
            A = _haar_psd(rng, n, size, eig_lo=0.0, eig_hi=1.0)
            A = A + lo[:, None, None] * np.eye(n)[None, :, :]
            return rng.uniform(-5, 5, size), p, A
        return Subequation(n, rho, f"appb:case=5:n={n}:lam={lam:g}",
                           reduced=True, cone=True, member_sampler=sampler)

    if case == 6:
        if R is None or R <= 0:
            raise ConfigError(f"case 6 needs R > 0, got {R}")

        def rho(r, p, A, _R=float(R)):
            p = np.asarray(p, dtype=float)
            return _EIG(_as_batch(A))[:, 0] - np.linalg.norm(p, axis=-1) / _R

        def sampler(rng, size, _R=float(R)):
            p = _ball(rng, n, size)
            lo = np.linalg.norm(p, axis=1) / _R
            A = _haar_psd(rng, n, size, eig_lo=0.0, eig_hi=1.0)
            A = A + lo[:, None, None] * np.eye(n)[None, :, :]
            return rng.uniform(-5, 5, size), p, A
        return Subequation(n, rho, f"appb:case=6:n={n}:R={R:g}",
                           reduced=True, cone=True, member_sampler=sampler)

    raise ConfigError(f"monotonicity cone case must be 1..6, got {case}")


# ---------------------------------------------------------------------------
# obstacle fusion


def make_obstacle(F: Subequation, g: Callable) -> Subequation:
    """Fuse the pointwise bound u <= g into a reduced subequation.

    rho_H(x, (r,p,A)) = min(g(x) - r, rho_F(p, A)).  Members satisfy both
    constraints; the resulting subequation reads the base point.
    """
    if not (F.reduced or F.pure_second_order):
        raise ConfigError(f"{F.label} is not reduced; obstacle undefined")
    base = F.rho_batch

    def rho(r, p, A, x, _g=g):
        gx = np.asarray(_g(np.asarray(x, dtype=float)), dtype=float)
        return np.minimum(gx - np.asarray(r, dtype=float), base(r, p, A))

    return Subequation(F.n, rho, f"obstacle({F.label})", x_dependent=True)


# ---------------------------------------------------------------------------
# string registry: "family:key=value:..."


def _parse_params(parts: Sequence[str]) -> dict:
    out = {}
    for part in parts:
        if "=" not in part:
            raise ConfigError(f"malformed parameter {part!r}")
        key, val = part.split("=", 1)
        out[key] = val
    return out


def _num(s: str) -> float:
    if s.lower() in ("inf", "infinity"):
        return math.inf
    try:
        return float(s)
    except ValueError as exc:
        raise ConfigError(f"bad number {s!r}") from exc


def parse_name(name: str) -> Subequation:
    """Resolve a catalog name like ``branch:real:k=1:n=2`` to a subequation.

    Families: laplace, branch:{real,complex,quaternionic}, pcone, pbranch,
    pucci, delta, deltabranch, sigma, slag, cy, klap, geom, appb.
    """
    parts = name.split(":")
    fam = parts[0]
    try:
        if fam == "laplace":
            kv = _parse_params(parts[1:])
            return make_named("laplace", int(kv["n"]))
        if fam == "branch":
            kind = parts[1]
            kv = _parse_params(parts[2:])
            return make_branch(kind, int(kv["k"]), int(kv["n"]))
        if fam == "pcone":
            kv = _parse_params(parts[1:])
            return make_pcone(_num(kv["p"]), int(kv["n"]))
        if fam == "pbranch":
            kv = _parse_params(parts[1:])
            return make_pbranch(int(kv["k"]), int(kv["p"]), int(kv["n"]))
        if fam == "pucci":
            kv = _parse_params(parts[1:])
            return make_uniformly_elliptic("pucci", int(kv["n"]),
                                           lam=_num(kv["lam"]),
                                           Lam=_num(kv["Lam"]))
        if fam == "delta":
            kv = _parse_params(parts[1:])
            return make_uniformly_elliptic("delta", int(kv["n"]), d=_num(kv["d"]))
        if fam == "deltabranch":
            kv = _parse_params(parts[1:])
            return make_delta_branch(int(kv["k"]), _num(kv["d"]), int(kv["n"]))
        if fam == "sigma":
            kv = _parse_params(parts[1:])
            return make_named("sigma_k", int(kv["n"]), k=int(kv["k"]))
        if fam == "slag":
            kv = _parse_params(parts[1:])
            return make_named("special_lagrangian", int(kv["n"]),
                              c=_num(kv.get("c", "0")))
        if fam == "cy":
            kv = _parse_params(parts[1:])
            return make_named("calabi_yau", int(kv["n"]))
        if fam == "klap":
            kv = _parse_params(parts[1:])
            return make_named("k_laplacian", int(kv["n"]), k=kv["k"])
        if fam == "geom":
            kv = _parse_params(parts[1:])
            n = int(kv["n"])
            G = grassmann_sample(int(kv["p"]), n,
                                 count=int(kv.get("frames", "256")))
            return make_named("geometric", n, G=G)
        if fam == "appb":
            kv = _parse_params(parts[1:])
            case = int(kv["case"])
            n = int(kv["n"])
            D = None
            if case in (3, 4):
                axis = np.zeros(n)
                axis[0] = 1.0
                if "axis" in kv:
                    axis = np.asarray([_num(t) for t in kv["axis"].split(",")])
                angle = math.radians(_num(kv.get("angle", "45")))
                D = circular_cone(axis, angle)
            return make_monotonicity_cone(
                case, n, gamma=_num(kv["gamma"]) if "gamma" in kv else None,
                D=D, lam=_num(kv["lam"]) if "lam" in kv else None,
                R=_num(kv["R"]) if "R" in kv else None)
    except KeyError as exc:
        raise ConfigError(f"{name!r}: missing parameter {exc}") from exc
    raise ConfigError(f"unknown catalog family {fam!r}")


#: names whose dual is itself a catalog entry, used by the CLI dual-test
DUAL_PAIRS = {
    "laplace": lambda kv: f"laplace:n={kv['n']}",
    "branch": None,   # handled structurally: dual of k is n-k+1
    "klap": lambda kv: f"klap:k={kv['k']}:n={kv['n']}",
}


def dual_name(name: str) -> Optional[str]:
    """Catalog name of the dual, when the dual is itself a stock entry."""
    parts = name.split(":")
    fam = parts[0]
    if fam == "branch":
        kind = parts[1]
        kv = _parse_params(parts[2:])
        k, n = int(kv["k"]), int(kv["n"])
        return f"branch:{kind}:k={n - k + 1}:n={n}"
    if fam == "laplace":
        return name
    if fam == "klap":
        return name
    if fam == "slag":
        kv = _parse_params(parts[1:])
        c = _num(kv.get("c", "0"))
        n = int(kv["n"])
        return f"slag:c={-c:g}:n={n}"
    return None
