"""Jets, subequations, Dirichlet duality and the sampled axiom checks.

A 2-jet is a triple J = (r, p, A) in R x R^n x Sym2(R^n).  A subequation is
a closed constraint set F = {rho >= 0} cut out by a continuous defining
function rho, required (and sampledly checked, never assumed) to satisfy

    (P)  F + (0, 0, A>=0) subset F        degenerate ellipticity
    (N)  F + (r<=0, 0, 0) subset F        properness in the value slot

with the additional registration contract that {rho > 0} is the interior
of F.  The Dirichlet dual is computed on defining functions,

    rho~(x, J) = -rho(x, -J),

which realizes ~(-Int F) and is an involution.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import DimensionMismatch, SamplerExhausted
from .linalg import SymMatrix

DEFAULT_EPS_B = 1e-9
REJECTION_CAP = 10 ** 6


# ---------------------------------------------------------------------------
# jets


@dataclass(frozen=True)
class Jet:
    """2-jet (r, p, A): value, gradient, symmetric second-derivative part."""

    r: float
    p: np.ndarray
    A: SymMatrix

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (self.A.n,):
            raise DimensionMismatch(
                f"gradient shape {p.shape} vs matrix dim {self.A.n}"
            )
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "r", float(self.r))

    @property
    def n(self) -> int:
        return self.A.n

    @classmethod
    def zero(cls, n: int) -> "Jet":
        return cls(0.0, np.zeros(n), SymMatrix.zero(n))

    @classmethod
    def from_parts(cls, r=0.0, p=None, A=None, n: Optional[int] = None) -> "Jet":
        if A is None:
            if n is None:
                raise DimensionMismatch("need A or n")
            A = SymMatrix.zero(n)
        elif not isinstance(A, SymMatrix):
            A = SymMatrix.from_dense(A)
        if p is None:
            p = np.zeros(A.n)
        return cls(float(r), np.asarray(p, dtype=float), A)

    def __add__(self, other: "Jet") -> "Jet":
        if other.n != self.n:
            raise DimensionMismatch(
                f"jet dimensions differ: {self.n} vs {other.n}")
        return Jet(self.r + other.r, self.p + other.p, self.A + other.A)

    def __sub__(self, other: "Jet") -> "Jet":
        return self + (-other)

    def __neg__(self) -> "Jet":
        return Jet(-self.r, -self.p, -self.A)

    def scale(self, t: float) -> "Jet":
        return Jet(t * self.r, t * self.p, self.A.scale(t))

    def to_json_dict(self) -> dict:
        return {"r": self.r, "p": self.p.tolist(), "A": self.A.mat.tolist()}


@dataclass(frozen=True)
class JetNorm:
    """Weighted jet norm sqrt((w_r r)^2 + (w_p |p|)^2 + (w_A |A|_F)^2)."""

    w_r: float = 1.0
    w_p: float = 1.0
    w_A: float = 1.0

    def __call__(self, jet: Jet) -> float:
        fro = float(np.linalg.norm(jet.A.mat))
        return float(np.sqrt((self.w_r * jet.r) ** 2
                             + (self.w_p * np.linalg.norm(jet.p)) ** 2
                             + (self.w_A * fro) ** 2))


# ---------------------------------------------------------------------------
# subequations

# batch defining function: (r(N,), p(N,n), A(N,n,n), x(N,n)|None) -> (N,)
RhoBatch = Callable[..., np.ndarray]


@dataclass(frozen=True)
class Subequation:
    """Constraint set {J : rho(x, J) >= 0} with structural flags.

    ``rho_batch`` is the single source of truth; scalar evaluation wraps it.
    Flags are advisory metadata used by downstream checks:

    pure_second_order  membership ignores (r, p)
    reduced            membership ignores r
    cone               rho keeps its sign along rays t J, t > 0
    x_dependent        rho reads the base point
    """

    n: int
    rho_batch: RhoBatch
    label: str
    pure_second_order: bool = False
    reduced: bool = False
    cone: bool = False
    x_dependent: bool = False
    member_sampler: Optional[Callable] = None  # (rng, size) -> (r, p, A)

    def value(self, jet: Jet, x=None) -> float:
        if jet.n != self.n:
            raise DimensionMismatch(f"jet dim {jet.n} != subequation dim {self.n}")
        r = np.array([jet.r])
        p = jet.p[None, :]
        A = jet.A.mat[None, :, :]
        xb = None if x is None else np.asarray(x, dtype=float)[None, :]
        return float(self.value_batch(r, p, A, xb)[0])

    def value_batch(self, r, p, A, x=None) -> np.ndarray:
        if self.x_dependent:
            if x is None:
                raise ValueError(f"{self.label} needs base points x")
            return np.asarray(self.rho_batch(r, p, A, x), dtype=float)
        return np.asarray(self.rho_batch(r, p, A), dtype=float)

    def with_label(self, label: str) -> "Subequation":
        return replace(self, label=label)


@dataclass(frozen=True)
class Membership:
    status: str          # "inside" | "boundary" | "outside"
    margin: float

    @property
    def in_set(self) -> bool:
        return self.status != "outside"


def classify(margin: float, eps_b: float = DEFAULT_EPS_B) -> str:
    if margin > eps_b:
        return "inside"
    if margin < -eps_b:
        return "outside"
    return "boundary"


def member(F: Subequation, jet: Jet, x=None, eps_b: float = DEFAULT_EPS_B) -> Membership:
    """Classify a jet against F with a numerical boundary band of width eps_b."""
    m = F.value(jet, x=x)
    return Membership(classify(m, eps_b), m)


def member_batch(F: Subequation, r, p, A, x=None,
                 eps_b: float = DEFAULT_EPS_B) -> np.ndarray:
    """Vectorized margins; classification is left to the caller."""
    return F.value_batch(r, p, A, x=x)


def dual(F: Subequation) -> Subequation:
    """Dirichlet dual, rho~(x, J) = -rho(x, -J).

    An involution on defining functions: dual(dual(F)) evaluates bitwise
    like F.
    """
    base = F.rho_batch

    if F.x_dependent:
        def rho_dual(r, p, A, x):
            return -base(-np.asarray(r), -np.asarray(p), -np.asarray(A), x)
    else:
        def rho_dual(r, p, A):
            return -base(-np.asarray(r), -np.asarray(p), -np.asarray(A))

    return replace(F, rho_batch=rho_dual, label=f"dual({F.label})",
                   member_sampler=None)


def shift(F: Subequation, jet0: Jet) -> Subequation:
    """Translate the constraint set: shift(F, J0) = F + J0."""
    base = F.rho_batch
    r0, p0, A0 = jet0.r, jet0.p.copy(), jet0.A.mat.copy()

    if F.x_dependent:
        def rho_shift(r, p, A, x):
            return base(np.asarray(r) - r0, np.asarray(p) - p0,
                        np.asarray(A) - A0, x)
    else:
        def rho_shift(r, p, A):
            return base(np.asarray(r) - r0, np.asarray(p) - p0,
                        np.asarray(A) - A0)

    return replace(F, rho_batch=rho_shift, label=f"shift({F.label})",
                   cone=False, member_sampler=None)


# ---------------------------------------------------------------------------
# samplers


@dataclass(frozen=True)
class JetBox:
    """Sampling box: r uniform, p uniform in a ball, A with Haar-rotated
    uniform spectrum."""

    r_lo: float = -5.0
    r_hi: float = 5.0
    p_radius: float = 5.0
    eig_lo: float = -5.0
    eig_hi: float = 5.0


def _haar_orthogonal(rng: np.random.Generator, n: int, size: int) -> np.ndarray:
    G = rng.standard_normal((size, n, n))
    Q, R = np.linalg.qr(G)
    sign = np.sign(np.einsum("nii->ni", R))
    sign[sign == 0] = 1.0
    return Q * sign[:, None, :]


def sample_jet_batch(box: JetBox, n: int, size: int,
                     rng: np.random.Generator):
    """Batch of raw jets (r, p, A) drawn from the box."""
    r = rng.uniform(box.r_lo, box.r_hi, size)
    dirs = rng.standard_normal((size, n))
    dirs /= np.maximum(np.linalg.norm(dirs, axis=1, keepdims=True), 1e-300)
    radii = box.p_radius * rng.uniform(0.0, 1.0, size) ** (1.0 / n)
    p = dirs * radii[:, None]
    Q = _haar_orthogonal(rng, n, size)
    eigs = rng.uniform(box.eig_lo, box.eig_hi, (size, n))
    A = np.einsum("nij,nj,nkj->nik", Q, eigs, Q)
    A = 0.5 * (A + np.swapaxes(A, 1, 2))
    return r, p, A


def sample_members(F: Subequation, count: int, rng: np.random.Generator,
                   box: Optional[JetBox] = None, margin_min: float = 0.0,
                   x=None, cap: int = REJECTION_CAP):
    """Rejection-sample ``count`` jets with rho >= margin_min.

    Subequations may carry a constructive ``member_sampler``; when present it
    is used instead of rejection (needed for thin cones whose rejection rate
    would exhaust the cap).
    """
    if F.member_sampler is not None:
        r, p, A = F.member_sampler(rng, count)
        return r, p, A
    box = box or JetBox()
    out_r, out_p, out_A = [], [], []
    drawn = 0
    got = 0
    chunk = max(1024, min(count * 4, 65536))
    while got < count:
        if drawn >= cap:
            raise SamplerExhausted(
                f"{F.label}: drew {drawn} jets, kept {got} < {count}"
            )
        m = min(chunk, cap - drawn)
        r, p, A = sample_jet_batch(box, F.n, m, rng)
        drawn += m
        vals = F.value_batch(r, p, A, x=None if not F.x_dependent else
                             np.repeat(np.asarray(x, dtype=float)[None, :], m, 0))
        keep = vals >= margin_min
        out_r.append(r[keep])
        out_p.append(p[keep])
        out_A.append(A[keep])
        got += int(keep.sum())
    r = np.concatenate(out_r)[:count]
    p = np.concatenate(out_p)[:count]
    A = np.concatenate(out_A)[:count]
    return r, p, A


def _psd_batch(rng: np.random.Generator, n: int, size: int,
               eig_hi: float = 5.0) -> np.ndarray:
    Q = _haar_orthogonal(rng, n, size)
    eigs = rng.uniform(0.0, eig_hi, (size, n))
    A = np.einsum("nij,nj,nkj->nik", Q, eigs, Q)
    return 0.5 * (A + np.swapaxes(A, 1, 2))


# ---------------------------------------------------------------------------
# reports


@dataclass
class ViolationReport:
    label: str
    axiom: str
    trials: int
    violations: int
    witness: Optional[dict] = None

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_json_dict(self) -> dict:
        d = {"label": self.label, "axiom": self.axiom,
             "trials": self.trials, "violations": self.violations}
        if self.witness is not None:
            d["witness"] = self.witness
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


@dataclass
class MonotonicityReport:
    direct: ViolationReport
    dual_form: ViolationReport
    agreement: bool

    @property
    def passed(self) -> bool:
        return self.direct.passed and self.dual_form.passed

    def to_json_dict(self) -> dict:
        return {"direct": self.direct.to_json_dict(),
                "dual_form": self.dual_form.to_json_dict(),
                "agreement": self.agreement}


def _witness_dict(r, p, A, r2=None, p2=None, A2=None, margin=None) -> dict:
    w = {"jet": {"r": float(r), "p": np.asarray(p).tolist(),
                 "A": np.asarray(A).tolist()}}
    if r2 is not None:
        w["added"] = {"r": float(r2), "p": np.asarray(p2).tolist(),
                      "A": np.asarray(A2).tolist()}
    if margin is not None:
        w["margin"] = float(margin)
    return w


# ---------------------------------------------------------------------------
# axiom and monotonicity checks


def axiom_check(F: Subequation, axiom: str, trials: int = 10_000,
                seed: int = 0, box: Optional[JetBox] = None,
                eps_b: float = DEFAULT_EPS_B, x=None) -> ViolationReport:
    """Sampled verification of (P) or (N).

    Draws members J of F, perturbs by J' in the relevant direction (a PSD
    matrix for (P), a nonpositive value shift for (N)) and counts sums that
    leave F beyond the boundary band.
    """
    if axiom not in ("P", "N"):
        raise ValueError(f"axiom must be 'P' or 'N', got {axiom!r}")
    rng = np.random.default_rng(seed)
    r, p, A = sample_members(F, trials, rng, box=box, x=x)
    size = len(r)
    if axiom == "P":
        dA = _psd_batch(rng, F.n, size)
        dr = np.zeros(size)
    else:
        dA = np.zeros_like(A)
        dr = -rng.uniform(0.0, 5.0, size)
    xb = None
    if F.x_dependent:
        xb = np.repeat(np.asarray(x, dtype=float)[None, :], size, 0)
    vals = F.value_batch(r + dr, p, A + dA, x=xb)
    bad = vals < -eps_b
    nviol = int(bad.sum())
    witness = None
    if nviol:
        i = int(np.argmax(bad))
        witness = _witness_dict(r[i], p[i], A[i], dr[i], np.zeros(F.n), dA[i],
                                margin=vals[i])
    return ViolationReport(F.label, axiom, size, nviol, witness)


def monotonicity_check(F: Subequation, M: Subequation, trials: int = 10_000,
                       seed: int = 0, box: Optional[JetBox] = None,
                       eps_b: float = DEFAULT_EPS_B) -> MonotonicityReport:
    """Sampled test of F + M subset F, together with its dual reformulation
    F + dual(F) subset dual(M); the two must agree for exact monotonicity
    cones, and the report records whether they do.
    """
    if not M.cone:
        raise ValueError(f"{M.label} is not flagged as a cone")
    if F.n != M.n:
        raise DimensionMismatch("dimension mismatch between F and M")
    rng = np.random.default_rng(seed)

    rF, pF, AF = sample_members(F, trials, rng, box=box, margin_min=eps_b)
    rM, pM, AM = sample_members(M, trials, rng, box=box)
    k = min(len(rF), len(rM))
    vals = F.value_batch(rF[:k] + rM[:k], pF[:k] + pM[:k], AF[:k] + AM[:k])
    bad = vals < -eps_b
    nviol = int(bad.sum())
    witness = None
    if nviol:
        i = int(np.argmax(bad))
        witness = _witness_dict(rF[i], pF[i], AF[i], rM[i], pM[i], AM[i],
                                margin=vals[i])
    direct = ViolationReport(f"{F.label}+{M.label}", "monotonicity", k,
                             nviol, witness)

    Fd = dual(F)
    Md = dual(M)
    rD, pD, AD = sample_members(Fd, trials, rng, box=box)
    k2 = min(len(rF), len(rD))
    vals2 = Md.value_batch(rF[:k2] + rD[:k2], pF[:k2] + pD[:k2],
                           AF[:k2] + AD[:k2])
    bad2 = vals2 < -eps_b
    nviol2 = int(bad2.sum())
    witness2 = None
    if nviol2:
        i = int(np.argmax(bad2))
        witness2 = _witness_dict(rF[i], pF[i], AF[i], rD[i], pD[i], AD[i],
                                 margin=vals2[i])
    dual_form = ViolationReport(f"{F.label}+{Fd.label} in {Md.label}",
                                "monotonicity-dual", k2, nviol2, witness2)

    return MonotonicityReport(direct, dual_form,
                              agreement=(nviol == 0) == (nviol2 == 0))


# ---------------------------------------------------------------------------
# strict and asymptotic membership


def _unit_sphere_qmc(dim: int, k: int, seed: int = 0) -> np.ndarray:
    """Deterministic low-discrepancy points on the unit sphere in R^dim."""
    from scipy.stats import qmc
    from scipy.special import ndtri
    eng = qmc.Sobol(d=dim, scramble=True, seed=seed)
    with warnings.catch_warnings():
        # balance advisory for non-power-of-two draws; harmless here
        warnings.filterwarnings("ignore", message="The balance properties")
        U = eng.random(k)
    Z = ndtri(np.clip(U, 1e-12, 1 - 1e-12))
    norms = np.linalg.norm(Z, axis=1, keepdims=True)
    return Z / np.maximum(norms, 1e-300)


def _jet_dim(n: int) -> int:
    return 1 + n + n * (n + 1) // 2


def _sphere_jets(n: int, k: int, radius: float, norm: JetNorm, seed: int = 0):
    """Jets on the jet-norm sphere of the given radius, as batch arrays.

    The Frobenius norm of the matrix part is respected by splitting packed
    off-diagonal coordinates with weight sqrt(2).
    """
    d = _jet_dim(n)
    U = _unit_sphere_qmc(d, k, seed=seed)
    iu = np.triu_indices(n)
    offdiag = iu[0] != iu[1]
    w = np.ones(len(iu[0]))
    w[offdiag] = 1.0 / np.sqrt(2.0)   # entry pairs contribute twice to |A|_F
    r = radius * U[:, 0] / norm.w_r
    p = radius * U[:, 1:1 + n] / norm.w_p
    packed = radius * U[:, 1 + n:] * w[None, :] / norm.w_A
    A = np.zeros((k, n, n))
    A[:, iu[0], iu[1]] = packed
    A[:, iu[1], iu[0]] = packed
    return r, p, A


def strict_member(F: Subequation, jet: Jet, c: float,
                  norm: Optional[JetNorm] = None, x=None,
                  samples: int = 64, seed: int = 0) -> bool:
    """Sampled test that the jet-norm ball of radius c around the jet stays
    inside F.  Conservative: a sampled proxy for distance-to-boundary, it can
    accept jets whose true distance is slightly below c.
    """
    norm = norm or JetNorm()
    dr, dp, dA = _sphere_jets(F.n, samples, c, norm, seed=seed)
    r = jet.r + dr
    p = jet.p[None, :] + dp
    A = jet.A.mat[None, :, :] + dA
    xb = None
    if F.x_dependent:
        xb = np.repeat(np.asarray(x, dtype=float)[None, :], samples, 0)
    vals = F.value_batch(r, p, A, x=xb)
    center = F.value(jet, x=x)
    return bool(center >= 0.0 and vals.min() >= 0.0)


def asymptotic_interior_member(F: Subequation, jet: Jet, t0: float = 1.0,
                               radius: float = 1e-2, trials: int = 16,
                               t_max: Optional[float] = None, x=None,
                               eps_b: float = DEFAULT_EPS_B,
                               seed: int = 0) -> bool:
    """Test membership of a jet in the asymptotic interior of F.

    The value slot is held fixed (for r-dependent F this probes the slice
    at level r = jet.r) while a sampled ball around (p, A) is scaled by t
    on a geometric grid in [t0, t_max] (default t_max = 1e3 * t0); every
    scaled jet must lie in F.  For reduced cone-flagged F this collapses
    to robust strict interior membership of the ball itself.
    """
    norm = JetNorm()
    dr, dp, dA = _sphere_jets(F.n, trials, radius, norm, seed=seed)
    p = jet.p[None, :] + dp
    A = jet.A.mat[None, :, :] + dA
    pts = np.concatenate([jet.p[None, :], p])
    As = np.concatenate([jet.A.mat[None, :, :], A])
    rs = np.full(len(pts), jet.r)
    xb = None
    if F.x_dependent:
        xb = np.repeat(np.asarray(x, dtype=float)[None, :], len(rs), 0)
    if F.cone and (F.reduced or F.pure_second_order):
        vals = F.value_batch(rs, pts, As, x=xb)
        return bool(vals.min() > eps_b)
    t_max = t_max if t_max is not None else 1e3 * t0
    ts = np.geomspace(t0, t_max, 17)
    for t in ts:
        vals = F.value_batch(rs, t * pts, t * As, x=xb)
        if vals.min() < -eps_b:
            return False
    return True


# ---------------------------------------------------------------------------
# registration sanity


def validate_registration(F: Subequation, seed: int = 0, trials: int = 256,
                          box: Optional[JetBox] = None,
                          proximity: float = 1e-3) -> dict:
    """Spot-check the registration contract.

    * cone flag: rho keeps its sign along rays (sampled at t = 1/2, 2);
    * boundary points admit interior points within ``proximity`` in jet norm.

    Returns a small report dict; callers decide whether failures are fatal
    (entries representing closures of discontinuous-fiber sets are documented
    exceptions).
    """
    rng = np.random.default_rng(seed)
    box = box or JetBox()
    report = {"label": F.label, "cone_sign_ok": True, "boundary_ok": True}
    r, p, A = sample_jet_batch(box, F.n, trials, rng)
    vals = F.value_batch(r, p, A)
    if F.cone:
        for t in (0.5, 2.0):
            vt = F.value_batch(t * r, t * p, t * A)
            if np.any(np.sign(vt) * np.sign(vals) < -0.5):
                report["cone_sign_ok"] = False
    # walk sampled segment crossings onto the boundary, then look for an
    # inside point within the proximity ball
    lo = None
    for i in range(len(vals) - 1):
        if vals[i] > 0 > vals[i + 1]:
            lo = (r[i], p[i], A[i], r[i + 1], p[i + 1], A[i + 1])
            break
    if lo is not None:
        ra, pa, Aa, rb, pb, Ab = lo
        for _ in range(60):
            rm, pm, Am = 0.5 * (ra + rb), 0.5 * (pa + pb), 0.5 * (Aa + Ab)
            v = float(F.value_batch(np.array([rm]), pm[None], Am[None])[0])
            if v >= 0:
                ra, pa, Aa = rm, pm, Am
            else:
                rb, pb, Ab = rm, pm, Am
        dr, dp, dA = _sphere_jets(F.n, 64, proximity, JetNorm(), seed=seed)
        vv = F.value_batch(ra + dr, pa[None] + dp, Aa[None] + dA)
        if vv.max() <= 0:
            report["boundary_ok"] = False
    return report
