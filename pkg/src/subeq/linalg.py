"""Symmetric matrices, ordered eigenvalues and the small spectral toolbox
used everywhere else in the package.

Matrices here are small (n <= 16): second-derivative data of functions of a
few variables.  The eigenvalue routine of record is a cyclic Jacobi sweep,
which is branch-free and robust on clustered spectra; batched hot paths may
use LAPACK instead (see ``eigvalsh_batch``) and the two are cross-checked in
the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EigenConvergenceError

MAX_DIM = 16

_JACOBI_SWEEPS = 50
_JACOBI_OFF_TOL = 1e-13


# ---------------------------------------------------------------------------
# symmetric matrices, packed storage


def _packed_size(n: int) -> int:
    return n * (n + 1) // 2


@dataclass(frozen=True)
class SymMatrix:
    """Real symmetric n x n matrix.

    Only the upper triangle is stored, so symmetry is structural rather than
    a numerical promise.
    """

    n: int
    packed: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not (1 <= self.n <= MAX_DIM):
            raise DimensionMismatch(f"dimension {self.n} outside 1..{MAX_DIM}")
        packed = np.asarray(self.packed, dtype=float)
        if packed.shape != (_packed_size(self.n),):
            raise DimensionMismatch(
                f"packed storage has {packed.shape}, expected ({_packed_size(self.n)},)"
            )
        object.__setattr__(self, "packed", packed)

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_dense(cls, M, check: bool = True, tol: float = 1e-9) -> "SymMatrix":
        M = np.asarray(M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionMismatch(f"not square: {M.shape}")
        n = M.shape[0]
        if check:
            scale = max(1.0, float(np.abs(M).max()))
            if float(np.abs(M - M.T).max()) > tol * scale:
                raise ValueError("matrix is not symmetric within tolerance")
        iu = np.triu_indices(n)
        return cls(n, M[iu].copy())

    @classmethod
    def diag(cls, values) -> "SymMatrix":
        values = np.asarray(values, dtype=float)
        return cls.from_dense(np.diag(values), check=False)

    @classmethod
    def identity(cls, n: int) -> "SymMatrix":
        return cls.diag(np.ones(n))

    @classmethod
    def zero(cls, n: int) -> "SymMatrix":
        return cls(n, np.zeros(_packed_size(n)))

    # -- views --------------------------------------------------------------

    @property
    def mat(self) -> np.ndarray:
        """Dense symmetric view (freshly allocated)."""
        M = np.zeros((self.n, self.n))
        iu = np.triu_indices(self.n)
        M[iu] = self.packed
        M.T[iu] = self.packed
        return M

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other: "SymMatrix") -> "SymMatrix":
        if self.n != other.n:
            raise DimensionMismatch("size mismatch in SymMatrix addition")
        return SymMatrix(self.n, self.packed + other.packed)

    def __sub__(self, other: "SymMatrix") -> "SymMatrix":
        if self.n != other.n:
            raise DimensionMismatch("size mismatch in SymMatrix subtraction")
        return SymMatrix(self.n, self.packed - other.packed)

    def __neg__(self) -> "SymMatrix":
        return SymMatrix(self.n, -self.packed)

    def scale(self, t: float) -> "SymMatrix":
        return SymMatrix(self.n, t * self.packed)

    def __mul__(self, t: float) -> "SymMatrix":
        return self.scale(float(t))

    __rmul__ = __mul__

    def trace(self) -> float:
        idx = np.cumsum([0] + list(range(self.n, 1, -1)))
        return float(self.packed[idx].sum())

    def quad(self, v) -> float:
        """v^T A v."""
        v = np.asarray(v, dtype=float)
        return float(v @ self.mat @ v)


def _as_dense(A) -> np.ndarray:
    if isinstance(A, SymMatrix):
        return A.mat
    M = np.asarray(A, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"not square: {M.shape}")
    return M


# ---------------------------------------------------------------------------
# cyclic Jacobi eigensolver


def _jacobi(M: np.ndarray, max_sweeps: int = _JACOBI_SWEEPS,
            off_tol: float = _JACOBI_OFF_TOL):
    """Cyclic-by-rows Jacobi.  Returns (values, vectors), unsorted.

    The off-diagonal threshold is scaled by the initial magnitude of the
    matrix so the stopping rule is meaningful at any scale.
    """
    n = M.shape[0]
    A = M.copy()
    V = np.eye(n)
    if n == 1:
        return A.diagonal().copy(), V
    scale = max(1.0, float(np.abs(A).max()))
    thresh = off_tol * scale

    def max_off() -> float:
        return float(np.abs(A - np.diag(A.diagonal())).max())

    for _ in range(max_sweeps):
        if max_off() <= thresh:
            return A.diagonal().copy(), V
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= thresh * 1e-2:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(1.0, theta))
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                # apply the (p, q) rotation on both sides
                rp = A[:, p].copy()
                rq = A[:, q].copy()
                A[:, p] = c * rp - s * rq
                A[:, q] = s * rp + c * rq
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    if max_off() <= thresh:
        return A.diagonal().copy(), V
    raise EigenConvergenceError(
        f"Jacobi iteration not converged after {max_sweeps} sweeps"
    )


def eigenpairs(A, max_sweeps: int = _JACOBI_SWEEPS):
    """Ascending eigenvalues and matching orthonormal eigenvectors (columns)."""
    M = _as_dense(A)
    vals, vecs = _jacobi(M, max_sweeps=max_sweeps)
    order = np.argsort(vals, kind="stable")
    return vals[order], vecs[:, order]


def ordered_eigenvalues(A, check: bool = False) -> np.ndarray:
    """Eigenvalues in ascending order, lambda_1 <= ... <= lambda_n.

    With ``check=True`` the factorization is verified by reconstructing A
    from the eigenpairs to 1e-10 in Frobenius norm.
    """
    M = _as_dense(A)
    vals, vecs = eigenpairs(M)
    if check:
        R = vecs @ np.diag(vals) @ vecs.T
        err = float(np.linalg.norm(R - M))
        if err > 1e-10 * max(1.0, float(np.linalg.norm(M))):
            raise EigenConvergenceError(f"eigenpair reconstruction off by {err}")
    return vals


def eigvalsh_batch(A: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of a stack of symmetric matrices (N, n, n).

    2x2 stacks use the closed quadratic formula (per-call LAPACK overhead
    dominates at that size, and the solver's inner loop hits this path);
    everything else is LAPACK-backed.  Agrees with ``ordered_eigenvalues``
    to roundoff (cross-checked in the tests).
    """
    A = np.asarray(A, dtype=float)
    if A.shape[-1] == 2 and A.ndim == 3:
        half_tr = 0.5 * (A[:, 0, 0] + A[:, 1, 1])
        b = 0.5 * (A[:, 0, 1] + A[:, 1, 0])
        disc = np.sqrt((0.5 * (A[:, 0, 0] - A[:, 1, 1])) ** 2 + b * b)
        return np.stack([half_tr - disc, half_tr + disc], axis=1)
    return np.linalg.eigvalsh(A)


# ---------------------------------------------------------------------------
# spectral functionals


def sigma_k(A, k: int) -> float:
    """Elementary symmetric function of the eigenvalues, sigma_k(lambda(A))."""
    M = _as_dense(A)
    n = M.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside 1..{n}")
    vals = ordered_eigenvalues(M)
    coeffs = np.poly(vals)          # [1, -e1, e2, -e3, ...]
    return float((-1.0) ** k * coeffs[k])


def pucci_minus(B, lam: float, Lam: float) -> float:
    """Distinguished extremal combination lam*tr(B+) + Lam*tr(B-)."""
    if not 0 < lam < Lam:
        raise ValueError(f"need 0 < lam < Lam, got ({lam}, {Lam})")
    vals = ordered_eigenvalues(B)
    return float(lam * vals[vals > 0].sum() + Lam * vals[vals < 0].sum())


def pucci_plus(B, lam: float, Lam: float) -> float:
    if not 0 < lam < Lam:
        raise ValueError(f"need 0 < lam < Lam, got ({lam}, {Lam})")
    vals = ordered_eigenvalues(B)
    return float(Lam * vals[vals > 0].sum() + lam * vals[vals < 0].sum())


def trace_on_plane(A, W, tol: float = 1e-10) -> float:
    """Trace of A restricted to the subspace spanned by the columns of W.

    W must be orthonormal to ``tol``.
    """
    M = _as_dense(A)
    W = np.asarray(W, dtype=float)
    if W.ndim == 1:
        W = W[:, None]
    if W.shape[0] != M.shape[0]:
        raise DimensionMismatch("frame does not live in the matrix dimension")
    G = W.T @ W
    if float(np.abs(G - np.eye(W.shape[1])).max()) > tol:
        raise ValueError("frame is not orthonormal within tolerance")
    return float(np.trace(W.T @ M @ W))


# ---------------------------------------------------------------------------
# complex / quaternionic structures and hermitian parts


def _standard_complex_J(m: int) -> np.ndarray:
    J = np.zeros((2 * m, 2 * m))
    blk = np.array([[0.0, -1.0], [1.0, 0.0]])
    for i in range(m):
        J[2 * i:2 * i + 2, 2 * i:2 * i + 2] = blk
    return J


def _standard_quaternion_IJK(m: int):
    # left multiplication by i, j, k on H^m with basis (1, i, j, k) per factor
    I1 = np.array([
        [0.0, -1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, 1.0, 0.0],
    ])
    J1 = np.array([
        [0.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, -1.0, 0.0, 0.0],
    ])
    K1 = np.array([
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, -1.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
    ])
    out = []
    for B in (I1, J1, K1):
        M = np.zeros((4 * m, 4 * m))
        for i in range(m):
            M[4 * i:4 * i + 4, 4 * i:4 * i + 4] = B
        out.append(M)
    return tuple(out)


@dataclass(frozen=True)
class ComplexStructure:
    """Orthogonal (anti-)involutions giving R^{2m} a complex structure or
    R^{4m} a quaternionic one.  Construction validates the algebra to 1e-12.
    """

    kind: str                   # "complex" | "quaternionic"
    m: int
    mats: tuple = field(repr=False)

    def __post_init__(self):
        tol = 1e-12
        dim = self.dim
        for M in self.mats:
            if M.shape != (dim, dim):
                raise DimensionMismatch("structure matrix of wrong shape")
            if float(np.abs(M @ M + np.eye(dim)).max()) > tol:
                raise ValueError("structure matrix does not square to -Id")
            if float(np.abs(M.T @ M - np.eye(dim)).max()) > tol:
                raise ValueError("structure matrix is not orthogonal")
        if self.kind == "quaternionic":
            I, J, K = self.mats
            if float(np.abs(I @ J - K).max()) > tol:
                raise ValueError("I*J != K for quaternionic structure")

    @property
    def dim(self) -> int:
        return {"complex": 2, "quaternionic": 4}[self.kind] * self.m

    @classmethod
    def standard_complex(cls, m: int) -> "ComplexStructure":
        return cls("complex", m, (_standard_complex_J(m),))

    @classmethod
    def standard_quaternionic(cls, m: int) -> "ComplexStructure":
        return cls("quaternionic", m, _standard_quaternion_IJK(m))


def hermitian_part(A, structure: ComplexStructure) -> SymMatrix:
    """Projection onto matrices commuting with the structure.

    complex:       (A - JAJ) / 2
    quaternionic:  (A - IAI - JAJ - KAK) / 4
    """
    M = _as_dense(A)
    if M.shape[0] != structure.dim:
        raise DimensionMismatch(
            f"matrix dim {M.shape[0]} != structure dim {structure.dim}"
        )
    acc = M.copy()
    for S in structure.mats:
        acc = acc - S @ M @ S
    acc /= (1 + len(structure.mats))
    return SymMatrix.from_dense(acc, check=True, tol=1e-9)


def hermitian_part_batch(A: np.ndarray, structure: ComplexStructure) -> np.ndarray:
    """Batched version of :func:`hermitian_part` on (N, d, d) stacks."""
    acc = A.copy()
    for S in structure.mats:
        acc = acc - np.einsum("ij,njk,kl->nil", S, A, S)
    return acc / (1 + len(structure.mats))
