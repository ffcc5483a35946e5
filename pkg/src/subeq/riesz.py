"""Riesz characteristic of a monotonicity cone.

For a cone M of pure second-order type, the characteristic is the largest
p such that I - p e⊗e stays in M for every unit direction e.  It controls
which radial powers/logs are subharmonic for everything M-monotone, and it
is monotone in M, so it doubles as a quick cone-size invariant.

The scalar is computed by bisection on the predicate "all probe directions
accept I - p e⊗e", evaluated in one batched rho call per candidate p.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Subequation, DEFAULT_EPS_B, _unit_sphere_qmc
from .catalog import make_pcone
from .errors import ConfigError


@dataclass(frozen=True)
class RieszResult:
    p: float
    unbounded: bool
    directions_tested: int
    bracket: tuple
    label: str = ""

    def to_json_dict(self) -> dict:
        return {"p": self.p, "unbounded": self.unbounded,
                "directions_tested": self.directions_tested,
                "bracket": list(self.bracket), "label": self.label}


def _probe_directions(n: int, extra: int = 64, seed: int = 0) -> np.ndarray:
    dirs = [np.eye(n)]
    if extra:
        dirs.append(_unit_sphere_qmc(n, extra, seed=seed))
    # a few balanced combinations catch off-axis minima of sharp cones
    comb = np.ones((1, n)) / np.sqrt(n)
    return np.vstack(dirs + [comb])


def _accepts(M: Subequation, p: float, dirs: np.ndarray,
             tol: float) -> bool:
    n = M.n
    N = len(dirs)
    A = np.eye(n)[None, :, :] - p * np.einsum("ni,nj->nij", dirs, dirs)
    vals = M.value_batch(np.zeros(N), np.zeros((N, n)), A)
    return bool(vals.min() >= -tol)


def riesz_characteristic(M: Subequation, tol: float = 1e-6,
                         dirs: int = 64, seed: int = 0) -> RieszResult:
    """Bisect for sup{p : I - p e⊗e in M for all unit e}.

    Requires a reduced, x-independent cone (the quantity only makes sense
    there).  Values at or beyond n + 1 are reported as unbounded: every
    matrix I - p e⊗e already lies well inside the maximal cone by then.
    """
    if M.x_dependent or not M.reduced:
        raise ConfigError("characteristic needs a reduced constant cone")
    n = M.n
    probes = _probe_directions(n, extra=dirs, seed=seed)
    cap = float(n + 1)

    if not _accepts(M, 1.0, probes, DEFAULT_EPS_B):
        # smaller than the smallest nontrivial cone; bisect down from 1
        lo, hi = 0.0, 1.0
    elif _accepts(M, cap, probes, DEFAULT_EPS_B):
        return RieszResult(cap, True, len(probes), (cap, np.inf), M.label)
    else:
        lo, hi = 1.0, cap

    for _ in range(80):
        if hi - lo <= 0.5 * tol:
            break
        mid = 0.5 * (lo + hi)
        if _accepts(M, mid, probes, DEFAULT_EPS_B):
            lo = mid
        else:
            hi = mid
    return RieszResult(0.5 * (lo + hi), False, len(probes), (lo, hi), M.label)


@dataclass(frozen=True)
class InclusionReport:
    p: float
    included: bool
    trials: int
    violations: int
    witness: dict | None

    def to_json_dict(self) -> dict:
        return {"p": self.p, "included": self.included, "trials": self.trials,
                "violations": self.violations, "witness": self.witness}


def pcone_inclusion_check(M: Subequation, p: float, trials: int = 2000,
                          seed: int = 0) -> InclusionReport:
    """Sampled test of "every member of the p-cone lies in M".

    Random members of the p-cone are drawn by rejection, augmented with the
    deterministic extremal family I - q e⊗e for q between 1 and p: those
    rank-one perturbations are exactly the matrices that decide inclusion.
    """
    from .core import sample_members

    if M.x_dependent or not M.reduced:
        raise ConfigError("inclusion check needs a reduced constant cone")
    n = M.n
    P = make_pcone(p, n)
    rng = np.random.default_rng(seed)

    mats = []
    if trials > 0:
        _, _, A = sample_members(P, trials, rng)
        mats.append(A)
    qs = np.linspace(1.0, p, 17)
    es = _probe_directions(n, extra=32, seed=seed + 1)
    probes = (np.eye(n)[None, None, :, :]
              - qs[:, None, None, None] * np.einsum("ni,nj->nij", es, es)[None])
    mats.append(probes.reshape(-1, n, n))
    A_all = np.concatenate(mats, axis=0)
    rng.shuffle(A_all, axis=0)

    vals = M.value_batch(np.zeros(len(A_all)), np.zeros((len(A_all), n)), A_all)
    bad = np.flatnonzero(vals < -DEFAULT_EPS_B)
    witness = None
    if len(bad):
        i = int(bad[np.argmin(vals[bad])])
        witness = {"A": A_all[i].tolist(), "value": float(vals[i])}
    return InclusionReport(p, len(bad) == 0, int(len(A_all)),
                           int(len(bad)), witness)


def directional_thresholds(M: Subequation, dirs: int = 16,
                           seed: int = 0, tol: float = 1e-8) -> np.ndarray:
    """Per-direction sup{p : I - p e⊗e in M}; min over e is the characteristic."""
    if M.x_dependent or not M.reduced:
        raise ConfigError("thresholds need a reduced constant cone")
    n = M.n
    es = _unit_sphere_qmc(n, dirs, seed=seed)
    out = np.empty(dirs)
    for i, e in enumerate(es):
        lo, hi = 0.0, float(n + 1)
        one = e[None, :]
        if _accepts(M, hi, one, DEFAULT_EPS_B):
            out[i] = np.inf
            continue
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if _accepts(M, mid, one, DEFAULT_EPS_B):
                lo = mid
            else:
                hi = mid
            if hi - lo <= tol:
                break
        out[i] = 0.5 * (lo + hi)
    return out
