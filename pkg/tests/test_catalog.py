"""Catalog families against independent spectral oracles."""

import numpy as np
import pytest

from subeq import parse_name, dual_name, dual, make_pcone, make_branch
from subeq.errors import ConfigError
from subeq.linalg import ComplexStructure

from conftest import random_sym


def pso_vals(F, A):
    """Margins of a pure-second-order family on a batch of matrices."""
    A = np.asarray(A)
    m = len(A)
    n = A.shape[-1]
    return F.value_batch(np.zeros(m), np.zeros((m, n)), A)


# ---------------------------------------------------------------------------
# oracles

def oracle_branch(A, k):
    return np.sort(np.linalg.eigvalsh(A), axis=-1)[:, k - 1]


def oracle_pcone(A, p):
    lam = np.sort(np.linalg.eigvalsh(A), axis=-1)
    f = int(np.floor(p))
    out = lam[:, :f].sum(axis=1)
    if f < lam.shape[1] and p > f:
        out = out + (p - f) * lam[:, f]
    return out


def oracle_pucci(A, lam, Lam):
    e = np.linalg.eigvalsh(A)
    return lam * np.where(e > 0, e, 0).sum(-1) + Lam * np.where(e < 0, e, 0).sum(-1)


def oracle_klap(p, A, k):
    pn2 = np.sum(p * p, axis=-1)
    quad = np.einsum("bi,bij,bj->b", p, A, p)
    tr = np.trace(A, axis1=-2, axis2=-1)
    if k == "inf":
        return quad
    return pn2 * tr + (float(k) - 2.0) * quad


# ---------------------------------------------------------------------------


class TestGrammar:
    def test_round_trip_labels(self):
        for name in ("laplace:n=2", "branch:real:k=2:n=3", "pcone:p=2.5:n=4",
                     "pucci:lam=1:Lam=2:n=3", "delta:d=1:n=3",
                     "sigma:k=2:n=3", "slag:c=0:n=2", "klap:k=2:n=2",
                     "appb:case=1:n=2"):
            F = parse_name(name)
            assert F.n >= 1
            assert F.label

    @pytest.mark.parametrize("bad", [
        "nosuch:n=2", "branch:real:n=2", "branch:bogus:k=1:n=2",
        "pcone:n=3", "pucci:lam=1:n=2", "sigma:k=9:n=3",
    ])
    def test_rejects(self, bad):
        with pytest.raises(ConfigError):
            parse_name(bad)


class TestRealBranches:
    def test_vs_sorted_eigs(self, rng):
        A = random_sym(rng, 3, size=256)
        for k in (1, 2, 3):
            F = parse_name(f"branch:real:k={k}:n=3")
            assert np.allclose(pso_vals(F, A), oracle_branch(A, k), atol=1e-10)

    def test_nested(self, rng):
        # branch sets grow with k
        A = random_sym(rng, 4, size=128)
        prev = None
        for k in range(1, 5):
            cur = pso_vals(parse_name(f"branch:real:k={k}:n=4"), A)
            if prev is not None:
                assert np.all(cur >= prev - 1e-12)
            prev = cur

    def test_duality(self, rng):
        # dual of branch k is branch n-k+1
        n = 3
        A = random_sym(rng, n, size=256)
        for k in (1, 2, 3):
            FD = dual(parse_name(f"branch:real:k={k}:n={n}"))
            G = parse_name(dual_name(f"branch:real:k={k}:n={n}"))
            assert np.allclose(pso_vals(FD, A), pso_vals(G, A), atol=1e-12)


class TestComplexQuaternionicBranches:
    # grammar note: n counts eigenvalues over the field, so the ambient
    # real dimension is 2n (complex) / 4n (quaternionic)

    def test_complex_uses_hermitian_spectrum(self, rng):
        m = 2
        S = ComplexStructure.standard_complex(m)
        J = S.mats[0]
        A = random_sym(rng, 2 * m, size=64)
        H = 0.5 * (A + np.einsum("ab,kbc,cd->kad", J.T, A, J))
        lam = np.sort(np.linalg.eigvalsh(H), axis=-1)[:, ::2]   # multiplicity 2
        for k in (1, 2):
            F = parse_name(f"branch:complex:k={k}:n={m}")
            assert F.n == 2 * m
            assert np.allclose(pso_vals(F, A), lam[:, k - 1], atol=1e-8)

    def test_quaternionic_ambient_dimension(self, rng):
        F = parse_name("branch:quaternionic:k=1:n=1")
        assert F.n == 4
        # scalar multiples of the identity have hermitian part themselves
        t = rng.uniform(-2, 2, 32)
        A = t[:, None, None] * np.eye(4)
        assert np.allclose(pso_vals(F, A), t, atol=1e-10)

    def test_k_range_guard(self):
        with pytest.raises(ConfigError):
            make_branch("complex", 3, 2)


class TestPCone:
    def test_integer_p_matches_partial_sums(self, rng):
        A = random_sym(rng, 4, size=256)
        for p in (1, 2, 3, 4):
            F = parse_name(f"pcone:p={p}:n=4")
            assert np.allclose(pso_vals(F, A), oracle_pcone(A, p), atol=1e-10)

    def test_fractional_p(self, rng):
        A = random_sym(rng, 4, size=256)
        for p in (1.5, 2.5, 3.25):
            F = make_pcone(p, 4)
            assert np.allclose(pso_vals(F, A), oracle_pcone(A, p), atol=1e-10)

    def test_p1_is_convexity(self, rng):
        A = random_sym(rng, 3, size=64)
        F1 = parse_name("pcone:p=1:n=3")
        FB = parse_name("branch:real:k=1:n=3")
        assert np.allclose(pso_vals(F1, A), pso_vals(FB, A), atol=1e-12)

    def test_nesting_in_p(self, rng):
        # smaller p cuts a smaller cone: member at p stays member at q >= p
        A = random_sym(rng, 3, size=200)
        v15 = oracle_pcone(A, 1.5)
        v25 = oracle_pcone(A, 2.5)
        members = v15 >= 0
        assert np.all(v25[members] >= -1e-12)


class TestUniformlyElliptic:
    def test_pucci_formula(self, rng):
        A = random_sym(rng, 3, size=256)
        F = parse_name("pucci:lam=1:Lam=2.5:n=3")
        assert np.allclose(pso_vals(F, A), oracle_pucci(A, 1.0, 2.5),
                           atol=1e-9)

    def test_pucci_parameter_validation(self):
        with pytest.raises(ConfigError):
            parse_name("pucci:lam=2:Lam=1:n=2")    # needs lam <= Lam
        with pytest.raises(ConfigError):
            parse_name("pucci:lam=0:Lam=1:n=2")    # needs lam > 0

    def test_delta_cone_formula(self, rng):
        A = random_sym(rng, 3, size=256)
        F = parse_name("delta:d=0.7:n=3")
        lam1 = np.sort(np.linalg.eigvalsh(A), axis=-1)[:, 0]
        tr = np.trace(A, axis1=-2, axis2=-1)
        assert np.allclose(pso_vals(F, A), lam1 + 0.7 * tr, atol=1e-9)


class TestSigmaFamilies:
    def test_sigma1_is_normalized_trace(self, rng):
        A = random_sym(rng, 3, size=64)
        F = parse_name("sigma:k=1:n=3")
        tr = np.trace(A, axis1=-2, axis2=-1)
        assert np.allclose(pso_vals(F, A), tr / 3.0, atol=1e-10)

    def test_sigma_n_is_positivity(self, rng):
        # the full Garding cone of sigma_n is the PSD cone
        A = random_sym(rng, 3, size=400)
        F = parse_name("sigma:k=3:n=3")
        mem = pso_vals(F, A) >= -1e-10
        lam1 = np.sort(np.linalg.eigvalsh(A), axis=-1)[:, 0]
        assert np.array_equal(mem, lam1 >= -1e-10)


class TestSlag:
    def test_arctan_sum(self, rng):
        A = random_sym(rng, 2, size=128)
        F = parse_name("slag:c=0.5:n=2")
        want = np.arctan(np.linalg.eigvalsh(A)).sum(axis=-1) - 0.5
        assert np.allclose(pso_vals(F, A), want, atol=1e-10)

    def test_dual_negates_phase(self, rng):
        A = random_sym(rng, 2, size=64)
        FD = dual(parse_name("slag:c=0.5:n=2"))
        G = parse_name(dual_name("slag:c=0.5:n=2"))
        assert np.allclose(pso_vals(FD, A), pso_vals(G, A), atol=1e-10)


class TestKLaplacian:
    @pytest.mark.parametrize("k", ["1", "2", "3", "inf"])
    def test_formula(self, rng, k):
        F = parse_name(f"klap:k={k}:n=2")
        A = random_sym(rng, 2, size=128)
        p = rng.uniform(-2, 2, (128, 2))
        want = oracle_klap(p, A, k if k == "inf" else float(k))
        got = F.value_batch(np.zeros(128), p, A)
        assert np.allclose(got, want, atol=1e-9)

    def test_self_dual(self, rng):
        F = parse_name("klap:k=2:n=2")
        FD = dual(F)
        A = random_sym(rng, 2, size=64)
        p = rng.uniform(-2, 2, (64, 2))
        assert np.allclose(F.value_batch(np.zeros(64), p, A),
                           FD.value_batch(np.zeros(64), p, A), atol=1e-10)


class TestGeometric:
    def test_identity_and_negative_identity(self):
        F = parse_name("geom:p=2:n=3")
        A = np.eye(3)[None]
        assert pso_vals(F, A)[0] > 0
        assert pso_vals(F, -A)[0] < 0

    def test_outer_approximation_of_pcone(self, rng):
        # sampled min over planes can only overestimate the exact infimum
        F = parse_name("geom:p=2:n=3")
        A = random_sym(rng, 3, size=64)
        exact = oracle_pcone(A, 2)       # inf over 2-planes = lambda_1+lambda_2
        assert np.all(pso_vals(F, A) >= exact - 1e-10)


class TestAppBCones:
    def test_case1_psd(self, rng):
        F = parse_name("appb:case=1:n=3")
        A = random_sym(rng, 3, size=128)
        lam1 = np.sort(np.linalg.eigvalsh(A), axis=-1)[:, 0]
        assert np.allclose(pso_vals(F, A), lam1, atol=1e-10)

    def test_case2_r_slot(self):
        F = parse_name("appb:case=2:n=2")
        A = np.eye(2)[None]
        assert F.value_batch(np.array([-1.0]), np.zeros((1, 2)), A)[0] > 0
        assert F.value_batch(np.array([1.0]), np.zeros((1, 2)), A)[0] < 0

    def test_case6_formula(self, rng):
        R = 2.0
        F = parse_name(f"appb:case=6:R={R}:n=2")
        A = random_sym(rng, 2, size=128)
        p = rng.uniform(-2, 2, (128, 2))
        lam1 = np.sort(np.linalg.eigvalsh(A), axis=-1)[:, 0]
        want = lam1 - np.linalg.norm(p, axis=1) / R
        assert np.allclose(F.value_batch(np.zeros(128), p, A), want,
                           atol=1e-10)

    def test_samplers_land_inside(self, rng):
        for name in ("appb:case=1:n=2", "appb:case=2:n=2",
                     "appb:case=4:gamma=0.5:n=2", "appb:case=6:R=1:n=2"):
            F = parse_name(name)
            r, p, A = F.member_sampler(rng, 200)
            vals = F.value_batch(r, p, A)
            assert vals.min() >= -1e-9, name


class TestDualNameTable:
    @pytest.mark.parametrize("name", [
        "laplace:n=3", "branch:real:k=1:n=3", "branch:real:k=2:n=3",
        "klap:k=inf:n=2", "slag:c=1:n=3",
    ])
    def test_numerical_agreement(self, rng, name):
        other = dual_name(name)
        assert other is not None
        F, G = dual(parse_name(name)), parse_name(other)
        A = random_sym(rng, F.n, size=64)
        p = rng.uniform(-2, 2, (64, F.n))
        r = rng.uniform(-2, 2, 64)
        assert np.allclose(F.value_batch(r, p, A), G.value_batch(r, p, A),
                           atol=1e-9)

    def test_none_for_nonstock_duals(self):
        assert dual_name("pucci:lam=1:Lam=2:n=2") is None
