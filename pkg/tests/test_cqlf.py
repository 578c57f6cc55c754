import numpy as np
import pytest

from conftest import random_m_matrix, random_probability_vector, random_spd
from oucert import cqlf, matkit

COUNTEREXAMPLE_R = np.array([[1.0, -1.0, 0.0], [0.0, 1.0, -1.0], [0.0, 0.0, 1.0]])
COUNTEREXAMPLE_P = np.array([0.0, 0.0, 1.0])
HYPEREXP_R = np.diag([2.0, 2.0 / 3.0])
HYPEREXP_P = np.array([0.5, 0.5])


def counterexample_strong_pair(alpha=133.0):
    K = 3
    e = np.ones(K)
    B1 = -COUNTEREXAMPLE_R
    B2 = -(COUNTEREXAMPLE_R @ (np.eye(K) - np.outer(COUNTEREXAMPLE_P, e))
           + alpha * np.outer(COUNTEREXAMPLE_P, e))
    return cqlf.make_pair(B1, B2)


class TestMakePair:
    def test_rank1_extraction(self, rng):
        B1 = rng.standard_normal((4, 4))
        g = rng.standard_normal(4)
        h = rng.standard_normal(4)
        pair = cqlf.make_pair(B1, B1 - np.outer(g, h))
        resid = np.linalg.norm(pair.B1 - pair.B2 - np.outer(pair.g, pair.h))
        assert resid <= 1e-10 * (np.linalg.norm(B1) + np.linalg.norm(pair.B2))

    def test_rank2_rejected(self, rng):
        B1 = rng.standard_normal((4, 4))
        D = np.diag([1.0, 1.0, 0.0, 0.0])  # rank 2
        with pytest.raises(cqlf.Rank1Error):
            cqlf.make_pair(B1, B1 - D)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            cqlf.make_pair(np.eye(2), np.eye(3))


class TestCheckPairSpectra:
    def test_diagonal_spectra_true(self):
        B1 = -np.eye(3)
        B2 = -np.eye(3) + np.diag([1.0, 0.0, 0.0])  # spectrum {0, -1, -1}
        ok, diag = cqlf.check_pair_spectra(cqlf.make_pair(B1, B2))
        assert ok

    def test_counterexample_first_pair_true(self):
        e = np.ones(3)
        B2 = -COUNTEREXAMPLE_R @ (np.eye(3) - np.outer(COUNTEREXAMPLE_P, e))
        ok, _ = cqlf.check_pair_spectra(cqlf.make_pair(-COUNTEREXAMPLE_R, B2))
        assert ok

    def test_double_zero_false(self):
        B2 = -np.diag([0.0, 0.0, 1.0])
        ok, diag = cqlf.check_pair_spectra(
            cqlf.MatrixPair(B1=-np.eye(3), B2=B2, g=None, h=None)
        )
        assert not ok


class TestCqlfExists:
    def test_k1_trivial(self):
        report = cqlf.cqlf_exists(cqlf.make_pair([[-2.0]], [[0.0]]))
        assert report.verdict == "exists"

    def test_hyperexp_first_pair(self):
        e = np.ones(2)
        B2 = -HYPEREXP_R @ (np.eye(2) - np.outer(HYPEREXP_P, e))
        report = cqlf.cqlf_exists(cqlf.make_pair(-HYPEREXP_R, B2))
        assert report.verdict == "exists"

    def test_precondition_failed_not_thrown(self):
        # B1 not Hurwitz
        pair = cqlf.make_pair(np.eye(2), np.eye(2) - np.outer([1.0, 0.0], [1.0, 0.0]))
        report = cqlf.cqlf_exists(pair)
        assert report.verdict == "precondition_failed"

    def test_scale_invariance(self, rng):
        for _ in range(20):
            K = int(rng.integers(2, 6))
            R = random_m_matrix(rng, K)
            p = random_probability_vector(rng, K)
            (pair1, rep1), _ = cqlf.theorem1_pairs(R, p)
            c = rng.uniform(0.1, 10.0)
            scaled = cqlf.make_pair(c * pair1.B1, c * pair1.B2)
            assert cqlf.cqlf_exists(scaled).verdict == rep1.verdict

    def test_report_serializes(self):
        report = cqlf.cqlf_exists(cqlf.make_pair([[-2.0]], [[0.0]]))
        out = report.to_json()
        assert out["verdict"] == "exists"
        assert isinstance(out["product_spectrum"], list)


class TestTheorem1Pairs:
    def test_counterexample_both_exist(self):
        (p1, r1), (p2, r2) = cqlf.theorem1_pairs(COUNTEREXAMPLE_R, COUNTEREXAMPLE_P)
        assert r1.verdict == "exists" and r2.verdict == "exists"
        # rank-1 data matches the analytic factors g = Rp, h = e (first pair)
        assert np.allclose(p1.B1 - p1.B2, -np.outer(COUNTEREXAMPLE_R @ COUNTEREXAMPLE_P, np.ones(3)))
        assert np.allclose(p2.B1 - p2.B2, -np.outer(COUNTEREXAMPLE_P, COUNTEREXAMPLE_R.T @ np.ones(3)))

    def test_hyperexp_both_exist(self):
        (_, r1), (_, r2) = cqlf.theorem1_pairs(HYPEREXP_R, HYPEREXP_P)
        assert r1.verdict == "exists" and r2.verdict == "exists"

    def test_assumption_violation_rejected(self):
        # valid M-matrix but e'R = (-0.5, 0.5) has a negative component
        R = np.array([[0.5, 0.0], [-1.0, 0.5]])
        with pytest.raises(ValueError, match="column|e'R|sum"):
            cqlf.theorem1_pairs(R, [0.5, 0.5])

    def test_random_sweep(self, rng):
        for _ in range(100):
            K = int(rng.integers(2, 7))
            R = random_m_matrix(rng, K)
            p = random_probability_vector(rng, K)
            (_, r1), (_, r2) = cqlf.theorem1_pairs(R, p)
            assert r1.verdict == "exists"
            assert r2.verdict == "exists"


class TestConstructCqlf:
    def test_k1_trivial(self):
        cert = cqlf.construct_cqlf(cqlf.make_pair([[-2.0]], [[0.0]]))
        assert np.allclose(cert.Q, [[1.0]])
        assert cert.res_strict < 0
        assert abs(cert.res_semi) <= 1e-12

    def test_hyperexp_certificate(self):
        (pair1, _), _ = cqlf.theorem1_pairs(HYPEREXP_R, HYPEREXP_P)
        cert = cqlf.construct_cqlf(pair1)
        b1n = np.linalg.norm(pair1.B1, 2)
        b2n = np.linalg.norm(pair1.B2, 2)
        assert cert.res_strict <= -1e-8 * b1n
        assert cert.res_semi <= 1e-10 * b2n
        # independent symmetric eigensolve of the two Lyapunov forms
        s1 = np.linalg.eigvalsh(cert.Q @ pair1.B1 + pair1.B1.T @ cert.Q).max()
        s2 = np.linalg.eigvalsh(cert.Q @ pair1.B2 + pair1.B2.T @ cert.Q).max()
        assert abs(s1 - cert.res_strict) < 1e-10
        assert abs(s2 - cert.res_semi) < 1e-10

    def test_random_k4(self, rng):
        R = random_m_matrix(rng, 4)
        p = random_probability_vector(rng, 4)
        (pair1, _), _ = cqlf.theorem1_pairs(R, p)
        cert = cqlf.construct_cqlf(pair1)
        assert cqlf.certificate_valid(pair1, cert)
        assert cert.min_eig_Q > 0

    def test_nonexistent_pair_fails(self):
        with pytest.raises(cqlf.ConstructionFailure):
            cqlf.construct_cqlf(counterexample_strong_pair())

    def test_determinism(self):
        (pair1, _), _ = cqlf.theorem1_pairs(HYPEREXP_R, HYPEREXP_P)
        c1 = cqlf.construct_cqlf(pair1)
        c2 = cqlf.construct_cqlf(pair1)
        assert np.array_equal(c1.Q, c2.Q)

    def test_normalization(self, rng):
        R = random_m_matrix(rng, 3)
        p = random_probability_vector(rng, 3)
        (pair1, _), _ = cqlf.theorem1_pairs(R, p)
        cert = cqlf.construct_cqlf(pair1)
        assert abs(np.sum(np.abs(cert.Q)) - 1.0) < 1e-12


class TestTransfer:
    def test_identity(self):
        out = cqlf.transfer_cqlf(np.eye(2), np.eye(2))
        # proportional to the identity after |.|_1 normalization
        assert np.allclose(out, np.eye(2) / 2.0)

    def test_hyperexp_transfer(self):
        (pair1, _), (pair2, _) = cqlf.theorem1_pairs(HYPEREXP_R, HYPEREXP_P)
        cert1 = cqlf.construct_cqlf(pair1)
        Q2 = cqlf.transfer_cqlf(cert1.Q, HYPEREXP_R)
        cert2 = cqlf.certify(pair2, Q2)
        assert cqlf.certificate_valid(pair2, cert2)

    def test_random_k3_transfer(self, rng):
        R = random_m_matrix(rng, 3)
        p = random_probability_vector(rng, 3)
        (pair1, _), (pair2, _) = cqlf.theorem1_pairs(R, p)
        cert1 = cqlf.construct_cqlf(pair1)
        cert2 = cqlf.certify(pair2, cqlf.transfer_cqlf(cert1.Q, R))
        assert cqlf.certificate_valid(pair2, cert2)


class TestStrongCqlf:
    def test_k1_true(self):
        assert cqlf.strong_cqlf_exists(cqlf.make_pair([[-1.0]], [[-2.0]]))

    def test_counterexample_false(self):
        pair = counterexample_strong_pair()
        assert not cqlf.strong_cqlf_exists(pair)
        negs = sorted(ev.real for ev in cqlf.negative_product_eigenvalues(pair))
        assert len(negs) == 2
        assert abs(negs[0] - (-7.0)) < 1e-9
        assert abs(negs[1] - (5.0 - np.sqrt(82.0))) < 1e-9

    def test_agrees_with_feasibility_oracle(self, rng):
        agree = 0
        for _ in range(50):
            B1 = rng.standard_normal((3, 3)) - 3.0 * np.eye(3)
            g = rng.standard_normal(3)
            h = rng.standard_normal(3)
            B2 = B1 - np.outer(g, h)
            if not matkit.is_hurwitz(B2):
                continue
            pair = cqlf.make_pair(B1, B2, g, h)
            verdict = cqlf.strong_cqlf_exists(pair)
            cert = cqlf.strong_cqlf_feasibility(pair)
            if verdict:
                assert cert is not None
            else:
                assert cert is None
            agree += 1
        assert agree >= 25  # enough Hurwitz draws to be meaningful

    def test_non_hurwitz_rejected(self):
        with pytest.raises(ValueError, match="Hurwitz"):
            cqlf.strong_cqlf_exists(cqlf.make_pair([[1.0]], [[-1.0]]))


class TestDriftMatrixHurwitz:
    def test_k1(self):
        assert cqlf.drift_matrix_hurwitz([[1.0]], [1.0], 2.0)

    def test_counterexample_alpha_eigenvalue(self):
        assert cqlf.drift_matrix_hurwitz(COUNTEREXAMPLE_R, COUNTEREXAMPLE_P, 133.0)
        K = 3
        e = np.ones(K)
        A = -(COUNTEREXAMPLE_R @ (np.eye(K) - np.outer(COUNTEREXAMPLE_P, e))
              + 133.0 * np.outer(COUNTEREXAMPLE_P, e))
        eigs = matkit.eig_general(A)
        assert np.min(np.abs(eigs - (-133.0))) < 1e-9
        # right eigenvector p
        assert np.allclose(A @ COUNTEREXAMPLE_P, -133.0 * COUNTEREXAMPLE_P, atol=1e-9)

    def test_random_sweep(self, rng):
        for _ in range(200):
            K = int(rng.integers(1, 7))
            R = random_m_matrix(rng, K)
            p = random_probability_vector(rng, K)
            alpha = rng.uniform(1e-3, 200.0)
            assert cqlf.drift_matrix_hurwitz(R, p, alpha)


def make_reducible(rng, d, K):
    """Embed a valid d-dimensional rank-1 pair in K dimensions.

    B is block diagonal (reduced block + Hurwitz complement) in a random
    orthonormal frame, with g supported on the reduced block, so the
    controllability space has dimension exactly d and the product spectrum
    splits as reduced-product union complement-squared.
    """
    R = random_m_matrix(rng, d)
    p = random_probability_vector(rng, d)
    (pair1, _), _ = cqlf.theorem1_pairs(R, p)
    comp = -np.diag(rng.uniform(0.5, 3.0, K - d))
    rot = np.linalg.qr(rng.standard_normal((K, K)))[0]
    B = rot @ np.block([
        [pair1.B1, rng.standard_normal((d, K - d)) * 0.0],
        [np.zeros((K - d, d)), comp],
    ]) @ rot.T
    g = rot @ np.concatenate([pair1.g, np.zeros(K - d)])
    h = rot @ np.concatenate([pair1.h, rng.standard_normal(K - d)])
    return B, g, h, pair1, comp


class TestKalmanReduce:
    def test_full_rank_identity_reduction(self, rng):
        B = rng.standard_normal((3, 3))
        g = rng.standard_normal(3)
        red = cqlf.kalman_reduce(B, g, rng.standard_normal(3))
        assert red.basis.shape == (3, 3)
        assert red.B_comp.size == 0

    def test_block_triangular_hand_case(self):
        B = np.array([[-1.0, 5.0], [0.0, -2.0]])
        red = cqlf.kalman_reduce(B, [1.0, 0.0], [1.0, 1.0])
        assert red.basis.shape == (2, 1)
        assert np.allclose(np.abs(red.basis[:, 0]), [1.0, 0.0])
        assert np.allclose(red.B_red, [[-1.0]])

    def test_zero_g_rejected(self):
        with pytest.raises(ValueError, match="degenerate"):
            cqlf.kalman_reduce(-np.eye(2), [0.0, 0.0], [1.0, 0.0])

    def test_spectrum_split(self, rng):
        for _ in range(20):
            d = int(rng.integers(2, 4))
            K = d + int(rng.integers(1, 3))
            B, g, h, pair1, comp = make_reducible(rng, d, K)
            red = cqlf.kalman_reduce(B, g, h)
            assert red.basis.shape[1] == d
            full = np.sort_complex(matkit.eig_general(B @ (B - np.outer(g, h))))
            prod_red = red.B_red @ (red.B_red - np.outer(red.g_red, red.h_red))
            split = np.concatenate(
                [matkit.eig_general(prod_red), matkit.eig_general(red.B_comp @ red.B_comp)]
            )
            assert np.allclose(full, np.sort_complex(split), atol=1e-7)

    def test_verdict_preserved(self, rng):
        for _ in range(30):
            d = int(rng.integers(2, 4))
            K = d + int(rng.integers(1, 3))
            B, g, h, pair1, comp = make_reducible(rng, d, K)
            red = cqlf.kalman_reduce(B, g, h)
            reduced_pair = cqlf.make_pair(
                red.B_red, red.B_red - np.outer(red.g_red, red.h_red)
            )
            full_prod = B @ (B - np.outer(g, h))
            scale = matkit.norm_scale(full_prod)
            full_negs = any(
                matkit.is_real_negative_eig(ev, scale)
                for ev in matkit.eig_general(full_prod)
            )
            red_prod = red.B_red @ reduced_pair.B2
            rscale = matkit.norm_scale(red_prod)
            red_negs = any(
                matkit.is_real_negative_eig(ev, rscale)
                for ev in matkit.eig_general(red_prod)
            ) or any(
                matkit.is_real_negative_eig(ev, rscale)
                for ev in matkit.eig_general(red.B_comp @ red.B_comp)
            )
            assert full_negs == red_negs
            assert cqlf.cqlf_exists(reduced_pair).verdict == "exists"


class TestDualWitness:
    def test_k1_none(self):
        res = cqlf.dual_witness(cqlf.make_pair([[-1.0]], [[0.0]]))
        assert res.status == "none"

    def test_counterexample_witness_found(self):
        pair = counterexample_strong_pair()
        res = cqlf.dual_witness(pair)
        assert res.status == "witness"
        assert res.residual <= 1e-6
        # Lemma-style equation residual, PSD-ness, and nonzeroness re-checked
        X, Z = res.X, res.Z
        eq = pair.B1 @ X + X @ pair.B1.T + pair.B2 @ Z + Z @ pair.B2.T
        scale = max(np.linalg.norm(pair.B1), np.linalg.norm(pair.B2))
        assert np.linalg.norm(eq) <= 1e-6 * max(1.0, scale)
        assert np.linalg.eigvalsh(X).min() >= -1e-8
        assert np.linalg.eigvalsh(Z).min() >= -1e-8
        assert np.trace(X) + np.trace(Z) > 0.5

    def test_valid_pair_none(self, rng):
        R = random_m_matrix(rng, 3)
        p = random_probability_vector(rng, 3)
        (pair1, _), _ = cqlf.theorem1_pairs(R, p)
        assert cqlf.dual_witness(pair1).status == "none"

    def test_complementarity(self, rng):
        # never both a certificate and a witness for the same pair
        for _ in range(10):
            K = int(rng.integers(2, 5))
            R = random_m_matrix(rng, K)
            p = random_probability_vector(rng, K)
            (pair1, rep1), _ = cqlf.theorem1_pairs(R, p)
            if rep1.verdict == "exists":
                cert = cqlf.construct_cqlf(pair1)
                assert cqlf.certificate_valid(pair1, cert)
                assert cqlf.dual_witness(pair1).status == "none"


def test_pair_to_json_roundtrippable():
    (pair1, rep1), _ = cqlf.theorem1_pairs(HYPEREXP_R, HYPEREXP_P)
    cert = cqlf.construct_cqlf(pair1)
    out = cqlf.pair_to_json(pair1, rep1, cert)
    assert np.allclose(matkit.matrix_from_json(out["B1"]), pair1.B1)
    assert out["verdict"] == "exists"
    assert "res_strict" in out and "res_semi" in out
