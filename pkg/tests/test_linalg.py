import numpy as np
import pytest
from numpy.testing import assert_allclose

from ewishart.errors import NumericInputError, SingularityError
from ewishart.linalg import (
    matrix_exp_sym,
    matrix_log_spd,
    spd_inv_sqrt,
    spd_logdet,
    spd_solve,
    spd_sqrt,
    sym,
    sym_eig,
    validate_spd,
)
from oracles import jacobi_eig, power_series_expm, random_spd, random_symmetric


class TestSymEig:
    def test_identity(self):
        w, v = sym_eig(np.eye(3))
        assert_allclose(w, [1.0, 1.0, 1.0])
        assert_allclose(v @ v.T, np.eye(3), atol=1e-12)

    def test_diagonal(self):
        w, v = sym_eig(np.diag([2.0, 5.0]))
        assert_allclose(w, [2.0, 5.0])
        assert_allclose(np.abs(v), np.eye(2), atol=1e-12)

    def test_against_jacobi_oracle(self, rng):
        m = random_symmetric(rng, 6, scale=3.0)
        w, v = sym_eig(m)
        w_oracle, _ = jacobi_eig(m)
        assert_allclose(w, w_oracle, rtol=1e-8, atol=1e-10)
        assert_allclose((v * w) @ v.T, m, atol=1e-8 * np.linalg.norm(m))

    def test_reconstruction_and_orthogonality(self, rng):
        for _ in range(20):
            m = random_symmetric(rng, 5, scale=2.0)
            w, v = sym_eig(m)
            assert np.all(np.diff(w) >= 0)
            assert np.linalg.norm(v.T @ v - np.eye(5)) <= 1e-10 * 5
            assert np.linalg.norm((v * w) @ v.T - m) <= 1e-8 * max(np.linalg.norm(m), 1e-30)

    def test_nonfinite_rejected(self):
        bad = np.array([[1.0, np.nan], [np.nan, 1.0]])
        with pytest.raises(NumericInputError):
            sym_eig(bad)


class TestMatrixExp:
    def test_zero(self):
        assert_allclose(matrix_exp_sym(np.zeros((3, 3))), np.eye(3))

    def test_diagonal(self):
        out = matrix_exp_sym(np.diag([np.log(2.0), np.log(3.0)]))
        assert_allclose(out, np.diag([2.0, 3.0]), rtol=1e-14)

    def test_against_power_series(self, rng):
        for _ in range(10):
            x = random_symmetric(rng, 4, scale=1.5)
            assert_allclose(matrix_exp_sym(x), power_series_expm(x, terms=30), rtol=1e-10, atol=1e-10)

    def test_overflow(self):
        from ewishart.errors import RangeError

        with pytest.raises(RangeError):
            matrix_exp_sym(np.diag([800.0, 0.0]))


class TestMatrixLog:
    def test_identity(self):
        assert_allclose(matrix_log_spd(np.eye(4)), np.zeros((4, 4)), atol=1e-14)

    def test_diagonal(self):
        out = matrix_log_spd(np.diag([np.e, np.e ** 2]))
        assert_allclose(out, np.diag([1.0, 2.0]), rtol=1e-14)

    def test_roundtrip(self, rng):
        for _ in range(20):
            s = random_spd(rng, 5, spread=2.0)
            assert_allclose(matrix_exp_sym(matrix_log_spd(s)), s, rtol=1e-8, atol=1e-12)

    def test_log_exp_roundtrip(self, rng):
        for _ in range(20):
            x = random_symmetric(rng, 4, scale=2.0)
            assert_allclose(matrix_log_spd(matrix_exp_sym(x)), x, atol=1e-8 * max(1, np.linalg.norm(x)))

    def test_singular_rejected(self):
        with pytest.raises(SingularityError):
            matrix_log_spd(np.diag([1.0, 0.0]))


class TestSqrt:
    def test_identity(self):
        assert_allclose(spd_sqrt(np.eye(3)), np.eye(3))
        assert_allclose(spd_inv_sqrt(np.eye(3)), np.eye(3))

    def test_diagonal(self):
        assert_allclose(spd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
        assert_allclose(spd_inv_sqrt(np.diag([4.0, 9.0])), np.diag([0.5, 1.0 / 3.0]))

    def test_defining_identity(self, rng):
        for _ in range(20):
            s = random_spd(rng, 6, spread=2.0)
            root = spd_sqrt(s)
            assert np.linalg.norm(root @ root - s) <= 1e-8 * np.linalg.norm(s)
            assert_allclose(spd_inv_sqrt(s) @ root, np.eye(6), atol=1e-10)

    def test_commutes_with_argument(self, rng):
        for _ in range(10):
            s = random_spd(rng, 5, spread=1.5)
            root = spd_sqrt(s)
            assert np.linalg.norm(root @ s - s @ root) <= 1e-10 * np.linalg.norm(s) ** 2


class TestSolve:
    def test_identity(self, rng):
        b = rng.standard_normal((4, 3))
        assert_allclose(spd_solve(np.eye(4), b), b)

    def test_diagonal(self):
        out = spd_solve(np.diag([2.0, 4.0]), np.array([2.0, 4.0]))
        assert_allclose(out, [1.0, 1.0])

    def test_residual(self, rng):
        for _ in range(20):
            s = random_spd(rng, 6, spread=2.0)
            b = rng.standard_normal((6, 4))
            x = spd_solve(s, b)
            assert np.linalg.norm(s @ x - b) <= 1e-10 * np.linalg.norm(b)

    def test_solve_self_is_identity(self, rng):
        s = random_spd(rng, 5, spread=2.0)
        assert_allclose(spd_solve(s, s), np.eye(5), atol=1e-10)

    def test_stacked_rhs(self, rng):
        s = random_spd(rng, 3)
        stack = np.stack([random_spd(rng, 3) for _ in range(4)])
        out = spd_solve(s, stack)
        for k in range(4):
            assert_allclose(s @ out[k], stack[k], atol=1e-10)

    def test_non_spd_rejected(self):
        with pytest.raises(SingularityError):
            spd_solve(np.diag([1.0, -1.0]), np.eye(2))

    def test_logdet(self, rng):
        s = random_spd(rng, 5, spread=1.0)
        assert_allclose(spd_logdet(s), np.linalg.slogdet(s)[1], rtol=1e-12)


class TestValidateSpd:
    def test_identity(self):
        assert validate_spd(np.eye(3))

    def test_rank_deficient(self):
        assert not validate_spd(np.diag([1.0, 0.0]))

    def test_indefinite(self):
        assert not validate_spd(np.diag([1.0, -1.0]))

    def test_degenerate_inputs(self):
        assert not validate_spd(np.full((2, 2), np.nan))
        assert not validate_spd(np.ones((2, 3)))
        assert not validate_spd(np.array([[1.0, 2.0], [0.0, 1.0]]))


class TestSpectralInvariance:
    def test_orthogonal_conjugation(self, rng):
        for _ in range(10):
            s = random_spd(rng, 5, spread=2.0)
            q, r = np.linalg.qr(rng.standard_normal((5, 5)))
            q = q * np.sign(np.diag(r))
            w_s, _ = sym_eig(s)
            w_qs, _ = sym_eig(sym(q @ s @ q.T))
            assert_allclose(w_s, w_qs, rtol=1e-10, atol=1e-10)
