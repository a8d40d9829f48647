import numpy as np
import pytest
from numpy.testing import assert_allclose

from adiabloch import matcore
from adiabloch.errors import (
    BranchCutError,
    NonFiniteError,
    SingularMatrixError,
    SpectralOverlapError,
)
from conftest import random_unitary


class TestOpNorm:
    def test_zero_matrix(self):
        assert matcore.op_norm(np.zeros((4, 4)), "spectral") == 0.0

    def test_identity_trace_norm(self):
        for d in (1, 3, 6):
            assert_allclose(matcore.op_norm(np.eye(d), "trace"), d)

    def test_spectral_squared_is_largest_eigenvalue_of_gram(self, rng):
        # independent oracle: eigenvalues of A^dag A from eigvalsh
        a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        expected = np.sqrt(np.linalg.eigvalsh(a.conj().T @ a).max())
        assert_allclose(matcore.op_norm(a, "spectral"), expected, rtol=1e-13)

    def test_unitary_invariance(self, rng):
        a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        u = random_unitary(6, rng)
        v = random_unitary(6, rng)
        for kind in ("spectral", "trace", "frobenius"):
            assert_allclose(
                matcore.op_norm(u @ a @ v, kind),
                matcore.op_norm(a, kind),
                rtol=1e-12,
            )

    def test_rejects_nan(self):
        a = np.eye(2, dtype=complex)
        a[0, 1] = np.nan
        with pytest.raises(NonFiniteError):
            matcore.op_norm(a)


class TestExpm:
    def test_zero(self):
        assert_allclose(matcore.expm(np.zeros((3, 3))), np.eye(3), atol=1e-15)

    def test_diagonal(self):
        d = np.diag([0.3, -1.2 + 0.5j, 2.0j])
        assert_allclose(matcore.expm(d), np.diag(np.exp(np.diag(d))), rtol=1e-14)

    def test_nilpotent_truncates(self):
        n = np.array([[0.0, 1.0], [0.0, 0.0]])
        assert_allclose(matcore.expm(n), np.array([[1, 1], [0, 1]]), atol=1e-15)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            matcore.expm(np.ones((2, 3)))

    def test_inverse_identity(self, rng):
        a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        a *= 10.0 / matcore.op_norm(a, "spectral")
        prod = matcore.expm(a) @ matcore.expm(-a)
        assert matcore.op_norm(prod - np.eye(6), "spectral") < 1e-10

    def test_semigroup_property(self, rng):
        a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        s, t = rng.uniform(0, 1, size=2)
        lhs = matcore.expm((s + t) * a)
        rhs = matcore.expm(s * a) @ matcore.expm(t * a)
        assert matcore.op_norm(lhs - rhs, "spectral") < 1e-10


class TestPrincipalSqrt:
    def test_identity(self):
        assert_allclose(matcore.principal_sqrt(np.eye(4)), np.eye(4), atol=1e-14)

    def test_diagonal(self):
        assert_allclose(
            matcore.principal_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), rtol=1e-14
        )

    def test_square_of_output(self, rng):
        # near-identity argument, the regime this routine is used in
        a = np.eye(8) + 0.01 * (rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8)))
        x = matcore.principal_sqrt(a)
        assert matcore.op_norm(x @ x - a, "spectral") < 1e-12 * matcore.op_norm(a, "spectral")

    def test_spectrum_in_right_half_plane(self, rng):
        a = np.eye(5) + 0.3 * rng.normal(size=(5, 5))
        x = matcore.principal_sqrt(a)
        assert np.linalg.eigvals(x).real.min() > 0

    def test_commutes_with_argument(self, rng):
        a = np.eye(6) + 0.05 * (rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6)))
        x = matcore.principal_sqrt(a)
        assert matcore.op_norm(x @ a - a @ x, "spectral") < 1e-11

    def test_negative_axis_rejected(self):
        with pytest.raises(BranchCutError):
            matcore.principal_sqrt(np.diag([1.0, -2.0]))
        with pytest.raises(BranchCutError):
            matcore.principal_sqrt(np.diag([1.0, 0.0]))


class TestSolveLinear:
    def test_identity(self, rng):
        y = rng.normal(size=(4, 2))
        assert_allclose(matcore.solve_linear(np.eye(4), y), y)

    def test_scalar(self):
        assert_allclose(matcore.solve_linear(np.array([[2.0]]), np.array([[4.0]])),
                        np.array([[2.0]]))

    def test_constructed_rhs(self, rng):
        a = np.eye(7) + 0.5 * (rng.normal(size=(7, 7)) + 1j * rng.normal(size=(7, 7)))
        x0 = rng.normal(size=(7, 3)) + 1j * rng.normal(size=(7, 3))
        x = matcore.solve_linear(a, a @ x0)
        assert np.abs(x - x0).max() < 1e-12

    def test_singular_reports_condition(self):
        a = np.array([[1.0, 2.0], [2.0, 4.0]])
        with pytest.raises(SingularMatrixError) as err:
            matcore.solve_linear(a, np.eye(2))
        assert err.value.cond is None or err.value.cond > 1e12


class TestSolveSylvester:
    def test_scalar_case(self):
        x = matcore.solve_sylvester(np.array([[1.0]]), np.array([[0.0]]), np.array([[1.0]]))
        assert_allclose(x, np.array([[1.0]]))

    def test_zero_rhs(self, rng):
        a = np.diag([1.0, 2.0])
        b = np.diag([-1.0, -2.0])
        assert_allclose(matcore.solve_sylvester(a, b, np.zeros((2, 2))), np.zeros((2, 2)))

    def test_residual(self, rng):
        a = np.diag([1.0, 2.0, 3.0]) + 0.1 * rng.normal(size=(3, 3))
        b = np.diag([-1.0, -2.0]) + 0.1 * rng.normal(size=(2, 2))
        y = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
        x = matcore.solve_sylvester(a, b, y)
        res = matcore.op_norm(a @ x - x @ b - y, "spectral")
        assert res < 1e-12 * matcore.op_norm(y, "spectral")

    def test_overlap_rejected(self):
        a = np.diag([1.0, 2.0])
        b = np.diag([2.0, 5.0])
        with pytest.raises(SpectralOverlapError) as err:
            matcore.solve_sylvester(a, b, np.ones((2, 2)))
        assert err.value.separation < 1e-10


def test_numerical_rank():
    a = np.diag([1.0, 1e-3, 1e-12])
    assert matcore.numerical_rank(a) == 2
    assert matcore.numerical_rank(np.zeros((3, 3))) == 0
