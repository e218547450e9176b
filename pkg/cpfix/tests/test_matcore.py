import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from cpfix import matcore
from cpfix.exceptions import NotHermitian, NotPSD, ShapeMismatch


class EigHermitianTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(11)

    def test_reconstructs_random_hermitian(self):
        for n in (1, 2, 5, 8, 12):
            with self.subTest(n=n):
                a = matcore.random_hermitian(n, self.rng)
                w, u = matcore.eig_hermitian(a)
                assert_allclose((u * w) @ matcore.dagger(u), a, atol=1e-10)
                assert_allclose(matcore.dagger(u) @ u, np.eye(n), atol=1e-10)
                assert_allclose(w, np.linalg.eigvalsh(a), atol=1e-10)

    def test_eigenvalues_ascending(self):
        w, _ = matcore.eig_hermitian(np.diag([3.0, -1.0, 2.0]))
        assert_allclose(w, [-1.0, 2.0, 3.0])

    def test_degenerate_spectrum(self):
        w, u = matcore.eig_hermitian(np.ones((4, 4)))
        assert_allclose(w, [0, 0, 0, 4], atol=1e-12)
        assert_allclose(np.abs(u[:, -1]), np.full(4, 0.5), atol=1e-12)

    def test_rejects_non_hermitian(self):
        with self.assertRaises(NotHermitian):
            matcore.eig_hermitian([[0.0, 1.0], [0.0, 0.0]])

    def test_rejects_non_square(self):
        with self.assertRaises(ShapeMismatch):
            matcore.eig_hermitian(np.zeros((2, 3)))


class MatrixFunctionTests(SimpleTestCase):
    def test_nullspace_of_rank_one(self):
        null = matcore.nullspace(np.array([[1.0, 1.0], [1.0, 1.0]]), 1e-9)
        self.assertEqual(null.shape, (2, 1))
        assert_allclose(np.abs(null[:, 0]), [1 / np.sqrt(2)] * 2, atol=1e-12)

    def test_nullspace_needs_positive_tolerance(self):
        with self.assertRaises(ValueError):
            matcore.nullspace(np.eye(2), 0.0)

    def test_op_norm(self):
        self.assertAlmostEqual(matcore.op_norm(np.diag([3.0, -5.0])), 5.0, places=12)
        self.assertAlmostEqual(matcore.op_norm(np.array([[0.0, 2.0], [0.0, 0.0]])), 2.0, places=12)

    def test_op_norm_is_submultiplicative(self):
        rng = np.random.default_rng(5)
        for rows, inner, cols in ((2, 2, 2), (3, 4, 2), (5, 3, 6)):
            with self.subTest(shape=(rows, inner, cols)):
                a = rng.standard_normal((rows, inner)) + 1j * rng.standard_normal((rows, inner))
                b = rng.standard_normal((inner, cols)) + 1j * rng.standard_normal((inner, cols))
                self.assertAlmostEqual(matcore.op_norm(a), np.linalg.norm(a, 2), places=10)
                self.assertLessEqual(matcore.op_norm(a @ b), matcore.op_norm(a) * matcore.op_norm(b) + 1e-12)

    def test_psd_sqrt(self):
        a = np.array([[2.0, 1.0], [1.0, 2.0]])
        root = matcore.psd_sqrt(a)
        assert_allclose(root @ root, a, atol=1e-12)
        self.assertTrue(matcore.is_psd(root))

    def test_psd_sqrt_rejects_negative_spectrum(self):
        with self.assertRaises(NotPSD):
            matcore.psd_sqrt(np.diag([1.0, -1.0]))

    def test_exp_i_hermitian(self):
        z = np.diag([1.0, -1.0])
        assert_allclose(matcore.exp_i_hermitian(z, np.pi), -np.eye(2), atol=1e-12)

    def test_random_unitary(self):
        u = matcore.random_unitary(4, np.random.default_rng(3))
        self.assertTrue(matcore.is_unitary(u))
        self.assertFalse(matcore.is_unitary(2 * u))

    def test_as_cmatrix_rejects_bad_input(self):
        with self.assertRaises(ShapeMismatch):
            matcore.as_cmatrix(np.zeros((2, 2, 2)))
        with self.assertRaises(ValueError):
            matcore.as_cmatrix([[np.nan]])
