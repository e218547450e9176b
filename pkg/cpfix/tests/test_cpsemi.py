import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from cpfix import matcore
from cpfix.cpsemi import (CPMap, SemigroupFamily, Superoperator, amplitude_damping, compose, conjugation,
                          endomorphism_defect, identity_map, power, power_family, random_commuting_mixture,
                          rotation, scaled, validate_cp, validate_endomorphism, validate_family)
from cpfix.exceptions import (NotCommuting, NotCompletelyPositive, NotContractive, ShapeMismatch,
                              ValidationFailed)
from cpfix.vnalg import AlgebraElement, BlockStructure

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])


def _random_cross_block_map(rng):
    """CP map on M2 + M3 with Kraus operators between and inside the blocks."""
    s = BlockStructure((2, 3))

    def g(rows, cols):
        return 0.3 * (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols)))

    return CPMap(s, s, {(0, 0): [g(2, 2)], (0, 1): [g(2, 3), g(2, 3)], (1, 0): [g(3, 2)], (1, 1): [g(3, 3)]})


class ExampleMapTests(SimpleTestCase):
    def setUp(self):
        self.m2 = BlockStructure((2,))
        self.e01 = AlgebraElement.matrix_unit(self.m2, 0, 0, 1)

    def test_rotation_phase(self):
        theta = 0.7
        assert_allclose(rotation(theta)(self.e01).blocks[0], np.exp(1j * theta) * self.e01.blocks[0], atol=1e-15)

    def test_conjugation_phase(self):
        theta = 0.7
        phi = conjugation(np.diag([1.0, np.exp(1j * theta)]))
        assert_allclose(phi(self.e01).blocks[0], np.exp(-1j * theta) * self.e01.blocks[0], atol=1e-15)

    def test_amplitude_damping(self):
        phi = amplitude_damping(0.5)
        e00 = AlgebraElement.matrix_unit(self.m2, 0, 0, 0)
        e11 = AlgebraElement.matrix_unit(self.m2, 0, 1, 1)
        assert_allclose(phi(e00).blocks[0], np.diag([1.0, 0.5]), atol=1e-15)
        assert_allclose(phi(e11).blocks[0], np.diag([0.0, 0.5]), atol=1e-15)
        self.assertTrue(validate_cp(phi).is_unital)


class SuperoperatorTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(7)
        self.phi = _random_cross_block_map(self.rng)

    def test_superoperator_matches_kraus_action(self):
        for _ in range(3):
            x = AlgebraElement.random(self.phi.source, self.rng)
            self.assertAlmostEqual((self.phi.superoperator(x) - self.phi(x)).frobenius(), 0.0, places=12)

    def test_compose(self):
        psi = _random_cross_block_map(self.rng)
        x = AlgebraElement.random(self.phi.source, self.rng)
        self.assertAlmostEqual((compose(self.phi, psi)(x) - self.phi(psi(x))).frobenius(), 0.0, places=12)
        assert_allclose((self.phi.superoperator @ psi.superoperator).matrix,
                        compose(self.phi, psi).superoperator.matrix, atol=1e-12)

    def test_choi_round_trip(self):
        rebuilt = CPMap.from_superoperator(self.phi.superoperator)
        assert_allclose(rebuilt.superoperator.matrix, self.phi.superoperator.matrix, atol=1e-10)

    def test_transpose_is_not_completely_positive(self):
        s = BlockStructure((2,))
        swap = np.zeros((4, 4))
        for a in range(2):
            for b in range(2):
                swap[b * 2 + a, a * 2 + b] = 1.0
        with self.assertRaises(NotCompletelyPositive):
            CPMap.from_superoperator(Superoperator(swap, s, s))

    def test_reduced_keeps_the_map(self):
        s = BlockStructure((2,))
        ops = [matcore.random_unitary(2, self.rng) / np.sqrt(6) for _ in range(6)]
        phi = CPMap(s, s, {(0, 0): ops})
        reduced = phi.reduced()
        self.assertLessEqual(reduced.kraus_count, 4)
        assert_allclose(reduced.superoperator.matrix, phi.superoperator.matrix, atol=1e-12)

    def test_wrong_kraus_shape(self):
        s = BlockStructure((2,))
        with self.assertRaises(ShapeMismatch):
            CPMap(s, s, {(0, 0): [np.eye(3)]})


class ValidationTests(SimpleTestCase):
    def test_validate_cp_flags(self):
        s = BlockStructure((2,))
        report = validate_cp(scaled(identity_map(s), 2.0), check_choi=True)
        self.assertTrue(report.is_cp)
        self.assertFalse(report.is_contractive)
        self.assertTrue(report.is_normal)
        sub = validate_cp(scaled(identity_map(s), 0.5))
        self.assertTrue(sub.ok)
        self.assertFalse(sub.is_unital)

    def test_endomorphisms(self):
        u = matcore.random_unitary(3, np.random.default_rng(2))
        self.assertTrue(validate_endomorphism(conjugation(u)))
        self.assertFalse(validate_endomorphism(amplitude_damping(0.5)))
        self.assertGreater(endomorphism_defect(amplitude_damping(0.5)), 0.1)

    def test_build_rejects_non_contractive(self):
        with self.assertRaises(NotContractive):
            SemigroupFamily.build([scaled(identity_map(BlockStructure((2,))), 2.0)])

    def test_build_rejects_non_commuting(self):
        with self.assertRaises(NotCommuting):
            SemigroupFamily.build([rotation(0.3), conjugation(PAULI_X)])

    def test_build_endomorphic(self):
        family = SemigroupFamily.build([rotation(0.3), rotation(1.1)], endomorphic=True)
        self.assertTrue(family.is_endomorphic)
        with self.assertRaises(ValidationFailed):
            SemigroupFamily.build([amplitude_damping(0.3)], endomorphic=True)

    def test_random_mixtures_commute(self):
        for seed in range(3):
            with self.subTest(seed=seed):
                family = random_commuting_mixture(BlockStructure((2, 3)), np.random.default_rng(seed))
                report = validate_family(family)
                self.assertTrue(report.ok)
                self.assertTrue(all(r.is_unital for r in report.generator_reports))


class PowerTests(SimpleTestCase):
    def setUp(self):
        self.phi = amplitude_damping(0.3)
        self.family = SemigroupFamily.build([self.phi])

    def test_power_is_iterated_composition(self):
        assert_allclose(power(self.family, (2,)).superoperator.matrix,
                        compose(self.phi, self.phi).superoperator.matrix, atol=1e-12)
        assert_allclose(power(self.family, 0).superoperator.matrix, np.eye(4))
        assert_allclose(self.family.superoperator_power((3,)).matrix,
                        np.linalg.matrix_power(self.phi.superoperator.matrix, 3), atol=1e-12)

    def test_multi_index_validation(self):
        with self.assertRaises(ValueError):
            power(self.family, (-1,))
        with self.assertRaises(ShapeMismatch):
            power(self.family, (1, 1))

    def test_power_family_commutes(self):
        family = power_family(self.phi, (1, 2))
        self.assertEqual(family.rank, 2)
        assert_allclose(family.diagonal_step.matrix,
                        np.linalg.matrix_power(self.phi.superoperator.matrix, 3), atol=1e-12)
