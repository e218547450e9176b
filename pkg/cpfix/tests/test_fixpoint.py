import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from cpfix.conf import ToolkitConfig
from cpfix.cpsemi import CPMap, SemigroupFamily, amplitude_damping, identity_map, random_commuting_mixture, rotation
from cpfix.dilation import Minimality, MinimalityVerdict, build_identity_control, build_tail_shift
from cpfix.exceptions import Divergent, NoConvergence, NotFixed, NotInCStar
from cpfix.fixpoint import (FixedSpace, check_complete_isometry, cstar_closure, ergodic_projection,
                            fixed_space, kernel_ideal_check, lift_fixed_point, phi_limit, pi_limit,
                            projection_residuals, property_suite)
from cpfix.reports import Status
from cpfix.vnalg import AlgebraElement, BlockStructure, ElementSpan, ProjectionElement

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])
M2 = BlockStructure((2,))


def _unit(i, j):
    return AlgebraElement.matrix_unit(M2, 0, i, j)


class RotationTests(SimpleTestCase):
    """Rotation by a phase: diagonal fixed points, off-diagonal orbits that never settle."""

    def setUp(self):
        self.family = SemigroupFamily.build([rotation(np.pi / 3)])

    def test_fixed_space_is_diagonal(self):
        fs = fixed_space(self.family)
        self.assertEqual(fs.dimension, 2)
        self.assertTrue(fs.contains(_unit(0, 0)))
        self.assertFalse(fs.contains(_unit(0, 1)))

    def test_ergodic_projection_kills_off_diagonal(self):
        ep = ergodic_projection(self.family)
        assert_allclose(ep(_unit(0, 1)).blocks[0], np.zeros((2, 2)), atol=1e-12)
        assert_allclose(ep(_unit(1, 1)).blocks[0], np.diag([0.0, 1.0]), atol=1e-12)
        self.assertEqual(ep.rank, 2)

    def test_off_diagonal_orbit_diverges(self):
        with self.assertRaises(Divergent) as cm:
            phi_limit(self.family, _unit(0, 1), max_iter=500)
        self.assertEqual(cm.exception.iterations, 500)
        assert_allclose(phi_limit(self.family, _unit(0, 0)).blocks[0], np.diag([1.0, 0.0]))

    def test_kernel_check_is_trivial(self):
        report = kernel_ideal_check(self.family)
        self.assertTrue(report.passed)
        self.assertEqual(report.kernel_dim, 0)


class DampingTests(SimpleTestCase):
    def setUp(self):
        self.family = SemigroupFamily.build([amplitude_damping(0.5)])

    def test_fixed_space_is_scalars(self):
        fs = fixed_space(self.family)
        self.assertEqual(fs.dimension, 1)
        self.assertTrue(fs.contains(AlgebraElement.identity(M2)))

    def test_ergodic_projection(self):
        ep = ergodic_projection(self.family)
        assert_allclose(ep(_unit(1, 1)).blocks[0], np.zeros((2, 2)), atol=1e-9)
        assert_allclose(ep(_unit(0, 0)).blocks[0], np.eye(2), atol=1e-9)
        residuals = projection_residuals(ep, self.family, fixed_space(self.family))
        self.assertLess(residuals['idempotence'], 1e-8)
        self.assertGreater(residuals['choi_min_eig'], -1e-9)
        self.assertEqual(residuals['rank_gap'], 0)

    def test_limit_agrees_with_projection(self):
        assert_allclose(phi_limit(self.family, _unit(0, 0)).blocks[0], np.eye(2), atol=1e-8)
        assert_allclose(phi_limit(self.family, _unit(1, 1)).blocks[0], np.zeros((2, 2)), atol=1e-8)


def _restriction_to_corner():
    """``(x0, x1) -> (x0, x0[0, 0])`` on M2 + M1: an idempotent map whose kernel is ``0 + M1``."""
    s = BlockStructure((2, 1))
    return SemigroupFamily.build([CPMap(s, s, {(0, 0): [np.eye(2)], (1, 0): [np.array([[1.0, 0.0]])]})])


class CesaroCapTests(SimpleTestCase):
    def test_slow_decay_is_reported(self):
        family = SemigroupFamily.build([amplitude_damping(1e-7)])
        with self.assertRaises(NoConvergence) as cm:
            ergodic_projection(family)
        self.assertEqual(cm.exception.iterations, 2 ** 19)

        config = ToolkitConfig().with_overrides(max_iter=200)
        entries = {e.task: e for e in property_suite(family, config, samples=1)}
        self.assertIs(entries['RHO'].status, Status.FAIL)
        self.assertTrue(entries['RHO'].detail.startswith('NoConvergence'))
        self.assertNotIn(Status.ERROR, [e.status for e in entries.values()])

    def test_capped_average_of_a_rotation_is_exact(self):
        ep = ergodic_projection(SemigroupFamily.build([rotation(np.pi / 3)]))
        self.assertTrue(ep.diagnostics[0]['cap_reached'])
        self.assertEqual(ep.rank, 2)

    def test_capped_average_of_an_idempotent(self):
        family = _restriction_to_corner()
        ep = ergodic_projection(family)
        self.assertTrue(ep.diagnostics[0]['cap_reached'])
        assert_allclose(ep.matrix, family.superoperators[0].matrix, atol=1e-10)


class KernelIdealTests(SimpleTestCase):
    def test_nontrivial_kernel(self):
        family = _restriction_to_corner()
        self.assertEqual(fixed_space(family).dimension, 4)
        report = kernel_ideal_check(family)
        self.assertFalse(report.trivial)
        self.assertEqual(report.kernel_dim, 1)
        self.assertEqual(report.left_ideal_dim, 1)
        self.assertEqual(report.quadratic_ideal_dim, 1)
        self.assertTrue(report.passed)


class CStarClosureTests(SimpleTestCase):
    def test_closure_of_a_symmetry_contains_the_unit(self):
        span = ElementSpan(M2, hermitian=True)
        span.extend(AlgebraElement(M2, (PAULI_X,)))
        cstar = cstar_closure(FixedSpace(M2, span))
        self.assertEqual(cstar.dimension, 2)
        self.assertTrue(cstar.is_unital)
        self.assertTrue(cstar.contains(AlgebraElement.identity(M2)))


class TailShiftLiftingTests(SimpleTestCase):
    def setUp(self):
        self.instance = build_tail_shift(2, 2, PAULI_X)
        self.x = AlgebraElement(self.instance.corner, (PAULI_X,))

    def test_fixed_dimensions_match(self):
        self.assertEqual(fixed_space(self.instance.alpha).dimension, 2)
        self.assertEqual(fixed_space(self.instance.phi).dimension, 2)

    def test_lift_of_the_symmetry(self):
        lift = lift_fixed_point(self.instance, self.x)
        self.assertEqual(sorted(lift.routes), ['pi', 'solve'])
        for block in lift.value.blocks:
            assert_allclose(block, PAULI_X, atol=1e-10)
        self.assertLess(lift.discrepancy, 1e-10)

    def test_lift_follows_the_given_verdict(self):
        verdict = MinimalityVerdict(Minimality.NON_MINIMAL, 0, None, (1.0,), True)
        with self.assertLogs('cpfix', 'WARNING'):
            lift = lift_fixed_point(self.instance, self.x, minimality=verdict)
        self.assertEqual(list(lift.routes), ['solve'])
        for block in lift.value.blocks:
            assert_allclose(block, PAULI_X, atol=1e-10)

    def test_pi_limit(self):
        z = pi_limit(self.instance, AlgebraElement.identity(self.instance.corner))
        self.assertAlmostEqual((z - AlgebraElement.identity(self.instance.ambient)).frobenius(), 0.0, places=10)

    def test_rejects_elements_that_are_not_fixed(self):
        e00 = AlgebraElement.matrix_unit(self.instance.corner, 0, 0, 0)
        with self.assertRaises(NotFixed):
            lift_fixed_point(self.instance, e00)
        with self.assertRaises(NotInCStar):
            pi_limit(self.instance, e00)

    def test_complete_isometry(self):
        report = check_complete_isometry(self.instance, levels=2, samples=5, seed=1)
        self.assertTrue(report.bijective)
        self.assertTrue(report.passed)
        self.assertEqual(sorted(report.defects), [1, 2])


class IdentityControlLiftingTests(SimpleTestCase):
    def test_lift_uses_linear_algebra_only(self):
        s = BlockStructure((2, 2))
        instance = build_identity_control(s, ProjectionElement.on_blocks(s, {0}))
        y = AlgebraElement.random(instance.corner, np.random.default_rng(0))
        with self.assertLogs('cpfix', 'WARNING'):
            lift = lift_fixed_point(instance, y)
        self.assertEqual(list(lift.routes), ['solve'])
        self.assertAlmostEqual((instance.compress(lift.value) - y).frobenius(), 0.0, places=10)


class PropertySuiteTests(SimpleTestCase):
    def assertAllPassed(self, entries):
        failed = {e.task: e.detail for e in entries if not e.passed}
        self.assertEqual(failed, {})

    def test_identity_family(self):
        entries = property_suite(SemigroupFamily.build([identity_map(BlockStructure((1, 2)))]), samples=3)
        self.assertEqual([e.task for e in entries],
                         ['RHO', 'KS', 'MONO', 'LIM', 'LIMIT', 'ZERO', 'CE', 'VEC', 'KER', 'RANGE'])
        self.assertAllPassed(entries)

    def test_example_families(self):
        families = {
            'rotation': [rotation(0.4)],
            'damping': [amplitude_damping(0.3)],
            'two rotations': [rotation(0.4), rotation(1.3)],
        }
        for name, gens in families.items():
            with self.subTest(family=name):
                self.assertAllPassed(property_suite(SemigroupFamily.build(gens), seed=2, samples=3))

    def test_random_mixture(self):
        family = random_commuting_mixture(BlockStructure((2, 3)), np.random.default_rng(1))
        self.assertAllPassed(property_suite(family, seed=1, samples=3))

    def test_tail_shift_dilation(self):
        entries = property_suite(build_tail_shift(2, 2, PAULI_X), samples=3)
        statuses = {e.task: e.status for e in entries}
        for task in ('MIN', 'ISO', 'LIFT', 'FACT', 'HOM', 'LIFTFP'):
            self.assertIs(statuses[task], Status.PASS, task)
        self.assertAllPassed(entries)

    def test_identity_control_dilation(self):
        s = BlockStructure((2, 2))
        instance = build_identity_control(s, ProjectionElement.on_blocks(s, {0}))
        with self.assertLogs('cpfix', 'WARNING'):
            entries = property_suite(instance, samples=3, expect_minimal=False)
        statuses = {e.task: e.status for e in entries}
        self.assertIs(statuses['MIN'], Status.PASS)
        self.assertIs(statuses['ISO'], Status.SKIPPED)
        self.assertAllPassed(entries)
        computed = {e.task: e.data.get('computed') for e in entries}
        self.assertEqual(computed['ISO'], 'FAIL')
        self.assertEqual(computed['LIFT'], 'FAIL')

        with self.assertLogs('cpfix', 'WARNING'):
            strict = property_suite(instance, samples=3, expect_minimal=True)
        self.assertIs({e.task: e.status for e in strict}['MIN'], Status.FAIL)

    def test_entries_carry_seed(self):
        entries = property_suite(SemigroupFamily.build([rotation(0.4)]), seed=9, samples=2)
        self.assertTrue(all(e.seed == 9 for e in entries))

    def test_rejects_other_targets(self):
        with self.assertRaises(TypeError):
            property_suite('rotation')
