"""Fixed points of CP semigroups, their ergodic projection and the lifting to a dilation.

For a commuting family ``phi_1..phi_d`` on ``N``:

* ``N^phi`` is the joint kernel of ``S_i - I`` on superoperators;
* ``rho`` is the product of the one-generator Cesaro projections, a CP idempotent onto ``N^phi``;
* ``Phi`` is ``rho`` restricted to ``C*(N^phi)``, and there it agrees with the plain limit of
  the orbit along the diagonal of ``N^d``.

For an endomorphic dilation ``(M, alpha, p)`` the limit ``pi`` of ``alpha_s`` on
``C*(N^phi)`` lifts fixed points of ``phi`` to fixed points of ``alpha``.
"""
import logging
import math
import time
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import matcore
from .conf import ToolkitConfig
from .cpsemi import SemigroupFamily, Superoperator, choi_min_eigenvalue, validate_cp
from .dilation import DilationInstance, check_minimality
from .exceptions import (CpfixError, Divergent, Inconsistent, NoConvergence, NotContractive, NotFixed,
                         NotInCStar)
from .reports import Entry, Status
from .vnalg import (AlgebraElement, ElementSpan, amplify_element, amplify_embedding, compress)

logger = logging.getLogger(__name__)

NULLSPACE_TOL = 1e-9
MEMBERSHIP_TOL = 1e-8
CONVERGENCE_TOL = 1e-10
MAX_ITER = 100000
CAUCHY_WINDOW = 5
CESARO_TOL = 1e-11
CESARO_CAP = 1000000
LIMIT_AGREEMENT_TOL = 1e-7
ROUTE_AGREEMENT_TOL = 1e-7
CHOI_EFFROS_TOL = 1e-9

# Cesaro averages farther than this from an idempotent are not purified
_PURIFY_RADIUS = 0.1
_PURIFY_MAX_STEPS = 60


@dataclass(frozen=True, eq=False)
class FixedSpace:
    """Self-adjoint orthonormal basis of ``{x : phi_i(x) = x for all i}``."""

    structure: object
    span: ElementSpan

    @property
    def basis(self):
        return self.span.elements

    @property
    def dimension(self):
        return self.span.dimension

    @property
    def matrix(self):
        return self.span.matrix

    def contains(self, x, tol=MEMBERSHIP_TOL):
        return self.span.contains(x, tol)

    def random_element(self, rng):
        return self.span.random_element(rng)


def fixed_space(family, tol=NULLSPACE_TOL, span_tol=MEMBERSHIP_TOL):
    structure = family.structure
    eye = np.eye(structure.dimension)
    stacked = np.vstack([s.matrix - eye for s in family.superoperators])
    null = matcore.nullspace(stacked, tol)
    span = ElementSpan(structure, hermitian=True, tol=span_tol)
    span.extend_all(AlgebraElement.from_vector(structure, null[:, k]) for k in range(null.shape[1]))
    if span.dimension != null.shape[1]:
        logger.warning("symmetrized fixed space has dimension %d, nullspace %d",
                       span.dimension, null.shape[1])
    logger.debug("fixed space of %s has dimension %d", structure, span.dimension)
    return FixedSpace(structure, span)


@dataclass(frozen=True, eq=False)
class CStarSpan:
    structure: object
    span: ElementSpan
    is_unital: bool
    rounds: int = 0

    @property
    def basis(self):
        return self.span.elements

    @property
    def dimension(self):
        return self.span.dimension

    @property
    def matrix(self):
        return self.span.matrix

    def contains(self, x, tol=MEMBERSHIP_TOL):
        return self.span.contains(x, tol)

    def random_element(self, rng):
        return self.span.random_element(rng)


def cstar_closure(fs, tol=MEMBERSHIP_TOL):
    """The *-algebra generated by ``fs``: add pair products until the span stops growing.

    Basis elements are self-adjoint, so ``ba = (ab)*`` and unordered pairs suffice.
    """
    span = ElementSpan(fs.structure, hermitian=True, tol=tol)
    span.extend_all(fs.basis)
    rounds = 0
    while True:
        rounds += 1
        basis = span.elements
        grew = False
        for a_idx, a in enumerate(basis):
            for b in basis[a_idx:]:
                grew = span.extend(a @ b) or grew
        if not grew:
            break
    unital = span.dimension > 0 and span.contains(AlgebraElement.identity(fs.structure), tol)
    logger.debug("C*-closure reached dimension %d after %d rounds", span.dimension, rounds)
    return CStarSpan(fs.structure, span, unital, rounds)


@dataclass(frozen=True, eq=False)
class ErgodicProjection:
    rho: Superoperator
    diagnostics: tuple = ()

    def __call__(self, y):
        return self.rho(y)

    @property
    def matrix(self):
        return self.rho.matrix

    @property
    def rank(self):
        return int(round(float(np.real(np.trace(self.rho.matrix)))))


def _cesaro_projection(s, cesaro_tol, cap, eq_tol):
    """Cesaro limit of the powers of ``s`` by dyadic doubling, then purified to an idempotent."""
    size = s.shape[0]
    eye = np.eye(size, dtype=np.complex128)
    average, power, terms = eye, s.copy(), 1
    increment = math.inf
    while 2 * terms <= cap:
        following = average @ (eye + power) / 2
        increment = float(np.max(np.abs(following - average)))
        average, power, terms = following, power @ power, 2 * terms
        if increment <= cesaro_tol:
            break
    cap_reached = increment > cesaro_tol

    scale = matcore.scale_of(average)
    defect = float(np.linalg.norm(average @ average - average))
    if defect > _PURIFY_RADIUS * scale:
        raise NoConvergence(f"Cesaro average after {terms} terms is {defect:.3e} away from idempotent",
                            iterations=terms)
    steps = 0
    while defect > 1e-14 * scale and steps < _PURIFY_MAX_STEPS:
        square = average @ average
        candidate = 3 * square - 2 * square @ average
        following = float(np.linalg.norm(candidate @ candidate - candidate))
        if following >= defect:
            break
        average, defect = candidate, following
        steps += 1
    if defect > eq_tol:
        raise NoConvergence(f"purified Cesaro average keeps an idempotence defect of {defect:.3e}",
                            iterations=terms)
    if cap_reached:
        # a capped average may have rounded slowly decaying modes up to 1
        moved = float(np.linalg.norm(s @ average - average))
        rank = int(round(float(np.real(np.trace(average)))))
        kernel = matcore.nullspace(s - eye, NULLSPACE_TOL).shape[1]
        if moved > eq_tol * scale or rank != kernel:
            raise NoConvergence(f"Cesaro cap of {cap} terms reached (increment {increment:.3e}); "
                                f"projection of rank {rank} against {kernel} fixed directions, "
                                f"moved by {moved:.3e}", iterations=terms)
    return average, {'terms': terms, 'increment': increment, 'purification_steps': steps,
                     'cap_reached': cap_reached}


def ergodic_projection(family, cesaro_tol=CESARO_TOL, cap=CESARO_CAP, eq_tol=1e-8, tol=1e-9):
    """``rho = P_1 ... P_d`` with ``P_i`` the Cesaro projection of generator ``i``."""
    for k, gen in enumerate(family.generators):
        if not validate_cp(gen, tol).ok:
            raise NotContractive(f"generator {k} is not contractive")
    structure = family.structure
    rho = np.eye(structure.dimension, dtype=np.complex128)
    diagnostics = []
    for k, s in enumerate(family.superoperators):
        projection, info = _cesaro_projection(s.matrix, cesaro_tol, cap, eq_tol)
        logger.debug("generator %d: Cesaro terms=%d increment=%.2e purification=%d",
                     k, info['terms'], info['increment'], info['purification_steps'])
        diagnostics.append(info)
        rho = rho @ projection
    return ErgodicProjection(Superoperator(rho, structure, structure), tuple(diagnostics))


def projection_residuals(ep, family, fs):
    """Defects of the properties an ergodic projection must have."""
    structure = family.structure
    r = ep.matrix
    one = AlgebraElement.identity(structure)
    out = {
        'idempotence': matcore.op_norm(r @ r - r),
        'choi_min_eig': choi_min_eigenvalue(ep.rho),
        'unit_excess': -(one - ep(one)).min_eigenvalue(hermitian_tol=1e-6),
        'left_intertwining': max(matcore.op_norm(s.matrix @ r - r) for s in family.superoperators),
        'right_intertwining': max(matcore.op_norm(r @ s.matrix - r) for s in family.superoperators),
        'fixed_action': max(((ep(b) - b).frobenius() for b in fs.basis), default=0.0),
        'rank_gap': abs(ep.rank - fs.dimension),
    }
    return out


@dataclass
class Limit:
    value: AlgebraElement
    iterations: int
    increment: float


def diagonal_limit(family, y, tol=CONVERGENCE_TOL, max_iter=MAX_ITER, window=CAUCHY_WINDOW):
    """Follow ``y, theta(y), theta^2(y), ...`` with ``theta = beta_(1,...,1)`` until ``window``
    consecutive increments are below ``tol``; the limit must then be fixed by every generator."""
    if y.structure != family.structure:
        raise ValueError(f"element lives on {y.structure}, family on {family.structure}")
    step = family.diagonal_step.matrix
    v = y.to_vector()
    threshold = tol * max(1.0, float(np.linalg.norm(v)))
    calm, increment, n = 0, math.inf, 0
    while calm < window:
        if n >= max_iter:
            raise Divergent(f"orbit not Cauchy after {n} diagonal steps (last increment {increment:.3e})",
                            iterations=n, increment=increment)
        following = step @ v
        increment = float(np.linalg.norm(following - v))
        v = following
        n += 1
        calm = calm + 1 if increment <= threshold else 0
    for k, s in enumerate(family.superoperators):
        residual = float(np.linalg.norm(s.matrix @ v - v))
        if residual > 10 * threshold:
            raise Divergent(f"diagonal limit is moved by generator {k} (residual {residual:.3e})",
                            iterations=n, increment=residual)
    logger.debug("diagonal limit reached after %d steps", n)
    return Limit(AlgebraElement.from_vector(family.structure, v), n, increment)


def phi_limit(family, y, tol=CONVERGENCE_TOL, max_iter=MAX_ITER, window=CAUCHY_WINDOW):
    return diagonal_limit(family, y, tol, max_iter, window).value


def pi_limit(instance, y, cstar=None, tol=CONVERGENCE_TOL, max_iter=MAX_ITER, window=CAUCHY_WINDOW,
             membership_tol=MEMBERSHIP_TOL, minimality=None):
    """``pi(y) = lim_s alpha_s(y)`` for ``y`` in ``C*(N^phi)``, computed in the ambient algebra.

    ``minimality`` is a precomputed verdict; by default the instance checks itself.
    """
    if minimality is None:
        minimality = instance.minimality
    if cstar is None:
        cstar = cstar_closure(fixed_space(instance.phi))
    if not cstar.contains(y, membership_tol):
        raise NotInCStar(f"element is {cstar.span.distance(y):.3e} away from C*(N^phi)")
    if not minimality.is_minimal:
        logger.warning("pi limit on a dilation that is not known to be minimal (%s)", minimality.kind.value)
    return diagonal_limit(instance.alpha, instance.inject(y), tol, max_iter, window).value


@dataclass
class Lift:
    value: AlgebraElement
    routes: dict = field(default_factory=dict)
    discrepancy: float = 0.0


def _lift_by_solve(instance, y, ambient_fixed):
    """Least-squares ``z`` in ``M^alpha`` with ``E(z) = y``."""
    q = ambient_fixed.matrix
    if q.shape[1] == 0:
        return AlgebraElement.zero(instance.ambient)
    coeffs, *_ = np.linalg.lstsq(instance.compression_matrix @ q, y.to_vector(), rcond=None)
    return AlgebraElement.from_vector(instance.ambient, q @ coeffs)


def lift_fixed_point(instance, y, ambient_fixed=None, cstar=None, tol=MEMBERSHIP_TOL,
                     agreement_tol=ROUTE_AGREEMENT_TOL, limit_tol=CONVERGENCE_TOL, max_iter=MAX_ITER,
                     minimality=None):
    """Lift ``y`` in ``N^phi`` to ``z`` in ``M^alpha`` with ``E(z) = y``.

    The linear-algebra route always runs; on minimal instances the ``pi`` route runs as well
    and both must agree.
    """
    scale = max(1.0, y.frobenius())
    moved = max((gen(y) - y).frobenius() for gen in instance.phi.generators)
    if moved > tol * scale:
        raise NotFixed(f"y is moved by {moved:.3e} under phi")
    if ambient_fixed is None:
        ambient_fixed = fixed_space(instance.alpha)

    solved = _lift_by_solve(instance, y, ambient_fixed)
    if (instance.compress(solved) - y).frobenius() > tol * scale:
        raise NotFixed("no element of M^alpha compresses to y")
    routes = {'solve': solved}
    if minimality is None:
        minimality = instance.minimality
    if not minimality.is_minimal:
        logger.warning("lifting without the pi route: dilation is %s", minimality.kind.value)
        return Lift(solved, routes)

    limit = pi_limit(instance, y, cstar=cstar, tol=limit_tol, max_iter=max_iter, minimality=minimality)
    routes['pi'] = limit
    discrepancy = (limit - solved).frobenius()
    if discrepancy > agreement_tol * scale:
        raise Inconsistent(f"pi route and linear-algebra route differ by {discrepancy:.3e}")
    return Lift(limit, routes, discrepancy)


@dataclass
class IsometryReport:
    defects: dict
    ambient_dim: int
    corner_dim: int
    rank: int
    samples: int
    tol: float = 1e-8

    @property
    def max_defect(self):
        return max(self.defects.values(), default=0.0)

    @property
    def bijective(self):
        return self.ambient_dim == self.corner_dim == self.rank

    @property
    def passed(self):
        return self.bijective and self.max_defect <= self.tol


def check_complete_isometry(instance, levels=3, samples=100, seed=0, ambient_fixed=None,
                            corner_fixed=None, tol=1e-8):
    """Compare ``||X||`` with ``||(E entrywise)(X)||`` on random ``X`` in ``M_k(M^alpha)``."""
    ambient_fixed = ambient_fixed or fixed_space(instance.alpha)
    corner_fixed = corner_fixed or fixed_space(instance.phi)
    basis = ambient_fixed.basis
    rank = 0
    if basis:
        restricted = instance.compression_matrix @ ambient_fixed.matrix
        rank = len(basis) - matcore.nullspace(restricted, NULLSPACE_TOL).shape[1]
    rng = np.random.default_rng(seed)
    zero = AlgebraElement.zero(instance.ambient)
    defects = {}
    for k in range(1, levels + 1):
        emb_k = amplify_embedding(instance.embedding, k)
        worst = 0.0
        for _ in range(samples if basis else 0):
            shape = (len(basis), k, k)
            coeffs = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
            array = [[sum((b * complex(c[r, col]) for c, b in zip(coeffs, basis)), zero)
                      for col in range(k)] for r in range(k)]
            x = amplify_element(array)
            norm = x.norm()
            worst = max(worst, abs(compress(emb_k, x).norm() - norm) / max(1.0, norm))
        defects[k] = worst
    logger.debug("complete isometry defects %s", defects)
    return IsometryReport(defects, ambient_fixed.dimension, corner_fixed.dimension, rank, samples, tol)


@dataclass
class KernelReport:
    kernel_dim: int
    left_ideal_dim: int
    quadratic_ideal_dim: int
    two_sided_dim: int
    trivial: bool = False
    outside_kernel: float = 0.0

    @property
    def passed(self):
        return self.trivial or (self.kernel_dim == self.left_ideal_dim == self.quadratic_ideal_dim
                                and self.outside_kernel <= MEMBERSHIP_TOL)


def _ideal_closure(generators, multipliers, structure, tol, right=False):
    span = ElementSpan(structure, tol=tol)
    span.extend_all(generators)
    while True:
        grew = False
        for k in span.elements:
            for a in multipliers:
                grew = span.extend(a @ k) or grew
                if right:
                    grew = span.extend(k @ a) or grew
        if not grew:
            return span


def _polarized(basis):
    """``x`` for each basis element and ``x + y``, ``x + iy`` for each pair."""
    out = list(basis)
    for k, x in enumerate(basis):
        for y in basis[k + 1:]:
            out.append(x + y)
            out.append(x + 1j * y)
    return out


def kernel_ideal_check(family, fs=None, cstar=None, ep=None, tol=MEMBERSHIP_TOL):
    """``ker Phi`` inside ``C*(N^phi)`` against the left ideals generated by
    ``xy - Phi(xy)`` and ``x*x - Phi(x*x)`` for ``x, y`` in ``N^phi``.

    The span of ``x*x`` over the polarized basis contains every ``y*x``, so both generating
    sets give the same ideal; the two-sided closure is reported alongside.
    """
    fs = fs or fixed_space(family)
    if fs.dimension == 0:
        return KernelReport(0, 0, 0, 0, trivial=True)
    cstar = cstar or cstar_closure(fs)
    ep = ep or ergodic_projection(family)
    structure = family.structure

    kernel_dim = matcore.nullspace(ep.matrix @ cstar.matrix, tol).shape[1]

    products = [x @ y for x in fs.basis for y in fs.basis]
    left = [xy - ep(xy) for xy in products]
    squares = [x.adjoint() @ x for x in _polarized(fs.basis)]
    quadratic = [xx - ep(xx) for xx in squares]
    multipliers = cstar.basis

    left_span = _ideal_closure(left, multipliers, structure, tol)
    quadratic_span = _ideal_closure(quadratic, multipliers, structure, tol)
    two_sided = _ideal_closure(quadratic, multipliers, structure, tol, right=True)
    outside = max((ep(k).frobenius() for k in left_span.elements + quadratic_span.elements), default=0.0)
    report = KernelReport(kernel_dim, left_span.dimension, quadratic_span.dimension, two_sided.dimension,
                          outside_kernel=outside)
    logger.debug("kernel check: %s", report)
    return report


class FamilyAnalysis:
    """Lazily computed fixed space, C*-closure and ergodic projection of one family."""

    def __init__(self, family, config=None):
        self.family = family
        self.config = config or ToolkitConfig()

    @cached_property
    def fixed(self):
        return fixed_space(self.family)

    @cached_property
    def cstar(self):
        return cstar_closure(self.fixed, self.config.tol_eq)

    @cached_property
    def ergodic(self):
        c = self.config
        return ergodic_projection(self.family, c.cesaro_tol, c.cesaro_cap, c.tol_eq, c.psd_tol)

    def limit(self, y):
        c = self.config
        return diagonal_limit(self.family, y, c.convergence_tol, c.max_iter, c.cauchy_window)


class DilationAnalysis(FamilyAnalysis):
    def __init__(self, instance, config=None):
        super().__init__(instance.phi, config)
        self.instance = instance

    @cached_property
    def ambient_fixed(self):
        return fixed_space(self.instance.alpha)

    @cached_property
    def minimality(self):
        c = self.config
        return check_minimality(self.instance.alpha, self.instance.p, c.minimality_tol, c.minimality_max_iter)

    def pi(self, y):
        c = self.config
        return pi_limit(self.instance, y, self.cstar, c.convergence_tol, c.max_iter, c.cauchy_window,
                        c.tol_eq, minimality=self.minimality)


# property suite

FAILURES = (Divergent, NoConvergence, Inconsistent, NotFixed)


def _run_item(name, seed, body):
    start = time.perf_counter()
    try:
        entry = body()
    except FAILURES as exc:
        entry = Entry(name, Status.FAIL, detail=f"{type(exc).__name__}: {exc}",
                      iterations={'steps': getattr(exc, 'iterations', None)})
    except (CpfixError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        logger.exception("suite item %s raised", name)
        entry = Entry(name, Status.ERROR, detail=f"{type(exc).__name__}: {exc}")
    entry.task, entry.seed = name, seed
    entry.wall_time = time.perf_counter() - start
    return entry


def _verdict(residuals, limits):
    return Status.PASS if all(residuals[k] <= limits[k] for k in limits) else Status.FAIL


def _trivial(name):
    return Entry(name, Status.PASS, detail='trivial fixed space')


def _item_rho(a):
    res = projection_residuals(a.ergodic, a.family, a.fixed)
    tol = a.config.tol_eq
    limits = {'idempotence': tol, 'unit_excess': a.config.psd_tol, 'left_intertwining': tol,
              'right_intertwining': tol, 'fixed_action': tol, 'rank_gap': 0}
    status = _verdict(res, limits)
    if res['choi_min_eig'] < -a.config.psd_tol:
        status = Status.FAIL
    return Entry('RHO', status, residuals=res,
                 iterations={'cesaro_terms': [d['terms'] for d in a.ergodic.diagnostics]},
                 data={'rank': a.ergodic.rank, 'fixed_dim': a.fixed.dimension,
                       'diagnostics': list(a.ergodic.diagnostics)})


def _item_ks(a, rng, samples):
    worst = math.inf
    for _ in range(samples):
        x = AlgebraElement.random(a.family.structure, rng)
        for gen in a.family.generators:
            fx = gen(x)
            gap = gen(x.adjoint() @ x) - fx.adjoint() @ fx
            worst = min(worst, gap.min_eigenvalue(hermitian_tol=1e-6))
    status = Status.PASS if worst >= -a.config.psd_tol else Status.FAIL
    return Entry('KS', status, residuals={'min_eig': worst})


def _fixed_samples(a, rng, samples):
    return a.fixed.basis + [a.fixed.random_element(rng) for _ in range(samples)]


def _item_mono(a, rng, samples, steps=10):
    if a.fixed.dimension == 0:
        return _trivial('MONO')
    step = a.family.diagonal_step
    worst = math.inf
    for x in _fixed_samples(a, rng, samples):
        current = x.adjoint() @ x
        for _ in range(steps):
            for gen in a.family.generators:
                worst = min(worst, (gen(current) - current).min_eigenvalue(hermitian_tol=1e-6))
            current = step(current)
    status = Status.PASS if worst >= -a.config.psd_tol else Status.FAIL
    return Entry('MONO', status, residuals={'min_eig': worst}, iterations={'diagonal_steps': steps})


def _limit_against_rho(a, name, elements):
    worst, most = 0.0, 0
    for y in elements:
        lim = a.limit(y)
        worst = max(worst, (lim.value - a.ergodic(y)).frobenius())
        most = max(most, lim.iterations)
    status = Status.PASS if worst <= LIMIT_AGREEMENT_TOL else Status.FAIL
    return Entry(name, status, residuals={'limit_vs_rho': worst}, iterations={'max_steps': most})


def _item_lim(a, rng, samples):
    if a.fixed.dimension == 0:
        return _trivial('LIM')
    return _limit_against_rho(a, 'LIM', [x.adjoint() @ x for x in _fixed_samples(a, rng, samples)])


def _item_limit(a, rng, samples):
    if a.fixed.dimension == 0:
        return _trivial('LIMIT')
    return _limit_against_rho(a, 'LIMIT', [a.cstar.random_element(rng) for _ in range(samples)])


def _item_zero(a, rng, samples):
    if a.fixed.dimension == 0:
        return _trivial('ZERO')
    worst, most = 0.0, 0
    for x in _fixed_samples(a, rng, samples):
        xx = x.adjoint() @ x
        lim = a.limit(a.ergodic(xx) - xx)
        worst = max(worst, lim.value.frobenius())
        most = max(most, lim.iterations)
    status = Status.PASS if worst <= LIMIT_AGREEMENT_TOL else Status.FAIL
    return Entry('ZERO', status, residuals={'limit_norm': worst}, iterations={'max_steps': most})


def _item_ce(a, rng, samples):
    if a.fixed.dimension == 0:
        return _trivial('CE')
    big_phi = a.ergodic
    worst = 0.0
    for _ in range(samples):
        x, y = a.cstar.random_element(rng), a.cstar.random_element(rng)
        px = big_phi(x)
        worst = max(worst, (big_phi(px @ y) - big_phi(px @ big_phi(y))).frobenius())
    status = Status.PASS if worst <= CHOI_EFFROS_TOL else Status.FAIL
    return Entry('CE', status, residuals={'choi_effros': worst})


def _item_vec(a, rng, samples, max_step=10):
    if a.fixed.dimension == 0:
        return _trivial('VEC')
    structure = a.family.structure
    worst = -math.inf
    for _ in range(samples):
        x = a.fixed.random_element(rng)
        xx = x.adjoint() @ x
        y = a.ergodic(xx) - xx
        root = ((y + y.adjoint()) * 0.5).sqrt(psd_tol=1e-6)
        b = a.cstar.random_element(rng)
        s = int(rng.integers(0, max_step + 1))
        phi_s = a.family.superoperator_power((s,) * a.family.rank)
        h = rng.standard_normal(structure.hilbert_dim) + 1j * rng.standard_normal(structure.hilbert_dim)
        h /= np.linalg.norm(h)
        lhs = float(np.linalg.norm(phi_s(b @ root).embed() @ h)) ** 2
        rhs = b.norm() ** 2 * float(np.real(np.vdot(h, phi_s(y).embed() @ h)))
        worst = max(worst, lhs - rhs)
    status = Status.PASS if worst <= a.config.psd_tol else Status.FAIL
    return Entry('VEC', status, residuals={'excess': worst})


def _item_ker(a):
    report = kernel_ideal_check(a.family, a.fixed, a.cstar, a.ergodic, a.config.tol_eq)
    return Entry('KER', Status.PASS if report.passed else Status.FAIL,
                 residuals={'outside_kernel': report.outside_kernel},
                 detail='trivial fixed space' if report.trivial else '',
                 data={'kernel_dim': report.kernel_dim, 'left_ideal_dim': report.left_ideal_dim,
                       'quadratic_ideal_dim': report.quadratic_ideal_dim,
                       'two_sided_dim': report.two_sided_dim})


def _item_range(a):
    if a.fixed.dimension == 0:
        return _trivial('RANGE')
    images = [a.ergodic(b) for b in a.cstar.basis]
    outside = max(a.fixed.span.distance(y) for y in images)
    restricted = a.ergodic.matrix @ a.cstar.matrix
    rank = a.cstar.dimension - matcore.nullspace(restricted, NULLSPACE_TOL).shape[1]
    res = {'outside_fixed': outside, 'rank_gap': abs(rank - a.fixed.dimension)}
    return Entry('RANGE', _verdict(res, {'outside_fixed': a.config.tol_eq, 'rank_gap': 0}), residuals=res,
                 data={'cstar_dim': a.cstar.dimension, 'fixed_dim': a.fixed.dimension})


def _item_min(d, expect_minimal):
    verdict = d.minimality
    observed = verdict.is_minimal
    status = Status.PASS if observed == expect_minimal else Status.FAIL
    data = {'verdict': verdict.kind.value, 'monotone': verdict.monotone}
    if verdict.limit is not None:
        data['limit'] = [b.tolist() for b in verdict.limit.blocks]
    return Entry('MIN', status, iterations={'steps': verdict.steps},
                 residuals={'final_defect': verdict.defect_norms[-1]}, data=data,
                 detail='' if status is Status.PASS else f"expected {'minimal' if expect_minimal else 'non-minimal'}")


def _requires_minimal(d, body):
    """Run ``body``; on a dilation that is not minimal the outcome is kept for reference only."""
    if d.minimality.is_minimal:
        return body()
    try:
        entry = body()
        computed = entry.status
        note = entry.detail or f"computed {computed.value}"
    except FAILURES as exc:
        entry, computed = Entry('', Status.SKIPPED), Status.FAIL
        note = f"{type(exc).__name__}: {exc}"
    entry.data = {**entry.data, 'computed': computed.value}
    entry.status = Status.SKIPPED
    entry.detail = f"not established without minimality ({note})"
    return entry


def _item_iso(d, seed, samples):
    c = d.config
    report = check_complete_isometry(d.instance, c.isometry_levels, samples, seed,
                                     d.ambient_fixed, d.fixed, c.tol_eq)
    return Entry('ISO', Status.PASS if report.passed else Status.FAIL,
                 residuals={f"level_{k}": v for k, v in report.defects.items()},
                 data={'ambient_fixed_dim': report.ambient_dim, 'corner_fixed_dim': report.corner_dim,
                       'rank': report.rank})


def _item_lift(d, rng, samples):
    worst = 0.0
    for _ in range(samples if d.ambient_fixed.dimension else 0):
        x = d.ambient_fixed.random_element(rng)
        worst = max(worst, (d.pi(d.instance.compress(x)) - x).frobenius())
    status = Status.PASS if worst <= d.config.tol_eq else Status.FAIL
    return Entry('LIFT', status, residuals={'pi_after_E': worst})


def _item_fact(d, rng, samples):
    if d.fixed.dimension == 0:
        return _trivial('FACT')
    worst = 0.0
    for _ in range(samples):
        y = d.cstar.random_element(rng)
        worst = max(worst, (d.instance.compress(d.pi(y)) - d.ergodic(y)).frobenius())
    status = Status.PASS if worst <= LIMIT_AGREEMENT_TOL else Status.FAIL
    return Entry('FACT', status, residuals={'E_after_pi_vs_Phi': worst})


def _item_hom(d, rng, samples):
    if d.fixed.dimension == 0:
        return _trivial('HOM')
    mult = star = 0.0
    for _ in range(samples):
        a, b = d.cstar.random_element(rng), d.cstar.random_element(rng)
        pa, pb = d.pi(a), d.pi(b)
        mult = max(mult, (d.pi(a @ b) - pa @ pb).frobenius())
        star = max(star, (d.pi(a.adjoint()) - pa.adjoint()).frobenius())
    res = {'multiplicative': mult, 'adjoint': star}
    return Entry('HOM', _verdict(res, {'multiplicative': LIMIT_AGREEMENT_TOL, 'adjoint': LIMIT_AGREEMENT_TOL}),
                 residuals=res)


def _item_liftfp(d, rng, samples):
    if d.fixed.dimension == 0:
        return _trivial('LIFTFP')
    compressed = fixed_defect = discrepancy = 0.0
    elements = d.fixed.basis + [d.fixed.random_element(rng) for _ in range(samples)]
    for y in elements:
        lift = lift_fixed_point(d.instance, y, d.ambient_fixed, d.cstar, d.config.tol_eq,
                                limit_tol=d.config.convergence_tol, max_iter=d.config.max_iter,
                                minimality=d.minimality)
        z = lift.value
        compressed = max(compressed, (d.instance.compress(z) - y).frobenius())
        fixed_defect = max(fixed_defect, max((g(z) - z).frobenius() for g in d.instance.alpha.generators))
        discrepancy = max(discrepancy, lift.discrepancy)
    res = {'compression': compressed, 'alpha_fixed': fixed_defect, 'route_discrepancy': discrepancy}
    limits = {'compression': d.config.tol_eq, 'alpha_fixed': d.config.tol_eq,
              'route_discrepancy': ROUTE_AGREEMENT_TOL}
    return Entry('LIFTFP', _verdict(res, limits), residuals=res, data={'lifted': len(elements)})


def property_suite(target, config=None, seed=None, samples=None, expect_minimal=True):
    """Every proof ingredient as a report entry; numerical failures never escape.

    ``target`` is a ``SemigroupFamily``, a ``DilationInstance`` or a prepared analysis of
    either; for an instance the corner family is analysed and the dilation items run on top.
    """
    config = config or ToolkitConfig()
    seed = config.seed if seed is None else int(seed)
    samples = config.samples if samples is None else int(samples)
    if isinstance(target, FamilyAnalysis):
        analysis = target
    elif isinstance(target, DilationInstance):
        analysis = DilationAnalysis(target, config)
    elif isinstance(target, SemigroupFamily):
        analysis = FamilyAnalysis(target, config)
    else:
        raise TypeError(f"cannot run the property suite on {type(target).__name__}")
    rng = np.random.default_rng(seed)
    a = analysis

    items = [
        ('RHO', lambda: _item_rho(a)),
        ('KS', lambda: _item_ks(a, rng, samples)),
        ('MONO', lambda: _item_mono(a, rng, samples)),
        ('LIM', lambda: _item_lim(a, rng, samples)),
        ('LIMIT', lambda: _item_limit(a, rng, samples)),
        ('ZERO', lambda: _item_zero(a, rng, samples)),
        ('CE', lambda: _item_ce(a, rng, samples)),
        ('VEC', lambda: _item_vec(a, rng, samples)),
        ('KER', lambda: _item_ker(a)),
        ('RANGE', lambda: _item_range(a)),
    ]
    if isinstance(a, DilationAnalysis):
        items += [
            ('MIN', lambda: _item_min(a, expect_minimal)),
            ('ISO', lambda: _requires_minimal(a, lambda: _item_iso(a, seed, samples))),
            ('LIFT', lambda: _requires_minimal(a, lambda: _item_lift(a, rng, samples))),
            ('FACT', lambda: _requires_minimal(a, lambda: _item_fact(a, rng, samples))),
            ('HOM', lambda: _requires_minimal(a, lambda: _item_hom(a, rng, samples))),
            ('LIFTFP', lambda: _requires_minimal(a, lambda: _item_liftfp(a, rng, samples))),
        ]
    entries = [_run_item(name, seed, body) for name, body in items]
    failed = [e.task for e in entries if not e.passed]
    if failed:
        logger.info("property suite: %s did not pass", ', '.join(failed))
    return entries
