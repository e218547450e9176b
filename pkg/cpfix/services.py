"""The four toolkit commands, each returning a ``Report`` (``demo`` returns a problem file)."""
import logging
import time

import numpy as np

from . import codec
from .conf import ToolkitConfig
from .cpsemi import (SemigroupFamily, amplitude_damping, endomorphism_defect, random_commuting_mixture,
                     rotation, validate_cp, validate_family)
from .dilation import (DilationInstance, build_identity_control, build_random_instance, build_tail_shift,
                       check_coinvariance)
from .exceptions import (CpfixError, Divergent, Inconsistent, NotFixed, NotProjection, ParseError,
                         UnknownFamily, ValidationFailed)
from .fixpoint import DilationAnalysis, FamilyAnalysis, lift_fixed_point, property_suite
from .forms import NamedMap, load_problem, problem_to_dict
from .reports import Entry, Report, Status
from .vnalg import AlgebraElement, BlockStructure, ProjectionElement

logger = logging.getLogger(__name__)


def _config(problem, **overrides):
    return ToolkitConfig.from_settings().with_overrides(**problem.config).with_overrides(**overrides)


def _timed(task, body):
    start = time.perf_counter()
    try:
        entry = body()
    except CpfixError as exc:
        logger.debug("%s raised %s", task, exc)
        entry = Entry(task, Status.ERROR, detail=f"{type(exc).__name__}: {exc}")
    entry.task = task
    entry.wall_time = time.perf_counter() - start
    return entry


# validate

def _validate_map(named, config):
    report = validate_cp(named.cpmap, config.psd_tol, check_choi=True)
    problems = []
    if not report.is_cp:
        problems.append('not completely positive')
    if not report.is_contractive:
        problems.append('not contractive')
    residuals = {'unit_defect': report.unit_defect, 'contraction_margin': report.contraction_margin,
                 'choi_min_eig': report.choi_min_eig}
    if named.kind == 'endomorphism':
        defect = endomorphism_defect(named.cpmap)
        residuals['endomorphism_defect'] = defect
        if defect > config.tol_eq:
            problems.append('not a *-endomorphism')
    data = {'kind': named.kind, 'is_unital': report.is_unital, 'is_normal': report.is_normal,
            'kraus_count': named.cpmap.kraus_count}
    if problems:
        failure = ValidationFailed(', '.join(problems), subject=named.name)
        return Entry(f"map:{named.name}", Status.FAIL, residuals=residuals, detail=str(failure), data=data)
    return Entry(f"map:{named.name}", Status.PASS, residuals=residuals, data=data)


def _validate_family(problem, config):
    report = validate_family(SemigroupFamily(tuple(problem.generators)), config.tol_eq)
    residuals = {'max_commutator': report.max_commutator}
    data = {'generators': len(problem.maps), 'is_endomorphic': report.is_endomorphic}
    if not report.commuting:
        failure = ValidationFailed('generators do not commute', subject='family')
        return Entry('family', Status.FAIL, residuals=residuals, detail=str(failure), data=data)
    return Entry('family', Status.PASS, residuals=residuals, data=data)


def _validate_projection(problem, config):
    try:
        p = ProjectionElement.from_element(problem.projection)
    except NotProjection as exc:
        return Entry('projection', Status.FAIL, detail=str(ValidationFailed(str(exc), subject='projection')))
    data = {'ranks': list(p.ranks())}
    if all(m.kind == 'endomorphism' for m in problem.maps):
        family = SemigroupFamily(tuple(problem.generators))
        data['co_invariant'] = check_coinvariance(family, p, config.psd_tol)
        if not data['co_invariant']:
            failure = ValidationFailed('alpha_s(1 - p) <= 1 - p fails', subject='projection')
            return Entry('projection', Status.FAIL, detail=str(failure), data=data)
    return Entry('projection', Status.PASS, data=data)


def cmd_validate(path, **overrides):
    problem = load_problem(path)
    config = _config(problem, **overrides)
    report = Report('validate', str(path), config.asdict())
    for named in problem.maps:
        report.add(_timed(f"map:{named.name}", lambda: _validate_map(named, config)))
    report.add(_timed('family', lambda: _validate_family(problem, config)))
    if problem.projection is not None:
        report.add(_timed('projection', lambda: _validate_projection(problem, config)))
    return report


# analyze / dilation

def _fixed_entry(analysis):
    fs, cstar = analysis.fixed, analysis.cstar
    return Entry('FIXED', Status.PASS,
                 data={'dimension': fs.dimension, 'basis': [codec.encode_element(b) for b in fs.basis],
                       'cstar_dimension': cstar.dimension, 'cstar_unital': cstar.is_unital})


def _phi_limit_task(analysis, task, path):
    y = codec.decode_element(task['element'], analysis.family.structure, f"{path}.element")
    expect = task.get('expect', 'converge')
    try:
        limit = analysis.limit(y)
    except Divergent as exc:
        observed, data, iterations = 'diverge', {}, {'steps': exc.iterations}
        residuals = {'last_increment': exc.increment}
    else:
        observed, iterations = 'converge', {'steps': limit.iterations}
        data = {'limit': codec.encode_element(limit.value)}
        residuals = {'limit_vs_rho': (limit.value - analysis.ergodic(y)).frobenius()}
    status = Status.PASS if observed == expect else Status.FAIL
    return Entry('', status, residuals=residuals, iterations=iterations, data=data,
                 detail=f"observed {observed}, expected {expect}")


def _lift_task(analysis, task, path):
    y = codec.decode_element(task['element'], analysis.family.structure, f"{path}.element")
    config = analysis.config
    try:
        lift = lift_fixed_point(analysis.instance, y, analysis.ambient_fixed, analysis.cstar, config.tol_eq,
                                limit_tol=config.convergence_tol, max_iter=config.max_iter,
                                minimality=analysis.minimality)
    except (NotFixed, Inconsistent, Divergent) as exc:
        return Entry('', Status.FAIL, detail=f"{type(exc).__name__}: {exc}")
    residuals = {'compression': (analysis.instance.compress(lift.value) - y).frobenius(),
                 'route_discrepancy': lift.discrepancy}
    return Entry('', Status.PASS, residuals=residuals,
                 data={'lift': codec.encode_element(lift.value), 'routes': sorted(lift.routes)})


def _task_entries(problem, analysis, dilation=False):
    """Task elements live on the corner when the file has a projection, else on the algebra."""
    entries = []
    for k, task in enumerate(problem.tasks):
        name, path = f"{task['task']}[{k}]", f"tasks[{k}]"
        if problem.projection is not None and not dilation:
            entries.append(Entry(name, Status.SKIPPED, detail='corner task; run the dilation command'))
        elif task['task'] == 'phi_limit':
            entries.append(_timed(name, lambda: _phi_limit_task(analysis, task, path)))
        elif not dilation:
            entries.append(Entry(name, Status.SKIPPED, detail='needs a dilation'))
        elif task['task'] == 'lift':
            entries.append(_timed(name, lambda: _lift_task(analysis, task, path)))
    return entries


def _expect_minimal(problem):
    expectations = [t.get('expect', 'minimal') for t in problem.tasks if t['task'] == 'minimality']
    return not expectations or expectations[-1] == 'minimal'


def cmd_analyze(path, seed=None, samples=None, levels=None):
    problem = load_problem(path)
    config = _config(problem, seed=seed, samples=samples, isometry_levels=levels)
    report = Report('analyze', str(path), config.asdict())
    try:
        family = SemigroupFamily.build(problem.generators, config.tol_eq)
    except CpfixError as exc:
        report.add(Entry('family', Status.ERROR, detail=f"{type(exc).__name__}: {exc}"))
        return report
    analysis = FamilyAnalysis(family, config)
    report.add(_timed('FIXED', lambda: _fixed_entry(analysis)))
    report.extend(property_suite(analysis, config))
    report.extend(_task_entries(problem, analysis))
    return report


def _compressed_entry(instance):
    maps = [codec.encode_map(f"phi{k}", 'cp', g) for k, g in enumerate(instance.phi.generators)]
    return Entry('COMPRESS', Status.PASS,
                 data={'corner': {'blocks': list(instance.corner.block_dims)},
                       'ambient_blocks': list(instance.embedding.index_map), 'maps': maps})


def cmd_dilation(path, seed=None, samples=None, levels=None):
    problem = load_problem(path)
    if problem.projection is None:
        raise ParseError('a dilation needs a projection', 'projection')
    config = _config(problem, seed=seed, samples=samples, isometry_levels=levels)
    report = Report('dilation', str(path), config.asdict())
    try:
        alpha = SemigroupFamily.build(problem.generators, config.tol_eq, endomorphic=True)
    except CpfixError as exc:
        report.add(Entry('family', Status.ERROR, detail=f"{type(exc).__name__}: {exc}"))
        return report
    try:
        p = ProjectionElement.from_element(problem.projection)
    except NotProjection as exc:
        report.add(Entry('projection', Status.ERROR, detail=f"{type(exc).__name__}: {exc}"))
        return report
    if not check_coinvariance(alpha, p, config.psd_tol):
        report.add(Entry('COINV', Status.FAIL, detail='alpha_s(1 - p) <= 1 - p fails'))
        return report
    report.add(Entry('COINV', Status.PASS))
    try:
        instance = DilationInstance.create(alpha, p, config.tol_eq)
    except CpfixError as exc:
        report.add(Entry('COMPRESS', Status.ERROR, detail=f"{type(exc).__name__}: {exc}"))
        return report
    report.add(_compressed_entry(instance))
    analysis = DilationAnalysis(instance, config)
    report.extend(property_suite(analysis, config, expect_minimal=_expect_minimal(problem)))
    report.extend(_task_entries(problem, analysis, dilation=True))
    return report


# demo

def _demo_unitary(kind, n, theta):
    if kind == 'pauli-x':
        return np.roll(np.eye(n), 1, axis=0)
    if kind == 'rotation':
        return np.diag(np.exp(1j * theta * np.arange(n)))
    if kind == 'identity':
        return np.eye(n)
    raise UnknownFamily(f"unknown unitary {kind!r}")


def _element_task(task, x, expect=None):
    out = {'task': task, 'element': codec.encode_element(x)}
    if expect:
        out['expect'] = expect
    return out


def _dilation_problem(instance, tasks):
    maps = [NamedMap(f"alpha{k}", 'endomorphism', g) for k, g in enumerate(instance.alpha.generators)]
    return problem_to_dict(instance.ambient, maps, instance.p.element, tasks)


def _demo_tail_shift(n=2, m=2, unitary='pauli-x', theta=np.pi / 3, **_):
    u = _demo_unitary(unitary, n, theta)
    instance = build_tail_shift(n, m, u)
    y = AlgebraElement(instance.corner, (u,))
    tasks = [{'task': 'minimality', 'expect': 'minimal'}, _element_task('lift', y),
             _element_task('phi_limit', y, 'converge')]
    return _dilation_problem(instance, tasks)


def _demo_rotation(theta=np.pi / 3, **_):
    phi = rotation(theta)
    s = phi.source
    tasks = [_element_task('phi_limit', AlgebraElement.matrix_unit(s, 0, 0, 1), 'diverge'),
             _element_task('phi_limit', AlgebraElement.matrix_unit(s, 0, 0, 0), 'converge')]
    return problem_to_dict(s, [NamedMap('rotation', 'cp', phi)], tasks=tasks)


def _demo_damping(gamma=0.5, **_):
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    phi = amplitude_damping(gamma)
    s = phi.source
    tasks = [_element_task('phi_limit', AlgebraElement.matrix_unit(s, 0, 0, 0), 'converge'),
             _element_task('phi_limit', AlgebraElement.matrix_unit(s, 0, 1, 1), 'converge')]
    return problem_to_dict(s, [NamedMap('damping', 'cp', phi)], tasks=tasks)


def _demo_random_mixture(seed=0, blocks=(2, 3), terms=3, d=2, **_):
    rng = np.random.default_rng(seed)
    family = random_commuting_mixture(BlockStructure(tuple(blocks)), rng, terms, d)
    maps = [NamedMap(f"mixture{k}", 'cp', g) for k, g in enumerate(family.generators)]
    return problem_to_dict(family.structure, maps)


def _demo_random_dilation(seed=0, n_max=3, m_max=4, d=2, **_):
    instance = build_random_instance(seed, n_max, m_max, d, n_min=min(2, n_max))
    return _dilation_problem(instance, [{'task': 'minimality', 'expect': 'minimal'}])


def _demo_identity_control(n=2, m=1, **_):
    structure = BlockStructure((n,) * (m + 1))
    instance = build_identity_control(structure, ProjectionElement.on_blocks(structure, {0}))
    return _dilation_problem(instance, [{'task': 'minimality', 'expect': 'non-minimal'}])


DEMO_FAMILIES = {
    'tail-shift': _demo_tail_shift,
    'rotation': _demo_rotation,
    'damping': _demo_damping,
    'random-mixture': _demo_random_mixture,
    'random-dilation': _demo_random_dilation,
    'identity-control': _demo_identity_control,
}


def cmd_demo(family, seed=0, **params):
    """Problem file for a named example family; ``None`` parameters take the family default."""
    try:
        builder = DEMO_FAMILIES[family]
    except KeyError:
        raise UnknownFamily(f"unknown family {family!r}; choose from {', '.join(DEMO_FAMILIES)}") from None
    params = {k: v for k, v in params.items() if v is not None}
    logger.debug("demo %s seed=%s params=%s", family, seed, params)
    return builder(seed=seed, **params)
