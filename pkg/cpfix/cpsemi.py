"""Completely positive maps in block-Kraus form and commuting semigroup presentations.

A map ``phi`` from ``M_src = + M_{n_i}`` to ``M_tgt = + M_{n_j}`` is stored as Kraus lists
``kraus[(j, i)] = (A_1, A_2, ...)`` with ``A`` of shape ``n_j x n_i``, acting by

    phi(x)_j = sum_i sum_m A_{j,i,m} x_i A_{j,i,m}*.

Everything is in the Heisenberg picture. In finite dimension every linear map is normal,
so weak*-continuity holds automatically and is only reported.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import matcore
from .exceptions import (NotCommuting, NotCompletelyPositive, NotContractive, ShapeMismatch,
                         ValidationFailed)
from .vnalg import AlgebraElement, BlockStructure

logger = logging.getLogger(__name__)

COMMUTE_TOL = 1e-9
KRAUS_DROP_TOL = 1e-14


def _kraus_dict(source, target, kraus):
    out = {}
    for key, ops in kraus.items():
        j, i = (int(k) for k in key)
        if not (0 <= j < len(target) and 0 <= i < len(source)):
            raise ShapeMismatch(f"Kraus key {(j, i)} outside {target} <- {source}")
        shape = (target.block_dims[j], source.block_dims[i])
        mats = tuple(matcore.as_cmatrix(a) for a in ops)
        for m, a in enumerate(mats):
            if a.shape != shape:
                raise ShapeMismatch(f"Kraus operator {(j, i, m)} has shape {a.shape}, expected {shape}")
        if mats:
            out[(j, i)] = mats
    return out


@dataclass(frozen=True, eq=False)
class CPMap:
    source: BlockStructure
    target: BlockStructure
    kraus: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, 'kraus', _kraus_dict(self.source, self.target, self.kraus))

    @property
    def is_endomap(self):
        return self.source == self.target

    @property
    def kraus_count(self):
        return sum(len(ops) for ops in self.kraus.values())

    def __call__(self, x):
        return apply(self, x)

    @cached_property
    def superoperator(self):
        return to_superoperator(self)

    def reduced(self):
        """Equivalent map whose Kraus lists have at most ``n_j * n_i`` operators each."""
        kraus = {}
        for (j, i), ops in self.kraus.items():
            if len(ops) <= self.target.block_dims[j] * self.source.block_dims[i]:
                kraus[(j, i)] = ops
            else:
                kraus[(j, i)] = _kraus_from_choi(_choi_of_kraus(ops), self.target.block_dims[j],
                                                 self.source.block_dims[i])
        return CPMap(self.source, self.target, kraus)

    @classmethod
    def from_superoperator(cls, superop, psd_tol=1e-9):
        """Kraus form of a linear map given by its superoperator; raises if it is not CP."""
        kraus = {}
        for (j, i), choi in choi_blocks(superop).items():
            w, _ = matcore.eig_hermitian(choi)
            if w[0] < -psd_tol * max(1.0, abs(w[-1])):
                raise NotCompletelyPositive(
                    f"Choi block {(j, i)} has eigenvalue {w[0]:.3e}")
            ops = _kraus_from_choi(choi, superop.target.block_dims[j], superop.source.block_dims[i])
            if ops:
                kraus[(j, i)] = ops
        return cls(superop.source, superop.target, kraus)


@dataclass(frozen=True, eq=False)
class Superoperator:
    """Matrix of a linear map in matrix-unit coordinates (``D_target x D_source``)."""

    matrix: np.ndarray
    source: BlockStructure
    target: BlockStructure

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        if m.shape != (self.target.dimension, self.source.dimension):
            raise ShapeMismatch(f"superoperator of shape {m.shape} does not map {self.source} to {self.target}")
        object.__setattr__(self, 'matrix', m)

    @classmethod
    def identity(cls, structure):
        return cls(np.eye(structure.dimension), structure, structure)

    def __call__(self, x):
        if x.structure != self.source:
            raise ShapeMismatch(f"element lives on {x.structure}, expected {self.source}")
        return AlgebraElement.from_vector(self.target, self.matrix @ x.to_vector())

    def __matmul__(self, other):
        if other.target != self.source:
            raise ShapeMismatch("superoperators do not chain")
        return Superoperator(self.matrix @ other.matrix, other.source, self.target)

    def __sub__(self, other):
        return Superoperator(self.matrix - other.matrix, self.source, self.target)

    def power(self, n):
        return Superoperator(np.linalg.matrix_power(self.matrix, int(n)), self.source, self.target)

    def norm(self):
        return matcore.op_norm(self.matrix)


def apply(phi, x):
    if x.structure != phi.source:
        raise ShapeMismatch(f"element lives on {x.structure}, map expects {phi.source}")
    blocks = [np.zeros((n, n), dtype=np.complex128) for n in phi.target.block_dims]
    for (j, i), ops in phi.kraus.items():
        xi = x.blocks[i]
        for a in ops:
            blocks[j] += a @ xi @ matcore.dagger(a)
    return AlgebraElement(phi.target, tuple(blocks))


def compose(phi, psi):
    """``phi o psi`` (apply ``psi`` first)."""
    if psi.target != phi.source:
        raise ShapeMismatch(f"cannot compose: {psi.target} does not match {phi.source}")
    kraus = {}
    for (j, k), outer in phi.kraus.items():
        for (k2, i), inner in psi.kraus.items():
            if k2 != k:
                continue
            kraus.setdefault((j, i), []).extend(a @ b for a in outer for b in inner)
    return CPMap(psi.source, phi.target, kraus).reduced()


def to_superoperator(phi):
    """Row-major vectorization turns ``A X A*`` into ``(A kron conj(A)) vec(X)``."""
    src, tgt = phi.source, phi.target
    matrix = np.zeros((tgt.dimension, src.dimension), dtype=np.complex128)
    for (j, i), ops in phi.kraus.items():
        rows = slice(tgt.offsets[j], tgt.offsets[j] + tgt.block_dims[j] ** 2)
        cols = slice(src.offsets[i], src.offsets[i] + src.block_dims[i] ** 2)
        for a in ops:
            matrix[rows, cols] += np.kron(a, np.conj(a))
    return Superoperator(matrix, src, tgt)


def _choi_of_kraus(ops):
    vecs = np.column_stack([a.T.reshape(-1) for a in ops])
    return vecs @ matcore.dagger(vecs)


def _kraus_from_choi(choi, n_target, n_source):
    w, u = matcore.eig_hermitian(choi)
    cutoff = KRAUS_DROP_TOL * max(1.0, abs(w[-1]))
    ops = []
    for k in range(len(w) - 1, -1, -1):
        if w[k] <= cutoff:
            break
        ops.append((np.sqrt(w[k]) * u[:, k]).reshape(n_source, n_target).T)
    return tuple(ops)


def choi_blocks(superop):
    """Blockwise Choi matrices ``C_{j,i} = sum_{ab} E_ab (x) T_j(E^i_ab)``.

    With ``v = vec_col(A)`` a Kraus operator contributes ``v v*`` to its block, so a linear
    map is completely positive iff every block is PSD.
    """
    src, tgt = superop.source, superop.target
    out = {}
    for j, nj in enumerate(tgt.block_dims):
        for i, ni in enumerate(src.block_dims):
            block = superop.matrix[tgt.offsets[j]:tgt.offsets[j] + nj * nj,
                                   src.offsets[i]:src.offsets[i] + ni * ni]
            choi = block.reshape(nj, nj, ni, ni).transpose(2, 0, 3, 1).reshape(ni * nj, ni * nj)
            out[(j, i)] = choi
    return out


def choi_min_eigenvalue(superop):
    return min(matcore.min_eigenvalue(c, hermitian_tol=1e-6) for c in choi_blocks(superop).values())


@dataclass
class CPReport:
    is_cp: bool
    is_contractive: bool
    is_unital: bool
    unit_defect: float
    contraction_margin: float
    choi_min_eig: float = None
    # every linear map on a finite-dimensional algebra is weak*-continuous
    is_normal: bool = True

    @property
    def ok(self):
        return self.is_cp and self.is_contractive


def validate_cp(phi, tol=1e-9, check_choi=False):
    """CP / contractive / unital flags; Choi blocks are only inspected when ``check_choi``."""
    one_src = AlgebraElement.identity(phi.source)
    image = apply(phi, one_src)
    if phi.is_endomap:
        gap = one_src - image
        unit_defect = gap.norm()
        margin = gap.min_eigenvalue(hermitian_tol=1e-6)
    else:
        one_tgt = AlgebraElement.identity(phi.target)
        unit_defect = (one_tgt - image).norm()
        margin = (one_tgt - image).min_eigenvalue(hermitian_tol=1e-6)
    choi_min = None
    is_cp = True
    if check_choi:
        choi_min = choi_min_eigenvalue(to_superoperator(phi))
        is_cp = choi_min >= -tol
    return CPReport(is_cp=is_cp, is_contractive=margin >= -tol, is_unital=unit_defect <= tol,
                    unit_defect=unit_defect, contraction_margin=margin, choi_min_eig=choi_min)


def matrix_units(structure):
    for b, n in enumerate(structure.block_dims):
        for i in range(n):
            for j in range(n):
                yield (b, i, j), AlgebraElement.matrix_unit(structure, b, i, j)


def endomorphism_defect(alpha):
    """Largest ``||a(xy) - a(x)a(y)||`` and ``||a(x*) - a(x)*||`` over matrix-unit pairs."""
    if not alpha.is_endomap:
        raise ShapeMismatch("an endomorphism must map an algebra to itself")
    units = list(matrix_units(alpha.source))
    images = {key: apply(alpha, e) for key, e in units}
    worst = 0.0
    for (b, i, j), _ in units:
        worst = max(worst, (images[(b, j, i)] - images[(b, i, j)].adjoint()).frobenius())
        for (b2, k, l), _ in units:
            expected = images[(b, i, l)] if (b == b2 and j == k) else None
            product = images[(b, i, j)] @ images[(b2, k, l)]
            residual = product.frobenius() if expected is None else (product - expected).frobenius()
            worst = max(worst, residual)
    return worst


def validate_endomorphism(alpha, tol=1e-9):
    if not alpha.is_endomap:
        return False
    return endomorphism_defect(alpha) <= tol


@dataclass(frozen=True, eq=False)
class SemigroupFamily:
    """Commuting generators ``beta_1..beta_d`` of ``{beta_s : s in N^d}``."""

    generators: tuple
    is_endomorphic: bool = False

    def __post_init__(self):
        gens = tuple(self.generators)
        if not gens:
            raise ShapeMismatch("a semigroup family needs at least one generator")
        structure = gens[0].source
        for g in gens:
            if g.source != structure or g.target != structure:
                raise ShapeMismatch("all generators must act on the same algebra")
        object.__setattr__(self, 'generators', gens)

    @classmethod
    def build(cls, generators, tol=COMMUTE_TOL, endomorphic=False):
        """Validated family; raises ``NotContractive``, ``NotCommuting`` or, when
        ``endomorphic`` is requested, ``ValidationFailed`` for a non-multiplicative generator."""
        family = cls(tuple(generators))
        report = validate_family(family, tol)
        for k, r in enumerate(report.generator_reports):
            if not r.ok:
                raise NotContractive(f"generator {k} is not a contractive CP map")
        if not report.commuting:
            raise NotCommuting(f"generators do not commute (max commutator {report.max_commutator:.3e})")
        if endomorphic and not report.is_endomorphic:
            raise ValidationFailed("not a *-endomorphism", subject="family")
        return cls(family.generators, is_endomorphic=report.is_endomorphic)

    @property
    def structure(self):
        return self.generators[0].source

    @property
    def rank(self):
        return len(self.generators)

    @cached_property
    def superoperators(self):
        return tuple(g.superoperator for g in self.generators)

    @cached_property
    def diagonal_step(self):
        """Superoperator of ``beta_(1,...,1) = beta_1 o ... o beta_d``."""
        step = Superoperator.identity(self.structure)
        for s in self.superoperators:
            step = step @ s
        return step

    def superoperator_power(self, s):
        s = _multi_index(s, self.rank)
        out = Superoperator.identity(self.structure)
        for gen, k in zip(self.superoperators, s):
            if k:
                out = out @ gen.power(k)
        return out


@dataclass
class FamilyReport:
    commutators: dict
    generator_reports: list
    is_endomorphic: bool
    tol: float

    @property
    def max_commutator(self):
        return max(self.commutators.values(), default=0.0)

    @property
    def commuting(self):
        return self.max_commutator <= self.tol

    @property
    def ok(self):
        return self.commuting and all(r.ok for r in self.generator_reports)


def validate_family(family, tol=COMMUTE_TOL):
    sups = family.superoperators
    commutators = {}
    for a in range(len(sups)):
        for b in range(a + 1, len(sups)):
            commutators[(a, b)] = matcore.op_norm(sups[a].matrix @ sups[b].matrix - sups[b].matrix @ sups[a].matrix)
    reports = [validate_cp(g, tol) for g in family.generators]
    endomorphic = all(validate_endomorphism(g, tol) for g in family.generators)
    logger.debug("family of %d generators: max commutator %.2e, endomorphic=%s",
                 len(sups), max(commutators.values(), default=0.0), endomorphic)
    return FamilyReport(commutators, reports, endomorphic, tol)


def _multi_index(s, d):
    s = (int(s),) if np.isscalar(s) else tuple(int(k) for k in s)
    if len(s) != d:
        raise ShapeMismatch(f"multi-index {s} does not match {d} generators")
    if any(k < 0 for k in s):
        raise ValueError(f"multi-index {s} must be componentwise non-negative")
    return s


def power(family, s):
    """``beta_s = beta_1^{s_1} o ... o beta_d^{s_d}``; ``beta_0`` is the identity."""
    s = _multi_index(s, family.rank)
    out = identity_map(family.structure)
    for gen, k in zip(family.generators, s):
        for _ in range(k):
            out = compose(out, gen)
    return out


# builders

def identity_map(structure):
    return CPMap(structure, structure, {(i, i): [np.eye(n)] for i, n in enumerate(structure.block_dims)})


def conjugation(*unitaries):
    """``phi(y)_i = u_i y_i u_i*`` on ``M_{n_1} + ...`` with one matrix per block."""
    structure = BlockStructure(tuple(matcore.as_cmatrix(u).shape[0] for u in unitaries))
    return CPMap(structure, structure, {(i, i): [u] for i, u in enumerate(unitaries)})


def rotation(theta):
    """``Ad_{u*}`` with ``u = diag(1, e^{i theta})``: ``E_01 -> e^{i theta} E_01``."""
    u = np.diag([1.0, np.exp(1j * theta)])
    return conjugation(matcore.dagger(u))


def amplitude_damping(gamma):
    """Heisenberg-picture amplitude damping on ``M_2``; unital."""
    a0 = np.diag([1.0, np.sqrt(1.0 - gamma)])
    a1 = np.array([[0.0, np.sqrt(gamma)], [0.0, 0.0]])
    structure = BlockStructure((2,))
    return CPMap(structure, structure, {(0, 0): [a0, matcore.dagger(a1)]})


def scaled(phi, c):
    """``c * phi`` for ``c >= 0``."""
    root = np.sqrt(c)
    return CPMap(phi.source, phi.target, {k: [root * a for a in ops] for k, ops in phi.kraus.items()})


def unitary_mixture(weights, terms):
    """``sum_t w_t Ad(u^t)`` where each term is a tuple of per-block unitaries."""
    structure = BlockStructure(tuple(matcore.as_cmatrix(u).shape[0] for u in terms[0]))
    kraus = {}
    for w, us in zip(weights, terms):
        for i, u in enumerate(us):
            kraus.setdefault((i, i), []).append(np.sqrt(w) * matcore.as_cmatrix(u))
    return CPMap(structure, structure, kraus)


def random_commuting_mixture(structure, rng, terms=3, d=2):
    """``d`` unital mixtures of conjugations by unitaries that are functions of one Hermitian
    element per block, hence pairwise commuting by construction."""
    hs = [matcore.random_hermitian(n, rng) for n in structure.block_dims]
    angles = rng.uniform(0.0, 2 * np.pi, size=terms)
    unitaries = [tuple(matcore.exp_i_hermitian(h, t) for h in hs) for t in angles]
    generators = []
    for _ in range(d):
        w = rng.uniform(0.1, 1.0, size=terms)
        generators.append(unitary_mixture(w / w.sum(), unitaries))
    return SemigroupFamily.build(generators)


def power_family(phi, exponents):
    """Generators ``phi^{k_1}, phi^{k_2}, ...``: distinct powers of one map always commute."""
    gens = []
    for k in exponents:
        g = identity_map(phi.source)
        for _ in range(int(k)):
            g = compose(g, phi)
        gens.append(g)
    return SemigroupFamily.build(gens)
