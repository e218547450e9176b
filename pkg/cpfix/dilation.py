"""Endomorphic dilations ``(M, {alpha_s}, p)`` and their compressions to ``N = pMp``.

A full matrix algebra only has automorphisms as unital endomorphisms, so the example
dilations live on direct sums ``M_n + ... + M_n`` and shift mass down a tail of blocks.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from . import matcore
from .cpsemi import CPMap, SemigroupFamily, identity_map, validate_endomorphism
from .exceptions import (CoInvarianceViolated, NotUnitary, SemigroupLawViolated, ShapeMismatch,
                         ValidationFailed)
from .vnalg import (AlgebraElement, BlockStructure, ProjectionElement, compression_matrix, corner,
                    injection_matrix)

logger = logging.getLogger(__name__)

COINVARIANCE_TOL = 1e-9
SEMIGROUP_LAW_TOL = 1e-9
SEMIGROUP_LAW_SAMPLES = 20


def check_coinvariance(alpha, p, tol=COINVARIANCE_TOL):
    """``alpha_i(1 - p) <= 1 - p`` for every generator.

    Checking generators is enough: endomorphisms preserve order, so
    ``alpha(beta(1-p)) <= alpha(1-p) <= 1-p`` for composites.
    """
    q = p.complement()
    for k, gen in enumerate(alpha.generators):
        if not (q - gen(q)).is_psd(tol):
            logger.debug("co-invariance fails for generator %d", k)
            return False
    return True


class Minimality(str, Enum):
    MINIMAL = 'minimal'
    NON_MINIMAL = 'non-minimal'
    UNDETERMINED = 'undetermined'


@dataclass
class MinimalityVerdict:
    kind: Minimality
    steps: int
    limit: AlgebraElement = None
    defect_norms: tuple = ()
    monotone: bool = True

    @property
    def is_minimal(self):
        return self.kind is Minimality.MINIMAL


def check_minimality(alpha, p, tol=1e-10, max_iter=10000, monotone_tol=1e-9):
    """Follow ``L_n = alpha_{(n,...,n)}(1 - p)`` until it stops moving.

    The net is PSD and decreasing, so its diagonal limit is ``inf_t alpha_t(1 - p)``.
    """
    if not check_coinvariance(alpha, p):
        raise CoInvarianceViolated("alpha_s(1 - p) <= 1 - p fails for some generator")
    step = alpha.diagonal_step
    current = p.complement()
    norms = [current.norm()]
    monotone = True
    for n in range(max_iter):
        following = step(current)
        decrease = current - following
        monotone = monotone and decrease.is_psd(monotone_tol, hermitian_tol=1e-6)
        if decrease.norm() <= tol:
            if norms[-1] <= 10 * tol:
                return MinimalityVerdict(Minimality.MINIMAL, n, None, tuple(norms), monotone)
            logger.debug("defect net stabilized at norm %.3e after %d steps", norms[-1], n)
            return MinimalityVerdict(Minimality.NON_MINIMAL, n, current, tuple(norms), monotone)
        current = following
        norms.append(current.norm())
    logger.warning("minimality undetermined after %d diagonal steps (defect %.3e)", max_iter, norms[-1])
    return MinimalityVerdict(Minimality.UNDETERMINED, max_iter, None, tuple(norms), monotone)


def _compressed_generator(gen, emb):
    kraus = {}
    for (j, i), ops in gen.kraus.items():
        if j not in emb.index_map or i not in emb.index_map:
            continue
        kj, ki = emb.index_map.index(j), emb.index_map.index(i)
        uj, ui = emb.isometries[kj], emb.isometries[ki]
        kraus[(kj, ki)] = [matcore.dagger(uj) @ a @ ui for a in ops]
    return CPMap(emb.corner, emb.corner, kraus)


def compress_semigroup(alpha, p, emb=None, seed=0):
    """Compression ``phi_i(y) = E(alpha_i(y))`` of every generator, with the semigroup law
    ``phi_a o phi_b = E o alpha_a o alpha_b`` verified on all matrix units and random samples."""
    if not check_coinvariance(alpha, p):
        raise CoInvarianceViolated("cannot compress: p is not co-invariant")
    emb = emb or corner(alpha.structure, p)
    phi = SemigroupFamily(tuple(_compressed_generator(g, emb) for g in alpha.generators))

    cmat, imat = compression_matrix(emb), injection_matrix(emb)
    a_sups, p_sups = alpha.superoperators, phi.superoperators
    for a in range(alpha.rank):
        for b in range(alpha.rank):
            lifted = cmat @ a_sups[a].matrix @ a_sups[b].matrix @ imat
            compressed = p_sups[a].matrix @ p_sups[b].matrix
            residual = float(np.max(np.abs(lifted - compressed), initial=0.0))
            if residual > SEMIGROUP_LAW_TOL:
                raise SemigroupLawViolated(f"phi_{a} o phi_{b} differs from the compressed product by {residual:.3e}")

    rng = np.random.default_rng(seed)
    for _ in range(SEMIGROUP_LAW_SAMPLES):
        y = AlgebraElement.random(emb.corner, rng)
        a, b = rng.integers(alpha.rank, size=2)
        direct = phi.generators[a](phi.generators[b](y))
        via_ambient = emb.compress(alpha.generators[a](alpha.generators[b](emb.inject(y))))
        if (direct - via_ambient).frobenius() > SEMIGROUP_LAW_TOL:
            raise SemigroupLawViolated("semigroup law fails on a random sample")
    return emb, SemigroupFamily.build(phi.generators)


@dataclass(frozen=True, eq=False)
class DilationInstance:
    alpha: SemigroupFamily
    p: ProjectionElement
    embedding: object
    phi: SemigroupFamily

    @classmethod
    def create(cls, alpha, p, tol=1e-9):
        if p.structure != alpha.structure:
            raise ShapeMismatch(f"projection lives on {p.structure}, semigroup on {alpha.structure}")
        if not alpha.is_endomorphic:
            for k, gen in enumerate(alpha.generators):
                if not validate_endomorphism(gen, tol):
                    raise ValidationFailed("not a *-endomorphism", subject=f"alpha generator {k}")
            alpha = SemigroupFamily(alpha.generators, is_endomorphic=True)
        emb, phi = compress_semigroup(alpha, p)
        return cls(alpha, p, emb, phi)

    @property
    def ambient(self):
        return self.alpha.structure

    @property
    def corner(self):
        return self.embedding.corner

    @cached_property
    def compression_matrix(self):
        return compression_matrix(self.embedding)

    @cached_property
    def injection_matrix(self):
        return injection_matrix(self.embedding)

    @cached_property
    def minimality(self):
        return check_minimality(self.alpha, self.p)

    def compress(self, x):
        return self.embedding.compress(x)

    def inject(self, y):
        return self.embedding.inject(y)


def _shift_kraus(m, head, tail):
    kraus = {(0, 0): [head]}
    for j in range(1, m + 1):
        kraus[(j, j - 1)] = [tail]
    return kraus


def build_tail_shift(n, m, u):
    """``alpha(x_0, ..., x_m) = (u x_0 u*, x_0, x_1, ..., x_{m-1})`` on ``(m+1)`` copies of ``M_n``
    with ``p`` the unit of block 0; compresses to ``Ad_u`` on ``M_n`` and ``L_m = 0``."""
    if n < 1 or m < 1:
        raise ValueError("tail-shift needs n >= 1 and m >= 1")
    u = matcore.as_cmatrix(u)
    if u.shape != (n, n) or not matcore.is_unitary(u):
        raise NotUnitary(f"expected a {n}x{n} unitary")
    structure = BlockStructure((n,) * (m + 1))
    alpha = CPMap(structure, structure, _shift_kraus(m, u, np.eye(n)))
    family = SemigroupFamily.build([alpha], endomorphic=True)
    return DilationInstance.create(family, ProjectionElement.on_blocks(structure, {0}))


def build_conjugated_tail_shift(n, m, unitaries):
    """Generators ``alpha_k = Ad(u_k, ..., u_k) o sigma`` with ``sigma(x) = (x_0, x_0, ..., x_{m-1})``;
    they commute whenever the ``u_k`` do."""
    structure = BlockStructure((n,) * (m + 1))
    gens = []
    for u in unitaries:
        u = matcore.as_cmatrix(u)
        if u.shape != (n, n) or not matcore.is_unitary(u):
            raise NotUnitary(f"expected a {n}x{n} unitary")
        gens.append(CPMap(structure, structure, _shift_kraus(m, u, u)))
    family = SemigroupFamily.build(gens, endomorphic=True)
    return DilationInstance.create(family, ProjectionElement.on_blocks(structure, {0}))


RANDOM_BOUNDS = {'n_max': 4, 'm_max': 5, 'd': 2}


def build_random_instance(seed, n_max=3, m_max=4, d=1, n_min=1):
    """Reproducible tail-shift dilation with ``d`` commuting generators.

    The unitaries are ``exp(i t_k H)`` for one random Hermitian ``H``.
    """
    if not (1 <= n_min <= n_max <= RANDOM_BOUNDS['n_max'] and 1 <= m_max <= RANDOM_BOUNDS['m_max']
            and 1 <= d <= RANDOM_BOUNDS['d']):
        raise ValueError(f"parameters outside bounds {RANDOM_BOUNDS}")
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_min, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    h = matcore.random_hermitian(n, rng)
    unitaries = [matcore.exp_i_hermitian(h, t) for t in rng.uniform(0.0, 2 * np.pi, size=d)]
    logger.debug("random dilation seed=%s: n=%d m=%d d=%d", seed, n, m, d)
    return build_conjugated_tail_shift(n, m, unitaries)


def build_identity_control(structure, p):
    """Identity endomorphism with a proper projection: co-invariant but never minimal."""
    family = SemigroupFamily.build([identity_map(structure)], endomorphic=True)
    return DilationInstance.create(family, p)

