"""Finite-dimensional von Neumann algebras ``M = M_{n_1} + ... + M_{n_k}``.

Elements are tuples of square complex blocks. Coordinates used by superoperators are
block-major, row-major inside each block, so the coordinate vector of the matrix unit
``E_{ab}`` in block ``i`` has a single 1 at ``offset(i) + a * n_i + b``.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from . import matcore
from .exceptions import CpfixError, NotProjection, ShapeMismatch

logger = logging.getLogger(__name__)

PROJECTION_TOL = 1e-9
SNAP_TOL = 1e-6


@dataclass(frozen=True)
class BlockStructure:
    block_dims: tuple

    def __post_init__(self):
        dims = tuple(int(n) for n in self.block_dims)
        if not dims:
            raise ShapeMismatch("a block structure needs at least one block")
        if any(n < 1 for n in dims):
            raise ShapeMismatch(f"block dimensions must be positive, got {dims}")
        object.__setattr__(self, 'block_dims', dims)

    def __len__(self):
        return len(self.block_dims)

    def __str__(self):
        return ' + '.join(f"M{n}" for n in self.block_dims)

    @property
    def dimension(self):
        """Dimension of the algebra as a vector space, the superoperator size."""
        return sum(n * n for n in self.block_dims)

    @property
    def hilbert_dim(self):
        return sum(self.block_dims)

    @property
    def offsets(self):
        out, acc = [], 0
        for n in self.block_dims:
            out.append(acc)
            acc += n * n
        return tuple(out)


def amplify(structure, k):
    """Block structure of ``M_k(M)``."""
    if k < 1:
        raise ValueError("amplification level must be at least 1")
    return BlockStructure(tuple(k * n for n in structure.block_dims))


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    structure: BlockStructure
    blocks: tuple

    def __post_init__(self):
        blocks = tuple(matcore.as_cmatrix(b) for b in self.blocks)
        if len(blocks) != len(self.structure):
            raise ShapeMismatch(
                f"expected {len(self.structure)} blocks for {self.structure}, got {len(blocks)}")
        for i, (b, n) in enumerate(zip(blocks, self.structure.block_dims)):
            if b.shape != (n, n):
                raise ShapeMismatch(f"block {i} has shape {b.shape}, expected {(n, n)}")
        object.__setattr__(self, 'blocks', blocks)

    # construction

    @classmethod
    def zero(cls, structure):
        return cls(structure, tuple(np.zeros((n, n), dtype=np.complex128) for n in structure.block_dims))

    @classmethod
    def identity(cls, structure):
        return cls(structure, tuple(np.eye(n, dtype=np.complex128) for n in structure.block_dims))

    @classmethod
    def matrix_unit(cls, structure, block, i, j):
        blocks = [np.zeros((n, n), dtype=np.complex128) for n in structure.block_dims]
        blocks[block][i, j] = 1.0
        return cls(structure, tuple(blocks))

    @classmethod
    def random(cls, structure, rng, hermitian=False):
        """Complex standard normal entries, normalized to unit trace norm."""
        blocks = []
        for n in structure.block_dims:
            b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            if hermitian:
                b = (b + matcore.dagger(b)) / 2
            blocks.append(b)
        x = cls(structure, tuple(blocks))
        return x * (1.0 / x.frobenius())

    @classmethod
    def from_vector(cls, structure, vec):
        vec = np.asarray(vec, dtype=np.complex128).reshape(-1)
        if vec.size != structure.dimension:
            raise ShapeMismatch(f"coordinate vector of length {vec.size}, expected {structure.dimension}")
        blocks = []
        for off, n in zip(structure.offsets, structure.block_dims):
            blocks.append(vec[off:off + n * n].reshape(n, n))
        return cls(structure, tuple(blocks))

    def to_vector(self):
        return np.concatenate([b.reshape(-1) for b in self.blocks])

    # arithmetic

    def _check_same(self, other):
        if not isinstance(other, AlgebraElement) or other.structure != self.structure:
            raise ShapeMismatch(f"elements live on different algebras: {self.structure} vs "
                                f"{getattr(other, 'structure', type(other).__name__)}")

    def __add__(self, other):
        self._check_same(other)
        return AlgebraElement(self.structure, tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    def __sub__(self, other):
        self._check_same(other)
        return AlgebraElement(self.structure, tuple(a - b for a, b in zip(self.blocks, other.blocks)))

    def __neg__(self):
        return self * -1.0

    def __mul__(self, scalar):
        return AlgebraElement(self.structure, tuple(scalar * b for b in self.blocks))

    __rmul__ = __mul__

    def __matmul__(self, other):
        self._check_same(other)
        return AlgebraElement(self.structure, tuple(a @ b for a, b in zip(self.blocks, other.blocks)))

    def adjoint(self):
        return AlgebraElement(self.structure, tuple(matcore.dagger(b) for b in self.blocks))

    def hermitian_parts(self):
        """``(h, k)`` with ``x = h + i k`` and both self-adjoint."""
        star = self.adjoint()
        return (self + star) * 0.5, (self - star) * (-0.5j)

    # measurements

    def norm(self):
        """Operator norm on ``H = C^{n_1} + ... + C^{n_k}``: the largest block norm."""
        return max(matcore.op_norm(b) for b in self.blocks)

    def frobenius(self):
        return float(np.linalg.norm(self.to_vector()))

    def trace_inner(self, other):
        """``tr(x* y)``."""
        self._check_same(other)
        return complex(np.vdot(self.to_vector(), other.to_vector()))

    def min_eigenvalue(self, hermitian_tol=matcore.HERMITIAN_TOL):
        return min(matcore.min_eigenvalue(b, hermitian_tol) for b in self.blocks)

    def is_psd(self, tol=1e-9, hermitian_tol=matcore.HERMITIAN_TOL):
        return self.min_eigenvalue(hermitian_tol) >= -tol

    def sqrt(self, psd_tol=matcore.PSD_TOL):
        return AlgebraElement(self.structure, tuple(matcore.psd_sqrt(b, psd_tol) for b in self.blocks))

    def embed(self):
        return embed(self)

    def __repr__(self):
        return f"AlgebraElement({self.structure}, norm={self.frobenius():.3g})"


def embed(x):
    """Block-diagonal matrix of ``x`` acting on ``H = C^{n_1} + ... + C^{n_k}``."""
    size = x.structure.hilbert_dim
    out = np.zeros((size, size), dtype=np.complex128)
    start = 0
    for b in x.blocks:
        n = b.shape[0]
        out[start:start + n, start:start + n] = b
        start += n
    return out


@dataclass(frozen=True, eq=False)
class ProjectionElement:
    element: AlgebraElement

    def __post_init__(self):
        for i, b in enumerate(self.element.blocks):
            if (np.linalg.norm(b - matcore.dagger(b)) > PROJECTION_TOL
                    or np.linalg.norm(b @ b - b) > PROJECTION_TOL):
                raise NotProjection(f"block {i} is not a self-adjoint idempotent")

    @classmethod
    def from_element(cls, x, snap_tol=SNAP_TOL):
        """Spectrally round ``x`` to a projection; eigenvalues must lie within ``snap_tol`` of 0 or 1."""
        blocks = []
        for i, b in enumerate(x.blocks):
            try:
                w, u = matcore.eig_hermitian(b, hermitian_tol=snap_tol)
            except CpfixError as exc:
                raise NotProjection(f"block {i}: {exc}") from exc
            snapped = np.where(np.abs(w - 1.0) <= snap_tol, 1.0, 0.0)
            bad = (np.abs(w) > snap_tol) & (np.abs(w - 1.0) > snap_tol)
            if np.any(bad):
                raise NotProjection(f"block {i} has eigenvalues {w[bad]} away from {{0, 1}}")
            blocks.append((u * snapped) @ matcore.dagger(u))
        return cls(AlgebraElement(x.structure, tuple(blocks)))

    @classmethod
    def on_blocks(cls, structure, kept):
        """Projection equal to the identity on the blocks in ``kept`` and zero elsewhere."""
        blocks = [np.eye(n) if i in kept else np.zeros((n, n))
                  for i, n in enumerate(structure.block_dims)]
        return cls(AlgebraElement(structure, tuple(blocks)))

    @property
    def structure(self):
        return self.element.structure

    @property
    def blocks(self):
        return self.element.blocks

    def complement(self):
        return AlgebraElement.identity(self.structure) - self.element

    def ranks(self):
        return tuple(int(round(float(np.real(np.trace(b))))) for b in self.blocks)

    def is_identity(self):
        return self.ranks() == self.structure.block_dims


@dataclass(frozen=True, eq=False)
class CornerEmbedding:
    """``N = pMp`` realized through isometries ``u_i`` with ``u_i u_i* = p_i``.

    Ambient blocks where ``p`` vanishes are dropped; ``index_map[k]`` is the ambient block
    carried by corner block ``k``.
    """

    ambient: BlockStructure
    corner: BlockStructure
    isometries: tuple
    index_map: tuple
    projection: ProjectionElement = field(default=None)

    def compress(self, x):
        return compress(self, x)

    def inject(self, y):
        return inject(self, y)

    def unit(self):
        return AlgebraElement.identity(self.corner)


def _range_isometry(p_block, rank):
    """Orthonormal basis of ``Ran(p)`` by pivoted Gram-Schmidt on the columns of ``p``.

    Pivots take the largest residual column, ties to the lowest index, so ``p = 1`` gives the
    identity and ``p = E_00`` gives ``e_0``.
    """
    n = p_block.shape[0]
    basis = np.zeros((n, 0), dtype=np.complex128)
    residual = p_block.copy()
    for _ in range(rank):
        norms = np.linalg.norm(residual, axis=0)
        k = int(np.argmax(np.round(norms, 12)))
        col = residual[:, k] / norms[k]
        basis = np.column_stack([basis, col])
        residual = residual - np.outer(col, np.conj(col) @ residual)
    return basis


def corner(structure, p):
    if not isinstance(p, ProjectionElement):
        p = ProjectionElement(p)
    if p.structure != structure:
        raise ShapeMismatch(f"projection lives on {p.structure}, expected {structure}")
    isometries, index_map, dims = [], [], []
    for i, (b, r) in enumerate(zip(p.blocks, p.ranks())):
        if r == 0:
            continue
        u = _range_isometry(b, r)
        if (np.linalg.norm(matcore.dagger(u) @ u - np.eye(r)) > PROJECTION_TOL
                or np.linalg.norm(u @ matcore.dagger(u) - b) > PROJECTION_TOL):
            raise NotProjection(f"could not realize block {i} of the projection as u u*")
        isometries.append(u)
        index_map.append(i)
        dims.append(r)
    if not dims:
        raise NotProjection("the zero projection has an empty corner")
    logger.debug("corner of %s has blocks %s (ambient blocks %s)", structure, dims, index_map)
    return CornerEmbedding(structure, BlockStructure(tuple(dims)), tuple(isometries),
                           tuple(index_map), p)


def compress(emb, x):
    """``E(x) = pxp`` read in the corner coordinates: blocks ``u_i* x_i u_i``."""
    if x.structure != emb.ambient:
        raise ShapeMismatch(f"element lives on {x.structure}, expected {emb.ambient}")
    blocks = tuple(matcore.dagger(u) @ x.blocks[i] @ u for u, i in zip(emb.isometries, emb.index_map))
    return AlgebraElement(emb.corner, blocks)


def inject(emb, y):
    if y.structure != emb.corner:
        raise ShapeMismatch(f"element lives on {y.structure}, expected {emb.corner}")
    blocks = [np.zeros((n, n), dtype=np.complex128) for n in emb.ambient.block_dims]
    for u, i, b in zip(emb.isometries, emb.index_map, y.blocks):
        blocks[i] = u @ b @ matcore.dagger(u)
    return AlgebraElement(emb.ambient, tuple(blocks))


def amplify_element(array):
    """Assemble a k x k array of elements of ``M`` into one element of ``M_k(M)``."""
    k = len(array)
    if k == 0 or any(len(row) != k for row in array):
        raise ShapeMismatch("expected a non-empty square array of elements")
    structure = array[0][0].structure
    blocks = []
    for i in range(len(structure)):
        blocks.append(np.block([[array[r][c].blocks[i] for c in range(k)] for r in range(k)]))
    return AlgebraElement(amplify(structure, k), tuple(blocks))


def compress_entrywise(emb, array):
    return [[compress(emb, x) for x in row] for row in array]


def amplify_embedding(emb, k):
    """The corner embedding of ``p (x) 1_k`` inside ``M_k(M)``."""
    eye = np.eye(k)
    return CornerEmbedding(amplify(emb.ambient, k), amplify(emb.corner, k),
                           tuple(np.kron(eye, u) for u in emb.isometries), emb.index_map)


class ElementSpan:
    """Orthonormal basis (trace inner product) of a growing subspace of an algebra.

    In ``hermitian`` mode every element is split into self-adjoint parts before it is added,
    and coefficients are kept real, so the basis consists of self-adjoint elements.
    """

    def __init__(self, structure, hermitian=False, tol=1e-8):
        self.structure = structure
        self.hermitian = hermitian
        self.tol = tol
        self._q = np.zeros((structure.dimension, 0), dtype=np.complex128)

    @property
    def dimension(self):
        return self._q.shape[1]

    @property
    def matrix(self):
        return self._q

    @property
    def elements(self):
        return [AlgebraElement.from_vector(self.structure, self._q[:, k]) for k in range(self.dimension)]

    def _coefficients(self, v):
        c = matcore.dagger(self._q) @ v
        return np.real(c) if self.hermitian else c

    def _residual(self, v):
        r = v - self._q @ self._coefficients(v)
        return r - self._q @ self._coefficients(r)

    def _extend_vector(self, v):
        scale = max(1.0, float(np.linalg.norm(v)))
        r = self._residual(v)
        norm = float(np.linalg.norm(r))
        if norm <= self.tol * scale:
            return False
        self._q = np.column_stack([self._q, r / norm])
        return True

    def extend(self, x):
        """Add ``x`` (or its self-adjoint parts); returns whether the dimension grew."""
        if x.structure != self.structure:
            raise ShapeMismatch(f"element lives on {x.structure}, expected {self.structure}")
        if not self.hermitian:
            return self._extend_vector(x.to_vector())
        grew = False
        for part in x.hermitian_parts():
            grew = self._extend_vector(part.to_vector()) or grew
        return grew

    def extend_all(self, elements):
        grew = False
        for x in elements:
            grew = self.extend(x) or grew
        return grew

    def project(self, x):
        v = x.to_vector()
        return AlgebraElement.from_vector(self.structure, self._q @ (matcore.dagger(self._q) @ v))

    def distance(self, x):
        v = x.to_vector()
        return float(np.linalg.norm(v - self._q @ (matcore.dagger(self._q) @ v)))

    def contains(self, x, tol=None):
        tol = self.tol if tol is None else tol
        return self.distance(x) <= tol * max(1.0, x.frobenius())

    def random_element(self, rng):
        """Random complex combination of the basis, unit trace norm; zero if the span is empty."""
        if self.dimension == 0:
            return AlgebraElement.zero(self.structure)
        c = rng.standard_normal(self.dimension) + 1j * rng.standard_normal(self.dimension)
        return AlgebraElement.from_vector(self.structure, self._q @ (c / np.linalg.norm(c)))


def compression_matrix(emb):
    """Coordinate matrix of ``E`` (``D_corner x D_ambient``); row-major ``vec(u* x u) = (u* kron u^T) vec(x)``."""
    out = np.zeros((emb.corner.dimension, emb.ambient.dimension), dtype=np.complex128)
    for k, (u, i) in enumerate(zip(emb.isometries, emb.index_map)):
        r, n = emb.corner.block_dims[k], emb.ambient.block_dims[i]
        out[emb.corner.offsets[k]:emb.corner.offsets[k] + r * r,
            emb.ambient.offsets[i]:emb.ambient.offsets[i] + n * n] = np.kron(matcore.dagger(u), u.T)
    return out


def injection_matrix(emb):
    """Coordinate matrix of ``y -> u y u*`` (``D_ambient x D_corner``)."""
    out = np.zeros((emb.ambient.dimension, emb.corner.dimension), dtype=np.complex128)
    for k, (u, i) in enumerate(zip(emb.isometries, emb.index_map)):
        r, n = emb.corner.block_dims[k], emb.ambient.block_dims[i]
        out[emb.ambient.offsets[i]:emb.ambient.offsets[i] + n * n,
            emb.corner.offsets[k]:emb.corner.offsets[k] + r * r] = np.kron(u, np.conj(u))
    return out
