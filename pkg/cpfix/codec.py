"""JSON encoding of complex scalars, matrices, algebra elements and CP maps.

Complex numbers are ``[re, im]`` pairs, matrices are row-major nested lists and Kraus lists
are keyed by ``"j,i"`` (target block, source block). Decoders accept plain real numbers as
scalars and raise ``ParseError`` naming the offending path.
"""
import numbers

import numpy as np

from .cpsemi import CPMap
from .exceptions import ParseError
from .vnalg import AlgebraElement


def encode_complex(z):
    z = complex(z)
    return [z.real, z.imag]


def decode_complex(value, path):
    if isinstance(value, bool):
        raise ParseError("expected a number or an [re, im] pair", path)
    if isinstance(value, numbers.Real):
        return complex(float(value), 0.0)
    if (isinstance(value, (list, tuple)) and len(value) == 2
            and all(isinstance(v, numbers.Real) and not isinstance(v, bool) for v in value)):
        return complex(float(value[0]), float(value[1]))
    raise ParseError("expected a number or an [re, im] pair", path)


def encode_matrix(m):
    m = np.asarray(m, dtype=np.complex128)
    return [[encode_complex(z) for z in row] for row in m]


def decode_matrix(value, shape, path):
    rows, cols = shape
    if not isinstance(value, list) or len(value) != rows:
        raise ParseError(f"expected {rows} rows for a {rows}x{cols} matrix", path)
    out = np.zeros((rows, cols), dtype=np.complex128)
    for r, row in enumerate(value):
        if not isinstance(row, list) or len(row) != cols:
            raise ParseError(f"expected {cols} entries for a {rows}x{cols} matrix", f"{path}[{r}]")
        for c, entry in enumerate(row):
            out[r, c] = decode_complex(entry, f"{path}[{r}][{c}]")
    if not np.all(np.isfinite(out)):
        raise ParseError("matrix has non-finite entries", path)
    return out


def encode_element(x):
    return [encode_matrix(b) for b in x.blocks]


def decode_element(value, structure, path):
    if not isinstance(value, list) or len(value) != len(structure):
        raise ParseError(f"expected {len(structure)} blocks for {structure}", path)
    blocks = [decode_matrix(b, (n, n), f"{path}[{i}]")
              for i, (b, n) in enumerate(zip(value, structure.block_dims))]
    return AlgebraElement(structure, tuple(blocks))


def block_key(j, i):
    return f"{j},{i}"


def parse_block_key(key, structure, path):
    try:
        j, i = (int(part) for part in str(key).split(','))
    except ValueError:
        raise ParseError(f"Kraus key {key!r} is not of the form \"j,i\"", path) from None
    if not (0 <= j < len(structure) and 0 <= i < len(structure)):
        raise ParseError(f"Kraus key {key!r} refers to a block outside {structure}", path)
    return j, i


def decode_kraus(value, structure, path):
    if not isinstance(value, dict) or not value:
        raise ParseError("expected a non-empty object of Kraus lists", path)
    kraus = {}
    for key, ops in value.items():
        key_path = f'{path}["{key}"]'
        j, i = parse_block_key(key, structure, key_path)
        if not isinstance(ops, list) or not ops:
            raise ParseError("expected a non-empty list of Kraus operators", key_path)
        shape = (structure.block_dims[j], structure.block_dims[i])
        kraus[(j, i)] = [decode_matrix(a, shape, f"{key_path}[{m}]") for m, a in enumerate(ops)]
    return CPMap(structure, structure, kraus)


def encode_kraus(phi):
    return {block_key(j, i): [encode_matrix(a) for a in ops] for (j, i), ops in sorted(phi.kraus.items())}


def encode_map(name, kind, phi):
    return {'name': name, 'kind': kind, 'kraus': encode_kraus(phi)}
