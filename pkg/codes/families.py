"""
Benchmark code families: the (8,3) block repetition code, extended BCH codes and
the extended Golay code, with parity checks and known automorphism generators.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from algebra.gf2 import BitMatrix, matmul, rref_with_transform
from algebra.permgroup import Permutation, act_on_rows
from orbitdecoding.exceptions import CapacityError, LabelingError, ValidationError
from polar.transform import verify_automorphism
from .fields import GF2mField

logger = logging.getLogger(__name__)

ENUMERATION_MAX_K = 20


@dataclass(frozen=True)
class CodeSpec:
    name: str
    n: int
    k: int
    d: Optional[int]
    g: BitMatrix = field(repr=False)
    h: BitMatrix = field(repr=False)
    aut_generators: Tuple[Permutation, ...] = field(default=(), repr=False)

    @property
    def rate(self) -> float:
        return self.k / self.n


def check_generators(g: BitMatrix, generators: Sequence[Permutation]) -> List[Tuple[Permutation, bool]]:
    return [(h, verify_automorphism(g, h)) for h in generators]


def verify_code(code: CodeSpec, error=LabelingError) -> CodeSpec:
    """Fail unless ``g`` is full rank, ``g h^T = 0`` and every generator preserves the code."""
    if code.g.shape != (code.k, code.n) or code.g.rank() != code.k:
        raise ValidationError(f"{code.name}: generator is not a full-rank {code.k}x{code.n} matrix")
    if code.h.cols != code.n or not matmul(code.g, code.h.T).is_zero():
        raise ValidationError(f"{code.name}: parity-check matrix does not annihilate the generator")
    for h, ok in check_generators(code.g, code.aut_generators):
        if not ok:
            raise error(f"{code.name}: {h} is not an automorphism")
    return code


def parity_from_generator(g: BitMatrix) -> BitMatrix:
    """H with H[:, pivots] = A^T and H[:, others] = I for RREF(g) = [I | A] up to columns."""
    reduced, _, pivots = rref_with_transform(g)
    if len(pivots) < g.rows:
        raise ValidationError(f"generator has rank {len(pivots)} < {g.rows} rows")
    others = [c for c in range(g.cols) if c not in set(pivots)]
    a = reduced.to_dense()[:, others]
    h = np.zeros((len(others), g.cols), dtype=np.uint8)
    h[:, pivots] = a.T
    h[:, others] = np.eye(len(others), dtype=np.uint8)
    return BitMatrix.from_dense(h)


def extend_code(g: BitMatrix) -> BitMatrix:
    """Append an overall-parity column."""
    dense = g.to_dense()
    parity = dense.sum(axis=1, keepdims=True) % 2
    return BitMatrix.from_dense(np.hstack([dense, parity.astype(np.uint8)]))


# -- enumeration -----------------------------------------------------------------

def codewords(g: BitMatrix, limit_k: int = ENUMERATION_MAX_K) -> np.ndarray:
    """All 2^k codewords in reflected Gray order of the message.

    Consecutive words differ by one generator row.
    """
    if g.rows > limit_k:
        raise CapacityError(f"enumerating 2^{g.rows} codewords exceeds the 2^{limit_k} limit")
    dense = g.to_dense()
    words = np.zeros((1, g.cols), dtype=np.uint8)
    for r in range(g.rows):
        words = np.concatenate([words, words[::-1] ^ dense[r]])
    return words


def gray_messages(k: int) -> np.ndarray:
    """Messages matching the order of :func:`codewords`."""
    messages = np.zeros((1, k), dtype=np.uint8)
    for r in range(k):
        flipped = messages[::-1].copy()
        flipped[:, r] ^= 1
        messages = np.concatenate([messages, flipped])
    return messages


def weight_distribution(g: BitMatrix) -> Dict[int, int]:
    weights = codewords(g).sum(axis=1)
    counts = np.bincount(weights, minlength=g.cols + 1)
    return {w: int(c) for w, c in enumerate(counts) if c}


def minimum_distance(g: BitMatrix) -> int:
    nonzero = [w for w in weight_distribution(g) if w > 0]
    if not nonzero:
        raise ValidationError("the zero code has no minimum distance")
    return min(nonzero)


# -- repetition ------------------------------------------------------------------

def repetition_block_code() -> CodeSpec:
    """Three repetition blocks of lengths 3, 3 and 2."""
    g = BitMatrix.from_rows(['11100000', '00011100', '00000011'])
    generators = tuple(Permutation.from_cycles(8, cycles) for cycles in (
        [(0, 1)], [(1, 2)], [(3, 4)], [(4, 5)], [(6, 7)], [(0, 3), (1, 4), (2, 5)],
    ))
    code = CodeSpec(name='rep8-3', n=8, k=3, d=2, g=g, h=parity_from_generator(g),
                    aut_generators=generators)
    return verify_code(code)


# -- BCH -------------------------------------------------------------------------

def bch_generator(field_: GF2mField, design_distance: int) -> int:
    """Generator polynomial of the narrow-sense BCH code as bits (bit i = x^i)."""
    if not 2 <= design_distance <= field_.order:
        raise ValidationError(
            f"design distance must be in 2..{field_.order}, got {design_distance}"
        )
    exponents = sorted({e for i in range(1, design_distance) for e in field_.cyclotomic_coset(i)})
    coeffs = [1]
    for e in exponents:
        root = field_.alpha_power(e)
        shifted = [0] + coeffs
        scaled = [field_.mul(root, c) for c in coeffs] + [0]
        coeffs = [s ^ t for s, t in zip(shifted, scaled)]
    if any(c not in (0, 1) for c in coeffs):
        raise ValidationError("generator polynomial has coefficients outside GF(2)")
    return sum(c << i for i, c in enumerate(coeffs))


def cyclic_generator_matrix(poly: int, n: int) -> BitMatrix:
    degree = poly.bit_length() - 1
    k = n - degree
    dense = np.zeros((k, n), dtype=np.uint8)
    taps = [i for i in range(degree + 1) if poly >> i & 1]
    for r in range(k):
        dense[r, [r + t for t in taps]] = 1
    return BitMatrix.from_dense(dense)


def agl_generators(field_: GF2mField, labeling: str = 'cyclic') -> Tuple[Permutation, ...]:
    """x -> alpha x, x -> x + 1 and x -> x^2 on the extended coordinates.

    ``cyclic`` puts alpha^i at coordinate i and 0 last; ``binary`` puts every
    element at the coordinate given by its bit vector.
    """
    q = field_.size
    if labeling == 'binary':
        elements = range(q)
        multiply = [field_.mul(2, x) for x in elements]
        translate = [x ^ 1 for x in elements]
        frobenius = [field_.mul(x, x) for x in elements]
        return tuple(Permutation(images) for images in (multiply, translate, frobenius))
    if labeling != 'cyclic':
        raise ValidationError(f"unknown coordinate labeling {labeling!r}")
    cyclic = np.arange(q - 1)
    multiply = np.append((cyclic + 1) % (q - 1), q - 1)
    translate = np.array([field_.positions[field_.element_at(i) ^ 1] for i in range(q)])
    frobenius = np.append((2 * cyclic) % (q - 1), q - 1)
    return tuple(Permutation(images) for images in (multiply, translate, frobenius))


def bch_code(m: int, design_distance: int, name: Optional[str] = None, labeling: str = 'binary') -> CodeSpec:
    """Extended primitive narrow-sense BCH code of length 2^m.

    Coordinates follow ``labeling`` as in ``agl_generators``.
    """
    field_ = GF2mField(m)
    poly = bch_generator(field_, design_distance)
    g = extend_code(cyclic_generator_matrix(poly, field_.order))
    generators = agl_generators(field_, labeling)
    if labeling == 'binary':
        g = act_on_rows(Permutation([field_.element_at(i) for i in range(field_.size)]), g)
    k = g.rows
    name = name or f"ebch{field_.size}-{k}"
    d = minimum_distance(g) if k <= 16 else None
    code = CodeSpec(name=name, n=field_.size, k=k, d=d, g=g, h=parity_from_generator(g),
                    aut_generators=generators)
    logger.info(f"Built {name} ({labeling} labeling): generator polynomial {poly:#x}, d={d}")
    return verify_code(code)


# -- Golay -----------------------------------------------------------------------

GOLAY_PRIME = 23
INFINITY = GOLAY_PRIME


def _residues(p: int = GOLAY_PRIME) -> List[int]:
    return sorted({(x * x) % p for x in range(1, p)})


def _non_residues(p: int = GOLAY_PRIME) -> List[int]:
    residues = set(_residues(p))
    return [x for x in range(1, p) if x not in residues]


def golay24() -> CodeSpec:
    """Extended quadratic-residue code on GF(23) and the point at infinity (coordinate 23)."""
    p = GOLAY_PRIME
    spanning = np.zeros((p + 1, p + 1), dtype=np.uint8)
    for u in range(p):
        spanning[u, [(u + x) % p for x in _non_residues(p)]] = 1
        spanning[u, INFINITY] = 1
    spanning[p] = 1
    reduced, _, pivots = rref_with_transform(BitMatrix.from_dense(spanning))
    g = reduced.select_rows(range(len(pivots)))
    code = CodeSpec(name='egolay24-12', n=p + 1, k=g.rows, d=8, g=g, h=g,
                    aut_generators=m24_generators())
    return verify_code(code)


def m24_generators() -> Tuple[Permutation, ...]:
    """PSL(2,23) together with Conway's element delta; coordinate 23 is infinity.

    Four generators, not a pair: x+1, 2x, -1/x and delta. Together they
    generate M24 of order 244823040.
    """
    p = GOLAY_PRIME
    residues = set(_residues(p))

    def as_perm(fn) -> Permutation:
        return Permutation([fn(x) for x in range(p + 1)])

    def shift(x):
        return x if x == INFINITY else (x + 1) % p

    def double(x):
        return x if x == INFINITY else (2 * x) % p

    def negate_inverse(x):
        if x == 0:
            return INFINITY
        if x == INFINITY:
            return 0
        return (-pow(x, p - 2, p)) % p

    def delta(x):
        if x in (0, INFINITY):
            return x
        scale = 18 if x in residues else 9
        return (scale * pow(x, 3, p)) % p

    return tuple(as_perm(fn) for fn in (shift, double, negate_inverse, delta))
