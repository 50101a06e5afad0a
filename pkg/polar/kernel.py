"""
Arikan kernel F = [[1, 0], [1, 1]], its Kronecker powers in natural order,
and the dynamic frozen description of a polar subcode.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Tuple

import numpy as np

from algebra.gf2 import BitMatrix
from orbitdecoding.exceptions import ShapeError, ValidationError

logger = logging.getLogger(__name__)


def kronecker_power(m: int) -> np.ndarray:
    """F^{(x)m} as a dense 0/1 array: entry (i, j) is 1 iff j's bits are a subset of i's."""
    idx = np.arange(1 << m)
    return ((idx[:, None] & idx[None, :]) == idx[None, :]).astype(np.uint8)


@dataclass(frozen=True)
class PolarSpec:
    m: int
    n: int
    generator: BitMatrix = field(repr=False)

    @classmethod
    def of_order(cls, m: int) -> 'PolarSpec':
        if m < 0:
            raise ValidationError(f"log-blocklength must be non-negative, got {m}")
        return cls(m=m, n=1 << m, generator=BitMatrix.from_dense(kronecker_power(m)))

    @classmethod
    def of_length(cls, n: int) -> 'PolarSpec':
        if n < 1 or n & (n - 1):
            raise ShapeError(f"polar blocklength must be a power of two, got {n}")
        return cls.of_order(n.bit_length() - 1)


def next_power_of_two(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def polar_encode(spec: PolarSpec, u) -> np.ndarray:
    """``u @ F^{(x)m}`` by the in-place butterfly; leading axes are batch axes."""
    x = np.array(u, dtype=np.uint8, copy=True)
    if x.shape[-1:] != (spec.n,):
        raise ShapeError(f"input length {x.shape[-1:]} does not match n={spec.n}")
    lead = x.shape[:-1]
    half = 1
    while half < spec.n:
        view = x.reshape(*lead, spec.n // (2 * half), 2, half)
        view[..., 0, :] ^= view[..., 1, :]
        half *= 2
    return x


@dataclass(frozen=True)
class DynamicFrozenSpec:
    """Information pivots and the linear constraints of every frozen index.

    ``constraints[j]`` lists the pivot ranks ``r`` whose bits XOR to ``u[j]``;
    an empty tuple is a classical zero-frozen index.
    """

    n: int
    k: int
    pivots: Tuple[int, ...]
    constraints: Dict[int, Tuple[int, ...]]

    def __post_init__(self):
        if len(self.pivots) != self.k:
            raise ValidationError(f"{len(self.pivots)} pivots for k={self.k}")
        if list(self.pivots) != sorted(set(self.pivots)):
            raise ValidationError("pivots must be strictly increasing")
        frozen = set(range(self.n)) - set(self.pivots)
        if set(self.constraints) != frozen:
            raise ValidationError("pivots and constrained indices must partition 0..n-1")
        for j, ranks in self.constraints.items():
            for r in ranks:
                if not 0 <= r < self.k or self.pivots[r] >= j:
                    raise ValidationError(
                        f"frozen index {j} references pivot rank {r} that is not earlier"
                    )

    @cached_property
    def is_pivot(self) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        mask[list(self.pivots)] = True
        mask.setflags(write=False)
        return mask

    @cached_property
    def constraint_positions(self) -> Dict[int, np.ndarray]:
        """Frozen index -> positions in ``u`` of the pivots it depends on."""
        return {
            j: np.array([self.pivots[r] for r in ranks], dtype=np.intp)
            for j, ranks in self.constraints.items()
        }

    @property
    def frozen_indices(self) -> List[int]:
        return sorted(self.constraints)

    @property
    def dynamic_count(self) -> int:
        return sum(1 for ranks in self.constraints.values() if ranks)

    def satisfied_by(self, u) -> bool:
        u = np.asarray(u, dtype=np.uint8)
        for j, positions in self.constraint_positions.items():
            expected = int(np.bitwise_xor.reduce(u[positions])) if positions.size else 0
            if u[j] != expected:
                return False
        return True

    def expand(self, info) -> np.ndarray:
        """Fill frozen indices of ``u`` from information bits (leading batch axes allowed)."""
        info = np.asarray(info, dtype=np.uint8)
        if info.shape[-1:] != (self.k,):
            raise ShapeError(f"expected {self.k} information bits, got {info.shape[-1:]}")
        u = np.zeros(info.shape[:-1] + (self.n,), dtype=np.uint8)
        u[..., list(self.pivots)] = info
        for j in self.frozen_indices:
            positions = self.constraint_positions[j]
            if positions.size:
                u[..., j] = np.bitwise_xor.reduce(u[..., positions], axis=-1)
        return u


def bhattacharyya_parameters(m: int, sigma2: float) -> np.ndarray:
    """Z(W_i) of the synthetic channels of a BPSK/AWGN channel, natural index order.

    The most significant index bit selects the first split, 0 being the
    degraded (check-node) channel.
    """
    return synthetic_bhattacharyya(np.full(1 << m, np.exp(-1.0 / (2.0 * sigma2))))


def synthetic_bhattacharyya(z: np.ndarray) -> np.ndarray:
    """Z of the synthetic channels for per-coordinate channel parameters ``z``.

    Coordinates j and j + n/2 combine first; a perfectly known coordinate has z = 0.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.size == 1:
        return z.copy()
    half = z.size // 2
    a, b = z[:half], z[half:]
    return np.concatenate([synthetic_bhattacharyya(a + b - a * b), synthetic_bhattacharyya(a * b)])


def is_lower_triangular_affine(images: np.ndarray) -> bool:
    """True if ``i -> images[i]`` is i -> A i + b over index bits with A lower triangular.

    Output bit j may depend only on input bits l <= j. SC and SCL decoding
    commute with such coordinate permutations.
    """
    images = np.asarray(images, dtype=np.int64)
    n = images.size
    m = n.bit_length() - 1
    b = int(images[0])
    columns = [int(images[1 << l]) ^ b for l in range(m)]
    for l, col in enumerate(columns):
        if (col >> l) << l != col or not (col >> l) & 1:
            return False
    index = np.arange(n)
    expected = np.full(n, b, dtype=np.int64)
    for l, col in enumerate(columns):
        expected ^= np.where((index >> l) & 1, col, 0)
    return bool(np.array_equal(expected, images))
