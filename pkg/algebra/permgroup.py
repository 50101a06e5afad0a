"""
Permutations and permutation groups compiled to a base and strong generating set.

A permutation ``p`` acts on vectors by ``apply(p, v)[p(i)] = v[i]``; as a matrix
it has ``P[i][p(i)] = 1`` so the row-vector product ``v @ P`` is the same action.
``compose(a, b)`` applies ``a`` first, matching the matrix product ``A @ B``.
"""

import itertools
import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Sequence, Tuple

import numpy as np

from orbitdecoding.exceptions import CapacityError, ShapeError, ValidationError
from .gf2 import BitMatrix

logger = logging.getLogger(__name__)


class Permutation:
    """A bijection on ``{0, ..., n-1}`` stored as its image array."""

    __slots__ = ('images', '_key')

    def __init__(self, images):
        arr = np.array(images, dtype=np.intp)
        if arr.ndim != 1 or not np.array_equal(np.sort(arr), np.arange(arr.size)):
            raise ValidationError(f"not a permutation: {list(arr)[:32]}")
        self._adopt(arr)

    @classmethod
    def _trusted(cls, arr: np.ndarray) -> 'Permutation':
        perm = cls.__new__(cls)
        perm._adopt(arr)
        return perm

    def _adopt(self, arr: np.ndarray):
        arr.setflags(write=False)
        self.images = arr
        self._key = arr.tobytes()

    @classmethod
    def identity(cls, n: int) -> 'Permutation':
        return cls._trusted(np.arange(n, dtype=np.intp))

    @classmethod
    def from_cycles(cls, n: int, cycles: Iterable[Sequence[int]]) -> 'Permutation':
        images = np.arange(n, dtype=np.intp)
        for cycle in cycles:
            for src, dst in zip(cycle, list(cycle[1:]) + [cycle[0]]):
                images[src] = dst
        return cls(images)

    @property
    def n(self) -> int:
        return int(self.images.size)

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.images, np.arange(self.n)))

    def __call__(self, point: int) -> int:
        return int(self.images[point])

    def moved_points(self) -> List[int]:
        return [int(i) for i in np.flatnonzero(self.images != np.arange(self.n))]

    def extended(self, n: int) -> 'Permutation':
        """Same action on the first ``self.n`` points, fixing the rest."""
        if n < self.n:
            raise ShapeError(f"cannot extend a permutation on {self.n} points to {n}")
        return Permutation._trusted(np.concatenate([self.images, np.arange(self.n, n)]))

    def cycles(self) -> List[Tuple[int, ...]]:
        seen = set()
        out = []
        for start in range(self.n):
            if start in seen or self(start) == start:
                continue
            cycle = [start]
            seen.add(start)
            nxt = self(start)
            while nxt != start:
                cycle.append(nxt)
                seen.add(nxt)
                nxt = self(nxt)
            out.append(tuple(cycle))
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, Permutation):
            return NotImplemented
        return self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __getstate__(self):
        return self.images.tolist()

    def __setstate__(self, state):
        self._adopt(np.array(state, dtype=np.intp))

    def __repr__(self) -> str:
        return f"Permutation({self})"

    def __str__(self) -> str:
        cycles = self.cycles()
        if not cycles:
            return '()'
        return ''.join('(' + ' '.join(map(str, c)) + ')' for c in cycles)


def compose(a: Permutation, b: Permutation) -> Permutation:
    """Apply ``a`` then ``b``."""
    if a.n != b.n:
        raise ShapeError(f"cannot compose permutations on {a.n} and {b.n} points")
    return Permutation._trusted(b.images[a.images])


def inverse(p: Permutation) -> Permutation:
    inv = np.empty_like(p.images)
    inv[p.images] = np.arange(p.n, dtype=np.intp)
    return Permutation._trusted(inv)


def apply(p: Permutation, v) -> np.ndarray:
    """Move entry ``i`` of ``v`` to position ``p(i)`` along the last axis."""
    v = np.asarray(v)
    if v.shape[-1:] != (p.n,):
        raise ShapeError(f"vector length {v.shape[-1:]} does not match {p.n} points")
    out = np.empty_like(v)
    out[..., p.images] = v
    return out


def matrix_of(p: Permutation) -> BitMatrix:
    dense = np.zeros((p.n, p.n), dtype=np.uint8)
    dense[np.arange(p.n), p.images] = 1
    return BitMatrix.from_dense(dense)


def act_on_rows(p: Permutation, a: BitMatrix) -> BitMatrix:
    """``a @ matrix_of(p)`` computed as a column shuffle."""
    if a.cols != p.n:
        raise ShapeError(f"matrix has {a.cols} columns, permutation {p.n} points")
    return BitMatrix.from_dense(apply(p, a.to_dense()))


@dataclass(frozen=True)
class BSGS:
    """Base, strong generators and Schreier-tree transversals of a group."""

    n: int
    base: Tuple[int, ...]
    strong_generators: Tuple[Permutation, ...]
    transversals: Tuple[Dict[int, Permutation], ...]

    @property
    def base_length(self) -> int:
        return len(self.base)

    @property
    def transversal_sizes(self) -> List[int]:
        return [len(t) for t in self.transversals]

    def order(self) -> int:
        total = 1
        for t in self.transversals:
            total *= len(t)
        return total

    def sift(self, p: Permutation, start: int = 0) -> Tuple[Permutation, int]:
        """Strip ``p`` through the chain from level ``start``.

        Returns the residue and the level where stripping stopped.
        """
        for level in range(start, len(self.base)):
            rep = self.transversals[level].get(p(self.base[level]))
            if rep is None:
                return p, level
            p = compose(p, inverse(rep))
        return p, len(self.base)

    def contains(self, p: Permutation) -> bool:
        if p.n != self.n:
            raise ShapeError(f"permutation on {p.n} points, group on {self.n}")
        residue, level = self.sift(p)
        return level == len(self.base) and residue.is_identity

    def sample_uniform(self, rng: np.random.Generator) -> Permutation:
        """Exactly uniform element: one random coset representative per level."""
        g = Permutation.identity(self.n)
        for transversal in reversed(self.transversals):
            reps = list(transversal.values())
            g = compose(g, reps[int(rng.integers(len(reps)))])
        return g

    def elements(self) -> Iterator[Permutation]:
        """Every element once, depth-first over representatives, identity first."""
        levels = [list(t.values()) for t in reversed(self.transversals)]
        return self._walk(levels, 0, Permutation.identity(self.n))

    def _walk(self, levels, depth, prefix) -> Iterator[Permutation]:
        if depth == len(levels):
            yield prefix
            return
        for rep in levels[depth]:
            yield from self._walk(levels, depth + 1, compose(prefix, rep))

    def enumerate(self, limit: int) -> List[Permutation]:
        size = self.order()
        if size > limit:
            raise CapacityError(f"group order {size} exceeds enumeration limit {limit}")
        return list(self.elements())


def _first_moved(p: Permutation) -> int:
    return p.moved_points()[0]


def _orbit_transversal(n: int, point: int, gens: Sequence[Permutation]) -> Dict[int, Permutation]:
    reps = {point: Permutation.identity(n)}
    queue = deque([point])
    while queue:
        beta = queue.popleft()
        u = reps[beta]
        for s in gens:
            gamma = s(beta)
            if gamma not in reps:
                reps[gamma] = compose(u, s)
                queue.append(gamma)
    return reps


def schreier_sims(n: int, generators: Iterable) -> BSGS:
    """Deterministic Schreier-Sims.

    New base points are the smallest point moved by the generator that needs
    one, so the output is canonical for a given generator sequence.
    """
    gens = []
    for g in generators:
        if not isinstance(g, Permutation):
            g = Permutation(g)
        if g.n != n:
            raise ValidationError(f"generator on {g.n} points, expected {n}")
        if not g.is_identity and g not in gens:
            gens.append(g)

    base: List[int] = []
    for g in gens:
        if all(g(b) == b for b in base):
            base.append(_first_moved(g))

    levels = [[g for g in gens if all(g(b) == b for b in base[:i])] for i in range(len(base))]
    transversals = [_orbit_transversal(n, base[i], levels[i]) for i in range(len(base))]
    strong = list(gens)

    def strip(p: Permutation, start: int) -> Tuple[Permutation, int]:
        for level in range(start, len(base)):
            rep = transversals[level].get(p(base[level]))
            if rep is None:
                return p, level
            p = compose(p, inverse(rep))
        return p, len(base)

    i = len(base) - 1
    while i >= 0:
        added = False
        for beta, u_beta in list(transversals[i].items()):
            for s in levels[i]:
                u_gamma = transversals[i][s(beta)]
                schreier_gen = compose(compose(u_beta, s), inverse(u_gamma))
                if schreier_gen.is_identity:
                    continue
                residue, j = strip(schreier_gen, i + 1)
                if j == len(base) and residue.is_identity:
                    continue
                if j == len(base):
                    base.append(_first_moved(residue))
                    levels.append([])
                    transversals.append({})
                    logger.debug(f"new base point {base[-1]} at level {j}")
                for level in range(i + 1, j + 1):
                    levels[level].append(residue)
                    transversals[level] = _orbit_transversal(n, base[level], levels[level])
                strong.append(residue)
                i = j
                added = True
                break
            if added:
                break
        if not added:
            i -= 1

    group = BSGS(
        n=n,
        base=tuple(base),
        strong_generators=tuple(strong),
        transversals=tuple(transversals),
    )
    logger.info(f"Schreier-Sims on {n} points: base length {len(base)}, order {group.order()}")
    return group


def order(g: BSGS) -> int:
    return g.order()


def contains(g: BSGS, p: Permutation) -> bool:
    return g.contains(p)


def sample_uniform(g: BSGS, rng: np.random.Generator) -> Permutation:
    return g.sample_uniform(rng)


def enumerate_group(g: BSGS, limit: int) -> List[Permutation]:
    return g.enumerate(limit)


def closure(generators: Sequence[Permutation], limit: int = 10_000) -> set:
    """Breadth-first closure of a generator set, for small groups."""
    if not generators:
        raise ValidationError("closure needs at least one generator")
    n = generators[0].n
    seen = {Permutation.identity(n)}
    frontier = list(seen)
    while frontier:
        nxt = []
        for p, s in itertools.product(frontier, generators):
            q = compose(p, s)
            if q not in seen:
                seen.add(q)
                nxt.append(q)
                if len(seen) > limit:
                    raise CapacityError(f"closure exceeds {limit} elements")
        frontier = nxt
    return seen
