"""
Polar transformation of a binary linear block code.

For a full-rank generator G and coordinate permutation P the dynamic frozen
matrix is M_P = E_P G P^-1 G_n^-1 in reduced row echelon form. A message m is
carried as u = (m E_P^-1) M_P and transmitted as c = P(u G_n) = m G.
"""

import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Set, Tuple

import numpy as np

from algebra.gf2 import BitMatrix, invert, matmul, rowspan_equal, rref_with_transform, vecmat
from algebra.permgroup import Permutation, act_on_rows, apply, compose, inverse
from orbitdecoding.exceptions import AutomorphismViolationError, CapacityError, ShapeError, ValidationError
from .kernel import DynamicFrozenSpec, PolarSpec, polar_encode, synthetic_bhattacharyya

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TransformResult:
    m_p: BitMatrix
    e_p: BitMatrix
    pivots: Tuple[int, ...]
    df: DynamicFrozenSpec
    perm: Permutation
    generator: BitMatrix = field(repr=False)
    spec: PolarSpec = field(repr=False)

    @cached_property
    def e_p_inverse(self) -> BitMatrix:
        return invert(self.e_p)

    @cached_property
    def e_p_dense(self) -> np.ndarray:
        return self.e_p.to_dense()


def embed_generator(g: BitMatrix, n: int) -> BitMatrix:
    """Append always-zero coordinates so the code length becomes ``n``."""
    if n < g.cols:
        raise ShapeError(f"cannot embed a length-{g.cols} code into length {n}")
    if n == g.cols:
        return g
    return g.hstack(BitMatrix.zeros(g.rows, n - g.cols))


def df_spec_from_m(m_p: BitMatrix) -> DynamicFrozenSpec:
    reduced, _, pivots = rref_with_transform(m_p)
    if reduced != m_p or len(pivots) != m_p.rows:
        raise ValidationError("dynamic frozen matrix must be a full-rank RREF")
    dense = m_p.to_dense()
    pivot_set = set(pivots)
    constraints = {
        j: tuple(int(r) for r in np.flatnonzero(dense[:, j]))
        for j in range(m_p.cols) if j not in pivot_set
    }
    return DynamicFrozenSpec(n=m_p.cols, k=m_p.rows, pivots=tuple(pivots), constraints=constraints)


def polar_transform(g: BitMatrix, p: Permutation, spec: PolarSpec) -> TransformResult:
    if g.cols != spec.n or p.n != spec.n:
        raise ShapeError(f"code length {g.cols} / permutation {p.n} / kernel {spec.n} disagree")
    projected = matmul(act_on_rows(inverse(p), g), spec.generator)
    m_p, e_p, pivots = rref_with_transform(projected)
    if len(pivots) < g.rows:
        raise ValidationError(f"generator has rank {len(pivots)} < {g.rows} rows")
    df = df_spec_from_m(m_p)
    logger.debug(f"polar transform n={spec.n} k={g.rows}: {df.dynamic_count} dynamic frozen indices")
    return TransformResult(
        m_p=m_p, e_p=e_p, pivots=tuple(pivots), df=df, perm=p, generator=g, spec=spec,
    )


def branch_dress(result: TransformResult, h: Permutation) -> TransformResult:
    """Transform for the orbit element P h; fails unless M_{Ph} equals M_P."""
    dressed = polar_transform(result.generator, compose(result.perm, h), result.spec)
    if dressed.m_p != result.m_p:
        raise AutomorphismViolationError(f"{h} changes the dynamic frozen matrix")
    return dressed


def verify_automorphism(g: BitMatrix, h: Permutation) -> bool:
    if g.cols != h.n:
        raise ShapeError(f"code length {g.cols} but permutation on {h.n} points")
    return rowspan_equal(g, act_on_rows(inverse(h), g))


def encode_message(result: TransformResult, m) -> np.ndarray:
    """m -> u = (m E_P^-1) M_P -> c = P(u G_n)."""
    u = vecmat(vecmat(m, result.e_p_inverse), result.m_p)
    return apply(result.perm, polar_encode(result.spec, u))


def recover_message(result: TransformResult, u_hat) -> np.ndarray:
    u_hat = np.asarray(u_hat, dtype=np.uint8)
    if u_hat.shape != (result.spec.n,):
        raise ShapeError(f"u_hat of shape {u_hat.shape}, expected ({result.spec.n},)")
    if not result.df.satisfied_by(u_hat):
        raise ValidationError("u_hat violates the dynamic frozen constraints")
    return vecmat(u_hat[list(result.pivots)], result.e_p)


def recover_messages(e_dense: np.ndarray, pivots, u_hats: np.ndarray) -> np.ndarray:
    """Batched ``u_hat[pivots] @ E`` for pre-validated decoder output."""
    return (u_hats[..., list(pivots)].astype(np.int64) @ e_dense.astype(np.int64) % 2).astype(np.uint8)


def codebook(result: TransformResult, limit_k: int = 16) -> Set[bytes]:
    """All codewords P(u G_n) over the df-consistent u, as byte strings."""
    k = result.df.k
    if k > limit_k:
        raise CapacityError(f"codebook of 2^{k} words exceeds the 2^{limit_k} limit")
    info = np.array(list(itertools.product((0, 1), repeat=k)), dtype=np.uint8).reshape(-1, k)
    u = result.df.expand(info)
    words = apply(result.perm, polar_encode(result.spec, u))
    return {row.tobytes() for row in words}


def sc_error_bound(result: TransformResult, design_snr_db: float, code_length: Optional[int] = None) -> float:
    """Sum of Bhattacharyya parameters over the information indices.

    ``design_snr_db`` is Eb/N0 at the code rate k / code_length. Code
    coordinates at or past ``code_length`` are embedding padding and known
    to be zero.
    """
    code_length = result.spec.n if code_length is None else code_length
    rate = result.df.k / code_length
    sigma2 = 1.0 / (2.0 * rate * 10 ** (design_snr_db / 10))
    channel = np.where(result.perm.images >= code_length, 0.0, np.exp(-1.0 / (2.0 * sigma2)))
    z = synthetic_bhattacharyya(channel)
    return float(z[list(result.pivots)].sum())


def search_base(g: BitMatrix, spec: PolarSpec, design_snr_db: float, iterations: int,
                seed=None, start: Optional[Permutation] = None) -> Tuple[Permutation, float]:
    """Hill-climb over transpositions of the base permutation, minimising ``sc_error_bound``.

    ``g`` is the unembedded generator; only strictly better candidates are kept.
    """
    if iterations < 0:
        raise ValidationError(f"iterations must be non-negative, got {iterations}")
    code_length = g.cols
    generator = embed_generator(g, spec.n)
    best = Permutation.identity(spec.n) if start is None else start
    if best.n == code_length:
        best = best.extended(spec.n)
    if best.n != spec.n:
        raise ShapeError(f"start permutation on {best.n} points for a length-{spec.n} kernel")
    best_bound = sc_error_bound(polar_transform(generator, best, spec), design_snr_db, code_length)
    start_bound = best_bound
    rng = np.random.default_rng(seed)
    for _ in range(iterations):
        a, b = rng.choice(spec.n, size=2, replace=False)
        images = best.images.copy()
        images[[a, b]] = images[[b, a]]
        candidate = Permutation(images)
        bound = sc_error_bound(polar_transform(generator, candidate, spec), design_snr_db, code_length)
        if bound < best_bound:
            best, best_bound = candidate, bound
    logger.info(f"Base search at {design_snr_db} dB: SC bound {start_bound:.4g} -> {best_bound:.4g}")
    return best, best_bound
