"""
Polar Orbit Decoding.

Every branch i permutes the channel LLRs by (P h_i)^-1, runs the shared
dynamic frozen polar decoder, lifts its candidates back to codewords of the
original code and hands them to a combiner. The winning branch's elimination
matrix E_j maps the winner back to a message.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np

from algebra.gf2 import BitMatrix
from algebra.permgroup import BSGS, Permutation, compose
from orbitdecoding.exceptions import CapacityError, InputError, OrbitDecodingError, ShapeError, ValidationError
from .decoders import LLR_CLAMP, ListDecoder, PathMetric
from .kernel import DynamicFrozenSpec, PolarSpec, is_lower_triangular_affine, next_power_of_two, polar_encode
from .transform import TransformResult, branch_dress, embed_generator, polar_transform

if TYPE_CHECKING:
    from codes.families import CodeSpec

logger = logging.getLogger(__name__)

Combiner = Literal['best-metric', 'ml-among-valid']
COMBINERS = ('best-metric', 'ml-among-valid')
SELECTIONS = ('enumerate', 'sample', 'distinct')
DISTINCT_POOL = 4096


@dataclass(frozen=True)
class PodBranch:
    perm: Permutation
    e: BitMatrix = field(repr=False)

    @property
    def e_dense(self) -> np.ndarray:
        return self.e.to_dense()


@dataclass(frozen=True)
class PodConfig:
    code: 'CodeSpec'
    spec: PolarSpec
    df: DynamicFrozenSpec
    m_p: BitMatrix = field(repr=False)
    branches: Tuple[PodBranch, ...]
    list_size: int = 1
    combiner: Combiner = 'ml-among-valid'
    path_metric: PathMetric = 'exact'
    min_sum: bool = False

    @property
    def m(self) -> int:
        return len(self.branches)

    @property
    def padding(self) -> int:
        return self.spec.n - self.code.n

    @property
    def label(self) -> str:
        inner = 'sc' if self.list_size == 1 else f"scl{self.list_size}"
        return f"pod{self.m}-{inner}"


@dataclass
class PodDiagnostics:
    branch_metrics: List[float]
    branch_valid: List[bool]
    distinct_candidates: int
    winner: int
    fallback: bool

    def as_dict(self) -> Dict:
        return {
            'branch_metrics': self.branch_metrics,
            'branch_valid': self.branch_valid,
            'distinct_candidates': self.distinct_candidates,
            'winner': self.winner,
            'fallback': self.fallback,
        }


def _pick_automorphisms(group: BSGS, count: int, selection: str, seed) -> List[Permutation]:
    size = group.order()
    if count > size:
        raise CapacityError(f"{count} branches requested from a group of order {size}")
    if selection == 'enumerate':
        return list(itertools.islice(group.elements(), count))
    if selection == 'sample':
        rng = np.random.default_rng(seed)
        chosen = [Permutation.identity(group.n)]
        seen = set(chosen)
        while len(chosen) < count:
            h = group.sample_uniform(rng)
            if h not in seen:
                seen.add(h)
                chosen.append(h)
        return chosen
    raise ValidationError(f"unknown branch selection {selection!r}")


def _distinct_automorphisms(result: TransformResult, group: BSGS, count: int) -> List[Permutation]:
    """Greedy scan of the group in enumeration order, skipping any h whose branch
    differs from a kept branch by a lower-triangular affine relabelling.

    Such branches produce the same SC/SCL decisions. Branch sets are nested in
    ``count``; once the scan pool runs dry the skipped elements fill the rest.
    """
    size = group.order()
    if count > size:
        raise CapacityError(f"{count} branches requested from a group of order {size}")
    n = result.spec.n
    chosen, kept, skipped = [], [], []
    for h in itertools.islice(group.elements(), DISTINCT_POOL):
        images = compose(result.perm, h.extended(n)).images
        if any(is_lower_triangular_affine(inverse_images[images]) for inverse_images in kept):
            skipped.append(h)
            continue
        chosen.append(h)
        kept.append(np.argsort(images))
        if len(chosen) == count:
            return chosen
    logger.warning(
        f"only {len(chosen)} of {count} branches are pairwise distinct within the first "
        f"{DISTINCT_POOL} group elements; padding with equivalent ones"
    )
    for h in itertools.chain(skipped, itertools.islice(group.elements(), DISTINCT_POOL, None)):
        if len(chosen) == count:
            break
        chosen.append(h)
    return chosen


def build_pod(code: 'CodeSpec', base: Optional[Permutation], group: Optional[BSGS], m_branches: int,
              selection: str = 'enumerate', seed=None, list_size: int = 1,
              combiner: Combiner = 'ml-among-valid', path_metric: PathMetric = 'exact',
              min_sum: bool = False) -> PodConfig:
    """Assemble M orbit branches P h_1 .. P h_M with h_1 the identity.

    Codes whose length is not a power of two are embedded with always-zero
    coordinates; permutations are extended to fix them.
    """
    if m_branches < 1:
        raise ValidationError(f"at least one branch is required, got {m_branches}")
    if combiner not in COMBINERS:
        raise ValidationError(f"unknown combiner {combiner!r}")
    if selection not in SELECTIONS:
        raise ValidationError(f"unknown branch selection {selection!r}")
    n = next_power_of_two(code.n)
    spec = PolarSpec.of_length(n)
    if base is None:
        base = Permutation.identity(n)
    elif base.n == code.n:
        base = base.extended(n)
    elif base.n != n:
        raise ShapeError(f"base permutation on {base.n} points for a length-{code.n} code")

    result = polar_transform(embed_generator(code.g, n), base, spec)
    if m_branches == 1:
        automorphisms = [Permutation.identity(code.n)]
    else:
        if group is None:
            raise ValidationError("more than one branch needs an automorphism group")
        if selection == 'distinct':
            automorphisms = _distinct_automorphisms(result, group, m_branches)
        else:
            automorphisms = _pick_automorphisms(group, m_branches, selection, seed)

    branches = []
    for h in automorphisms:
        dressed = branch_dress(result, h.extended(n))
        branches.append(PodBranch(perm=dressed.perm, e=dressed.e_p))
    logger.info(
        f"POD for {code.name}: {len(branches)} branches, L={list_size}, "
        f"{result.df.dynamic_count} dynamic frozen indices"
    )
    return PodConfig(
        code=code, spec=spec, df=result.df, m_p=result.m_p, branches=tuple(branches),
        list_size=list_size, combiner=combiner, path_metric=path_metric, min_sum=min_sum,
    )


def _combine_batch(candidates: np.ndarray, metrics: np.ndarray, llrs: np.ndarray,
                   h_check: np.ndarray, mode: Combiner):
    """Choose one candidate per received word.

    ``candidates`` is (batch, C, n) ordered branch-major then by list rank, so
    a first-occurrence argmax/argmin breaks ties by lowest branch, then rank.
    """
    if candidates.shape[1] == 0:
        raise OrbitDecodingError("combiner received no candidates")
    syndromes = candidates.astype(np.int64) @ h_check.T.astype(np.int64) % 2
    valid = ~syndromes.any(axis=2)
    best_metric = np.argmin(metrics, axis=1)
    if mode == 'best-metric':
        return best_metric, valid, np.zeros(len(best_metric), dtype=bool)
    correlation = ((1.0 - 2.0 * candidates) * llrs[:, None, :]).sum(axis=2)
    scored = np.where(valid, correlation, -np.inf)
    fallback = ~valid.any(axis=1)
    winner = np.where(fallback, best_metric, np.argmax(scored, axis=1))
    return winner, valid, fallback


def combine(candidates: Sequence[Sequence[Tuple[np.ndarray, float]]], llr, h_check: BitMatrix,
            mode: Combiner = 'ml-among-valid') -> Tuple[int, Tuple[np.ndarray, float]]:
    """Single-word combiner over per-branch ``(codeword, metric)`` lists."""
    flat = [(j, cand) for j, branch in enumerate(candidates) for cand in branch]
    if not flat:
        raise OrbitDecodingError("combiner received no candidates")
    words = np.array([c[0] for _, c in flat], dtype=np.uint8)[None]
    metrics = np.array([c[1] for _, c in flat], dtype=np.float64)[None]
    winner, _, _ = _combine_batch(words, metrics, np.asarray(llr, dtype=np.float64)[None],
                                  h_check.to_dense(), mode)
    j, cand = flat[int(winner[0])]
    return j, cand


class PodDecoder:
    """Decode received LLR vectors of ``cfg.code`` over the configured orbit branches."""

    def __init__(self, cfg: PodConfig, workers: int = 1):
        self.cfg = cfg
        self.workers = max(1, workers)
        self.decoder = ListDecoder(cfg.spec, cfg.df, cfg.list_size, cfg.path_metric, cfg.min_sum)
        self.h_check = cfg.code.h.to_dense()
        self.e_stack = np.stack([b.e_dense for b in cfg.branches])
        self.perm_stack = np.stack([b.perm.images for b in cfg.branches])

    @property
    def label(self) -> str:
        return self.cfg.label

    def _pad(self, llrs: np.ndarray) -> np.ndarray:
        llrs = np.asarray(llrs, dtype=np.float64)
        if llrs.ndim != 2 or llrs.shape[1] != self.cfg.code.n:
            raise ShapeError(f"expected (batch, {self.cfg.code.n}) LLRs, got {llrs.shape}")
        if not np.all(np.isfinite(llrs)):
            raise InputError("channel LLRs must be finite")
        if self.cfg.padding:
            known = np.full((llrs.shape[0], self.cfg.padding), LLR_CLAMP)
            llrs = np.hstack([llrs, known])
        return llrs

    def _decode_branches(self, padded: np.ndarray, branch_ids: Sequence[int]):
        permuted = np.concatenate([padded[:, self.perm_stack[i]] for i in branch_ids])
        result = self.decoder.decode_batch(permuted)
        batch = padded.shape[0]
        u_hat = result.u_hat.reshape(len(branch_ids), batch, *result.u_hat.shape[1:])
        metrics = result.metrics.reshape(len(branch_ids), batch, -1)
        return u_hat, metrics

    def decode_branches(self, llrs):
        """Raw branch output: u_hat (batch, M, L, n), metrics (batch, M, L), lifted codewords."""
        padded = self._pad(llrs)
        groups = np.array_split(np.arange(self.cfg.m), min(self.workers, self.cfg.m))
        if len(groups) == 1:
            parts = [self._decode_branches(padded, groups[0])]
        else:
            with ThreadPoolExecutor(max_workers=len(groups)) as pool:
                parts = list(pool.map(lambda ids: self._decode_branches(padded, ids), groups))
        u_hat = np.concatenate([p[0] for p in parts]).swapaxes(0, 1)
        metrics = np.concatenate([p[1] for p in parts]).swapaxes(0, 1)
        x = polar_encode(self.cfg.spec, u_hat)
        lifted = np.empty_like(x)
        for i in range(self.cfg.m):
            branch_view = lifted[:, i]
            branch_view[..., self.perm_stack[i]] = x[:, i]
        return u_hat, metrics, lifted[..., :self.cfg.code.n]

    def decode_batch(self, llrs, with_diagnostics: bool = False):
        llrs = np.asarray(llrs, dtype=np.float64)
        u_hat, metrics, lifted = self.decode_branches(llrs)
        batch, m, width, n = lifted.shape
        winner, valid, fallback = _combine_batch(
            lifted.reshape(batch, m * width, n), metrics.reshape(batch, m * width),
            llrs, self.h_check, self.cfg.combiner,
        )
        branch = winner // width
        rank = winner % width
        rows = np.arange(batch)
        u_win = u_hat[rows, branch, rank]
        pivots = self.cfg.df.pivots
        messages = (u_win[:, list(pivots)].astype(np.int64)[:, None, :]
                    @ self.e_stack[branch].astype(np.int64))[:, 0, :] % 2
        messages = messages.astype(np.uint8)
        if fallback.any():
            logger.warning(f"{int(fallback.sum())}/{batch} words fell back to best-metric")
        if not with_diagnostics:
            return messages, None
        valid = valid.reshape(batch, m, width)
        diagnostics = []
        for b in range(batch):
            distinct = np.unique(lifted[b].reshape(m * width, n), axis=0).shape[0]
            diagnostics.append(PodDiagnostics(
                branch_metrics=[float(v) for v in metrics[b, :, 0]],
                branch_valid=[bool(v) for v in valid[b, :, 0]],
                distinct_candidates=int(distinct),
                winner=int(branch[b]),
                fallback=bool(fallback[b]),
            ))
        return messages, diagnostics

    def decode(self, llr) -> Tuple[np.ndarray, PodDiagnostics]:
        messages, diagnostics = self.decode_batch(np.asarray(llr, dtype=np.float64)[None], True)
        return messages[0], diagnostics[0]


def pod_decode(cfg: PodConfig, llr) -> Tuple[np.ndarray, PodDiagnostics]:
    return PodDecoder(cfg).decode(llr)


def single_transform(code: 'CodeSpec', base: Optional[Permutation] = None) -> TransformResult:
    """The transform of the base permutation alone, embedded if needed."""
    n = next_power_of_two(code.n)
    if base is None:
        base = Permutation.identity(n)
    elif base.n == code.n:
        base = base.extended(n)
    return polar_transform(embed_generator(code.g, n), base, PolarSpec.of_length(n))
