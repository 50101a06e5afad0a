"""
Successive cancellation (list) decoding of polar subcodes with dynamic frozen bits.

All arrays carry a leading batch axis and a list axis, so one call decodes many
received words (trials, orbit branches) at once. LLRs are positive for bit 0.
"""

import logging
from dataclasses import dataclass
from typing import List, Literal

import numpy as np

from orbitdecoding.exceptions import InputError, ShapeError, ValidationError
from .kernel import DynamicFrozenSpec, PolarSpec

logger = logging.getLogger(__name__)

LLR_CLAMP = 40.0

PathMetric = Literal['exact', 'approx']


def check_node(a: np.ndarray, b: np.ndarray, min_sum: bool = False) -> np.ndarray:
    """LLR of the XOR of two bits: 2 atanh(tanh(a/2) tanh(b/2)), or its min-sum form."""
    a = np.clip(a, -LLR_CLAMP, LLR_CLAMP)
    b = np.clip(b, -LLR_CLAMP, LLR_CLAMP)
    approx = np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
    if min_sum:
        return approx
    return approx + np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b)))


def bit_node(a: np.ndarray, b: np.ndarray, x: np.ndarray) -> np.ndarray:
    return b + (1.0 - 2.0 * x) * a


def path_penalty(llr: np.ndarray, bits: np.ndarray, rule: PathMetric = 'exact') -> np.ndarray:
    """Metric increment for deciding ``bits`` against ``llr``."""
    signed = (1.0 - 2.0 * bits) * llr
    if rule == 'exact':
        return np.logaddexp(0.0, -signed)
    return np.where(signed < 0, np.abs(llr), 0.0)


@dataclass(frozen=True)
class DecodePath:
    u_hat: np.ndarray
    metric: float


@dataclass(frozen=True)
class ListDecodeResult:
    """Surviving paths per received word, sorted by ascending metric."""

    u_hat: np.ndarray    # (batch, list, n) uint8
    metrics: np.ndarray  # (batch, list) float64

    @property
    def best(self) -> np.ndarray:
        return self.u_hat[:, 0, :]


class _ListState:
    """Per-call mutable decoding state; decoders themselves stay stateless."""

    def __init__(self, batch: int, n: int):
        self.u_hat = np.zeros((batch, 1, n), dtype=np.uint8)
        self.metrics = np.zeros((batch, 1), dtype=np.float64)


class ListDecoder:
    """SC (``list_size=1``) and SCL decoder for a fixed dynamic frozen spec.

    Pivot indices fork both hypotheses and keep the ``list_size`` best paths,
    ties resolved in favour of the lower candidate index. Frozen indices extend
    every path by its constraint. The metric is charged at every index.
    """

    def __init__(self, spec: PolarSpec, df: DynamicFrozenSpec, list_size: int = 1,
                 path_metric: PathMetric = 'exact', min_sum: bool = False):
        if df.n != spec.n:
            raise ShapeError(f"frozen spec for n={df.n} used with kernel n={spec.n}")
        if list_size < 1:
            raise ValidationError(f"list size must be at least 1, got {list_size}")
        if path_metric not in ('exact', 'approx'):
            raise ValidationError(f"unknown path metric {path_metric!r}")
        self.spec = spec
        self.df = df
        self.list_size = list_size
        self.path_metric = path_metric
        self.min_sum = min_sum

    def __repr__(self):
        return f"ListDecoder(n={self.spec.n}, k={self.df.k}, L={self.list_size})"

    def decode_batch(self, llrs) -> ListDecodeResult:
        llrs = np.asarray(llrs, dtype=np.float64)
        if llrs.ndim != 2 or llrs.shape[1] != self.spec.n:
            raise ShapeError(f"expected (batch, {self.spec.n}) LLRs, got {llrs.shape}")
        if not np.all(np.isfinite(llrs)):
            raise InputError("channel LLRs must be finite")
        state = _ListState(llrs.shape[0], self.spec.n)
        self._node(state, llrs[:, None, :], 0)
        order = np.argsort(state.metrics, axis=1, kind='stable')
        u_hat = np.take_along_axis(state.u_hat, order[:, :, None], axis=1)
        metrics = np.take_along_axis(state.metrics, order, axis=1)
        return ListDecodeResult(u_hat=u_hat, metrics=metrics)

    def _node(self, state: _ListState, llr: np.ndarray, offset: int):
        """Decode the subtree whose leaves are ``offset .. offset + size``.

        Returns the re-encoded partial sums of the surviving paths and, for
        each surviving path, the index of the input path it extends.
        """
        size = llr.shape[2]
        if size == 1:
            return self._leaf(state, llr[:, :, 0], offset)
        half = size // 2
        a, b = llr[:, :, :half], llr[:, :, half:]
        x1, parents1 = self._node(state, check_node(a, b, self.min_sum), offset)
        a = np.take_along_axis(a, parents1[:, :, None], axis=1)
        b = np.take_along_axis(b, parents1[:, :, None], axis=1)
        x2, parents2 = self._node(state, bit_node(a, b, x1), offset + half)
        x1 = np.take_along_axis(x1, parents2[:, :, None], axis=1)
        parents = np.take_along_axis(parents1, parents2, axis=1)
        return np.concatenate([x1 ^ x2, x2], axis=2), parents

    def _leaf(self, state: _ListState, llr: np.ndarray, j: int):
        batch, width = llr.shape
        if self.df.is_pivot[j]:
            zero = state.metrics + path_penalty(llr, np.zeros_like(llr), self.path_metric)
            one = state.metrics + path_penalty(llr, np.ones_like(llr), self.path_metric)
            candidates = np.stack([zero, one], axis=2).reshape(batch, 2 * width)
            keep = np.argsort(candidates, axis=1, kind='stable')[:, :self.list_size]
            parents = keep >> 1
            bits = (keep & 1).astype(np.uint8)
            state.u_hat = np.take_along_axis(state.u_hat, parents[:, :, None], axis=1)
            state.u_hat[:, :, j] = bits
            state.metrics = np.take_along_axis(candidates, keep, axis=1)
            return bits[:, :, None], parents
        positions = self.df.constraint_positions[j]
        if positions.size:
            bits = np.bitwise_xor.reduce(state.u_hat[:, :, positions], axis=2)
        else:
            bits = np.zeros((batch, width), dtype=np.uint8)
        state.u_hat[:, :, j] = bits
        state.metrics = state.metrics + path_penalty(llr, bits, self.path_metric)
        return bits[:, :, None], np.broadcast_to(np.arange(width), (batch, width))


def scl_decode(spec: PolarSpec, df: DynamicFrozenSpec, llr, list_size: int,
               path_metric: PathMetric = 'exact', min_sum: bool = False) -> List[DecodePath]:
    decoder = ListDecoder(spec, df, list_size, path_metric, min_sum)
    result = decoder.decode_batch(np.asarray(llr, dtype=np.float64)[None, :])
    return [
        DecodePath(u_hat=result.u_hat[0, i].copy(), metric=float(result.metrics[0, i]))
        for i in range(result.u_hat.shape[1])
    ]


def sc_decode(spec: PolarSpec, df: DynamicFrozenSpec, llr,
              path_metric: PathMetric = 'exact', min_sum: bool = False) -> DecodePath:
    return scl_decode(spec, df, llr, 1, path_metric, min_sum)[0]
