"""
Reference decoders: brute-force soft-decision ML and hard-decision
bounded-distance decoding, plus the analytic hard-decision BLER.
"""

import logging
from functools import cached_property

import numpy as np
from scipy.special import erfc
from scipy.stats import binom

from codes.families import CodeSpec, codewords, gray_messages
from orbitdecoding.exceptions import CapacityError, InputError, ShapeError, ValidationError

logger = logging.getLogger(__name__)

# score matrix entries evaluated per chunk
SCORE_CHUNK = 1 << 22


class _CodebookDecoder:
    def __init__(self, code: CodeSpec, max_k: int):
        if code.k > max_k:
            raise CapacityError(f"{code.name}: 2^{code.k} codewords exceed the 2^{max_k} limit")
        self.code = code
        self.max_k = max_k

    @cached_property
    def words(self) -> np.ndarray:
        return codewords(self.code.g, self.max_k)

    @cached_property
    def messages(self) -> np.ndarray:
        return gray_messages(self.code.k)

    def _check(self, llrs) -> np.ndarray:
        llrs = np.asarray(llrs, dtype=np.float64)
        if llrs.ndim != 2 or llrs.shape[1] != self.code.n:
            raise ShapeError(f"expected (batch, {self.code.n}) LLRs, got {llrs.shape}")
        if not np.all(np.isfinite(llrs)):
            raise InputError("channel LLRs must be finite")
        return llrs

    def _chunks(self, batch: int):
        step = max(1, SCORE_CHUNK // len(self.words))
        for start in range(0, batch, step):
            yield slice(start, min(batch, start + step))


class MaximumLikelihoodDecoder(_CodebookDecoder):
    """argmax over all codewords of the correlation sum (1 - 2c) llr."""

    label = 'ml'

    @cached_property
    def bipolar(self) -> np.ndarray:
        return 1.0 - 2.0 * self.words.astype(np.float64)

    def decode_indices(self, llrs) -> np.ndarray:
        llrs = self._check(llrs)
        best = np.empty(llrs.shape[0], dtype=np.intp)
        for chunk in self._chunks(llrs.shape[0]):
            best[chunk] = np.argmax(llrs[chunk] @ self.bipolar.T, axis=1)
        return best

    def decode_batch(self, llrs, with_diagnostics: bool = False):
        return self.messages[self.decode_indices(llrs)], None


def ml_decode(code: CodeSpec, llr, max_k: int = 20) -> np.ndarray:
    decoder = MaximumLikelihoodDecoder(code, max_k)
    return decoder.words[decoder.decode_indices(np.asarray(llr, dtype=np.float64)[None])[0]]


class BoundedDistanceDecoder(_CodebookDecoder):
    """Nearest codeword to the hard decisions if within distance ``t``, else an erasure.

    Erasures are returned as rows of -1.
    """

    def __init__(self, code: CodeSpec, t: int, max_k: int):
        if t < 0:
            raise ValidationError(f"correction radius must be non-negative, got {t}")
        super().__init__(code, max_k)
        self.t = t
        self.label = f"hd{t}"

    def decode_batch(self, llrs, with_diagnostics: bool = False):
        hard = (self._check(llrs) < 0).astype(np.int32)
        words = self.words.astype(np.int32)
        out = np.full((hard.shape[0], self.code.k), -1, dtype=np.int8)
        for chunk in self._chunks(hard.shape[0]):
            distance = hard[chunk] @ (1 - words).T + (1 - hard[chunk]) @ words.T
            nearest = np.argmin(distance, axis=1)
            ok = distance[np.arange(len(nearest)), nearest] <= self.t
            rows = np.flatnonzero(ok) + chunk.start
            out[rows] = self.messages[nearest[ok]]
        return out, None


def hd_theoretical_bler(n: int, k: int, t: int, eb_n0_db: float) -> float:
    """1 - P(at most t of n hard decisions are wrong) for BPSK over AWGN."""
    if t < 0:
        raise ValidationError(f"correction radius must be non-negative, got {t}")
    p = 0.5 * erfc(np.sqrt((k / n) * 10 ** (eb_n0_db / 10)))
    return float(binom.sf(t, n, p))
