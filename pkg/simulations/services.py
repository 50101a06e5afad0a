"""
Services for building decoders from descriptors and estimating block error rates.
"""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from django.conf import settings
from scipy.stats import norm

from algebra.permgroup import Permutation
from codes.families import CodeSpec
from codes.services import group_of
from orbitdecoding.exceptions import ConfigError, ValidationError
from polar.orbit import SELECTIONS, PodDecoder, build_pod
from .baselines import BoundedDistanceDecoder, MaximumLikelihoodDecoder
from .channel import ChannelPoint, draw_batch, modulate_with_noise

logger = logging.getLogger(__name__)

CSV_COLUMNS = ['code', 'decoder', 'ebno_db', 'trials', 'block_errors', 'bler', 'seconds']


@dataclass(frozen=True)
class DecoderDescriptor:
    """Parsed form of ``sc | scl:L | pod:M:sc | pod:M:scl:L | ml | hd:t``.

    POD descriptors take an optional trailing ``:enumerate``, ``:sample`` or ``:distinct``.
    """

    text: str
    kind: str
    list_size: int = 1
    branches: int = 1
    radius: int = 0
    selection: Optional[str] = None

    @classmethod
    def parse(cls, text: str) -> 'DecoderDescriptor':
        text = text.strip()
        parts = text.split(':')
        try:
            if parts == ['sc']:
                return cls(text=text, kind='sc')
            if parts[0] == 'scl' and len(parts) == 2:
                return cls(text=text, kind='scl', list_size=_positive(parts[1]))
            if parts == ['ml']:
                return cls(text=text, kind='ml')
            if parts[0] == 'hd' and len(parts) == 2:
                return cls(text=text, kind='hd', radius=_non_negative(parts[1]))
            if parts[0] == 'pod' and len(parts) >= 3:
                branches = _positive(parts[1])
                rest = parts[2:]
                selection = None
                if rest[-1] in SELECTIONS:
                    selection = rest.pop()
                if rest == ['sc']:
                    return cls(text=text, kind='pod', branches=branches, selection=selection)
                if len(rest) == 2 and rest[0] == 'scl':
                    return cls(text=text, kind='pod', branches=branches,
                               list_size=_positive(rest[1]), selection=selection)
        except ValueError as exc:
            raise ConfigError(f"bad decoder descriptor {text!r}: {exc}") from exc
        raise ConfigError(f"bad decoder descriptor {text!r}")


def _positive(value: str) -> int:
    number = int(value)
    if number < 1:
        raise ValueError(f"{number} is not positive")
    return number


def _non_negative(value: str) -> int:
    number = int(value)
    if number < 0:
        raise ValueError(f"{number} is negative")
    return number


def make_decoder(code: CodeSpec, descriptor, base: Optional[Permutation] = None,
                 selection: str = 'enumerate', seed: Optional[int] = None, workers: Optional[int] = None):
    """Decoder object with ``label`` and ``decode_batch(llrs, with_diagnostics)``."""
    if isinstance(descriptor, str):
        descriptor = DecoderDescriptor.parse(descriptor)
    path_metric = settings.POD_PATH_METRIC
    min_sum = settings.POD_MIN_SUM
    workers = settings.POD_BRANCH_WORKERS if workers is None else workers

    if descriptor.kind == 'ml':
        return MaximumLikelihoodDecoder(code, settings.ML_MAX_K)
    if descriptor.kind == 'hd':
        return BoundedDistanceDecoder(code, descriptor.radius, settings.ML_MAX_K)
    if descriptor.kind in ('sc', 'scl'):
        cfg = build_pod(code, base, None, 1, list_size=descriptor.list_size, combiner='best-metric',
                        path_metric=path_metric, min_sum=min_sum)
        return PodDecoder(cfg)
    group = group_of(code)
    if group is None and descriptor.branches > 1:
        raise ConfigError(f"{descriptor.text} needs automorphism generators for {code.name}")
    cfg = build_pod(
        code, base, group, descriptor.branches,
        selection=descriptor.selection or selection, seed=seed,
        list_size=descriptor.list_size, combiner=settings.POD_COMBINER,
        path_metric=path_metric, min_sum=min_sum,
    )
    return PodDecoder(cfg, workers=workers)


@dataclass
class BlerRecord:
    code: str
    decoder: str
    eb_n0_db: float
    trials: int
    block_errors: int
    seconds: float = 0.0
    diagnostics: List[dict] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.trials <= 0:
            raise ValidationError("a BLER record needs at least one trial")

    @property
    def bler(self) -> float:
        return self.block_errors / self.trials

    def interval(self, confidence: float = 0.95) -> Tuple[float, float]:
        return wilson_interval(self.block_errors, self.trials, confidence)


def wilson_interval(errors: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    """Wilson score interval of a binomial proportion."""
    if trials <= 0:
        raise ValidationError("confidence interval needs at least one trial")
    z = norm.ppf(0.5 + confidence / 2)
    p = errors / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * np.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def encode_messages(code: CodeSpec, messages: np.ndarray) -> np.ndarray:
    return (messages.astype(np.int64) @ code.g.to_dense().astype(np.int64) % 2).astype(np.uint8)


def batch_errors(code: CodeSpec, decoder, point: ChannelPoint, seed: int, point_index: int,
                 start: int, count: int, with_diagnostics: bool = False):
    """Error flags of trials ``start .. start + count`` and optional decoder diagnostics."""
    messages, noise = draw_batch(seed, point_index, start, count, code.k, code.n)
    llrs = modulate_with_noise(encode_messages(code, messages), noise, point)
    decoded, diagnostics = decoder.decode_batch(llrs, with_diagnostics)
    return np.any(decoded != messages, axis=1), diagnostics


def trial_errors(code: CodeSpec, decoder, eb_n0_db: float, seed: int, trials: int,
                 point_index: int = 0, batch_trials: Optional[int] = None) -> np.ndarray:
    """Per-trial error flags on a fixed noise set, for paired decoder comparisons."""
    point = ChannelPoint(eb_n0_db, code.rate)
    batch_trials = batch_trials or settings.SIMULATION_BATCH_TRIALS
    flags = [
        batch_errors(code, decoder, point, seed, point_index, start, min(batch_trials, trials - start))[0]
        for start in range(0, trials, batch_trials)
    ]
    return np.concatenate(flags) if flags else np.zeros(0, dtype=bool)


_worker_state = {}


def _init_worker(code, decoder):
    _worker_state['code'] = code
    _worker_state['decoder'] = decoder


def _worker_batch(point, seed, point_index, start, count, with_diagnostics):
    return batch_errors(_worker_state['code'], _worker_state['decoder'], point, seed,
                        point_index, start, count, with_diagnostics)


def _batches(max_trials: int, batch_trials: int):
    for start in range(0, max_trials, batch_trials):
        yield start, min(batch_trials, max_trials - start)


def run_bler(code: CodeSpec, decoder, points: Sequence[float], min_errors: Optional[int] = None,
             max_trials: Optional[int] = None, seed: Optional[int] = None,
             workers: Optional[int] = None, batch_trials: Optional[int] = None,
             with_diagnostics: bool = False, label: Optional[str] = None,
             clock: Callable[[], float] = time.perf_counter) -> List[BlerRecord]:
    """Simulate every Eb/N0 point until ``min_errors`` block errors or ``max_trials`` trials.

    Batches are reduced in trial order and the stopping rule is checked after
    each one, so the records do not depend on ``workers``.
    """
    min_errors = settings.SIMULATION_MIN_ERRORS if min_errors is None else min_errors
    max_trials = settings.SIMULATION_MAX_TRIALS if max_trials is None else max_trials
    seed = settings.SIMULATION_SEED if seed is None else seed
    workers = settings.SIMULATION_WORKERS if workers is None else workers
    batch_trials = batch_trials or settings.SIMULATION_BATCH_TRIALS
    label = label or getattr(decoder, 'label', type(decoder).__name__)
    if min_errors < 1 or max_trials < 1 or batch_trials < 1:
        raise ConfigError("min_errors, max_trials and batch size must be positive")

    pool = None
    if workers > 1:
        pool = ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(code, decoder))

    records = []
    try:
        for point_index, eb_n0_db in enumerate(points):
            point = ChannelPoint(float(eb_n0_db), code.rate)
            started = clock()
            trials = errors = 0
            diagnostics = []
            pending = list(_batches(max_trials, batch_trials))
            while pending and errors < min_errors:
                wave, pending = pending[:max(1, workers)], pending[max(1, workers):]
                if pool is None:
                    results = [batch_errors(code, decoder, point, seed, point_index, s, c, with_diagnostics)
                               for s, c in wave]
                else:
                    futures = [pool.submit(_worker_batch, point, seed, point_index, s, c, with_diagnostics)
                               for s, c in wave]
                    results = [f.result() for f in futures]
                for (start, count), (flags, diag) in zip(wave, results):
                    if errors >= min_errors:
                        break
                    trials += count
                    errors += int(flags.sum())
                    if diag is not None:
                        diagnostics.extend(
                            dict(d.as_dict(), trial=start + i, error=bool(flags[i]))
                            for i, d in enumerate(diag)
                        )
                    logger.debug(f"{label} @ {eb_n0_db} dB: {errors} errors in {trials} trials")
            if errors < min_errors:
                logger.warning(
                    f"{label} @ {eb_n0_db} dB: max_trials={max_trials} reached with {errors} errors"
                )
            record = BlerRecord(code=code.name, decoder=label, eb_n0_db=float(eb_n0_db), trials=trials,
                                block_errors=errors, seconds=clock() - started, diagnostics=diagnostics)
            logger.info(f"{code.name} {label} @ {eb_n0_db} dB: BLER {record.bler:.3e} ({errors}/{trials})")
            records.append(record)
    finally:
        if pool is not None:
            pool.shutdown()
    return records


def records_frame(records: Sequence[BlerRecord], timing: bool = False) -> pd.DataFrame:
    rows = [
        {
            'code': r.code,
            'decoder': r.decoder,
            'ebno_db': f"{r.eb_n0_db:.2f}",
            'trials': r.trials,
            'block_errors': r.block_errors,
            'bler': f"{r.bler:.6e}",
            'seconds': f"{r.seconds if timing else 0.0:.3f}",
        }
        for r in records
    ]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def write_csv(records: Sequence[BlerRecord], path, timing: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    records_frame(records, timing).to_csv(path, index=False, lineterminator='\n')
    return path
