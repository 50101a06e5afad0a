"""
BPSK over AWGN and the per-trial random streams of the Monte-Carlo runs.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from orbitdecoding.exceptions import ValidationError


@dataclass(frozen=True)
class ChannelPoint:
    eb_n0_db: float
    rate: float

    def __post_init__(self):
        if not 0 < self.rate <= 1:
            raise ValidationError(f"code rate must be in (0, 1], got {self.rate}")
        if not np.isfinite(self.eb_n0_db):
            raise ValidationError(f"Eb/N0 must be finite, got {self.eb_n0_db}")

    @property
    def sigma2(self) -> float:
        return 1.0 / (2.0 * self.rate * 10 ** (self.eb_n0_db / 10))

    @property
    def llr_scale(self) -> float:
        return 2.0 / self.sigma2


def transmit(c, point: ChannelPoint, rng: np.random.Generator) -> np.ndarray:
    """BPSK-modulate ``c`` (0 -> +1), add noise of variance sigma2, return LLRs."""
    c = np.asarray(c, dtype=np.uint8)
    noise = rng.standard_normal(c.shape)
    return modulate_with_noise(c, noise, point)


def modulate_with_noise(c: np.ndarray, noise: np.ndarray, point: ChannelPoint) -> np.ndarray:
    y = (1.0 - 2.0 * c) + np.sqrt(point.sigma2) * noise
    return point.llr_scale * y


def trial_stream(seed: int, point_index: int, trial_index: int) -> np.random.Generator:
    """Counter-based stream of one trial, independent of how trials are scheduled."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, point_index, trial_index])))


def draw_trial(seed: int, point_index: int, trial_index: int, k: int, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Message bits then n standard normals from the trial's own stream."""
    rng = trial_stream(seed, point_index, trial_index)
    message = rng.integers(0, 2, size=k, dtype=np.uint8)
    noise = rng.standard_normal(n)
    return message, noise


def draw_batch(seed: int, point_index: int, start: int, count: int, k: int, n: int):
    messages = np.empty((count, k), dtype=np.uint8)
    noise = np.empty((count, n), dtype=np.float64)
    for i in range(count):
        messages[i], noise[i] = draw_trial(seed, point_index, start + i, k, n)
    return messages, noise
