"""
Experiment configuration files.

A flat ``key=value`` text file; ``#`` starts a comment line and ``decoder=``
may be repeated, one line per decoder to compare:

    code=ebch16-7
    decoder=scl:8
    decoder=pod:16:sc
    snr=3,4,5
    min_errors=100
    out=results/ebch16-7.csv

Relative input paths are resolved against the directory of the file.
``perm=search`` replaces a permutation file with a searched base permutation.
"""

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from decouple import Choices, Csv
from django.conf import settings

from codes.services import BUILTIN_CODES
from orbitdecoding.exceptions import ConfigError
from polar.orbit import SELECTIONS
from .services import DecoderDescriptor

KNOWN_KEYS = {
    'code', 'automorphisms', 'perm', 'decoder', 'snr', 'snr_start', 'snr_stop', 'snr_step',
    'min_errors', 'max_trials', 'seed', 'out', 'timing', 'selection', 'diagnostics',
}


@dataclass(frozen=True)
class ExperimentConfig:
    code: str
    decoders: Tuple[DecoderDescriptor, ...]
    snr: Tuple[float, ...]
    min_errors: int
    max_trials: int
    seed: int
    out: Path
    automorphisms: Optional[Path] = None
    perm: Optional[Path] = None
    search_base: bool = False
    timing: bool = False
    selection: str = 'enumerate'
    diagnostics: Optional[Path] = None

    @classmethod
    def from_file(cls, path) -> 'ExperimentConfig':
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        return cls.from_text(path.read_text(encoding='utf-8'), base_dir=path.parent)

    @classmethod
    def from_text(cls, text: str, base_dir: Path = Path('.')) -> 'ExperimentConfig':
        values, decoders = _parse_lines(text)
        try:
            return cls._build(values, decoders, Path(base_dir))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    @classmethod
    def _build(cls, values: Dict[str, str], decoders: List[str], base_dir: Path) -> 'ExperimentConfig':
        if 'code' not in values:
            raise ConfigError("missing required key 'code'")
        if not decoders:
            raise ConfigError("at least one decoder= line is required")

        code = values['code']
        if code not in BUILTIN_CODES:
            code = str(_existing(base_dir, code))
        cfg = cls(
            code=code,
            decoders=tuple(DecoderDescriptor.parse(d) for d in decoders),
            snr=_sweep(values),
            min_errors=int(values.get('min_errors', settings.SIMULATION_MIN_ERRORS)),
            max_trials=int(values.get('max_trials', settings.SIMULATION_MAX_TRIALS)),
            seed=int(values.get('seed', settings.SIMULATION_SEED)),
            out=Path(values.get('out', 'bler.csv')),
            automorphisms=_existing(base_dir, values['automorphisms']) if 'automorphisms' in values else None,
            perm=_existing(base_dir, values['perm']) if values.get('perm', 'search') != 'search' else None,
            search_base=values.get('perm') == 'search',
            timing=Choices(['on', 'off'])(values.get('timing', 'off')) == 'on',
            selection=Choices(list(SELECTIONS))(values.get('selection', 'enumerate')),
            diagnostics=Path(values['diagnostics']) if 'diagnostics' in values else None,
        )
        if cfg.min_errors < 1:
            raise ConfigError(f"min_errors must be at least 1, got {cfg.min_errors}")
        if cfg.max_trials < 1:
            raise ConfigError(f"max_trials must be at least 1, got {cfg.max_trials}")
        return cfg

    def with_overrides(self, seed: Optional[int] = None, out=None) -> 'ExperimentConfig':
        changes = {}
        if seed is not None:
            changes['seed'] = seed
        if out is not None:
            changes['out'] = Path(out)
        return replace(self, **changes)


def _parse_lines(text: str):
    values: Dict[str, str] = {}
    decoders: List[str] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith('#'):
            continue
        if '=' not in line:
            raise ConfigError(f"line {number}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split('=', 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {number}: unknown key {key!r}")
        if key == 'decoder':
            decoders.append(value)
        elif key in values:
            raise ConfigError(f"line {number}: {key!r} given twice")
        else:
            values[key] = value
    return values, decoders


def _existing(base_dir: Path, value: str) -> Path:
    path = Path(value)
    if not path.is_absolute():
        path = base_dir / path
    if not path.is_file():
        raise ConfigError(f"file not found: {path}")
    return path


def _sweep(values: Dict[str, str]) -> Tuple[float, ...]:
    ranged = [k for k in ('snr_start', 'snr_stop', 'snr_step') if k in values]
    if 'snr' in values:
        if ranged:
            raise ConfigError("give either snr= or snr_start/snr_stop/snr_step, not both")
        points = tuple(Csv(cast=float)(values['snr']))
    elif len(ranged) == 3:
        start, stop, step = (float(values[k]) for k in ('snr_start', 'snr_stop', 'snr_step'))
        if step <= 0 or stop < start:
            raise ConfigError(f"empty sweep {start}..{stop} step {step}")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        points = tuple(round(start + i * step, 10) for i in range(count))
    else:
        raise ConfigError("no SNR sweep: set snr= or snr_start, snr_stop and snr_step")
    if not points:
        raise ConfigError("SNR sweep is empty")
    if not all(np.isfinite(points)):
        raise ConfigError("SNR points must be finite")
    return points
