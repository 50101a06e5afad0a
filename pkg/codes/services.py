"""
Services for resolving code selectors and compiling automorphism groups.
"""

import hashlib
import logging
from pathlib import Path
from typing import Callable, Dict, Optional

from django.conf import settings
from django.core.cache import cache

from algebra.permgroup import BSGS, Permutation, schreier_sims
from algebra.textio import read_generator_set, read_matrix, read_permutation
from orbitdecoding.exceptions import AutomorphismViolationError, ConfigError, ValidationError
from polar.kernel import PolarSpec, next_power_of_two
from polar.transform import search_base
from .families import CodeSpec, bch_code, golay24, parity_from_generator, repetition_block_code, verify_code

logger = logging.getLogger(__name__)

BUILTIN_CODES: Dict[str, Callable[[], CodeSpec]] = {
    'rep8-3': repetition_block_code,
    'ebch16-7': lambda: bch_code(4, 5, 'ebch16-7'),
    'ebch64-16': lambda: bch_code(6, 23, 'ebch64-16'),
    'ebch64-36': lambda: bch_code(6, 11, 'ebch64-36'),
    'egolay24-12': golay24,
}


def builtin_code(name: str) -> CodeSpec:
    if name not in BUILTIN_CODES:
        raise ConfigError(f"unknown code {name!r}; built-ins are {', '.join(BUILTIN_CODES)}")
    cache_key = f"code:{name}"
    cached = cache.get(cache_key)
    if cached is not None:
        return cached
    code = BUILTIN_CODES[name]()
    cache.set(cache_key, code)
    return code


def _read(reader, path):
    if not Path(path).is_file():
        raise ConfigError(f"file not found: {path}")
    try:
        return reader(path)
    except ValidationError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def load_code(matrix_path, aut_path=None, verify_automorphisms: bool = True) -> CodeSpec:
    """Read a generator matrix file and an optional automorphism generator set."""
    matrix_path = Path(matrix_path)
    g = _read(read_matrix, matrix_path)
    generators = tuple(_read(read_generator_set, aut_path)) if aut_path else ()
    code = CodeSpec(
        name=matrix_path.stem, n=g.cols, k=g.rows, d=None, g=g,
        h=parity_from_generator(g), aut_generators=generators,
    )
    if verify_automorphisms:
        return verify_code(code, error=AutomorphismViolationError)
    return code


def resolve_code(selector: str, aut_path=None, verify_automorphisms: bool = True) -> CodeSpec:
    """A built-in name, or the path of a generator matrix file."""
    if selector in BUILTIN_CODES:
        code = builtin_code(selector)
        if aut_path is None:
            return code
        extra = CodeSpec(
            name=code.name, n=code.n, k=code.k, d=code.d, g=code.g, h=code.h,
            aut_generators=tuple(_read(read_generator_set, aut_path)),
        )
        if verify_automorphisms:
            return verify_code(extra, error=AutomorphismViolationError)
        return extra
    if Path(selector).is_file():
        return load_code(selector, aut_path, verify_automorphisms)
    raise ConfigError(f"{selector!r} is neither a built-in code nor a matrix file")


def _group_cache_key(code: CodeSpec) -> str:
    digest = hashlib.blake2b(digest_size=8)
    digest.update(code.g.data.tobytes())
    for h in code.aut_generators:
        digest.update(h.images.tobytes())
    return f"group:{code.name}:{digest.hexdigest()}"


def group_of(code: CodeSpec) -> Optional[BSGS]:
    """BSGS of the group generated by the code's listed automorphisms."""
    if not code.aut_generators:
        return None
    cache_key = _group_cache_key(code)
    cached = cache.get(cache_key)
    if cached is not None:
        return cached
    group = schreier_sims(code.n, code.aut_generators)
    cache.set(cache_key, group)
    logger.info(f"Automorphism group of {code.name}: order {group.order()}")
    return group


def load_permutation(path) -> Permutation:
    return _read(read_permutation, path)


def searched_base(code: CodeSpec, design_snr_db: Optional[float] = None,
                  iterations: Optional[int] = None, seed: Optional[int] = None) -> Permutation:
    """Base permutation with a low SC error bound, from ``search_base`` under the POD_* settings."""
    design_snr_db = settings.POD_DESIGN_SNR_DB if design_snr_db is None else design_snr_db
    iterations = settings.POD_SEARCH_ITERATIONS if iterations is None else iterations
    seed = settings.POD_SEARCH_SEED if seed is None else seed
    digest = hashlib.blake2b(code.g.data.tobytes(), digest_size=8).hexdigest()
    cache_key = f"base:{code.name}:{digest}:{design_snr_db}:{iterations}:{seed}"
    cached = cache.get(cache_key)
    if cached is not None:
        return cached
    n = next_power_of_two(code.n)
    base, _ = search_base(code.g, PolarSpec.of_length(n), design_snr_db, iterations, seed)
    cache.set(cache_key, base)
    return base
