"""
Plain-text formats for matrices, permutations and generator sets.

Matrix:         first line "rows cols", then one line of 0/1 characters per row.
Permutation:    one line of n space-separated 0-based images.
Generator set:  a line "n <count>" followed by one permutation line each.
"""

from pathlib import Path
from typing import List, Union

import numpy as np

from orbitdecoding.exceptions import ValidationError
from .gf2 import BitMatrix
from .permgroup import Permutation

PathLike = Union[str, Path]


def _content_lines(text: str) -> List[str]:
    return [line.strip() for line in text.splitlines() if line.strip() and not line.startswith('#')]


def format_matrix(m: BitMatrix) -> str:
    lines = [f"{m.rows} {m.cols}"]
    lines.extend(''.join('1' if b else '0' for b in row) for row in m.to_dense())
    return '\n'.join(lines) + '\n'


def parse_matrix(text: str) -> BitMatrix:
    lines = _content_lines(text)
    if not lines:
        raise ValidationError("empty matrix text")
    try:
        rows, cols = (int(x) for x in lines[0].split())
    except ValueError as exc:
        raise ValidationError(f"bad matrix header {lines[0]!r}") from exc
    body = lines[1:]
    if len(body) != rows:
        raise ValidationError(f"header announces {rows} rows, found {len(body)}")
    dense = np.zeros((rows, cols), dtype=np.uint8)
    for r, line in enumerate(body):
        if len(line) != cols or set(line) - {'0', '1'}:
            raise ValidationError(f"row {r} is not {cols} characters of 0/1: {line!r}")
        dense[r] = [ch == '1' for ch in line]
    return BitMatrix.from_dense(dense)


def format_permutation(p: Permutation) -> str:
    return ' '.join(str(int(i)) for i in p.images) + '\n'


def parse_permutation(text: str) -> Permutation:
    lines = _content_lines(text)
    if len(lines) != 1:
        raise ValidationError(f"expected one permutation line, found {len(lines)}")
    try:
        return Permutation([int(x) for x in lines[0].split()])
    except ValueError as exc:
        raise ValidationError(f"bad permutation line {lines[0]!r}") from exc


def format_generator_set(n: int, generators: List[Permutation]) -> str:
    return f"n {n}\n" + ''.join(format_permutation(g) for g in generators)


def parse_generator_set(text: str) -> List[Permutation]:
    lines = _content_lines(text)
    if not lines:
        raise ValidationError("empty generator set")
    header = lines[0].split()
    if len(header) != 2 or header[0] != 'n':
        raise ValidationError(f"bad generator-set header {lines[0]!r}")
    try:
        n = int(header[1])
    except ValueError as exc:
        raise ValidationError(f"bad point count in generator-set header {lines[0]!r}") from exc
    generators = [parse_permutation(line) for line in lines[1:]]
    for g in generators:
        if g.n != n:
            raise ValidationError(f"generator on {g.n} points in a set declared on {n}")
    return generators


def read_matrix(path: PathLike) -> BitMatrix:
    return parse_matrix(Path(path).read_text(encoding='utf-8'))


def read_permutation(path: PathLike) -> Permutation:
    return parse_permutation(Path(path).read_text(encoding='utf-8'))


def read_generator_set(path: PathLike) -> List[Permutation]:
    return parse_generator_set(Path(path).read_text(encoding='utf-8'))
