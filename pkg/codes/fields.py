"""
Arithmetic in GF(2^m) through log/antilog tables.

Elements are integers whose bit i is the coefficient of alpha^i in the
polynomial basis; alpha is a root of the fixed primitive polynomial of m.
"""

from functools import cached_property
from typing import List

import numpy as np

from orbitdecoding.exceptions import ValidationError

PRIMITIVE_POLYNOMIALS = {
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10001001,
    8: 0b100011101,
    9: 0b1000010001,
    10: 0b10000001001,
}


class GF2mField:
    """The field GF(2^m) for 2 <= m <= 10."""

    def __init__(self, m: int):
        if m not in PRIMITIVE_POLYNOMIALS:
            raise ValidationError(f"extension degree must be in 2..10, got {m}")
        self.m = m
        self.modulus = PRIMITIVE_POLYNOMIALS[m]
        self.size = 1 << m
        self.order = self.size - 1

        antilog = np.zeros(self.order, dtype=np.int64)
        log = np.full(self.size, -1, dtype=np.int64)
        x = 1
        for i in range(self.order):
            antilog[i] = x
            log[x] = i
            x <<= 1
            if x & self.size:
                x ^= self.modulus
        if x != 1 or np.any(log[1:] < 0):
            raise ValidationError(f"modulus {self.modulus:#b} is not primitive")
        self.antilog = antilog
        self.log = log

    def __repr__(self):
        return f"GF2mField(m={self.m}, modulus={self.modulus:#b})"

    def alpha_power(self, e: int) -> int:
        return int(self.antilog[e % self.order])

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return int(self.antilog[(self.log[a] + self.log[b]) % self.order])

    def inverse(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("zero has no inverse in GF(2^m)")
        return int(self.antilog[(-self.log[a]) % self.order])

    def cyclotomic_coset(self, e: int) -> List[int]:
        """Exponents ``e, 2e, 4e, ...`` modulo ``2^m - 1``."""
        coset = []
        x = e % self.order
        while x not in coset:
            coset.append(x)
            x = (2 * x) % self.order
        return coset

    # -- extended-code coordinates: position i <-> alpha^i, position 2^m - 1 <-> 0

    def position_of(self, element: int) -> int:
        if element == 0:
            return self.order
        return int(self.log[element])

    def element_at(self, position: int) -> int:
        if position == self.order:
            return 0
        return int(self.antilog[position])

    @cached_property
    def positions(self) -> np.ndarray:
        """Element -> coordinate lookup for every field element."""
        return np.array([self.position_of(x) for x in range(self.size)], dtype=np.intp)
