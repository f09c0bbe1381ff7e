"""Assign a protection ring to data from its Confidentiality/Integrity/
Availability ratings.

Rules, in order:
  1. c > 6 and i > 6                -> Ring 1 (high)
  2. ci = (c + i) / 2, exact
  3. 3 < ci < 5 and a < 5           -> Ring 2 (mid)
  4. 3 < ci < 5 and a >= 5          -> a > 5 gives Ring 3 (low); the a = 5
     boundary ties toward the more protective Ring 2
  5. ci <= 3                        -> Ring 3 (low)
  6. ci >= 5 (rule 1 not satisfied) -> Ring 2 (mid)

ci is kept as an exact Fraction so the ci = 3 and ci = 5 boundaries never
suffer float rounding.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List


class OutOfRange(ValueError):
    """A CIA field is not an integer in [1, 10]."""

    def __init__(self, field: str, value: object):
        self.field = field
        self.value = value
        super().__init__(f"{field} must be an integer in [1, 10], got {value!r}")


class ProtectionRing(enum.Enum):
    RING1_HIGH = 1
    RING2_MID = 2
    RING3_LOW = 3

    @property
    def level(self) -> int:
        return self.value


@dataclass(frozen=True)
class CiaRating:
    c: int
    i: int
    a: int


@dataclass(frozen=True)
class CriticalityIndex:
    ci: Fraction


def validate_rating(c: int, i: int, a: int) -> CiaRating:
    """Validate the three client-supplied 1..10 ratings.

    Raises OutOfRange naming the first offending field.
    """
    for name, value in (("c", c), ("i", i), ("a", a)):
        if isinstance(value, bool) or not isinstance(value, int):
            raise OutOfRange(name, value)
        if not 1 <= value <= 10:
            raise OutOfRange(name, value)
    return CiaRating(c, i, a)


def compute_ci(rating: CiaRating) -> CriticalityIndex:
    """Exact mean of confidentiality and integrity (a half-integer)."""
    return CriticalityIndex(Fraction(rating.c + rating.i, 2))


def classify(rating: CiaRating) -> ProtectionRing:
    """Map a rating to its protection ring. Total over {1..10}^3."""
    if rating.c > 6 and rating.i > 6:
        return ProtectionRing.RING1_HIGH
    ci = compute_ci(rating).ci
    if 3 < ci < 5:
        if rating.a > 5:
            return ProtectionRing.RING3_LOW
        return ProtectionRing.RING2_MID
    if ci <= 3:
        return ProtectionRing.RING3_LOW
    # ci >= 5 without both c > 6 and i > 6
    return ProtectionRing.RING2_MID


def classify_batch(ratings: Iterable[CiaRating]) -> List[ProtectionRing]:
    """Element-wise classify, order preserved."""
    return [classify(r) for r in ratings]
