"""Aperiodic (bifix-free) template enumeration for template-matching tests.

A template is aperiodic when no proper prefix equals the suffix of the
same length, i.e. the word cannot overlap a shifted copy of itself.
Consequently matches of an aperiodic template can never overlap, which
lets the matching test count plain window hits.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = ["aperiodic_template_values", "template_string"]


def _is_aperiodic(word: int, m: int) -> bool:
    # word holds the template MSB-first; prefix/suffix equality of length
    # m-k is exactly a self-overlap at shift k
    for k in range(1, m):
        if word >> k == word & ((1 << (m - k)) - 1):
            return False
    return True


@lru_cache(maxsize=None)
def aperiodic_template_values(m: int) -> tuple[int, ...]:
    """All aperiodic templates of length ``m`` as MSB-first integers, ascending."""
    if m < 2:
        raise ValueError("templates need m >= 2")
    return tuple(w for w in range(2**m) if _is_aperiodic(w, m))


def template_string(word: int, m: int) -> str:
    return format(word, f"0{m}b")


def template_bits(word: int, m: int) -> np.ndarray:
    return np.array([word >> (m - 1 - i) & 1 for i in range(m)], dtype=np.uint8)
