"""Kullback-Leibler divergence to the mixture and Jensen-Shannon divergence.

Natural logarithms throughout, so the JSD ceiling is exactly ln 2. Summation
runs in ascending index order for bit-determinism.
"""
from __future__ import annotations

import math
from typing import Sequence, Union

from .model import Belief

LN2 = math.log(2.0)


class GridMismatch(ValueError):
    """Beliefs of different lengths cannot be compared."""


def _probs(bel: Union[Belief, Sequence[float]]):
    if isinstance(bel, Belief):
        return bel.probabilities
    return bel


def kl_to_mixture(bel_a, bel_b) -> float:
    """KL divergence from `bel_a` to the arithmetic mixture (a + b)/2, in nats."""
    a = _probs(bel_a)
    b = _probs(bel_b)
    if len(a) != len(b):
        raise GridMismatch(f"belief lengths differ: {len(a)} vs {len(b)}")
    total = 0.0
    for i in range(len(a)):
        total += a[i] * math.log(2.0 * a[i] / (a[i] + b[i]))
    if __debug__:
        # Explicit finite bound: log(2 * sup a) - log(inf(a + b)).
        sup_a = max(a)
        inf_ab = min(ai + bi for ai, bi in zip(a, b))
        assert total <= math.log(2.0 * sup_a) - math.log(inf_ab) + 1e-12
    return total


def jsd(bel_a, bel_b) -> float:
    """Jensen-Shannon divergence between two beliefs, in nats; in [0, ln 2]."""
    return 0.5 * (kl_to_mixture(bel_a, bel_b) + kl_to_mixture(bel_b, bel_a))
