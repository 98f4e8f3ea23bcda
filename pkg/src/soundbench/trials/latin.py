"""Balanced Latin squares for counterbalancing presentation order."""

from __future__ import annotations

import numpy as np


def williams_rows(n: int) -> list[list[int]]:
    """Rows of a balanced Latin square over symbols 0..n-1.

    Row i places symbol (delta_j + i) mod n at position j, with the delta
    sequence 0, 1, n-1, 2, n-2, ... For odd n the mirrored square is
    appended (2n rows) so first-order carryover stays balanced; every block
    of n consecutive rows is itself a Latin square, which keeps positional
    balance exact whenever whole blocks are consumed.
    """
    if n < 1:
        raise ValueError(f"need at least one symbol, got {n}")
    deltas = []
    low, high = 1, n - 1
    deltas.append(0)
    while len(deltas) < n:
        deltas.append(low)
        low += 1
        if len(deltas) < n:
            deltas.append(high)
            high -= 1
    rows = [[(d + i) % n for d in deltas] for i in range(n)]
    if n % 2 == 1 and n > 1:
        rows += [list(reversed(row)) for row in rows]
    return rows


def ordering_cycle(items: list, rng: np.random.Generator) -> "OrderingCycle":
    return OrderingCycle(items, rng)


class OrderingCycle:
    """Yields item orderings row by row from a seeded balanced Latin square.

    The symbol-to-item mapping is shuffled once up front so different seeds
    produce different concrete orders while balance properties hold.
    """

    def __init__(self, items: list, rng: np.random.Generator):
        if not items:
            raise ValueError("cannot counterbalance an empty item list")
        self._items = list(items)
        perm = rng.permutation(len(items))
        self._mapped = [self._items[i] for i in perm]
        self._rows = williams_rows(len(items))
        self._next = 0

    def take(self) -> list:
        row = self._rows[self._next % len(self._rows)]
        self._next += 1
        return [self._mapped[s] for s in row]
