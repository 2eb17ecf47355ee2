"""Finite posets given by an explicit order matrix."""

from __future__ import annotations

from functools import cached_property
from itertools import product

import numpy as np


class FinitePoset:
    """Immutable finite partial order on ``range(n)``.

    ``leq[i, j]`` is true iff element ``i`` is below element ``j``.
    ``labels`` are display names (or any hashable tag) for the elements.
    """

    def __init__(self, labels, leq):
        leq = np.array(leq, dtype=bool)
        n = len(labels)
        if leq.shape != (n, n):
            raise ValueError(f"order matrix must be {n}x{n}, got {leq.shape}")
        leq.setflags(write=False)
        self.labels = tuple(labels)
        self.leq = leq
        self.n = n

    def __len__(self):
        return self.n

    def __iter__(self):
        return iter(range(self.n))

    def __repr__(self):
        return f"{type(self).__name__}({list(self.labels)!r})"

    def le(self, i: int, j: int) -> bool:
        return bool(self.leq[i, j])

    def index(self, label) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no element labelled {label!r}") from None

    @cached_property
    def _down(self):
        return tuple(frozenset(np.flatnonzero(self.leq[:, j]).tolist()) for j in range(self.n))

    @cached_property
    def _up(self):
        return tuple(frozenset(np.flatnonzero(self.leq[i, :]).tolist()) for i in range(self.n))

    def down(self, j: int) -> frozenset:
        """``{i : i <= j}``."""
        return self._down[j]

    def up(self, i: int) -> frozenset:
        return self._up[i]

    @cached_property
    def heights(self) -> tuple:
        """Length of the longest strict chain ending at each element."""
        h = [0] * self.n
        for j in sorted(range(self.n), key=lambda k: len(self._down[k])):
            below = [h[i] + 1 for i in self._down[j] if i != j]
            h[j] = max(below, default=0)
        return tuple(h)

    def is_partial_order(self) -> bool:
        m = self.leq
        if not m.diagonal().all():
            return False
        if (m & m.T & ~np.eye(self.n, dtype=bool)).any():
            return False
        mm = (m.astype(int) @ m.astype(int)) > 0
        return not (mm & ~m).any()

    @cached_property
    def hasse_edges(self) -> tuple:
        """Covering pairs ``(i, j)`` with ``i < j`` and nothing strictly between."""
        lt = self.leq & ~np.eye(self.n, dtype=bool)
        between = (lt.astype(int) @ lt.astype(int)) > 0
        cover = lt & ~between
        return tuple((int(i), int(j)) for i, j in zip(*np.nonzero(cover)))

    def product(self, other: "FinitePoset") -> "FinitePoset":
        """Componentwise product; element ``(i, j)`` gets index ``i * len(other) + j``."""
        return ProductPoset(self, other)

    def downsets(self, cap: int | None = None):
        """All down-closed subsets, as frozensets (exhaustive; small posets only)."""
        return list(_downsets(self, frozenset(range(self.n)), cap))


class ProductPoset(FinitePoset):
    """Product of two finite posets with the componentwise order."""

    def __init__(self, left: FinitePoset, right: FinitePoset):
        self.left = left
        self.right = right
        pairs = list(product(range(left.n), range(right.n)))
        labels = [f"<{left.labels[i]},{right.labels[j]}>" for i, j in pairs]
        leq = np.kron(left.leq.astype(int), right.leq.astype(int)).astype(bool)
        super().__init__(labels, leq)
        self.pairs = tuple(pairs)

    def pair(self, k: int) -> tuple:
        return self.pairs[k]

    def at(self, i: int, j: int) -> int:
        return i * self.right.n + j


def _downsets(poset: FinitePoset, universe: frozenset, cap):
    # branch on a maximal element: either excluded (drop its up-set) or included
    # (then its whole down-set is forced in)
    out = []

    def rec(remaining: frozenset, chosen: frozenset):
        if cap is not None and len(out) > cap:
            raise OverflowError("down-set enumeration exceeded cap")
        if not remaining:
            out.append(chosen)
            return
        top = max(remaining, key=lambda k: (poset.heights[k], k))
        rec(remaining - poset.up(top), chosen)
        forced = poset.down(top) & remaining
        rec(remaining - forced, chosen | forced)

    rec(universe, frozenset())
    return out
