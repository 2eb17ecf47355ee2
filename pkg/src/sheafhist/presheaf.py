"""Finite presheaves of finite sets over a finite poset.

Stage points are integers ``0..size-1``; a restriction is a tuple sending
each point of the upper stage to a point of the lower one.  Subobjects are
tuples of frozensets, one per stage.  Over a finite poset every subset is
clopen, so the clopen subobjects are simply the restriction-closed ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Callable

import numpy as np

from .contexts import ContextPoset
from .errors import NotBelowError, PresheafMismatchError, SearchCapExceeded
from .poset import FinitePoset

DEFAULT_SECTION_CAP = 10**6


class FinitePresheaf:
    """Contravariant functor from a finite poset to finite sets.

    Parameters
    ----------
    poset : FinitePoset
    sizes : sequence of int
        Number of points at each stage.
    restriction : callable
        ``restriction(i, j)`` returns the point map stage ``i`` -> stage ``j``
        for ``j <= i``, as a tuple of length ``sizes[i]``.
    point_labels : callable, optional
        ``point_labels(i, x)`` gives a display label for point ``x`` at stage ``i``.
    """

    def __init__(self, poset: FinitePoset, sizes, restriction: Callable, point_labels=None):
        self.poset = poset
        self.sizes = tuple(int(s) for s in sizes)
        if len(self.sizes) != poset.n:
            raise ValueError("one stage size per poset element required")
        self._restriction_fn = restriction
        self._maps: dict = {}
        self._point_labels = point_labels

    def restriction(self, i: int, j: int) -> tuple:
        key = (i, j)
        if key not in self._maps:
            if not self.poset.le(j, i):
                raise NotBelowError(f"stage {j} is not below stage {i}")
            if i == j:
                self._maps[key] = tuple(range(self.sizes[i]))
            else:
                self._maps[key] = tuple(self._restriction_fn(i, j))
        return self._maps[key]

    def point_label(self, i: int, x: int):
        if self._point_labels is None:
            return x
        return self._point_labels(i, x)

    def is_functorial(self) -> bool:
        """Identity at each stage and composition along every chain k <= j <= i."""
        for i in self.poset:
            if self.restriction(i, i) != tuple(range(self.sizes[i])):
                return False
            for j in self.poset.down(i):
                rij = self.restriction(i, j)
                for k in self.poset.down(j):
                    rjk = self.restriction(j, k)
                    rik = self.restriction(i, k)
                    if any(rjk[rij[x]] != rik[x] for x in range(self.sizes[i])):
                        return False
        return True

    def full(self) -> "Subobject":
        return Subobject(self, tuple(frozenset(range(s)) for s in self.sizes))

    def empty(self) -> "Subobject":
        return Subobject(self, tuple(frozenset() for _ in self.sizes))

    def subobject(self, selection) -> "Subobject":
        """Build and validate a subobject from per-stage point collections."""
        if isinstance(selection, dict):
            selection = [selection.get(i, ()) for i in range(self.poset.n)]
        sets = tuple(frozenset(int(x) for x in s) for s in selection)
        sub = Subobject(self, sets)
        if len(sets) != self.poset.n or any(
            not s <= frozenset(range(n)) for s, n in zip(sets, self.sizes)
        ):
            raise ValueError("selection does not fit the stage sets")
        if not sub.is_restriction_closed():
            raise ValueError("selection is not closed under restriction")
        return sub

    def downward_closure(self, selection) -> "Subobject":
        """Smallest subobject containing the given points."""
        out = [set() for _ in self.sizes]
        for i, pts in enumerate(selection):
            for j in self.poset.down(i):
                r = self.restriction(i, j)
                out[j].update(r[x] for x in pts)
        return Subobject(self, tuple(frozenset(s) for s in out))

    def element_poset(self) -> FinitePoset:
        """Category of elements: ``(j, y) <= (i, x)`` iff ``j <= i`` and ``x`` restricts to ``y``."""
        elems = [(i, x) for i in self.poset for x in range(self.sizes[i])]
        pos = {e: k for k, e in enumerate(elems)}
        m = np.zeros((len(elems), len(elems)), dtype=bool)
        for (i, x), k in pos.items():
            for j in self.poset.down(i):
                m[pos[(j, self.restriction(i, j)[x])], k] = True
        return FinitePoset(elems, m)

    def all_subobjects(self, cap: int | None = 10**6) -> list["Subobject"]:
        """Exhaustive list of subobjects (down-sets of the element poset)."""
        ep = self.element_poset()
        try:
            downs = ep.downsets(cap)
        except OverflowError:
            raise SearchCapExceeded(
                f"more than {cap} subobjects; use a smaller poset"
            ) from None
        out = []
        for d in downs:
            sets = [set() for _ in self.sizes]
            for k in d:
                i, x = ep.labels[k]
                sets[i].add(x)
            out.append(Subobject(self, tuple(frozenset(s) for s in sets)))
        return out


@dataclass(frozen=True)
class Subobject:
    """Restriction-closed choice of points at every stage of a presheaf."""

    presheaf: FinitePresheaf
    sets: tuple

    def __getitem__(self, i: int) -> frozenset:
        return self.sets[i]

    def __len__(self):
        return len(self.sets)

    def is_restriction_closed(self) -> bool:
        p = self.presheaf
        for i in p.poset:
            for j in p.poset.down(i):
                r = p.restriction(i, j)
                if any(r[x] not in self.sets[j] for x in self.sets[i]):
                    return False
        return True

    def __and__(self, other):
        return meet_sub(self, other)

    def __or__(self, other):
        return join_sub(self, other)

    def __le__(self, other):
        return includes(self, other)

    def __invert__(self):
        return not_sub(self)

    def labelled(self) -> dict:
        """``{stage label: sorted point labels}`` for reports."""
        p = self.presheaf
        return {
            p.poset.labels[i]: sorted((p.point_label(i, x) for x in s), key=repr)
            for i, s in enumerate(self.sets)
        }


def _same(a: Subobject, b: Subobject) -> None:
    if a.presheaf is not b.presheaf:
        raise PresheafMismatchError("subobjects of different presheaves")


def meet_sub(a: Subobject, b: Subobject) -> Subobject:
    _same(a, b)
    return Subobject(a.presheaf, tuple(x & y for x, y in zip(a.sets, b.sets)))


def join_sub(a: Subobject, b: Subobject) -> Subobject:
    _same(a, b)
    return Subobject(a.presheaf, tuple(x | y for x, y in zip(a.sets, b.sets)))


def implies_sub(a: Subobject, b: Subobject) -> Subobject:
    """Heyting implication: ``x`` is kept at ``V`` when every restriction of ``x``
    to a stage ``V' <= V`` that lands in ``a`` also lands in ``b``."""
    _same(a, b)
    p = a.presheaf
    out = []
    for i in p.poset:
        keep = set()
        for x in range(p.sizes[i]):
            ok = True
            for j in p.poset.down(i):
                y = p.restriction(i, j)[x]
                if y in a.sets[j] and y not in b.sets[j]:
                    ok = False
                    break
            if ok:
                keep.add(x)
        out.append(frozenset(keep))
    return Subobject(p, tuple(out))


def not_sub(a: Subobject) -> Subobject:
    """Pseudo-complement ``a => 0``."""
    return implies_sub(a, a.presheaf.empty())


def includes(a: Subobject, b: Subobject) -> bool:
    """``a <= b`` stagewise."""
    _same(a, b)
    return all(x <= y for x, y in zip(a.sets, b.sets))


# --------------------------------------------------------------------------
# sieves and the subobject classifier


def principal_sieve(poset: FinitePoset, v: int) -> frozenset:
    return poset.down(v)


def is_sieve(poset: FinitePoset, v: int, members) -> bool:
    """Down-closed subset of the down-set of ``v``."""
    members = frozenset(members)
    if not members <= poset.down(v):
        return False
    return all(poset.down(m) <= members for m in members)


def restrict_sieve(poset: FinitePoset, sieve, v_sub: int) -> frozenset:
    return frozenset(sieve) & poset.down(v_sub)


def all_sieves(poset: FinitePoset, v: int) -> list[frozenset]:
    """Every sieve on ``v`` (the set Omega(v))."""
    sub = FinitePoset([poset.labels[k] for k in sorted(poset.down(v))],
                      poset.leq[np.ix_(sorted(poset.down(v)), sorted(poset.down(v)))])
    idx = sorted(poset.down(v))
    return [frozenset(idx[k] for k in d) for d in sub.downsets()]


@dataclass(frozen=True)
class GlobalElement:
    """Global element of the sieve presheaf: one sieve per stage, compatible
    with restriction ``S |-> S ∩ ↓V'``."""

    poset: FinitePoset
    assignment: tuple

    def __getitem__(self, v: int) -> frozenset:
        return self.assignment[v]

    def is_compatible(self) -> bool:
        p = self.poset
        for v in p:
            if not is_sieve(p, v, self.assignment[v]):
                return False
            for w in p.down(v):
                if restrict_sieve(p, self.assignment[v], w) != self.assignment[w]:
                    return False
        return True

    def is_totally_true(self) -> bool:
        return all(self.assignment[v] == self.poset.down(v) for v in self.poset)

    def is_totally_false(self) -> bool:
        return all(not s for s in self.assignment)

    def labelled(self) -> dict:
        """``{stage label: sorted member labels}``."""
        labels = self.poset.labels
        return {labels[v]: sorted(str(labels[w]) for w in s) for v, s in enumerate(self.assignment)}


def totally_true(poset: FinitePoset) -> GlobalElement:
    return GlobalElement(poset, tuple(poset.down(v) for v in poset))


def totally_false(poset: FinitePoset) -> GlobalElement:
    return GlobalElement(poset, tuple(frozenset() for _ in poset))


def global_element_from_top(poset: FinitePoset, predicate) -> GlobalElement:
    """Global element whose sieve at ``V`` is ``{V' <= V : predicate(V')}``.

    The result is a genuine global element whenever ``predicate`` holds on a
    down-closed set of stages; callers check this via ``is_compatible``.
    """
    good = frozenset(v for v in poset if predicate(v))
    return GlobalElement(poset, tuple(poset.down(v) & good for v in poset))


# --------------------------------------------------------------------------
# global sections


def global_sections(p: FinitePresheaf, cap: int = DEFAULT_SECTION_CAP) -> list[tuple]:
    """All compatible point choices ``V |-> x_V``.

    Depth-first over stages in decreasing height; each choice is pushed
    down to every lower stage at once, so conflicts prune early.  ``cap``
    bounds the number of candidate points tried.
    """
    poset = p.poset
    order = sorted(poset, key=lambda v: (-poset.heights[v], v))
    assigned: list = [None] * poset.n
    out = []
    tried = 0

    def rec(pos: int):
        nonlocal tried
        while pos < len(order) and assigned[order[pos]] is not None:
            pos += 1
        if pos == len(order):
            out.append(tuple(assigned))
            return
        v = order[pos]
        for x in range(p.sizes[v]):
            tried += 1
            if tried > cap:
                raise SearchCapExceeded(
                    f"global-section search exceeded {cap} candidates; use a smaller poset"
                )
            touched = []
            ok = True
            for w in poset.down(v):
                y = p.restriction(v, w)[x]
                if assigned[w] is None:
                    assigned[w] = y
                    touched.append(w)
                elif assigned[w] != y:
                    ok = False
                    break
            if ok:
                rec(pos + 1)
            for w in touched:
                assigned[w] = None

    rec(0)
    return out


# --------------------------------------------------------------------------
# the spectral presheaf


def spectral_presheaf(poset: ContextPoset) -> FinitePresheaf:
    """Gel'fand spectra of the contexts with restriction of functionals."""
    return FinitePresheaf(
        poset,
        [len(c) for c in poset.contexts],
        poset.restriction,
        point_labels=lambda i, x: f"l{x + 1}",
    )


def product_presheaf(left: FinitePresheaf, right: FinitePresheaf) -> FinitePresheaf:
    """Stagewise Cartesian product over the product poset.

    Point ``(a, b)`` at stage ``<i, j>`` is encoded as ``a * right.sizes[j] + b``.
    """
    prod = left.poset.product(right.poset)

    def sizes():
        for i, j in prod.pairs:
            yield left.sizes[i] * right.sizes[j]

    def restriction(k, l):
        i, j = prod.pairs[k]
        i2, j2 = prod.pairs[l]
        r1 = left.restriction(i, i2)
        r2 = right.restriction(j, j2)
        n2, m2 = right.sizes[j], right.sizes[j2]
        return tuple(r1[a] * m2 + r2[b] for a, b in product(range(left.sizes[i]), range(n2)))

    def labels(k, x):
        i, j = prod.pairs[k]
        a, b = divmod(x, right.sizes[j])
        return (left.point_label(i, a), right.point_label(j, b))

    out = FinitePresheaf(prod, list(sizes()), restriction, point_labels=labels)
    out.left = left
    out.right = right
    return out
