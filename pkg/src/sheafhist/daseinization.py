"""Outer daseinization, pseudo-states and single-time truth values.

For a context with minimals ``Q_1..Q_k`` the least projector of the
context above ``P`` is the sum of the ``Q_i`` with ``Q_i P != 0``: any
projector of the context dominating ``P`` must contain every such ``Q_i``
(otherwise ``Q_i P = Q_i R P = 0``), and the sum of them already satisfies
``R P = P`` because the remaining minimals annihilate ``P``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from . import linalg as la
from .contexts import Context, ContextPoset
from .errors import DimensionError, PresheafMismatchError
from .presheaf import (
    FinitePresheaf,
    GlobalElement,
    Subobject,
    global_element_from_top,
    spectral_presheaf,
)

_SPECTRAL_CACHE: dict = {}


def spectral(poset: ContextPoset) -> FinitePresheaf:
    """The spectral presheaf of ``poset`` (one shared instance per poset)."""
    key = id(poset)
    hit = _SPECTRAL_CACHE.get(key)
    if hit is None or hit[0] is not poset:
        hit = (poset, spectral_presheaf(poset))
        _SPECTRAL_CACHE[key] = hit
    return hit[1]


def dasein_points(p, v: Context) -> frozenset:
    """Indices of the minimals of ``v`` that overlap ``p``."""
    if p.shape[0] != v.dim:
        raise DimensionError(f"projector of dim {p.shape[0]} against context of dim {v.dim}")
    return frozenset(i for i, q in enumerate(v.minimals) if not la.is_zero(la.matmul(q, p)))


def dasein_at(p, v: Context) -> np.ndarray:
    """Smallest projector of ``v`` dominating ``p``."""
    p = la.square(p)
    return v.projector(sorted(dasein_points(p, v)))


def dasein_brute_force(p, v: Context) -> np.ndarray:
    """Reference: minimum over all 2^k subset sums ``R`` of ``v`` with ``R p = p``."""
    p = la.square(p)
    k = len(v)
    dominating = []
    for bits in product((0, 1), repeat=k):
        r = v.projector([i for i in range(k) if bits[i]])
        if la.is_close(la.matmul(r, p), p):
            dominating.append((sum(bits), bits, r))
    size, bits, best = min(dominating, key=lambda t: t[0])
    # the dominating set is closed under meets, so the smallest one lies below all others
    for _, other, _ in dominating:
        if any(b and not o for b, o in zip(bits, other)):
            raise AssertionError("dominating subset sums have no least element")
    return best


@dataclass(frozen=True)
class DaseinizedProposition:
    source: np.ndarray
    subobject: Subobject

    @property
    def poset(self) -> ContextPoset:
        return self.subobject.presheaf.poset

    def __hash__(self):
        return hash(self.subobject)

    def __eq__(self, other):
        if not isinstance(other, DaseinizedProposition):
            return NotImplemented
        return self.subobject == other.subobject


def dasein(p, poset: ContextPoset) -> DaseinizedProposition:
    """Daseinized proposition: ``S_{delta(P)_V}`` at every context ``V``."""
    p = la.require_projector(p, "proposition")
    if p.shape[0] != poset.dim:
        raise DimensionError(f"projector of dim {p.shape[0]} on a dim-{poset.dim} poset")
    sheaf = spectral(poset)
    sets = tuple(dasein_points(p, c) for c in poset.contexts)
    return DaseinizedProposition(p, Subobject(sheaf, sets))


@dataclass(frozen=True)
class PseudoState:
    ket: np.ndarray
    subobject: Subobject

    @property
    def poset(self) -> ContextPoset:
        return self.subobject.presheaf.poset

    def __hash__(self):
        return hash(self.subobject)

    def __eq__(self, other):
        if not isinstance(other, PseudoState):
            return NotImplemented
        return self.subobject == other.subobject


def pseudo_state(psi, poset: ContextPoset) -> PseudoState:
    psi = la.require_unit(psi)
    d = dasein(la.projector_from_ket(psi), poset)
    return PseudoState(psi, d.subobject)


def truth_value(w: PseudoState, s: DaseinizedProposition) -> GlobalElement:
    """Sieve at ``V``: the ``V' <= V`` where the pseudo-state sits inside the proposition."""
    if w.subobject.presheaf is not s.subobject.presheaf:
        raise PresheafMismatchError("pseudo-state and proposition live on different posets")
    poset = s.poset
    ws, ss = w.subobject.sets, s.subobject.sets
    return global_element_from_top(poset, lambda v: ws[v] <= ss[v])


def expectation_criterion(psi, p, v: Context) -> bool:
    """``<psi| delta(P)_V |psi> = 1``."""
    return la.is_scalar_one(la.expectation(psi, dasein_at(p, v)))


def truth_value_by_expectation(psi, p, poset: ContextPoset) -> GlobalElement:
    """Same truth value as :func:`truth_value`, computed from expectation values."""
    return global_element_from_top(
        poset, lambda v: expectation_criterion(psi, p, poset.contexts[v])
    )
