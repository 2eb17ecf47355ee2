"""Two-time (and n-time) propositions over the product of context posets.

The product presheaf ``Sigma1 x Sigma2`` lives over pairs of contexts with
the componentwise order.  Tensor expressions ``\\/_i S1_i (x) S2_i`` are
evaluated into it by ``h`` (stagewise union of rectangles); ``j`` pairs
single-time truth values into a truth value on the product.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

from . import linalg as la
from .contexts import ContextPoset
from .daseinization import (
    DaseinizedProposition,
    PseudoState,
    pseudo_state,
    spectral,
    truth_value,
)
from .errors import DimensionError, PresheafMismatchError, SearchCapExceeded
from .poset import ProductPoset
from .presheaf import (
    FinitePresheaf,
    GlobalElement,
    Subobject,
    all_sieves,
    global_element_from_top,
    includes,
    is_sieve,
    join_sub,
    meet_sub,
    product_presheaf,
    restrict_sieve,
)

_PRODUCTS: dict = {}


def intermediate(left: FinitePresheaf | ContextPoset, right: FinitePresheaf | ContextPoset) -> FinitePresheaf:
    """Product spectral presheaf over ``left x right`` (cached per pair)."""
    if isinstance(left, ContextPoset):
        left = spectral(left)
    if isinstance(right, ContextPoset):
        right = spectral(right)
    key = (id(left), id(right))
    hit = _PRODUCTS.get(key)
    if hit is None or hit[0] is not left or hit[1] is not right:
        hit = (left, right, product_presheaf(left, right))
        _PRODUCTS[key] = hit
    return hit[2]


def product_poset(left: ContextPoset, right: ContextPoset) -> ProductPoset:
    return intermediate(left, right).poset


def _rectangle(prod: FinitePresheaf, a: Subobject, b: Subobject) -> Subobject:
    if a.presheaf is not prod.left or b.presheaf is not prod.right:
        raise PresheafMismatchError("factors do not belong to this product")
    sets = []
    for i, j in prod.poset.pairs:
        m = prod.right.sizes[j]
        sets.append(frozenset(x * m + y for x in a.sets[i] for y in b.sets[j]))
    return Subobject(prod, tuple(sets))


def pullback_left(s: Subobject, prod: FinitePresheaf) -> Subobject:
    """``p1*(S)``: ``S(V1) x Sigma2(V2)`` at ``<V1, V2>``."""
    return _rectangle(prod, s, prod.right.full())


def pullback_right(s: Subobject, prod: FinitePresheaf) -> Subobject:
    return _rectangle(prod, prod.left.full(), s)


@dataclass(frozen=True, eq=False)
class TensorExpression:
    """Formal join of generators ``S1 (x) S2``.

    Two expressions are equal iff their images under :func:`h` agree.
    """

    left: FinitePresheaf
    right: FinitePresheaf
    terms: tuple = field(default=())

    @classmethod
    def generator(cls, a: Subobject, b: Subobject) -> "TensorExpression":
        return cls(a.presheaf, b.presheaf, ((a, b),))

    @classmethod
    def bottom(cls, left: FinitePresheaf, right: FinitePresheaf) -> "TensorExpression":
        return cls(left, right, ())

    def _check(self, other):
        if self.left is not other.left or self.right is not other.right:
            raise PresheafMismatchError("tensor expressions over different factors")

    def __or__(self, other: "TensorExpression") -> "TensorExpression":
        self._check(other)
        return TensorExpression(self.left, self.right, self.terms + other.terms)

    def __and__(self, other: "TensorExpression") -> "TensorExpression":
        # finite meets distribute over joins; generator meets act componentwise
        self._check(other)
        terms = tuple(
            (meet_sub(a, c), meet_sub(b, d)) for (a, b), (c, d) in product(self.terms, other.terms)
        )
        return TensorExpression(self.left, self.right, terms)

    def normal_form(self) -> Subobject:
        return h(self)

    def __eq__(self, other):
        if not isinstance(other, TensorExpression):
            return NotImplemented
        return self.left is other.left and self.right is other.right and h(self) == h(other)

    def __hash__(self):
        return hash(h(self))

    def __len__(self):
        return len(self.terms)


def h(t: TensorExpression) -> Subobject:
    """Evaluate a tensor expression as a subobject of the product presheaf."""
    prod = intermediate(t.left, t.right)
    out = prod.empty()
    for a, b in t.terms:
        out = join_sub(out, _rectangle(prod, a, b))
    return out


def h_inverse_exists(sub: Subobject, cap: int = 100_000) -> TensorExpression:
    """A tensor expression whose ``h``-image is ``sub``.

    Each point that is not the restriction of a point at a higher stage
    contributes the rectangle of the two principal subobjects it generates;
    rectangles are then fused where the join relations allow.
    """
    prod = sub.presheaf
    left, right = getattr(prod, "left", None), getattr(prod, "right", None)
    if left is None or right is None:
        raise PresheafMismatchError("subobject is not over a product presheaf")
    total = sum(len(s) for s in sub.sets)
    if total > cap:
        raise SearchCapExceeded(f"{total} points exceed the rectangle-cover cap {cap}")
    poset = prod.poset
    covered = [set() for _ in sub.sets]
    for k, pts in enumerate(sub.sets):
        for k2 in poset.down(k):
            if k2 != k:
                r = prod.restriction(k, k2)
                covered[k2].update(r[x] for x in pts)
    terms = []
    for k, pts in enumerate(sub.sets):
        i, j = poset.pairs[k]
        m = right.sizes[j]
        for x in sorted(pts - covered[k]):
            a, b = divmod(x, m)
            sa = left.downward_closure([{a} if s == i else () for s in left.poset])
            sb = right.downward_closure([{b} if s == j else () for s in right.poset])
            terms.append((sa, sb))
    return TensorExpression(left, right, _merge_terms(terms))


def _merge_terms(terms: list) -> tuple:
    """Fuse rectangles sharing a factor and drop rectangles inside another.

    A rectangle with both factors nonempty lies inside another exactly when
    each factor does, so all comparisons are componentwise.
    """
    terms = [t for t in dict.fromkeys(terms) if any(t[0].sets) and any(t[1].sets)]
    while True:
        before = len(terms)
        for side in (0, 1):
            groups: dict = {}
            for t in terms:
                key, other = t[side], t[1 - side]
                groups[key] = join_sub(groups[key], other) if key in groups else other
            terms = [(k, v) if side == 0 else (v, k) for k, v in groups.items()]
        kept = []
        for x, (a, b) in enumerate(terms):
            dominated = any(
                y != x and includes(a, c) and includes(b, d) and ((a, b) != (c, d) or y < x)
                for y, (c, d) in enumerate(terms)
            )
            if not dominated:
                kept.append((a, b))
        terms = kept
        if len(terms) == before:
            return tuple(terms)


# --------------------------------------------------------------------------
# truth values on the product


@dataclass(frozen=True)
class ProductOmegaElement:
    """Pair of sieves ``<S1 on V1, S2 on V2>`` at every product stage."""

    poset: ProductPoset
    assignment: tuple

    def __getitem__(self, k: int) -> tuple:
        return self.assignment[k]

    def is_valid(self) -> bool:
        p = self.poset
        for k, (s1, s2) in enumerate(self.assignment):
            i, j = p.pairs[k]
            if not (is_sieve(p.left, i, s1) and is_sieve(p.right, j, s2)):
                return False
            for k2 in p.down(k):
                i2, j2 = p.pairs[k2]
                expect = (restrict_sieve(p.left, s1, i2), restrict_sieve(p.right, s2, j2))
                if self.assignment[k2] != expect:
                    return False
        return True

    def product_sieves(self) -> tuple:
        """Each pair read as the set of product stages ``S1 x S2``."""
        p = self.poset
        return tuple(
            frozenset(p.at(a, b) for a in s1 for b in s2) for s1, s2 in self.assignment
        )

    def components(self) -> tuple[GlobalElement, GlobalElement]:
        """Recover the two single-time global elements."""
        p = self.poset
        first = [None] * p.left.n
        second = [None] * p.right.n
        for k, (s1, s2) in enumerate(self.assignment):
            i, j = p.pairs[k]
            first[i] = s1
            second[j] = s2
        return GlobalElement(p.left, tuple(first)), GlobalElement(p.right, tuple(second))

    def labelled(self) -> dict:
        p = self.poset
        out = {}
        for k, (s1, s2) in enumerate(self.assignment):
            i, j = p.pairs[k]
            out[f"<{p.left.labels[i]},{p.right.labels[j]}>"] = [
                sorted(str(p.left.labels[a]) for a in s1),
                sorted(str(p.right.labels[b]) for b in s2),
            ]
        return out


def j(w1: GlobalElement, w2: GlobalElement) -> ProductOmegaElement:
    """``j(w1 (x) w2)(<V1, V2>) = <w1(V1), w2(V2)>``."""
    prod = ProductPoset(w1.poset, w2.poset)
    return ProductOmegaElement(
        prod, tuple((w1.assignment[i], w2.assignment[jj]) for i, jj in prod.pairs)
    )


def product_truth(w: Subobject, s: Subobject) -> GlobalElement:
    """Sieve-valued truth of ``w <= s`` computed directly on the product poset."""
    if w.presheaf is not s.presheaf:
        raise PresheafMismatchError("subobjects of different presheaves")
    poset = w.presheaf.poset
    return global_element_from_top(poset, lambda k: w.sets[k] <= s.sets[k])


@dataclass(frozen=True, eq=False)
class HistoryTruth:
    """Truth value of a two-time homogeneous history."""

    states: tuple
    single: tuple  # (GlobalElement, GlobalElement)
    pair: ProductOmegaElement
    product_sieve: GlobalElement

    @property
    def factorizes(self) -> bool:
        """Product-topos sieve equals the Cartesian product of the component sieves."""
        return self.product_sieve.assignment == self.pair.product_sieves()


def two_time_truth(
    psi1, u, s1: DaseinizedProposition, s2: DaseinizedProposition
) -> HistoryTruth:
    """Truth value of ``s1`` at t1 and then ``s2`` at t2 for initial state ``psi1``."""
    psi1 = la.require_unit(psi1)
    u = la.require_unitary(u, "evolution operator")
    if u.shape[0] != psi1.size or s1.poset.dim != psi1.size or s2.poset.dim != u.shape[0]:
        raise DimensionError("state, evolution and propositions disagree on dimension")
    psi2 = la.evolve(psi1, u)
    w1 = pseudo_state(psi1, s1.poset)
    w2 = pseudo_state(psi2, s2.poset)
    v1 = truth_value(w1, s1)
    v2 = truth_value(w2, s2)
    pair = j(v1, v2)
    prod = intermediate(s1.subobject.presheaf, s2.subobject.presheaf)
    w12 = meet_sub(pullback_left(w1.subobject, prod), pullback_right(w2.subobject, prod))
    s12 = meet_sub(pullback_left(s1.subobject, prod), pullback_right(s2.subobject, prod))
    direct = product_truth(w12, s12)
    # align the pair onto the presheaf's poset object so both share stage indices
    pair = ProductOmegaElement(prod.poset, pair.assignment)
    return HistoryTruth((psi1, psi2), (v1, v2), pair, direct)


@dataclass(frozen=True, eq=False)
class NTimeTruth:
    """Truth value of an n-time homogeneous history, one sieve per slot."""

    states: tuple
    components: tuple  # GlobalElement per slot

    def at(self, stages) -> tuple:
        """Component sieves at a tuple of stages, one per slot."""
        return tuple(c.assignment[v] for c, v in zip(self.components, stages))

    def nested(self, stages):
        """Right-nested pairs ``(S1, (S2, (..., Sn)))``."""
        sieves = self.at(stages)
        out = sieves[-1]
        for s in reversed(sieves[:-1]):
            out = (s, out)
        return out

    def is_valid(self) -> bool:
        return all(c.is_compatible() for c in self.components)


def n_time_truth(psi1, us, ss) -> NTimeTruth | GlobalElement:
    """Generalisation to n slots by right-nested binary products.

    ``us[k]`` evolves the state from slot ``k`` to slot ``k + 1``.  With a
    single slot the ordinary single-time truth value is returned.
    """
    us, ss = list(us), list(ss)
    if len(us) != len(ss) - 1:
        raise ValueError(f"need {len(ss) - 1} evolution operators, got {len(us)}")
    psi = la.require_unit(psi1)
    states = [psi]
    for u in us:
        psi = la.evolve(psi, u)
        states.append(psi)
    comps = []
    for psi, s in zip(states, ss):
        if s.poset.dim != psi.size:
            raise DimensionError("state and proposition disagree on dimension")
        comps.append(truth_value(pseudo_state(psi, s.poset), s))
    if len(ss) == 1:
        return comps[0]
    return NTimeTruth(tuple(states), tuple(comps))


# --------------------------------------------------------------------------
# classifier comparison


def classifier_comparison(left: ContextPoset, right: ContextPoset) -> list[dict]:
    """Compare sieves on the product poset with pairs of component sieves.

    For every product stage report the number of genuine sieves (down-sets
    of the product down-set), the number of sieve pairs, how many distinct
    product-shaped sieves those pairs produce, and one non-product sieve
    when it exists.
    """
    prod = ProductPoset(left, right)
    rows = []
    for k, (i, jj) in enumerate(prod.pairs):
        genuine = all_sieves(prod, k)
        s1 = all_sieves(left, i)
        s2 = all_sieves(right, jj)
        shaped = {frozenset(prod.at(a, b) for a in x for b in y) for x in s1 for y in s2}
        witness = next((s for s in genuine if s not in shaped), None)
        rows.append(
            {
                "stage": f"<{left.labels[i]},{right.labels[jj]}>",
                "sieves": len(genuine),
                "pairs": len(s1) * len(s2),
                "product_shaped": len(shaped),
                "non_product_witness": None
                if witness is None
                else sorted(f"<{left.labels[prod.pairs[m][0]]},{right.labels[prod.pairs[m][1]]}>" for m in witness),
            }
        )
    return rows
