"""History projection operators on the tensor-product space, and the bridge
to the product presheaf through ``theta(V1, V2) = V1 (x) V2``."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np

from . import linalg as la
from .contexts import Context, ContextPoset, SpectrumPoint, context_from_commuting, leq
from .daseinization import dasein_at, dasein_points
from .errors import DimensionError, DisjointnessError
from .presheaf import FinitePresheaf, Subobject
from .temporal import intermediate


def hpo_projector(factors) -> np.ndarray:
    """Kronecker product of one projector per time slot."""
    factors = [la.require_projector(p, f"factor {k}") for k, p in enumerate(factors)]
    if not factors:
        raise ValueError("a history needs at least one factor")
    return la.kron_all(factors)


@dataclass(frozen=True, eq=False)
class HpoHistory:
    """Homogeneous history (``terms`` has one entry) or a disjoint join of them.

    Each term is a tuple of single-time projectors.
    """

    terms: tuple = field(default=())

    @classmethod
    def homogeneous(cls, factors) -> "HpoHistory":
        return cls((tuple(la.require_projector(p) for p in factors),))

    @classmethod
    def join(cls, *histories: "HpoHistory") -> "HpoHistory":
        terms = tuple(t for hh in histories for t in hh.terms)
        out = cls(terms)
        out.check_disjoint()
        return out

    @property
    def is_homogeneous(self) -> bool:
        return len(self.terms) == 1

    @property
    def factors(self) -> tuple:
        if not self.is_homogeneous:
            raise ValueError("inhomogeneous history has no factor list")
        return self.terms[0]

    def term_projectors(self) -> list:
        return [hpo_projector(t) for t in self.terms]

    def check_disjoint(self) -> None:
        ps = self.term_projectors()
        for a, b in combinations(range(len(ps)), 2):
            if not la.is_zero(la.matmul(ps[a], ps[b])):
                raise DisjointnessError(f"history terms {a} and {b} are not disjoint")

    @property
    def projector(self) -> np.ndarray:
        ps = self.term_projectors()
        out = ps[0]
        for p in ps[1:]:
            out = out + p
        return out


def hpo_negation(hist: HpoHistory) -> HpoHistory:
    """``1 - a1 (x) a2`` as the disjoint join of its three complementary terms."""
    if not hist.is_homogeneous or len(hist.factors) != 2:
        raise ValueError("negation is defined here for homogeneous two-time histories")
    a, b = hist.factors
    na = la.identity(a.shape[0], la.is_exact(a)) - a
    nb = la.identity(b.shape[0], la.is_exact(b)) - b
    return HpoHistory(((na, b), (a, nb), (na, nb)))


def theta(v1: Context, v2: Context) -> Context:
    """Product context ``V1 (x) V2``; minimal ``(a, b)`` is ``kron(Q_a, R_b)``."""
    return _theta(v1, v2, v1.name, v2.name, v1.exact, v2.exact)


@lru_cache(maxsize=4096)
def _theta(v1: Context, v2: Context, n1, n2, e1, e2) -> Context:
    # equal contexts may differ in name and arithmetic, so both join the cache key
    mins = [la.kron(q, r) for q in v1.minimals for r in v2.minimals]
    return Context(mins, name=f"{n1 or '?'}(x){n2 or '?'}", validate=False)


def mu(l1: SpectrumPoint, l2: SpectrumPoint) -> SpectrumPoint:
    """Point of ``theta(V1, V2)`` that evaluates ``A (x) B`` to ``l1(A) l2(B)``."""
    t = theta(l1.context, l2.context)
    q = la.kron(l1.context.minimals[l1.index], l2.context.minimals[l2.index])
    return SpectrumPoint(t, t.index_of(q))


def _mu_table(v1: Context, v2: Context) -> tuple:
    return _mu_table_cached(v1, v2, v1.exact, v2.exact)


@lru_cache(maxsize=4096)
def _mu_table_cached(v1: Context, v2: Context, e1, e2) -> tuple:
    t = theta(v1, v2)
    return t, tuple(
        t.index_of(la.kron(q, r)) for q in v1.minimals for r in v2.minimals
    )


def theta_pullback(p, prod: FinitePresheaf | tuple) -> Subobject:
    """``theta*`` of the daseinization of ``p``, as a subobject of the product presheaf.

    ``prod`` is the product spectral presheaf or a pair of context posets.
    """
    if isinstance(prod, tuple):
        prod = intermediate(*prod)
    left: ContextPoset = prod.left.poset
    right: ContextPoset = prod.right.poset
    p = la.require_projector(p, "tensor projector")
    if p.shape[0] != left.dim * right.dim:
        raise DimensionError(f"projector of dim {p.shape[0]} on a {left.dim}x{right.dim} product")
    sets = []
    for i, j in prod.poset.pairs:
        t, table = _mu_table(left.contexts[i], right.contexts[j])
        hit = dasein_points(p, t)
        sets.append(frozenset(x for x, m in enumerate(table) if m in hit))
    return Subobject(prod, tuple(sets))


def theta_is_monotone(left: ContextPoset, right: ContextPoset) -> bool:
    prod = intermediate(left, right).poset
    images = [theta(left.contexts[i], right.contexts[j]) for i, j in prod.pairs]
    for a in range(prod.n):
        for b in prod.down(a):
            if not leq(images[b], images[a]):
                return False
    return True


# --------------------------------------------------------------------------
# entangled projector


def singlet_projectors(exact: bool = True) -> dict:
    """``P_ud``, ``P_du`` and the projector onto ``(|ud> - |du>)/sqrt2``.

    The entangled projector has entries ``+-1/2`` so exact arithmetic is
    available for all three.
    """
    half = la.rationalize(0.5) if exact else 0.5
    p_ud = la.diag(0, 1, 0, 0, exact=exact)
    p_du = la.diag(0, 0, 1, 0, exact=exact)
    p_ent = la.zeros(4, exact)
    p_ent[1, 1] = half
    p_ent[2, 2] = half
    p_ent[1, 2] = -half
    p_ent[2, 1] = -half
    return {"ud": p_ud, "du": p_du, "ent": p_ent}


def entangled_demo(exact: bool = True) -> dict:
    """Compare the entangled projector with ``P_ud + P_du`` at product and entangled contexts."""
    ps = singlet_projectors(exact)
    p_ud, p_du, p_ent = ps["ud"], ps["du"], ps["ent"]
    both = p_ud + p_du
    diff = both - p_ent
    z = context_from_commuting([la.diag(1, 0, exact=exact)], name="z")
    zz = theta(z, z)
    w = context_from_commuting([p_ent], name="W(ent)")
    at_zz = dasein_at(p_ent, zz)
    at_w = dasein_at(p_ent, w)
    strictly_below = la.leq_projector(at_w, at_zz) and not la.is_close(at_w, at_zz)
    return {
        "exact": exact,
        "ent_differs_from_ud_plus_du": not la.is_close(p_ent, both),
        "ent_strictly_below_ud_plus_du": la.leq_projector(p_ent, both) and not la.is_close(p_ent, both),
        "difference_is_projector": la.is_projector(diff),
        "difference_rank": la.rank(diff),
        "dasein_at_product": at_zz,
        "dasein_at_entangled": at_w,
        "product_context": zz.name,
        "entangled_context": w.name,
        "dasein_at_product_is_ud_plus_du": la.is_close(at_zz, both),
        "dasein_at_entangled_is_ent": la.is_close(at_w, p_ent),
        "entangled_strictly_below_product": strictly_below,
    }
