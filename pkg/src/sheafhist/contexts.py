"""Contexts (finite abelian projector algebras), their spectra, and context posets.

A context is stored as its resolution of the identity into minimal
projectors.  Its Gel'fand spectrum has one point per minimal projector:
the point ``i`` sends a projector ``P`` in the algebra to 1 iff
``Q_i P = Q_i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from . import linalg as la
from .errors import DimensionError, NonCommutingError, NotBelowError
from .poset import FinitePoset


class Context:
    """Abelian algebra spanned by pairwise-orthogonal minimal projectors.

    Equality and hashing use the canonical (rounded, ordered) minimal
    projectors, so two contexts built differently but spanning the same
    algebra compare equal.  ``name`` is presentation only.
    """

    def __init__(self, minimals, name: str | None = None, *, validate: bool = True):
        mins = [la.square(q) for q in minimals]
        if not mins:
            raise DimensionError("a context needs at least one minimal projector")
        dim = mins[0].shape[0]
        if any(q.shape[0] != dim for q in mins):
            raise DimensionError("minimal projectors of different dimensions")
        if validate:
            _check_resolution(mins, dim)
        keyed = sorted(((la.canonical_key(q), k) for k, q in enumerate(mins)), reverse=True)
        mins = [mins[k] for _, k in keyed]
        for q in mins:
            q.setflags(write=False)
        self.minimals = tuple(mins)
        self.dim = dim
        self.name = name
        self.key = tuple(key for key, _ in keyed)
        # float copies (transposed) for the cheap containment test tr(Q P) = tr(Q)
        self._float_t = np.array([la.to_float(q).T for q in self.minimals])
        self._ranks = np.array([la.to_float(q).trace().real for q in self.minimals])
        self._hash = hash(self.key)

    def __eq__(self, other):
        if not isinstance(other, Context):
            return NotImplemented
        return self.key == other.key

    def __hash__(self):
        return self._hash

    def __len__(self):
        return len(self.minimals)

    def __repr__(self):
        label = self.name or "?"
        return f"Context({label!r}, dim={self.dim}, k={len(self.minimals)})"

    @property
    def exact(self) -> bool:
        return la.is_exact(self.minimals[0])

    @property
    def is_trivial(self) -> bool:
        return len(self.minimals) == 1

    def with_name(self, name: str) -> "Context":
        out = object.__new__(Context)
        out.__dict__.update(self.__dict__)
        out.name = name
        return out

    def projector(self, indices) -> np.ndarray:
        """Sum of the minimal projectors with the given indices."""
        out = la.zeros(self.dim, self.exact)
        for i in indices:
            out = out + self.minimals[i]
        return out

    def decompose(self, p) -> frozenset | None:
        """Indices of minimals summing to ``p``, or None if ``p`` is not in the algebra.

        Candidates come from a float trace test; the sum is then checked in the
        arithmetic of the inputs, so exact inputs give an exact verdict.
        """
        pf = la.to_float(p)
        overlap = np.einsum("kij,ij->k", self._float_t, pf).real
        idx = frozenset(np.flatnonzero(np.abs(overlap - self._ranks) <= 1e-6).tolist())
        if la.is_close(self.projector(idx), p):
            return idx
        return None

    def contains(self, p) -> bool:
        return self.decompose(p) is not None

    def spectrum(self) -> list["SpectrumPoint"]:
        return [SpectrumPoint(self, i) for i in range(len(self.minimals))]

    def index_of(self, q) -> int:
        for i, m in enumerate(self.minimals):
            if la.is_close(m, q):
                return i
        raise KeyError("projector is not a minimal of this context")


@dataclass(frozen=True)
class SpectrumPoint:
    """Point ``index`` of the Gel'fand spectrum of ``context`` (0-based)."""

    context: Context
    index: int

    def evaluate(self, p) -> int:
        """Value of the multiplicative functional on a projector of the algebra."""
        q = self.context.minimals[self.index]
        return 1 if la.is_close(la.matmul(q, p), q) else 0

    def __repr__(self):
        return f"SpectrumPoint({self.context.name or '?'}, {self.index})"


def _check_resolution(mins, dim):
    exact = la.is_exact(mins[0])
    for i, q in enumerate(mins):
        la.require_projector(q, f"minimal projector {i}")
        if la.is_zero(q):
            raise ValueError(f"minimal projector {i} is zero")
    for i, j in combinations(range(len(mins)), 2):
        if not la.is_zero(la.matmul(mins[i], mins[j])):
            raise ValueError(f"minimal projectors {i} and {j} are not orthogonal")
    total = la.zeros(dim, exact)
    for q in mins:
        total = total + q
    if not la.is_close(total, la.identity(dim, exact)):
        raise ValueError("minimal projectors do not sum to the identity")


def trivial_context(dim: int, exact: bool = False) -> Context:
    return Context([la.identity(dim, exact)], name="trivial", validate=False)


def context_from_commuting(ps, dim: int | None = None, name: str | None = None, labels=None) -> Context:
    """Context generated by a commuting family of projectors.

    The minimals are the non-zero products of ``P_i`` or ``1 - P_i`` over
    all sign patterns.  ``labels`` name the generators in error messages.
    """
    ps = [la.require_projector(p, f"generator {k}") for k, p in enumerate(ps)]
    if not ps:
        if dim is None:
            raise DimensionError("dimension required for an empty generating family")
        return trivial_context(dim).with_name(name or "trivial")
    d = ps[0].shape[0]
    if dim is not None and dim != d:
        raise DimensionError(f"generators act on dim {d}, expected {dim}")
    if any(p.shape[0] != d for p in ps):
        raise DimensionError("generators of different dimensions")
    labels = list(labels) if labels is not None else list(range(len(ps)))
    for i, j in combinations(range(len(ps)), 2):
        if not la.commute(ps[i], ps[j]):
            raise NonCommutingError(
                f"generators {labels[i]!r} and {labels[j]!r} do not commute",
                (labels[i], labels[j]),
            )
    exact = any(la.is_exact(p) for p in ps)
    if exact:
        ps = [la.to_exact(p) for p in ps]
    one = la.identity(d, exact)
    # refine a partition one generator at a time instead of all 2^n sign patterns
    parts = [one]
    for p in ps:
        nxt = []
        for r in parts:
            for f in (p, one - p):
                q = la.matmul(r, f)
                if not la.is_zero(q):
                    nxt.append(q)
        parts = nxt
    return Context(parts, name=name)


def leq(v1: Context, v2: Context) -> bool:
    """``v1`` is a subalgebra of ``v2``: every minimal of v1 is a sum of minimals of v2."""
    if v1.dim != v2.dim:
        raise DimensionError("contexts act on different dimensions")
    if v1 == v2:
        return True
    if len(v1) > len(v2):
        return False
    return all(v2.contains(q) for q in v1.minimals)


def meet(v1: Context, v2: Context) -> Context:
    """Largest context below both: atoms of the projectors common to the two algebras."""
    if v1.dim != v2.dim:
        raise DimensionError("contexts act on different dimensions")
    if leq(v1, v2):
        return v1
    if leq(v2, v1):
        return v2
    small, big = (v1, v2) if len(v1) <= len(v2) else (v2, v1)
    k = len(small)
    common = []
    for bits in product((0, 1), repeat=k):
        idx = frozenset(i for i in range(k) if bits[i])
        if not idx:
            continue
        if big.contains(small.projector(idx)):
            common.append(idx)
    atoms = [c for c in common if not any(o < c for o in common)]
    return Context([small.projector(a) for a in atoms], validate=False)


def spectrum(v: Context) -> list[SpectrumPoint]:
    return v.spectrum()


def restriction_map(v: Context, v_sub: Context) -> tuple:
    """For each point of ``v``, the index of its restriction to ``v_sub``."""
    if not leq(v_sub, v):
        raise NotBelowError(f"{v_sub!r} is not a subalgebra of {v!r}")
    out = []
    for q in v.minimals:
        for j, qq in enumerate(v_sub.minimals):
            if la.is_close(la.matmul(qq, q), q):
                out.append(j)
                break
        else:  # pragma: no cover - excluded by leq
            raise NotBelowError("minimal projector has no cover in the subalgebra")
    return tuple(out)


def restrict(point: SpectrumPoint, v_sub: Context) -> SpectrumPoint:
    """Restriction of a spectrum point to a subalgebra."""
    return SpectrumPoint(v_sub, restriction_map(point.context, v_sub)[point.index])


class ContextPoset(FinitePoset):
    """Finite meet-closed poset of contexts ordered by inclusion.

    Index 0 is always the trivial context.  :func:`close_poset` sorts
    elements by number of minimals, then by insertion order.
    """

    def __init__(self, contexts):
        contexts = list(contexts)
        n = len(contexts)
        m = np.zeros((n, n), dtype=bool)
        for i, j in product(range(n), repeat=2):
            m[i, j] = leq(contexts[i], contexts[j])
        names = [c.name for c in contexts]
        super().__init__(names, m)
        self.contexts = tuple(contexts)
        self.dim = contexts[0].dim
        self._restrict = {}

    def __getitem__(self, i: int) -> Context:
        return self.contexts[i]

    def index_of(self, v: Context | str) -> int:
        if isinstance(v, str):
            return self.index(v)
        return self.contexts.index(v)

    @property
    def trivial(self) -> int:
        return 0

    def restriction(self, i: int, j: int) -> tuple:
        """Point map Sigma(V_i) -> Sigma(V_j) for ``j <= i``."""
        key = (i, j)
        if key not in self._restrict:
            if not self.le(j, i):
                raise NotBelowError(f"{self.labels[j]!r} is not below {self.labels[i]!r}")
            self._restrict[key] = restriction_map(self.contexts[i], self.contexts[j])
        return self._restrict[key]

    def spectrum_size(self, i: int) -> int:
        return len(self.contexts[i])


def close_poset(cs, dim: int | None = None, exact: bool | None = None) -> ContextPoset:
    """Input contexts plus the trivial one, closed under pairwise meets.

    Duplicates are dropped (first name wins); generated meets are named
    ``meet(a,b)``.
    """
    cs = list(cs)
    if not cs and dim is None:
        raise DimensionError("dimension required for an empty context list")
    d = cs[0].dim if cs else dim
    if any(c.dim != d for c in cs):
        raise DimensionError("contexts of different dimensions")
    if exact is None:
        exact = any(c.exact for c in cs)
    found: dict[Context, Context] = {}

    def add(c: Context, fallback: str) -> bool:
        if c in found:
            return False
        found[c] = c if c.name else c.with_name(fallback)
        return True

    add(trivial_context(d, exact), "trivial")
    for k, c in enumerate(cs):
        add(c, f"V{k}")
    changed = True
    while changed:
        changed = False
        current = list(found.values())
        for a, b in combinations(current, 2):
            m = meet(a, b)
            if m not in found:
                add(m, f"meet({a.name},{b.name})")
                changed = True
    ordered = [c for _, c in sorted(enumerate(found.values()), key=lambda kc: (len(kc[1]), kc[0]))]
    return ContextPoset(ordered)
