"""Random projectors, states and subobjects for property checks."""

from __future__ import annotations

import numpy as np

from . import linalg as la
from .contexts import ContextPoset
from .presheaf import FinitePresheaf, Subobject
from .temporal import TensorExpression


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_ket(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_generic_projector(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Projector onto the span of ``rank`` random columns (uniform over rank if not given)."""
    r = int(rng.integers(0, dim + 1)) if rank is None else rank
    q = random_unitary(dim, rng)[:, :r]
    return q @ q.conj().T


def random_context_projector(poset: ContextPoset, rng: np.random.Generator) -> np.ndarray:
    """Sum of a random subset of the minimals of a random context."""
    c = poset.contexts[int(rng.integers(poset.n))]
    idx = [i for i in range(len(c)) if rng.random() < 0.5]
    return la.to_float(c.projector(idx))


def random_projector(dim: int, rng: np.random.Generator, poset: ContextPoset | None = None) -> np.ndarray:
    """Mixture of generic projectors, projectors lying in a context of ``poset``,
    and rank-one projectors onto random combinations of two minimal ranges."""
    u = rng.random()
    if poset is not None and u < 0.4:
        return random_context_projector(poset, rng)
    if poset is not None and u < 0.6:
        # a ray mixing the ranges of two minimals: overlaps exactly those two
        c = poset.contexts[int(rng.integers(poset.n))]
        if len(c) >= 2:
            a, b = rng.choice(len(c), size=2, replace=False)
            va = la.to_float(c.minimals[a])[:, int(np.argmax(np.diag(la.to_float(c.minimals[a])).real))]
            vb = la.to_float(c.minimals[b])[:, int(np.argmax(np.diag(la.to_float(c.minimals[b])).real))]
            v = va / np.linalg.norm(va) + np.exp(1j * rng.uniform(0, 2 * np.pi)) * vb / np.linalg.norm(vb)
            v = v / np.linalg.norm(v)
            return np.outer(v, v.conj())
    return random_generic_projector(dim, rng)


def random_state(dim: int, rng: np.random.Generator, poset: ContextPoset | None = None) -> np.ndarray:
    """Random ket; half the time an eigenvector of a minimal of ``poset``."""
    if poset is not None and rng.random() < 0.5:
        c = poset.contexts[int(rng.integers(poset.n))]
        q = la.to_float(c.minimals[int(rng.integers(len(c)))])
        w, vecs = np.linalg.eigh(q)
        v = vecs[:, int(np.argmax(w))]
        return v / np.linalg.norm(v)
    return random_ket(dim, rng)


def random_density(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = z @ z.conj().T
    return m / np.trace(m).real


def random_subobject(p: FinitePresheaf, rng: np.random.Generator, density: float | None = None) -> Subobject:
    """Downward closure of a random set of points."""
    dens = rng.uniform(0.0, 0.6) if density is None else density
    picks = [{x for x in range(n) if rng.random() < dens} for n in p.sizes]
    return p.downward_closure(picks)


def random_tensor_expression(left: FinitePresheaf, right: FinitePresheaf, rng: np.random.Generator,
                             max_terms: int = 3) -> TensorExpression:
    k = int(rng.integers(0, max_terms + 1))
    terms = tuple((random_subobject(left, rng), random_subobject(right, rng)) for _ in range(k))
    return TensorExpression(left, right, terms)
