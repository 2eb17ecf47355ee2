"""Consistent-histories baseline: class operators and the decoherence functional.

Conventions: ``ev(t, s)`` evolves states from time ``s`` to time ``t``.
The Heisenberg operator of ``A`` at ``t`` is ``U(t,t0)^dag A U(t,t0)``, so the
class operator ``U(t0,t1) a1 U(t1,t2) a2 ... U(tn,t0)`` equals
``a1(t1) a2(t2) ... an(tn)`` and the operator produced by the linear map on
history projectors, ``an(tn) ... a1(t1)``, is its adjoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.linalg import expm

from . import linalg as la
from .errors import DimensionError, DisjointnessError, SheafHistError


@dataclass(frozen=True)
class TimedHistory:
    """Homogeneous history: one Schroedinger-picture projector per time."""

    times: tuple
    projectors: tuple

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        ps = tuple(la.require_projector(p, f"projector at t={t}") for t, p in zip(times, self.projectors))
        if len(times) != len(self.projectors) or not times:
            raise ValueError("need one projector per time and at least one time")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"times must be strictly increasing, got {times}")
        if len({p.shape[0] for p in ps}) != 1:
            raise DimensionError("projectors of different dimensions")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "projectors", ps)

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    def hpo(self) -> np.ndarray:
        return la.kron_all(self.projectors)


def unit_history(times, dim: int) -> TimedHistory:
    """The history that is always true."""
    return TimedHistory(tuple(times), tuple(la.identity(dim) for _ in times))


@dataclass(frozen=True)
class History:
    """Real linear combination of homogeneous histories on a common time support.

    Joins of disjoint histories add terms; negation is ``unit - h``.
    """

    terms: tuple = field(default=())  # (coefficient, TimedHistory)

    @classmethod
    def of(cls, h: "TimedHistory | History") -> "History":
        return h if isinstance(h, History) else cls(((1.0, h),))

    @property
    def times(self) -> tuple:
        return self.terms[0][1].times

    @property
    def dim(self) -> int:
        return self.terms[0][1].dim

    def hpo(self) -> np.ndarray:
        out = np.zeros((self.dim ** len(self.times),) * 2, dtype=complex)
        for c, h in self.terms:
            out = out + c * la.to_float(h.hpo())
        return out


def _support(*hs: History) -> tuple:
    times = {h.times for h in hs}
    if len(times) != 1:
        raise ValueError(f"histories have different time supports: {sorted(times)}")
    dims = {h.dim for h in hs}
    if len(dims) != 1:
        raise DimensionError("histories act on different dimensions")
    return times.pop()


def history_join(*hs) -> History:
    """Join of pairwise-disjoint histories (their projectors multiply to zero)."""
    hs = [History.of(h) for h in hs]
    _support(*hs)
    ps = [h.hpo() for h in hs]
    for a, b in combinations(range(len(ps)), 2):
        if not la.is_zero(ps[a] @ ps[b]):
            raise DisjointnessError(f"histories {a} and {b} are not disjoint")
    return History(tuple(t for h in hs for t in h.terms))


def history_not(h) -> History:
    h = History.of(h)
    unit = unit_history(h.times, h.dim)
    return History(((1.0, unit),) + tuple((-c, t) for c, t in h.terms))


class Evolution:
    """Unitary propagators ``U(t, s)`` between time labels.

    Build with :meth:`from_hamiltonian` (``exp(-i H (t - s))``), :meth:`trivial`,
    or :meth:`from_steps` (a table of consecutive propagators, composed as needed).
    """

    def __init__(self, dim: int, propagator):
        self.dim = dim
        self._prop = propagator

    def __call__(self, t, s) -> np.ndarray:
        t, s = float(t), float(s)
        if t == s:
            return np.eye(self.dim, dtype=complex)
        return self._prop(t, s)

    @classmethod
    def trivial(cls, dim: int) -> "Evolution":
        return cls(dim, lambda t, s: np.eye(dim, dtype=complex))

    @classmethod
    def from_hamiltonian(cls, hamiltonian) -> "Evolution":
        hmat = la.to_float(la.square(hamiltonian))
        if not la.is_hermitian(hmat):
            raise ValueError("Hamiltonian is not self-adjoint")
        return cls(hmat.shape[0], lambda t, s: expm(-1j * hmat * (t - s)))

    @classmethod
    def from_steps(cls, times, unitaries) -> "Evolution":
        """``unitaries[k]`` evolves from ``times[k]`` to ``times[k+1]``."""
        times = [float(t) for t in times]
        us = [la.to_float(la.require_unitary(u, f"step {k}")) for k, u in enumerate(unitaries)]
        if len(us) != len(times) - 1:
            raise ValueError("need one unitary per consecutive pair of times")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("step times must be strictly increasing")
        dim = us[0].shape[0] if us else 1
        pos = {t: k for k, t in enumerate(times)}

        def prop(t, s):
            if t not in pos or s not in pos:
                raise SheafHistError(f"no propagator between t={s} and t={t}")
            a, b = sorted((pos[s], pos[t]))
            u = np.eye(dim, dtype=complex)
            for k in range(a, b):
                u = us[k] @ u
            return u if pos[t] >= pos[s] else u.conj().T

        return cls(dim, prop)

    def check(self, times) -> bool:
        """Unitarity and ``U(t2,t0) = U(t2,t1) U(t1,t0)`` over the given times."""
        times = [float(t) for t in times]
        for a in times:
            for b in times:
                if not la.is_unitary(self(a, b)):
                    return False
                for c in times:
                    if not la.is_close(self(c, a), self(c, b) @ self(b, a)):
                        return False
        return True


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        m = la.to_float(la.square(self.matrix))
        eps = la.epsilon()
        if not la.is_hermitian(m):
            raise ValueError("density matrix is not self-adjoint")
        if np.linalg.eigvalsh(m).min() < -eps:
            raise ValueError("density matrix is not positive semidefinite")
        if abs(np.trace(m) - 1) > eps:
            raise ValueError("density matrix does not have unit trace")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def pure(cls, psi) -> "DensityMatrix":
        return cls(la.to_float(la.projector_from_ket(la.require_unit(psi))))


def _homogeneous_class_operator(h: TimedHistory, ev: Evolution, t0: float) -> np.ndarray:
    out = ev(t0, h.times[0])
    for k, (t, p) in enumerate(zip(h.times, h.projectors)):
        nxt = h.times[k + 1] if k + 1 < len(h.times) else t0
        out = out @ la.to_float(p) @ ev(t, nxt)
    return out


def class_operator(h, ev: Evolution, t0=None) -> np.ndarray:
    """``C = U(t0,t1) a1 U(t1,t2) a2 ... an U(tn,t0)``, linear over joins and negation."""
    h = History.of(h)
    if h.dim != ev.dim:
        raise DimensionError(f"history of dim {h.dim} with evolution of dim {ev.dim}")
    t0 = h.times[0] if t0 is None else float(t0)
    out = np.zeros((h.dim, h.dim), dtype=complex)
    for c, term in h.terms:
        out = out + c * _homogeneous_class_operator(term, ev, t0)
    return out


def decoherence(a, b, rho: DensityMatrix, ev: Evolution, t0=None) -> complex:
    """``d(a, b) = tr(C_a^dag rho C_b)``."""
    a, b = History.of(a), History.of(b)
    _support(a, b)
    t0 = a.times[0] if t0 is None else t0
    ca = class_operator(a, ev, t0)
    cb = class_operator(b, ev, t0)
    return complex(np.trace(ca.conj().T @ rho.matrix @ cb))


def heisenberg(op, t, ev: Evolution, t0) -> np.ndarray:
    u = ev(t, t0)
    return u.conj().T @ la.to_float(op) @ u


def d_map(factors, times, ev: Evolution, t0) -> np.ndarray:
    """Linear map on product operators: ``A1 (x) ... (x) An -> An(tn) ... A1(t1)``."""
    out = np.eye(ev.dim, dtype=complex)
    for t, a in zip(times, factors):
        out = heisenberg(a, t, ev, t0) @ out
    return out


def decoherence_hpo(a, b, rho: DensityMatrix, ev: Evolution, t0=None) -> complex:
    """Decoherence from the linear map on history projectors: ``tr(D(a) rho D(b)^dag)``."""
    a, b = History.of(a), History.of(b)
    times = _support(a, b)
    t0 = times[0] if t0 is None else float(t0)

    def dmap(h: History):
        return sum(c * d_map(t.projectors, t.times, ev, t0) for c, t in h.terms)

    da, db = dmap(a), dmap(b)
    return complex(np.trace(da @ rho.matrix @ db.conj().T))


def check_additivity(a, b, c, rho: DensityMatrix, ev: Evolution, t0=None) -> bool:
    """``d(a v b, c) = d(a, c) + d(b, c)`` for disjoint ``a``, ``b``."""
    ab = history_join(a, b)
    lhs = decoherence(ab, c, rho, ev, t0)
    rhs = decoherence(a, c, rho, ev, t0) + decoherence(b, c, rho, ev, t0)
    return abs(lhs - rhs) <= la.epsilon()


def check_negation(a, c, rho: DensityMatrix, ev: Evolution, t0=None) -> bool:
    """``d(not a, c) = d(1, c) - d(a, c)``."""
    a = History.of(a)
    unit = unit_history(a.times, a.dim)
    lhs = decoherence(history_not(a), c, rho, ev, t0)
    rhs = decoherence(unit, c, rho, ev, t0) - decoherence(a, c, rho, ev, t0)
    return abs(lhs - rhs) <= la.epsilon()


@dataclass(frozen=True)
class ConsistencyReport:
    consistent: bool
    d: np.ndarray
    probability_sum: float
    real_part_only: bool = False


def is_consistent(histories, rho: DensityMatrix, ev: Evolution, t0=None, real_part_only: bool = False) -> ConsistencyReport:
    """All off-diagonal ``d(a_i, a_j)`` vanish (or only their real parts, if asked)."""
    hs = [History.of(h) for h in histories]
    n = len(hs)
    d = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            d[i, j] = decoherence(hs[i], hs[j], rho, ev, t0)
    off = d[~np.eye(n, dtype=bool)]
    vals = off.real if real_part_only else off
    ok = bool(np.all(np.abs(vals) <= la.epsilon()))
    return ConsistencyReport(ok, d, float(np.trace(d).real), real_part_only)
