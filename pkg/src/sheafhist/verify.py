"""Randomized law suites.  Each returns a :class:`SuiteResult` with a failure
count per check; truth values met along the way are kept so callers can
run the sieve invariants over them."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import linalg as la
from . import sampling as rs
from .contexts import ContextPoset
from .daseinization import (
    dasein,
    dasein_at,
    dasein_brute_force,
    pseudo_state,
    spectral,
    truth_value,
    truth_value_by_expectation,
)
from .decoherence import (
    DensityMatrix,
    Evolution,
    TimedHistory,
    check_additivity,
    check_negation,
    decoherence,
    decoherence_hpo,
    is_consistent,
    unit_history,
)
from .errors import DisjointnessError, SearchCapExceeded
from .hpo import HpoHistory, hpo_negation, mu, theta, theta_is_monotone, theta_pullback
from .presheaf import (
    FinitePresheaf,
    GlobalElement,
    global_sections,
    implies_sub,
    includes,
    is_sieve,
    join_sub,
    meet_sub,
    not_sub,
)
from .temporal import (
    ProductOmegaElement,
    TensorExpression,
    h,
    h_inverse_exists,
    intermediate,
    j,
    n_time_truth,
    two_time_truth,
)


@dataclass
class SuiteResult:
    name: str
    checks: dict = field(default_factory=dict)  # check -> [failures, total]
    notes: dict = field(default_factory=dict)
    truth_values: list = field(default_factory=list)

    def record(self, check: str, ok: bool) -> bool:
        c = self.checks.setdefault(check, [0, 0])
        c[1] += 1
        if not ok:
            c[0] += 1
        return ok

    @property
    def failures(self) -> int:
        return sum(f for f, _ in self.checks.values())

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_dict(self) -> dict:
        return {
            "suite": self.name,
            "passed": self.passed,
            "checks": {k: {"failures": f, "total": t} for k, (f, t) in sorted(self.checks.items())},
            "notes": self.notes,
        }


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def truth_value_ok(v) -> bool:
    """Sieve and compatibility invariants of a (single or product) truth value."""
    if isinstance(v, ProductOmegaElement):
        return v.is_valid()
    p = v.poset
    return all(is_sieve(p, s, v.assignment[s]) for s in p) and v.is_compatible()


def check_truth_values(values) -> tuple[int, int]:
    """``(failures, total)`` over a collection of truth values."""
    bad = sum(1 for v in values if not truth_value_ok(v))
    return bad, len(values)


# --------------------------------------------------------------------------
# daseinization


def dasein_oracle_suite(posets, samples: int = 200, seed=0) -> SuiteResult:
    """Overlap formula against the brute-force least dominating subset sum,
    at every context of every poset of the sampled dimension."""
    rng = _rng(seed)
    res = SuiteResult("dasein-oracle")
    by_dim: dict = {}
    for p in posets:
        by_dim.setdefault(p.dim, []).append(p)
    dims = sorted(by_dim)
    for _ in range(samples):
        d = dims[int(rng.integers(len(dims)))]
        group = by_dim[d]
        proj = rs.random_projector(d, rng, group[int(rng.integers(len(group)))])
        for poset in group:
            for c in poset.contexts:
                res.record("overlap-equals-brute-force", la.is_close(dasein_at(proj, c), dasein_brute_force(proj, c)))
        poset = group[int(rng.integers(len(group)))]
        psi = rs.random_state(d, rng, poset)
        v = truth_value(pseudo_state(psi, poset), dasein(proj, poset))
        res.record("truth-equals-expectation-criterion", v == truth_value_by_expectation(psi, proj, poset))
        res.truth_values.append(v)
    return res


def dasein_lattice_suite(poset: ContextPoset, samples: int = 200, seed=0, witnesses=()) -> SuiteResult:
    """``delta`` preserves joins and weakly preserves meets.

    ``witnesses`` are ``(label, P, Q)`` triples expected to give a strict
    meet inequality; each is recorded in the notes.
    """
    rng = _rng(seed)
    res = SuiteResult("dasein-lattice")
    strict = 0
    for _ in range(samples):
        p = rs.random_projector(poset.dim, rng, poset)
        q = rs.random_projector(poset.dim, rng, poset)
        dp, dq = dasein(p, poset).subobject, dasein(q, poset).subobject
        res.record("join-preserved", dasein(la.join(p, q), poset).subobject == join_sub(dp, dq))
        lhs = dasein(la.meet(p, q), poset).subobject
        rhs = meet_sub(dp, dq)
        res.record("meet-below", includes(lhs, rhs))
        strict += lhs != rhs
    res.notes["random_strict_meets"] = int(strict)
    flagged = []
    for label, p, q in witnesses:
        lhs = dasein(la.meet(p, q), poset).subobject
        rhs = meet_sub(dasein(p, poset).subobject, dasein(q, poset).subobject)
        ok = includes(lhs, rhs) and lhs != rhs
        res.record("strict-meet-witness", ok)
        flagged.append({"pair": label, "strict": bool(ok), "lhs": lhs.labelled(), "rhs": rhs.labelled()})
    res.notes["strict_witnesses"] = flagged
    return res


# --------------------------------------------------------------------------
# Heyting algebra of subobjects


def heyting_suite(sheaf: FinitePresheaf, samples: int = 1000, seed=0) -> SuiteResult:
    rng = _rng(seed)
    res = SuiteResult("heyting")
    bottom = sheaf.empty()
    top = sheaf.full()
    for _ in range(samples):
        a, b, c = (rs.random_subobject(sheaf, rng) for _ in range(3))
        imp = implies_sub(a, b)
        res.record("implication-is-subobject", imp.is_restriction_closed())
        res.record("adjunction", includes(c, imp) == includes(meet_sub(c, a), b))
        res.record("distributivity", meet_sub(a, join_sub(b, c)) == join_sub(meet_sub(a, b), meet_sub(a, c)))
        res.record("dual-distributivity", join_sub(a, meet_sub(b, c)) == meet_sub(join_sub(a, b), join_sub(a, c)))
        res.record("negation-is-implies-bottom", not_sub(a) == implies_sub(a, bottom))
        res.record("self-implication-is-top", implies_sub(a, a) == top)
        res.record("non-contradiction", meet_sub(a, not_sub(a)) == bottom)
    # excluded middle may fail; record whether it did
    res.notes["excluded_middle_failures"] = sum(
        join_sub(s, not_sub(s)) != top for s in (rs.random_subobject(sheaf, rng) for _ in range(50))
    )
    return res


# --------------------------------------------------------------------------
# tensor product and h


def join_closure(subs, bottom):
    """All joins of finite families of ``subs`` (including the empty join)."""
    seen = {bottom}
    queue = deque([bottom])
    gens = list(dict.fromkeys(subs))
    while queue:
        s = queue.popleft()
        for g in gens:
            t = join_sub(s, g)
            if t not in seen:
                seen.add(t)
                queue.append(t)
    return seen


def exhaustive_tensor_count(left: FinitePresheaf, right: FinitePresheaf, cap: int = 10**5) -> dict:
    """Subobjects of the product presheaf versus ``h``-images of all tensor expressions."""
    prod = intermediate(left, right)
    all_subs = set(prod.all_subobjects(cap))
    rects = [h(TensorExpression.generator(a, b)) for a, b in product(left.all_subobjects(cap), right.all_subobjects(cap))]
    images = join_closure(rects, prod.empty())
    return {
        "product_subobjects": len(all_subs),
        "h_images": len(images),
        "images_are_subobjects": images <= all_subs,
    }


def tensor_suite(left: FinitePresheaf, right: FinitePresheaf, samples: int = 200, seed=0,
                 exhaustive: bool = False, exhaustive_cap: int = 2_000) -> SuiteResult:
    rng = _rng(seed)
    res = SuiteResult("tensor")
    prod = intermediate(left, right)
    gen = TensorExpression.generator
    for _ in range(samples):
        t = rs.random_tensor_expression(left, right, rng)
        u = rs.random_tensor_expression(left, right, rng)
        ht, hu = h(t), h(u)
        res.record("image-is-subobject", ht.is_restriction_closed())
        a, a2, c = (rs.random_subobject(left, rng) for _ in range(3))
        b, b2, d = (rs.random_subobject(right, rng) for _ in range(3))
        # finite meets of generators are computed componentwise
        res.record("TP1-meet", meet_sub(h(gen(a, b)), h(gen(c, d))) == h(gen(meet_sub(a, c), meet_sub(b, d))))
        res.record("TP1-top", h(gen(left.full(), right.full())) == prod.full())
        # joins distribute in each slot
        res.record("TP2-left-join", h(gen(join_sub(a, a2), b)) == join_sub(h(gen(a, b)), h(gen(a2, b))))
        res.record("TP3-right-join", h(gen(a, join_sub(b, b2))) == join_sub(h(gen(a, b)), h(gen(a, b2))))
        res.record("empty-factor", h(gen(left.empty(), b)) == prod.empty() and h(gen(a, right.empty())) == prod.empty())
        res.record("joins-preserved", h(t | u) == join_sub(ht, hu))
        res.record("meets-preserved", h(t & u) == meet_sub(ht, hu))
        back = h_inverse_exists(ht)
        res.record("round-trip", h(back) == ht)
        res.record("normal-form-equality", back == t)
    anti = _anti_diagonal(left, right)
    if anti is not None:
        res.notes["anti_diagonal_terms"] = len(h_inverse_exists(anti))
    if exhaustive:
        try:
            counts = exhaustive_tensor_count(left, right, exhaustive_cap)
        except SearchCapExceeded as exc:
            res.notes["exhaustive"] = f"skipped: {exc}"
        else:
            res.notes["exhaustive"] = counts
            res.record("exhaustive-count", counts["product_subobjects"] == counts["h_images"] and counts["images_are_subobjects"])
    return res


def _anti_diagonal(left: FinitePresheaf, right: FinitePresheaf):
    """``{(l1, m2), (l2, m1)}`` at the top product stage, closed downwards (two-point top stages only)."""
    prod = intermediate(left, right)
    top = prod.poset.n - 1
    i, jj = prod.poset.pairs[top]
    if left.sizes[i] != 2 or right.sizes[jj] != 2 or len(prod.poset.up(top)) != 1:
        return None
    sel = [set() for _ in prod.sizes]
    sel[top] = {0 * 2 + 1, 1 * 2 + 0}
    return prod.downward_closure(sel)


# --------------------------------------------------------------------------
# HPO bridge


def hpo_suite(left: ContextPoset, right: ContextPoset, samples: int = 100, seed=0) -> SuiteResult:
    rng = _rng(seed)
    res = SuiteResult("hpo")
    prod = intermediate(left, right)
    dl, dr = left.dim, right.dim
    gen = TensorExpression.generator
    for _ in range(samples):
        a1 = rs.random_projector(dl, rng, left)
        a2 = rs.random_projector(dr, rng, right)
        s1, s2 = dasein(a1, left).subobject, dasein(a2, right).subobject
        res.record("pullback-identity", theta_pullback(la.kron(a1, a2), prod) == h(gen(s1, s2)))
        psi1, psi2 = rs.random_state(dl, rng, left), rs.random_state(dr, rng, right)
        w1, w2 = pseudo_state(psi1, left).subobject, pseudo_state(psi2, right).subobject
        pp = la.kron(la.projector_from_ket(psi1), la.projector_from_ket(psi2))
        res.record("pseudo-state-identity", theta_pullback(pp, prod) == h(gen(w1, w2)))
        # a disjoint second history: complement in the first slot
        b1 = la.identity(dl) - la.to_float(a1)
        b2 = rs.random_projector(dr, rng, right)
        joined = la.kron(a1, a2) + la.kron(b1, b2)
        res.record("disjoint-join", theta_pullback(joined, prod)
                   == join_sub(theta_pullback(la.kron(a1, a2), prod), theta_pullback(la.kron(b1, b2), prod)))
        neg = hpo_negation(HpoHistory.homogeneous([a1, a2]))
        ok = True
        try:
            neg.check_disjoint()
        except DisjointnessError:
            ok = False
        res.record("negation-terms-disjoint", ok)
        res.record("negation-sum", la.is_close(neg.projector, la.identity(dl * dr) - la.to_float(la.kron(a1, a2))))
    res.record("theta-monotone", theta_is_monotone(left, right))
    for i, jj in prod.poset.pairs:
        v1, v2 = left.contexts[i], right.contexts[jj]
        pts = {mu(l1, l2).index for l1 in v1.spectrum() for l2 in v2.spectrum()}
        res.record("mu-bijective", len(pts) == len(v1) * len(v2) == len(theta(v1, v2)))
    return res


# --------------------------------------------------------------------------
# history truth values


def history_suite(left: ContextPoset, right: ContextPoset, samples: int = 50, seed=0) -> SuiteResult:
    rng = _rng(seed)
    res = SuiteResult("history-truth")
    if left.dim != right.dim:
        raise ValueError("history suite needs equal dimensions in both slots")
    d = left.dim
    for _ in range(samples):
        psi = rs.random_state(d, rng, left)
        u = rs.random_unitary(d, rng) if rng.random() < 0.5 else np.eye(d, dtype=complex)
        s1 = dasein(rs.random_projector(d, rng, left), left)
        s2 = dasein(rs.random_projector(d, rng, right), right)
        r = two_time_truth(psi, u, s1, s2)
        res.record("product-sieve-factorizes", r.factorizes)
        res.record("pair-is-j", r.pair.assignment == j(*r.single).assignment)
        nt = n_time_truth(psi, [u], [s1, s2])
        res.record("n-time-agrees", tuple(nt.components) == tuple(r.single))
        res.truth_values.extend([*r.single, r.pair, r.product_sieve])
    return res


# --------------------------------------------------------------------------
# Kochen-Specker


def ks_count(poset: ContextPoset, cap: int = 10**6) -> int:
    return len(global_sections(spectral(poset), cap))


# --------------------------------------------------------------------------
# decoherence


def _random_two_time(d, rng, times):
    return TimedHistory(times, (rs.random_generic_projector(d, rng), rs.random_generic_projector(d, rng)))


def decoherence_suite(dim: int = 2, samples: int = 100, seed=0) -> SuiteResult:
    rng = _rng(seed)
    res = SuiteResult("decoherence")
    for _ in range(samples):
        hm = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        ev = Evolution.from_hamiltonian((hm + hm.conj().T) / 2)
        rho = DensityMatrix(rs.random_density(dim, rng))
        t1 = float(rng.uniform(0, 1))
        times = (t1, t1 + float(rng.uniform(0.1, 2)))
        a = _random_two_time(dim, rng, times)
        c = _random_two_time(dim, rng, times)
        # disjoint partner: complement in one slot, arbitrary in the other
        p, q = a.projectors
        if rng.random() < 0.5:
            b = TimedHistory(times, (la.identity(dim) - p, rs.random_generic_projector(dim, rng)))
        else:
            b = TimedHistory(times, (p, la.identity(dim) - q))
        dac, dca = decoherence(a, c, rho, ev), decoherence(c, a, rho, ev)
        res.record("hermiticity", abs(dac - np.conj(dca)) <= 1e-9)
        unit = unit_history(times, dim)
        res.record("unit-normalization", abs(decoherence(unit, unit, rho, ev) - 1) <= 1e-9)
        res.record("additivity", check_additivity(a, b, c, rho, ev))
        res.record("negation", check_negation(a, c, rho, ev))
        daa = decoherence(a, a, rho, ev)
        res.record("diagonal-probability", abs(daa.imag) <= 1e-9 and -1e-9 <= daa.real <= 1 + 1e-9)
        res.record("hpo-map-agrees", abs(decoherence_hpo(a, c, rho, ev) - dac) <= 1e-9)
        # three-time histories exercise the ordering of Heisenberg factors
        t3 = (times[0], times[1], times[1] + float(rng.uniform(0.1, 1)))
        a3 = TimedHistory(t3, tuple(rs.random_generic_projector(dim, rng) for _ in range(3)))
        c3 = TimedHistory(t3, tuple(rs.random_generic_projector(dim, rng) for _ in range(3)))
        res.record("hpo-map-agrees", abs(decoherence_hpo(a3, c3, rho, ev) - decoherence(a3, c3, rho, ev)) <= 1e-9)
    # z-basis two-time family, trivial dynamics, initial |z+>
    pz = la.diag(1, 0)
    pm = la.diag(0, 1)
    fam = [TimedHistory((0, 1), (x, y)) for x in (pz, pm) for y in (pz, pm)]
    rep = is_consistent(fam, DensityMatrix.pure(np.array([1, 0])), Evolution.trivial(2))
    res.record("z-basis-consistent", rep.consistent)
    res.record("z-basis-probabilities", abs(rep.probability_sum - 1) <= 1e-9)
    res.notes["z_basis_probability_sum"] = rep.probability_sum
    return res
