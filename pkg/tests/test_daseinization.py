import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sheafhist import linalg as la
from sheafhist import sampling as rs
from sheafhist.contexts import close_poset, context_from_commuting
from sheafhist.daseinization import (
    dasein,
    dasein_at,
    dasein_brute_force,
    expectation_criterion,
    pseudo_state,
    spectral,
    truth_value,
    truth_value_by_expectation,
)
from sheafhist.errors import DimensionError, NotUnitVectorError, PresheafMismatchError
from sheafhist.presheaf import includes, join_sub, meet_sub, principal_sieve

from states import PM, PX, PZ, XP, ZM, ZP

seeds = st.integers(0, 2**32 - 1)


def _dim3_poset():
    a = context_from_commuting([la.diag(1, 0, 0), la.diag(0, 1, 0)], name="a")
    u = np.array([[1, 0, 0], [0, 1, 1], [0, 1, -1]]) / np.array([1, np.sqrt(2), np.sqrt(2)])[:, None]
    b = context_from_commuting([la.diag(1, 0, 0), u.T @ la.diag(0, 1, 0) @ u], name="b")
    return close_poset([a, b])


@pytest.fixture(scope="module")
def all_posets():
    from sheafhist.scenario import FIXTURES, load_scenario
    out = [p for name in FIXTURES for p in load_scenario(name).posets.values()]
    return out + [_dim3_poset()]


def test_dasein_at_examples(z_ctx):
    assert la.is_close(dasein_at(PZ, z_ctx), PZ)
    assert la.is_close(dasein_at(PX, z_ctx), np.eye(2))
    assert la.is_close(dasein_brute_force(PX, z_ctx), np.eye(2))
    assert la.is_zero(dasein_at(np.zeros((2, 2)), z_ctx))


def test_dasein_at_dim_mismatch(z_ctx):
    with pytest.raises(DimensionError):
        dasein_at(np.eye(3), z_ctx)


def test_dasein_examples(z_poset):
    assert dasein(np.eye(2), z_poset).subobject == spectral(z_poset).full()
    d = dasein(PZ, z_poset).subobject
    assert d[z_poset.index("z")] == frozenset({0})
    assert d[z_poset.index("trivial")] == frozenset({0})
    assert dasein(np.zeros((2, 2)), z_poset).subobject == spectral(z_poset).empty()


def test_pseudo_state_examples(z_poset):
    iz = z_poset.index("z")
    assert pseudo_state(ZP, z_poset).subobject[iz] == frozenset({0})
    assert pseudo_state(XP, z_poset).subobject[iz] == frozenset({0, 1})
    assert pseudo_state(ZP, z_poset) != pseudo_state(ZM, z_poset)
    with pytest.raises(NotUnitVectorError):
        pseudo_state([1, 1], z_poset)


def test_truth_value_examples(z_poset):
    iz, it = z_poset.index("z"), z_poset.index("trivial")
    tv = truth_value(pseudo_state(ZP, z_poset), dasein(PZ, z_poset))
    assert tv.is_totally_true()
    tv = truth_value(pseudo_state(ZP, z_poset), dasein(PM, z_poset))
    assert tv[iz] == frozenset({it}) and tv.is_compatible()
    tv = truth_value(pseudo_state(XP, z_poset), dasein(PZ, z_poset))
    assert tv[iz] == frozenset({it}) and tv[it] == principal_sieve(z_poset, it)


def test_truth_value_poset_mismatch(z_poset, zx_poset):
    with pytest.raises(PresheafMismatchError):
        truth_value(pseudo_state(ZP, z_poset), dasein(PZ, zx_poset))


def test_expectation_criterion_examples(z_ctx):
    assert expectation_criterion(ZP, PZ, z_ctx)
    assert not expectation_criterion(ZP, PM, z_ctx)
    # delta(Px+) is I on the z context, while delta(Pz+) stays Pz+
    assert expectation_criterion(ZP, PX, z_ctx)
    assert not expectation_criterion(XP, PZ, z_ctx)


def test_meet_defect_witness(zx_poset):
    # Pz+ and Px+ share no vector, yet both daseinize to I on the x and z stages respectively
    lhs = dasein(la.meet(PZ, PX), zx_poset).subobject
    rhs = meet_sub(dasein(PZ, zx_poset).subobject, dasein(PX, zx_poset).subobject)
    assert includes(lhs, rhs) and lhs != rhs


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_oracle_and_antitone(all_posets, seed):
    rng = np.random.default_rng(seed)
    for poset in all_posets:
        p = rs.random_projector(poset.dim, rng, poset)
        for i, v in enumerate(poset.contexts):
            d = dasein_at(p, v)
            assert la.is_close(d, dasein_brute_force(p, v))
            assert la.leq_projector(p, d)
            for j in poset.down(i):
                assert la.leq_projector(d, dasein_at(p, poset.contexts[j]))


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_lattice_behaviour(all_posets, seed):
    rng = np.random.default_rng(seed)
    for poset in all_posets:
        p = rs.random_projector(poset.dim, rng, poset)
        q = rs.random_projector(poset.dim, rng, poset)
        dp, dq = dasein(p, poset).subobject, dasein(q, poset).subobject
        assert dasein(la.join(p, q), poset).subobject == join_sub(dp, dq)
        assert includes(dasein(la.meet(p, q), poset).subobject, meet_sub(dp, dq))
        # monotone: p <= p v q
        assert includes(dp, dasein(la.join(p, q), poset).subobject)
        assert dp.is_restriction_closed()


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_sieve_agreement(all_posets, seed):
    rng = np.random.default_rng(seed)
    for poset in all_posets:
        psi = rs.random_state(poset.dim, rng, poset)
        p = rs.random_projector(poset.dim, rng, poset)
        tv = truth_value(pseudo_state(psi, poset), dasein(p, poset))
        assert tv.is_compatible()
        assert tv == truth_value_by_expectation(psi, p, poset)
        for v in poset:
            for w in poset.down(v):
                assert (w in tv[v]) == expectation_criterion(psi, p, poset.contexts[w])


def test_pseudo_states_distinguish_basis_states(all_posets):
    for poset in all_posets:
        top = max(poset, key=lambda i: len(poset.contexts[i]))
        kets = []
        for q in poset.contexts[top].minimals:
            if la.rank(q) == 1:
                vals, vecs = np.linalg.eigh(la.to_float(q))
                kets.append(vecs[:, -1])
        states = {pseudo_state(k, poset) for k in kets}
        assert len(states) == len(kets)
