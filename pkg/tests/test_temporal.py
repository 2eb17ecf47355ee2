import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sheafhist import sampling as rs
from sheafhist.daseinization import dasein, spectral, truth_value, pseudo_state
from sheafhist.errors import DimensionError, NotUnitaryError, PresheafMismatchError
from sheafhist.presheaf import (
    includes,
    join_sub,
    meet_sub,
    principal_sieve,
    totally_false,
    totally_true,
)
from sheafhist.temporal import (
    TensorExpression,
    classifier_comparison,
    h,
    h_inverse_exists,
    intermediate,
    j,
    n_time_truth,
    product_truth,
    pullback_left,
    pullback_right,
    two_time_truth,
)
from sheafhist.verify import exhaustive_tensor_count, join_closure

from states import HADAMARD, PM, PX, PZ, ZP

seeds = st.integers(0, 2**32 - 1)
gen = TensorExpression.generator


@pytest.fixture
def zz(z_poset):
    sh = spectral(z_poset)
    return sh, intermediate(sh, sh)


def test_product_presheaf_shape(zz, z_poset):
    sh, prod = zz
    assert prod.poset.labels == ("<trivial,trivial>", "<trivial,z>", "<z,trivial>", "<z,z>")
    assert prod.sizes == (1, 2, 2, 4)
    assert prod.is_functorial()
    top = prod.poset.index("<z,z>")
    assert prod.poset.down(top) == frozenset(range(4))
    assert intermediate(z_poset, z_poset) is prod


def test_pullback_examples(zz, z_poset):
    sh, prod = zz
    assert pullback_left(sh.full(), prod) == prod.full()
    assert pullback_left(sh.empty(), prod) == prod.empty()
    pb = pullback_left(dasein(PZ, z_poset).subobject, prod)
    assert pb.is_restriction_closed()
    top = prod.poset.index("<z,z>")
    # point a*2+b is (lambda_a, mu_b)
    assert pb[top] == frozenset({0, 1})
    assert pullback_right(dasein(PZ, z_poset).subobject, prod)[top] == frozenset({0, 2})


def test_h_examples(zz, z_poset):
    sh, prod = zz
    assert h(gen(sh.full(), sh.full())) == prod.full()
    assert h(TensorExpression.bottom(sh, sh)) == prod.empty()
    a, a2 = dasein(PZ, z_poset).subobject, dasein(PM, z_poset).subobject
    b = dasein(PZ, z_poset).subobject
    assert h(gen(join_sub(a, a2), b)) == join_sub(h(gen(a, b)), h(gen(a2, b)))
    assert h(gen(a, b) & gen(a2, sh.full())) == h(gen(meet_sub(a, a2), b))


def test_h_mismatch(zz, zx_poset):
    sh, _ = zz
    other = spectral(zx_poset)
    with pytest.raises(PresheafMismatchError):
        gen(sh.full(), sh.full()) | gen(other.full(), sh.full())


def test_h_inverse_examples(zz):
    sh, prod = zz
    t = h_inverse_exists(prod.full())
    assert h(t) == prod.full() and len(t) == 1
    assert t.terms[0] == (sh.full(), sh.full())
    top = prod.poset.index("<z,z>")
    sel = [set() for _ in prod.sizes]
    sel[top] = {0 * 2 + 1, 1 * 2 + 0}
    anti = prod.downward_closure(sel)
    back = h_inverse_exists(anti)
    assert len(back) == 2 and h(back) == anti
    # not a single rectangle: the smallest rectangle containing it is everything at the top
    assert all(h(gen(a, b)) != anti for a in sh.all_subobjects() for b in sh.all_subobjects())


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_frame_relations_and_round_trip(scenarios, seed):
    rng = np.random.default_rng(seed)
    for name in ("qubit-zx", "two-time-qubit"):
        sc = scenarios[name]
        posets = list(sc.posets.values())
        left, right = spectral(posets[0]), spectral(posets[-1])
        prod = intermediate(left, right)
        t = rs.random_tensor_expression(left, right, rng)
        u = rs.random_tensor_expression(left, right, rng)
        assert h(t | u) == join_sub(h(t), h(u))
        assert h(t & u) == meet_sub(h(t), h(u))
        a, c = rs.random_subobject(left, rng), rs.random_subobject(left, rng)
        b, d = rs.random_subobject(right, rng), rs.random_subobject(right, rng)
        assert meet_sub(h(gen(a, b)), h(gen(c, d))) == h(gen(meet_sub(a, c), meet_sub(b, d)))
        assert h(gen(join_sub(a, c), b)) == join_sub(h(gen(a, b)), h(gen(c, b)))
        assert h(gen(a, join_sub(b, d))) == join_sub(h(gen(a, b)), h(gen(a, d)))
        assert h(gen(left.empty(), b)) == prod.empty()
        back = h_inverse_exists(h(t))
        assert h(back) == h(t) and back == t and hash(back) == hash(t)


def test_exhaustive_count_on_two_time_fixture(scenarios):
    sc = scenarios["two-time-qubit"]
    posets = list(sc.posets.values())
    left, right = spectral(posets[0]), spectral(posets[-1])
    counts = exhaustive_tensor_count(left, right)
    assert counts["images_are_subobjects"]
    assert counts["product_subobjects"] == counts["h_images"]


def test_join_closure_small():
    from sheafhist.contexts import close_poset
    sh = spectral(close_poset([], dim=2))
    assert len(join_closure([sh.full()], sh.empty())) == 2


def test_j_examples(z_poset):
    tt, ff = totally_true(z_poset), totally_false(z_poset)
    p = j(tt, tt)
    assert p.is_valid()
    for k, (i, jj) in enumerate(p.poset.pairs):
        assert p[k] == (principal_sieve(z_poset, i), principal_sieve(z_poset, jj))
    q = j(tt, ff)
    assert all(s2 == frozenset() for _, s2 in q.assignment)
    assert q.components() == (tt, ff)


def test_two_time_truth_examples(z_poset):
    sz, sm = dasein(PZ, z_poset), dasein(PM, z_poset)
    iz, it = z_poset.index("z"), z_poset.index("trivial")
    r = two_time_truth(ZP, np.eye(2), sz, sz)
    assert r.factorizes and r.pair.is_valid()
    assert r.single[0].is_totally_true() and r.single[1].is_totally_true()
    assert r.product_sieve.is_totally_true()
    r = two_time_truth(ZP, np.eye(2), sz, sm)
    assert r.single[1][iz] == frozenset({it}) and r.factorizes
    r = two_time_truth(ZP, HADAMARD, sz, dasein(PX, z_poset))
    assert r.single[1][iz] == principal_sieve(z_poset, iz)
    assert r.single[1].is_totally_true() and r.factorizes


def test_two_time_truth_errors(z_poset, scenarios):
    sz = dasein(PZ, z_poset)
    with pytest.raises(NotUnitaryError):
        two_time_truth(ZP, np.array([[1, 1], [0, 1]]), sz, sz)
    dim4 = dasein(np.eye(4), scenarios["peres-mermin-dim4"].poset())
    with pytest.raises(DimensionError):
        two_time_truth(ZP, np.eye(2), sz, dim4)


def test_j_of_single_truth_values_matches_history(z_poset):
    s1, s2 = dasein(PZ, z_poset), dasein(PX, z_poset)
    r = two_time_truth(ZP, HADAMARD, s1, s2)
    v1 = truth_value(pseudo_state(ZP, z_poset), s1)
    v2 = truth_value(pseudo_state(HADAMARD @ ZP, z_poset), s2)
    assert j(v1, v2).assignment == r.pair.assignment


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_history_sieve_factorizes(scenarios, seed):
    zx_poset = scenarios["qubit-zx"].poset()
    rng = np.random.default_rng(seed)
    psi = rs.random_state(2, rng, zx_poset)
    u = rs.random_unitary(2, rng)
    s1 = dasein(rs.random_projector(2, rng, zx_poset), zx_poset)
    s2 = dasein(rs.random_projector(2, rng, zx_poset), zx_poset)
    r = two_time_truth(psi, u, s1, s2)
    assert r.factorizes and r.pair.is_valid() and r.product_sieve.is_compatible()


def test_n_time_examples(z_poset):
    sz = dasein(PZ, z_poset)
    one = n_time_truth(ZP, [], [sz])
    assert one == truth_value(pseudo_state(ZP, z_poset), sz)
    two = n_time_truth(ZP, [HADAMARD], [sz, dasein(PX, z_poset)])
    ref = two_time_truth(ZP, HADAMARD, sz, dasein(PX, z_poset))
    assert tuple(two.components) == tuple(ref.single)
    three = n_time_truth(ZP, [np.eye(2), np.eye(2)], [sz, sz, sz])
    assert three.is_valid() and all(c.is_totally_true() for c in three.components)
    top = z_poset.index("z")
    s = principal_sieve(z_poset, top)
    assert three.nested((top, top, top)) == (s, (s, s))
    with pytest.raises(ValueError):
        n_time_truth(ZP, [np.eye(2)], [sz, sz, sz])


def test_product_truth_on_rectangles(zz, z_poset):
    sh, prod = zz
    w = h(gen(pseudo_state(ZP, z_poset).subobject, sh.full()))
    s = h(gen(dasein(PZ, z_poset).subobject, sh.full()))
    assert includes(w, s)
    assert product_truth(w, s).is_totally_true()


def test_classifier_counterexample(z_poset):
    rows = {r["stage"]: r for r in classifier_comparison(z_poset, z_poset)}
    top = rows["<z,z>"]
    assert (top["sieves"], top["pairs"], top["product_shaped"]) == (6, 9, 5)
    assert top["non_product_witness"] == ["<trivial,trivial>", "<trivial,z>", "<z,trivial>"]
    bottom = rows["<trivial,trivial>"]
    assert bottom["non_product_witness"] is None and bottom["sieves"] == bottom["product_shaped"] == 2
