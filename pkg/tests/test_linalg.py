from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sheafhist import linalg as la
from sheafhist import sampling as rs
from sheafhist.errors import DimensionError, InexactValueError, NotUnitaryError, NotUnitVectorError

from states import HADAMARD, PM, PX, PZ, XP, ZP

seeds = st.integers(0, 2**32 - 1)


def test_matmul_examples():
    assert la.is_close(la.matmul(np.eye(2), np.eye(2)), np.eye(2))
    assert la.is_zero(la.matmul(PZ, PM))
    assert la.is_close(la.matmul(PX, PZ), np.array([[0.5, 0], [0.5, 0]]))


def test_matmul_dimension_mismatch():
    with pytest.raises(DimensionError):
        la.matmul(np.eye(2), np.eye(3))


def test_kron_examples():
    assert la.is_close(la.kron(np.eye(2), np.eye(2)), np.eye(4))
    assert la.is_close(la.kron(PZ, PZ), la.diag(1, 0, 0, 0))


def test_kron_dimension_bound():
    with pytest.raises(DimensionError):
        la.kron(np.eye(4), np.eye(5))
    with la.precision(max_dim=32):
        assert la.kron(np.eye(4), np.eye(5)).shape == (20, 20)


def test_is_projector_examples():
    assert la.is_projector(PZ)
    assert la.is_projector(PX)
    assert not la.is_projector(np.array([[0, 1], [0, 0]]))


def test_projector_from_ket_examples():
    assert la.is_close(la.projector_from_ket(ZP), PZ)
    assert la.is_close(la.projector_from_ket(XP), PX)
    singlet = np.array([0, 1, -1, 0]) / np.sqrt(2)
    expect = np.zeros((4, 4))
    expect[1, 1] = expect[2, 2] = 0.5
    expect[1, 2] = expect[2, 1] = -0.5
    assert la.is_close(la.projector_from_ket(singlet), expect)


def test_projector_from_ket_rejects_non_unit():
    with pytest.raises(NotUnitVectorError):
        la.projector_from_ket([1, 1])


def test_evolve_examples():
    assert la.is_close(la.evolve(XP, np.eye(2)), XP)
    assert la.is_close(la.evolve(ZP, HADAMARD), XP)
    with pytest.raises(NotUnitaryError):
        la.evolve(ZP, np.array([[1, 1], [0, 1]]))


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_evolve_round_trip(seed):
    rng = np.random.default_rng(seed)
    u = rs.random_unitary(3, rng)
    psi = rs.random_ket(3, rng)
    assert la.is_close(la.evolve(la.evolve(psi, u), u.conj().T), psi)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_kron_mixed_product_and_adjoint(seed):
    rng = np.random.default_rng(seed)
    a, b, c, d = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(4))
    assert la.is_close(la.kron(a, b) @ la.kron(c, d), la.kron(a @ c, b @ d))
    assert la.is_close(la.dagger(la.kron(a, b)), la.kron(la.dagger(a), la.dagger(b)))


@settings(max_examples=100, deadline=None)
@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_kron_of_projectors_is_projector(seed, m, n):
    rng = np.random.default_rng(seed)
    p = rs.random_generic_projector(m, rng)
    q = rs.random_generic_projector(n, rng)
    assert la.is_projector(la.kron(p, q))
    assert la.is_projector(la.kron(p, np.eye(2)))


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_join_and_meet_bounds(seed):
    rng = np.random.default_rng(seed)
    p = rs.random_generic_projector(3, rng)
    q = rs.random_generic_projector(3, rng)
    j, m = la.join(p, q), la.meet(p, q)
    assert la.is_projector(j) and la.is_projector(m)
    assert la.leq_projector(p, j) and la.leq_projector(q, j)
    assert la.leq_projector(m, p) and la.leq_projector(m, q)
    # dimension formula for subspaces
    assert la.rank(j) + la.rank(m) == la.rank(p) + la.rank(q)


# exact arithmetic


def test_qcomplex_arithmetic():
    a = la.QComplex(Fraction(1, 2), Fraction(1, 3))
    b = la.QComplex(2, -1)
    assert a + b == la.QComplex(Fraction(5, 2), Fraction(-2, 3))
    assert a * b == la.QComplex(Fraction(4, 3), Fraction(1, 6))
    assert (a / b) * b == a
    assert a.conjugate() == la.QComplex(Fraction(1, 2), Fraction(-1, 3))
    assert la.QComplex(1) == 1
    assert complex(a) == pytest.approx(0.5 + 1j / 3)


def test_rationalize():
    assert la.rationalize(0.5) == Fraction(1, 2)
    assert la.rationalize(-0.25) == Fraction(-1, 4)
    with pytest.raises(InexactValueError):
        la.rationalize(1 / np.sqrt(2))


def test_exact_projector_checks():
    half = Fraction(1, 2)
    px = la.to_exact(np.array([[0.5, 0.5], [0.5, 0.5]]))
    assert la.is_exact(px)
    assert la.is_projector(px)
    assert la.trace(px) == 1
    assert px[0, 1] == la.QComplex(half)
    # idempotency holds exactly, not just within tolerance
    sq = la.matmul(px, px)
    assert all(sq[i, j] == px[i, j] for i in range(2) for j in range(2))
    assert not la.is_projector(la.to_exact(np.array([[0.5, 0.5], [0.5, 0.51]])))


def test_exact_and_float_verdicts_agree():
    rng = np.random.default_rng(3)
    for _ in range(50):
        entries = rng.integers(-2, 3, size=(3, 3)) / 2
        m = entries + entries.T
        for f in (la.is_hermitian, la.is_projector, la.is_unitary):
            assert f(m) == f(la.to_exact(m))
