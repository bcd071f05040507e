import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from commcert.errors import DimensionError, InvalidOperatorError
from commcert.observables import (
    BinaryObservable,
    DensityMatrix,
    com_anticom_gap,
    effective_commutator,
    haar_unitary,
    random_binary_observable,
    random_density_matrix,
    t_alpha,
)

from conftest import I2, X, Y


def rotated(gamma):
    return math.cos(gamma) * X + math.sin(gamma) * Y


def test_binary_observable_validation_and_flag():
    assert BinaryObservable(X).projective
    assert not BinaryObservable(0.5 * X).projective
    assert BinaryObservable(np.diag([1.0, 1 - 1e-9])).projective
    with pytest.raises(InvalidOperatorError):
        BinaryObservable(2 * X)
    with pytest.raises(InvalidOperatorError):
        BinaryObservable(np.array([[0, 1], [0, 0]]))
    a = BinaryObservable(X)
    with pytest.raises(ValueError):
        a.matrix[0, 0] = 1


def test_observable_json_roundtrip():
    a = random_binary_observable(3, False, 9)
    b = BinaryObservable.from_json(a.to_json())
    assert np.array_equal(a.matrix, b.matrix)
    assert a.to_json()["projective"] is False


def test_density_matrix_checks():
    assert DensityMatrix.maximally_mixed(3).full_rank()
    assert not DensityMatrix.pure([1, 0]).full_rank()
    with pytest.raises(InvalidOperatorError):
        DensityMatrix(np.diag([1.5, -0.5]))
    with pytest.raises(InvalidOperatorError):
        DensityMatrix(np.eye(2))
    r = random_density_matrix(4, 1, rank=2)
    assert not r.full_rank()
    assert np.array_equal(DensityMatrix.from_json(r.to_json()).matrix, r.matrix)


def test_effective_commutator_examples():
    mixed = DensityMatrix.maximally_mixed(2)
    assert effective_commutator(X, Y, mixed) == pytest.approx(1, abs=1e-14)
    for rho in (mixed, DensityMatrix.pure([1, 1j])):
        assert effective_commutator(X, X, rho) == pytest.approx(0, abs=1e-14)
        assert effective_commutator(X, rotated(math.pi / 6), rho) == pytest.approx(0.5, abs=1e-12)


def test_effective_commutator_dimension_mismatch():
    with pytest.raises(DimensionError):
        effective_commutator(X, Y, DensityMatrix.maximally_mixed(3))


def test_t_alpha_examples():
    mixed = DensityMatrix.maximally_mixed(2)
    assert t_alpha(X, Y, mixed, 1.0) == pytest.approx(1)
    assert t_alpha(X, X, mixed, 2.0) == pytest.approx(0, abs=1e-14)
    with pytest.raises(ValueError):
        t_alpha(X, Y, mixed, 0.5)


@pytest.mark.parametrize("alpha", [1.0, 1.5, 2.0, math.sqrt(3), 5.0])
@pytest.mark.parametrize("gamma", np.linspace(0, math.pi / 2, 7))
def test_t_alpha_tight_family(alpha, gamma):
    rho = random_density_matrix(2, 17)
    want = (alpha**2 - 1) / 2 * math.cos(gamma) + alpha * math.sin(gamma) - (alpha**2 - 1) / 2
    assert t_alpha(X, rotated(gamma), rho, alpha) == pytest.approx(want, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(d=st.integers(2, 4), seed=st.integers(0, 2**63))
def test_t_alpha_one_equals_effective_commutator(d, seed):
    a0 = random_binary_observable(d, False, seed)
    a1 = random_binary_observable(d, True, seed + 1)
    rho = random_density_matrix(d, seed + 2)
    assert t_alpha(a0, a1, rho, 1.0) == pytest.approx(effective_commutator(a0, a1, rho, clamp=False), abs=1e-12)


def test_com_anticom_gap_examples():
    np.testing.assert_allclose(com_anticom_gap(X, Y), np.zeros((2, 2)), atol=1e-14)
    gap = com_anticom_gap(0.5 * X, Y)
    lam = np.linalg.eigvalsh(gap)
    assert lam[0] > 1e-3


@pytest.mark.parametrize("d", [2, 4, 8])
def test_com_anticom_gap_psd_sweep(d):
    for s in range(100):
        a0 = random_binary_observable(d, False, 1000 * d + 2 * s)
        a1 = random_binary_observable(d, s % 2 == 0, 1000 * d + 2 * s + 1)
        assert np.linalg.eigvalsh(com_anticom_gap(a0, a1))[0] >= -1e-10


def test_random_observable_contract():
    a, b = random_binary_observable(2, True, 5), random_binary_observable(2, True, 5)
    assert np.array_equal(a.matrix, b.matrix)
    p = random_binary_observable(6, True, 6).matrix
    assert np.max(np.abs(p @ p - np.eye(6))) < 1e-10
    lam = np.linalg.eigvalsh(random_binary_observable(6, False, 7).matrix)
    assert lam[0] >= -1 and lam[-1] <= 1
    with pytest.raises(ValueError):
        random_binary_observable(0, True, 1)


def test_haar_unitary_is_unitary_and_seeded():
    u = haar_unitary(5, 3)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(5), atol=1e-13)
    assert np.array_equal(u, haar_unitary(5, 3))
    assert not np.allclose(u, haar_unitary(5, 4))


@settings(max_examples=30, deadline=None)
@given(pad=st.integers(1, 3), seed=st.integers(0, 2**63))
def test_effective_commutator_invariance(pad, seed):
    a0 = random_binary_observable(2, False, seed)
    a1 = random_binary_observable(2, False, seed + 1)
    rho = random_density_matrix(2, seed + 2)
    sigma = random_density_matrix(pad, seed + 3).matrix
    v = haar_unitary(2 * pad, seed + 4)
    conj = lambda m: v @ m @ v.conj().T
    t0 = effective_commutator(a0, a1, rho)
    big = [conj(np.kron(a.matrix, np.eye(pad))) for a in (a0, a1)]
    t1 = effective_commutator(*big, conj(np.kron(rho.matrix, sigma)))
    assert t1 == pytest.approx(t0, abs=1e-9)


def test_t_extremes_on_full_rank_state():
    rho = random_density_matrix(4, 8)
    a = np.kron(X, I2)
    assert effective_commutator(a, np.kron(I2, X), rho) == pytest.approx(0, abs=1e-12)
    assert effective_commutator(a, np.kron(Y, I2), rho) == pytest.approx(1, abs=1e-12)
    assert effective_commutator(a, np.kron(rotated(1.0), I2), rho) < 1 - 1e-3


@settings(max_examples=40, deadline=None)
@given(d=st.integers(1, 5), seed=st.integers(0, 2**63))
def test_effective_commutator_range(d, seed):
    t = effective_commutator(
        random_binary_observable(d, False, seed),
        random_binary_observable(d, False, seed + 1),
        random_density_matrix(d, seed + 2),
    )
    assert 0 <= t <= 1
