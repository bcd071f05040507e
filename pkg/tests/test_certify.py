import math

import numpy as np
import pytest

from commcert.bell import MABK, BellRealization, BiasedCHSH, build_chsh_alpha, build_mabk
from commcert.certify import (
    certify_n_anticommuting,
    certify_realization,
    check_rigidity,
    extract_canonical_pair,
    qubit_pair,
    theta_alpha,
)
from commcert.errors import DimensionError, ExtractionError, PreconditionError
from commcert.linalg import op_norm
from commcert.observables import (
    DensityMatrix,
    anticommutator,
    commutator,
    haar_unitary,
    random_density_matrix,
)

from conftest import I2, SQ2, X, Y, Z, chsh_optimal_observables, top_vector


def embed(theta, pad, seed):
    """Canonical pair at angle theta, padded with 1_pad and conjugated by a Haar unitary."""
    v = haar_unitary(2 * pad, seed)
    a0, a1 = qubit_pair(theta)
    conj = lambda m: v @ np.kron(m, np.eye(pad)) @ v.conj().T
    return conj(a0), conj(a1), random_density_matrix(2 * pad, seed + 1)


def check_form(res, a0, a1, tol=1e-8):
    u = res.unitary
    d = u.shape[0]
    assert op_norm(u.conj().T @ u - np.eye(d)) < 1e-9
    c0, c1 = qubit_pair(res.theta)
    m = d // 2
    assert op_norm(u.conj().T @ a0 @ u - np.kron(c0, np.eye(m))) < tol
    assert op_norm(u.conj().T @ a1 @ u - np.kron(c1, np.eye(m))) < tol


def test_extract_already_canonical():
    res = extract_canonical_pair(X, Y, DensityMatrix.maximally_mixed(2))
    assert res.theta == pytest.approx(math.pi / 2, abs=1e-12)
    assert max(res.residuals.values()) < 1e-12
    check_form(res, X, Y)


def test_extract_sqrt3_padded():
    a0, a1, rho = embed(math.pi / 3, 2, 42)
    res = extract_canonical_pair(a0, a1, rho, alpha=math.sqrt(3))
    assert res.theta == pytest.approx(math.pi / 3, abs=1e-8)
    assert res.residuals["r0"] < 1e-8 and res.residuals["r1"] < 1e-8
    check_form(res, a0, a1)


@pytest.mark.parametrize("alpha", [1.0, 1.3, 2.0, 5.0])
@pytest.mark.parametrize("pad", [1, 2, 3])
def test_extract_roundtrip(alpha, pad):
    th = theta_alpha(alpha)
    a0, a1, rho = embed(th, pad, int(alpha * 100) + pad)
    res = extract_canonical_pair(a0, a1, rho, alpha)
    assert res.theta == pytest.approx(th, abs=1e-8)
    check_form(res, a0, a1)
    assert res.diagnostics["projectivity_defect_0"] < 1e-12


def test_extract_rejections():
    mixed = DensityMatrix.maximally_mixed(2)
    with pytest.raises(PreconditionError, match=r"tr\(T_alpha"):
        extract_canonical_pair(X, X, mixed)
    with pytest.raises(PreconditionError, match="rank"):
        extract_canonical_pair(X, Y, DensityMatrix.pure([1, 0]))
    with pytest.raises(PreconditionError, match="odd"):
        extract_canonical_pair(np.diag([1, -1, 1]), np.diag([1, 1, -1]), DensityMatrix.maximally_mixed(3))


def test_extract_rejects_holder_violation():
    # maximal on almost all of the state, commuting on a tiny-weight block:
    # the trace condition holds within tol but T_alpha is far from 2(alpha^2+1) 1
    a0 = np.kron(np.diag([1, 0]), X) + np.kron(np.diag([0, 1]), X)
    a1 = np.kron(np.diag([1, 0]), Y) + np.kron(np.diag([0, 1]), X)
    w = 1e-9
    rho = np.kron(np.diag([1 - w, w]), I2 / 2)
    with pytest.raises(PreconditionError, match="deviates from"):
        extract_canonical_pair(a0, a1, rho, tol=1e-8)


def test_anticommutator_identity_for_projective_pairs():
    for s in range(20):
        a0, a1, _ = embed(0.2 + s * 0.06, 2, s)
        assert op_norm(anticommutator(a0, commutator(a0, a1))) < 1e-12


def test_canonical_result_json():
    res = extract_canonical_pair(X, Y, DensityMatrix.maximally_mixed(2))
    doc = res.to_json()
    assert "unitary" not in doc and "unitary" in res.to_json(True)


# --------------------------------------------------- many observables


def test_three_on_a_qubit():
    cert = certify_n_anticommuting([X, Y, Z], DensityMatrix.maximally_mixed(2))
    assert cert.upsilon.shape == (1, 1)
    assert cert.upsilon_projectivity_defect < 1e-10
    assert max(cert.residuals) < 1e-8


def test_three_on_two_qubits_upsilon_sigma_x():
    obs = [np.kron(X, I2), np.kron(Y, I2), np.kron(Z, X)]
    cert = certify_n_anticommuting(obs, DensityMatrix.maximally_mixed(4))
    assert cert.upsilon_projectivity_defect < 1e-10
    # Upsilon is unitarily equivalent to sx: traceless, spectrum {-1, 1}
    np.testing.assert_allclose(np.linalg.eigvalsh(cert.upsilon), [-1, 1], atol=1e-10)
    assert op_norm(cert.upsilon - X) < 1e-10


def test_four_on_two_qubits():
    obs = [np.kron(X, I2), np.kron(Y, I2), np.kron(Z, X), np.kron(Z, Y)]
    cert = certify_n_anticommuting(obs, DensityMatrix.maximally_mixed(4))
    assert cert.upsilon is None
    assert max(cert.residuals) < 1e-8
    assert max(cert.leakage) < 1e-8


def test_anticommuting_rejections():
    mixed = DensityMatrix.maximally_mixed(2)
    with pytest.raises(PreconditionError):
        certify_n_anticommuting([X, X, Z], mixed)
    with pytest.raises(DimensionError):
        certify_n_anticommuting([X, Y, Z, X], mixed)
    with pytest.raises(PreconditionError):
        certify_n_anticommuting([X, Y, Z], DensityMatrix.pure([1, 0]))


# ------------------------------------------------------------ rigidity


def test_rigidity_chsh(chsh_optimal_realization):
    rep = check_rigidity(chsh_optimal_realization)
    assert rep.top_eigenvalue == pytest.approx(2 * SQ2)
    assert rep.degeneracy == 1
    assert rep.extracted_state_overlap >= 1 - 1e-8
    assert rep.structure == "maximally_entangled"


def test_rigidity_mabk3_ghz():
    obs = [(Y, -X)] * 3
    ghz = np.zeros(8, complex)
    ghz[0] = ghz[7] = 1 / SQ2
    rep = check_rigidity(BellRealization(MABK(3), obs, DensityMatrix.pure(ghz)))
    assert rep.top_eigenvalue == pytest.approx(2)
    assert rep.extracted_state_overlap >= 1 - 1e-8
    assert rep.structure == "GHZ(3)" and rep.structure_defect < 1e-10


def padded_chsh(seed, pad=2):
    """U (Phi x sigma) U^dag with the ideal qubit strategy on the first factor of each party."""
    (a0, a1), (b0, b1) = chsh_optimal_observables()
    w = build_chsh_alpha(a0, a1, b0, b1)
    phi = top_vector(w)
    sigma = random_density_matrix(pad * pad, seed).matrix
    # qubit A, qubit B, pad A', pad B' -> reorder to (A A') (B B')
    state = np.kron(np.outer(phi, phi.conj()), sigma)
    dims = [2, 2, pad, pad]
    t = state.reshape(dims * 2).transpose([0, 2, 1, 3, 4, 6, 5, 7]).reshape(4 * pad * pad, -1)
    ua, ub = haar_unitary(2 * pad, seed + 1), haar_unitary(2 * pad, seed + 2)
    u = np.kron(ua, ub)
    obs = [
        tuple(ua @ np.kron(m, np.eye(pad)) @ ua.conj().T for m in (a0, a1)),
        tuple(ub @ np.kron(m, np.eye(pad)) @ ub.conj().T for m in (b0, b1)),
    ]
    return BellRealization(BiasedCHSH(1.0, (2 * pad, 2 * pad)), obs, u @ t @ u.conj().T)


def test_rigidity_padded_chsh():
    rep = check_rigidity(padded_chsh(3))
    assert rep.extracted_state_overlap >= 1 - 1e-8


def test_rigidity_biased_chsh():
    alpha = 1.5
    a0, a1 = qubit_pair(theta_alpha(alpha))
    w = build_chsh_alpha(a0, a1, X, Y, alpha)
    r = BellRealization(BiasedCHSH(alpha), [(a0, a1), (X, Y)], DensityMatrix.pure(top_vector(w)))
    rep = check_rigidity(r)
    assert rep.top_eigenvalue == pytest.approx(2 * math.sqrt(alpha**2 + 1))
    assert rep.extracted_state_overlap >= 1 - 1e-8


def test_rigidity_requires_maximal_violation():
    r = BellRealization(BiasedCHSH(1.0), [(X, X), (X, Y)], DensityMatrix.maximally_mixed(4))
    with pytest.raises(PreconditionError):
        check_rigidity(r)


# ------------------------------------------------------------- reports


def test_certify_report_maximal(chsh_optimal_realization):
    rep = certify_realization(chsh_optimal_realization)
    assert rep.passed and rep.maximal
    assert rep.rigidity is not None
    assert rep.t_values == pytest.approx([1, 1])
    assert rep.certified_t_lower_bound == pytest.approx(1)
    doc = rep.to_json()
    assert doc["rigidity"]["canonical_forms"][0]["theta"] == pytest.approx(math.pi / 2)


def test_certify_report_nonmaximal():
    w = build_mabk([(X, Y), (X, X), (X, Y)])
    r = BellRealization(MABK(3), [(X, Y), (X, X), (X, Y)], DensityMatrix.pure(top_vector(w)))
    rep = certify_realization(r)
    assert not rep.maximal and rep.rigidity is None
    assert rep.passed
    assert rep.beta == pytest.approx(SQ2)
    assert rep.t_values[1] == pytest.approx(0, abs=1e-12)
