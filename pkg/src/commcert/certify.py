"""Constructive certification from maximal commutation.

The pair extraction follows the classic argument step by step:

1. Hoelder saturation with a full-rank state forces
   ``T_alpha = 2 (alpha^2 + 1) 1``.
2. ``[A0, A1] = i s (P+ - P-)`` with ``s = 4 alpha / (alpha^2 + 1)``.
3. ``A0`` swaps the two eigenspaces, so ``|e_j^1> = A0 |e_j^0>`` pairs a basis
   of ``P+`` with one of ``P-``; ``U0 |e_j^b> = |b>|j>``.
4. ``U0 A0 U0^dag = sx x Kx + sy x Ky`` with commuting ``Kx, Ky`` and
   ``Kx^2 + Ky^2 = 1``; a joint eigenbasis gives angles ``gamma_j`` and the
   controlled phase ``U1 = sum_j exp(i gamma_j sz / 2) x |j><j|``.
5. ``U_A = U0^dag U1^dag`` brings ``A0`` to ``sx x 1`` and ``A1`` to
   ``(cos theta sx + sin theta sy) x 1``.

Inputs are accepted up to a tolerance; residuals are reported rather than a
robustness guarantee.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
import scipy.linalg

from .bell import (
    BellRealization,
    BiasedCHSH,
    build_chsh_alpha,
    build_mabk,
    bell_value,
    certified_t_lower_bound,
    party_measures,
    quantum_classical_bounds,
    tested_parties,
    tradeoff_bound,
)
from .errors import DimensionError, ExtractionError, PreconditionError
from .linalg import (
    DEGENERACY_TOL,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    kron_list,
    matrix_modulus,
    matrix_to_json,
    op_norm,
    partial_trace,
    pauli_blocks,
    permute_subsystems,
    polar_unitary,
)
from .observables import (
    anticommutator,
    as_observable,
    as_state,
    commutator,
    effective_commutator,
    t_alpha_operator,
)

DEFAULT_TOL = 1e-8


def guarantee_bound(tol: float) -> float:
    """Operator-level tolerance implied by a scalar trace tolerance.

    Deviations from an exact optimum enter squared in the trace, so operator
    residuals are allowed to scale like ``sqrt(tol)``.
    """
    return 10 * math.sqrt(tol)


def theta_alpha(alpha: float) -> float:
    return math.acos((alpha**2 - 1) / (alpha**2 + 1))


def qubit_pair(theta: float) -> tuple[np.ndarray, np.ndarray]:
    """``(sx, cos(theta) sx + sin(theta) sy)``."""
    return SIGMA_X, math.cos(theta) * SIGMA_X + math.sin(theta) * SIGMA_Y


@dataclass(frozen=True, eq=False)
class CanonicalFormResult:
    unitary: np.ndarray
    theta: float
    theta_expected: float
    residuals: dict
    diagnostics: dict

    def to_json(self, include_unitary: bool = False) -> dict:
        doc = {
            "theta": self.theta,
            "theta_expected": self.theta_expected,
            "residuals": dict(self.residuals),
            "diagnostics": dict(self.diagnostics),
        }
        if include_unitary:
            doc["unitary"] = matrix_to_json(self.unitary)
        return doc


def _diagnostics(x0: np.ndarray, x1: np.ndarray, alpha: float) -> dict:
    d = x0.shape[0]
    eye = np.eye(d)
    s = 4 * alpha / (alpha**2 + 1)
    ac = anticommutator(x0, x1)
    return {
        "projectivity_defect_0": op_norm(x0 @ x0 - eye),
        "projectivity_defect_1": op_norm(x1 @ x1 - eye),
        "anticommutator_positivity_defect": max(0.0, -float(np.linalg.eigvalsh((ac + ac.conj().T) / 2)[0])),
        "commutator_modulus_defect": op_norm(matrix_modulus(commutator(x0, x1)) - s * eye),
    }


def extract_canonical_pair(
    a0: Any, a1: Any, rho: Any, alpha: float = 1.0, tol: float = DEFAULT_TOL
) -> CanonicalFormResult:
    """Find ``U_A`` with ``U_A^dag A0 U_A = sx x 1`` and ``U_A^dag A1 U_A = (cos t sx + sin t sy) x 1``.

    Parameters
    ----------
    a0, a1 : BinaryObservable or array
        The pair to bring into canonical form.
    rho : DensityMatrix or array
        Reduced state of the measured party; must be full rank.
    alpha : float
        Bias parameter; the target angle is ``arccos((alpha^2-1)/(alpha^2+1))``.
    tol : float
        Allowed shortfall of ``tr(T_alpha rho)`` from ``2 (alpha^2 + 1)``.
        Operator-level checks use :func:`guarantee_bound` of it.

    Raises
    ------
    PreconditionError
        Rank-deficient state, odd dimension, or a trace that is not near-maximal
        (including a near-maximal trace that does not come from ``T_alpha``
        being proportional to the identity).
    ExtractionError
        The construction completed but its residuals exceed the guarantee.
    """
    if alpha < 1:
        raise PreconditionError(f"alpha must be >= 1, got {alpha}")
    a0, a1, rho = as_observable(a0), as_observable(a1), as_state(rho)
    if not (a0.dim == a1.dim == rho.dim):
        raise DimensionError("observables and state act on different dimensions")
    d = a0.dim
    if d % 2:
        raise PreconditionError(f"dimension {d} is odd; the two commutator eigenspaces cannot have equal rank")
    if not rho.full_rank():
        raise PreconditionError(
            f"reduced state is rank-deficient (min eigenvalue {rho.min_eigenvalue:.3e}); "
            "observables are only determined on its support"
        )
    x0, x1 = a0.matrix, a1.matrix
    op_tol = guarantee_bound(tol)
    target = 2 * (alpha**2 + 1)
    t_op = t_alpha_operator(a0, a1, alpha)
    trace = float(np.real(np.trace(t_op @ rho.matrix)))
    if trace < target - tol:
        raise PreconditionError(
            f"tr(T_alpha rho) = {trace:.12g} is not within {tol:g} of the maximum {target:.12g}"
        )
    holder_defect = op_norm(t_op - target * np.eye(d))
    if holder_defect > op_tol:
        raise PreconditionError(
            f"T_alpha deviates from {target:.6g} * 1 by {holder_defect:.3e} despite a near-maximal trace"
        )

    # Commutator eigenspaces.
    s = 4 * alpha / (alpha**2 + 1)
    h = -1j * commutator(x0, x1) / s
    lam, vecs = np.linalg.eigh((h + h.conj().T) / 2)
    spread = float(np.max(np.abs(np.abs(lam) - 1)))
    if spread > op_tol:
        raise ExtractionError(f"commutator spectrum is not +-i*{s:.6g} (defect {spread:.3e})")
    plus = lam > 0
    m = int(plus.sum())
    if 2 * m != d:
        raise ExtractionError(f"commutator eigenspaces have ranks {m} and {d - m}")
    e0 = vecs[:, plus]
    e1 = x0 @ e0
    u0 = polar_unitary(np.hstack([e0, e1])).conj().T

    # Align each two-dimensional block.
    _, kx, ky, _ = pauli_blocks(u0 @ x0 @ u0.conj().T)
    _, q = scipy.linalg.schur(kx + 1j * ky, output="complex")
    cx = np.real(np.einsum("ij,ik,kj->j", q.conj(), kx, q))
    cy = np.real(np.einsum("ij,ik,kj->j", q.conj(), ky, q))
    gamma = np.mod(np.arctan2(cy, cx), 2 * np.pi)
    phase = np.exp(0.5j * gamma)
    u1 = scipy.linalg.block_diag((q * phase) @ q.conj().T, (q * phase.conj()) @ q.conj().T)
    ua = u0.conj().T @ u1.conj().T

    c0 = ua.conj().T @ x0 @ ua
    c1 = ua.conj().T @ x1 @ ua
    k0p, kxp, kyp, kzp = pauli_blocks(c1)
    theta_est = math.atan2(np.trace(kyp).real / m, np.trace(kxp).real / m)
    theta_exp = theta_alpha(alpha)
    eye_m = np.eye(m)
    t0, t1 = qubit_pair(theta_est)
    residuals = {
        "r0": op_norm(c0 - np.kron(t0, eye_m)),
        "r1": op_norm(c1 - np.kron(t1, eye_m)),
        "unitarity": op_norm(ua.conj().T @ ua - np.eye(d)),
    }
    diagnostics = _diagnostics(x0, x1, alpha)
    diagnostics.update(
        {
            "trace_gap": target - trace,
            "holder_defect": holder_defect,
            "commutator_spectrum_defect": spread,
            "kx_prime_defect": op_norm(kxp - math.cos(theta_exp) * eye_m),
            "ky_prime_defect": op_norm(kyp - math.sin(theta_exp) * eye_m),
            "state_min_eigenvalue": rho.min_eigenvalue,
        }
    )
    worst = max(residuals["r0"], residuals["r1"], abs(theta_est - theta_exp))
    if worst > op_tol:
        raise ExtractionError(f"canonical-form residual {worst:.3e} exceeds guarantee {op_tol:.1e}")
    theta = min(max(theta_est, 0.0), math.pi / 2)
    if theta <= 0:
        raise ExtractionError("extracted angle is zero: the observables commute")
    return CanonicalFormResult(ua, theta, theta_exp, residuals, diagnostics)


# ---------------------------------------------------- many observables


@dataclass(frozen=True, eq=False)
class AnticommutingCertificate:
    unitary: np.ndarray
    residuals: list[float]
    pairwise_t: np.ndarray
    upsilon: np.ndarray | None = None
    upsilon_projectivity_defect: float | None = None
    leakage: list[float] = field(default_factory=list)

    def to_json(self, include_unitary: bool = False) -> dict:
        doc = {
            "n": len(self.residuals),
            "residuals": list(self.residuals),
            "pairwise_t": self.pairwise_t.tolist(),
            "leakage": list(self.leakage),
            "upsilon": None if self.upsilon is None else matrix_to_json(self.upsilon),
            "upsilon_projectivity_defect": self.upsilon_projectivity_defect,
        }
        if include_unitary:
            doc["unitary"] = matrix_to_json(self.unitary)
        return doc


def anticommuting_form(j: int, n_qubits: int, rest: int) -> np.ndarray:
    """``sz^(floor(j/2)) x (sx if j even else sy) x 1`` padded to ``n_qubits`` qubits times ``rest``."""
    k = j // 2
    factors = [SIGMA_Z] * k + [SIGMA_X if j % 2 == 0 else SIGMA_Y]
    factors += [np.eye(2)] * (n_qubits - k - 1) + [np.eye(rest)]
    return kron_list(factors)


def _frame(mats: list[np.ndarray], rho: np.ndarray, tol: float, leakage: list[float]):
    d = rho.shape[0]
    if len(mats) == 0:
        return np.eye(d, dtype=complex), None
    if len(mats) == 1:
        return np.eye(d, dtype=complex), mats[0]
    pair = extract_canonical_pair(mats[0], mats[1], rho, 1.0, tol)
    u = pair.unitary
    m = d // 2
    rest = []
    for a in mats[2:]:
        k0, kx, ky, kz = pauli_blocks(u.conj().T @ a @ u)
        leakage.append(max(op_norm(k0), op_norm(kx), op_norm(ky)))
        rest.append((kz + kz.conj().T) / 2)
    sub = partial_trace(u.conj().T @ rho @ u, [2, m], [1])
    u_sub, ups = _frame(rest, sub, tol, leakage)
    return u @ np.kron(np.eye(2), u_sub), ups


def certify_n_anticommuting(
    observables: Sequence[Any], rho: Any, tol: float = DEFAULT_TOL
) -> AnticommutingCertificate:
    """Certify ``n`` pairwise maximally non-commuting observables.

    Requires ``tr(|[A_j, A_k]| rho) / 2 >= 1 - tol`` for all pairs. For even
    ``n`` the returned unitary maps ``A_j`` to the standard anticommuting
    family on ``n/2`` qubits (times identity); for odd ``n`` the last
    observable becomes ``sz^((n-1)/2) x Upsilon`` with ``Upsilon`` an
    unconstrained projective observable.
    """
    obs = [as_observable(a) for a in observables]
    rho = as_state(rho)
    n = len(obs)
    if n < 2:
        raise PreconditionError("need at least two observables")
    if len({o.dim for o in obs} | {rho.dim}) != 1:
        raise DimensionError("observables and state act on different dimensions")
    d = rho.dim
    q = n // 2
    if d % (2**q):
        raise DimensionError(f"dimension {d} is not divisible by 2^{q}")
    if not rho.full_rank():
        raise PreconditionError(f"state is rank-deficient (min eigenvalue {rho.min_eigenvalue:.3e})")
    ts = np.eye(n)
    for j in range(n):
        for k in range(j + 1, n):
            ts[j, k] = ts[k, j] = effective_commutator(obs[j], obs[k], rho, clamp=False)
            if ts[j, k] < 1 - tol:
                raise PreconditionError(f"pair ({j}, {k}) has effective commutator {ts[j, k]:.12g} < 1 - tol")

    leakage: list[float] = []
    u, ups = _frame([o.matrix for o in obs], rho.matrix, tol, leakage)
    rest = d // 2**q
    residuals = []
    for j, o in enumerate(obs):
        rotated = u.conj().T @ o.matrix @ u
        if j == n - 1 and n % 2:
            target = np.kron(kron_list([SIGMA_Z] * q) if q else np.eye(1), ups)
        else:
            target = anticommuting_form(j, q, rest)
        residuals.append(op_norm(rotated - target))
    op_tol = guarantee_bound(tol)
    if max(residuals) > op_tol:
        raise ExtractionError(f"anticommuting-form residual {max(residuals):.3e} exceeds {op_tol:.1e}")
    ups_defect = None
    if ups is not None:
        ups_defect = op_norm(ups @ ups - np.eye(ups.shape[0]))
    return AnticommutingCertificate(u, residuals, ts, ups, ups_defect, leakage)


# ------------------------------------------------------------- rigidity


@dataclass(frozen=True, eq=False)
class RigidityReport:
    beta: float
    top_eigenvalue: float
    degeneracy: int
    extracted_state_overlap: float
    structure: str
    structure_defect: float
    operator_residual: float
    reference_state: np.ndarray
    canonical_forms: list[CanonicalFormResult]

    def to_json(self, include_unitaries: bool = False) -> dict:
        return {
            "beta": self.beta,
            "top_eigenvalue": self.top_eigenvalue,
            "degeneracy": self.degeneracy,
            "extracted_state_overlap": self.extracted_state_overlap,
            "structure": self.structure,
            "structure_defect": self.structure_defect,
            "operator_residual": self.operator_residual,
            "canonical_forms": [c.to_json(include_unitaries) for c in self.canonical_forms],
        }


def ideal_operator(realization: BellRealization, thetas: Sequence[float]) -> np.ndarray:
    scen = realization.scenario
    if isinstance(scen, BiasedCHSH):
        a0, a1 = qubit_pair(thetas[0])
        return build_chsh_alpha(a0, a1, SIGMA_X, SIGMA_Y, scen.alpha)
    return build_mabk([(SIGMA_X, SIGMA_Y)] * scen.n)


def check_rigidity(realization: BellRealization, tol: float = DEFAULT_TOL) -> RigidityReport:
    """Rotate a maximally violating realization into canonical frames and identify its state.

    Each party's pair is extracted (Alice at the scenario's alpha, every other
    pair at alpha = 1), the Bell operator is conjugated by the product of the
    extracted unitaries and compared with the ideal qubit operator tensored
    with identity on the padding registers. The state, rotated and with the
    padding traced out, is then overlapped with the ideal operator's top
    eigenvector: maximally entangled for CHSH, GHZ for MABK.
    """
    scen = realization.scenario
    w = realization.bell_operator()
    beta = bell_value(w, realization.state)
    _, beta_q = quantum_classical_bounds(scen)
    if beta < beta_q - tol:
        raise PreconditionError(f"Bell value {beta:.12g} is not within {tol:g} of the quantum maximum {beta_q:.12g}")
    # A Bell-value shortfall eps shows up in each party's trace as at most ~2 beta_Q eps.
    ext_tol = tol * (8 * beta_q + 1)
    forms = []
    for k, (a0, a1) in enumerate(realization.observables):
        alpha = scen.alpha if isinstance(scen, BiasedCHSH) and k == 0 else 1.0
        forms.append(extract_canonical_pair(a0, a1, realization.reduced_state(k), alpha, ext_tol))

    n = scen.n_parties
    pads = [d // 2 for d in scen.party_dims]
    u = kron_list(f.unitary for f in forms)
    sub_dims = [x for m in pads for x in (2, m)]
    order = [2 * k for k in range(n)] + [2 * k + 1 for k in range(n)]
    w_rot = permute_subsystems(u.conj().T @ w @ u, sub_dims, order)
    w_ideal = ideal_operator(realization, [f.theta for f in forms])
    pad_total = math.prod(pads)
    residual = op_norm(w_rot - np.kron(w_ideal, np.eye(pad_total)))
    if residual > guarantee_bound(ext_tol) * max(1.0, beta_q):
        raise ExtractionError(f"rotated Bell operator differs from the ideal one by {residual:.3e}")

    lam, vecs = np.linalg.eigh(w_ideal)
    top = float(lam[-1])
    degeneracy = int(np.sum(lam >= top - DEGENERACY_TOL))
    psi = vecs[:, -1]

    rho_rot = permute_subsystems(u.conj().T @ realization.state.matrix @ u, sub_dims, order)
    rho_q = partial_trace(rho_rot, [2] * n + pads, range(n))
    overlap = float(np.real(psi.conj() @ rho_q @ psi))
    overlap = min(max(overlap, 0.0), 1.0)

    if isinstance(scen, BiasedCHSH):
        structure = "maximally_entangled"
        red = partial_trace(np.outer(psi, psi.conj()), [2, 2], [0])
        defect = op_norm(red - np.eye(2) / 2)
    else:
        structure = f"GHZ({n})"
        defect = 1 - (abs(psi[0]) + abs(psi[-1])) ** 2 / 2
    return RigidityReport(beta, top, degeneracy, overlap, structure, float(defect), residual, psi, forms)


# ------------------------------------------------------------- reports


@dataclass(frozen=True, eq=False)
class CertificationReport:
    scenario: dict
    beta: float
    beta_local: float
    beta_quantum: float
    t_values: list[float]
    full_rank: list[bool]
    tradeoff: list[dict]
    certified_t_lower_bound: float
    maximal: bool
    rigidity: RigidityReport | None
    error: str | None
    passed: bool

    def to_json(self, include_unitaries: bool = False) -> dict:
        return {
            "scenario": self.scenario,
            "beta": self.beta,
            "beta_local": self.beta_local,
            "beta_quantum": self.beta_quantum,
            "t_values": list(self.t_values),
            "full_rank": list(self.full_rank),
            "tradeoff": list(self.tradeoff),
            "certified_t_lower_bound": self.certified_t_lower_bound,
            "maximal": self.maximal,
            "rigidity": None if self.rigidity is None else self.rigidity.to_json(include_unitaries),
            "error": self.error,
            "passed": self.passed,
        }


def certify_realization(realization: BellRealization, tol: float = DEFAULT_TOL) -> CertificationReport:
    """Full certification report for one realization.

    Always computes the Bell value, per-party incompatibility measures and the
    trade-off comparisons. When the violation is maximal within ``tol`` it
    additionally runs canonical-form extraction and the rigidity check;
    precondition failures there (e.g. a rank-deficient reduced state)
    propagate, residual failures are recorded and mark the report failed.
    """
    scen = realization.scenario
    beta = realization.bell_value()
    beta_l, beta_q = quantum_classical_bounds(scen)
    ts = party_measures(realization)
    ranks = [realization.reduced_state(k).full_rank() for k in range(scen.n_parties)]
    tradeoff = []
    for k in tested_parties(scen):
        bound = tradeoff_bound(scen, min(ts[k], 1.0))
        tradeoff.append({"party": k, "t": ts[k], "bound": bound, "passed": beta <= bound + tol})
    maximal = beta >= beta_q - tol
    rigidity, error = None, None
    if maximal:
        try:
            rigidity = check_rigidity(realization, tol)
        except ExtractionError as exc:
            error = str(exc)
    passed = all(r["passed"] for r in tradeoff) and error is None
    return CertificationReport(
        scen.to_json(),
        beta,
        beta_l,
        beta_q,
        ts,
        ranks,
        tradeoff,
        certified_t_lower_bound(scen, beta),
        maximal,
        rigidity,
        error,
        passed,
    )
