"""Bell scenarios, operators, and the squared-operator inequalities.

Two families are supported:

* biased CHSH, ``W_alpha = alpha (A0 + A1) x B0 + (A0 - A1) x B1`` for
  ``alpha >= 1`` (plain CHSH at ``alpha = 1``);
* MABK, built by the recursion
  ``W_n = 1/2 W_{n-1} x (A0 + A1) + 1/2 W'_{n-1} x (A0 - A1)`` with
  ``W_1 = A0`` and primes denoting ``A0 <-> A1`` at every party.

The biased-CHSH form is fixed by its square: expanding it must give
``alpha^2 (A0^2 + A1^2 + {A0, A1}) x B0^2 + (A0^2 + A1^2 - {A0, A1}) x B1^2
+ alpha (A0^2 - A1^2) x {B0, B1} - alpha [A0, A1] x [B0, B1]``, and no other
placement of ``alpha`` does.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Any, Sequence, Union

import numpy as np

from .errors import DimensionError, InvalidOperatorError, PreconditionError, SchemaError
from .linalg import (
    PSD_TOL,
    as_hermitian,
    kron_list,
    matrix_modulus,
    bottom_eigpair,
)
from .observables import (
    BinaryObservable,
    DensityMatrix,
    as_observable,
    as_state,
    commutator,
    effective_commutator,
    t_alpha,
    t_alpha_operator,
)

MAX_MABK_PARTIES = 10
IMAG_TOL = 1e-10


@dataclass(frozen=True)
class BiasedCHSH:
    alpha: float = 1.0
    party_dims: tuple[int, ...] = (2, 2)

    def __post_init__(self):
        if not math.isfinite(self.alpha) or self.alpha < 1:
            raise PreconditionError(f"alpha must be a finite number >= 1, got {self.alpha}")
        object.__setattr__(self, "party_dims", tuple(int(d) for d in self.party_dims))
        if len(self.party_dims) != 2:
            raise DimensionError("biased CHSH has exactly two parties")
        if any(d < 2 for d in self.party_dims):
            raise DimensionError(f"party dimensions must be >= 2, got {self.party_dims}")

    family = "biased_chsh"

    @property
    def n_parties(self) -> int:
        return 2

    def to_json(self) -> dict:
        return {"family": self.family, "alpha": float(self.alpha), "party_dims": list(self.party_dims)}


@dataclass(frozen=True)
class MABK:
    n: int = 3
    party_dims: tuple[int, ...] | None = None

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 2:
            raise PreconditionError(f"MABK needs an integer n >= 2, got {self.n}")
        dims = (2,) * self.n if self.party_dims is None else tuple(int(d) for d in self.party_dims)
        if len(dims) != self.n:
            raise DimensionError(f"MABK({self.n}) needs {self.n} party dimensions, got {len(dims)}")
        if any(d < 2 for d in dims):
            raise DimensionError(f"party dimensions must be >= 2, got {dims}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "party_dims", dims)

    family = "mabk"

    @property
    def n_parties(self) -> int:
        return self.n

    def to_json(self) -> dict:
        return {"family": self.family, "n": self.n, "party_dims": list(self.party_dims)}


BellScenario = Union[BiasedCHSH, MABK]


def scenario_from_json(doc: Any, party_dims: Sequence[int] | None = None) -> BellScenario:
    """Parse ``{"family": "biased_chsh", "alpha": a}`` or ``{"family": "mabk", "n": n}``.

    An explicit ``party_dims`` argument overrides the document's own key.
    """
    if not isinstance(doc, dict) or "family" not in doc:
        raise SchemaError("scenario must be an object with a 'family' key")
    dims = party_dims if party_dims is not None else doc.get("party_dims")
    if dims is not None and (
        not isinstance(dims, (list, tuple)) or not all(isinstance(d, int) for d in dims)
    ):
        raise SchemaError("'party_dims' must be a list of integers")
    fam = doc["family"]
    if fam == "biased_chsh":
        alpha = doc.get("alpha", 1.0)
        if isinstance(alpha, bool) or not isinstance(alpha, (int, float)):
            raise SchemaError("'alpha' must be a number")
        return BiasedCHSH(float(alpha), tuple(dims) if dims is not None else (2, 2))
    if fam == "mabk":
        n = doc.get("n")
        if isinstance(n, bool) or not isinstance(n, int):
            raise SchemaError("'n' must be an integer")
        return MABK(n, tuple(dims) if dims is not None else None)
    raise SchemaError(f"unknown scenario family {fam!r}")


def quantum_classical_bounds(scenario: BellScenario) -> tuple[float, float]:
    """Local-realistic and quantum maxima ``(beta_L, beta_Q)``."""
    if isinstance(scenario, BiasedCHSH):
        a = scenario.alpha
        return 2 * a, 2 * math.sqrt(a * a + 1)
    return 1.0, math.sqrt(2.0 ** (scenario.n - 1))


def tradeoff_bound(scenario: BellScenario, t: float) -> float:
    """Largest Bell value compatible with incompatibility ``t`` of the tested party.

    Biased CHSH: ``2 sqrt(alpha^2 + t_alpha)``. MABK: ``sqrt(2^(n-2) (1 + t_k))``.
    """
    if isinstance(scenario, BiasedCHSH):
        rad = scenario.alpha**2 + t
        scale = 4.0
    else:
        rad = 1 + t
        scale = 2.0 ** (scenario.n - 2)
    if rad < 0:
        raise PreconditionError(f"trade-off radicand is negative for t = {t}")
    return math.sqrt(scale * rad)


def certified_t_lower_bound(scenario: BellScenario, beta: float) -> float:
    """Invert the trade-off: the least incompatibility consistent with observing ``beta``."""
    if isinstance(scenario, BiasedCHSH):
        return beta * beta / 4 - scenario.alpha**2
    return beta * beta / 2.0 ** (scenario.n - 2) - 1


# ---------------------------------------------------------------- builders


def _pair(p) -> tuple[np.ndarray, np.ndarray]:
    if len(p) != 2:
        raise DimensionError("each party needs exactly two observables")
    a0, a1 = as_observable(p[0]), as_observable(p[1])
    if a0.dim != a1.dim:
        raise DimensionError("a party's two observables act on different dimensions")
    return a0.matrix, a1.matrix


def build_chsh_alpha(a0: Any, a1: Any, b0: Any, b1: Any, alpha: float = 1.0) -> np.ndarray:
    if alpha < 1:
        raise PreconditionError(f"alpha must be >= 1, got {alpha}")
    x0, x1 = _pair((a0, a1))
    y0, y1 = _pair((b0, b1))
    w = alpha * np.kron(x0 + x1, y0) + np.kron(x0 - x1, y1)
    return (w + w.conj().T) / 2


def _mabk_pair(pairs: Sequence[tuple[np.ndarray, np.ndarray]]) -> tuple[np.ndarray, np.ndarray]:
    w, wp = pairs[0]
    for a0, a1 in pairs[1:]:
        w, wp = (
            0.5 * np.kron(w, a0 + a1) + 0.5 * np.kron(wp, a0 - a1),
            0.5 * np.kron(wp, a1 + a0) + 0.5 * np.kron(w, a1 - a0),
        )
    return w, wp


def build_mabk(observables: Sequence[Sequence[Any]]) -> np.ndarray:
    """MABK operator for per-party pairs ``[(A0^1, A1^1), ..., (A0^n, A1^n)]``."""
    if len(observables) == 0:
        raise DimensionError("MABK needs at least one party")
    w, _ = _mabk_pair([_pair(p) for p in observables])
    return (w + w.conj().T) / 2


def build_mabk_primed(observables: Sequence[Sequence[Any]]) -> np.ndarray:
    """The MABK operator with ``A0 <-> A1`` exchanged at every party."""
    if len(observables) == 0:
        raise DimensionError("MABK needs at least one party")
    _, wp = _mabk_pair([_pair(p) for p in observables])
    return (wp + wp.conj().T) / 2


def coefficient_tensor(scenario: BellScenario) -> np.ndarray:
    """Coefficients ``c[s_1, ..., s_n]`` with ``W = sum_s c_s A^1_{s_1} x ... x A^n_{s_n}``."""
    if isinstance(scenario, BiasedCHSH):
        a = scenario.alpha
        return np.array([[a, 1.0], [a, -1.0]])
    c, cp = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    plus, minus = np.array([1.0, 1.0]), np.array([1.0, -1.0])
    for _ in range(scenario.n - 1):
        c, cp = (
            0.5 * np.multiply.outer(c, plus) + 0.5 * np.multiply.outer(cp, minus),
            0.5 * np.multiply.outer(cp, plus) + 0.5 * np.multiply.outer(c, -minus),
        )
    return c


def build_from_coefficients(coeffs: np.ndarray, observables: Sequence[Sequence[Any]]) -> np.ndarray:
    """Expand a full-correlator coefficient tensor against per-party observable pairs."""
    pairs = [_pair(p) for p in observables]
    if coeffs.shape != (2,) * len(pairs):
        raise DimensionError(f"coefficient tensor {coeffs.shape} does not match {len(pairs)} parties")
    d = math.prod(p[0].shape[0] for p in pairs)
    w = np.zeros((d, d), dtype=complex)
    for s in itertools.product((0, 1), repeat=len(pairs)):
        if coeffs[s] != 0:
            w += coeffs[s] * kron_list(pairs[k][s[k]] for k in range(len(pairs)))
    return (w + w.conj().T) / 2


def bell_value(w: Any, rho: Any) -> float:
    w = as_hermitian(w)
    rho = as_state(rho)
    if w.shape[0] != rho.dim:
        raise DimensionError(f"operator dimension {w.shape[0]} != state dimension {rho.dim}")
    z = np.trace(w @ rho.matrix)
    if abs(z.imag) > IMAG_TOL:
        raise InvalidOperatorError(f"Bell value has imaginary part {z.imag:.3e}")
    return float(z.real)


# ----------------------------------------------------------- realizations


@dataclass(frozen=True, eq=False)
class BellRealization:
    scenario: BellScenario
    observables: tuple[tuple[BinaryObservable, BinaryObservable], ...]
    state: DensityMatrix

    def __post_init__(self):
        obs = tuple((as_observable(p[0]), as_observable(p[1])) for p in self.observables)
        if len(obs) != self.scenario.n_parties:
            raise DimensionError(
                f"scenario has {self.scenario.n_parties} parties, got observables for {len(obs)}"
            )
        for k, (o0, o1) in enumerate(obs):
            if o0.dim != self.scenario.party_dims[k] or o1.dim != self.scenario.party_dims[k]:
                raise DimensionError(
                    f"party {k} observables have dimension {o0.dim}/{o1.dim}, "
                    f"scenario says {self.scenario.party_dims[k]}"
                )
        st = as_state(self.state)
        if st.dim != math.prod(self.scenario.party_dims):
            raise DimensionError(f"state dimension {st.dim} != product of {self.scenario.party_dims}")
        object.__setattr__(self, "observables", obs)
        object.__setattr__(self, "state", st)

    def bell_operator(self) -> np.ndarray:
        return bell_operator(self.scenario, self.observables)

    def bell_value(self) -> float:
        return bell_value(self.bell_operator(), self.state)

    def reduced_state(self, party: int) -> DensityMatrix:
        from .linalg import partial_trace

        r = partial_trace(self.state.matrix, self.scenario.party_dims, [party])
        return DensityMatrix(r / np.trace(r).real, self.state.rank_tolerance)

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario.to_json(),
            "observables": [[o.to_json() for o in p] for p in self.observables],
            "state": self.state.to_json(),
        }

    @classmethod
    def from_json(cls, doc: Any) -> "BellRealization":
        if not isinstance(doc, dict):
            raise SchemaError("realization must be a JSON object")
        for key in ("scenario", "observables", "state"):
            if key not in doc:
                raise SchemaError(f"realization is missing {key!r}")
        obs_doc = doc["observables"]
        if not isinstance(obs_doc, list) or not all(isinstance(p, list) and len(p) == 2 for p in obs_doc):
            raise SchemaError("'observables' must be a list of [A0, A1] pairs")
        obs = tuple(
            (BinaryObservable.from_json(p[0]), BinaryObservable.from_json(p[1])) for p in obs_doc
        )
        scen = scenario_from_json(doc["scenario"], party_dims=[p[0].dim for p in obs])
        return cls(scen, obs, DensityMatrix.from_json(doc["state"]))


def bell_operator(scenario: BellScenario, observables: Sequence[Sequence[Any]]) -> np.ndarray:
    if len(observables) != scenario.n_parties:
        raise DimensionError(f"expected {scenario.n_parties} observable pairs, got {len(observables)}")
    if isinstance(scenario, BiasedCHSH):
        (a0, a1), (b0, b1) = observables
        return build_chsh_alpha(a0, a1, b0, b1, scenario.alpha)
    return build_mabk(observables)


# ------------------------------------------------------------ bound checks


@dataclass(frozen=True, eq=False)
class BoundCheckResult:
    """One operator inequality ``LHS <= RHS``; ``gap_min_eig`` is the least eigenvalue of ``RHS - LHS``."""

    name: str
    lhs_max_eig: float
    gap_min_eig: float
    passed: bool
    witness_vector: np.ndarray

    def to_json(self, include_witness: bool = True) -> dict:
        from .linalg import matrix_to_json

        doc = {
            "name": self.name,
            "lhs_max_eig": self.lhs_max_eig,
            "gap_min_eig": self.gap_min_eig,
            "passed": self.passed,
        }
        if include_witness:
            doc["witness_vector"] = matrix_to_json(self.witness_vector.reshape(-1, 1))
        return doc


def _check(name: str, lhs: np.ndarray, rhs: np.ndarray, tol: float, lhs_top: float | None = None) -> BoundCheckResult:
    # operands are built here from validated observables, so skip re-validation
    res = bottom_eigpair(rhs - lhs, tol)
    if lhs_top is None:
        lhs_top = float(np.linalg.eigvalsh((lhs + lhs.conj().T) / 2)[-1])
    return BoundCheckResult(name, lhs_top, res.min_eigenvalue, res.holds, res.witness)


def verify_chsh_squared_bound(a0, a1, b0, b1, alpha: float = 1.0, tol: float = PSD_TOL) -> BoundCheckResult:
    """``W_alpha^2 <= 2 (alpha^2 + 1) 1 x 1 + T_alpha x 1``."""
    w = build_chsh_alpha(a0, a1, b0, b1, alpha)
    db = as_observable(b0).dim
    t_op = t_alpha_operator(a0, a1, alpha)
    rhs = np.kron(2 * (alpha**2 + 1) * np.eye(t_op.shape[0]) + t_op, np.eye(db))
    return _check("chsh_squared", w @ w, rhs, tol)


def verify_talpha_bound(a0, a1, alpha: float = 1.0, tol: float = PSD_TOL) -> BoundCheckResult:
    """``T_alpha <= 2 (alpha^2 + 1) 1``."""
    t_op = t_alpha_operator(a0, a1, alpha)
    return _check("t_alpha", t_op, 2 * (alpha**2 + 1) * np.eye(t_op.shape[0]), tol)


def _parity_sum(halves: Sequence[np.ndarray], parity: int) -> np.ndarray:
    """Sum over n-bit strings ``x`` of the given parity of ``kron_j halves[j]^{x_j}`` (``X^0 = 1``).

    Built party by party: appending a 0 keeps the parity, appending a 1 flips it.
    """
    even = np.eye(1, dtype=complex)
    odd = np.zeros((1, 1), dtype=complex)
    for h in halves:
        eye = np.eye(h.shape[0])
        even, odd = np.kron(even, eye) + np.kron(odd, h), np.kron(odd, eye) + np.kron(even, h)
    return odd if parity else even


def mabk_r_operator(observables: Sequence[Sequence[Any]]) -> np.ndarray:
    """``R_n``: even-parity sum of ``kron_j (|[A0^j, A1^j]| / 2)^{x_j}``."""
    halves = [0.5 * matrix_modulus(commutator(*_pair(p))) for p in observables]
    return _parity_sum(halves, 0)


def verify_mabk_bounds(
    observables: Sequence[Sequence[Any]], tol: float = PSD_TOL
) -> tuple[BoundCheckResult, BoundCheckResult]:
    """Check ``|[W_n, W_n']| <= 2 S_odd`` and ``W_n^2, W_n'^2 <= R_n``.

    Returns ``(commutator_check, square_check)``; the square check covers both
    ``W_n`` and ``W_n'`` and reports the worse of the two.
    """
    if len(observables) == 0:
        raise DimensionError("MABK needs at least one party")
    pairs = [_pair(p) for p in observables]
    w, wp = _mabk_pair(pairs)
    halves = [0.5 * matrix_modulus(commutator(a0, a1)) for a0, a1 in pairs]
    odd = 2 * _parity_sum(halves, 1)
    even = _parity_sum(halves, 0)
    # i[W, W'] is Hermitian; its eigenvalues give both |[W, W']| and its top eigenvalue
    c = commutator(w, wp)
    lam, v = np.linalg.eigh(0.5j * (c - c.conj().T))
    mod = (v * np.abs(lam)) @ v.conj().T
    com = _check("mabk_commutator", mod, odd, tol, float(np.max(np.abs(lam))))
    sq = _check("mabk_square", w @ w, even, tol)
    sqp = _check("mabk_square_primed", wp @ wp, even, tol)
    worst = sq if sq.gap_min_eig <= sqp.gap_min_eig else sqp
    square = BoundCheckResult(
        "mabk_square",
        max(sq.lhs_max_eig, sqp.lhs_max_eig),
        worst.gap_min_eig,
        sq.passed and sqp.passed,
        worst.witness_vector,
    )
    return com, square


def mabk_square_projective(observables: Sequence[Sequence[Any]]) -> np.ndarray:
    """Closed form of ``W_n^2`` for projective observables: even-parity sum of ``(i [A0, A1] / 2)^{x_j}``."""
    obs = [(as_observable(p[0]), as_observable(p[1])) for p in observables]
    if not obs:
        raise DimensionError("MABK needs at least one party")
    if not all(o.projective for p in obs for o in p):
        raise PreconditionError("closed-form square requires projective observables")
    halves = [0.5j * commutator(p[0].matrix, p[1].matrix) for p in obs]
    out = _parity_sum(halves, 0)
    return (out + out.conj().T) / 2


# -------------------------------------------------- realization-level checks


def party_measures(realization: BellRealization, clamp: bool = False) -> list[float]:
    """Per-party incompatibility entering the trade-off.

    ``t_alpha`` for Alice in biased CHSH (Bob gets the plain effective
    commutator); the effective commutator for every MABK party.
    """
    scen = realization.scenario
    out = []
    for k, (a0, a1) in enumerate(realization.observables):
        rho_k = realization.reduced_state(k)
        if isinstance(scen, BiasedCHSH) and k == 0:
            out.append(t_alpha(a0, a1, rho_k, scen.alpha))
        else:
            out.append(effective_commutator(a0, a1, rho_k, clamp=clamp))
    return out


def tested_parties(scenario: BellScenario) -> list[int]:
    """Parties whose incompatibility measure bounds the Bell value."""
    if isinstance(scenario, BiasedCHSH):
        return [0, 1] if scenario.alpha == 1 else [0]
    return list(range(scenario.n))


def verify_realization(realization: BellRealization, tol: float = PSD_TOL) -> dict:
    """Run every applicable operator inequality plus the scalar consequences.

    Scalar checks: the Cauchy-Schwarz step ``beta^2 <= tr(W^2 rho)`` and
    trade-off soundness ``beta <= bound(t_k)`` for each tested party.
    """
    scen = realization.scenario
    w = realization.bell_operator()
    beta = bell_value(w, realization.state)
    checks: list[BoundCheckResult] = []
    if isinstance(scen, BiasedCHSH):
        (a0, a1), (b0, b1) = realization.observables
        checks.append(verify_chsh_squared_bound(a0, a1, b0, b1, scen.alpha, tol))
        checks.append(verify_talpha_bound(a0, a1, scen.alpha, tol))
    else:
        checks.extend(verify_mabk_bounds(realization.observables, tol))
    w2 = float(np.real(np.sum(w * (w @ realization.state.matrix).T)))
    ts = party_measures(realization)
    scalar = [
        {"name": "cauchy_schwarz", "lhs": beta * beta, "rhs": w2, "passed": beta * beta <= w2 + tol}
    ]
    for k in tested_parties(scen):
        bound = tradeoff_bound(scen, min(ts[k], 1.0))
        scalar.append(
            {"name": f"tradeoff_party_{k}", "t": ts[k], "lhs": beta, "rhs": bound, "passed": beta <= bound + tol}
        )
    return {
        "scenario": scen.to_json(),
        "beta": beta,
        "operator_checks": checks,
        "scalar_checks": scalar,
        "passed": all(c.passed for c in checks) and all(s["passed"] for s in scalar),
    }

