"""Binary observables, states, and commutation-based incompatibility measures."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import DimensionError, InvalidOperatorError, SchemaError
from .linalg import (
    PSD_TOL,
    as_hermitian,
    matrix_from_json,
    matrix_modulus,
    matrix_to_json,
)

PROJECTIVE_TOL = 1e-8
TRACE_TOL = 1e-10
RANK_TOL = 1e-10
T_RANGE_TOL = 1e-8


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class BinaryObservable:
    """Hermitian ``A`` with ``-1 <= A <= 1``.

    Validation happens once here; the ``projective`` flag is computed from
    ``||A^2 - 1||`` and cannot be passed in.
    """

    matrix: np.ndarray
    projective: bool = field(init=False)

    def __post_init__(self):
        a = as_hermitian(self.matrix)
        lam = np.linalg.eigvalsh(a)
        if lam[0] < -1 - PSD_TOL or lam[-1] > 1 + PSD_TOL:
            raise InvalidOperatorError(
                f"spectrum [{lam[0]:.6g}, {lam[-1]:.6g}] leaves [-1, 1]; not a binary observable"
            )
        object.__setattr__(self, "matrix", _frozen(a))
        object.__setattr__(self, "projective", bool(np.max(np.abs(lam**2 - 1)) <= PROJECTIVE_TOL))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def to_json(self) -> dict:
        doc = matrix_to_json(self.matrix)
        doc["projective"] = self.projective
        return doc

    @classmethod
    def from_json(cls, doc: Any) -> "BinaryObservable":
        obs = cls(matrix_from_json(doc))
        if "projective" in doc and not isinstance(doc["projective"], bool):
            raise SchemaError("'projective' must be a boolean")
        return obs


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray
    rank_tolerance: float = RANK_TOL

    def __post_init__(self):
        r = as_hermitian(self.matrix)
        lam = np.linalg.eigvalsh(r)
        if lam[0] < -PSD_TOL:
            raise InvalidOperatorError(f"state is not PSD (min eigenvalue {lam[0]:.3e})")
        tr = float(np.trace(r).real)
        if abs(tr - 1) > TRACE_TOL:
            raise InvalidOperatorError(f"state trace is {tr!r}, expected 1")
        object.__setattr__(self, "matrix", _frozen(r))
        object.__setattr__(self, "_min_eig", float(lam[0]))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def min_eigenvalue(self) -> float:
        return self._min_eig

    def full_rank(self) -> bool:
        return self._min_eig > self.rank_tolerance

    @classmethod
    def pure(cls, vec: Any) -> "DensityMatrix":
        v = np.asarray(vec, dtype=complex).reshape(-1)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)

    def to_json(self) -> dict:
        return matrix_to_json(self.matrix)

    @classmethod
    def from_json(cls, doc: Any) -> "DensityMatrix":
        return cls(matrix_from_json(doc))


def as_observable(a: Any) -> BinaryObservable:
    return a if isinstance(a, BinaryObservable) else BinaryObservable(a)


def as_state(rho: Any) -> DensityMatrix:
    return rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)


def _same_dim(*ops) -> int:
    dims = {o.dim for o in ops}
    if len(dims) != 1:
        raise DimensionError(f"operands act on different dimensions {sorted(dims)}")
    return dims.pop()


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def _expect(op: np.ndarray, rho: DensityMatrix) -> float:
    return float(np.real(np.trace(op @ rho.matrix)))


def effective_commutator(a0: Any, a1: Any, rho: Any, *, clamp: bool = True) -> float:
    """State-weighted incompatibility ``t = tr(|[A0, A1]| rho) / 2``.

    Values within ``T_RANGE_TOL`` of [0, 1] are clamped when ``clamp`` is set;
    anything further out means the inputs were not binary observables and
    raises.
    """
    a0, a1, rho = as_observable(a0), as_observable(a1), as_state(rho)
    _same_dim(a0, a1, rho)
    t = 0.5 * _expect(matrix_modulus(commutator(a0.matrix, a1.matrix)), rho)
    if t < -T_RANGE_TOL or t > 1 + T_RANGE_TOL:
        raise InvalidOperatorError(f"effective commutator {t!r} outside [0, 1]")
    return min(max(t, 0.0), 1.0) if clamp else t


def t_alpha_operator(a0: Any, a1: Any, alpha: float) -> np.ndarray:
    """``T_alpha = (alpha^2 - 1) {A0, A1} + 2 alpha |[A0, A1]|``."""
    if alpha < 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    a0, a1 = as_observable(a0), as_observable(a1)
    _same_dim(a0, a1)
    x, y = a0.matrix, a1.matrix
    return (alpha**2 - 1) * anticommutator(x, y) + 2 * alpha * matrix_modulus(commutator(x, y))


def t_alpha(a0: Any, a1: Any, rho: Any, alpha: float) -> float:
    """``tr(T_alpha rho) / 4 - (alpha^2 - 1) / 2``; equals the effective commutator at alpha = 1.

    Not clamped: commuting pairs give values <= 0.
    """
    rho = as_state(rho)
    t_op = t_alpha_operator(a0, a1, alpha)
    if t_op.shape[0] != rho.dim:
        raise DimensionError("state and observables act on different dimensions")
    return 0.25 * _expect(t_op, rho) - 0.5 * (alpha**2 - 1)


def com_anticom_gap(a0: Any, a1: Any) -> np.ndarray:
    """``4 - |{A0, A1}|^2 - |[A0, A1]|^2``; PSD, and zero exactly for projective pairs.

    ``|X|^2`` is formed as ``X^dagger X`` directly, no square root needed.
    """
    a0, a1 = as_observable(a0), as_observable(a1)
    d = _same_dim(a0, a1)
    ac = anticommutator(a0.matrix, a1.matrix)
    cm = commutator(a0.matrix, a1.matrix)
    gap = 4 * np.eye(d) - ac.conj().T @ ac - cm.conj().T @ cm
    return (gap + gap.conj().T) / 2


def rng_from(seed: Any) -> np.random.Generator:
    """PCG64 generator from an integer seed; an existing Generator is passed through."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise ValueError("an explicit seed is required")
    return np.random.default_rng(np.random.SeedSequence(int(seed) & (2**64 - 1)))


def haar_unitary(dim: int, seed: Any) -> np.ndarray:
    """Haar-random unitary from the QR of a complex Ginibre matrix, with R's diagonal phases removed."""
    rng = rng_from(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_binary_observable(dim: int, projective: bool, seed: Any) -> BinaryObservable:
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    rng = rng_from(seed)
    u = haar_unitary(dim, rng)
    if projective:
        lam = rng.choice([-1.0, 1.0], size=dim)
    else:
        lam = rng.uniform(-1.0, 1.0, size=dim)
    a = (u * lam) @ u.conj().T
    return BinaryObservable((a + a.conj().T) / 2)


def random_density_matrix(dim: int, seed: Any, rank: int | None = None) -> DensityMatrix:
    """Induced-measure state ``G G^dagger / tr`` with ``G`` a ``dim x rank`` Ginibre matrix."""
    rng = rng_from(seed)
    k = dim if rank is None else rank
    g = rng.standard_normal((dim, k)) + 1j * rng.standard_normal((dim, k))
    r = g @ g.conj().T
    r = (r + r.conj().T) / 2
    return DensityMatrix(r / np.trace(r).real)
