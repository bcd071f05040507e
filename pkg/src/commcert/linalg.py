"""Dense complex-matrix primitives.

Every operator in the package is a plain 2-D complex ``numpy.ndarray``;
the helpers here validate shape and Hermiticity at the boundary and then
stay out of the way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Any, Iterable, Sequence

import numpy as np
import scipy.linalg

from .errors import DimensionError, InvalidOperatorError, SchemaError

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-8
RECONSTRUCTION_TOL = 1e-9
DEGENERACY_TOL = 1e-9

SIGMA_I = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def as_matrix(m: Any) -> np.ndarray:
    """Return ``m`` as a 2-D complex array, refusing anything else."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {a.shape}")
    if a.size == 0:
        raise DimensionError("empty matrix")
    if not np.all(np.isfinite(a)):
        raise InvalidOperatorError("matrix contains NaN or Inf entries")
    return a


def as_square(m: Any) -> np.ndarray:
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def hermiticity_defect(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T)))


def as_hermitian(m: Any, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate Hermiticity within ``tol`` (max-abs entry) and symmetrize."""
    a = as_square(m)
    defect = hermiticity_defect(a)
    if defect > tol:
        raise InvalidOperatorError(f"matrix is not Hermitian (defect {defect:.3e} > {tol:.1e})")
    return (a + a.conj().T) / 2


def op_norm(m: np.ndarray) -> float:
    """Operator (Schatten-infinity) norm."""
    return float(np.linalg.norm(m, 2))


def frobenius_relative_error(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(np.linalg.norm(b), 1.0)
    return float(np.linalg.norm(a - b) / scale)


@dataclass(frozen=True, eq=False)
class EigDecomposition:
    """Ascending eigenvalues and the unitary whose columns are eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def clusters(self, tol: float = DEGENERACY_TOL) -> list[slice]:
        """Contiguous index ranges of eigenvalues closer than ``tol`` to a neighbour."""
        out = []
        start = 0
        lam = self.eigenvalues
        for i in range(1, len(lam) + 1):
            if i == len(lam) or lam[i] - lam[i - 1] > tol:
                out.append(slice(start, i))
                start = i
        return out


def eig_hermitian(m: Any, tol: float = HERMITIAN_TOL) -> EigDecomposition:
    h = as_hermitian(m, tol)
    w, v = np.linalg.eigh(h)
    return EigDecomposition(w, v)


def matrix_modulus(x: Any) -> np.ndarray:
    """|X| = sqrt(X^dagger X).

    Hermitian and anti-Hermitian inputs (commutators of observables) go
    through eigh, ``|X| = V |lambda| V^dagger``; anything else through the SVD.
    """
    a = as_square(x)
    scale = max(np.max(np.abs(a)), 1.0)
    for phase in (1, 1j):
        h = phase * a
        if np.max(np.abs(h - h.conj().T)) <= 1e-14 * scale:
            lam, v = np.linalg.eigh((h + h.conj().T) / 2)
            mod = (v * np.abs(lam)) @ v.conj().T
            return (mod + mod.conj().T) / 2
    _, s, vh = np.linalg.svd(a)
    mod = (vh.conj().T * s) @ vh
    return (mod + mod.conj().T) / 2


def operator_sqrt(m: Any, tol: float = PSD_TOL) -> np.ndarray:
    """Principal square root of a PSD matrix; eigenvalues in [-tol, 0) are clamped."""
    dec = eig_hermitian(m)
    lam = dec.eigenvalues
    if lam[0] < -tol:
        raise InvalidOperatorError(f"matrix is not PSD (min eigenvalue {lam[0]:.3e})")
    v = dec.eigenvectors
    r = (v * np.sqrt(np.clip(lam, 0.0, None))) @ v.conj().T
    return (r + r.conj().T) / 2


def polar_unitary(m: Any) -> np.ndarray:
    """Nearest unitary (or isometry) to ``m`` in Frobenius norm."""
    u, _, vh = np.linalg.svd(as_matrix(m), full_matrices=False)
    return u @ vh


@dataclass(frozen=True, eq=False)
class PsdCheck:
    """Outcome of testing ``X <= Y``: the smallest eigenvalue of ``Y - X`` and its eigenvector."""

    holds: bool
    min_eigenvalue: float
    witness: np.ndarray

    def __bool__(self) -> bool:
        return self.holds


def psd_leq(x: Any, y: Any, tol: float = PSD_TOL) -> PsdCheck:
    x = as_hermitian(x)
    y = as_hermitian(y)
    if x.shape != y.shape:
        raise DimensionError(f"shape mismatch {x.shape} vs {y.shape}")
    return bottom_eigpair(y - x, tol)


def bottom_eigpair(gap: np.ndarray, tol: float = PSD_TOL) -> PsdCheck:
    """Smallest eigenpair of an already validated Hermitian matrix, packaged as a PSD check."""
    gap = (gap + gap.conj().T) / 2
    # the subset driver occasionally fails to converge on clustered spectra;
    # fall back to the full problem then
    try:
        w, v = scipy.linalg.eigh(gap, subset_by_index=[0, 0], check_finite=False)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(gap)
    return PsdCheck(bool(w[0] >= -tol), float(w[0]), v[:, 0].copy())


def kron(a: Any, b: Any) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def kron_list(mats: Iterable[Any]) -> np.ndarray:
    """Left fold of ``kron``; the first factor is the leftmost (most significant) subsystem."""
    mats = [as_matrix(m) for m in mats]
    if not mats:
        raise ValueError("kron_list needs at least one matrix")
    return reduce(np.kron, mats)


def _check_dims(n: int, dims: Sequence[int]) -> list[int]:
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims):
        raise DimensionError(f"subsystem dimensions must be positive, got {dims}")
    if math.prod(dims) != n:
        raise DimensionError(f"subsystem dimensions {dims} do not multiply to {n}")
    return dims


def partial_trace(m: Any, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep`` (0-based indices).

    Kept subsystems retain their original relative order. Keeping nothing
    returns the 1x1 matrix holding the full trace.
    """
    a = as_square(m)
    dims = _check_dims(a.shape[0], dims)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionError(f"keep indices {keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    t = a.reshape(dims + dims)
    # Trace from the highest index down so lower axis numbers stay valid.
    for i in reversed(range(n)):
        if i in keep:
            continue
        cur = t.ndim // 2
        t = np.trace(t, axis1=i, axis2=i + cur)
    d = math.prod(dims[k] for k in keep)
    return t.reshape(d, d)


def permute_subsystems(m: Any, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of an operator: new factor ``i`` is old factor ``perm[i]``."""
    a = as_square(m)
    dims = _check_dims(a.shape[0], dims)
    n = len(dims)
    perm = list(perm)
    if sorted(perm) != list(range(n)):
        raise DimensionError(f"{perm} is not a permutation of {n} subsystems")
    t = a.reshape(dims + dims).transpose(perm + [p + n for p in perm])
    return t.reshape(a.shape)


def pauli_blocks(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Write ``m = 1 x K0 + sx x Kx + sy x Ky + sz x Kz`` with the qubit as leading factor."""
    a = as_square(m)
    if a.shape[0] % 2:
        raise DimensionError("operator dimension must be even to split off a qubit")
    h = a.shape[0] // 2
    m00, m01 = a[:h, :h], a[:h, h:]
    m10, m11 = a[h:, :h], a[h:, h:]
    k0 = (m00 + m11) / 2
    kz = (m00 - m11) / 2
    kx = (m01 + m10) / 2
    ky = 1j * (m01 - m10) / 2
    return k0, kx, ky, kz


def matrix_to_json(m: Any) -> dict:
    a = as_matrix(m)
    rows, cols = a.shape
    data = [[float(z.real), float(z.imag)] for z in a.reshape(-1)]
    return {"rows": rows, "cols": cols, "data": data}


def matrix_from_json(doc: Any) -> np.ndarray:
    """Parse ``{"rows", "cols", "data": [[re, im], ...]}`` (row-major) into an array."""
    if not isinstance(doc, dict):
        raise SchemaError("matrix must be a JSON object")
    try:
        rows, cols, data = doc["rows"], doc["cols"], doc["data"]
    except KeyError as exc:
        raise SchemaError(f"matrix is missing key {exc}") from None
    if not (isinstance(rows, int) and isinstance(cols, int)) or rows < 1 or cols < 1:
        raise SchemaError("rows and cols must be positive integers")
    if not isinstance(data, list) or len(data) != rows * cols:
        raise SchemaError(f"data must hold rows*cols = {rows * cols} entries")
    out = np.empty(rows * cols, dtype=complex)
    for i, entry in enumerate(data):
        if (
            not isinstance(entry, (list, tuple))
            or len(entry) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)
        ):
            raise SchemaError(f"entry {i} must be a [re, im] pair of numbers")
        re, im = float(entry[0]), float(entry[1])
        if not (math.isfinite(re) and math.isfinite(im)):
            raise SchemaError(f"entry {i} is not finite")
        out[i] = complex(re, im)
    return out.reshape(rows, cols)
