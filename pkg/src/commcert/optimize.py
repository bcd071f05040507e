"""Numerical search: seesaw lower bounds, tight trade-off curves, falsification sweeps."""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bell import (
    BellRealization,
    BellScenario,
    BiasedCHSH,
    MABK,
    bell_value,
    build_from_coefficients,
    coefficient_tensor,
    quantum_classical_bounds,
    verify_realization,
)
from .certify import qubit_pair
from .errors import PreconditionError, SchemaError
from .linalg import DEGENERACY_TOL, SIGMA_X, SIGMA_Y, partial_trace
from .observables import (
    BinaryObservable,
    DensityMatrix,
    com_anticom_gap,
    effective_commutator,
    haar_unitary,
    random_binary_observable,
    random_density_matrix,
    rng_from,
    t_alpha,
)

log = logging.getLogger(__name__)


def nearest_binary(h: np.ndarray) -> np.ndarray:
    """Clamp the spectrum of a Hermitian matrix into [-1, 1]."""
    lam, v = np.linalg.eigh((h + h.conj().T) / 2)
    return (v * np.clip(lam, -1.0, 1.0)) @ v.conj().T


def nearest_projective(h: np.ndarray) -> np.ndarray:
    """Sign of a Hermitian matrix; zero eigenvalues round to +1."""
    lam, v = np.linalg.eigh((h + h.conj().T) / 2)
    a = (v * np.where(lam >= 0, 1.0, -1.0)) @ v.conj().T
    return (a + a.conj().T) / 2


# ------------------------------------------------------------- seesaw


@dataclass(frozen=True)
class SeesawConfig:
    max_iterations: int = 2000
    convergence_tol: float = 1e-13
    restarts: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise SchemaError("max_iterations must be >= 1")
        if not self.convergence_tol > 0:
            raise SchemaError("convergence_tol must be positive")
        if self.restarts < 1:
            raise SchemaError("restarts must be >= 1")


@dataclass(frozen=True, eq=False)
class SeesawResult:
    beta: float
    realization: BellRealization
    seed: int
    iterations: int
    converged: bool
    history: list[float] = field(repr=False)

    def __iter__(self):
        # allows ``beta, realization = seesaw_max_violation(...)``
        return iter((self.beta, self.realization))


def _balanced_projective(dim: int, rng: np.random.Generator) -> np.ndarray:
    u = haar_unitary(dim, rng)
    signs = np.where(np.arange(dim) < (dim + 1) // 2, 1.0, -1.0)
    a = (u * signs) @ u.conj().T
    return (a + a.conj().T) / 2


def _apply(op: np.ndarray, psi: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(op, psi, axes=([1], [axis])), 0, axis)


def _local_operator(coeffs, mats, psi, k, x) -> np.ndarray:
    """``G`` with ``<psi|W|psi> = tr(A^k_x G) + const`` for fixed other observables."""
    n = len(mats)
    chi = np.zeros_like(psi)
    for s in np.ndindex(*coeffs.shape):
        if s[k] != x or coeffs[s] == 0:
            continue
        phi = psi
        for j in range(n):
            if j != k:
                phi = _apply(mats[j][s[j]], phi, j)
        chi = chi + coeffs[s] * phi
    dk = psi.shape[k]
    chi_k = np.moveaxis(chi, k, 0).reshape(dk, -1)
    psi_k = np.moveaxis(psi, k, 0).reshape(dk, -1)
    return chi_k @ psi_k.conj().T


def _top_state(w: np.ndarray) -> tuple[float, np.ndarray]:
    lam, v = np.linalg.eigh(w)
    top = lam[-1]
    first = int(np.searchsorted(lam, top - DEGENERACY_TOL))
    return float(top), v[:, first]


def _seesaw_run(coeffs, dims, config, rng):
    mats = [[_balanced_projective(d, rng), _balanced_projective(d, rng)] for d in dims]
    history: list[float] = []
    converged = False
    psi = None
    for it in range(config.max_iterations):
        beta, vec = _top_state(build_from_coefficients(coeffs, mats))
        if history and beta - history[-1] < config.convergence_tol:
            if beta >= history[-1]:
                history.append(beta)
                psi = vec
            converged = True
            break
        history.append(beta)
        psi = vec
        tensor = psi.reshape(dims)
        for k in range(len(dims)):
            for x in (0, 1):
                g = _local_operator(coeffs, mats, tensor, k, x)
                mats[k][x] = nearest_projective((g + g.conj().T) / 2)
    return history, mats, psi, converged, len(history)


def seesaw_max_violation(
    scenario: BellScenario, dims: Sequence[int] | None = None, config: SeesawConfig = SeesawConfig()
) -> SeesawResult:
    """Alternate between the best state for fixed observables (top eigenvector of ``W``)
    and the best observable for fixed state and other observables (sign of the
    effective local operator), from ``config.restarts`` random starts.

    Restart ``r`` draws its initial observables from seed ``config.seed + r``;
    the highest Bell value wins, earlier seeds winning ties.
    """
    dims = tuple(scenario.party_dims if dims is None else dims)
    if len(dims) != scenario.n_parties:
        raise PreconditionError(f"need {scenario.n_parties} party dimensions, got {len(dims)}")
    if any(d < 2 for d in dims):
        raise PreconditionError(f"party dimensions must be >= 2, got {dims}")
    coeffs = coefficient_tensor(scenario)
    best = None
    for r in range(config.restarts):
        seed = config.seed + r
        history, mats, psi, converged, iters = _seesaw_run(coeffs, dims, config, rng_from(seed))
        if not converged:
            log.warning("seesaw restart %d did not converge in %d iterations", r, config.max_iterations)
        if best is None or history[-1] > best[0][-1]:
            best = (history, mats, psi, converged, iters, seed)
    history, mats, psi, converged, iters, seed = best
    if isinstance(scenario, BiasedCHSH):
        scen = BiasedCHSH(scenario.alpha, dims)
    else:
        scen = MABK(scenario.n, dims)
    real = BellRealization(
        scen,
        tuple((BinaryObservable(a0), BinaryObservable(a1)) for a0, a1 in mats),
        DensityMatrix.pure(psi),
    )
    return SeesawResult(real.bell_value(), real, seed, iters, converged, history)


# ------------------------------------------------------ trade-off curves


@dataclass(frozen=True, eq=False)
class TradeoffCurve:
    scenario: BellScenario
    party: int
    rows: list[tuple[float, float, float, float]]

    def max_excess(self) -> float:
        """Largest ``beta - bound`` over the curve (<= 0 when the trade-off holds)."""
        return max(b - bd for _, _, b, bd in self.rows)

    def max_abs_gap(self) -> float:
        return max(abs(b - bd) for _, _, b, bd in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("gamma,t,beta,bound\n")
        for row in self.rows:
            buf.write(",".join(format(v, ".17g") for v in row) + "\n")
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario.to_json(),
            "party": self.party,
            "rows": [dict(zip(("gamma", "t", "beta", "bound"), r)) for r in self.rows],
        }


def tight_family(scenario: BellScenario, gamma: float, party: int = 0):
    """Qubit observables saturating the trade-off at angle ``gamma``.

    Biased CHSH: Alice ``(sx, cos g sx + sin g sy)``, Bob ``(sx, sy)``. MABK:
    every party ``(sx, sy)`` except ``party``, which gets the rotated pair.
    """
    if isinstance(scenario, BiasedCHSH):
        if party != 0:
            raise PreconditionError("the biased-CHSH trade-off is stated for party 0")
        return [qubit_pair(gamma), (SIGMA_X, SIGMA_Y)]
    if not 0 <= party < scenario.n:
        raise PreconditionError(f"party index {party} out of range for MABK({scenario.n})")
    return [qubit_pair(gamma) if j == party else (SIGMA_X, SIGMA_Y) for j in range(scenario.n)]


def scan_tradeoff(scenario: BellScenario, party: int = 0, gamma_grid: Sequence[float] | int = 51) -> TradeoffCurve:
    from .bell import tradeoff_bound

    if isinstance(gamma_grid, int):
        gamma_grid = np.linspace(0.0, math.pi / 2, gamma_grid)
    grid = [float(g) for g in gamma_grid]
    if any(g < -1e-12 or g > math.pi / 2 + 1e-12 for g in grid):
        raise PreconditionError("gamma grid must lie in [0, pi/2]")
    if isinstance(scenario, BiasedCHSH):
        scen = BiasedCHSH(scenario.alpha)
    else:
        scen = MABK(scenario.n)
    dims = scen.party_dims
    coeffs = coefficient_tensor(scen)
    rows = []
    for g in grid:
        obs = tight_family(scen, g, party)
        w = build_from_coefficients(coeffs, obs)
        _, psi = _top_state(w)
        rho = DensityMatrix.pure(psi)
        beta = bell_value(w, rho)
        rho_k = DensityMatrix(partial_trace(rho.matrix, dims, [party]))
        a0, a1 = obs[party]
        if isinstance(scen, BiasedCHSH):
            t = t_alpha(a0, a1, rho_k, scen.alpha)
        else:
            t = effective_commutator(a0, a1, rho_k, clamp=False)
        rows.append((g, t, beta, tradeoff_bound(scen, t)))
    return TradeoffCurve(scen, party, rows)


# ------------------------------------------------------- falsification


@dataclass
class FalsificationReport:
    scenario: dict
    samples: int
    seed: int
    checks: dict = field(default_factory=dict)
    violations: dict = field(default_factory=dict)
    worst_gap: dict = field(default_factory=dict)
    findings: list = field(default_factory=list)

    @property
    def total_violations(self) -> int:
        return sum(self.violations.values())

    def record(self, name: str, gap: float, passed: bool, sample: int):
        self.checks[name] = self.checks.get(name, 0) + 1
        self.violations.setdefault(name, 0)
        self.worst_gap[name] = min(self.worst_gap.get(name, math.inf), gap)
        if not passed:
            self.violations[name] += 1
            self.findings.append({"sample": sample, "check": name, "gap": gap})

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "samples": self.samples,
            "seed": self.seed,
            "checks": self.checks,
            "violations": self.violations,
            "total_violations": self.total_violations,
            "worst_gap": self.worst_gap,
            "findings": self.findings,
        }


def random_realization(scenario: BellScenario, dims: Sequence[int], rng) -> BellRealization:
    """Observables projective or not with equal odds; a state of random rank."""
    if isinstance(scenario, BiasedCHSH):
        scen = BiasedCHSH(scenario.alpha, tuple(dims))
    else:
        scen = MABK(scenario.n, tuple(dims))
    obs = []
    for d in dims:
        obs.append(tuple(random_binary_observable(d, bool(rng.random() < 0.5), rng) for _ in range(2)))
    total = math.prod(dims)
    rho = random_density_matrix(total, rng, rank=int(rng.integers(1, total + 1)))
    return BellRealization(scen, tuple(obs), rho)


def falsify_bounds(
    scenario: BellScenario,
    samples: int,
    dims: Sequence[int] | None = None,
    seed: int = 0,
    tol: float = 1e-8,
) -> FalsificationReport:
    """Draw random realizations and run every applicable bound; violations are findings, not errors."""
    if samples < 1:
        raise PreconditionError("samples must be >= 1")
    dims = tuple(scenario.party_dims if dims is None else dims)
    rng = rng_from(seed)
    report = FalsificationReport(scenario.to_json() | {"party_dims": list(dims)}, samples, seed)
    for i in range(samples):
        real = random_realization(scenario, dims, rng)
        res = verify_realization(real, tol)
        for c in res["operator_checks"]:
            report.record(c.name, c.gap_min_eig, c.passed, i)
        for c in res["scalar_checks"]:
            name = c["name"] if not c["name"].startswith("tradeoff") else "tradeoff"
            report.record(name, c["rhs"] - c["lhs"], c["passed"], i)
        for a0, a1 in real.observables:
            gmin = float(np.linalg.eigvalsh(com_anticom_gap(a0, a1))[0])
            report.record("com_anticom", gmin, gmin >= -tol, i)
    return report
