"""Commutation-based self-testing of binary observables."""

__version__ = "0.1.0"

from .bell import (
    MABK,
    BellRealization,
    BiasedCHSH,
    BoundCheckResult,
    bell_value,
    build_chsh_alpha,
    build_mabk,
    build_mabk_primed,
    mabk_square_projective,
    quantum_classical_bounds,
    tradeoff_bound,
    verify_chsh_squared_bound,
    verify_mabk_bounds,
    verify_talpha_bound,
)
from .certify import (
    CanonicalFormResult,
    CertificationReport,
    RigidityReport,
    certify_n_anticommuting,
    certify_realization,
    check_rigidity,
    extract_canonical_pair,
)
from .observables import (
    BinaryObservable,
    DensityMatrix,
    com_anticom_gap,
    effective_commutator,
    random_binary_observable,
    t_alpha,
)
from .optimize import SeesawConfig, TradeoffCurve, falsify_bounds, scan_tradeoff, seesaw_max_violation
