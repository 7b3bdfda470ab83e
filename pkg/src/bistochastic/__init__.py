"""Analysis of bistochastic quantum channels on matrix algebras.

Certifies channel structure, computes spectral gaps and trace-norm
contraction rates, and checks entropy-production and relaxation bounds.
"""

__version__ = "0.1.0"

from .channel import (
    ChannelCertificate,
    KrausChannel,
    Superoperator,
    apply_heisenberg,
    apply_schrodinger,
    certify,
    choi_matrix,
    compose,
    duality_check,
    kraus_from_choi,
    make_amplitude_damping,
    make_depolarizing,
    make_random_unitary_mixture,
    superoperator_heisenberg,
    superoperator_schrodinger,
    tensor_product,
)
from .contraction import ContractionEstimate, estimate_contraction_rate, pair_objective, sample_ratio_audit
from .dynamics import (
    BoundCheckResult,
    OrbitLog,
    check_convergence_envelope,
    check_main_bound,
    check_sharp_bound,
    check_streater_bound,
    iterate_orbit,
    pure_state_distance,
)
from .matrix import DEFAULT_TOL, Tolerances, hs_inner, hs_norm, trace_norm, von_neumann_entropy
from .qubit import BlochVector, KingRuskaiForm, from_bloch, king_ruskai_form, qubit_gap_exact, to_bloch
from .spectral import SpectralReport, commutant_dimension, is_ergodic, kappa, spectral_gap
