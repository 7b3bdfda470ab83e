"""Ergodicity, the spectral gap of T∘T̂ and the subleading eigenvalue modulus κ."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .channel import KrausChannel, certify, superoperator_heisenberg, superoperator_schrodinger
from .errors import InvariantViolation, NotBistochastic, NotErgodic
from .matrix import DEFAULT_TOL, Tolerances

log = logging.getLogger(__name__)

NULLITY_RTOL = 1e-8


@dataclass(frozen=True)
class SpectralReport:
    is_ergodic: bool
    commutant_dim: int
    fixed_space_dim: int
    gap_gamma: float
    one_minus_gamma: float
    kappa: float
    eigenvalues_TThat: tuple
    asymmetry_residual: float = 0.0


def _require_bistochastic(ch: KrausChannel, tol: Tolerances):
    cert = certify(ch, tol)
    if not cert.is_bistochastic:
        raise NotBistochastic(
            "channel is not bistochastic "
            f"(completeness residual {cert.unitality_residual:.3e}, "
            f"dual residual {cert.dual_unitality_residual:.3e})",
            residual=max(cert.unitality_residual, cert.dual_unitality_residual),
        )


def commutant_dimension(ch: KrausChannel, tol: Tolerances = DEFAULT_TOL) -> int:
    """Dimension of {X : V_i X = X V_i for every Kraus operator V_i}."""
    _require_bistochastic(ch, tol)
    n = ch.dim
    eye = np.eye(n)
    # column-stacking: vec(VX - XV) = (I ⊗ V - V^T ⊗ I) vec X
    blocks = [np.kron(eye, v) - np.kron(v.T, eye) for v in ch.kraus]
    sv = np.linalg.svd(np.vstack(blocks), compute_uv=False)
    if sv[0] == 0:
        return n * n
    return int(n * n - np.count_nonzero(sv > NULLITY_RTOL * sv[0]))


def fixed_space_dimension(ch: KrausChannel, tol: Tolerances = DEFAULT_TOL) -> int:
    """Number of superoperator eigenvalues within ``tol_fix`` of one."""
    ev = np.linalg.eigvals(superoperator_schrodinger(ch, tol).matrix)
    return int(np.count_nonzero(np.abs(ev - 1) <= tol.tol_fix))


def is_ergodic(ch: KrausChannel, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Ergodicity decided by the commutant, cross-checked on the spectrum.

    Raises :class:`InvariantViolation` if the two methods disagree.
    """
    c = commutant_dimension(ch, tol)
    f = fixed_space_dimension(ch, tol)
    if (c == 1) != (f == 1):
        raise InvariantViolation(f"ergodicity methods disagree: commutant dimension {c}, fixed space dimension {f}")
    return c == 1


def _tthat_block(ch: KrausChannel, tol: Tolerances):
    s = superoperator_schrodinger(ch, tol).matrix
    h = superoperator_heisenberg(ch, tol).matrix
    block = (h @ s)[1:, 1:]
    asym = float(np.max(np.abs(block - block.T))) if block.size else 0.0
    return (block + block.T) / 2, asym


def tthat_eigenvalues(ch: KrausChannel, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Eigenvalues of T∘T̂ on the traceless subspace, ascending, clamped to [0, 1]."""
    block, _ = _tthat_block(ch, tol)
    return _clamp(np.linalg.eigvalsh(block), tol)


def _clamp(ev: np.ndarray, tol: Tolerances) -> np.ndarray:
    if ev.size and (ev[0] < -tol.tol_eig or ev[-1] > 1 + tol.tol_eig):
        raise InvariantViolation(f"T T^ eigenvalues [{ev[0]:.3e}, {ev[-1]:.3e}] leave [0, 1]")
    return np.clip(ev, 0.0, 1.0)


def kappa(ch: KrausChannel, tol: Tolerances = DEFAULT_TOL) -> float:
    """Largest modulus among superoperator eigenvalues other than the eigenvalue one."""
    ev = np.linalg.eigvals(superoperator_schrodinger(ch, tol).matrix)
    i = int(np.argmin(np.abs(ev - 1)))
    rest = np.delete(ev, i)
    if np.any(np.abs(rest - 1) <= tol.tol_fix):
        raise NotErgodic("eigenvalue one is degenerate; channel is not ergodic")
    return float(np.max(np.abs(rest))) if rest.size else 0.0


def spectral_gap(ch: KrausChannel, tol: Tolerances = DEFAULT_TOL) -> SpectralReport:
    """Full spectral report for a bistochastic ergodic channel.

    ``1 − γ`` is the largest eigenvalue of the symmetrized T∘T̂ matrix on
    the traceless block; it is reported even when that value is not itself
    attained by a traceless eigenvector of the unsymmetrized product.
    """
    _require_bistochastic(ch, tol)
    c = commutant_dimension(ch, tol)
    f = fixed_space_dimension(ch, tol)
    if (c == 1) != (f == 1):
        raise InvariantViolation(f"ergodicity methods disagree: commutant dimension {c}, fixed space dimension {f}")
    if c != 1:
        raise NotErgodic(f"channel is not ergodic (commutant dimension {c})")
    block, asym = _tthat_block(ch, tol)
    if asym > tol.tol_fix:
        log.warning("T T^ asymmetry %.3e exceeds tol_fix", asym)
    ev = _clamp(np.linalg.eigvalsh(block), tol)
    one_minus = float(ev[-1]) if ev.size else 0.0
    return SpectralReport(
        is_ergodic=True,
        commutant_dim=c,
        fixed_space_dim=f,
        gap_gamma=1.0 - one_minus,
        one_minus_gamma=one_minus,
        kappa=kappa(ch, tol),
        eigenvalues_TThat=tuple(float(x) for x in ev),
        asymmetry_residual=asym,
    )


def is_self_adjoint(ch: KrausChannel, tol: Tolerances = DEFAULT_TOL) -> bool:
    s = superoperator_schrodinger(ch, tol).matrix
    return bool(np.max(np.abs(s - s.T)) <= tol.tol_fix)
