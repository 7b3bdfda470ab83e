"""Bloch-sphere description of qubit states and bistochastic qubit channels.

In the Pauli basis ``(I, σ1, σ2, σ3)/√2`` a bistochastic qubit channel has
the block form ``1 ⊕ M`` with ``M`` a real 3×3 matrix. Its trace-norm
contraction rate is the operator norm of ``M`` and the spectral gap of
``T∘T̂`` is ``1 − ‖M‖²``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import KrausChannel, superoperator_schrodinger
from .errors import InvalidInput, NotBistochastic
from .matrix import DEFAULT_TOL, PAULI, Tolerances, check_density


@dataclass(frozen=True)
class BlochVector:
    r1: float
    r2: float
    r3: float

    def __array__(self, dtype=None, copy=None):
        return np.array([self.r1, self.r2, self.r3], dtype=dtype)

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.r1**2 + self.r2**2 + self.r3**2))


@dataclass(frozen=True)
class KingRuskaiForm:
    M: np.ndarray
    xi_abs: np.ndarray
    c_exact: float


def to_bloch(rho, tol: Tolerances = DEFAULT_TOL) -> BlochVector:
    h = check_density(rho, tol)
    if h.shape != (2, 2):
        raise InvalidInput(f"Bloch vectors need a 2x2 state, got {h.shape}")
    r = [float(np.trace(s @ h).real) for s in PAULI]
    return BlochVector(*r)


def from_bloch(r, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    v = np.asarray(r, dtype=float)
    if v.shape != (3,):
        raise InvalidInput("a Bloch vector has three components")
    if v @ v > 1 + tol.tol_eig:
        raise InvalidInput(f"Bloch vector of length {np.sqrt(v @ v):.6g} lies outside the unit ball")
    return (np.eye(2) + sum(x * s for x, s in zip(v, PAULI))) / 2


def bloch_block(ch: KrausChannel, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """The 3×3 block ``M``; rejects channels without the ``1 ⊕ M`` structure."""
    if ch.dim != 2:
        raise InvalidInput(f"qubit channel expected, got dimension {ch.dim}")
    s = superoperator_schrodinger(ch, tol).matrix
    off = max(np.max(np.abs(s[1:, 0])), np.max(np.abs(s[0, 1:])))
    if off > tol.tol_fix:
        raise NotBistochastic(f"superoperator is not block diagonal (off-block entry {off:.3e})", residual=off)
    return s[1:, 1:].copy()


def king_ruskai_form(ch: KrausChannel, tol: Tolerances = DEFAULT_TOL) -> KingRuskaiForm:
    m = bloch_block(ch, tol)
    xi = np.linalg.svd(m, compute_uv=False)
    return KingRuskaiForm(M=m, xi_abs=xi, c_exact=float(xi[0]))


def qubit_gap_exact(form: KingRuskaiForm) -> float:
    return 1.0 - form.c_exact**2


def optimal_pair(form: KingRuskaiForm):
    """Orthonormal ψ, φ whose difference of projectors is stretched by ‖M‖."""
    _, _, vt = np.linalg.svd(form.M)
    r = vt[0]
    w, v = np.linalg.eigh(sum(x * s for x, s in zip(r, PAULI)))
    return v[:, 1], v[:, 0]
