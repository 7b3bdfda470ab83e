"""Dense complex matrix helpers: norms, inner products, eigensolvers, entropy.

Matrices are plain ``numpy`` arrays. Functions validate what they need and
never mutate their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import DecompositionError, InvalidInput, InvariantViolation


@dataclass(frozen=True)
class Tolerances:
    tol_herm: float = 1e-9
    tol_trace: float = 1e-9
    tol_psd: float = 1e-9
    tol_eig: float = 1e-8
    tol_fix: float = 1e-7
    tol_bound: float = 1e-9
    tol_audit: float = 1e-6

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (value >= 0 and np.isfinite(value)):
                raise InvalidInput(f"{f.name} must be a finite nonnegative number, got {value!r}")

    def override(self, **changes) -> Tolerances:
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


DEFAULT_TOL = Tolerances()

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a finite square complex array, or raise."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise InvalidInput(f"expected a nonempty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInput("matrix has non-finite entries")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def hermitian_part(a):
    """(A + A†)/2 together with the residual ‖A − A†‖₂."""
    m = as_matrix(a)
    return (m + dagger(m)) / 2, float(np.linalg.norm(m - dagger(m)))


def trace_norm(a) -> float:
    return float(np.sum(svd_singular_values(a)))


def hs_norm(a) -> float:
    return float(np.linalg.norm(as_matrix(a), "fro"))


def hs_inner(a, b) -> complex:
    """tr(A†B)."""
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise InvalidInput(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def svd_singular_values(a) -> np.ndarray:
    """Singular values in descending order."""
    m = as_matrix(a)
    try:
        return np.linalg.svd(m, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"SVD failed: {exc}") from exc


def hermitian_eigendecomposition(a, tol: Tolerances = DEFAULT_TOL):
    """Eigenvalues (ascending) and orthonormal eigenvector columns.

    The input is symmetrized first; inputs further than ``tol_herm`` from
    Hermitian (relative to their size) are rejected.
    """
    h, residual = hermitian_part(a)
    if residual > tol.tol_herm * max(1.0, hs_norm(h)):
        raise InvalidInput(f"matrix is not Hermitian (residual {residual:.3e})")
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"eigendecomposition failed: {exc}") from exc
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(v))):
        raise DecompositionError("eigendecomposition produced non-finite values")
    return w, v


def check_density(rho, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Validate a density matrix and return its Hermitian part.

    Raises :class:`InvariantViolation` naming the first failed invariant.
    """
    m = as_matrix(rho)
    h, residual = hermitian_part(m)
    if residual > tol.tol_herm:
        raise InvariantViolation(f"state not Hermitian: residual {residual:.3e}")
    tr = np.trace(h).real
    if abs(tr - 1) > tol.tol_trace:
        raise InvariantViolation(f"state trace {tr!r} differs from 1")
    lam_min = np.linalg.eigvalsh(h)[0]
    if lam_min < -tol.tol_psd:
        raise InvariantViolation(f"state has negative eigenvalue {lam_min:.3e}")
    return h


def von_neumann_entropy(rho, tol: Tolerances = DEFAULT_TOL) -> float:
    """S(ρ) = −tr ρ ln ρ in nats, with 0 ln 0 = 0."""
    h = check_density(rho, tol)
    lam = np.linalg.eigvalsh(h)
    lam = np.where(lam < 0, 0.0, lam)
    nz = lam[lam > 0]
    s = float(-np.sum(nz * np.log(nz)))
    return min(max(s, 0.0), float(np.log(h.shape[0]))) + 0.0


def maximally_mixed(n: int) -> np.ndarray:
    return np.eye(n, dtype=complex) / n


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


# -- random ensembles ---------------------------------------------------------


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary: QR of a Ginibre matrix with phase-fixed R."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_pure_state(n: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return projector(psi / np.linalg.norm(psi))


def random_density(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Hilbert-Schmidt random state (induced measure when ``rank`` < n)."""
    k = n if rank is None else rank
    g = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    rho = g @ dagger(g)
    rho = (rho + dagger(rho)) / 2
    return rho / np.trace(rho).real


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (g + dagger(g)) / 2
