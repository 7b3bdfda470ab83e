"""Quantum channels in Kraus form.

A :class:`KrausChannel` holds operators ``V_i`` and acts as

* ``T(A)  = Σ V_i† A V_i``   (Heisenberg picture, unital), and
* ``T̂(A) = Σ V_i A V_i†``   (Schrödinger picture, trace preserving).

Superoperators are written in the orthonormal Hermitian basis returned by
:func:`hermitian_basis`: ``I/√N`` first, then the generalized Gell-Mann
matrices (symmetric, antisymmetric, diagonal), each with unit HS norm. At
``N = 2`` this is ``(I, σ1, σ2, σ3)/√2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ChannelError, InvalidInput
from .matrix import DEFAULT_TOL, Tolerances, as_matrix, dagger, haar_unitary, hs_norm


class KrausChannel:
    """Immutable list of Kraus operators on ``C^N``.

    With ``check=True`` (the default) the completeness relation
    ``Σ V_i† V_i = I`` must hold within ``tol.tol_fix``; pass ``check=False``
    to build arbitrary CP maps, e.g. to certify a suspicious input.
    ``factors`` records the tensor factors when the channel was built by
    :func:`tensor_product`.
    """

    __slots__ = ("dim", "kraus", "factors")

    def __init__(self, kraus_ops, *, tol: Tolerances = DEFAULT_TOL, check: bool = True, factors=None):
        ops = [as_matrix(v) for v in kraus_ops]
        if not ops:
            raise ChannelError("a channel needs at least one Kraus operator")
        dim = ops[0].shape[0]
        for i, v in enumerate(ops):
            if v.shape != (dim, dim):
                raise ChannelError(f"Kraus operator {i} has shape {v.shape}, expected {(dim, dim)}")
        stack = np.stack(ops)
        stack.setflags(write=False)
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "kraus", stack)
        object.__setattr__(self, "factors", tuple(factors) if factors else None)
        if check:
            residual = unitality_residual(self)
            if residual > tol.tol_fix:
                raise ChannelError(
                    f"Kraus operators are not complete: ||sum V^dag V - I||_2 = {residual:.3e}",
                    residual=residual,
                )

    def __setattr__(self, name, value):
        raise AttributeError("KrausChannel is immutable")

    def __len__(self):
        return self.kraus.shape[0]

    def __repr__(self):
        return f"KrausChannel(dim={self.dim}, n_kraus={len(self)})"

    def heisenberg(self, a) -> np.ndarray:
        return apply_heisenberg(self, a)

    def schrodinger(self, a) -> np.ndarray:
        return apply_schrodinger(self, a)


@dataclass(frozen=True)
class ChannelCertificate:
    is_cptp: bool
    is_bistochastic: bool
    choi_min_eigenvalue: float
    unitality_residual: float
    dual_unitality_residual: float


@dataclass(frozen=True)
class Superoperator:
    dim: int
    basis: np.ndarray
    matrix: np.ndarray

    @property
    def traceless_block(self) -> np.ndarray:
        return self.matrix[1:, 1:]


def _check_operand(ch: KrausChannel, a) -> np.ndarray:
    m = as_matrix(a)
    if m.shape != (ch.dim, ch.dim):
        raise InvalidInput(f"operator of shape {m.shape} does not match channel dimension {ch.dim}")
    return m


def apply_heisenberg(ch: KrausChannel, a) -> np.ndarray:
    m = _check_operand(ch, a)
    v = ch.kraus
    return np.einsum("kji,jl,klm->im", v.conj(), m, v)


def apply_schrodinger(ch: KrausChannel, a) -> np.ndarray:
    m = _check_operand(ch, a)
    v = ch.kraus
    return np.einsum("kij,jl,kml->im", v, m, v.conj())


def unitality_residual(ch: KrausChannel) -> float:
    """‖Σ V†V − I‖₂: zero iff T is unital (equivalently T̂ trace preserving)."""
    s = np.einsum("kji,kjl->il", ch.kraus.conj(), ch.kraus)
    return hs_norm(s - np.eye(ch.dim))


def dual_unitality_residual(ch: KrausChannel) -> float:
    """‖Σ VV† − I‖₂: zero iff T̂ is unital."""
    s = np.einsum("kij,klj->il", ch.kraus, ch.kraus.conj())
    return hs_norm(s - np.eye(ch.dim))


def duality_check(ch: KrausChannel, a, b) -> float:
    """|tr(T̂(A) B) − tr(A T(B))|."""
    lhs = np.trace(apply_schrodinger(ch, a) @ as_matrix(b))
    rhs = np.trace(as_matrix(a) @ apply_heisenberg(ch, b))
    return float(abs(lhs - rhs))


# -- Choi representation ------------------------------------------------------


def choi_matrix(ch: KrausChannel) -> np.ndarray:
    """Σ_jk T̂(E_jk) ⊗ E_jk.

    Output factor first. Each Kraus operator contributes ``|v⟩⟨v|`` with
    ``v = V.reshape(-1)`` (row-major), which is what :func:`kraus_from_choi`
    inverts.
    """
    vecs = ch.kraus.reshape(len(ch), -1)
    c = vecs.T @ vecs.conj()
    return (c + dagger(c)) / 2


def choi_partial_trace_output(c: np.ndarray, n: int) -> np.ndarray:
    return np.einsum("ajak->jk", c.reshape(n, n, n, n))


def kraus_from_choi(c, tol: Tolerances = DEFAULT_TOL) -> KrausChannel:
    """Canonical Kraus form from the eigendecomposition of a Choi matrix.

    Eigenvalues at or below ``tol_psd`` are discarded, so at most ``N²``
    operators survive.
    """
    c = as_matrix(c)
    n = int(round(np.sqrt(c.shape[0])))
    if n * n != c.shape[0]:
        raise InvalidInput(f"Choi matrix size {c.shape[0]} is not a perfect square")
    herm_residual = hs_norm(c - dagger(c))
    if herm_residual > tol.tol_herm * max(1.0, hs_norm(c)):
        raise ChannelError("Choi matrix is not Hermitian", residual=herm_residual)
    w, v = np.linalg.eigh((c + dagger(c)) / 2)
    if w[0] < -tol.tol_psd:
        raise ChannelError(f"Choi matrix is not positive (min eigenvalue {w[0]:.3e})", residual=-w[0])
    tp_residual = hs_norm(choi_partial_trace_output(c, n) - np.eye(n))
    if tp_residual > tol.tol_fix:
        raise ChannelError(f"Choi partial trace differs from identity by {tp_residual:.3e}", residual=tp_residual)
    keep = w > tol.tol_psd
    ops = [np.sqrt(lam) * v[:, i].reshape(n, n) for i, lam in zip(np.flatnonzero(keep), w[keep])]
    return KrausChannel(ops[::-1], tol=tol)


def certify(ch: KrausChannel, tol: Tolerances = DEFAULT_TOL) -> ChannelCertificate:
    lam_min = float(np.linalg.eigvalsh(choi_matrix(ch))[0])
    tp = unitality_residual(ch)
    dual = dual_unitality_residual(ch)
    cptp = lam_min >= -tol.tol_psd and tp <= tol.tol_fix
    return ChannelCertificate(
        is_cptp=bool(cptp),
        is_bistochastic=bool(cptp and dual <= tol.tol_fix),
        choi_min_eigenvalue=lam_min,
        unitality_residual=tp,
        dual_unitality_residual=dual,
    )


# -- superoperators -----------------------------------------------------------


@lru_cache(maxsize=32)
def _basis(n: int) -> np.ndarray:
    mats = [np.eye(n, dtype=complex) / np.sqrt(n)]
    pairs = [(j, k) for j in range(n) for k in range(j + 1, n)]
    for j, k in pairs:
        m = np.zeros((n, n), dtype=complex)
        m[j, k] = m[k, j] = 1 / np.sqrt(2)
        mats.append(m)
    for j, k in pairs:
        m = np.zeros((n, n), dtype=complex)
        m[j, k] = -1j / np.sqrt(2)
        m[k, j] = 1j / np.sqrt(2)
        mats.append(m)
    for l in range(1, n):
        d = np.zeros(n)
        d[:l] = 1
        d[l] = -l
        mats.append(np.diag(d / np.sqrt(l * (l + 1))).astype(complex))
    out = np.stack(mats)
    out.setflags(write=False)
    return out


def hermitian_basis(n: int) -> np.ndarray:
    """Orthonormal Hermitian basis of M_N, shape ``(N², N, N)``."""
    if n < 1:
        raise InvalidInput("dimension must be positive")
    return _basis(n)


def coordinates(a, n: int | None = None) -> np.ndarray:
    """Components ⟨B_a, A⟩ of ``a`` in :func:`hermitian_basis` (complex)."""
    m = as_matrix(a)
    basis = hermitian_basis(m.shape[0] if n is None else n)
    return np.einsum("aij,ij->a", basis.conj(), m)


def from_coordinates(x) -> np.ndarray:
    x = np.asarray(x)
    n = int(round(np.sqrt(x.shape[0])))
    return np.einsum("a,aij->ij", x, hermitian_basis(n))


def vec_superoperator(ch: KrausChannel) -> np.ndarray:
    """Column-stacking matrix of T̂: vec(T̂(A)) = S vec(A), S = Σ conj(V) ⊗ V."""
    return np.einsum("kab,kcd->acbd", ch.kraus.conj(), ch.kraus).reshape(ch.dim**2, ch.dim**2)


def _real_part(m: np.ndarray, tol: Tolerances, what: str) -> np.ndarray:
    imag = float(np.max(np.abs(m.imag))) if m.size else 0.0
    if imag > tol.tol_herm * max(1.0, float(np.max(np.abs(m)))):
        raise ChannelError(f"{what} has imaginary entries up to {imag:.3e}; map is not Hermiticity preserving")
    return np.ascontiguousarray(m.real)


def superoperator_schrodinger(ch: KrausChannel, tol: Tolerances = DEFAULT_TOL) -> Superoperator:
    """Real matrix ``S[a, b] = ⟨B_a, T̂(B_b)⟩``."""
    n = ch.dim
    basis = hermitian_basis(n)
    b = basis.transpose(0, 2, 1).reshape(n * n, n * n).T  # columns are vec(B_a), column-stacked
    m = dagger(b) @ vec_superoperator(ch) @ b
    return Superoperator(n, basis, _real_part(m, tol, "superoperator"))


def superoperator_heisenberg(ch: KrausChannel, tol: Tolerances = DEFAULT_TOL) -> Superoperator:
    """Matrix of T, computed from the adjoint Kraus action (not by transposing)."""
    n = ch.dim
    basis = hermitian_basis(n)
    images = np.stack([apply_heisenberg(ch, bb) for bb in basis])
    m = np.einsum("aij,bij->ab", basis.conj(), images)
    return Superoperator(n, basis, _real_part(m, tol, "superoperator"))


def compose(first: KrausChannel, second: KrausChannel, tol: Tolerances = DEFAULT_TOL) -> KrausChannel:
    """Channel whose Schrödinger map is ``second ∘ first``."""
    if first.dim != second.dim:
        raise InvalidInput("cannot compose channels of different dimension")
    ops = [w @ v for w in second.kraus for v in first.kraus]
    return KrausChannel(ops, tol=tol)


def tensor_product(ch1: KrausChannel, ch2: KrausChannel, tol: Tolerances = DEFAULT_TOL) -> KrausChannel:
    ops = [np.kron(v, w) for v in ch1.kraus for w in ch2.kraus]
    f1 = ch1.factors or (ch1,)
    f2 = ch2.factors or (ch2,)
    return KrausChannel(ops, tol=tol, factors=f1 + f2)


# -- channel families ---------------------------------------------------------


def weyl_operators(n: int) -> list[np.ndarray]:
    """The N² shift/clock unitaries X^a Z^b; index 0 is the identity."""
    shift = np.roll(np.eye(n, dtype=complex), 1, axis=0)
    clock = np.diag(np.exp(2j * np.pi * np.arange(n) / n))
    return [np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b) for a in range(n) for b in range(n)]


def make_depolarizing(n: int, p: float, tol: Tolerances = DEFAULT_TOL) -> KrausChannel:
    """T̂(ρ) = (1 − p) ρ + p tr(ρ) I/N."""
    if not 0 <= p <= 1:
        raise InvalidInput(f"depolarizing parameter must lie in [0, 1], got {p}")
    if n < 1:
        raise InvalidInput("dimension must be positive")
    weights = np.full(n * n, p / (n * n))
    weights[0] += 1 - p
    ops = [np.sqrt(w) * u for w, u in zip(weights, weyl_operators(n)) if w > 0]
    return KrausChannel(ops, tol=tol)


def make_unitary_channel(u, tol: Tolerances = DEFAULT_TOL) -> KrausChannel:
    return KrausChannel([u], tol=tol)


def make_unitary_mixture(unitaries, weights, tol: Tolerances = DEFAULT_TOL) -> KrausChannel:
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1) > 1e-12:
        raise InvalidInput("mixture weights must be a probability vector")
    return KrausChannel([np.sqrt(w) * as_matrix(u) for w, u in zip(weights, unitaries) if w > 0], tol=tol)


def make_random_unitary_mixture(n: int, k: int, seed: int, tol: Tolerances = DEFAULT_TOL) -> KrausChannel:
    """Kraus operators ``√p_i U_i``: Haar unitaries, flat-Dirichlet weights."""
    if k < 1:
        raise InvalidInput("k must be at least 1")
    if n < 1:
        raise InvalidInput("dimension must be positive")
    rng = np.random.default_rng(seed)
    unitaries = [haar_unitary(n, rng) for _ in range(k)]
    weights = rng.dirichlet(np.ones(k)) if k > 1 else np.ones(1)
    return make_unitary_mixture(unitaries, weights, tol=tol)


def make_amplitude_damping(eta: float, tol: Tolerances = DEFAULT_TOL) -> KrausChannel:
    """Qubit amplitude damping: CPTP but not unital for ``eta > 0``."""
    if not 0 <= eta <= 1:
        raise InvalidInput(f"damping parameter must lie in [0, 1], got {eta}")
    k0 = np.diag([1.0, np.sqrt(1 - eta)]).astype(complex)
    k1 = np.array([[0, np.sqrt(eta)], [0, 0]], dtype=complex)
    return KrausChannel([k0, k1], tol=tol)


def identity_channel(n: int) -> KrausChannel:
    return KrausChannel([np.eye(n, dtype=complex)])
