"""Orbits of the Schrödinger-picture semigroup and entropy-production bounds.

Bound identifiers used in reports:

``gap_entropy``
    ``S(T̂σ) − S(σ) ≥ γ/2 ‖σ − I/N‖₂²`` with γ the spectral gap of T∘T̂.
``contraction_entropy``
    the same with ``γ`` replaced by ``1 − C``.
``sharp_contraction_entropy``
    the same with ``γ`` replaced by ``1 − C²`` (self-adjoint channels,
    bistochastic qubit channels and tensor products of those).
``envelope_cn``
    ``‖T̂ⁿσ − I/N‖₁ ≤ Cⁿ ‖σ − I/N‖₁``.
``envelope_pure``
    ``‖T̂ⁿσ − I/N‖₁ < 2 C^{n/2} (N − 1)/N`` for ``n ≥ 1``.
``kappa_root_rate``
    ``κ ≤ C^{1/2}``.

In every :class:`BoundCheckResult` ``lhs`` is the side claimed to be the
larger one, so ``margin = lhs − rhs`` is nonnegative when the bound holds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import KrausChannel, apply_schrodinger, certify
from .errors import InvalidInput, InvariantViolation, NotBistochastic, OrbitDrift
from .matrix import DEFAULT_TOL, Tolerances, check_density, hs_norm, maximally_mixed, trace_norm
from .matrix import von_neumann_entropy
from .qubit import bloch_block, to_bloch
from .spectral import is_self_adjoint

GAP = "gap_entropy"
MAIN = "contraction_entropy"
SHARP = "sharp_contraction_entropy"
ENVELOPE_CN = "envelope_cn"
ENVELOPE_PURE = "envelope_pure"
KAPPA_ROOT = "kappa_root_rate"
BOUND_IDS = (GAP, MAIN, SHARP, ENVELOPE_CN, ENVELOPE_PURE, KAPPA_ROOT)

DRIFT_ABORT = 1e-6


@dataclass(frozen=True)
class BoundCheckResult:
    bound_id: str
    lhs: float
    rhs: float
    satisfied: bool
    margin: float
    step: int | None = None

    @classmethod
    def compare(cls, bound_id, lhs, rhs, tol_bound, step=None):
        margin = float(lhs - rhs)
        return cls(bound_id, float(lhs), float(rhs), margin >= -tol_bound, margin, step)


@dataclass
class OrbitLog:
    dim: int
    states: list = field(repr=False)
    trace_dist: np.ndarray
    hs_dist_sq: np.ndarray
    entropy: np.ndarray
    delta_S: np.ndarray
    drift: float = 0.0

    @property
    def steps(self) -> int:
        return len(self.states) - 1

    def rows(self):
        """One dict per step ``n = 0 … n_max``; Bloch components at N = 2."""
        for n, rho in enumerate(self.states):
            row = {
                "n": n,
                "trace_dist": float(self.trace_dist[n]),
                "hs_dist_sq": float(self.hs_dist_sq[n]),
                "entropy": float(self.entropy[n]),
                "delta_S": float(self.delta_S[n]),
            }
            if self.dim == 2:
                b = to_bloch(rho, Tolerances(tol_herm=1e-6, tol_trace=1e-6, tol_psd=1e-6))
                row.update(r1=b.r1, r2=b.r2, r3=b.r3)
            yield row


def _require_bistochastic(ch: KrausChannel, tol: Tolerances):
    cert = certify(ch, tol)
    if not cert.is_bistochastic:
        raise NotBistochastic(
            f"channel is not bistochastic (dual residual {cert.dual_unitality_residual:.3e})",
            residual=cert.dual_unitality_residual,
        )


def iterate_orbit(ch: KrausChannel, sigma0, n_max: int, tol: Tolerances = DEFAULT_TOL) -> OrbitLog:
    """States ``σ_0 … σ_{n_max}`` with relaxation metrics.

    ``delta_S[n] = S(σ_{n+1}) − S(σ_n)``; the last entry uses one extra,
    unlogged application of the channel. States are re-symmetrized after
    every step and the run aborts once the accumulated Hermiticity drift
    exceeds ``1e-6``.
    """
    if n_max < 1:
        raise InvalidInput("n_max must be at least 1")
    _require_bistochastic(ch, tol)
    rho = check_density(sigma0, tol)
    if rho.shape[0] != ch.dim:
        raise InvalidInput(f"state dimension {rho.shape[0]} does not match channel dimension {ch.dim}")
    mixed = maximally_mixed(ch.dim)
    states, drift = [rho], 0.0
    for step in range(1, n_max + 2):
        nxt = apply_schrodinger(ch, states[-1])
        drift += hs_norm(nxt - nxt.conj().T)
        nxt = (nxt + nxt.conj().T) / 2
        if drift > DRIFT_ABORT:
            raise OrbitDrift(f"accumulated Hermiticity drift {drift:.3e} at step {step}", step)
        try:
            check_density(nxt, tol)
        except InvariantViolation as exc:
            raise OrbitDrift(f"state left the density matrices at step {step}: {exc}", step) from exc
        states.append(nxt)
    entropy = np.array([von_neumann_entropy(s, tol) for s in states])
    states = states[:-1]
    return OrbitLog(
        dim=ch.dim,
        states=states,
        trace_dist=np.array([trace_norm(s - mixed) for s in states]),
        hs_dist_sq=np.array([hs_norm(s - mixed) ** 2 for s in states]),
        entropy=entropy[:-1],
        delta_S=np.diff(entropy),
        drift=drift,
    )


def _entropies(lam: np.ndarray) -> np.ndarray:
    # rows of eigenvalues -> S, with 0 ln 0 = 0 and the result clamped to [0, ln N]
    lam = np.clip(lam, 0.0, None)
    safe = np.where(lam > 0, lam, 1.0)
    s = -np.sum(lam * np.log(safe), axis=-1)
    return np.clip(s, 0.0, np.log(lam.shape[-1])) + 0.0


def _validated_stack(sigmas, n: int, tol: Tolerances):
    rho = np.asarray(sigmas, dtype=complex)
    if rho.ndim == 2:
        rho = rho[None]
    if rho.ndim != 3 or rho.shape[1:] != (n, n):
        raise InvalidInput(f"states must be {n}x{n} matrices matching the channel dimension")
    adj = rho.conj().transpose(0, 2, 1)
    resid = np.linalg.norm(rho - adj, axis=(1, 2))
    h = (rho + adj) / 2
    lam = np.linalg.eigvalsh(h)
    tr = lam.sum(axis=1)
    for i in range(len(rho)):
        if resid[i] > tol.tol_herm:
            raise InvariantViolation(f"state {i} not Hermitian: residual {resid[i]:.3e}")
        if abs(tr[i] - 1) > tol.tol_trace:
            raise InvariantViolation(f"state {i} trace {tr[i]!r} differs from 1")
        if lam[i, 0] < -tol.tol_psd:
            raise InvariantViolation(f"state {i} has negative eigenvalue {lam[i, 0]:.3e}")
    return h, lam


def entropy_gains(ch: KrausChannel, sigmas, tol: Tolerances = DEFAULT_TOL):
    """``S(T̂σ) − S(σ)`` and ``‖σ − I/N‖₂²`` for a stack of states."""
    h, lam = _validated_stack(sigmas, ch.dim, tol)
    v = ch.kraus
    out = np.einsum("kab,mbc,kdc->mad", v, h, v.conj())
    out = (out + out.conj().transpose(0, 2, 1)) / 2
    gain = _entropies(np.linalg.eigvalsh(out)) - _entropies(lam)
    dist = np.sum(np.abs(h - maximally_mixed(ch.dim)) ** 2, axis=(1, 2))
    return gain, dist


def _compare_all(bound_id, gain, rhs_factor, dist, tol):
    return [BoundCheckResult.compare(bound_id, g, rhs_factor * d, tol.tol_bound) for g, d in zip(gain, dist)]


def check_streater_bound_batch(ch, sigmas, gamma: float, tol: Tolerances = DEFAULT_TOL):
    gain, dist = entropy_gains(ch, sigmas, tol)
    return _compare_all(GAP, gain, gamma / 2, dist, tol)


def check_streater_bound(ch, sigma, gamma: float, tol: Tolerances = DEFAULT_TOL) -> BoundCheckResult:
    return check_streater_bound_batch(ch, [sigma], gamma, tol)[0]


def _check_rate(c):
    if not 0 <= c < 1:
        raise InvalidInput(f"contraction rate must lie in [0, 1), got {c}")


def check_main_bound_batch(ch, sigmas, c: float, tol: Tolerances = DEFAULT_TOL):
    _check_rate(c)
    gain, dist = entropy_gains(ch, sigmas, tol)
    return _compare_all(MAIN, gain, (1 - c) / 2, dist, tol)


def check_main_bound(ch, sigma, c: float, tol: Tolerances = DEFAULT_TOL) -> BoundCheckResult:
    return check_main_bound_batch(ch, [sigma], c, tol)[0]


def in_sharp_class(ch: KrausChannel, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Self-adjoint channels, bistochastic qubits, and products of the latter."""
    if not certify(ch, tol).is_bistochastic:
        return False
    if is_self_adjoint(ch, tol):
        return True
    factors = ch.factors or (ch,)
    for f in factors:
        if f.dim != 2:
            return False
        try:
            bloch_block(f, tol)
        except NotBistochastic:
            return False
    return True


def check_sharp_bound_batch(ch, sigmas, c: float, tol: Tolerances = DEFAULT_TOL):
    _check_rate(c)
    if not in_sharp_class(ch, tol):
        raise InvalidInput("sharp bound is only claimed for self-adjoint, qubit or qubit-product bistochastic channels")
    gain, dist = entropy_gains(ch, sigmas, tol)
    return _compare_all(SHARP, gain, (1 - c**2) / 2, dist, tol)


def check_sharp_bound(ch, sigma, c: float, tol: Tolerances = DEFAULT_TOL) -> BoundCheckResult:
    return check_sharp_bound_batch(ch, [sigma], c, tol)[0]


def pure_state_distance(n: int) -> float:
    """‖σ − I/N‖₁ for any pure σ."""
    if n < 2:
        raise InvalidInput("N must be at least 2")
    return 2 * (n - 1) / n


def check_convergence_envelope(log: OrbitLog, c: float, kappa: float | None = None,
                               tol: Tolerances = DEFAULT_TOL) -> list[BoundCheckResult]:
    """Per-step geometric and pure-state envelopes (``n ≥ 1`` for the latter).

    The strict inequality of the pure-state envelope is checked as ``≤``
    within ``tol_bound``. With ``kappa`` given, ``κ ≤ √C`` is appended
    (tolerance ``tol_eig``).
    """
    _check_rate(c)
    d0 = log.trace_dist[0]
    out = []
    for n, d in enumerate(log.trace_dist):
        out.append(BoundCheckResult.compare(ENVELOPE_CN, c**n * d0, d, tol.tol_bound, step=n))
        if n >= 1:
            out.append(BoundCheckResult.compare(ENVELOPE_PURE, 2 * c ** (n / 2) * (log.dim - 1) / log.dim, d,
                                                tol.tol_bound, step=n))
    if kappa is not None:
        out.append(BoundCheckResult.compare(KAPPA_ROOT, np.sqrt(c), kappa, tol.tol_eig))
    return out
