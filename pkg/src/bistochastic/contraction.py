"""Trace-norm contraction rate of the Schrödinger-picture map.

The rate over traceless Hermitian inputs equals half the largest trace norm
of ``T̂(|ψ⟩⟨ψ| − |φ⟩⟨φ|)`` over orthonormal pairs. That pair supremum is
maximized by multi-start alternating ascent:

1. ``S = sign(T̂(ψψ† − φφ†))``, the optimal dual witness for the pair;
2. ``ψ, φ`` = top and bottom eigenvectors of ``T(S)``, the optimal pair
   for the witness.

Each half-step can only increase the objective, and no derivatives are
needed. For ``N ≥ 3`` the result is a certified *lower* bound on the rate
only; qubit bistochastic channels use the exact value ``‖M‖``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import KrausChannel, apply_heisenberg, apply_schrodinger, certify, hermitian_basis
from .channel import superoperator_schrodinger
from .errors import InvalidInput, NotBistochastic
from .matrix import DEFAULT_TOL, Tolerances, trace_norm
from .qubit import king_ruskai_form, optimal_pair

QUBIT_EXACT = "qubit_exact"
PAIR_OPTIMIZATION = "pair_optimization"
DEFAULT_RESTARTS = 32


@dataclass(frozen=True)
class ContractionEstimate:
    c_lower: float
    method: str
    restarts: int
    best_pair: tuple = field(repr=False)
    converged: bool


@dataclass(frozen=True)
class AuditReport:
    trials: int
    max_ratio: float
    initial_violators: int
    violators: list
    rounds: int
    certified: bool
    estimate: ContractionEstimate

    @property
    def inconclusive(self) -> bool:
        return not self.certified


def _orthonormalize(psi, phi, tol: Tolerances):
    psi = np.asarray(psi, dtype=complex)
    phi = np.asarray(phi, dtype=complex)
    if psi.shape != phi.shape or psi.ndim != 1:
        raise InvalidInput("psi and phi must be vectors of equal length")
    npsi = np.linalg.norm(psi)
    if npsi == 0:
        raise InvalidInput("psi is the zero vector")
    psi = psi / npsi
    phi = phi - psi * np.vdot(psi, phi)
    nphi = np.linalg.norm(phi)
    if nphi <= tol.tol_eig * max(1.0, np.linalg.norm(phi)):
        raise InvalidInput("psi and phi are parallel; no orthonormal pair can be formed")
    return psi, phi / nphi


def _difference(psi, phi):
    return np.outer(psi, psi.conj()) - np.outer(phi, phi.conj())


def pair_objective(ch: KrausChannel, psi, phi, tol: Tolerances = DEFAULT_TOL) -> float:
    """½‖T̂(ψψ† − φφ†)‖₁ after Gram-Schmidt on the pair."""
    if len(psi) != ch.dim:
        raise InvalidInput(f"vectors of length {len(psi)} do not match channel dimension {ch.dim}")
    psi, phi = _orthonormalize(psi, phi, tol)
    return trace_norm(apply_schrodinger(ch, _difference(psi, phi))) / 2


def _pair_from_witness(ch: KrausChannel, s: np.ndarray):
    h = apply_heisenberg(ch, s)
    _, v = np.linalg.eigh((h + h.conj().T) / 2)
    return v[:, -1], v[:, 0]


def _sign(y: np.ndarray) -> np.ndarray:
    w, u = np.linalg.eigh((y + y.conj().T) / 2)
    return (u * np.sign(w)) @ u.conj().T


def ascend(ch: KrausChannel, psi, phi, max_iter: int = 2000, atol: float = 1e-15):
    """Alternating ascent from a starting pair; returns (value, (ψ, φ), converged)."""
    value = -np.inf
    for _ in range(max_iter):
        y = apply_schrodinger(ch, _difference(psi, phi))
        w = np.linalg.eigvalsh((y + y.conj().T) / 2)
        new = float(np.sum(np.abs(w))) / 2
        if new <= value + atol:
            return max(new, value), (psi, phi), True
        value = new
        psi, phi = _pair_from_witness(ch, _sign(y))
    return value, (psi, phi), False


def _random_pair(n: int, rng: np.random.Generator, tol: Tolerances):
    z = rng.standard_normal((2, n)) + 1j * rng.standard_normal((2, n))
    return _orthonormalize(z[0], z[1], tol)


def _one_restart(ch: KrausChannel, seq: np.random.SeedSequence, tol: Tolerances):
    psi, phi = _random_pair(ch.dim, np.random.default_rng(seq), tol)
    return ascend(ch, psi, phi)


def _merge(results):
    # first index wins ties, so serial and threaded runs agree
    best = None
    for value, pair, conv in results:
        if best is None or value > best[0]:
            best = (value, pair, conv)
    return best


def optimize_pairs(ch: KrausChannel, restarts: int = DEFAULT_RESTARTS, seed: int = 0, workers: int = 1, tol=DEFAULT_TOL):
    if restarts < 1:
        raise InvalidInput("restarts must be at least 1")
    if ch.dim < 2:
        raise InvalidInput("orthonormal pairs need dimension at least 2")
    seqs = np.random.SeedSequence(seed).spawn(restarts)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda s: _one_restart(ch, s, tol), seqs))
    else:
        results = [_one_restart(ch, s, tol) for s in seqs]
    value, pair, conv = _merge(results)
    return ContractionEstimate(
        c_lower=float(min(max(value, 0.0), 1.0 + tol.tol_eig)),
        method=PAIR_OPTIMIZATION,
        restarts=restarts,
        best_pair=pair,
        converged=bool(conv),
    )


def estimate_contraction_rate(
    ch: KrausChannel,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    *,
    method: str | None = None,
    workers: int = 1,
    tol: Tolerances = DEFAULT_TOL,
) -> ContractionEstimate:
    """Best rate found; exact for bistochastic qubits unless ``method`` forces the optimizer."""
    if restarts < 1:
        raise InvalidInput("restarts must be at least 1")
    cert = certify(ch, tol)
    if not cert.is_cptp:
        raise InvalidInput("contraction rate needs a trace-preserving CP map")
    if method not in (None, QUBIT_EXACT, PAIR_OPTIMIZATION):
        raise InvalidInput(f"unknown method {method!r}")
    if method == QUBIT_EXACT and not (ch.dim == 2 and cert.is_bistochastic):
        raise InvalidInput("the exact qubit route needs a bistochastic qubit channel")
    if method != PAIR_OPTIMIZATION and ch.dim == 2 and cert.is_bistochastic:
        form = king_ruskai_form(ch, tol)
        return ContractionEstimate(form.c_exact, QUBIT_EXACT, 0, optimal_pair(form), True)
    return optimize_pairs(ch, restarts, seed, workers, tol)


def random_traceless_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    basis = hermitian_basis(n)[1:]
    return np.einsum("a,aij->ij", rng.standard_normal(len(basis)), basis)


def sample_ratio_audit(
    ch: KrausChannel,
    estimate: ContractionEstimate,
    trials: int,
    seed: int = 0,
    *,
    max_rounds: int = 5,
    tol: Tolerances = DEFAULT_TOL,
) -> AuditReport:
    """Falsify ``estimate`` with random traceless Hermitian inputs.

    Every sample whose ratio ``‖T̂A‖₁/‖A‖₁`` beats the estimate by more than
    ``tol_audit`` seeds a fresh ascent (its dual witness ``sign(T̂A)`` gives
    the starting pair); the estimate is raised and the check repeated, for
    at most ``max_rounds`` rounds.
    """
    if trials < 1:
        raise InvalidInput("trials must be at least 1")
    if ch.dim < 2:
        raise InvalidInput("traceless inputs need dimension at least 2")
    rng = np.random.default_rng(seed)
    samples = [random_traceless_hermitian(ch.dim, rng) for _ in range(trials)]
    images = [apply_schrodinger(ch, a) for a in samples]
    ratios = np.array([trace_norm(y) / trace_norm(a) for a, y in zip(samples, images)])

    def violators(c):
        return [(int(i), float(ratios[i])) for i in np.flatnonzero(ratios > c + tol.tol_audit)]

    best = estimate
    bad = violators(best.c_lower)
    initial = len(bad)
    rounds = 0
    while bad and rounds < max_rounds:
        rounds += 1
        for i, _ in bad:
            psi, phi = _pair_from_witness(ch, _sign(images[i]))
            value, pair, conv = ascend(ch, psi, phi)
            if value > best.c_lower:
                best = replace(best, c_lower=float(min(value, 1.0 + tol.tol_eig)), best_pair=pair,
                               method=PAIR_OPTIMIZATION, converged=conv)
        bad = violators(best.c_lower)
    return AuditReport(
        trials=trials,
        max_ratio=float(ratios.max()),
        initial_violators=initial,
        violators=bad,
        rounds=rounds,
        certified=not bad,
        estimate=best,
    )


def exact_contraction_rate(ch: KrausChannel, tol: Tolerances = DEFAULT_TOL):
    """The rate when it is known in closed form, else ``None``.

    Closed forms: bistochastic qubits (``‖M‖``); channels acting as a scalar
    ``q`` on every traceless input (``|q|``, e.g. depolarizing at any N);
    tensor products whose factors all have closed-form rates (the largest
    factor rate).
    """
    cert = certify(ch, tol)
    if not cert.is_cptp:
        return None
    if ch.factors:
        rates = [exact_contraction_rate(f, tol) for f in ch.factors]
        if all(r is not None for r in rates) and all(_is_isotropic(f, tol) is not None for f in ch.factors):
            return max(rates)
        return None
    if ch.dim == 2 and cert.is_bistochastic:
        return king_ruskai_form(ch, tol).c_exact
    q = _is_isotropic(ch, tol)
    return None if q is None else abs(q)


def product_rate(ch: KrausChannel, tol: Tolerances = DEFAULT_TOL):
    """Largest factor rate of a product of bistochastic qubit channels, else ``None``."""
    if not ch.factors:
        return None
    rates = []
    for f in ch.factors:
        if f.dim != 2:
            return None
        try:
            rates.append(king_ruskai_form(f, tol).c_exact)
        except NotBistochastic:
            return None
    return max(rates)


def _is_isotropic(ch: KrausChannel, tol: Tolerances):
    if ch.dim < 2:
        return None
    block = superoperator_schrodinger(ch, tol).traceless_block
    q = float(np.mean(np.diag(block)))
    if np.max(np.abs(block - q * np.eye(len(block)))) <= tol.tol_fix:
        return q
    return None
