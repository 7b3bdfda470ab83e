import numpy as np
import pytest

from bistochastic.channel import (
    KrausChannel,
    compose,
    identity_channel,
    make_amplitude_damping,
    make_depolarizing,
    make_random_unitary_mixture,
    superoperator_schrodinger,
)
from bistochastic.errors import NotBistochastic, NotErgodic
from bistochastic.spectral import (
    commutant_dimension,
    fixed_space_dimension,
    is_ergodic,
    is_self_adjoint,
    kappa,
    spectral_gap,
    tthat_eigenvalues,
)

from conftest import X, Z, conj_channel, pauli_depolarizing


def near_identity(eps):
    full = make_depolarizing(2, 1.0)
    return KrausChannel([np.sqrt(1 - eps) * np.eye(2)] + [np.sqrt(eps) * v for v in full.kraus])


def brute_commutant_dim(ch):
    """Null space of X -> (V_i X - X V_i)_i via its matrix on the standard basis."""
    n = ch.dim
    cols = []
    for j in range(n * n):
        e = np.zeros(n * n, dtype=complex)
        e[j] = 1
        x = e.reshape(n, n)
        cols.append(np.concatenate([(v @ x - x @ v).ravel() for v in ch.kraus]))
    return n * n - np.linalg.matrix_rank(np.array(cols).T, tol=1e-8)


def test_commutant_examples():
    assert commutant_dimension(identity_channel(2)) == 4
    assert commutant_dimension(pauli_depolarizing(0.5)) == 1
    theta = np.sqrt(2) * np.pi
    u = np.diag([1, np.exp(1j * theta)])
    assert commutant_dimension(conj_channel(u)) == 2
    with pytest.raises(NotBistochastic):
        commutant_dimension(make_amplitude_damping(0.3))


def test_commutant_matches_brute_force():
    for seed in range(10):
        ch = make_random_unitary_mixture(3, 1 + seed % 3, seed)
        assert commutant_dimension(ch) == brute_commutant_dim(ch)


def test_is_ergodic_examples():
    assert not is_ergodic(identity_channel(2))
    assert is_ergodic(pauli_depolarizing(0.3))
    assert not is_ergodic(conj_channel(Z))


def test_ergodicity_methods_agree():
    for seed in range(200):
        ch = make_random_unitary_mixture(2 + seed % 3, 1 + seed % 4, seed)
        c = commutant_dimension(ch)
        f = fixed_space_dimension(ch)
        assert (c == 1) == (f == 1)
        assert c == f


def test_spectral_gap_examples():
    for p in (0.1, 0.5, 0.9):
        rep = spectral_gap(pauli_depolarizing(p))
        assert rep.one_minus_gamma == pytest.approx((1 - p) ** 2, abs=1e-12)
    assert spectral_gap(pauli_depolarizing(0.5)).gap_gamma == pytest.approx(0.75)
    assert spectral_gap(make_depolarizing(3, 0.4)).gap_gamma == pytest.approx(1 - 0.36)
    assert spectral_gap(near_identity(0.01)).gap_gamma == pytest.approx(1 - 0.99**2, abs=1e-12)


def test_spectral_gap_refuses_non_ergodic():
    with pytest.raises(NotErgodic):
        spectral_gap(identity_channel(2))
    with pytest.raises(NotBistochastic):
        spectral_gap(make_amplitude_damping(0.2))


def test_spectral_report_invariants():
    for seed in range(30):
        rep = spectral_gap(make_random_unitary_mixture(2 + seed % 3, 2 + seed % 3, seed))
        assert rep.gap_gamma == pytest.approx(1 - rep.one_minus_gamma, abs=1e-12)
        ev = np.array(rep.eigenvalues_TThat)
        assert np.all(ev >= 0) and np.all(ev <= 1)
        assert rep.is_ergodic and rep.commutant_dim == 1 and rep.fixed_space_dim == 1


def test_tthat_eigenvalues_in_unit_interval():
    for seed in range(20):
        ev = tthat_eigenvalues(make_random_unitary_mixture(3, 3, seed))
        assert ev.min() >= -1e-8 and ev.max() <= 1 + 1e-8


def test_kappa_examples():
    assert kappa(pauli_depolarizing(0.5)) == pytest.approx(0.5)
    ch = compose(conj_channel(X), pauli_depolarizing(0.2))
    assert np.allclose(sorted(np.linalg.eigvals(superoperator_schrodinger(ch).matrix).real), [-0.8, -0.8, 0.8, 1])
    assert kappa(ch) == pytest.approx(0.8)
    assert kappa(make_depolarizing(3, 1.0)) == pytest.approx(0, abs=1e-12)
    with pytest.raises(NotErgodic):
        kappa(identity_channel(2))


def test_self_adjoint_gap_bounded_by_kappa_squared():
    for p in (0.2, 0.6):
        ch = make_depolarizing(3, p)
        assert is_self_adjoint(ch)
        rep = spectral_gap(ch)
        assert rep.one_minus_gamma == pytest.approx(rep.kappa**2, abs=1e-10)
