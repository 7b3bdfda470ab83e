import numpy as np
import pytest

from bistochastic.channel import (
    KrausChannel,
    apply_heisenberg,
    apply_schrodinger,
    certify,
    choi_matrix,
    choi_partial_trace_output,
    compose,
    duality_check,
    hermitian_basis,
    identity_channel,
    kraus_from_choi,
    make_amplitude_damping,
    make_depolarizing,
    make_random_unitary_mixture,
    superoperator_heisenberg,
    superoperator_schrodinger,
    tensor_product,
    weyl_operators,
)
from bistochastic.errors import ChannelError, InvalidInput
from bistochastic.matrix import haar_unitary, hs_inner, hs_norm, random_density, random_hermitian, trace_norm
from bistochastic.matrix import von_neumann_entropy

from conftest import X, Y, Z, I2, conj_channel, half_mixture, pauli_depolarizing


def brute_superoperator(ch):
    """Entry-by-entry ⟨B_a, T̂(B_b)⟩ using explicit Kraus sums."""
    basis = hermitian_basis(ch.dim)
    out = np.zeros((len(basis), len(basis)), dtype=complex)
    for a, ba in enumerate(basis):
        for b, bb in enumerate(basis):
            image = sum(v @ bb @ v.conj().T for v in ch.kraus)
            out[a, b] = np.trace(ba.conj().T @ image)
    return out


def test_channel_is_immutable():
    ch = identity_channel(2)
    with pytest.raises(AttributeError):
        ch.dim = 3
    with pytest.raises(ValueError):
        ch.kraus[0][0, 0] = 2


def test_incomplete_kraus_rejected():
    with pytest.raises(ChannelError) as info:
        KrausChannel([np.diag([1, 0])])
    assert info.value.residual == pytest.approx(1)
    with pytest.raises(ChannelError):
        KrausChannel([np.eye(2), np.eye(3)])
    with pytest.raises(ChannelError):
        KrausChannel([])


def test_heisenberg_examples(rng):
    a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    assert np.allclose(apply_heisenberg(identity_channel(2), a), a)
    u = haar_unitary(2, rng)
    assert np.allclose(apply_heisenberg(conj_channel(u), a), u.conj().T @ a @ u)
    assert np.allclose(apply_heisenberg(pauli_depolarizing(0.5), Z), 0.5 * Z)
    assert np.allclose(apply_heisenberg(identity_channel(3), np.eye(3)), np.eye(3))


def test_schrodinger_examples(rng):
    sigma = random_density(2, rng)
    assert np.allclose(apply_schrodinger(pauli_depolarizing(1), sigma), I2 / 2)
    assert np.allclose(apply_schrodinger(identity_channel(2), sigma), sigma)
    # (1 - p) sigma + p I/2 at p = 0.5
    assert np.allclose(apply_schrodinger(pauli_depolarizing(0.5), np.diag([1, 0])), np.diag([0.75, 0.25]))
    with pytest.raises(InvalidInput):
        apply_schrodinger(identity_channel(2), np.eye(3))


def test_schrodinger_preserves_trace_and_hermiticity(rng):
    ch = make_random_unitary_mixture(3, 3, 5)
    a = random_hermitian(3, rng)
    out = apply_schrodinger(ch, a)
    assert np.trace(out) == pytest.approx(np.trace(a))
    assert np.allclose(out, out.conj().T)
    amp = make_amplitude_damping(0.3)
    b = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    assert np.trace(apply_schrodinger(amp, b)) == pytest.approx(np.trace(b))


def test_duality_examples(rng):
    assert duality_check(identity_channel(2), X, Y) == pytest.approx(0, abs=1e-15)
    ch = make_random_unitary_mixture(3, 4, 1)
    assert duality_check(ch, np.eye(3), np.eye(3)) < 1e-12
    dep = pauli_depolarizing(0.3)
    lhs = np.trace(apply_schrodinger(dep, np.diag([1, 0])) @ X)
    rhs = np.trace(np.diag([1, 0]) @ apply_heisenberg(dep, X))
    assert abs(lhs - rhs) < 1e-12
    assert duality_check(dep, np.diag([1, 0]), X) < 1e-12


def test_duality_random_triples(rng):
    for i in range(100):
        n = 2 + i % 3
        ch = make_random_unitary_mixture(n, 1 + i % 4, i) if i % 2 else make_depolarizing(n, (i % 10) / 10)
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        assert duality_check(ch, a, b) <= 1e-9


def test_choi_examples():
    c = choi_matrix(identity_channel(2))
    omega = np.zeros(4)
    omega[[0, 3]] = 1
    assert np.allclose(c, np.outer(omega, omega))
    assert np.allclose(np.linalg.eigvalsh(c), [0, 0, 0, 2])
    # fully depolarizing: sum_jk (tr E_jk) I/2 ⊗ E_jk = I/2 ⊗ I
    assert np.allclose(choi_matrix(pauli_depolarizing(1)), np.eye(4) / 2)
    for seed in range(5):
        ch = make_random_unitary_mixture(3, 3, seed)
        c = choi_matrix(ch)
        assert np.linalg.eigvalsh(c)[0] >= -1e-9
        assert np.allclose(choi_partial_trace_output(c, 3), np.eye(3))


def _same_action(ch1, ch2, atol):
    for b in hermitian_basis(ch1.dim):
        assert np.allclose(apply_schrodinger(ch1, b), apply_schrodinger(ch2, b), atol=atol)


def test_kraus_from_choi_examples(rng):
    k = kraus_from_choi(choi_matrix(identity_channel(2)))
    assert len(k) == 1
    v = k.kraus[0]
    phase = v[0, 0] / abs(v[0, 0])
    assert np.allclose(v / phase, I2)

    u = haar_unitary(3, rng)
    k = kraus_from_choi(choi_matrix(conj_channel(u)))
    assert len(k) == 1
    w = k.kraus[0]
    phase = np.vdot(u, w) / abs(np.vdot(u, w))
    assert hs_norm(w / phase - u) < 1e-9

    dep = pauli_depolarizing(0.5)
    k = kraus_from_choi(choi_matrix(dep))
    assert len(k) == 4
    _same_action(k, dep, 1e-9)


def test_kraus_from_choi_rejects_bad_input():
    with pytest.raises(ChannelError):
        kraus_from_choi(np.diag([1, -1, 0, 1]).astype(complex))
    with pytest.raises(ChannelError):
        kraus_from_choi(2 * choi_matrix(identity_channel(2)))
    with pytest.raises(InvalidInput):
        kraus_from_choi(np.eye(3))


def test_choi_round_trip_random(rng):
    for seed in range(30):
        n = 2 + seed % 3
        ch = make_random_unitary_mixture(n, 1 + seed % 6, seed)
        k = kraus_from_choi(choi_matrix(ch))
        assert len(k) <= n * n
        _same_action(k, ch, 1e-8)


def test_certify_examples():
    cert = certify(identity_channel(2))
    assert cert.is_cptp and cert.is_bistochastic

    eta = 0.5
    amp = make_amplitude_damping(eta)
    cert = certify(amp)
    assert cert.is_cptp and not cert.is_bistochastic
    # sum V V† = diag(1 + eta, 1 - eta)
    assert cert.dual_unitality_residual == pytest.approx(np.sqrt(2) * eta)

    cert = certify(half_mixture(X))
    assert cert.is_cptp and cert.is_bistochastic


def test_certify_non_trace_preserving():
    cert = certify(KrausChannel([np.diag([1, 0])], check=False))
    assert not cert.is_cptp and not cert.is_bistochastic
    assert cert.unitality_residual == pytest.approx(1)


def test_basis_orthonormal_hermitian():
    for n in range(1, 6):
        b = hermitian_basis(n)
        gram = np.einsum("aij,bij->ab", b.conj(), b)
        assert np.allclose(gram, np.eye(n * n), atol=1e-12)
        assert all(np.allclose(m, m.conj().T) for m in b)
        assert all(abs(np.trace(m)) < 1e-12 for m in b[1:])
    q = hermitian_basis(2) * np.sqrt(2)
    assert np.allclose(q[1], X) and np.allclose(q[2], Y) and np.allclose(q[3], Z)


def test_superoperator_examples():
    assert np.allclose(superoperator_schrodinger(identity_channel(3)).matrix, np.eye(9))
    for p in (0.0, 0.3, 0.8):
        assert np.allclose(superoperator_schrodinger(pauli_depolarizing(p)).matrix, np.diag([1, 1 - p, 1 - p, 1 - p]))
    assert np.allclose(superoperator_schrodinger(conj_channel(X)).matrix, np.diag([1, 1, -1, -1]))


def test_superoperator_matches_brute_force():
    for seed in range(5):
        ch = make_random_unitary_mixture(3, 3, seed)
        assert np.allclose(superoperator_schrodinger(ch).matrix, brute_superoperator(ch), atol=1e-12)
    amp = make_amplitude_damping(0.4)
    s = superoperator_schrodinger(amp).matrix
    assert np.allclose(s, brute_superoperator(amp), atol=1e-12)
    assert np.allclose(s[0], [1, 0, 0, 0])


def test_heisenberg_superoperator_is_transpose():
    assert np.allclose(superoperator_heisenberg(identity_channel(2)).matrix, np.eye(4))
    assert np.allclose(superoperator_heisenberg(pauli_depolarizing(0.4)).matrix, np.diag([1, 0.6, 0.6, 0.6]))
    for seed in range(10):
        ch = make_random_unitary_mixture(3, 4, seed)
        s = superoperator_schrodinger(ch).matrix
        h = superoperator_heisenberg(ch).matrix
        assert np.max(np.abs(h - s.T)) < 1e-9


def test_bistochastic_block_form():
    s = superoperator_schrodinger(make_random_unitary_mixture(4, 3, 2)).matrix
    assert np.allclose(s[0], np.eye(16)[0], atol=1e-7)
    assert np.allclose(s[:, 0], np.eye(16)[0], atol=1e-7)


def test_composition_is_matrix_product():
    a = make_random_unitary_mixture(3, 2, 1)
    b = make_random_unitary_mixture(3, 3, 2)
    sab = superoperator_schrodinger(compose(a, b)).matrix
    assert np.allclose(sab, superoperator_schrodinger(b).matrix @ superoperator_schrodinger(a).matrix, atol=1e-9)


def test_tensor_product_examples():
    prod = tensor_product(identity_channel(2), identity_channel(3))
    assert prod.dim == 6
    assert np.allclose(superoperator_schrodinger(prod).matrix, np.eye(36))
    zz = np.kron(Z, Z)
    p = 0.3
    out = apply_schrodinger(tensor_product(pauli_depolarizing(p), identity_channel(2)), zz)
    assert np.allclose(out, (1 - p) * zz)
    out = apply_schrodinger(tensor_product(pauli_depolarizing(0.5), pauli_depolarizing(0.3)), zz)
    assert np.allclose(out, 0.5 * 0.7 * zz)
    prod = tensor_product(make_random_unitary_mixture(2, 3, 1), make_random_unitary_mixture(2, 2, 2))
    assert certify(prod).is_bistochastic
    assert len(prod.factors) == 2


def test_depolarizing_examples(rng):
    ch = make_depolarizing(3, 0.0)
    for b in hermitian_basis(3):
        assert np.allclose(apply_schrodinger(ch, b), b)
    ch = make_depolarizing(3, 1.0)
    for _ in range(3):
        assert np.allclose(apply_schrodinger(ch, random_density(3, rng)), np.eye(3) / 3)
    out = apply_schrodinger(make_depolarizing(3, 0.4), np.diag([1, 0, 0]))
    assert np.allclose(out, 0.6 * np.diag([1, 0, 0]) + 0.4 * np.eye(3) / 3)
    assert np.allclose(np.diag(out).real, [0.6 + 0.4 / 3, 0.4 / 3, 0.4 / 3])
    with pytest.raises(InvalidInput):
        make_depolarizing(2, 1.5)


def test_depolarizing_matches_formula_all_dims(rng):
    for n in (2, 3, 4, 5):
        for p in (0.1, 0.55, 0.9):
            ch = make_depolarizing(n, p)
            assert certify(ch).is_bistochastic
            a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            expected = (1 - p) * a + p * np.trace(a) * np.eye(n) / n
            assert np.allclose(apply_schrodinger(ch, a), expected, atol=1e-12)


def test_weyl_operators_orthogonal():
    ops = weyl_operators(3)
    gram = np.array([[hs_inner(a, b) for b in ops] for a in ops])
    assert np.allclose(gram, 3 * np.eye(9))


def test_random_unitary_mixture():
    u = make_random_unitary_mixture(3, 1, 4).kraus[0]
    assert np.allclose(u.conj().T @ u, np.eye(3))
    a = make_random_unitary_mixture(2, 4, 7)
    b = make_random_unitary_mixture(2, 4, 7)
    assert np.array_equal(a.kraus, b.kraus)
    for seed in range(5):
        assert certify(make_random_unitary_mixture(3, 5, seed)).is_bistochastic
    with pytest.raises(InvalidInput):
        make_random_unitary_mixture(2, 0, 1)


def test_trace_norm_nonexpansive(rng):
    for seed in range(20):
        ch = make_random_unitary_mixture(3, 3, seed) if seed % 2 else make_amplitude_damping(seed / 20)
        a = random_hermitian(ch.dim, rng)
        assert trace_norm(apply_schrodinger(ch, a)) <= trace_norm(a) + 1e-7


def test_hs_nonexpansive_bistochastic(rng):
    for seed in range(50):
        ch = make_random_unitary_mixture(2 + seed % 3, 1 + seed % 5, seed)
        a = random_hermitian(ch.dim, rng)
        assert hs_norm(apply_heisenberg(ch, a)) <= hs_norm(a) + 1e-7
        assert hs_norm(apply_schrodinger(ch, a)) <= hs_norm(a) + 1e-7


def test_entropy_nondecreasing_bistochastic(rng):
    for seed in range(30):
        ch = make_random_unitary_mixture(3, 3, seed)
        rho = random_density(3, rng, rank=1 + seed % 3)
        assert von_neumann_entropy(apply_schrodinger(ch, rho)) >= von_neumann_entropy(rho) - 1e-9
