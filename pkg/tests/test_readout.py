import math

import numpy as np
import pytest

from qhom.amplitude import AmplificationSchedule, ExactEstimator, MLQAEEstimator
from qhom.quantum import Circuit, Gate, encode_amplitudes, probability_one, qft_circuit, simulate
from qhom.readout import (
    check_symmetry,
    coefficient_unitary,
    dft,
    hadamard_iqft_estimate,
    hadamard_qft_estimate,
    hadamard_test_circuit,
    idft,
    pack,
    phase_table,
    qft_amplitude,
    readout_gate_counts,
    readout_report,
    sign_determination,
    symmetric_iqft,
    symmetric_qft,
    unpack,
    write_readout_csv,
)

EXACT = ExactEstimator()
BELL = np.array([1, 0, 0, 1]) / math.sqrt(2)


def mirrored(rng, shape, parities):
    f = rng.normal(size=tuple(s // 2 for s in shape))
    for ax, p in enumerate(parities):
        f = np.concatenate([f, (1 if p == "even" else -1) * np.flip(f, axis=ax)], axis=ax)
    return f


def zero(n):
    z = np.zeros(2**n, dtype=complex)
    z[0] = 1
    return z


def hadamard_p1(U, prep, imag=False):
    n = U.n_qubits
    return probability_one(simulate(hadamard_test_circuit(U, imag, prep), zero(n + 1)), n)


def test_hadamard_test_identity():
    U = Circuit(1, [])
    prep = Circuit(1, [Gate("H", (0,))])
    assert hadamard_p1(U, prep) == pytest.approx(0.0)  # Re = 1


def test_hadamard_test_phase_flip():
    prep = Circuit(1, [Gate("H", (0,))])
    U = Circuit(1, [Gate("U1", (0,), param=math.pi)])
    assert 1 - 2 * hadamard_p1(U, prep) == pytest.approx(0.0)


def test_hadamard_test_quarter_phase():
    prep = Circuit(1, [Gate("H", (0,))])
    U = Circuit(1, [Gate("U1", (0,), param=math.pi / 2)])
    assert 1 - 2 * hadamard_p1(U, prep) == pytest.approx(0.5)
    assert 1 - 2 * hadamard_p1(U, prep, imag=True) == pytest.approx(0.5)


def test_coefficient_unitary_overlaps():
    n = 2
    prep = encode_amplitudes(BELL) + qft_circuit(n)
    psi = simulate(prep, zero(n))
    # <psi|U|psi> = conj(psi_k)
    for k in range(4):
        out = simulate(coefficient_unitary(k, prep), psi)
        assert np.vdot(psi, out) == pytest.approx(np.conj(psi[k]))
    assert abs(psi[2]) < 1e-12
    delta = np.zeros(4)
    delta[0] = 1
    prep0 = encode_amplitudes(delta) + qft_circuit(n)
    psi0 = simulate(prep0, zero(n))
    assert np.vdot(psi0, simulate(coefficient_unitary(0, prep0), psi0)) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        coefficient_unitary(4, prep)


def test_pack_roundtrip():
    rng = np.random.default_rng(0)
    for shape, tensor in [((8,), False), ((4, 8), False), ((3, 4, 8), True), ((3, 4), True)]:
        f = rng.normal(size=shape)
        u, pk = pack(f, tensor)
        assert u.size == 2**pk.layout.n_qubits
        assert np.allclose(unpack(u, pk), f)


def test_dft_normalisation():
    rng = np.random.default_rng(1)
    f = rng.normal(size=16)
    F = dft(f)
    assert np.linalg.norm(F) == pytest.approx(4 * np.linalg.norm(f))
    assert np.allclose(idft(F), f, atol=1e-12)
    assert np.all(dft(np.zeros(4)) == 0)


def test_hadamard_delta_input():
    assert np.allclose(hadamard_qft_estimate(np.array([1.0, 0.0]), EXACT), [1, 1])


@pytest.mark.parametrize("backend", ["state", "circuit"])
def test_hadamard_random_complex(backend):
    rng = np.random.default_rng(2)
    f = rng.normal(size=8) + 1j * rng.normal(size=8)
    assert np.allclose(hadamard_qft_estimate(f, EXACT, backend=backend), dft(f), atol=1e-6)


def test_amplitudes_of_bell():
    a = qft_amplitude(BELL, EXACT)
    assert np.allclose(a, 2 * np.array([1 / math.sqrt(2), 0.5, 0, 0.5]))


def test_delta_gives_flat_amplitudes():
    f = np.zeros(8)
    f[3] = 2.0
    assert np.allclose(qft_amplitude(f, EXACT), 2.0)


def test_sign_of_constant_vector():
    f = np.ones(4) / 2
    a = qft_amplitude(f, EXACT)
    beta = phase_table(f.shape, "even")
    s = sign_determination(f, a, beta, EXACT)
    assert s[0] == 1
    assert np.allclose(s[1:], 0)
    assert np.allclose(symmetric_qft(f, EXACT, "even"), [2, 0, 0, 0])


def test_signs_of_small_even_input():
    f = np.array([1.0, 2.0, 2.0, 1.0])
    F = dft(f)
    beta = phase_table(f.shape, "even")
    got = symmetric_qft(f, EXACT, "even")
    assert np.allclose(got, F, atol=1e-9)
    r = (F * np.exp(-1j * beta)).real
    s = sign_determination(f, np.abs(F), beta, EXACT)
    assert np.array_equal(s[np.abs(r) > 1e-9], np.sign(r[np.abs(r) > 1e-9]))


@pytest.mark.parametrize("parities", [("even",), ("odd",), ("even", "even"), ("odd", "even"), ("odd", "odd")])
def test_symmetric_path_matches_fft(parities):
    rng = np.random.default_rng(len(parities))
    shape = (8,) if len(parities) == 1 else (4, 8)
    f = mirrored(rng, shape, parities)
    assert np.allclose(symmetric_qft(f, EXACT, parities), dft(f), atol=1e-9)


def test_symmetric_path_circuit_backend():
    rng = np.random.default_rng(5)
    f = mirrored(rng, (2, 4), ("even", "odd"))
    assert np.allclose(symmetric_qft(f, EXACT, ("even", "odd"), backend="circuit"), dft(f), atol=1e-9)


def test_tensor_field_readout():
    rng = np.random.default_rng(6)
    sym = [("even", "even"), ("even", "even"), ("odd", "odd")]
    f = np.stack([mirrored(rng, (4, 4), s) for s in sym])
    F = dft(f, tensor=True)
    assert np.allclose(symmetric_qft(f, EXACT, sym, tensor=True), F, atol=1e-9)
    assert np.allclose(hadamard_qft_estimate(f, EXACT, tensor=True), F, atol=1e-9)
    assert np.allclose(symmetric_iqft(F, EXACT, tensor=True), f, atol=1e-9)
    assert np.allclose(hadamard_iqft_estimate(F, EXACT, tensor=True), f, atol=1e-9)


def test_inverse_paths_general_spectrum():
    rng = np.random.default_rng(7)
    f = rng.normal(size=(4, 4))
    F = dft(f)
    assert np.allclose(symmetric_iqft(F, EXACT), f, atol=1e-9)
    assert np.allclose(hadamard_iqft_estimate(F, EXACT), f, atol=1e-9)


def test_phase_lemma():
    rng = np.random.default_rng(8)
    for parities in [("even",), ("odd",), ("even", "odd")]:
        shape = (16,) if len(parities) == 1 else (8, 4)
        f = mirrored(rng, shape, parities)
        beta = phase_table(f.shape, parities)
        assert np.abs((dft(f) * np.exp(-1j * beta)).imag).max() < 1e-9


def test_symmetry_check():
    check_symmetry(np.array([1.0, 2.0, 2.0, 1.0]), "even")
    with pytest.raises(ValueError):
        check_symmetry(np.array([1.0, 2.0, 2.0, 1.0]), "odd")
    with pytest.raises(ValueError):
        symmetric_qft(np.array([1.0, 2.0, 3.0, 4.0]), EXACT, "even")


def test_zero_input():
    assert np.all(symmetric_qft(np.zeros(4), EXACT, "even") == 0)
    assert np.all(hadamard_qft_estimate(np.zeros(4), EXACT) == 0)


def test_bell_noisy_readout_close():
    sched = AmplificationSchedule.exponential(4, 1000, 0)
    F = dft(BELL)
    assert np.linalg.norm(hadamard_qft_estimate(BELL, MLQAEEstimator(sched)) - F) < 0.2
    assert np.linalg.norm(symmetric_qft(BELL, MLQAEEstimator(sched), "even") - F) < 0.2


def test_symmetric_path_needs_fewer_gates():
    counts = readout_gate_counts(mirrored(np.random.default_rng(9), (4, 4), ("even", "even")))
    assert counts["symmetric_total"] < counts["hadamard_total"]
    assert counts["symmetric_multi_controlled"] < counts["hadamard_multi_controlled"]


def test_report_csv(tmp_path):
    f = np.array([1.0, 2.0, 2.0, 1.0])
    rep = readout_report(f, EXACT, "symmetric", "even")
    assert rep.l2_error < 1e-9
    path = tmp_path / "r.csv"
    write_readout_csv(rep, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "k,re,im,amplitude,sign,oracle_re,oracle_im,abs_error"
    assert len(lines) == 5
