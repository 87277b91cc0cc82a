import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qhom.quantum import (
    Circuit,
    Gate,
    RegisterLayout,
    Statevector,
    apply_gate,
    encode_amplitudes,
    inverse_qft_circuit,
    measure_shots,
    probability_one,
    qft_2d,
    qft_circuit,
    qft_tensor_field,
    simulate,
)


def brute_dft(f):
    """O(N^2) unitary DFT with omega = exp(-2i pi / N)."""
    N = len(f)
    j = np.arange(N)
    W = np.exp(-2j * np.pi * np.outer(j, j) / N) / math.sqrt(N)
    return W @ f


def random_state(rng, n):
    f = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return f / np.linalg.norm(f)


def zero(n):
    z = np.zeros(2**n, dtype=complex)
    z[0] = 1
    return z


def test_bell_state_from_h_and_cx():
    s = Statevector.zero(2)
    s = apply_gate(s, Gate("H", (0,)))
    s = apply_gate(s, Gate("X", (1,), (0,)))
    assert np.allclose(s.amps, [1 / math.sqrt(2), 0, 0, 1 / math.sqrt(2)])


def test_sdag_on_one():
    s = apply_gate(Statevector.from_amplitudes([0, 1]), Gate("SDag", (0,)))
    assert np.allclose(s.amps, [0, -1j])


def test_gate_validation():
    with pytest.raises(ValueError):
        Gate("U1", (0,), param=float("nan"))
    with pytest.raises(ValueError):
        Gate("Rx", (0,))
    with pytest.raises(ValueError):
        Gate("X", (0,), (0,))
    with pytest.raises(ValueError):
        Gate("Swap", (0,))
    with pytest.raises(IndexError):
        apply_gate(Statevector.zero(2), Gate("H", (2,)))


def test_anti_control():
    # X on qubit 1 only when qubit 0 is |0>
    g = Gate("X", (1,), (0,), ctrl_state=(0,))
    out = simulate(Circuit(2, [g]), zero(2))
    assert np.allclose(out, [0, 0, 1, 0])


@pytest.mark.parametrize("n", range(1, 9))
def test_qft_matches_brute_force_dft(n):
    rng = np.random.default_rng(n)
    f = random_state(rng, n)
    assert np.allclose(simulate(qft_circuit(n), f), brute_dft(f), atol=1e-9)


def test_qft_of_bell_state_moduli():
    f = np.array([1, 0, 0, 1]) / math.sqrt(2)
    out = simulate(qft_circuit(2), f)
    assert np.allclose(np.abs(out), [1 / math.sqrt(2), 0.5, 0, 0.5])


def test_qft_batch_matches_single_runs():
    rng = np.random.default_rng(0)
    fs = np.stack([random_state(rng, 4) for _ in range(5)])
    batch = simulate(qft_circuit(4), fs)
    for f, b in zip(fs, batch):
        assert np.allclose(simulate(qft_circuit(4), f), b)


@pytest.mark.parametrize("n", [1, 3, 5])
def test_inverse_qft_roundtrip(n):
    rng = np.random.default_rng(10 + n)
    f = random_state(rng, n)
    back = simulate(inverse_qft_circuit(n), simulate(qft_circuit(n), f))
    assert np.allclose(back, f, atol=1e-12)


def test_circuit_inverse_of_rotations():
    c = Circuit(2, [Gate("Rx", (0,), param=0.3), Gate("SDag", (1,)), Gate("Ry", (1,), (0,), 1.1)])
    f = random_state(np.random.default_rng(1), 2)
    assert np.allclose(simulate(c + c.inverse(), f), f)


@pytest.mark.parametrize("n", range(1, 7))
def test_encoding_prepares_exact_amplitudes(n):
    f = random_state(np.random.default_rng(100 + n), n)
    c = encode_amplitudes(f)
    # global phase included, so equality is exact rather than up to a phase
    assert np.allclose(simulate(c, zero(n)), f, atol=1e-10)
    assert c.cx_count <= 2 ** (n + 2) - 4 * n - 4
    assert c.single_qubit_count <= 2 ** (n + 5) - 5


def test_encoding_real_and_sparse_inputs():
    f = np.array([1, 0, 0, 1]) / math.sqrt(2)
    assert np.allclose(simulate(encode_amplitudes(f), zero(2)), f)
    g = np.zeros(8)
    g[5] = -1.0
    assert np.allclose(simulate(encode_amplitudes(g), zero(3)), g)


def test_encoding_rejects_non_normalised():
    with pytest.raises(ValueError):
        encode_amplitudes([1.0, 1.0])
    with pytest.raises(ValueError):
        encode_amplitudes([1.0, 0.0, 0.0])


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_random_circuits_preserve_norm(n, seed):
    rng = np.random.default_rng(seed)
    kinds = ["H", "X", "SDag", "U1", "Rx", "Ry", "Rz"]
    gates = []
    for _ in range(20):
        k = kinds[rng.integers(len(kinds))]
        t = int(rng.integers(n))
        ctrls = tuple(int(q) for q in rng.permutation(n)[: rng.integers(n)] if q != t)
        p = float(rng.uniform(-4, 4)) if k in ("U1", "Rx", "Ry", "Rz") else None
        gates.append(Gate(k, (t,), ctrls, p))
    c = Circuit(n, gates)
    f = random_state(rng, n)
    out = simulate(c, f)
    assert abs(np.linalg.norm(out) - 1) < 1e-12
    assert np.allclose(simulate(c.inverse(), out), f)


def test_register_layout_validation():
    RegisterLayout.grid(2, 2, 1)
    with pytest.raises(ValueError):
        RegisterLayout((0, 1), (1, 2))
    with pytest.raises(ValueError):
        RegisterLayout((0,), (2,))


def test_qft_2d_matches_fft2():
    rng = np.random.default_rng(3)
    f = rng.normal(size=(4, 8)) + 1j * rng.normal(size=(4, 8))
    f /= np.linalg.norm(f)
    # flat index i1 + N1 i2
    amps = f.T.reshape(-1)
    out = qft_2d(Statevector.from_amplitudes(amps), RegisterLayout.grid(2, 3)).amps
    assert np.allclose(out.reshape(8, 4).T, np.fft.fft2(f) / math.sqrt(32))


def test_qft_tensor_field_leaves_components_alone():
    rng = np.random.default_rng(4)
    f = rng.normal(size=(4, 4, 2))  # (component, i2, i1) in C order
    f /= np.linalg.norm(f)
    out = qft_tensor_field(Statevector.from_amplitudes(f.reshape(-1)), RegisterLayout.grid(1, 2, 2)).amps
    expect = np.fft.fft2(f, axes=(1, 2)) / math.sqrt(8)
    assert np.allclose(out.reshape(4, 4, 2), expect)
    # zero component stays zero
    f[3] = 0
    f /= np.linalg.norm(f)
    out = qft_tensor_field(Statevector.from_amplitudes(f.reshape(-1)), RegisterLayout.grid(1, 2, 2)).amps
    assert np.allclose(out.reshape(4, 4, 2)[3], 0)


def test_measure_shots_statistics_and_determinism():
    s = apply_gate(Statevector.zero(1), Gate("H", (0,)))
    c0, c1 = measure_shots(s, 0, 10**6, seed=5)
    assert c0 + c1 == 10**6
    assert abs(c1 / 10**6 - 0.5) < 0.005
    assert measure_shots(s, 0, 1000, 9) == measure_shots(s, 0, 1000, 9)


def test_probability_one_batch():
    amps = np.array([[1, 0, 0, 0], [0, 0, 0, 1]], dtype=complex)
    assert np.allclose(probability_one(amps, 1), [0, 1])
