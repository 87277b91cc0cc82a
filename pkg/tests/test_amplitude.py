import math

import numpy as np
import pytest

from qhom.amplitude import (
    AmplificationSchedule,
    ExactEstimator,
    GroverSpec,
    MLQAEEstimator,
    amplified_probabilities,
    calibration_circuit,
    flag_entangler,
    grover_operator,
    mlqae,
    mlqae_thetas,
    required_amplifications,
    run_experiments,
    sample_amplified,
    write_calibration_csv,
    calibrate,
)
from qhom.quantum import Circuit, Gate, encode_amplitudes, probability_one, simulate


def zero(n):
    z = np.zeros(2**n, dtype=complex)
    z[0] = 1
    return z


def ry_spec(theta):
    # flag amplitude sin(theta) on a one-qubit register
    a = Circuit(2, [Gate("Ry", (0,), param=2 * theta)]) + flag_entangler(1, 1)
    return GroverSpec(a, 1)


def test_flag_entangler_marks_target():
    for k in range(4):
        c = flag_entangler(k, 2)
        for j in range(4):
            psi = np.zeros(8, dtype=complex)
            psi[j] = 1
            assert probability_one(simulate(c, psi), 2) == (1.0 if j == k else 0.0)
    with pytest.raises(ValueError):
        flag_entangler(4, 2)


def test_flag_probability_is_coefficient_modulus():
    f = np.array([1, 0, 0, 1]) / math.sqrt(2)
    a = encode_amplitudes(f) + flag_entangler(3, 2)
    p = probability_one(simulate(a, zero(3)), 2)
    assert p == pytest.approx(0.5)


@pytest.mark.parametrize("theta", [0.1, math.pi / 6, 1.2])
def test_grover_identity(theta):
    spec = ry_spec(theta)
    q = grover_operator(spec)
    psi = simulate(spec.a_circuit, zero(2))
    for m in range(9):
        assert probability_one(psi, 1) == pytest.approx(math.sin((2 * m + 1) * theta) ** 2, abs=1e-9)
        psi = simulate(q, psi)


def test_schedule_validation():
    s = AmplificationSchedule.exponential(8, 100, 1)
    assert s.powers == (0, 1, 2, 4, 8)
    assert AmplificationSchedule.exponential(0, 10).powers == (0,)
    with pytest.raises(ValueError):
        AmplificationSchedule((0, 1, 3), 100)
    with pytest.raises(ValueError):
        AmplificationSchedule((1, 2), 100)
    with pytest.raises(ValueError):
        AmplificationSchedule.exponential(6, 100)
    with pytest.raises(ValueError):
        AmplificationSchedule((0,), 0)


def test_circuit_and_closed_form_sampling_agree():
    rng = np.random.default_rng(0)
    for _ in range(10):
        f = rng.normal(size=4) + 1j * rng.normal(size=4)
        f /= np.linalg.norm(f)
        k = int(rng.integers(4))
        spec = GroverSpec(encode_amplitudes(f) + flag_entangler(k, 2), 2)
        sched = AmplificationSchedule.exponential(4, 500, 11)
        a = run_experiments(spec, sched, key=(2,))
        b = sample_amplified([abs(f[k]) ** 2], sched, key=(2,))[0]
        assert np.array_equal(a, b)


def test_empirical_rates():
    theta = math.pi / 6
    sched = AmplificationSchedule((0, 1), 10**5, 3)
    counts = run_experiments(ry_spec(theta), sched)
    assert counts[0] / 1e5 == pytest.approx(math.sin(theta) ** 2, abs=0.01)
    assert counts[1] / 1e5 == pytest.approx(math.sin(3 * theta) ** 2, abs=0.01)


def test_mlqae_noiseless_counts_recover_theta():
    theta = 0.4
    sched = AmplificationSchedule.exponential(16, 10**7)
    p = amplified_probabilities(math.sin(theta) ** 2, sched.powers)
    counts = np.rint(p * sched.shots).astype(int)
    res = mlqae(counts, sched)
    assert res.theta == pytest.approx(theta, abs=1e-5)
    assert 0 <= res.theta <= math.pi / 2


def test_mlqae_endpoints():
    sched = AmplificationSchedule.exponential(4, 100)
    assert mlqae([0, 0, 0, 0], sched).theta == 0.0
    assert mlqae([100] * 4, sched).theta == math.pi / 2


def test_mlqae_error_shrinks_with_amplification():
    a = 0.3
    errs = []
    for mM in (1, 4, 16):
        sched = AmplificationSchedule.exponential(mM, 1000, 5)
        est = MLQAEEstimator(sched).amplitudes(np.full(200, a * a))
        errs.append(np.mean(np.abs(est - a)))
    assert errs[0] > errs[1] > errs[2]


def test_mlqae_reproducible():
    sched = AmplificationSchedule.exponential(8, 1000, 42)
    p = np.linspace(0.01, 0.9, 7)
    e1 = MLQAEEstimator(sched).amplitudes(p, (1, 2))
    e2 = MLQAEEstimator(sched).amplitudes(p, (1, 2))
    assert np.array_equal(e1, e2)
    e3 = MLQAEEstimator(sched).amplitudes(p, (1, 3))
    assert not np.array_equal(e1, e3)


def test_batch_thetas_match_single():
    sched = AmplificationSchedule.exponential(8, 1000, 1)
    counts = sample_amplified(np.array([0.1, 0.5, 0.7]), sched)
    batch = mlqae_thetas(counts, sched.powers, sched.shots)
    for row, t in zip(counts, batch):
        assert mlqae(row, sched).theta == t


def test_exact_estimator():
    assert np.allclose(ExactEstimator().amplitudes([0.25, 1.0, 0.0]), [0.5, 1.0, 0.0])


def test_required_amplifications():
    assert required_amplifications(1e-4, 1000, 0.094) == 32
    assert required_amplifications(1.0, 1000) == 1
    with pytest.raises(ValueError):
        required_amplifications(0.0, 1000)


def test_calibration_circuit_amplitude():
    spec = calibration_circuit()
    p = probability_one(simulate(spec.a_circuit, zero(2)), spec.flag_qubit)
    assert p == pytest.approx(0.5)


def test_calibration_error_consistent_with_law():
    sched = AmplificationSchedule.exponential(64, 1000, 0)
    est = MLQAEEstimator(sched).amplitudes(np.full(50, 0.5))
    err = np.mean(np.abs(est - 1 / math.sqrt(2)))
    assert 0.3 * 0.09 / (64 * math.sqrt(1000)) < err < 3 * 0.09 / (64 * math.sqrt(1000))


def test_calibration_csv(tmp_path):
    fit = calibrate(reps=5, shots_grid=(100, 1000), max_powers_for_shots=(1,), power_grid=(1, 2), shots_for_powers=(100,))
    path = tmp_path / "cal.csv"
    write_calibration_csv(fit, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "sweep,fixed,x,error,theoretical"
    assert len(lines) == 1 + 4
    assert fit.C > 0
