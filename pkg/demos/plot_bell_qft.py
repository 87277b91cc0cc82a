"""
QFT of a Bell state
===================

Read the Fourier coefficients of (|0..0> + |1..1>)/sqrt(2) out of a
simulated QFT, once with the Hadamard test and once with the symmetric
readout, and watch the L2 error drop as the amplification power grows.
"""
import math

import numpy as np

from qhom.amplitude import AmplificationSchedule, MLQAEEstimator
from qhom.readout import dft, hadamard_qft_estimate, symmetric_qft

n = 3
f = np.zeros(2**n)
f[0] = f[-1] = 1 / math.sqrt(2)
F = dft(f)
print("exact spectrum:", np.round(F, 4))

powers = [1, 2, 4, 8, 16]
errors = {"hadamard": [], "symmetric": []}
for mM in powers:
    for method in errors:
        e = []
        for seed in range(20):
            est = MLQAEEstimator(AmplificationSchedule.exponential(mM, 1000, seed))
            got = hadamard_qft_estimate(f, est) if method == "hadamard" else symmetric_qft(f, est, "even")
            e.append(np.linalg.norm(got - F))
        errors[method].append(np.median(e))
    print(f"m_M={mM:3d}  hadamard {errors['hadamard'][-1]:.2e}  symmetric {errors['symmetric'][-1]:.2e}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    for method, e in errors.items():
        plt.loglog(powers, e, "o-", label=method)
    plt.loglog(powers, errors["hadamard"][0] / np.array(powers), "k--", label="1/m_M")
    plt.xlabel("max amplification m_M")
    plt.ylabel("median L2 error")
    plt.legend()
    plt.savefig("bell_qft.png", dpi=120)
