"""
Symmetric readout of a 2D field
===============================

A field mirrored evenly along x1 and oddly along x2 has Fourier
coefficients of the form r_k e^(i beta_k) with real r_k and a known phase
beta_k.  Only the moduli and one sign per coefficient need to be measured.
"""
import numpy as np

from qhom.amplitude import AmplificationSchedule, ExactEstimator, MLQAEEstimator
from qhom.readout import dft, phase_table, readout_gate_counts, symmetric_qft

rng = np.random.default_rng(0)
quarter = rng.normal(size=(4, 4))
f = np.concatenate([quarter, quarter[::-1]], axis=0)
f = np.concatenate([f, -f[:, ::-1]], axis=1)
sym = ("even", "odd")

F = dft(f)
beta = phase_table(f.shape, sym)
print("max |Im(F e^-i beta)|:", np.abs((F * np.exp(-1j * beta)).imag).max())

exact = symmetric_qft(f, ExactEstimator(), sym)
print("exact-probability readout error:", np.abs(exact - F).max())

for mM in (4, 16, 64):
    est = MLQAEEstimator(AmplificationSchedule.exponential(mM, 1000, 1))
    print(f"m_M={mM:3d}: L2 error {np.linalg.norm(symmetric_qft(f, est, sym) - F):.3e}")

counts = readout_gate_counts(f)
print("gates, hadamard path: ", counts["hadamard_total"])
print("gates, symmetric path:", counts["symmetric_total"])
