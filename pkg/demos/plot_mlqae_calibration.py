"""
MLQAE error law
===============

Estimate the amplitude 1/sqrt(2) many times and fit error ~ C / (m_M sqrt(S)).
The two sweeps (shots at fixed m_M, m_M at fixed shots) give the exponents
and the constant C used for planning.
"""
import numpy as np

from qhom.amplitude import calibrate, required_amplifications

fit = calibrate(seed=0, reps=50)
print(f"slope vs shots          {fit.slope_shots:.3f}  (ideal 0.5)")
print(f"slope vs amplifications {fit.slope_amps:.3f}  (ideal 1.0)")
print(f"C from shots sweep      {fit.C_shots:.4f} +- {fit.stddev_C_shots:.4f}")
print(f"C from m_M sweep        {fit.C_amps:.4f} +- {fit.stddev_C_amps:.4f}")

# planning: amplifications for a target error at 1000 shots
for e in (1e-3, 1e-4, 1e-5, 1e-7):
    print(f"target {e:.0e}: m_M = {required_amplifications(e, 1000, fit.C)}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    rows = [r for r in fit.rows if r[0] == "amplifications"]
    for S in sorted({r[1] for r in rows}):
        x = np.array([r[2] for r in rows if r[1] == S])
        y = np.array([r[3] for r in rows if r[1] == S])
        plt.loglog(x, y, "o-", label=f"S={S}")
        plt.loglog(x, fit.C / (x * np.sqrt(S)), "k:")
    plt.xlabel("m_M")
    plt.ylabel("mean absolute error")
    plt.legend()
    plt.savefig("mlqae_calibration.png", dpi=120)
