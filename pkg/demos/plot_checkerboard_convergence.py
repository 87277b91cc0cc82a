"""
Checkerboard convergence
========================

The FFT iteration converges in about 20 steps.  With MLQAE readout the
iteration error stalls at the readout noise floor: about 1e-3 at m_M=2^6
and about 1e-4 at m_M=2^9.  Takes a couple of minutes.
"""
import warnings

import numpy as np

from qhom.amplitude import AmplificationSchedule
from qhom.homogenization import effective_stiffness, geometry_from_config, reference_geometries

np.set_printoptions(precision=4, suppress=True)
cfg = reference_geometries()["checkerboard"]
st = geometry_from_config(cfg)

runs = {"fft": effective_stiffness(st, "fft")}
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    for mM in (2**6, 2**9):
        sched = AmplificationSchedule.exponential(mM, 1000, 0)
        runs[f"m_M={mM}"] = effective_stiffness(st, "qft-symmetric", schedule=sched)

for name, res in runs.items():
    print(name, "iterations", [s.iterations for s in res.solutions], "asymmetry", f"{res.asymmetry:.1e}")
    print(res.C)

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.5), sharey=True)
    for j, ax in enumerate(axes):
        for name, res in runs.items():
            ax.semilogy(res.solutions[j].errors, label=name)
        ax.axhline(1e-4, color="k", ls=":")
        ax.set_title(["E11", "E22", "E12"][j])
        ax.set_xlabel("iteration")
    axes[0].set_ylabel("error")
    axes[0].legend()
    fig.savefig("checkerboard_convergence.png", dpi=120)
