"""
Laminate homogenization
=======================

Two layers stacked along x1.  The effective stiffness is known in closed
form, so this is a clean check of the solver and of the quantum readout.
"""
import warnings

import numpy as np

from qhom.amplitude import AmplificationSchedule
from qhom.homogenization import effective_stiffness, geometry_from_config, reference_geometries

np.set_printoptions(precision=5, suppress=True)
cfg = reference_geometries()["laminate"]
st = geometry_from_config(cfg)
print("closed form:\n", np.array(cfg["expected_C"]))

fft = effective_stiffness(st, "fft")
print("FFT:\n", fft.C, "\niterations", [s.iterations for s in fft.solutions])

# the noisy readout does not reach tol; keep the warnings quiet here
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    for mM in (2**6, 2**9):
        q = effective_stiffness(st, "qft-symmetric", max_iter=20, schedule=AmplificationSchedule.exponential(mM, 1000, 0))
        print(f"QFT m_M={mM}: max error {np.abs(q.C - cfg['expected_C']).max():.2e}")
