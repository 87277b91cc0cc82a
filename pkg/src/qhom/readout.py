"""Reading Fourier coefficients out of a quantum Fourier transform.

Fields are real or complex arrays of shape ``(N,)``, ``(N1, N2)`` or, with
``tensor=True``, ``(d, N1, N2)`` (one slice per tensor component; ``d`` is
padded with zero components to a power of two).  The unnormalised DFT is
``dft(f) = sqrt(N) |f| QFT(f / |f|)`` with ``N`` the number of spatial
points, so ``dft`` agrees with ``numpy.fft.fftn`` over the spatial axes.

Two readout paths are implemented:

* ``hadamard_qft_estimate`` obtains real and imaginary parts of every
  coefficient from two Hadamard tests each.
* ``symmetric_qft`` exploits mirror symmetry: the phase of each coefficient
  is known in advance, so only amplitudes are estimated, followed by one
  extra amplitude estimation on a shifted input to fix the sign.

Both take an estimator object exposing ``amplitudes(p, key)`` which maps
flag probabilities to estimated amplitudes (``ExactEstimator`` or
``MLQAEEstimator`` from :mod:`qhom.amplitude`).  ``backend="state"`` reads
the flag probabilities off the simulated QFT statevector; ``backend="circuit"``
builds and simulates every preparation and Hadamard-test circuit gate by
gate, which is slow but checks the circuits themselves.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .amplitude import flag_entangler
from .quantum import (
    Circuit,
    Gate,
    RegisterLayout,
    basis_state_circuit,
    encode_amplitudes,
    probability_one,
    simulate,
    spatial_qft_circuit,
)

__all__ = [
    "dft",
    "idft",
    "pack",
    "unpack",
    "phase_table",
    "coefficient_unitary",
    "hadamard_test_circuit",
    "amplitude_circuit",
    "hadamard_qft_estimate",
    "hadamard_iqft_estimate",
    "qft_amplitude",
    "sign_determination",
    "symmetric_qft",
    "symmetric_iqft",
    "check_symmetry",
    "readout_gate_counts",
    "ReadoutReport",
    "readout_report",
    "write_readout_csv",
]


# -- layout -----------------------------------------------------------------


def _spatial_axes(f, tensor):
    nd = f.ndim - 1 if tensor else f.ndim
    if nd not in (1, 2):
        raise ValueError(f"expected 1 or 2 spatial axes, got array of shape {f.shape}")
    return tuple(range(f.ndim - nd, f.ndim))


def _log2(n):
    q = int(n).bit_length() - 1
    if n < 2 or 2**q != n:
        raise ValueError(f"size {n} is not a power of two >= 2")
    return q


@dataclass(frozen=True)
class _Packing:
    shape: tuple
    tensor: bool
    layout: RegisterLayout
    n_components: int

    @property
    def n_spatial(self):
        return int(np.prod(self.layout.spatial_shape))


def _packing(shape, tensor):
    if tensor:
        d, spatial = shape[0], shape[1:]
        nd = max(1, (d - 1).bit_length())
    else:
        d, spatial, nd = 1, shape, 0
    if not 1 <= len(spatial) <= 2:
        raise ValueError(f"expected 1 or 2 spatial axes, got shape {shape}")
    ns = [_log2(s) for s in spatial]
    layout = RegisterLayout.grid(ns[0], ns[1] if len(ns) > 1 else 0, nd)
    return _Packing(tuple(shape), tensor, layout, d)


def pack(f, tensor: bool = False):
    """Flatten a field into qubit order: index i1 + N1 i2 + N1 N2 l."""
    f = np.asarray(f)
    pk = _packing(f.shape, tensor)
    if tensor:
        pad = 2 ** len(pk.layout.component) - f.shape[0]
        g = np.concatenate([f, np.zeros((pad,) + f.shape[1:], dtype=f.dtype)]) if pad else f
        g = np.transpose(g, (0,) + tuple(range(g.ndim - 1, 0, -1)))
    else:
        g = f.T
    return np.ascontiguousarray(g).reshape(-1).astype(complex), pk


def unpack(amps, pk: _Packing):
    """Inverse of :func:`pack` (padding components dropped)."""
    amps = np.asarray(amps)
    spatial = pk.shape[1:] if pk.tensor else pk.shape
    head = amps.shape[:-1]
    if pk.tensor:
        head = head + (2 ** len(pk.layout.component),)
    g = amps.reshape(head + tuple(reversed(spatial)))
    nh = len(head)
    g = np.transpose(g, tuple(range(nh)) + tuple(range(g.ndim - 1, nh - 1, -1)))
    if pk.tensor:
        g = g[(Ellipsis, slice(0, pk.n_components)) + (slice(None),) * len(spatial)]
    return g


# -- oracles ----------------------------------------------------------------


def dft(f, tensor: bool = False) -> np.ndarray:
    f = np.asarray(f)
    return np.fft.fftn(f, axes=_spatial_axes(f, tensor))


def idft(F, tensor: bool = False) -> np.ndarray:
    F = np.asarray(F)
    return np.fft.ifftn(F, axes=_spatial_axes(F, tensor))


# -- symmetry ---------------------------------------------------------------


def _normalise_symmetry(symmetry, n_axes, n_components, tensor):
    if isinstance(symmetry, str):
        symmetry = (symmetry,) * n_axes
    symmetry = list(symmetry)
    if tensor:
        if len(symmetry) != n_components:
            raise ValueError(f"need one symmetry per component ({n_components})")
        out = []
        for s in symmetry:
            s = (s,) * n_axes if isinstance(s, str) else tuple(s)
            if len(s) != n_axes:
                raise ValueError("need one parity per spatial axis")
            out.append(s)
    else:
        if len(symmetry) != n_axes:
            raise ValueError("need one parity per spatial axis")
        out = [tuple(symmetry)]
    for s in out:
        for p in s:
            if p not in ("even", "odd"):
                raise ValueError(f"parity must be 'even' or 'odd', got {p!r}")
    return out


def phase_table(shape, symmetry, tensor: bool = False) -> np.ndarray:
    """Phase beta_k of the DFT of a mirror-symmetric field.

    An even mirror image ``f[N-1-j] = f[j]`` gives ``f_hat_k = r_k e^{i pi k/N}``,
    an odd one ``f[N-1-j] = -f[j]`` gives ``f_hat_k = r_k e^{i (pi k/N - pi/2)}``
    with ``r_k`` real.  Phases of separate axes add.
    """
    spatial = shape[1:] if tensor else shape
    d = shape[0] if tensor else 1
    sym = _normalise_symmetry(symmetry, len(spatial), d, tensor)
    tables = []
    for s in sym:
        beta = np.zeros(spatial)
        for ax, (N, p) in enumerate(zip(spatial, s)):
            b = math.pi * np.arange(N) / N - (math.pi / 2 if p == "odd" else 0.0)
            beta = beta + b.reshape((N,) + (1,) * (len(spatial) - 1 - ax))
        tables.append(beta)
    return np.stack(tables) if tensor else tables[0]


def check_symmetry(f, symmetry, tensor: bool = False, rtol: float = 1e-8) -> None:
    """Raise ValueError unless ``f`` has the declared mirror parities."""
    f = np.asarray(f)
    spatial = f.shape[1:] if tensor else f.shape
    d = f.shape[0] if tensor else 1
    sym = _normalise_symmetry(symmetry, len(spatial), d, tensor)
    comps = f if tensor else f[None]
    scale = max(np.abs(f).max(), 1e-300)
    for c, s in zip(comps, sym):
        for ax, p in enumerate(s):
            m = np.flip(c, axis=ax)
            bad = np.abs(c - m) if p == "even" else np.abs(c + m)
            if bad.max() > rtol * scale:
                raise ValueError(f"field is not {p} along axis {ax}")


# -- circuits ---------------------------------------------------------------


def _transform_circuit(pk, inverse):
    return spatial_qft_circuit(pk.layout, inverse=inverse)


def coefficient_unitary(k: int, prep: Circuit) -> Circuit:
    """U = U_{0->k} U_{psi->0} with |psi> = prep|0>, so <psi|U|psi> = conj(psi_k)."""
    n = prep.n_qubits
    if not 0 <= k < 2**n:
        raise ValueError(f"index {k} out of range for {n} qubits")
    return prep.inverse() + basis_state_circuit(k, n)


def hadamard_test_circuit(U: Circuit, imag: bool = False, prep: Circuit | None = None) -> Circuit:
    """Hadamard test of ``U`` on the state ``prep|0>`` (|0> if ``prep`` is None).

    The ancilla is the extra top qubit.  P(ancilla = 1) equals
    ``(1 - Re<psi|U|psi>) / 2``, or ``(1 - Im<psi|U|psi>) / 2`` when ``imag``
    inserts S-dagger on the ancilla.
    """
    n = U.n_qubits
    if prep is not None and prep.n_qubits != n:
        raise ValueError("preparation and unitary act on different registers")
    anc = n
    gates = list(prep.gates) if prep is not None else []
    gates.append(Gate("H", (anc,)))
    if imag:
        gates.append(Gate("SDag", (anc,)))
    gates += U.controlled(anc).gates
    gates.append(Gate("H", (anc,)))
    return Circuit(n + 1, gates)


def amplitude_circuit(u, k: int, pk, inverse: bool = False) -> Circuit:
    """K_k T I_u: the flag amplitude is |T(u)_k|."""
    n = pk.layout.n_qubits
    return encode_amplitudes(u) + _transform_circuit(pk, inverse) + flag_entangler(k, n)


def _zero_state(n, batch=()):
    psi = np.zeros(batch + (2**n,), dtype=complex)
    psi[..., 0] = 1.0
    return psi


def _flag_probabilities(u, pk, inverse, backend):
    """|T(u)_k|^2 for every k; ``u`` may carry leading batch axes."""
    if backend == "state":
        psi = simulate(_transform_circuit(pk, inverse), u)
        return np.abs(psi) ** 2
    if backend != "circuit":
        raise ValueError(f"unknown backend {backend!r}")
    n = pk.layout.n_qubits
    flat = u.reshape(-1, u.shape[-1])
    out = np.empty(flat.shape, dtype=float)
    for b, ub in enumerate(flat):
        for k in range(2**n):
            psi = simulate(amplitude_circuit(ub, k, pk, inverse), _zero_state(n + 1))
            out[b, k] = probability_one(psi, n)
    return out.reshape(u.shape)


def _hadamard_probabilities(u, pk, inverse, backend):
    if backend == "state":
        psi = simulate(_transform_circuit(pk, inverse), u)
        return (1.0 - psi.real) / 2.0, (1.0 + psi.imag) / 2.0
    if backend != "circuit":
        raise ValueError(f"unknown backend {backend!r}")
    n = pk.layout.n_qubits
    prep = encode_amplitudes(u) + _transform_circuit(pk, inverse)
    p_re = np.empty(2**n)
    p_im = np.empty(2**n)
    for k in range(2**n):
        for imag, dest in ((False, p_re), (True, p_im)):
            circ = hadamard_test_circuit(coefficient_unitary(k, prep), imag, prep)
            psi = simulate(circ, _zero_state(n + 1))
            dest[k] = probability_one(psi, n)
    return p_re, p_im


# -- Hadamard path ----------------------------------------------------------


def _scale(norm, pk, inverse):
    rn = math.sqrt(pk.n_spatial)
    return norm / rn if inverse else norm * rn


def _hadamard(f, estimator, key, tensor, inverse, backend):
    u, pk = pack(f, tensor)
    norm = float(np.linalg.norm(u))
    if norm == 0.0:
        return np.zeros(f.shape, dtype=complex)
    p_re, p_im = _hadamard_probabilities(u / norm, pk, inverse, backend)
    a_re = estimator.amplitudes(p_re, tuple(key) + (0,))
    a_im = estimator.amplitudes(p_im, tuple(key) + (1,))
    psi = (1.0 - 2.0 * a_re**2) + 1j * (2.0 * a_im**2 - 1.0)
    return unpack(_scale(norm, pk, inverse) * psi, pk)


def hadamard_qft_estimate(f, estimator, key=(), tensor=False, backend="state") -> np.ndarray:
    """All DFT coefficients from real and imaginary Hadamard tests."""
    return _hadamard(np.asarray(f), estimator, key, tensor, False, backend)


def hadamard_iqft_estimate(F, estimator, key=(), tensor=False, backend="state") -> np.ndarray:
    """Inverse DFT by Hadamard tests, keeping the real part."""
    return _hadamard(np.asarray(F), estimator, key, tensor, True, backend).real


# -- symmetric path ---------------------------------------------------------


def _amplitudes(f, estimator, key, tensor, inverse, backend):
    u, pk = pack(f, tensor)
    norm = float(np.linalg.norm(u))
    if norm == 0.0:
        return np.zeros(u.shape), pk, u, norm
    p = _flag_probabilities(u / norm, pk, inverse, backend)
    a = _scale(norm, pk, inverse) * estimator.amplitudes(p, tuple(key) + (2,))
    return a, pk, u, norm


def qft_amplitude(f, estimator, key=(), tensor=False, inverse=False, backend="state") -> np.ndarray:
    """Estimated |DFT(f)_k| (or |IDFT(f)_k| with ``inverse``)."""
    f = np.asarray(f)
    a, pk, _, _ = _amplitudes(f, estimator, key, tensor, inverse, backend)
    return unpack(a, pk).real


def _unit_probes(pk, ks, inverse):
    """Packed fields whose (inverse) DFT is the unit vector at each index in ``ks``."""
    layout = pk.layout
    spatial = layout.spatial_shape
    n_sp = pk.n_spatial
    idx = np.arange(2**layout.n_qubits)
    ns1 = len(layout.spatial_1)
    ns2 = len(layout.spatial_2)
    p1 = idx & (2**ns1 - 1)
    p2 = (idx >> ns1) & (2**ns2 - 1)
    comp = idx >> (ns1 + ns2)
    k1 = ks & (2**ns1 - 1)
    k2 = (ks >> ns1) & (2**ns2 - 1)
    kc = ks >> (ns1 + ns2)
    ph = p1[None, :] * k1[:, None] / spatial[0]
    if ns2:
        ph = ph + p2[None, :] * k2[:, None] / spatial[1]
    if inverse:
        probes = np.exp(-2j * math.pi * ph)
    else:
        probes = np.exp(2j * math.pi * ph) / n_sp
    probes[comp[None, :] != kc[:, None]] = 0.0
    return probes


def sign_determination(
    f, amplitudes, phases, estimator, key=(), tensor=False, inverse=False, backend="state"
) -> np.ndarray:
    """Signs s_k in T(f)_k = s_k a_k e^{i beta_k}.

    For each coefficient a probe ``g = f + 1.5 a_k e^{i beta_k} e^k`` is
    built, where ``T(e^k)`` is the k-th unit vector; then
    ``|T(g)_k| = 2.5 a_k`` when s_k = +1 and ``0.5 a_k`` when s_k = -1.
    Zero amplitudes get sign 0.
    """
    f = np.asarray(f)
    u, pk = pack(f, tensor)
    a = pack(np.asarray(amplitudes, dtype=float), tensor)[0].real
    beta = pack(np.asarray(phases, dtype=float), tensor)[0].real
    scale_ref = _scale(float(np.linalg.norm(u)), pk, inverse)
    signs = np.zeros(u.shape)
    ks = np.flatnonzero(a > 1e-12 * max(scale_ref, 1e-300))
    if ks.size == 0:
        return unpack(signs, pk).real
    probes = u[None, :] + 1.5 * (a[ks] * np.exp(1j * beta[ks]))[:, None] * _unit_probes(pk, ks, inverse)
    norms = np.linalg.norm(probes, axis=1)
    p = _flag_probabilities(probes / norms[:, None], pk, inverse, backend)
    p_k = p[np.arange(ks.size), ks]
    rn = math.sqrt(pk.n_spatial)
    scale = norms / rn if inverse else norms * rn
    d = scale * estimator.amplitudes(p_k, tuple(key) + (3,))
    signs[ks] = np.where(d >= a[ks], 1.0, -1.0)
    return unpack(signs, pk).real


def symmetric_qft(
    f, estimator, symmetry, key=(), tensor=False, backend="state", check=True
) -> np.ndarray:
    """DFT of a mirror-symmetric real field from amplitude estimations only."""
    f = np.asarray(f)
    if np.iscomplexobj(f) and np.abs(f.imag).max() > 0:
        raise ValueError("symmetric readout needs a real field")
    f = np.real(f)
    if check:
        check_symmetry(f, symmetry, tensor)
    beta = phase_table(f.shape, symmetry, tensor)
    a = qft_amplitude(f, estimator, key, tensor, False, backend)
    s = sign_determination(f, a, beta, estimator, key, tensor, False, backend)
    return s * a * np.exp(1j * beta)


def symmetric_iqft(F, estimator, key=(), tensor=False, backend="state") -> np.ndarray:
    """Real field from its spectrum; the output phase is known to be zero."""
    F = np.asarray(F, dtype=complex)
    beta = np.zeros(F.shape)
    a = qft_amplitude(F, estimator, key, tensor, True, backend)
    s = sign_determination(F, a, beta, estimator, key, tensor, True, backend)
    return s * a


# -- resources --------------------------------------------------------------


def readout_gate_counts(f, tensor: bool = False) -> dict:
    """Gates needed to read every coefficient of ``f`` with each path.

    Counts the preparation circuits (before amplitude amplification) over all
    coefficients: two Hadamard tests per coefficient, or one amplitude
    circuit plus one sign-probe circuit per coefficient.
    """
    u, pk = pack(np.asarray(f), tensor)
    u = u / np.linalg.norm(u)
    n = pk.layout.n_qubits
    prep = encode_amplitudes(u) + _transform_circuit(pk, False)
    tests = [
        hadamard_test_circuit(coefficient_unitary(k, prep), imag, prep)
        for k in range(2**n)
        for imag in (False, True)
    ]
    had = sum(len(c) for c in tests)
    had_ctrl = sum(1 for c in tests for g in c if len(g.controls) >= 2)
    amp = len(amplitude_circuit(u, 0, pk))
    sym = 2 * amp * 2**n
    sym_ctrl = 2 * 2**n * sum(1 for g in amplitude_circuit(u, 0, pk) if len(g.controls) >= 2)
    return {
        "qubits": n,
        "hadamard_total": had,
        "hadamard_multi_controlled": had_ctrl,
        "symmetric_total": sym,
        "symmetric_multi_controlled": sym_ctrl,
    }


# -- reports ----------------------------------------------------------------


@dataclass(frozen=True)
class ReadoutReport:
    method: str
    coefficients: np.ndarray
    amplitudes: np.ndarray
    signs: np.ndarray
    oracle: np.ndarray

    @property
    def l2_error(self) -> float:
        return float(np.linalg.norm(self.coefficients - self.oracle))

    @property
    def max_error(self) -> float:
        return float(np.abs(self.coefficients - self.oracle).max())


def readout_report(f, estimator, method="symmetric", symmetry=None, key=(), tensor=False) -> ReadoutReport:
    f = np.asarray(f)
    oracle = dft(f, tensor)
    if method == "symmetric":
        if symmetry is None:
            raise ValueError("symmetric readout needs the field symmetry")
        beta = phase_table(f.shape, symmetry, tensor)
        check_symmetry(f, symmetry, tensor)
        a = qft_amplitude(f, estimator, key, tensor)
        s = sign_determination(f, a, beta, estimator, key, tensor)
        coeffs = s * a * np.exp(1j * beta)
    elif method == "hadamard":
        coeffs = hadamard_qft_estimate(f, estimator, key, tensor)
        a = np.abs(coeffs)
        s = np.ones(a.shape)
    else:
        raise ValueError(f"unknown readout method {method!r}")
    return ReadoutReport(method, coeffs, a, s, oracle)


def write_readout_csv(report: ReadoutReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "re", "im", "amplitude", "sign", "oracle_re", "oracle_im", "abs_error"])
        c = report.coefficients.ravel()
        o = report.oracle.ravel()
        for k, (ck, ak, sk, ok) in enumerate(zip(c, report.amplitudes.ravel(), report.signs.ravel(), o)):
            w.writerow(
                [k, repr(float(ck.real)), repr(float(ck.imag)), repr(float(ak)), int(sk),
                 repr(float(ok.real)), repr(float(ok.imag)), repr(float(abs(ck - ok)))]
            )
