"""Dense statevector simulation of small quantum circuits.

Bit ordering is little-endian throughout: qubit ``q`` carries the weight
``2**q`` in the amplitude index, so qubit 0 is the least significant bit.
Registers of a multi-dimensional field are stacked from the low qubits
upwards (first spatial axis, second spatial axis, component register).

Gates are applied directly on the amplitude array through 2x2 blocks; no
full unitary is ever materialised.  All simulation helpers accept arrays
with arbitrary leading batch dimensions, the last axis being the
``2**n`` amplitudes.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Gate",
    "Circuit",
    "Statevector",
    "RegisterLayout",
    "apply_gate",
    "simulate",
    "encode_amplitudes",
    "qft_circuit",
    "inverse_qft_circuit",
    "spatial_qft_circuit",
    "qft_2d",
    "qft_tensor_field",
    "probability_one",
    "measure_shots",
    "basis_state_circuit",
]

SINGLE_QUBIT_KINDS = ("H", "X", "SDag", "U1", "Rx", "Ry", "Rz")
PARAMETRIC_KINDS = ("U1", "Rx", "Ry", "Rz")
DIAGONAL_KINDS = ("SDag", "U1", "Rz")
GATE_KINDS = SINGLE_QUBIT_KINDS + ("Swap", "PhaseFlip")

_SQRT1_2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class Gate:
    """A (possibly multi-controlled) gate.

    ``ctrl_state`` gives the value each control must hold for the gate to
    act (defaults to all ones).  ``PhaseFlip`` multiplies by -1 every basis
    state whose ``targets`` equal ``values``; it is how reflections such as
    the Grover oracles are expressed.
    """

    kind: str
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    param: float | None = None
    ctrl_state: tuple[int, ...] | None = None
    values: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        object.__setattr__(self, "controls", tuple(int(q) for q in self.controls))
        if self.kind in PARAMETRIC_KINDS:
            if self.param is None or not math.isfinite(self.param):
                raise ValueError(f"{self.kind} needs a finite angle, got {self.param!r}")
            object.__setattr__(self, "param", float(self.param))
        expected = {"Swap": 2}.get(self.kind, 1)
        if self.kind == "PhaseFlip":
            if not self.targets:
                raise ValueError("PhaseFlip needs at least one target")
            values = (0,) * len(self.targets) if self.values is None else tuple(self.values)
            if len(values) != len(self.targets) or any(v not in (0, 1) for v in values):
                raise ValueError("PhaseFlip values must be bits, one per target")
            object.__setattr__(self, "values", values)
        elif len(self.targets) != expected:
            raise ValueError(f"{self.kind} acts on {expected} qubit(s)")
        qubits = self.targets + self.controls
        if len(set(qubits)) != len(qubits):
            raise ValueError("targets and controls must be distinct qubits")
        if any(q < 0 for q in qubits):
            raise ValueError("qubit indices must be non-negative")
        state = (1,) * len(self.controls) if self.ctrl_state is None else tuple(self.ctrl_state)
        if len(state) != len(self.controls) or any(v not in (0, 1) for v in state):
            raise ValueError("ctrl_state must hold one bit per control")
        object.__setattr__(self, "ctrl_state", state)

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.targets + self.controls

    def matrix(self) -> np.ndarray:
        """2x2 matrix of a single-qubit kind (controls excluded)."""
        k, t = self.kind, self.param
        if k == "H":
            return np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT1_2
        if k == "X":
            return np.array([[0, 1], [1, 0]], dtype=complex)
        if k == "SDag":
            return np.array([[1, 0], [0, -1j]], dtype=complex)
        if k == "U1":
            return np.array([[1, 0], [0, np.exp(1j * t)]], dtype=complex)
        if k == "Rx":
            c, s = math.cos(t / 2), math.sin(t / 2)
            return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
        if k == "Ry":
            c, s = math.cos(t / 2), math.sin(t / 2)
            return np.array([[c, -s], [s, c]], dtype=complex)
        if k == "Rz":
            return np.array([[np.exp(-0.5j * t), 0], [0, np.exp(0.5j * t)]], dtype=complex)
        raise ValueError(f"{k} has no 2x2 matrix")

    def inverse(self) -> "Gate":
        if self.kind == "SDag":
            return Gate("U1", self.targets, self.controls, math.pi / 2, self.ctrl_state)
        if self.kind in PARAMETRIC_KINDS:
            return Gate(self.kind, self.targets, self.controls, -self.param, self.ctrl_state)
        return self

    def with_control(self, qubit: int, value: int = 1) -> "Gate":
        return Gate(
            self.kind,
            self.targets,
            self.controls + (qubit,),
            self.param,
            self.ctrl_state + (value,),
            self.values,
        )

    def remap(self, mapping) -> "Gate":
        return Gate(
            self.kind,
            tuple(mapping[q] for q in self.targets),
            tuple(mapping[q] for q in self.controls),
            self.param,
            self.ctrl_state,
            self.values,
        )

    def __str__(self):
        s = self.kind
        if self.param is not None:
            s += f"({self.param:.6g})"
        s += " " + ",".join(map(str, self.targets))
        if self.values is not None:
            s += " =" + "".join(map(str, self.values))
        if self.controls:
            ctrl = ",".join(f"{q}" if v else f"!{q}" for q, v in zip(self.controls, self.ctrl_state))
            s += f" ctrl[{ctrl}]"
        return s


class Circuit:
    """Ordered gate list on ``n_qubits``; gates are applied first to last."""

    __slots__ = ("n_qubits", "gates")

    def __init__(self, n_qubits: int, gates=()):
        if n_qubits < 1:
            raise ValueError("a circuit needs at least one qubit")
        gates = tuple(gates)
        for g in gates:
            if max(g.qubits) >= n_qubits:
                raise ValueError(f"gate {g} does not fit on {n_qubits} qubits")
        self.n_qubits = int(n_qubits)
        self.gates = gates

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def __add__(self, other: "Circuit") -> "Circuit":
        """``a + b`` runs ``a`` then ``b``."""
        n = max(self.n_qubits, other.n_qubits)
        return Circuit(n, self.gates + other.gates)

    def __eq__(self, other):
        return (
            isinstance(other, Circuit)
            and self.n_qubits == other.n_qubits
            and self.gates == other.gates
        )

    def __repr__(self):
        return f"Circuit(n_qubits={self.n_qubits}, gates={len(self.gates)})"

    def __str__(self):
        lines = [f"# {self.n_qubits} qubits, {len(self.gates)} gates"]
        lines += [str(g) for g in self.gates]
        return "\n".join(lines)

    def inverse(self) -> "Circuit":
        return Circuit(self.n_qubits, [g.inverse() for g in reversed(self.gates)])

    def controlled(self, qubit: int, value: int = 1, n_qubits: int | None = None) -> "Circuit":
        """Every gate gains ``qubit`` as an extra control."""
        n = max(self.n_qubits, qubit + 1) if n_qubits is None else n_qubits
        return Circuit(n, [g.with_control(qubit, value) for g in self.gates])

    def embed(self, qubits, n_qubits: int) -> "Circuit":
        """Relabel qubit ``i`` of this circuit to ``qubits[i]`` in a wider register."""
        qubits = tuple(qubits)
        if len(qubits) != self.n_qubits:
            raise ValueError("need one destination qubit per circuit qubit")
        return Circuit(n_qubits, [g.remap(qubits) for g in self.gates])

    def count_ops(self) -> Counter:
        """Gate counts keyed by ``kind`` with a ``c`` prefix per control."""
        return Counter("c" * len(g.controls) + g.kind for g in self.gates)

    @property
    def cx_count(self) -> int:
        return sum(1 for g in self.gates if g.kind == "X" and len(g.controls) == 1)

    @property
    def single_qubit_count(self) -> int:
        return sum(1 for g in self.gates if g.kind in SINGLE_QUBIT_KINDS and not g.controls)


@dataclass(frozen=True)
class Statevector:
    n_qubits: int
    amps: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex)
        if amps.shape != (2**self.n_qubits,):
            raise ValueError(f"expected {2**self.n_qubits} amplitudes, got shape {amps.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @classmethod
    def zero(cls, n_qubits: int) -> "Statevector":
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def from_amplitudes(cls, amps) -> "Statevector":
        amps = np.asarray(amps, dtype=complex)
        return cls(_num_qubits(amps.shape[-1]), amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def evolve(self, circuit: Circuit) -> "Statevector":
        if circuit.n_qubits != self.n_qubits:
            raise ValueError("circuit and state sizes differ")
        return Statevector(self.n_qubits, simulate(circuit, self.amps))


@dataclass(frozen=True)
class RegisterLayout:
    """Qubit assignment of a (tensor) field: two spatial registers and a component register."""

    spatial_1: tuple[int, ...]
    spatial_2: tuple[int, ...] = ()
    component: tuple[int, ...] = ()

    def __post_init__(self):
        for name in ("spatial_1", "spatial_2", "component"):
            object.__setattr__(self, name, tuple(int(q) for q in getattr(self, name)))
        allq = self.spatial_1 + self.spatial_2 + self.component
        if len(set(allq)) != len(allq):
            raise ValueError("registers overlap")
        if not self.spatial_1:
            raise ValueError("the first spatial register cannot be empty")
        if sorted(allq) != list(range(len(allq))):
            raise ValueError("registers must cover qubits 0..n-1 exactly")

    @classmethod
    def grid(cls, n1: int, n2: int = 0, nd: int = 0) -> "RegisterLayout":
        return cls(
            tuple(range(n1)),
            tuple(range(n1, n1 + n2)),
            tuple(range(n1 + n2, n1 + n2 + nd)),
        )

    @property
    def n_qubits(self) -> int:
        return len(self.spatial_1) + len(self.spatial_2) + len(self.component)

    @property
    def spatial_shape(self) -> tuple[int, ...]:
        shape = (2 ** len(self.spatial_1),)
        if self.spatial_2:
            shape += (2 ** len(self.spatial_2),)
        return shape


def _num_qubits(length: int) -> int:
    n = int(length).bit_length() - 1
    if length < 2 or 2**n != length:
        raise ValueError(f"length {length} is not a power of two >= 2")
    return n


def _apply_inplace(psi: np.ndarray, gate: Gate, n: int) -> None:
    """Apply ``gate`` to ``psi`` (contiguous, shape (..., 2**n)) in place."""
    lead = psi.ndim - 1
    view = psi.reshape(psi.shape[:-1] + (2,) * n)
    idx = [slice(None)] * (lead + n)

    def ax(q):
        return lead + n - 1 - q

    for c, v in zip(gate.controls, gate.ctrl_state):
        idx[ax(c)] = v
    kind = gate.kind
    if kind == "PhaseFlip":
        for t, v in zip(gate.targets, gate.values):
            idx[ax(t)] = v
        view[tuple(idx)] *= -1
        return
    if kind == "Swap":
        a, b = gate.targets
        i01, i10 = list(idx), list(idx)
        i01[ax(a)], i01[ax(b)] = 0, 1
        i10[ax(a)], i10[ax(b)] = 1, 0
        tmp = view[tuple(i01)].copy()
        view[tuple(i01)] = view[tuple(i10)]
        view[tuple(i10)] = tmp
        return
    t = gate.targets[0]
    i0, i1 = list(idx), list(idx)
    i0[ax(t)], i1[ax(t)] = 0, 1
    i0, i1 = tuple(i0), tuple(i1)
    m = gate.matrix()
    if kind in DIAGONAL_KINDS:
        if m[0, 0] != 1:
            view[i0] *= m[0, 0]
        view[i1] *= m[1, 1]
    elif kind == "X":
        tmp = view[i0].copy()
        view[i0] = view[i1]
        view[i1] = tmp
    else:
        a0 = view[i0].copy()
        a1 = view[i1]
        view[i0] = m[0, 0] * a0 + m[0, 1] * a1
        view[i1] = m[1, 0] * a0 + m[1, 1] * a1


def simulate(circuit: Circuit, amps) -> np.ndarray:
    """Run ``circuit`` on amplitude array(s); returns a new array."""
    psi = np.array(amps, dtype=complex, order="C", copy=True)
    if psi.shape[-1] != 2**circuit.n_qubits:
        raise ValueError(
            f"state has {psi.shape[-1]} amplitudes, circuit needs {2**circuit.n_qubits}"
        )
    for g in circuit.gates:
        _apply_inplace(psi, g, circuit.n_qubits)
    return psi


def apply_gate(state: Statevector, gate: Gate) -> Statevector:
    if max(gate.qubits) >= state.n_qubits:
        raise IndexError(f"gate {gate} out of range for {state.n_qubits} qubits")
    psi = np.array(state.amps, dtype=complex)
    _apply_inplace(psi, gate, state.n_qubits)
    return Statevector(state.n_qubits, psi)


# -- amplitude encoding -----------------------------------------------------


def _gray(i: int) -> int:
    return i ^ (i >> 1)


def _uniformly_controlled(kind, target, controls, alphas):
    """Uniformly controlled rotation as single-qubit rotations and CNOTs.

    ``alphas[c]`` is the angle applied when the control register reads ``c``
    (bit ``t`` of ``c`` is qubit ``controls[t]``).
    """
    alphas = np.asarray(alphas, dtype=float)
    k = len(controls)
    if np.all(np.abs(alphas) < 1e-14):
        return []
    if k == 0:
        return [Gate(kind, (target,), param=float(alphas[0]))]
    size = 2**k
    grays = [_gray(i) for i in range(size)]
    c = np.arange(size)
    # sign[c, i] = (-1)^popcount(c & gray(i))
    sign = np.array([[(-1) ** bin(ci & g).count("1") for g in grays] for ci in c], dtype=float)
    thetas = sign.T @ alphas / size
    gates = []
    for i in range(size):
        if abs(thetas[i]) > 1e-14:
            gates.append(Gate(kind, (target,), param=float(thetas[i])))
        flip = grays[i] ^ grays[(i + 1) % size]
        ctrl = controls[flip.bit_length() - 1]
        gates.append(Gate("X", (target,), (ctrl,)))
    return gates


def _global_phase(phi: float, qubit: int = 0):
    # X U1 X U1 == e^{i phi} I
    if abs(phi) < 1e-15:
        return []
    return [
        Gate("U1", (qubit,), param=phi),
        Gate("X", (qubit,)),
        Gate("U1", (qubit,), param=phi),
        Gate("X", (qubit,)),
    ]


def encode_amplitudes(f) -> Circuit:
    """Mottonen state preparation: a circuit mapping |0> onto ``f`` exactly.

    The global phase is corrected too, so the prepared amplitudes equal
    ``f`` (not just up to a phase); controlled copies of the circuit rely
    on that.
    """
    f = np.asarray(f, dtype=complex).ravel()
    n = _num_qubits(f.size)
    if abs(np.linalg.norm(f) - 1.0) > 1e-10:
        raise ValueError(f"input must have unit norm, got {np.linalg.norm(f)!r}")
    r2 = np.abs(f) ** 2
    phases = np.where(np.abs(f) > 0, np.angle(f), 0.0)
    gates = []
    # magnitudes: top qubit first, each later qubit controlled by all above it
    for b in range(n - 1, -1, -1):
        mass = r2.reshape(2 ** (n - b - 1), 2, 2**b).sum(axis=-1)
        alphas = 2.0 * np.arctan2(np.sqrt(mass[:, 1]), np.sqrt(mass[:, 0]))
        gates += _uniformly_controlled("Ry", b, tuple(range(b + 1, n)), alphas)
    # phases: pairwise differences from the bottom qubit up
    phi = phases
    for b in range(n):
        pairs = phi.reshape(-1, 2)
        gates += _uniformly_controlled("Rz", b, tuple(range(b + 1, n)), pairs[:, 1] - pairs[:, 0])
        phi = pairs.mean(axis=1)
    gates += _global_phase(float(phi[0]))
    return Circuit(n, gates)


def basis_state_circuit(k: int, n: int) -> Circuit:
    """X pattern taking |0> to |k>."""
    if not 0 <= k < 2**n:
        raise ValueError(f"index {k} out of range for {n} qubits")
    return Circuit(n, [Gate("X", (q,)) for q in range(n) if (k >> q) & 1])


# -- Fourier transforms -----------------------------------------------------


def qft_circuit(n: int, swaps: bool = True) -> Circuit:
    """QFT with ``omega = exp(-2i pi / N)``: f_hat_k = N^-1/2 sum_j omega^{jk} f_j.

    Without ``swaps`` the output index is bit-reversed and must be
    reordered classically.
    """
    if n < 1:
        raise ValueError("QFT needs at least one qubit")
    gates = []
    for t in range(n - 1, -1, -1):
        gates.append(Gate("H", (t,)))
        for s in range(t - 1, -1, -1):
            gates.append(Gate("U1", (t,), (s,), -math.pi / 2 ** (t - s)))
    if swaps:
        gates += [Gate("Swap", (i, n - 1 - i)) for i in range(n // 2)]
    return Circuit(n, gates)


def inverse_qft_circuit(n: int) -> Circuit:
    return qft_circuit(n).inverse()


def spatial_qft_circuit(layout: RegisterLayout, inverse: bool = False) -> Circuit:
    """1D QFTs on each spatial register; the component register is left alone."""
    n = layout.n_qubits
    gates = []
    for reg in (layout.spatial_1, layout.spatial_2):
        if reg:
            c = inverse_qft_circuit(len(reg)) if inverse else qft_circuit(len(reg))
            gates += c.embed(reg, n).gates
    return Circuit(n, gates)


def qft_2d(state: Statevector, layout: RegisterLayout) -> Statevector:
    if not layout.spatial_2:
        raise ValueError("2D QFT needs two spatial registers")
    if layout.n_qubits != state.n_qubits:
        raise ValueError("layout and state sizes differ")
    return state.evolve(spatial_qft_circuit(layout))


def qft_tensor_field(state: Statevector, layout: RegisterLayout) -> Statevector:
    if layout.n_qubits != state.n_qubits:
        raise ValueError("layout and state sizes differ")
    return state.evolve(spatial_qft_circuit(layout))


# -- measurement ------------------------------------------------------------


def probability_one(amps, qubit: int) -> np.ndarray:
    """P(qubit = 1) for amplitude array(s) of shape (..., 2**n)."""
    amps = np.asarray(amps)
    n = _num_qubits(amps.shape[-1])
    if not 0 <= qubit < n:
        raise IndexError(f"qubit {qubit} out of range for {n} qubits")
    view = (np.abs(amps) ** 2).reshape(amps.shape[:-1] + (2 ** (n - qubit - 1), 2, 2**qubit))
    return np.clip(view[..., 1, :].sum(axis=(-2, -1)), 0.0, 1.0)


def measure_shots(state: Statevector, qubit: int, shots: int, seed) -> tuple[int, int]:
    """Sample ``shots`` measurements of one qubit; returns (count_0, count_1)."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p1 = float(probability_one(state.amps, qubit))
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    ones = int(rng.binomial(shots, p1))
    return shots - ones, ones
