"""FFT-based strain solver (basic Moulinec-Suquet scheme) in 2D plane strain.

Conventions
-----------
* Fields live on an ``(N1, N2)`` pixel grid; array index ``[i1, i2]`` is the
  pixel at ``x = (i1 L1/N1, i2 L2/N2)``.
* Strain, stress and polarization fields are stored as arrays of shape
  ``(3, N1, N2)`` holding the tensor components ``(11, 22, 12)``.
* Macroscopic loads and the effective stiffness use Voigt notation with
  engineering shear: strain ``(e11, e22, 2 e12)``, stress ``(s11, s22, s12)``,
  so ``C*`` is the usual 3x3 matrix with ``C*_33 = mu`` for an isotropic
  phase.  ``C*[j, k]`` is the mean of stress component ``k`` under the unit
  load ``e_j``.
* Mixed boundary conditions compatible with periodicity are handled by
  mirroring the geometry evenly along both axes and solving periodically on
  the doubled grid; averages are then taken over the original quarter.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .amplitude import AmplificationSchedule, ExactEstimator, MLQAEEstimator
from .readout import (
    hadamard_iqft_estimate,
    hadamard_qft_estimate,
    symmetric_iqft,
    symmetric_qft,
)

__all__ = [
    "Grid2D",
    "ReferenceMaterial",
    "StiffnessMap",
    "StrainSolution",
    "HomogenizationResult",
    "NonConvergenceWarning",
    "frequency_axis",
    "frequencies",
    "green_operator_hat",
    "green_operator_field",
    "isotropic_voigt",
    "convergence_error",
    "elastic_energy",
    "mirror_field",
    "load_symmetry",
    "strain_solver_fft",
    "strain_solver_qft",
    "effective_stiffness",
    "make_geometry",
    "reference_geometries",
    "geometry_from_config",
]

EVEN_EVEN = ("even", "even")
ODD_ODD = ("odd", "odd")


class NonConvergenceWarning(RuntimeWarning):
    pass


def _is_pow2(n):
    return n >= 1 and n & (n - 1) == 0


@dataclass(frozen=True)
class Grid2D:
    N1: int
    N2: int
    L1: float = 1.0
    L2: float = 1.0

    def __post_init__(self):
        if not (_is_pow2(self.N1) and _is_pow2(self.N2)):
            raise ValueError(f"grid sizes must be powers of two, got {self.N1}x{self.N2}")
        if self.L1 <= 0 or self.L2 <= 0:
            raise ValueError("edge lengths must be positive")

    @property
    def shape(self):
        return (self.N1, self.N2)


@dataclass(frozen=True)
class ReferenceMaterial:
    lam: float
    mu: float

    def __post_init__(self):
        if self.mu <= 0 or self.lam + 2 * self.mu <= 0:
            raise ValueError(f"reference medium not admissible: lambda={self.lam}, mu={self.mu}")

    @classmethod
    def midpoint(cls, stiffness: "StiffnessMap") -> "ReferenceMaterial":
        lam, mu = stiffness.lam, stiffness.mu
        return cls(0.5 * (lam.min() + lam.max()), 0.5 * (mu.min() + mu.max()))


@dataclass(frozen=True)
class StiffnessMap:
    """Per-pixel isotropic Lame parameters."""

    lam: np.ndarray = field(repr=False)
    mu: np.ndarray = field(repr=False)

    def __post_init__(self):
        lam = np.array(self.lam, dtype=float)
        mu = np.array(self.mu, dtype=float)
        if lam.shape != mu.shape or lam.ndim != 2:
            raise ValueError("lambda and mu must be 2D arrays of equal shape")
        if np.any(mu <= 0) or np.any(lam + 2 * mu <= 0):
            raise ValueError("stiffness not pointwise stable (need mu > 0, lambda + 2 mu > 0)")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)

    @property
    def shape(self):
        return self.lam.shape

    def stress(self, eps):
        return _stress(self.lam, self.mu, eps)

    def mirror(self) -> "StiffnessMap":
        return StiffnessMap(mirror_field(self.lam, EVEN_EVEN), mirror_field(self.mu, EVEN_EVEN))


def _stress(lam, mu, eps):
    tr = eps[0] + eps[1]
    return np.stack([lam * tr + 2 * mu * eps[0], lam * tr + 2 * mu * eps[1], 2 * mu * eps[2]])


def isotropic_voigt(lam: float, mu: float) -> np.ndarray:
    return np.array([[lam + 2 * mu, lam, 0.0], [lam, lam + 2 * mu, 0.0], [0.0, 0.0, mu]])


# -- Fourier space ----------------------------------------------------------


def frequency_axis(N: int, L: float = 1.0) -> np.ndarray:
    """Frequencies (-N/2 + h)/L for h = 1..N, in increasing order."""
    return (np.arange(1, N + 1) - N / 2) / L


def frequencies(grid: Grid2D) -> np.ndarray:
    """Frequency field of shape (2, N1, N2) in FFT storage order.

    The lattice of :func:`frequency_axis` is reordered so that entry ``q`` of
    each axis holds the frequency congruent to ``q`` modulo ``N``; the
    Nyquist index ``N/2`` therefore carries ``+N/2``.
    """
    axes = []
    for N, L in ((grid.N1, grid.L1), (grid.N2, grid.L2)):
        lattice = frequency_axis(N, L)
        order = np.mod(np.rint(lattice * L).astype(int), N)
        ax = np.empty(N)
        ax[order] = lattice
        axes.append(ax)
    x1, x2 = np.meshgrid(*axes, indexing="ij")
    return np.stack([x1, x2])


def green_operator_hat(xi, ref: ReferenceMaterial) -> np.ndarray:
    """Green operator of the reference medium, shape (2, 2, 2, 2, ...) for xi of shape (2, ...)."""
    xi = np.asarray(xi, dtype=float)
    n2 = xi[0] ** 2 + xi[1] ** 2
    if np.any(n2 == 0):
        raise ValueError("the Green operator is undefined at zero frequency")
    d = np.eye(2)
    lam0, mu0 = ref.lam, ref.mu
    c = (lam0 + mu0) / (mu0 * (lam0 + 2 * mu0))
    G = np.empty((2, 2, 2, 2) + n2.shape)
    for j in range(2):
        for k in range(2):
            for l in range(2):
                for m in range(2):
                    G[j, k, l, m] = (
                        d[l, j] * xi[m] * xi[k]
                        + d[m, j] * xi[l] * xi[k]
                        + d[l, k] * xi[j] * xi[m]
                        + d[k, m] * xi[l] * xi[j]
                    ) / (4 * mu0 * n2) - c * xi[j] * xi[k] * xi[l] * xi[m] / n2**2
    return G


def green_operator_field(grid: Grid2D, ref: ReferenceMaterial) -> np.ndarray:
    """Green operator on every frequency of the grid, zero at xi = 0."""
    xi = frequencies(grid)
    zero = (xi[0] == 0) & (xi[1] == 0)
    xi_safe = np.where(zero, 1.0, xi)
    G = green_operator_hat(xi_safe, ref)
    G[..., zero] = 0.0
    return G


def _apply_green(G, tau_hat):
    # tau_hat: (3, N1, N2) tensor components, result likewise
    t = np.stack([np.stack([tau_hat[0], tau_hat[2]]), np.stack([tau_hat[2], tau_hat[1]])])
    e = np.einsum("jklm...,lm...->jk...", G, t)
    return np.stack([e[0, 0], e[1, 1], e[0, 1]])


# -- field helpers ----------------------------------------------------------


def _macro_field(E, shape):
    E = np.asarray(E, dtype=float)
    if E.shape != (3,):
        raise ValueError("macroscopic strain must be a Voigt 3-vector")
    tensor = np.array([E[0], E[1], 0.5 * E[2]])
    return tensor[:, None, None] * np.ones((1,) + tuple(shape))


def _sq_norm(eps):
    return float(np.sum(eps[0] ** 2) + np.sum(eps[1] ** 2) + 2 * np.sum(eps[2] ** 2))


def convergence_error(eps_next, eps_prev, E) -> float:
    """|eps_next - eps_prev| / |E| with E spread over every pixel.

    Norms are root-sum-squares of the full 2x2 tensors over all pixels.
    """
    eps_next = np.asarray(eps_next, dtype=float)
    eps_prev = np.asarray(eps_prev, dtype=float)
    if eps_next.shape != eps_prev.shape:
        raise ValueError("iterates on different grids")
    ref = _sq_norm(_macro_field(E, eps_next.shape[1:]))
    if ref == 0:
        raise ValueError("zero macroscopic strain")
    return math.sqrt(_sq_norm(eps_next - eps_prev) / ref)


def elastic_energy(sigma, eps) -> float:
    """Mean of sigma : eps / 2 (shear term counted twice)."""
    sigma = np.asarray(sigma, dtype=float)
    eps = np.asarray(eps, dtype=float)
    if sigma.shape != eps.shape:
        raise ValueError("stress and strain on different grids")
    return 0.5 * float(np.mean(sigma[0] * eps[0] + sigma[1] * eps[1] + 2 * sigma[2] * eps[2]))


def mirror_field(f, symmetry):
    """Reflect a field across both far edges, doubling each axis.

    ``symmetry`` is one parity pair for a scalar field (N1, N2) or one pair per
    component for a stacked field (d, N1, N2).  Even: ``g[2N-1-j] = g[j]``;
    odd: ``g[2N-1-j] = -g[j]``.
    """
    f = np.asarray(f)
    if f.ndim == 2:
        return _mirror2(f, tuple(symmetry))
    if f.ndim == 3:
        if len(symmetry) != f.shape[0]:
            raise ValueError("need one parity pair per component")
        return np.stack([_mirror2(c, tuple(s)) for c, s in zip(f, symmetry)])
    raise ValueError("expected a (N1, N2) or (d, N1, N2) field")


def _mirror2(f, pair):
    for ax, p in enumerate(pair):
        if p not in ("even", "odd"):
            raise ValueError(f"parity must be 'even' or 'odd', got {p!r}")
        sign = 1.0 if p == "even" else -1.0
        f = np.concatenate([f, sign * np.flip(f, axis=ax)], axis=ax)
    return f


def load_symmetry(E):
    """Parities of (e11, e22, e12) on the mirrored domain for a load E.

    Normal loads give (EE, EE, OO), a shear load gives (OO, OO, EE); mixed
    loads have no common parity and return None.
    """
    E = np.asarray(E, dtype=float)
    if E[2] == 0:
        return [EVEN_EVEN, EVEN_EVEN, ODD_ODD]
    if E[0] == 0 and E[1] == 0:
        return [ODD_ODD, ODD_ODD, EVEN_EVEN]
    return None


# -- solvers ----------------------------------------------------------------


@dataclass
class StrainSolution:
    strain: np.ndarray
    stress: np.ndarray
    errors: list
    energies: list
    converged: bool

    @property
    def iterations(self) -> int:
        return len(self.errors)


def _solve(E, stiffness, ref, tol, max_iter, fluctuation, region):
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    ref = ReferenceMaterial.midpoint(stiffness) if ref is None else ref
    macro = _macro_field(E, stiffness.shape)
    eps = macro.copy()
    errors, energies = [], []
    converged = False
    for it in range(max_iter):
        tau = stiffness.stress(eps) - _stress(ref.lam, ref.mu, eps)
        new = macro - fluctuation(tau, ref, it)
        err = convergence_error(new, eps, E)
        eps = new
        errors.append(err)
        sig = stiffness.stress(eps)
        energies.append(elastic_energy(sig[region], eps[region]))
        if err < tol:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"strain iteration did not reach tol={tol:g} in {max_iter} iterations "
            f"(last error {errors[-1]:.3e})",
            NonConvergenceWarning,
            stacklevel=3,
        )
    return StrainSolution(eps, stiffness.stress(eps), errors, energies, converged)


def _full_region(shape):
    return (slice(None), slice(0, shape[0]), slice(0, shape[1]))


def strain_solver_fft(E, stiffness: StiffnessMap, ref=None, tol=1e-4, max_iter=100, grid=None, region=None):
    """Fixed-point iteration eps <- E - IFFT(Gamma : FFT(tau))."""
    grid = Grid2D(*stiffness.shape) if grid is None else grid
    cache = {}

    def fluctuation(tau, ref, it):
        if "G" not in cache:
            cache["G"] = green_operator_field(grid, ref)
        tau_hat = np.fft.fft2(tau, axes=(1, 2))
        return np.real(np.fft.ifft2(_apply_green(cache["G"], tau_hat), axes=(1, 2)))

    region = _full_region(stiffness.shape) if region is None else region
    return _solve(E, stiffness, ref, tol, max_iter, fluctuation, region)


def strain_solver_qft(
    E,
    stiffness: StiffnessMap,
    ref=None,
    tol=1e-4,
    max_iter=100,
    schedule: AmplificationSchedule | None = None,
    method="symmetric",
    estimator=None,
    key=(),
    grid=None,
    region=None,
):
    """Same iteration with both transforms read out of simulated QFTs.

    Without ``schedule`` or ``estimator`` the readout uses exact
    probabilities, which reproduces the FFT path up to round-off.  The
    symmetric method needs a mirrored geometry and a load with a definite
    parity (see :func:`load_symmetry`).
    """
    grid = Grid2D(*stiffness.shape) if grid is None else grid
    if estimator is None:
        estimator = MLQAEEstimator(schedule) if schedule is not None else ExactEstimator()
    if method == "symmetric":
        sym = load_symmetry(E)
        if sym is None:
            raise ValueError("symmetric readout needs a pure normal or pure shear load")
        for ax, N in enumerate(stiffness.shape):
            flipped = np.flip(stiffness.lam, axis=ax), np.flip(stiffness.mu, axis=ax)
            if not (np.array_equal(flipped[0], stiffness.lam) and np.array_equal(flipped[1], stiffness.mu)):
                raise ValueError("symmetric readout needs a mirrored geometry")
    elif method != "hadamard":
        raise ValueError(f"unknown QFT readout method {method!r}")
    cache = {}
    key = tuple(key)

    def fluctuation(tau, ref, it):
        if "G" not in cache:
            cache["G"] = green_operator_field(grid, ref)
        k_fwd, k_inv = key + (it, 0), key + (it, 1)
        if method == "symmetric":
            tau_hat = symmetric_qft(tau, estimator, sym, k_fwd, tensor=True, check=False)
            return symmetric_iqft(_apply_green(cache["G"], tau_hat), estimator, k_inv, tensor=True)
        tau_hat = hadamard_qft_estimate(tau, estimator, k_fwd, tensor=True)
        return hadamard_iqft_estimate(_apply_green(cache["G"], tau_hat), estimator, k_inv, tensor=True)

    region = _full_region(stiffness.shape) if region is None else region
    return _solve(E, stiffness, ref, tol, max_iter, fluctuation, region)


@dataclass
class HomogenizationResult:
    C: np.ndarray
    solutions: list
    method: str
    mirrored: bool

    @property
    def converged(self) -> bool:
        return all(s.converged for s in self.solutions)

    @property
    def asymmetry(self) -> float:
        return float(np.abs(self.C - self.C.T).max())


def effective_stiffness(
    stiffness: StiffnessMap,
    method="fft",
    mirrored=True,
    tol=1e-4,
    max_iter=100,
    schedule=None,
    estimator=None,
    ref=None,
    seed_key=(),
) -> HomogenizationResult:
    """Three solves under unit Voigt loads; row j of C* is the mean stress of load j.

    ``method`` is ``"fft"``, ``"qft-symmetric"`` or ``"qft-hadamard"``.  With
    ``mirrored`` the geometry is reflected first and averages are taken over
    the original quarter.
    """
    N1, N2 = stiffness.shape
    work = stiffness.mirror() if mirrored else stiffness
    region = (slice(None), slice(0, N1), slice(0, N2))
    ref = ReferenceMaterial.midpoint(stiffness) if ref is None else ref
    C = np.zeros((3, 3))
    sols = []
    for j in range(3):
        E = np.zeros(3)
        E[j] = 1.0
        if method == "fft":
            sol = strain_solver_fft(E, work, ref, tol, max_iter, region=region)
        elif method in ("qft-symmetric", "qft-hadamard"):
            sol = strain_solver_qft(
                E, work, ref, tol, max_iter, schedule, method.split("-")[1], estimator,
                key=tuple(seed_key) + (j,), region=region,
            )
        else:
            raise ValueError(f"unknown method {method!r}")
        C[j] = sol.stress[region].mean(axis=(1, 2))
        sols.append(sol)
    return HomogenizationResult(C, sols, method, mirrored)


# -- geometries -------------------------------------------------------------


def make_geometry(kind: str, shape, phases, cells: int = 2) -> StiffnessMap:
    """Two-phase microstructures.

    ``phases`` is ``[(lam_a, mu_a), (lam_b, mu_b)]``.  ``laminate``: phase a
    for ``i1 < N1/2``, phase b elsewhere (bands normal to x1).
    ``checkerboard``: ``cells x cells`` squares with phase b on the square
    holding pixel (0, 0) and on every square diagonal to it.
    """
    N1, N2 = shape
    if N1 % 2 or N2 % 2:
        raise ValueError(f"grid sizes must be even, got {N1}x{N2}")
    if len(phases) != 2:
        raise ValueError("exactly two phases expected")
    i1, i2 = np.meshgrid(np.arange(N1), np.arange(N2), indexing="ij")
    if kind == "laminate":
        b = i1 >= N1 // 2
    elif kind == "checkerboard":
        if cells < 1 or N1 % cells or N2 % cells:
            raise ValueError(f"{cells} cells do not divide a {N1}x{N2} grid")
        b = ((i1 * cells // N1) + (i2 * cells // N2)) % 2 == 0
    else:
        raise ValueError(f"unknown geometry {kind!r}")
    (la, ma), (lb, mb) = phases
    return StiffnessMap(np.where(b, lb, la), np.where(b, mb, ma))


def reference_geometries() -> dict:
    """Bundled geometry configurations (laminate, checkerboard)."""
    text = resources.files("qhom").joinpath("data/geometries.json").read_text()
    return json.loads(text)


def geometry_from_config(cfg: dict) -> StiffnessMap:
    phases = [(p["lambda"], p["mu"]) for p in cfg["phases"]]
    return make_geometry(cfg["kind"], (cfg["N1"], cfg["N2"]), phases, cfg.get("cells", 2))
