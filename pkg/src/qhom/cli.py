"""Command line entry point: ``qhom <subcommand> [options]``.

Subcommands write their results into ``--out`` (default ``./qhom-out``)
together with ``manifest.json`` listing the resolved configuration and a
SHA-256 checksum of every file written.  Settings come from built-in
defaults, then ``--config`` (JSON), then command-line flags.  The seed falls
back to the ``QHOM_SEED`` environment variable when neither sets it.

Exit codes: 0 success, 1 failed self-test, 2 solver did not converge,
3 invalid configuration.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .amplitude import (
    AmplificationSchedule,
    ExactEstimator,
    MLQAEEstimator,
    calibrate,
    required_amplifications,
)
from .homogenization import (
    NonConvergenceWarning,
    effective_stiffness,
    geometry_from_config,
    reference_geometries,
)
from .quantum import qft_circuit, simulate
from .readout import (
    dft,
    hadamard_qft_estimate,
    idft,
    phase_table,
    readout_report,
    symmetric_iqft,
    symmetric_qft,
)

log = logging.getLogger("qhom")

EXIT_OK, EXIT_SELFTEST, EXIT_NOT_CONVERGED, EXIT_CONFIG = 0, 1, 2, 3

DEFAULTS = {
    "mlqae-calibrate": {
        "seed": 0,
        "repetitions": 50,
        "shots_grid": [100, 200, 500, 1000, 2000, 5000, 10000],
        "max_powers_for_shots": [1, 2, 4],
        "power_grid": [1, 2, 4, 8, 16, 32, 64, 128],
        "shots_for_powers": [100, 1000, 10000],
        "dat": False,
    },
    "qft": {
        "seed": 0,
        "dims": 1,
        "input": "bell",
        "method": "symmetric",
        "qubits": 2,
        "max_power": 4,
        "shots": 1000,
        "dat": False,
    },
    "homogenize": {
        "seed": 0,
        "geometry": "checkerboard",
        "method": "fft",
        "tol": 1e-4,
        "max_iter": 100,
        "max_power": 512,
        "shots": 1000,
        "dat": False,
    },
    "selftest": {"seed": 0, "dat": False},
}

FLAG_KEYS = {
    "seed": "seed",
    "shots": "shots",
    "max_power": "max_power",
    "method": "method",
    "tol": "tol",
    "max_iter": "max_iter",
    "geometry": "geometry",
    "qubits": "qubits",
    "dims": "dims",
    "input": "input",
    "dat": "dat",
}


class ConfigError(ValueError):
    pass


# -- configuration ----------------------------------------------------------


def resolve_config(command, args, env=None):
    env = os.environ if env is None else env
    cfg = dict(DEFAULTS[command])
    seed_set = False
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(file_cfg) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
        cfg.update(file_cfg)
        seed_set = "seed" in file_cfg
    for attr, k in FLAG_KEYS.items():
        v = getattr(args, attr, None)
        if v is None or v is False:
            continue
        if k not in cfg:
            raise ConfigError(f"--{attr.replace('_', '-')} does not apply to {command}")
        cfg[k] = v
        seed_set = seed_set or k == "seed"
    if not seed_set and env.get("QHOM_SEED"):
        try:
            cfg["seed"] = int(env["QHOM_SEED"])
        except ValueError as exc:
            raise ConfigError(f"QHOM_SEED must be an integer, got {env['QHOM_SEED']!r}") from exc
    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise ConfigError("seed must be a non-negative integer")
    return cfg


def _schedule(cfg):
    try:
        return AmplificationSchedule.exponential(int(cfg["max_power"]), int(cfg["shots"]), cfg["seed"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# -- output -----------------------------------------------------------------


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_table(path: Path, header, rows, dat=False):
    """CSV, or whitespace separated ``.dat`` with a commented header."""
    path = path.with_suffix(".dat" if dat else ".csv")
    with open(path, "w", newline="") as fh:
        if dat:
            fh.write("# " + " ".join(header) + "\n")
            for r in rows:
                fh.write(" ".join(_fmt(x) for x in r) + "\n")
        else:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows([[_fmt(x) for x in r] for r in rows])
    return path


def write_json(path: Path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out: Path, command, cfg, files, elapsed):
    manifest = {
        "command": command,
        "version": __version__,
        "config": cfg,
        "seed": cfg["seed"],
        "files": {p.name: _sha256(p) for p in sorted(files)},
        "wall_clock_seconds": round(elapsed, 3),
    }
    return write_json(out / "manifest.json", manifest)


# -- subcommands ------------------------------------------------------------


def cmd_mlqae_calibrate(cfg, out: Path):
    fit = calibrate(
        seed=cfg["seed"],
        reps=int(cfg["repetitions"]),
        shots_grid=tuple(cfg["shots_grid"]),
        max_powers_for_shots=tuple(cfg["max_powers_for_shots"]),
        power_grid=tuple(cfg["power_grid"]),
        shots_for_powers=tuple(cfg["shots_for_powers"]),
    )
    files = []
    # one table per curve, x / error / theoretical
    for sweep, fixed in sorted({(r[0], r[1]) for r in fit.rows}):
        rows = [(r[2], r[3], r[4]) for r in fit.rows if r[0] == sweep and r[1] == fixed]
        name = f"calibration_{sweep}_{'m' if sweep == 'shots' else 'S'}{fixed}"
        files.append(write_table(out / name, ["x", "error", "theoretical"], rows, cfg["dat"]))
    summary = {
        "slope_shots": fit.slope_shots,
        "slope_amplifications": fit.slope_amps,
        "C_shots": fit.C_shots,
        "C_amplifications": fit.C_amps,
        "stddev_C_shots": fit.stddev_C_shots,
        "stddev_C_amplifications": fit.stddev_C_amps,
        "planning_m_for_e1e-4_S1000": required_amplifications(1e-4, 1000, fit.C),
    }
    files.append(write_json(out / "calibration_fit.json", summary))
    print(
        f"slope vs shots {fit.slope_shots:.3f}, slope vs amplifications {fit.slope_amps:.3f}, "
        f"C = {fit.C_shots:.4f} (shots sweep), {fit.C_amps:.4f} (amplification sweep)"
    )
    return files, EXIT_OK


def make_input(kind, dims, qubits, seed):
    """Test inputs; all of them are even mirror images along every axis."""
    N = 2**qubits
    if kind == "bell":
        if dims != 1:
            raise ConfigError("the bell input is one-dimensional")
        f = np.zeros(N)
        f[0] = f[-1] = 1 / math.sqrt(2)
        return f
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(7,)))
    if kind == "random":
        half = rng.uniform(-1, 1, size=(N // 2,) * dims)
        f = half
        for ax in range(dims):
            f = np.concatenate([f, np.flip(f, axis=ax)], axis=ax)
        return f
    if kind == "sinus":
        x = (np.arange(N) + 0.5) / N
        f1 = np.cos(2 * math.pi * x) + 0.5 * np.cos(2 * math.pi * 3 * x)
        return f1 if dims == 1 else np.outer(f1, np.cos(2 * math.pi * 2 * x))
    path = Path(kind)
    if not path.exists():
        raise ConfigError(f"input must be bell, random, sinus or an existing file, got {kind!r}")
    f = np.load(path) if path.suffix == ".npy" else np.loadtxt(path, delimiter="," if path.suffix == ".csv" else None)
    return np.asarray(f, dtype=float)


def cmd_qft(cfg, out: Path):
    dims, method = int(cfg["dims"]), cfg["method"]
    if dims not in (1, 2):
        raise ConfigError("dims must be 1 or 2")
    if method not in ("symmetric", "hadamard"):
        raise ConfigError("method must be symmetric or hadamard")
    f = make_input(cfg["input"], dims, int(cfg["qubits"]), cfg["seed"])
    sched = _schedule(cfg)
    sym = ("even",) * f.ndim
    try:
        report = readout_report(f, MLQAEEstimator(sched), method, sym if method == "symmetric" else None)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    files = []
    idx = np.indices(f.shape).reshape(f.ndim, -1).T
    rows = []
    c, o = report.coefficients.ravel(), report.oracle.ravel()
    for i, k in enumerate(idx):
        rows.append(
            [*k, c[i].real, c[i].imag, report.amplitudes.ravel()[i], int(report.signs.ravel()[i]),
             o[i].real, o[i].imag, abs(c[i] - o[i])]
        )
    kcols = ["k"] if f.ndim == 1 else ["k1", "k2"]
    files.append(write_table(out / "spectrum", kcols + ["re", "im", "amplitude", "sign", "oracle_re", "oracle_im", "abs_error"], rows, cfg["dat"]))
    # L2 error against the number of amplifications
    sweep = []
    for m in sched.powers[1:]:
        s = AmplificationSchedule.exponential(m, sched.shots, sched.seed)
        est = MLQAEEstimator(s)
        if method == "symmetric":
            got = symmetric_qft(f, est, sym)
        else:
            got = hadamard_qft_estimate(f, est)
        sweep.append((m, float(np.linalg.norm(got - report.oracle))))
    files.append(write_table(out / "l2_error", ["max_power", "l2_error"], sweep, cfg["dat"]))
    print(f"L2 error at m_M={sched.max_power}: {report.l2_error:.3e}")
    return files, EXIT_OK


def cmd_homogenize(cfg, out: Path):
    geos = reference_geometries()
    g = cfg["geometry"]
    if g in geos:
        gcfg = geos[g]
    elif Path(g).exists():
        try:
            gcfg = json.loads(Path(g).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad geometry file {g}: {exc}") from exc
    else:
        raise ConfigError(f"unknown geometry {g!r}")
    method = cfg["method"]
    if method not in ("fft", "qft-symmetric", "qft-hadamard"):
        raise ConfigError("method must be fft, qft-symmetric or qft-hadamard")
    try:
        stiffness = geometry_from_config(gcfg)
        tol, max_iter = float(cfg["tol"]), int(cfg["max_iter"])
        if tol <= 0 or max_iter < 1:
            raise ValueError("need tol > 0 and max_iter >= 1")
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad geometry or solver settings: {exc}") from exc
    sched = _schedule(cfg) if method != "fft" else None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonConvergenceWarning)
        res = effective_stiffness(
            stiffness, method, gcfg.get("mirrored", True), tol, max_iter, schedule=sched
        )
    files = [
        write_table(out / "stiffness", ["row", "c1", "c2", "c3"], [[j, *res.C[j]] for j in range(3)], cfg["dat"])
    ]
    trace = []
    for j, sol in enumerate(res.solutions):
        trace += [(j, it + 1, e, w) for it, (e, w) in enumerate(zip(sol.errors, sol.energies))]
    files.append(write_table(out / "trace", ["load", "iteration", "error", "energy"], trace, cfg["dat"]))
    files.append(
        write_json(
            out / "result.json",
            {
                "C": res.C.tolist(),
                "converged": [s.converged for s in res.solutions],
                "iterations": [s.iterations for s in res.solutions],
                "asymmetry": res.asymmetry,
            },
        )
    )
    np.set_printoptions(precision=5, suppress=True)
    print(f"C* ({method}):\n{res.C}")
    if not res.converged:
        print(f"not converged: iterations {[s.iterations for s in res.solutions]}", file=sys.stderr)
        return files, EXIT_NOT_CONVERGED
    return files, EXIT_OK


def selftest_checks(seed=0):
    """Oracle comparisons: (name, error, tolerance)."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(11,)))
    checks = []
    err = 0.0
    for n in range(1, 7):
        f = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
        f /= np.linalg.norm(f)
        err = max(err, np.abs(simulate(qft_circuit(n), f) - np.fft.fft(f) / math.sqrt(2**n)).max())
    checks.append(("qft_vs_dft", err, 1e-9))
    ex = ExactEstimator()
    half = rng.normal(size=(4, 2))
    f2 = np.concatenate([half, half[::-1]], axis=0)
    f2 = np.concatenate([f2, -f2[:, ::-1]], axis=1)
    F2 = dft(f2)
    checks.append(("symmetric_readout_2d", np.abs(symmetric_qft(f2, ex, ("even", "odd")) - F2).max(), 1e-6))
    checks.append(("hadamard_readout_2d", np.abs(hadamard_qft_estimate(f2, ex) - F2).max(), 1e-6))
    checks.append(("symmetric_inverse_2d", np.abs(symmetric_iqft(F2, ex) - f2).max(), 1e-6))
    beta = phase_table(f2.shape, ("even", "odd"))
    checks.append(("phase_lemma", np.abs((F2 * np.exp(-1j * beta)).imag).max(), 1e-9))
    checks.append(("idft_roundtrip", np.abs(idft(F2) - f2).max(), 1e-12))
    geos = reference_geometries()
    lam = geos["laminate"]
    st = geometry_from_config(lam)
    C_fft = effective_stiffness(st, "fft").C
    checks.append(("laminate_fft", np.abs(C_fft - np.array(lam["expected_C"])).max(), 1e-5))
    C_q = effective_stiffness(st, "qft-symmetric").C
    checks.append(("laminate_qft_exact", np.abs(C_q - C_fft).max(), 1e-6))
    checks.append(("planning_e1e-4", abs(required_amplifications(1e-4, 1000, 0.094) - 32), 0.5))
    return checks


def cmd_selftest(cfg, out: Path):
    checks = selftest_checks(cfg["seed"])
    rows = [(name, float(err), tol, "pass" if err <= tol else "fail") for name, err, tol in checks]
    for r in rows:
        print(f"{r[3].upper():4s} {r[0]:24s} error {r[1]:.3e} (tol {r[2]:.0e})")
    path = write_table(out / "selftest", ["check", "error", "tolerance", "status"], rows, cfg["dat"])
    ok = all(r[3] == "pass" for r in rows)
    return [path], EXIT_OK if ok else EXIT_SELFTEST


COMMANDS = {
    "mlqae-calibrate": cmd_mlqae_calibrate,
    "qft": cmd_qft,
    "homogenize": cmd_homogenize,
    "selftest": cmd_selftest,
}


def build_parser():
    p = argparse.ArgumentParser(prog="qhom", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"qhom {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON file with settings")
        s.add_argument("--seed", type=int)
        s.add_argument("--out", default="qhom-out", help="output directory")
        s.add_argument("--dat", action="store_true", help="write whitespace separated .dat tables")
        s.add_argument("-v", "--verbose", action="store_true")
        if name in ("qft", "homogenize"):
            s.add_argument("--shots", type=int)
            s.add_argument("--max-power", type=int)
            s.add_argument("--method")
        if name == "qft":
            s.add_argument("--qubits", type=int)
            s.add_argument("--dims", type=int)
            s.add_argument("--input")
        if name == "homogenize":
            s.add_argument("--tol", type=float)
            s.add_argument("--max-iter", type=int)
            s.add_argument("--geometry")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = resolve_config(args.command, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        files, code = COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    write_manifest(out, args.command, cfg, files, time.perf_counter() - t0)
    log.info("wrote %d files to %s", len(files) + 1, out)
    return code


if __name__ == "__main__":
    sys.exit(main())
