"""Synthetic instances, Monte-Carlo experiment drivers and file formats.

Seeding
-------
Every trial is driven by a single 64-bit integer seed. Experiments derive the
trial seeds from a master seed by ``SeedSequence(master, spawn_key=(cell,
trial))``, taking the first 64-bit word of its state. Inside a trial the seed
is split into five independent streams: signs, channel, signal, noise and the
power-iteration start vector.
"""
from __future__ import annotations

import csv
import io
import logging
import math
import struct
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ._validation import check_positive
from .metrics import relative_error
from .operator import ModulatedConvOperator, NoiseSpec, add_noise, sigma_for_snr, snr_db
from .solver import SolverConfig, solve
from .spectral import ProblemDims, coherences

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

SUCCESS_THRESHOLD = 1e-2

PHASE_TRANSITION_HEADER = ["K", "M", "Q", "n_trials", "success_rate"]
NOISE_SWEEP_HEADER = ["snr_db", "sigma", "n_trials", "mean_log10_relerr"]
OVERSAMPLING_HEADER = ["ratio", "Q", "K", "M", "n_trials", "mean_log10_relerr"]
TRIAL_HEADER = ["Q", "K", "M", "sigma", "seed", "iterations", "relative_error", "success"]


def derive_seed(master: int, cell: int, trial: int) -> int:
    ss = np.random.SeedSequence(int(master), spawn_key=(int(cell), int(trial)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class InstanceSpec:
    dims: ProblemDims
    seed: int
    sigma: float = 0.0
    d0: float = 1.0
    truth_model: str = "gaussian"

    def __post_init__(self):
        check_positive(self.sigma, "sigma", allow_zero=True)
        check_positive(self.d0, "d0")
        if self.truth_model != "gaussian":
            raise ValueError(f"unknown truth model {self.truth_model!r}")


@dataclass(frozen=True)
class Instance:
    op: ModulatedConvOperator
    h0: np.ndarray
    x0: np.ndarray
    yhat: np.ndarray
    e: np.ndarray
    power_seed: np.random.SeedSequence = field(repr=False)


def _complex_gaussian(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def gen_instance(spec: InstanceSpec) -> Instance:
    """Draw signs, Gaussian truths (each of norm ``sqrt(d0)``) and noise from ``spec.seed``."""
    dims = spec.dims
    s_signs, s_h, s_x, s_noise, s_power = np.random.SeedSequence(int(spec.seed)).spawn(5)
    op = ModulatedConvOperator.random(dims, s_signs)
    root = math.sqrt(spec.d0)
    h0 = _complex_gaussian(np.random.default_rng(s_h), dims.M)
    h0 *= root / np.linalg.norm(h0)
    x0 = _complex_gaussian(np.random.default_rng(s_x), dims.K)
    x0 *= root / np.linalg.norm(x0)
    clean = op.forward_fourier(x0, h0)
    yhat, e = add_noise(clean, NoiseSpec(spec.sigma, spec.d0), s_noise)
    return Instance(op=op, h0=h0, x0=x0, yhat=yhat, e=e, power_seed=s_power)


@dataclass(frozen=True)
class TrialRecord:
    Q: int
    K: int
    M: int
    seed: int
    sigma: float
    snr_db: float
    iterations: int
    relative_error: float
    success: bool
    status: str
    wall_time_ms: float

    def csv_row(self) -> list:
        return [self.Q, self.K, self.M, _fmt(self.sigma), self.seed, self.iterations,
                _fmt(self.relative_error), "true" if self.success else "false"]

    def __str__(self):
        parts = [f"{f.name}={_show(getattr(self, f.name))}" for f in fields(self)]
        return "TrialRecord(" + ", ".join(parts) + ")"


def _show(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _fmt(x: float) -> str:
    return repr(float(x))


def run_trial(spec: InstanceSpec, config: SolverConfig = SolverConfig(),
              success_threshold: float = SUCCESS_THRESHOLD, return_details: bool = False):
    """Generate, initialize, descend and score one instance.

    Solver divergence or a degenerate spectrum is recorded as a failure, never raised.
    """
    start = time.perf_counter()
    inst = gen_instance(spec)
    coh = coherences(inst.h0, inst.x0, spec.dims)
    mu = config.mu if config.mu is not None else coh.mu
    nu = config.nu if config.nu is not None else coh.nu
    noise_energy = float(np.vdot(inst.e, inst.e).real)
    details = None
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            it, trace, init = solve(inst.op, inst.yhat, mu, nu, config, noise_energy=noise_energy,
                                    random_state=inst.power_seed)
        err = relative_error(it.u, it.v, inst.h0, inst.x0)
        iterations, status = trace.n_iter, trace.status
        details = (inst, it, trace, init)
        if not np.isfinite(err):
            err = float("inf")
    except (ValueError, FloatingPointError, OverflowError) as exc:
        logger.debug("trial %d failed: %s", spec.seed, exc)
        err, iterations, status = float("inf"), 0, "failed"
    record = TrialRecord(
        Q=spec.dims.Q, K=spec.dims.K, M=spec.dims.M, seed=int(spec.seed), sigma=float(spec.sigma),
        snr_db=snr_db(spec.d0**2, inst.e), iterations=int(iterations), relative_error=float(err),
        success=bool(err < success_threshold), status=status,
        wall_time_ms=1e3 * (time.perf_counter() - start),
    )
    return (record, details) if return_details else record


def _run_one(args):
    spec, config, threshold = args
    return run_trial(spec, config, threshold)


def run_many(specs: Sequence[InstanceSpec], config: SolverConfig, threads: int = 1,
             success_threshold: float = SUCCESS_THRESHOLD) -> list:
    """Run trials, in a process pool when ``threads > 1``; output order follows ``specs``."""
    jobs = [(s, config, success_threshold) for s in specs]
    if threads <= 1 or len(jobs) <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * threads))))


# -- experiments ------------------------------------------------------------------


@dataclass
class GridResult:
    """Tabulated experiment output; ``rows`` follow ``header`` column order."""

    header: list
    rows: list
    n_trials: int
    records: list = field(default_factory=list, repr=False)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header)
        for row in self.rows:
            writer.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def column(self, name) -> np.ndarray:
        i = self.header.index(name)
        return np.array([row[i] for row in self.rows], dtype=float)


def _mean_log10(errors) -> float:
    errors = np.asarray(errors, dtype=float)
    errors = np.where(np.isfinite(errors), errors, 1e300)
    return float(np.mean(np.log10(np.maximum(errors, 1e-300))))


def phase_transition(Q: int, K_values, M_values, n_trials: int = 20,
                     config: SolverConfig = SolverConfig(), output=None, master_seed: int = 0,
                     threads: int = 1, sigma: float = 0.0, d0: float = 1.0,
                     success_threshold: float = SUCCESS_THRESHOLD) -> GridResult:
    """Success probability over a ``K x M`` grid at fixed ``Q``.

    Cells are numbered row-major over ``(K, M)`` for seed derivation.
    """
    K_values, M_values = list(K_values), list(M_values)
    if not K_values or not M_values:
        raise ValueError("grid axes must be nonempty")
    specs, cells = [], []
    for ik, K in enumerate(K_values):
        for im, M in enumerate(M_values):
            dims = ProblemDims(Q, K, M)
            cell = ik * len(M_values) + im
            cells.append(dims)
            specs += [InstanceSpec(dims, derive_seed(master_seed, cell, t), sigma, d0)
                      for t in range(n_trials)]
    records = run_many(specs, config, threads, success_threshold)
    rows = []
    for c, dims in enumerate(cells):
        chunk = records[c * n_trials:(c + 1) * n_trials]
        rate = sum(r.success for r in chunk) / n_trials
        rows.append([dims.K, dims.M, Q, n_trials, float(rate)])
    result = GridResult(PHASE_TRANSITION_HEADER, rows, n_trials, records)
    if output is not None:
        result.to_csv(output)
    return result


def noise_sweep(dims: ProblemDims, snr_db_values, n_trials: int = 20,
                config: SolverConfig = SolverConfig(), output=None, master_seed: int = 0,
                threads: int = 1, d0: float = 1.0) -> GridResult:
    """Mean log10 relative error against target SNR (``sigma = 10^(-snr/20)``)."""
    specs = []
    snrs = [float(s) for s in snr_db_values]
    for c, snr in enumerate(snrs):
        sigma = sigma_for_snr(snr)
        specs += [InstanceSpec(dims, derive_seed(master_seed, c, t), sigma, d0) for t in range(n_trials)]
    records = run_many(specs, config, threads)
    rows = []
    for c, snr in enumerate(snrs):
        chunk = records[c * n_trials:(c + 1) * n_trials]
        rows.append([snr, sigma_for_snr(snr), n_trials, _mean_log10([r.relative_error for r in chunk])])
    result = GridResult(NOISE_SWEEP_HEADER, rows, n_trials, records)
    if output is not None:
        result.to_csv(output)
    return result


def oversampling_Q(ratio: float, K: int, M: int) -> int:
    return int(round(ratio * (K + M)))


def oversampling_sweep(K: int, M: int, ratio_values, n_trials: int = 20,
                       config: SolverConfig = SolverConfig(), output=None, master_seed: int = 0,
                       threads: int = 1, d0: float = 1.0) -> GridResult:
    """Noise-free mean log10 relative error against ``Q / (K + M)``.

    Ratios whose ``Q`` would fall below ``max(K, M)`` are kept as rows with
    ``n_trials = 0`` and a NaN error.
    """
    ratios = [float(r) for r in ratio_values]
    specs, layout = [], []
    for c, ratio in enumerate(ratios):
        check_positive(ratio, "ratio")
        Q = oversampling_Q(ratio, K, M)
        if Q < max(K, M):
            warnings.warn(f"ratio {ratio} gives Q={Q} < max(K, M); cell skipped", RuntimeWarning,
                          stacklevel=2)
            layout.append((ratio, Q, 0))
            continue
        dims = ProblemDims(Q, K, M)
        specs += [InstanceSpec(dims, derive_seed(master_seed, c, t), 0.0, d0) for t in range(n_trials)]
        layout.append((ratio, Q, n_trials))
    records = run_many(specs, config, threads)
    rows, pos = [], 0
    for ratio, Q, n in layout:
        chunk = records[pos:pos + n]
        pos += n
        value = _mean_log10([r.relative_error for r in chunk]) if n else float("nan")
        rows.append([ratio, Q, K, M, n, value])
    result = GridResult(OVERSAMPLING_HEADER, rows, n_trials, records)
    if output is not None:
        result.to_csv(output)
    return result


def success_frontier(grid: GridResult) -> float:
    """Oversampling ratio where a logistic fit of success on ``log(ratio)`` crosses 1/2.

    Fitted by maximum likelihood over all trials of the grid.
    """
    from scipy.optimize import minimize

    t = np.array([math.log(r.Q / (r.K + r.M)) for r in grid.records])
    y = np.array([1.0 if r.success else 0.0 for r in grid.records])
    if y.min() == y.max():
        raise ValueError("frontier undefined: all trials share one outcome")

    def nll(beta):
        z = beta[0] + beta[1] * t
        return float(np.sum(np.logaddexp(0.0, z) - y * z))

    beta = minimize(nll, x0=np.array([0.0, 1.0]), method="Nelder-Mead",
                    options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 10000}).x
    return float(math.exp(-beta[0] / beta[1]))


# -- file formats -----------------------------------------------------------------


def write_cvec(path, values) -> None:
    """Little-endian ``uint64`` length followed by ``(re, im)`` float64 pairs."""
    arr = np.asarray(values, dtype=np.complex128).ravel()
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", arr.shape[0]))
        fh.write(arr.astype("<c16").tobytes())


def read_cvec(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 8:
        raise ValueError(f"{path}: truncated header")
    (n,) = struct.unpack("<Q", data[:8])
    if len(data) != 8 + 16 * n:
        raise ValueError(f"{path}: expected {n} complex values, found {(len(data) - 8) / 16:g}")
    return np.frombuffer(data[8:], dtype="<c16").astype(np.complex128)


CONFIG_KEYS = {
    # dims / experiment
    "Q": int, "K": int, "M": int, "sigma": float, "d0": float, "trials": int, "seed": int,
    "threads": int, "K_values": list, "M_values": list, "ratios": list, "snr_db": list,
    "success_threshold": float,
    # solver
    "eta": float, "step_scale": float, "max_iters": int, "grad_tol": float, "power_iters": int,
    "power_tol": float, "dykstra_iters": int, "dykstra_tol": float, "projection": str,
    "rho": float, "mu": float, "nu": float,
}
SOLVER_KEYS = {f.name for f in fields(SolverConfig)} & set(CONFIG_KEYS)


def load_config(path) -> dict:
    """Read a flat TOML file of documented keys; unknown keys raise ``ValueError``."""
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    out = {}
    for key, value in raw.items():
        if key not in CONFIG_KEYS:
            raise ValueError(f"unknown config key {key!r}")
        kind = CONFIG_KEYS[key]
        if isinstance(value, dict):
            raise ValueError(f"config must be flat; {key!r} is a table")
        if kind is list:
            if not isinstance(value, list):
                raise ValueError(f"{key!r} must be a list")
        elif kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValueError(f"{key!r} must be a number")
            value = float(value)
        elif not isinstance(value, kind) or isinstance(value, bool):
            raise ValueError(f"{key!r} must be of type {kind.__name__}")
        out[key] = value
    return out


def solver_config_from(options: dict, base: Optional[SolverConfig] = None) -> SolverConfig:
    base = base or SolverConfig()
    changes = {k: v for k, v in options.items() if k in SOLVER_KEYS and v is not None}
    return base.with_(**changes)


def record_dict(record: TrialRecord) -> dict:
    return asdict(record)
