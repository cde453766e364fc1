"""Spectral initialization and fixed-step Wirtinger gradient descent."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ._validation import as_complex_vector, check_positive, check_positive_int
from .metrics import relative_error, sin_angle  # noqa: F401  (re-exported)
from .objective import Iterate, RegularizerParams, evaluate
from .operator import ModulatedConvOperator

logger = logging.getLogger(__name__)

CONVERGED = "converged"
MAX_ITERS = "max-iters"
DIVERGED = "diverged"


class PowerIterationError(RuntimeError):
    """Power iteration stopped before reaching its tolerance.

    ``best`` holds the last ``(d, h_hat, x_hat)`` triple.
    """

    def __init__(self, message, best):
        super().__init__(message)
        self.best = best


class ProjectionWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """Tuning knobs for initialization and descent.

    ``eta=None`` selects the step ``step_scale / d`` where ``d`` is the
    spectral scale estimate. ``mu``/``nu`` override the coherence caps used
    by the penalty and the initial projections; when None the caller must
    supply them (the experiment harness uses the ground-truth values).
    """

    eta: Optional[float] = None
    step_scale: float = 0.2
    max_iters: int = 5000
    grad_tol: float = 1e-9
    power_iters: int = 200
    power_tol: float = 1e-9
    dykstra_iters: int = 500
    dykstra_tol: float = 1e-9
    projection: str = "dykstra"
    rho: Optional[float] = None
    mu: Optional[float] = None
    nu: Optional[float] = None
    divergence_factor: float = 10.0
    record_every: int = 1

    def __post_init__(self):
        if self.eta is not None:
            check_positive(self.eta, "eta")
        check_positive(self.step_scale, "step_scale")
        for name in ("max_iters", "power_iters", "dykstra_iters", "record_every"):
            check_positive_int(getattr(self, name), name)
        for name in ("grad_tol", "power_tol", "dykstra_tol", "divergence_factor"):
            check_positive(getattr(self, name), name)
        for name in ("rho", "mu", "nu"):
            if getattr(self, name) is not None:
                check_positive(getattr(self, name), name)
        if self.projection not in ("dykstra", "clip"):
            raise ValueError(f"projection must be 'dykstra' or 'clip', got {self.projection!r}")

    def step_size(self, d: float) -> float:
        return self.eta if self.eta is not None else self.step_scale / d

    def with_(self, **changes) -> "SolverConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class InitResult:
    u0: np.ndarray
    v0: np.ndarray
    d: float
    power_converged: bool = True
    projections_converged: bool = True


@dataclass
class SolveTrace:
    """Per-iteration history of one descent run."""

    iteration: list = field(default_factory=list)
    data_loss: list = field(default_factory=list)
    penalty: list = field(default_factory=list)
    relative_error: list = field(default_factory=list)
    d_t: list = field(default_factory=list)
    status: str = MAX_ITERS
    eta: float = float("nan")

    def append(self, t, data, pen, rel, d_t):
        self.iteration.append(t)
        self.data_loss.append(data)
        self.penalty.append(pen)
        self.relative_error.append(rel)
        self.d_t.append(d_t)

    def __len__(self):
        return len(self.iteration)

    @property
    def n_iter(self) -> int:
        return self.iteration[-1] if self.iteration else 0


# -- spectral initialization ---------------------------------------------------


def leading_singular_triple(op: ModulatedConvOperator, yhat, config: SolverConfig = SolverConfig(),
                            random_state=None):
    """Leading singular triple of the implicit matrix ``A*(yhat)``.

    Returns ``(d, h_hat, x_hat)`` with unit vectors such that
    ``A*(yhat) ~ d * h_hat x_hat^T`` (note: ``x_hat`` is the *conjugate* of the
    right singular vector, matching the bilinear ``h x^T`` lifting).

    Raises
    ------
    PowerIterationError
        If the residual ``||A*(yhat)^H h_hat - d conj(x_hat)||`` does not fall
        below ``power_tol * d`` within ``power_iters`` iterations.
    """
    yhat = as_complex_vector(yhat, length=op.dims.Q, name="yhat")
    K, M = op.dims.K, op.dims.M
    if not np.any(yhat):
        return 0.0, np.zeros(M, dtype=complex), np.zeros(K, dtype=complex)
    rng = np.random.default_rng(random_state)
    w = rng.standard_normal(K) + 1j * rng.standard_normal(K)
    w /= np.linalg.norm(w)
    d = 0.0
    h = np.zeros(M, dtype=complex)
    res = np.inf
    for _ in range(config.power_iters):
        p = op.adjoint_matvec(yhat, w)
        d = np.linalg.norm(p)
        if d == 0.0:
            break
        h = p / d
        g = op.adjoint_rmatvec(yhat, h)
        res = np.linalg.norm(g - d * w)
        w = g / np.linalg.norm(g)
        if res <= config.power_tol * d:
            # refresh h, d so that A w = d h holds exactly for the returned w
            p = op.adjoint_matvec(yhat, w)
            d = np.linalg.norm(p)
            return float(d), p / d, np.conj(w)
    best = (float(d), h, np.conj(w))
    raise PowerIterationError(
        f"power iteration residual {res / max(d, 1e-300):.2e} above tol {config.power_tol:.1e} "
        f"after {config.power_iters} iterations",
        best,
    )


class PartialFourier:
    """An isometry ``C^n -> C^Q`` built from the first ``n`` columns of ``F`` or ``F^H``."""

    def __init__(self, Q: int, n: int, kind: str):
        if kind not in ("taps", "signal"):
            raise ValueError("kind must be 'taps' or 'signal'")
        self.Q, self.n, self.kind = Q, n, kind

    @classmethod
    def taps(cls, op: ModulatedConvOperator) -> "PartialFourier":
        return cls(op.dims.Q, op.dims.M, "taps")

    @classmethod
    def signal(cls, op: ModulatedConvOperator) -> "PartialFourier":
        return cls(op.dims.Q, op.dims.K, "signal")

    def forward(self, a: np.ndarray) -> np.ndarray:
        if self.kind == "taps":
            return np.fft.fft(a, n=self.Q, norm="ortho")
        return np.fft.ifft(a, n=self.Q, norm="ortho")

    def adjoint(self, w: np.ndarray) -> np.ndarray:
        if self.kind == "taps":
            return np.fft.ifft(w, norm="ortho")[: self.n]
        return np.fft.fft(w, norm="ortho")[: self.n]


def _clip(w: np.ndarray, radius: float) -> np.ndarray:
    mag = np.abs(w)
    over = mag > radius
    if not np.any(over):
        return w
    out = w.copy()
    out[over] *= radius / mag[over]
    return out


def project_coherence(a, tau: float, analysis: PartialFourier, config: SolverConfig = SolverConfig(),
                      return_info: bool = False):
    """Euclidean projection of ``a`` onto ``{w : sqrt(Q) ||T w||_inf <= tau}``.

    ``T`` is the isometry ``analysis``; the problem is solved in its range by
    Dykstra's alternating projections between ``range(T)`` and the
    entrywise magnitude ball of radius ``tau / sqrt(Q)``. With
    ``config.projection == "clip"`` the input is instead rescaled onto the
    constraint boundary (feasible, not the nearest point).
    """
    a = as_complex_vector(a, length=analysis.n, name="a")
    check_positive(tau, "tau")
    radius = tau / np.sqrt(analysis.Q)
    b = analysis.forward(a)
    peak = np.max(np.abs(b))
    if peak <= radius:
        return (a.copy(), True) if return_info else a.copy()
    if config.projection == "clip":
        out = a * (radius / peak)
        return (out, True) if return_info else out

    scale = max(np.linalg.norm(b), 1e-300)
    x = b
    p = np.zeros_like(b)
    q = np.zeros_like(b)
    y = b
    converged = False
    for _ in range(config.dykstra_iters):
        y_new = analysis.forward(analysis.adjoint(x + p))
        p = x + p - y_new
        x_new = _clip(y_new + q, radius)
        q = y_new + q - x_new
        change = max(np.linalg.norm(y_new - y), np.linalg.norm(x_new - x))
        gap = np.linalg.norm(x_new - y_new)
        y, x = y_new, x_new
        if change <= config.dykstra_tol * scale and gap <= config.dykstra_tol * scale:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"Dykstra projection stopped after {config.dykstra_iters} iterations "
            f"(feasibility gap {gap / scale:.1e})",
            ProjectionWarning,
            stacklevel=2,
        )
    out = analysis.adjoint(y)
    return (out, converged) if return_info else out


def initialize(op: ModulatedConvOperator, yhat, mu: float, nu: float,
               config: SolverConfig = SolverConfig(), random_state=None) -> InitResult:
    """Spectral estimate of ``(h, x)`` followed by the two coherence projections.

    If power iteration misses its tolerance the best triple is still used and
    ``power_converged`` is False.
    """
    check_positive(mu, "mu")
    check_positive(nu, "nu")
    try:
        d, h_hat, x_hat = leading_singular_triple(op, yhat, config, random_state)
        power_ok = True
    except PowerIterationError as exc:
        logger.debug("%s", exc)
        d, h_hat, x_hat = exc.best
        power_ok = False
    if d <= 0.0:
        raise ValueError("A*(yhat) vanishes; nothing to initialize from")
    root = np.sqrt(d)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ProjectionWarning)
        u0, ok_u = project_coherence(root * h_hat, 2 * root * mu, PartialFourier.taps(op), config,
                                     return_info=True)
        v0, ok_v = project_coherence(root * x_hat, 2 * root * nu, PartialFourier.signal(op), config,
                                     return_info=True)
    return InitResult(u0=u0, v0=v0, d=float(d), power_converged=power_ok,
                      projections_converged=bool(ok_u and ok_v))


# -- gradient descent ----------------------------------------------------------


def default_params(init: InitResult, mu: float, nu: float, config: SolverConfig,
                   noise_energy: float = 0.0) -> RegularizerParams:
    rho = config.rho if config.rho is not None else init.d**2 + noise_energy
    return RegularizerParams(rho=rho, d=init.d, mu=mu, nu=nu)


def descend(op: ModulatedConvOperator, yhat, init: InitResult, params: RegularizerParams,
            config: SolverConfig = SolverConfig(), truth=None):
    """Run ``u <- u - eta grad_h``, ``v <- v - eta grad_x`` from ``init``.

    Both gradients are evaluated at the previous iterate. Stops when the total
    gradient norm drops to ``grad_tol * d``, after ``max_iters`` steps, or when
    the objective exceeds ``divergence_factor`` times its initial value.

    Returns
    -------
    (Iterate, SolveTrace)
    """
    yhat = as_complex_vector(yhat, length=op.dims.Q, name="yhat")
    u = as_complex_vector(init.u0, length=op.dims.M, name="u0").copy()
    v = as_complex_vector(init.v0, length=op.dims.K, name="v0").copy()
    eta = config.step_size(params.d)
    trace = SolveTrace(eta=eta)
    h0 = x0 = None
    if truth is not None:
        h0, x0 = truth

    stop_grad = config.grad_tol * params.d
    initial = None
    for t in range(config.max_iters + 1):
        data, pen, gh, gx = evaluate(op, u, v, yhat, params)
        total = data + pen
        if initial is None:
            initial = total
        if t % config.record_every == 0 or t == config.max_iters:
            rel = relative_error(u, v, h0, x0) if h0 is not None else float("nan")
            trace.append(t, data, pen, rel, float(np.linalg.norm(u) * np.linalg.norm(v)))
        if not np.isfinite(total) or total > config.divergence_factor * max(initial, 1e-300):
            trace.status = DIVERGED
            break
        gnorm = np.sqrt(np.vdot(gh, gh).real + np.vdot(gx, gx).real)
        if gnorm <= stop_grad:
            trace.status = CONVERGED
            break
        if t == config.max_iters:
            trace.status = MAX_ITERS
            break
        u = u - eta * gh
        v = v - eta * gx
    if trace.iteration[-1] != t:
        rel = relative_error(u, v, h0, x0) if h0 is not None else float("nan")
        trace.append(t, data, pen, rel, float(np.linalg.norm(u) * np.linalg.norm(v)))
    return Iterate(u, v), trace


def solve(op: ModulatedConvOperator, yhat, mu: float, nu: float, config: SolverConfig = SolverConfig(),
          truth=None, noise_energy: float = 0.0, random_state=None):
    """Initialization followed by descent. Returns ``(Iterate, SolveTrace, InitResult)``."""
    init = initialize(op, yhat, mu, nu, config, random_state)
    params = default_params(init, mu, nu, config, noise_energy)
    it, trace = descend(op, yhat, init, params, config, truth)
    return it, trace, init
