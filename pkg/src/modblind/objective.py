"""Regularized least-squares objective and its Wirtinger gradients.

The loss is ``F(h, x) + G(h, x)`` with the data term
``F = ||A(h x^T) - yhat||^2`` and a penalty ``G`` that keeps the norms and
the Fourier peaks of both factors bounded::

    G = rho * [ G0(||h||^2 / 2d) + G0(||x||^2 / 2d)
                + sum_q G0(Q |(F_M h)_q|^2 / (8 d mu^2))
                + sum_q G0(Q |(F*_K x)_q|^2 / (8 d nu^2)) ],   G0(z) = max(z - 1, 0)^2

Gradients are taken with respect to the conjugated variable, so that for a
perturbation ``delta`` of ``h``, ``dF = 2 Re <grad_h, delta>``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._validation import as_complex_vector, check_positive
from .metrics import rank_one_distance
from .operator import ModulatedConvOperator


def g0(z):
    """Penalty profile ``max(z - 1, 0)^2``."""
    return np.maximum(np.asarray(z, dtype=float) - 1.0, 0.0) ** 2


def g0_prime(z):
    return 2.0 * np.maximum(np.asarray(z, dtype=float) - 1.0, 0.0)


@dataclass(frozen=True)
class RegularizerParams:
    """Weight and caps of the penalty term.

    Parameters
    ----------
    rho : float
        Penalty weight; should be at least ``d^2 + ||e||^2``.
    d : float
        Scale estimate of ``||h0|| ||x0||``.
    mu, nu : float
        Coherence caps (square roots of the channel and signal coherences).
    """

    rho: float
    d: float
    mu: float
    nu: float

    def __post_init__(self):
        for name in ("rho", "d", "mu", "nu"):
            object.__setattr__(self, name, check_positive(getattr(self, name), name))

    @classmethod
    def default(cls, d: float, mu: float, nu: float, noise_energy: float = 0.0):
        """Smallest admissible weight ``rho = d^2 + ||e||^2``."""
        return cls(rho=d * d + noise_energy, d=d, mu=mu, nu=nu)


@dataclass(frozen=True)
class Iterate:
    """Current estimate ``(u, v)`` of ``(h, x)``."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", as_complex_vector(self.u, name="u"))
        object.__setattr__(self, "v", as_complex_vector(self.v, name="v"))

    @property
    def d_t(self) -> float:
        return float(np.linalg.norm(self.u) * np.linalg.norm(self.v))


def _check_iterate(op: ModulatedConvOperator, it: Iterate):
    if it.u.shape[0] != op.dims.M or it.v.shape[0] != op.dims.K:
        raise ValueError(
            f"iterate shapes ({it.u.shape[0]}, {it.v.shape[0]}) do not match "
            f"(M, K) = ({op.dims.M}, {op.dims.K})"
        )


def residual(op: ModulatedConvOperator, it: Iterate, yhat) -> np.ndarray:
    _check_iterate(op, it)
    yhat = as_complex_vector(yhat, length=op.dims.Q, name="yhat")
    return op._taps(it.u) * op._mod(it.v) - yhat


def loss_measurement(op: ModulatedConvOperator, it: Iterate, yhat) -> float:
    r = residual(op, it, yhat)
    return float(np.vdot(r, r).real)


def _penalty_args(op, u, v, params):
    Q, d = op.dims.Q, params.d
    a = op._taps(u)
    s = np.fft.ifft(v, n=Q, norm="ortho")
    zh = np.vdot(u, u).real / (2 * d)
    zx = np.vdot(v, v).real / (2 * d)
    wa = Q * np.abs(a) ** 2 / (8 * d * params.mu**2)
    ws = Q * np.abs(s) ** 2 / (8 * d * params.nu**2)
    return a, s, zh, zx, wa, ws


def loss_regularizer(it: Iterate, params: RegularizerParams, op: ModulatedConvOperator) -> float:
    _check_iterate(op, it)
    _, _, zh, zx, wa, ws = _penalty_args(op, it.u, it.v, params)
    return float(params.rho * (g0(zh) + g0(zx) + g0(wa).sum() + g0(ws).sum()))


def grad_measurement(op: ModulatedConvOperator, it: Iterate, yhat):
    """Wirtinger gradients ``(dF/d conj(h), dF/d conj(x))`` at ``(u, v)``."""
    _check_iterate(op, it)
    yhat = as_complex_vector(yhat, length=op.dims.Q, name="yhat")
    a = op._taps(it.u)
    b = op._mod(it.v)
    r = a * b - yhat
    return op._taps_adj(r * np.conj(b)), op._mod_adj(r * np.conj(a))


def grad_regularizer(it: Iterate, params: RegularizerParams, op: ModulatedConvOperator):
    _check_iterate(op, it)
    return _grad_regularizer(op, it.u, it.v, params)


def _grad_regularizer(op, u, v, params):
    Q, d = op.dims.Q, params.d
    a, s, zh, zx, wa, ws = _penalty_args(op, u, v, params)
    c = params.rho / (2 * d)
    gh = g0_prime(zh) * u
    gx = g0_prime(zx) * v
    da = g0_prime(wa)
    if np.any(da):
        gh = gh + (Q / (4 * params.mu**2)) * op._taps_adj(da * a)
    ds = g0_prime(ws)
    if np.any(ds):
        gx = gx + (Q / (4 * params.nu**2)) * np.fft.fft(ds * s, norm="ortho")[: op.dims.K]
    return c * gh, c * gx


def grad_total(op: ModulatedConvOperator, it: Iterate, yhat, params: RegularizerParams):
    gh, gx = grad_measurement(op, it, yhat)
    rh, rx = _grad_regularizer(op, it.u, it.v, params)
    return gh + rh, gx + rx


def loss_total(op: ModulatedConvOperator, it: Iterate, yhat, params: RegularizerParams) -> float:
    return loss_measurement(op, it, yhat) + loss_regularizer(it, params, op)


def evaluate(op: ModulatedConvOperator, u, v, yhat, params: RegularizerParams):
    """One-pass ``(data loss, penalty, grad_h, grad_x)`` without input checks.

    This is the solver's inner-loop kernel; inputs are trusted arrays.
    """
    Q, d = op.dims.Q, params.d
    a = op._taps(u)
    b = op._mod(v)
    r = a * b - yhat
    data = float(np.vdot(r, r).real)
    gh = op._taps_adj(r * np.conj(b))
    gx = op._mod_adj(r * np.conj(a))

    s = np.fft.ifft(v, n=Q, norm="ortho")
    zh = np.vdot(u, u).real / (2 * d)
    zx = np.vdot(v, v).real / (2 * d)
    wa = Q * (a.real**2 + a.imag**2) / (8 * d * params.mu**2)
    ws = Q * (s.real**2 + s.imag**2) / (8 * d * params.nu**2)
    penalty = params.rho * (g0(zh) + g0(zx) + g0(wa).sum() + g0(ws).sum())
    c = params.rho / (2 * d)
    if zh > 1.0:
        gh = gh + c * g0_prime(zh) * u
    if zx > 1.0:
        gx = gx + c * g0_prime(zx) * v
    da = g0_prime(wa)
    if np.any(da):
        gh = gh + c * (Q / (4 * params.mu**2)) * op._taps_adj(da * a)
    ds = g0_prime(ws)
    if np.any(ds):
        gx = gx + c * (Q / (4 * params.nu**2)) * np.fft.fft(ds * s, norm="ortho")[: op.dims.K]
    return data, float(penalty), gh, gx


# -- neighborhood sets ---------------------------------------------------------


@dataclass(frozen=True)
class NeighborhoodSpec:
    """Radii of the sets around the truth in which descent is analyzed."""

    d0: float
    mu: float
    nu: float
    eps: float = 1.0 / 15.0

    def __post_init__(self):
        for name in ("d0", "mu", "nu", "eps"):
            object.__setattr__(self, name, check_positive(getattr(self, name), name))
        if self.eps > 1.0 / 15.0 + 1e-15:
            raise ValueError(f"eps must be at most 1/15, got {self.eps}")


class Membership(NamedTuple):
    in_Nd0: bool
    in_Nmu: bool
    in_Nnu: bool
    in_Neps: bool

    @property
    def all(self) -> bool:
        return self.in_Nd0 and self.in_Nmu and self.in_Nnu and self.in_Neps


def in_neighborhoods(
    it: Iterate,
    spec: NeighborhoodSpec,
    op: ModulatedConvOperator,
    h0=None,
    x0=None,
    scale: float = 1.0,
    eps_scale: float = 1.0,
) -> Membership:
    """Membership of ``(u, v)`` in the magnitude, coherence and distance sets.

    ``scale`` shrinks the first three sets (``1/sqrt(3)`` for the initial-guess
    condition); ``eps_scale`` shrinks the distance set. ``in_Neps`` is False
    when no truth is supplied.
    """
    _check_iterate(op, it)
    Q = op.dims.Q
    root = np.sqrt(spec.d0)
    nd0 = bool(
        np.linalg.norm(it.u) <= scale * 2 * root and np.linalg.norm(it.v) <= scale * 2 * root
    )
    nmu = bool(np.sqrt(Q) * np.max(np.abs(op._taps(it.u))) <= scale * 4 * spec.mu * root)
    s = np.fft.ifft(it.v, n=Q, norm="ortho")
    nnu = bool(np.sqrt(Q) * np.max(np.abs(s)) <= scale * 4 * spec.nu * root)
    neps = False
    if h0 is not None and x0 is not None:
        neps = bool(rank_one_distance(it.u, it.v, h0, x0) <= eps_scale * spec.eps * spec.d0)
    return Membership(nd0, nmu, nnu, neps)
