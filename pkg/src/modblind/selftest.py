"""Quick invariant checks run by ``modblind selftest``.

Each check builds small random instances and compares the FFT code paths
against dense matrices or finite differences.
"""
from __future__ import annotations

import numpy as np

from .objective import Iterate, RegularizerParams, grad_total, loss_total
from .operator import ModulatedConvOperator
from .spectral import ProblemDims, dft, dft_matrix, idft


def _cvec(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def _random_dims(rng, Q):
    return ProblemDims(Q, int(rng.integers(1, Q + 1)), int(rng.integers(1, Q + 1)))


def check_unitary_dft(rng) -> float:
    worst = 0.0
    for Q in (5, 8, 12):
        F = dft_matrix(Q)
        v = _cvec(rng, Q)
        worst = max(worst, np.linalg.norm(dft(v) - F @ v) / np.linalg.norm(v),
                    np.linalg.norm(idft(dft(v)) - v) / np.linalg.norm(v))
    return worst


def check_model_identity(rng, n=20) -> float:
    worst = 0.0
    for _ in range(n):
        dims = _random_dims(rng, int(rng.choice([8, 16, 32])))
        op = ModulatedConvOperator.random(dims, rng)
        x, h = _cvec(rng, dims.K), _cvec(rng, dims.M)
        yf = op.forward_fourier(x, h)
        worst = max(worst, np.linalg.norm(dft(op.forward_time(x, h)) - yf) / np.linalg.norm(yf))
    return worst


def check_adjoint(rng, n=20) -> float:
    worst = 0.0
    for _ in range(n):
        dims = _random_dims(rng, int(rng.choice([8, 16])))
        op = ModulatedConvOperator.random(dims, rng)
        X = _cvec(rng, dims.M * dims.K).reshape(dims.M, dims.K)
        z = _cvec(rng, dims.Q)
        dense = op.dense_adjoint(z)
        lhs = np.vdot(z, op.apply_lifted(X))
        rhs = np.vdot(dense, X)
        scale = np.linalg.norm(X) * np.linalg.norm(z)
        w, p = _cvec(rng, dims.K), _cvec(rng, dims.M)
        worst = max(worst, abs(lhs - rhs) / scale,
                    np.linalg.norm(op.adjoint_matvec(z, w) - dense @ w) / scale / np.linalg.norm(w),
                    np.linalg.norm(op.adjoint_rmatvec(z, p) - dense.conj().T @ p)
                    / scale / np.linalg.norm(p))
    return worst


def check_gradient(rng, n=10, step=1e-6) -> float:
    """Worst relative mismatch between central differences and ``2 Re<grad, delta>``."""
    worst = 0.0
    for _ in range(n):
        dims = ProblemDims(16, 5, 3)
        op = ModulatedConvOperator.random(dims, rng)
        h0, x0 = _cvec(rng, 3), _cvec(rng, 5)
        yhat = op.forward_fourier(x0, h0) + 0.1 * _cvec(rng, 16)
        params = RegularizerParams(rho=1.0, d=0.5, mu=1.0, nu=1.0)
        it = Iterate(_cvec(rng, 3), _cvec(rng, 5))
        gh, gx = grad_total(op, it, yhat, params)
        dh, dx = _cvec(rng, 3), _cvec(rng, 5)
        plus = loss_total(op, Iterate(it.u + step * dh, it.v + step * dx), yhat, params)
        minus = loss_total(op, Iterate(it.u - step * dh, it.v - step * dx), yhat, params)
        fd = (plus - minus) / (2 * step)
        analytic = 2 * (np.vdot(gh, dh).real + np.vdot(gx, dx).real)
        worst = max(worst, abs(fd - analytic) / max(abs(analytic), 1e-12))
    return worst


CHECKS = [
    ("unitary-dft", check_unitary_dft, 1e-12),
    ("model-identity", check_model_identity, 1e-10),
    ("adjoint-identity", check_adjoint, 1e-10),
    ("wirtinger-gradient", check_gradient, 1e-4),
]


def run(seed: int = 0, out=print) -> bool:
    rng = np.random.default_rng(seed)
    ok = True
    for name, fn, tol in CHECKS:
        value = fn(rng)
        passed = bool(value <= tol)
        ok &= passed
        out(f"{'PASS' if passed else 'FAIL'} {name}: worst {value:.2e} (tol {tol:.0e})")
    return ok
