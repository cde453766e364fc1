"""scikit-learn style front end for modulated blind deconvolution."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_observations
from .operator import ModulatedConvOperator
from .solver import (
    PowerIterationError,
    SolverConfig,
    default_params,
    descend,
    initialize,
    leading_singular_triple,
)
from .spectral import ProblemDims, channel_coherence, signal_coherence, synthesize


class ModulatedBlindDeconvolution(BaseEstimator):
    """Recover a bandlimited signal and an unknown short channel from one observation.

    The observation is ``y = (r * s) (*) h`` (or its unitary DFT), with known
    random signs ``r``, signal samples ``s = F*_K x`` and an ``M``-tap channel
    ``h``. Fitting runs spectral initialization followed by regularized
    Wirtinger gradient descent.

    Parameters
    ----------
    n_coefs : int
        Number ``K`` of Fourier coefficients of the signal.
    n_taps : int
        Number ``M`` of channel taps.
    signs : array-like of shape (Q,)
        The known modulation sequence.
    domain : {"time", "fourier"}, default="time"
        Whether observations are time samples ``y`` or their unitary DFT.
    mu, nu : float or None
        Assumed channel / signal coherences (square-rooted). ``None`` uses the
        coherence of the spectral estimate, which leaves the initial
        projections inactive.
    step_size : float or None
        Fixed descent step. ``None`` means ``step_scale / d``.
    step_scale : float, default=0.2
    max_iter : int, default=5000
    tol : float, default=1e-9
        Stop when the gradient norm is below ``tol * d``.
    projection : {"dykstra", "clip"}
    noise_energy : float, default=0.0
        Known ``||e||^2``; enters the penalty weight ``d^2 + ||e||^2``.
    random_state : int, SeedSequence or None
        Seeds the power-iteration start vector.

    Attributes
    ----------
    channel_ : ndarray of shape (M,)
    coef_ : ndarray of shape (K,)
    signal_ : ndarray of shape (Q,)
        ``F*_K coef_``, the unmodulated signal samples.
    scale_ : float
        Leading singular value of the adjoint applied to the data.
    n_iter_ : int
    status_ : str
    trace_ : SolveTrace
    operator_ : ModulatedConvOperator

    Notes
    -----
    Only the product ``channel_ coef_^T`` is identifiable; the split of scale
    (and phase) between the two factors is arbitrary.
    """

    def __init__(self, n_coefs, n_taps, signs=None, domain="time", mu=None, nu=None,
                 step_size=None, step_scale=0.2, max_iter=5000, tol=1e-9, projection="dykstra",
                 noise_energy=0.0, random_state=None):
        self.n_coefs = n_coefs
        self.n_taps = n_taps
        self.signs = signs
        self.domain = domain
        self.mu = mu
        self.nu = nu
        self.step_size = step_size
        self.step_scale = step_scale
        self.max_iter = max_iter
        self.tol = tol
        self.projection = projection
        self.noise_energy = noise_energy
        self.random_state = random_state

    def _solver_config(self) -> SolverConfig:
        return SolverConfig(eta=self.step_size, step_scale=self.step_scale, max_iters=self.max_iter,
                            grad_tol=self.tol, projection=self.projection)

    def _to_fourier(self, Y: np.ndarray) -> np.ndarray:
        if self.domain == "time":
            return np.fft.fft(Y, axis=-1, norm="ortho")
        if self.domain == "fourier":
            return Y
        raise ValueError(f"domain must be 'time' or 'fourier', got {self.domain!r}")

    def _from_fourier(self, Y: np.ndarray) -> np.ndarray:
        return np.fft.ifft(Y, axis=-1, norm="ortho") if self.domain == "time" else Y

    def fit(self, X, y=None):
        """Estimate channel and signal from a single observation ``X`` of shape (Q,) or (1, Q)."""
        if self.signs is None:
            raise ValueError("signs must be provided")
        signs = np.asarray(self.signs, dtype=float)
        Y = check_observations(X, length=signs.shape[0])
        if Y.shape[0] != 1:
            raise ValueError(f"fit expects one observation, got {Y.shape[0]}")
        dims = ProblemDims(signs.shape[0], self.n_coefs, self.n_taps)
        op = ModulatedConvOperator(dims, signs)
        yhat = self._to_fourier(Y[0])
        config = self._solver_config()
        rng = np.random.default_rng(self.random_state)

        mu, nu = self.mu, self.nu
        if mu is None or nu is None:
            try:
                _, h_hat, x_hat = leading_singular_triple(op, yhat, config, rng)
            except PowerIterationError as exc:
                _, h_hat, x_hat = exc.best
            rng = np.random.default_rng(self.random_state)
            if mu is None:
                mu = np.sqrt(channel_coherence(h_hat, dims))
            if nu is None:
                nu = np.sqrt(signal_coherence(x_hat, dims))

        init = initialize(op, yhat, mu, nu, config, rng)
        params = default_params(init, mu, nu, config, self.noise_energy)
        it, trace = descend(op, yhat, init, params, config)

        self.operator_ = op
        self.init_ = init
        self.scale_ = init.d
        self.channel_ = it.u
        self.coef_ = it.v
        self.signal_ = synthesize(it.v, dims)
        self.n_iter_ = trace.n_iter
        self.status_ = trace.status
        self.trace_ = trace
        self.mu_, self.nu_ = float(mu), float(nu)
        return self

    def _design(self) -> np.ndarray:
        """Dense ``Q x K`` map from coefficients to observations for the fitted channel."""
        op = self.operator_
        eye = np.eye(op.dims.K)
        G = np.stack([op._mod(eye[k]) for k in range(op.dims.K)], axis=1)
        return op._taps(self.channel_)[:, None] * G

    def transform(self, X):
        """Signal coefficients of new observations, assuming the fitted channel.

        Solves the linear least-squares problem for each row; returns shape (n, K).
        """
        check_is_fitted(self, "channel_")
        Y = self._to_fourier(check_observations(X, length=self.operator_.dims.Q))
        coefs, *_ = np.linalg.lstsq(self._design(), Y.T, rcond=None)
        return coefs.T

    def fit_transform(self, X, y=None):
        return self.fit(X).coef_[np.newaxis, :]

    def inverse_transform(self, coefs):
        """Observations generated by ``coefs`` through the fitted channel."""
        check_is_fitted(self, "channel_")
        C = np.atleast_2d(np.asarray(coefs, dtype=complex))
        if C.shape[1] != self.operator_.dims.K:
            raise ValueError(f"expected {self.operator_.dims.K} coefficients, got {C.shape[1]}")
        return self._from_fourier((self._design() @ C.T).T)

    def score(self, X, y=None):
        """``1 - ||X - model||^2 / ||X||^2`` of the fitted rank-one model on ``X``."""
        check_is_fitted(self, "channel_")
        Y = check_observations(X, length=self.operator_.dims.Q)
        model = self._from_fourier(self.operator_.forward_fourier(self.coef_, self.channel_))
        resid = Y - model[np.newaxis, :]
        return float(1.0 - np.vdot(resid, resid).real / np.vdot(Y, Y).real)
