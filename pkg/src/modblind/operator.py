"""Modulated circular-convolution measurements and their lifted linear map.

The unknown pair ``(h, x)`` enters the Fourier-domain measurements through the
rank-one matrix ``h x^T``::

    yhat[q] = sum_{m,k} F_M[q, m] * G[q, k] * X[m, k],    G = sqrt(Q) F diag(r) F*_K

so for ``X = h x^T`` this is ``sqrt(Q) * (F (r * s)) * (F_M h)`` with
``s = F*_K x``. Every application costs a handful of length-``Q`` FFTs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import as_complex_matrix, as_complex_vector, check_positive
from .spectral import (
    ProblemDims,
    analyze_taps,
    analyze_taps_adjoint,
    circular_convolve,
    dft_matrix,
    rademacher,
    synthesize,
)


@dataclass(frozen=True, eq=False)
class ModulatedConvOperator:
    """The lifted map ``A: C^{M x K} -> C^Q`` for a fixed sign sequence.

    Parameters
    ----------
    dims : ProblemDims
    signs : array_like of shape (Q,)
        Known modulation sequence with entries in {+1, -1}.
    """

    dims: ProblemDims
    signs: np.ndarray = field(repr=False)

    def __post_init__(self):
        signs = np.asarray(self.signs, dtype=float)
        if signs.shape != (self.dims.Q,):
            raise ValueError(f"signs must have shape ({self.dims.Q},), got {signs.shape}")
        if not np.all(np.abs(signs) == 1.0):
            raise ValueError("signs must be +1 or -1")
        signs = signs.copy()
        signs.setflags(write=False)
        object.__setattr__(self, "signs", signs)

    @classmethod
    def random(cls, dims: ProblemDims, seed=None) -> "ModulatedConvOperator":
        return cls(dims, rademacher(dims.Q, seed))

    # -- the two factors -------------------------------------------------
    # Underscored variants skip validation; the solver loop calls them directly.
    def _taps(self, h: np.ndarray) -> np.ndarray:
        return np.fft.fft(h, n=self.dims.Q, norm="ortho")

    def _taps_adj(self, w: np.ndarray) -> np.ndarray:
        return np.fft.ifft(w, norm="ortho")[: self.dims.M]

    def _mod(self, x: np.ndarray) -> np.ndarray:
        return np.fft.fft(self.signs * np.fft.ifft(x, n=self.dims.Q, norm="ortho"))

    def _mod_adj(self, w: np.ndarray) -> np.ndarray:
        return np.sqrt(self.dims.Q) * np.fft.fft(self.signs * np.fft.ifft(w))[: self.dims.K]

    def taps_spectrum(self, h) -> np.ndarray:
        """``F_M h``."""
        return analyze_taps(h, self.dims)

    def taps_spectrum_adjoint(self, w) -> np.ndarray:
        """``F_M^H w``."""
        return analyze_taps_adjoint(w, self.dims)

    def modulated_spectrum(self, x) -> np.ndarray:
        """``G x = sqrt(Q) F (r * F*_K x)``."""
        return self._mod(as_complex_vector(x, length=self.dims.K, name="x"))

    def modulated_spectrum_adjoint(self, w) -> np.ndarray:
        """``G^H w = sqrt(Q) [F (r * F^H w)]_{:K}``."""
        return self._mod_adj(as_complex_vector(w, length=self.dims.Q, name="w"))

    # -- forward model ---------------------------------------------------
    def forward_time(self, x, h) -> np.ndarray:
        """Noise-free time-domain observation ``y = (r * s) (*) h``."""
        h = as_complex_vector(h, length=self.dims.M, name="h")
        s = synthesize(x, self.dims)
        return circular_convolve(self.signs * s, h)

    def forward_fourier(self, x, h) -> np.ndarray:
        """Noise-free Fourier-domain measurements ``A(h x^T)``."""
        x = as_complex_vector(x, length=self.dims.K, name="x")
        h = as_complex_vector(h, length=self.dims.M, name="h")
        return self._mod(x) * self._taps(h)

    def apply_lifted(self, X) -> np.ndarray:
        """``A(X)`` for a general ``M x K`` matrix (one FFT pair per column)."""
        X = as_complex_matrix(X, shape=(self.dims.M, self.dims.K))
        out = np.zeros(self.dims.Q, dtype=complex)
        eye = np.eye(self.dims.K)
        for k in range(self.dims.K):
            out += self._taps(X[:, k]) * self._mod(eye[k])
        return out

    # -- adjoint ---------------------------------------------------------
    def adjoint_matvec(self, z, w) -> np.ndarray:
        """``A*(z) w`` for ``w`` in ``C^K``; result in ``C^M``."""
        z = as_complex_vector(z, length=self.dims.Q, name="z")
        w = as_complex_vector(w, length=self.dims.K, name="w")
        return self._taps_adj(z * np.conj(self._mod(np.conj(w))))

    def adjoint_rmatvec(self, z, p) -> np.ndarray:
        """``A*(z)^H p`` for ``p`` in ``C^M``; result in ``C^K``."""
        z = as_complex_vector(z, length=self.dims.Q, name="z")
        p = as_complex_vector(p, length=self.dims.M, name="p")
        return np.conj(self._mod_adj(z * np.conj(self._taps(p))))

    def adjoint(self, z) -> "LiftedAdjoint":
        """Implicit ``M x K`` matrix ``A*(z)``."""
        return LiftedAdjoint(self, as_complex_vector(z, length=self.dims.Q, name="z"))

    # -- dense oracles (small problems / tests) --------------------------
    def dense_factors(self) -> tuple[np.ndarray, np.ndarray]:
        """Dense ``(F_M, G)`` of shapes ``(Q, M)`` and ``(Q, K)``."""
        Q, K, M = self.dims.Q, self.dims.K, self.dims.M
        F = dft_matrix(Q)
        F_M = F[:, :M]
        G = np.sqrt(Q) * F @ (self.signs[:, None] * F.conj().T[:, :K])
        return F_M, G

    def dense_apply(self, X) -> np.ndarray:
        X = as_complex_matrix(X, shape=(self.dims.M, self.dims.K))
        F_M, G = self.dense_factors()
        return np.einsum("qm,qk,mk->q", F_M, G, X)

    def dense_adjoint(self, z) -> np.ndarray:
        z = as_complex_vector(z, length=self.dims.Q, name="z")
        F_M, G = self.dense_factors()
        return np.einsum("qm,qk,q->mk", F_M.conj(), G.conj(), z)


@dataclass(frozen=True, eq=False)
class LiftedAdjoint:
    """``A*(z)`` exposed only through its two matrix-vector products."""

    op: ModulatedConvOperator
    z: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.op.dims.M, self.op.dims.K)

    def matvec(self, w) -> np.ndarray:
        return self.op.adjoint_matvec(self.z, w)

    def rmatvec(self, p) -> np.ndarray:
        return self.op.adjoint_rmatvec(self.z, p)

    def to_dense(self) -> np.ndarray:
        return self.op.dense_adjoint(self.z)


@dataclass(frozen=True)
class NoiseSpec:
    """Complex Gaussian measurement noise with ``E||e||^2 = sigma^2 d0^2``."""

    sigma: float
    d0: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "sigma", check_positive(self.sigma, "sigma", allow_zero=True))
        object.__setattr__(self, "d0", check_positive(self.d0, "d0"))


def add_noise(yhat, spec: NoiseSpec, seed=None) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(yhat + e, e)`` with ``e`` drawn in the Fourier domain.

    Real and imaginary parts are independent with variance ``sigma^2 d0^2 / (2Q)``.
    """
    yhat = as_complex_vector(yhat, name="yhat")
    Q = yhat.shape[0]
    if spec.sigma == 0.0:
        e = np.zeros(Q, dtype=complex)
    else:
        rng = np.random.default_rng(seed)
        scale = spec.sigma * spec.d0 / np.sqrt(2 * Q)
        e = scale * (rng.standard_normal(Q) + 1j * rng.standard_normal(Q))
    return yhat + e, e


def snr_db(signal_energy, e) -> float:
    """``10 log10(||h0 x0^T||_F^2 / ||e||^2)``; ``+inf`` for zero noise.

    ``signal_energy`` is either the scalar ``||h0 x0^T||_F^2`` or a pair
    ``(h0, x0)``.
    """
    if isinstance(signal_energy, tuple):
        h0, x0 = signal_energy
        signal_energy = np.vdot(h0, h0).real * np.vdot(x0, x0).real
    e = as_complex_vector(e, name="e")
    noise = np.vdot(e, e).real
    if noise == 0.0:
        return float("inf")
    return float(10.0 * np.log10(signal_energy / noise))


def sigma_for_snr(snr: float) -> float:
    """Noise scale giving expected SNR ``snr`` dB (``E||e||^2 = sigma^2 d0^2``)."""
    return float(10.0 ** (-snr / 20.0))
