"""Unitary DFTs, partial Fourier maps, circular convolution and coherences.

All transforms use the unitary convention ``F[q, k] = exp(-2j*pi*q*k/Q) / sqrt(Q)``
with 0-based indices. ``F_J`` is the first ``J`` columns of ``F`` and
``F*_J`` the first ``J`` columns of ``F^H``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import as_complex_vector


@dataclass(frozen=True)
class ProblemDims:
    """Integer geometry of one deconvolution instance.

    Parameters
    ----------
    Q : int
        Samples per period (also the modulation rate).
    K : int
        Number of Fourier coefficients of the signal.
    M : int
        Number of channel taps.
    """

    Q: int
    K: int
    M: int

    def __post_init__(self):
        for name in ("Q", "K", "M"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.K > self.Q:
            raise ValueError(f"K={self.K} exceeds Q={self.Q}")
        if self.M > self.Q:
            raise ValueError(f"M={self.M} exceeds Q={self.Q}")

    @classmethod
    def from_bandlimit(cls, Q: int, B: int, M: int) -> "ProblemDims":
        if B < 0:
            raise ValueError("bandlimit must be nonnegative")
        return cls(Q=Q, K=2 * B + 1, M=M)

    @property
    def B(self) -> int:
        """Bandlimit implied by ``K = 2B + 1`` (floor for even ``K``)."""
        return (self.K - 1) // 2

    @property
    def oversampling(self) -> float:
        return self.Q / (self.K + self.M)


@dataclass(frozen=True)
class CoherencePair:
    mu_sq: float
    nu_sq: float

    @property
    def mu(self) -> float:
        return float(np.sqrt(self.mu_sq))

    @property
    def nu(self) -> float:
        return float(np.sqrt(self.nu_sq))


def dft(v) -> np.ndarray:
    """Unitary DFT ``F v``."""
    v = as_complex_vector(v, name="v")
    return np.fft.fft(v, norm="ortho")


def idft(v) -> np.ndarray:
    """Unitary inverse DFT ``F^H v``."""
    v = as_complex_vector(v, name="v")
    return np.fft.ifft(v, norm="ortho")


def _pad(v: np.ndarray, Q: int) -> np.ndarray:
    out = np.zeros(Q, dtype=complex)
    out[: v.shape[0]] = v
    return out


def synthesize(x, dims: ProblemDims) -> np.ndarray:
    """Time samples ``F*_K x`` of the bandlimited signal with coefficients ``x``."""
    x = as_complex_vector(x, length=dims.K, name="x")
    return np.fft.ifft(_pad(x, dims.Q), norm="ortho")


def synthesize_adjoint(s, dims: ProblemDims) -> np.ndarray:
    """``(F*_K)^H s``: the first ``K`` unitary DFT coefficients of ``s``."""
    s = as_complex_vector(s, length=dims.Q, name="s")
    return np.fft.fft(s, norm="ortho")[: dims.K]


def analyze_taps(h, dims: ProblemDims) -> np.ndarray:
    """Channel spectrum ``F_M h`` (unitary DFT of ``h`` zero-padded to ``Q``)."""
    h = as_complex_vector(h, length=dims.M, name="h")
    return np.fft.fft(_pad(h, dims.Q), norm="ortho")


def analyze_taps_adjoint(w, dims: ProblemDims) -> np.ndarray:
    """``F_M^H w``: the first ``M`` samples of the unitary inverse DFT."""
    w = as_complex_vector(w, length=dims.Q, name="w")
    return np.fft.ifft(w, norm="ortho")[: dims.M]


def circular_convolve(a, b) -> np.ndarray:
    """Q-point circular convolution of ``a`` with ``b`` zero-padded to ``len(a)``."""
    a = as_complex_vector(a, name="a")
    b = as_complex_vector(b, name="b")
    Q = a.shape[0]
    if b.shape[0] > Q:
        raise ValueError(f"kernel length {b.shape[0]} exceeds signal length {Q}")
    return np.fft.ifft(np.fft.fft(a) * np.fft.fft(_pad(b, Q)))


def rademacher(Q: int, seed=None) -> np.ndarray:
    """I.i.d. random signs of length ``Q`` drawn from a seeded PCG64 stream.

    ``seed`` may be an int, a :class:`numpy.random.SeedSequence` or a
    :class:`numpy.random.Generator`.
    """
    if isinstance(Q, bool) or int(Q) != Q or Q < 1:
        raise ValueError(f"Q must be a positive integer, got {Q!r}")
    rng = np.random.default_rng(seed)
    return np.where(rng.integers(0, 2, size=int(Q)) == 1, 1.0, -1.0)


def channel_coherence(h, dims: ProblemDims) -> float:
    """``Q ||F_M h||_inf^2 / ||h||_2^2``."""
    h = as_complex_vector(h, length=dims.M, name="h")
    energy = np.vdot(h, h).real
    if energy == 0.0:
        raise ValueError("coherence of the zero vector is undefined")
    return float(dims.Q * np.max(np.abs(analyze_taps(h, dims))) ** 2 / energy)


def signal_coherence(x, dims: ProblemDims) -> float:
    """``Q ||F*_K x||_inf^2 / ||x||_2^2``."""
    x = as_complex_vector(x, length=dims.K, name="x")
    energy = np.vdot(x, x).real
    if energy == 0.0:
        raise ValueError("coherence of the zero vector is undefined")
    return float(dims.Q * np.max(np.abs(synthesize(x, dims))) ** 2 / energy)


def coherences(h, x, dims: ProblemDims) -> CoherencePair:
    return CoherencePair(mu_sq=channel_coherence(h, dims), nu_sq=signal_coherence(x, dims))


def dft_matrix(Q: int) -> np.ndarray:
    """Dense unitary DFT matrix. Testing and small-problem use only."""
    idx = np.arange(Q)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / Q) / np.sqrt(Q)
