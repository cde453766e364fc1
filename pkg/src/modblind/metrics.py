"""Scale-invariant error measures for rank-one estimates."""
from __future__ import annotations

import numpy as np

from ._validation import as_complex_vector


def rank_one_distance(u, v, h0, x0) -> float:
    """Frobenius norm ``||u v^T - h0 x0^T||_F`` without forming either matrix.

    Splitting ``u = c h0 + u_perp`` gives two orthogonal pieces,
    ``u_perp v^T`` and ``h0 (c v - x0)^T``, so no catastrophic cancellation
    occurs near the truth.
    """
    u = as_complex_vector(u, name="u")
    v = as_complex_vector(v, name="v")
    h0 = as_complex_vector(h0, length=u.shape[0], name="h0")
    x0 = as_complex_vector(x0, length=v.shape[0], name="x0")
    hh = np.vdot(h0, h0).real
    if hh == 0.0:
        raise ValueError("h0 must be nonzero")
    c = np.vdot(h0, u) / hh
    u_perp = u - c * h0
    sq = np.vdot(u_perp, u_perp).real * np.vdot(v, v).real
    w = c * v - x0
    sq += hh * np.vdot(w, w).real
    return float(np.sqrt(sq))


def relative_error(u, v, h0, x0) -> float:
    """``||u v^T - h0 x0^T||_F / ||h0 x0^T||_F``."""
    h0 = as_complex_vector(h0, name="h0")
    x0 = as_complex_vector(x0, name="x0")
    scale = np.linalg.norm(h0) * np.linalg.norm(x0)
    if scale == 0.0:
        raise ValueError("ground truth must be nonzero")
    return rank_one_distance(u, v, h0, x0) / scale


def sin_angle(a, b) -> float:
    """Sine of the angle between the complex lines spanned by ``a`` and ``b``."""
    a = as_complex_vector(a, name="a")
    b = as_complex_vector(b, length=a.shape[0], name="b")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("sin_angle needs nonzero vectors")
    a_perp = a - (np.vdot(b, a) / nb**2) * b
    return float(min(1.0, np.linalg.norm(a_perp) / na))
