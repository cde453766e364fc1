import numpy as np
import pytest

from modblind.metrics import rank_one_distance
from modblind.objective import (
    Iterate,
    NeighborhoodSpec,
    RegularizerParams,
    evaluate,
    g0,
    g0_prime,
    grad_measurement,
    grad_regularizer,
    grad_total,
    in_neighborhoods,
    loss_measurement,
    loss_regularizer,
    loss_total,
)
from modblind.operator import ModulatedConvOperator
from modblind.spectral import ProblemDims, coherences

from conftest import cvec


def make_problem(rng, Q=16, K=5, M=3, noise=0.0):
    dims = ProblemDims(Q, K, M)
    op = ModulatedConvOperator.random(dims, rng)
    h0, x0 = cvec(rng, M), cvec(rng, K)
    h0 /= np.linalg.norm(h0)
    x0 /= np.linalg.norm(x0)
    yhat = op.forward_fourier(x0, h0) + noise * cvec(rng, Q)
    return op, h0, x0, yhat


def coordinate_fd(f, it, idx, step=1e-6):
    """Central difference of f along a single real or imaginary coordinate of (u, v)."""
    M = it.u.shape[0]
    which, real = idx
    du = np.zeros_like(it.u)
    dv = np.zeros_like(it.v)
    unit = 1.0 if real else 1j
    if which < M:
        du[which] = unit
    else:
        dv[which - M] = unit
    plus = f(Iterate(it.u + step * du, it.v + step * dv))
    minus = f(Iterate(it.u - step * du, it.v - step * dv))
    return (plus - minus) / (2 * step), du, dv


def test_g0_values():
    assert g0(0.5) == 0.0
    assert g0(1.0) == 0.0
    assert g0(2.0) == 1.0
    assert g0_prime(2.0) == 2.0
    assert g0_prime(0.3) == 0.0


def test_loss_measurement_examples(rng):
    op, h0, x0, yhat = make_problem(rng)
    assert loss_measurement(op, Iterate(h0, x0), yhat) == pytest.approx(0.0, abs=1e-28)
    assert loss_measurement(op, Iterate(np.zeros(3), np.zeros(5)), yhat) == pytest.approx(
        np.vdot(yhat, yhat).real)
    u, v = cvec(rng, 3), cvec(rng, 5)
    dense = np.linalg.norm(op.dense_apply(np.outer(u, v)) - yhat) ** 2
    assert loss_measurement(op, Iterate(u, v), yhat) == pytest.approx(dense, rel=1e-10)


def test_regularizer_zero_inside(rng):
    op, h0, x0, _ = make_problem(rng)
    c = coherences(h0, x0, op.dims)
    params = RegularizerParams(rho=1.0, d=1.0, mu=c.mu, nu=c.nu)
    assert loss_regularizer(Iterate(h0, x0), params, op) == 0.0
    gh, gx = grad_regularizer(Iterate(h0, x0), params, op)
    assert not np.any(gh) and not np.any(gx)


def test_regularizer_single_active_norm_term():
    dims = ProblemDims(16, 5, 3)
    op = ModulatedConvOperator.random(dims, 0)
    d, rho = 0.7, 2.5
    u = 2 * np.sqrt(d) * np.eye(3)[0]  # ||u||^2 = 4d, flat spectrum
    v = 0.01 * np.eye(5)[0]
    params = RegularizerParams(rho=rho, d=d, mu=1.0, nu=1.0)
    it = Iterate(u, v)
    assert loss_regularizer(it, params, op) == pytest.approx(rho * 1.0, rel=1e-12)
    gh, gx = grad_regularizer(it, params, op)
    np.testing.assert_allclose(gh, (rho / d) * u, rtol=1e-12)
    assert not np.any(gx)


def test_regularizer_support(rng):
    op, _, _, _ = make_problem(rng)
    params = RegularizerParams(rho=1.0, d=1.0, mu=1.2, nu=1.2)
    Q = op.dims.Q
    for _ in range(200):
        u, v = cvec(rng, 3) * rng.uniform(0.1, 2), cvec(rng, 5) * rng.uniform(0.1, 2)
        args = [np.vdot(u, u).real / 2, np.vdot(v, v).real / 2,
                np.max(Q * np.abs(op.taps_spectrum(u)) ** 2 / (8 * 1.44)),
                np.max(Q * np.abs(np.fft.ifft(v, n=Q, norm="ortho")) ** 2 / (8 * 1.44))]
        value = loss_regularizer(Iterate(u, v), params, op)
        if max(args) <= 1:
            assert value == 0.0
        else:
            assert value > 0.0


def test_grad_measurement_examples(rng):
    op, h0, x0, yhat = make_problem(rng)
    gh, gx = grad_measurement(op, Iterate(h0, x0), yhat)
    assert np.linalg.norm(gh) < 1e-14 and np.linalg.norm(gx) < 1e-14
    gh, _ = grad_measurement(op, Iterate(cvec(rng, 3), np.zeros(5)), yhat)
    np.testing.assert_array_equal(gh, np.zeros(3))


def test_grad_measurement_finite_difference(rng):
    op, _, _, yhat = make_problem(rng, noise=0.3)
    it = Iterate(cvec(rng, 3), cvec(rng, 5))
    gh, gx = grad_measurement(op, it, yhat)
    f = lambda z: loss_measurement(op, z, yhat)  # noqa: E731
    fd, an = [], []
    for which in range(8):
        for real in (True, False):
            val, du, dv = coordinate_fd(f, it, (which, real))
            fd.append(val)
            an.append(2 * (np.vdot(gh, du).real + np.vdot(gx, dv).real))
    fd, an = np.array(fd), np.array(an)
    assert np.linalg.norm(fd - an) <= 1e-5 * np.linalg.norm(an)


def test_grad_regularizer_finite_difference(rng):
    op, _, _, _ = make_problem(rng)
    params = RegularizerParams(rho=3.0, d=0.2, mu=0.8, nu=0.8)
    it = Iterate(cvec(rng, 3), cvec(rng, 5))
    assert loss_regularizer(it, params, op) > 0
    gh, gx = grad_regularizer(it, params, op)
    f = lambda z: loss_regularizer(z, params, op)  # noqa: E731
    fd, an = [], []
    for which in range(8):
        for real in (True, False):
            val, du, dv = coordinate_fd(f, it, (which, real))
            fd.append(val)
            an.append(2 * (np.vdot(gh, du).real + np.vdot(gx, dv).real))
    fd, an = np.array(fd), np.array(an)
    assert np.linalg.norm(fd - an) <= 1e-5 * np.linalg.norm(an)


@pytest.mark.parametrize("Q", [8, 16, 32])
def test_total_gradient_property(rng, Q):
    """Central differences along 10 random coordinates, 50 configurations overall."""
    n_configs = {8: 17, 16: 17, 32: 16}[Q]
    for _ in range(n_configs):
        K, M = int(rng.integers(1, Q // 2 + 1)), int(rng.integers(1, Q // 2 + 1))
        op, _, _, yhat = make_problem(rng, Q, K, M, noise=0.2)
        params = RegularizerParams(rho=rng.uniform(0.5, 3), d=rng.uniform(0.2, 1.5),
                                   mu=rng.uniform(0.5, 2), nu=rng.uniform(0.5, 2))
        it = Iterate(cvec(rng, M), cvec(rng, K))
        gh, gx = grad_total(op, it, yhat, params)
        f = lambda z: loss_total(op, z, yhat, params)  # noqa: E731
        fd, an = [], []
        for _ in range(10):
            idx = (int(rng.integers(0, M + K)), bool(rng.integers(0, 2)))
            val, du, dv = coordinate_fd(f, it, idx)
            fd.append(val)
            an.append(2 * (np.vdot(gh, du).real + np.vdot(gx, dv).real))
        fd, an = np.array(fd), np.array(an)
        assert np.linalg.norm(fd - an) <= 1e-4 * np.linalg.norm(an)


def test_grad_total_is_sum(rng):
    op, _, _, yhat = make_problem(rng, noise=0.1)
    params = RegularizerParams(rho=1.0, d=0.3, mu=0.9, nu=0.9)
    it = Iterate(cvec(rng, 3), cvec(rng, 5))
    th, tx = grad_total(op, it, yhat, params)
    mh, mx = grad_measurement(op, it, yhat)
    rh, rx = grad_regularizer(it, params, op)
    np.testing.assert_allclose(th, mh + rh, rtol=1e-14, atol=1e-14)
    np.testing.assert_allclose(tx, mx + rx, rtol=1e-14, atol=1e-14)
    data, pen, gh, gx = evaluate(op, it.u, it.v, yhat, params)
    assert data == pytest.approx(loss_measurement(op, it, yhat), rel=1e-14)
    assert pen == pytest.approx(loss_regularizer(it, params, op), rel=1e-14)
    np.testing.assert_allclose(gh, th, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(gx, tx, rtol=1e-12, atol=1e-14)


def test_grad_total_equals_measurement_where_penalty_vanishes(rng):
    op, h0, x0, yhat = make_problem(rng, noise=0.1)
    params = RegularizerParams(rho=5.0, d=10.0, mu=5.0, nu=5.0)
    it = Iterate(h0 * 0.9, x0 * 1.1)
    np.testing.assert_array_equal(grad_total(op, it, yhat, params)[0], grad_measurement(op, it, yhat)[0])


def test_zero_gradient_at_truth(rng):
    op, h0, x0, yhat = make_problem(rng, Q=32, K=6, M=4)
    c = coherences(h0, x0, op.dims)
    params = RegularizerParams.default(d=1.0, mu=c.mu, nu=c.nu)
    gh, gx = grad_total(op, Iterate(h0, x0), yhat, params)
    assert np.sqrt(np.linalg.norm(gh) ** 2 + np.linalg.norm(gx) ** 2) <= 1e-10 * (1.0 + params.rho)


def test_scale_invariances(rng):
    op, _, _, yhat = make_problem(rng, noise=0.2)
    u, v = cvec(rng, 3), cvec(rng, 5)
    alpha = 1.7 * np.exp(0.4j)
    base = loss_measurement(op, Iterate(u, v), yhat)
    assert loss_measurement(op, Iterate(alpha * u, v / alpha), yhat) == pytest.approx(base, rel=1e-10)
    params = RegularizerParams(rho=1.0, d=0.3, mu=0.9, nu=0.9)
    phase = np.exp(1.1j)
    assert loss_regularizer(Iterate(phase * u, v / phase), params, op) == pytest.approx(
        loss_regularizer(Iterate(u, v), params, op), rel=1e-12)


def test_in_neighborhoods(rng):
    op, h0, x0, _ = make_problem(rng, Q=32, K=6, M=4)
    c = coherences(h0, x0, op.dims)
    spec = NeighborhoodSpec(d0=1.0, mu=c.mu, nu=c.nu, eps=1 / 15)
    assert in_neighborhoods(Iterate(h0, x0), spec, op, h0, x0).all
    assert not in_neighborhoods(Iterate(3 * h0, x0), spec, op, h0, x0).in_Nd0
    # perturb h by a direction orthogonal to h0 so the distance is exactly 2 eps d0
    w = cvec(rng, 4)
    w -= np.vdot(h0, w) * h0
    w *= 2 * spec.eps / np.linalg.norm(w)
    it = Iterate(h0 + w, x0)
    assert rank_one_distance(it.u, it.v, h0, x0) == pytest.approx(2 * spec.eps, rel=1e-12)
    assert not in_neighborhoods(it, spec, op, h0, x0).in_Neps
    with pytest.raises(ValueError):
        NeighborhoodSpec(1.0, 1.0, 1.0, eps=0.1)
