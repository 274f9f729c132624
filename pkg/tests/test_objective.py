import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relu_recover import _backend, _fallback
from relu_recover.evaluation import loglog_slope
from relu_recover.numerics import RngStream, min_symmetric_eigenvalue
from relu_recover.objective import (empirical_gradient, empirical_hessian, empirical_loss, error_matrix,
                                    gradient_decomposition, gradient_via_omega, loss_and_gradient,
                                    omega_hat, population_gradient_from_sigma, population_gradient_mc,
                                    population_sigma_mc, sigma_hat, unvec, vec)
from relu_recover.teacher import Dataset, generate_dataset, make_ground_truth


def _data(X, y, noise=None):
    X = np.asarray(X, dtype=np.float64)
    return Dataset(X, np.asarray(y, dtype=np.float64), noise)


def _two_pass_loss(W, X, y):
    total = []
    for x, t in zip(X, y):
        pred = math.fsum(max(math.fsum(a * b for a, b in zip(W[:, k], x)), 0.0) for k in range(W.shape[1]))
        total.append((pred - t) ** 2)
    return math.fsum(total) / (2 * len(y))


def _instance(seed, d=6, K=3, N=200, nu=0.2):
    r = RngStream(seed)
    spec = make_ground_truth(d, K, 1.0, 2.0, r.spawn("teacher"), nu=nu)
    data = generate_dataset(spec, N, r.spawn("data"))
    W = spec.w_star + 0.5 * r.spawn("w").normal((d, K))
    return spec, data, W


def test_hand_values():
    data = _data([[2.0]], [3.0])
    W = np.array([[1.0]])
    assert empirical_loss(W, data) == 0.5
    assert empirical_gradient(W, data)[0, 0] == -2.0
    # one step of size 0.1 from 0.5: residual -2, gradient -4
    W = np.array([[0.5]])
    g = empirical_gradient(W, data)
    assert g[0, 0] == -4.0
    assert (W - 0.05 * g)[0, 0] == pytest.approx(0.7, abs=1e-15)


def test_indicator_is_inclusive_at_zero():
    data = _data([[1.0, 0.0]], [1.0])
    W = np.array([[0.0], [1.0]])
    # w.x = 0 exactly: output 0 but the neuron still passes gradient
    assert empirical_loss(W, data) == 0.5
    np.testing.assert_array_equal(empirical_gradient(W, data), [[-1.0], [0.0]])


def test_loss_matches_two_pass_oracle():
    spec, data, W = _instance(1)
    assert abs(empirical_loss(W, data) - _two_pass_loss(W, data.inputs, data.labels)) <= 1e-12


def test_zero_loss_at_truth_without_noise():
    spec, data, _ = _instance(2, nu=0.0)
    assert empirical_loss(spec.w_star, data) <= 1e-30
    assert np.abs(empirical_gradient(spec.w_star, data)).max() <= 1e-14


def test_loss_and_gradient_agree_with_separate_calls():
    _, data, W = _instance(3)
    loss, G = loss_and_gradient(W, data)
    assert loss == pytest.approx(empirical_loss(W, data), rel=1e-14)
    np.testing.assert_allclose(G, empirical_gradient(W, data), rtol=1e-13, atol=1e-15)


def test_gradient_central_differences():
    _, data, W = _instance(4, N=300)
    G = empirical_gradient(W, data)
    h = 1e-6
    for i in range(W.shape[0]):
        for k in range(W.shape[1]):
            E = np.zeros_like(W)
            E[i, k] = h
            fd = (empirical_loss(W + E, data) - empirical_loss(W - E, data)) / (2 * h)
            assert abs(fd - G[i, k]) <= 1e-6 * max(1.0, abs(G[i, k]))


def test_backends_agree():
    _, data, W = _instance(5, d=10, K=5, N=1000)
    l1, g1 = _fallback.loss_and_grad(data.inputs, data.labels, W)
    l2, g2 = _backend.loss_and_grad(data.inputs, data.labels, W)
    assert abs(l1 - l2) <= 1e-12 * max(1.0, l1)
    assert np.abs(g1 - g2).max() <= 1e-12
    assert _fallback.loss_only(data.inputs, data.labels, W) == pytest.approx(l1, rel=1e-13)


def test_shape_errors():
    _, data, W = _instance(6)
    with pytest.raises(ValueError):
        empirical_loss(W[:-1], data)
    with pytest.raises(ValueError):
        empirical_gradient(W.ravel(), data)


def test_vec_stacks_columns():
    W = np.arange(6.0).reshape(3, 2)
    np.testing.assert_array_equal(vec(W), [0, 2, 4, 1, 3, 5])
    np.testing.assert_array_equal(unvec(vec(W), 3, 2), W)


def test_sigma_hat_hand_value():
    X = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 1.0], [1.0, 1.0]])
    w = np.array([1.0, 0.0])
    # rows with x_1 >= 0: the first, second and fourth
    expected = (np.outer(X[0], X[0]) + np.outer(X[1], X[1]) + np.outer(X[3], X[3])) / 4
    np.testing.assert_allclose(sigma_hat(w, w, X), expected, atol=0)


def test_omega_blocks_are_sigma_hat():
    _, data, W = _instance(7, d=4, K=3, N=150)
    V = RngStream(70).normal((4, 3))
    Om = omega_hat(W, V, data.inputs)
    assert Om.full.shape == (12, 12)
    for k in range(3):
        for j in range(3):
            np.testing.assert_allclose(Om.block(k, j), sigma_hat(W[:, j], V[:, k], data.inputs),
                                       atol=1e-14)


def test_omega_is_symmetric_psd_on_diagonal_pair():
    _, data, W = _instance(8, d=5, K=3, N=400)
    full = omega_hat(W, W, data.inputs).full
    assert np.abs(full - full.T).max() <= 1e-14
    assert np.linalg.eigvalsh(full).min() >= -1e-12


def test_error_matrix_hand_value():
    X = np.array([[1.0, 2.0], [-1.0, 1.0]])
    data = _data(X, [0.0, 0.0], noise=np.array([0.5, -2.0]))
    W = np.array([[1.0], [0.0]])
    # only the first row is active
    np.testing.assert_allclose(error_matrix(W, data), [[0.25], [0.5]])
    with pytest.raises(ValueError):
        error_matrix(W, _data(X, [0.0, 0.0]))


def test_gradient_decomposition_sums():
    spec, data, W = _instance(9)
    dec = gradient_decomposition(W, data, spec.w_star)
    np.testing.assert_allclose(dec.signal - dec.noise_part, dec.total, atol=1e-13)


@pytest.mark.parametrize("seed", range(5))
def test_block_form_matches_streaming_gradient(seed):
    spec, data, W = _instance(100 + seed, d=7, K=4, N=500)
    G = empirical_gradient(W, data)
    assert np.linalg.norm(gradient_via_omega(W, data, spec.w_star) - G) <= 1e-10


def test_hessian_matches_gradient_differences():
    _, data, W = _instance(10, d=4, K=2, N=400)
    H = empirical_hessian(W, data.inputs).full
    dW = 1e-7 * RngStream(11).normal(W.shape)
    lhs = vec(empirical_gradient(W + dW, data) - empirical_gradient(W - dW, data)) / 2
    # small enough that no kink is crossed, so the gradient is exactly linear
    np.testing.assert_allclose(lhs, H @ vec(dW), rtol=1e-5, atol=1e-13)


def _wedge_covariance(w_a, w_b):
    """E[x x^T 1{w_a.x >= 0, w_b.x >= 0}] in 2-D by integrating over the wedge angle."""
    phi_a = math.atan2(w_a[1], w_a[0])
    phi_b = math.atan2(w_b[1], w_b[0])
    # the half-plane of w spans angles phi_w +- pi/2; intersect the two intervals on the circle
    grid = np.linspace(-math.pi, math.pi, 2_000_001)[:-1]
    step = 2 * math.pi / 2_000_000
    u = np.stack([np.cos(grid), np.sin(grid)])
    inside = (np.cos(grid - phi_a) >= 0) & (np.cos(grid - phi_b) >= 0)
    uu = u[:, inside]
    # radial integral of r^3 exp(-r^2/2) / (2 pi) is 1/pi
    return (uu @ uu.T) * step / math.pi


def test_wedge_oracle_against_closed_forms():
    np.testing.assert_allclose(_wedge_covariance([1, 0], [1, 0]), np.eye(2) / 2, atol=1e-5)
    orth = _wedge_covariance([1, 0], [0, 1])
    np.testing.assert_allclose(orth, [[0.25, 1 / (2 * math.pi)], [1 / (2 * math.pi), 0.25]], atol=1e-5)


@pytest.mark.parametrize("theta", [0.3, 1.0, 2.5])
def test_population_sigma_mc_matches_wedge_integral(theta):
    w_a = np.array([1.0, 0.0])
    w_b = np.array([math.cos(theta), math.sin(theta)])
    est, se = population_sigma_mc(w_a, w_b, 400_000, RngStream(int(theta * 1000)))
    oracle = _wedge_covariance(w_a, w_b)
    assert np.all(np.abs(est - oracle) <= 4 * se + 1e-5)


def test_population_sigma_mc_scale_invariant_and_validated():
    w = np.array([1.0, -2.0, 0.5])
    a, _ = population_sigma_mc(w, w, 10_000, RngStream(3))
    b, _ = population_sigma_mc(3 * w, 0.1 * w, 10_000, RngStream(3))
    np.testing.assert_array_equal(a, b)
    with pytest.raises(ValueError):
        population_sigma_mc(w, w, 9_999, RngStream(3))


def test_population_gradient_routes_agree():
    spec = make_ground_truth(4, 2, 1.0, 2.0, RngStream(20))
    W = spec.w_star + 0.3 * RngStream(21).normal((4, 2))
    g1, se1 = population_gradient_mc(W, spec, 400_000, RngStream(22), return_se=True)
    g2, se2 = population_gradient_from_sigma(W, spec.w_star, 200_000, RngStream(23))
    assert np.all(np.abs(g1 - g2) <= 3 * np.sqrt(se1 ** 2 + se2 ** 2))
    assert population_gradient_mc(spec.w_star, spec, 10_000, RngStream(24)) == pytest.approx(0.0, abs=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32), st.floats(0.1, 5.0))
def test_loss_nonnegative_and_positively_homogeneous_gradient(seed, c):
    spec, data, W = _instance(seed, d=3, K=2, N=40, nu=0.0)
    assert empirical_loss(W, data) >= 0.0
    # scaling both W and the labels by c scales the loss by c^2 and the gradient by c
    scaled = Dataset(data.inputs, c * data.labels, None)
    assert empirical_loss(c * W, scaled) == pytest.approx(c * c * empirical_loss(W, data), rel=1e-10, abs=1e-14)
    np.testing.assert_allclose(empirical_gradient(c * W, scaled), c * empirical_gradient(W, data),
                               rtol=1e-9, atol=1e-13)


def test_unit_example_loss_and_gradient():
    data = _data([[2.0]], [2.0])
    assert empirical_loss(np.array([[0.5]]), data) == 0.5
    assert empirical_gradient(np.array([[0.5]]), data)[0, 0] == -2.0


def test_sigma_hat_large_sample_and_symmetries():
    X = RngStream(50).normal((1_000_000, 3))
    w = np.array([0.4, -1.0, 2.0])
    assert np.abs(sigma_hat(w, w, X) - np.eye(3) / 2).max() <= 5e-3
    assert np.abs(sigma_hat(w, -w, X)).max() == 0.0
    v = np.array([1.0, 1.0, -0.5])
    np.testing.assert_array_equal(sigma_hat(w, v, X[:1000]).T, sigma_hat(v, w, X[:1000]))


def test_error_matrix_noiseless_and_rate():
    spec = make_ground_truth(10, 5, 1, 2, RngStream(51), nu=0.0)
    W = spec.w_star + 0.1
    data = generate_dataset(spec, 500, RngStream(52))
    assert np.abs(error_matrix(W, data)).max() == 0.0
    noisy = spec.with_noise(math.sqrt(0.1))
    sizes = [2 ** p for p in range(10, 17)]
    means = []
    for N in sizes:
        norms = [np.linalg.norm(error_matrix(W, generate_dataset(noisy, N, RngStream(53).spawn(N, t))))
                 for t in range(20)]
        means.append(np.mean(norms))
    assert abs(loglog_slope(sizes, means) + 0.5) <= 0.1


def test_population_gradient_std_scales_with_n_mc():
    spec = make_ground_truth(3, 2, 1, 2, RngStream(54))
    W = spec.w_star + 0.3
    small = [population_gradient_mc(W, spec, 10_000, RngStream(55).spawn("a", i))[0, 0] for i in range(50)]
    large = [population_gradient_mc(W, spec, 20_000, RngStream(55).spawn("b", i))[0, 0] for i in range(50)]
    ratio = np.std(small, ddof=1) / np.std(large, ddof=1)
    assert abs(ratio / math.sqrt(2) - 1) <= 0.2


def test_hessian_positive_at_truth():
    spec = make_ground_truth(10, 5, 1, 2, RngStream(56))
    data = generate_dataset(spec, 20 * 50, RngStream(57))
    assert min_symmetric_eigenvalue(empirical_hessian(spec.w_star, data.inputs).full) > 0


def test_hessian_directional_finite_difference():
    spec = make_ground_truth(6, 3, 1, 2, RngStream(58))
    data = generate_dataset(spec, 800, RngStream(59))
    W = spec.w_star + 0.2 * RngStream(60).normal((6, 3))
    D = RngStream(61).normal((6, 3))
    D /= np.linalg.norm(D)
    h = 1e-6
    # no activation pattern may flip within +-h
    assert np.all(np.abs(data.inputs @ W) > h * np.abs(data.inputs @ D))
    fd = (empirical_gradient(W + h * D, data) - empirical_gradient(W - h * D, data)) / (2 * h)
    H = empirical_hessian(W, data.inputs)
    assert np.abs(vec(fd) - H @ vec(D)).max() <= 1e-8


def test_hessian_scalar_hand_value():
    x = np.array([[0.5], [1.5], [2.0]])
    H = empirical_hessian(np.array([[0.7]]), x)
    assert H.full[0, 0] == pytest.approx(np.mean(x[:, 0] ** 2), rel=1e-15)
