import numpy as np
import pytest

from kmmatch.evaluate import (
    BenchCell,
    CurvePoint,
    GaussianMoments,
    derived_seed,
    fit_moments,
    frechet_feature_distance,
    interpolation_baseline,
    mean_pairwise_feature_distance,
    objective_vs_n_curve,
    runtime_vs_n,
    time_solver_iterations,
    write_bench_csv,
    write_curve_csv,
)
from kmmatch.kernels import gaussian_kernel, median_heuristic
from kmmatch.mmd import uniform_weighted
from kmmatch.models import (
    identity_extractor,
    identity_generator,
    random_projection_tanh_extractor,
    ring_generator,
)
from kmmatch.optimize import SolveOptions, solve_kmm


def test_fit_moments_two_points():
    m = fit_moments(np.array([[0.0, 0.0], [2.0, 0.0]]))
    assert np.array_equal(m.mean, [1.0, 0.0])
    # s-1 denominator: variance of {0,2} is 2
    assert np.array_equal(m.covariance, [[2.0, 0.0], [0.0, 0.0]])


def test_fit_moments_identical_points_zero_covariance():
    m = fit_moments(np.tile([1.5, -2.0], (6, 1)))
    assert np.array_equal(m.covariance, np.zeros((2, 2)))


def test_fit_moments_recovers_known_gaussian():
    rng = np.random.default_rng(0)
    mu = np.array([1.0, -2.0, 0.5])
    A = np.array([[1.0, 0.2, 0.0], [0.0, 0.8, 0.1], [0.0, 0.0, 1.2]])
    cov = A @ A.T
    F = rng.multivariate_normal(mu, cov, size=500)
    m = fit_moments(F)
    assert np.abs(m.mean - mu).max() < 0.1 * np.abs(mu).max()
    assert np.abs(m.covariance - cov).max() < 0.1 * np.abs(cov).max()


def test_fit_moments_needs_two_rows():
    with pytest.raises(ValueError):
        fit_moments(np.array([[1.0, 2.0]]))


def test_moments_validation():
    with pytest.raises(ValueError):
        GaussianMoments(np.zeros(2), np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        GaussianMoments(np.zeros(2), np.eye(3))


def test_frechet_zero_on_identical_moments():
    m = GaussianMoments(np.array([0.3, -1.0]), np.array([[2.0, 0.4], [0.4, 1.0]]))
    assert frechet_feature_distance(m, m) <= 1e-10


def test_frechet_unit_mean_shift_1d():
    a = GaussianMoments(np.array([0.0]), np.array([[1.0]]))
    b = GaussianMoments(np.array([1.0]), np.array([[1.0]]))
    assert frechet_feature_distance(a, b) == pytest.approx(1.0, abs=1e-10)


def test_frechet_diagonal_closed_form():
    # diagonal covariances commute: sum of (sqrt(a_i) - sqrt(b_i))^2
    a = GaussianMoments(np.zeros(2), np.diag([4.0, 1.0]))
    b = GaussianMoments(np.zeros(2), np.diag([1.0, 1.0]))
    assert frechet_feature_distance(a, b) == pytest.approx(1.0, abs=1e-10)


def test_frechet_symmetric_and_nonnegative():
    rng = np.random.default_rng(1)
    for _ in range(10):
        A = rng.normal(size=(3, 3))
        B = rng.normal(size=(3, 3))
        a = GaussianMoments(rng.normal(size=3), A @ A.T)
        b = GaussianMoments(rng.normal(size=3), B @ B.T)
        d1, d2 = frechet_feature_distance(a, b), frechet_feature_distance(b, a)
        assert abs(d1 - d2) <= 1e-10
        assert d1 >= 0.0


def test_frechet_dimension_mismatch():
    with pytest.raises(ValueError):
        frechet_feature_distance(
            GaussianMoments(np.zeros(2), np.eye(2)), GaussianMoments(np.zeros(3), np.eye(3))
        )


def test_mean_pairwise_single_identical_point():
    ext = identity_extractor(2)
    X = np.array([[0.5, 0.5]])
    assert mean_pairwise_feature_distance(X, X, ext) == 0.0


def test_mean_pairwise_hand_value():
    ext = identity_extractor(1)
    assert mean_pairwise_feature_distance([[0.0]], [[3.0]], ext) == 3.0


def test_mean_pairwise_matches_double_loop():
    rng = np.random.default_rng(2)
    X, Y = rng.normal(size=(4, 3)), rng.normal(size=(5, 3))
    ext = random_projection_tanh_extractor(3, 4, seed=3)
    got = mean_pairwise_feature_distance(X, Y, ext)
    from kmmatch.models import extractor_forward

    want = np.mean(
        [
            np.linalg.norm(extractor_forward(ext, X[i]) - extractor_forward(ext, Y[j]))
            for i in range(4)
            for j in range(5)
        ]
    )
    assert abs(got - want) < 1e-12


def test_mean_pairwise_permutation_invariant():
    rng = np.random.default_rng(3)
    X, Y = rng.normal(size=(4, 2)), rng.normal(size=(3, 2))
    ext = identity_extractor(2)
    a = mean_pairwise_feature_distance(X, Y, ext)
    b = mean_pairwise_feature_distance(X[::-1], Y[[2, 0, 1]], ext)
    assert abs(a - b) < 1e-12


def test_curve_single_cell_equals_direct_solve():
    rng = np.random.default_rng(4)
    X = rng.uniform(-0.8, 0.8, size=(4, 2))
    inp = uniform_weighted(X)
    gen, ext, ker = identity_generator(2), identity_extractor(2), gaussian_kernel(0.7)
    opts = SolveOptions(max_iters=60)
    pts = objective_vs_n_curve(inp, gen, ext, ker, [2], repeats=1, seed=9, opts=opts)
    from dataclasses import replace

    direct = solve_kmm(inp, gen, ext, ker, 2, replace(opts, seed=derived_seed(9, 0, 0)))
    assert pts[0].n == 2 and pts[0].repeats == 1 and pts[0].std == 0.0
    assert pts[0].mean == direct.final_objective


def test_curve_two_clusters_decrease_with_n():
    rng = np.random.default_rng(5)
    X = np.concatenate([rng.normal(-0.6, 0.03, 10), rng.normal(0.6, 0.03, 10)])[:, None]
    pts = objective_vs_n_curve(
        uniform_weighted(X), identity_generator(1), identity_extractor(1),
        gaussian_kernel(median_heuristic(X)), [1, 2], repeats=3, seed=1,
        opts=SolveOptions(max_iters=400),
    )
    assert pts[1].mean < pts[0].mean


def test_curve_validation():
    inp = uniform_weighted(np.zeros((2, 1)))
    gen, ext, ker = identity_generator(1), identity_extractor(1), gaussian_kernel(1.0)
    with pytest.raises(ValueError):
        objective_vs_n_curve(inp, gen, ext, ker, [], 1, 0)
    with pytest.raises(ValueError):
        objective_vs_n_curve(inp, gen, ext, ker, [1], 0, 0)
    with pytest.raises(ValueError):
        CurvePoint(0, 1.0, 0.0, 1)
    with pytest.raises(ValueError):
        CurvePoint(1, 1.0, -0.1, 1)


def test_runtime_cells_positive_finite():
    cells = runtime_vs_n(
        [8], [4, 8], identity_generator(2), identity_extractor(2), gaussian_kernel(1.0),
        iters_per_point=10, seed=0, warmup=2,
    )
    assert [(c.m, c.n) for c in cells] == [(8, 4), (8, 8)]
    for c in cells:
        assert np.isfinite(c.ms_per_iter) and c.ms_per_iter > 0.0


def test_time_solver_iterations_length():
    rng = np.random.default_rng(6)
    inp = uniform_weighted(rng.uniform(-1, 1, (6, 2)))
    t = time_solver_iterations(inp, identity_generator(2), identity_extractor(2),
                               gaussian_kernel(1.0), 4, iters=12, warmup=3, seed=0)
    assert t.shape == (12,)
    assert np.all(t > 0.0)


def test_interpolation_endpoints_exact():
    g = identity_generator(2)
    path = interpolation_baseline([0.0, 0.0], [1.0, -1.0], 5, g)
    assert np.array_equal(path[0], [0.0, 0.0])
    assert np.array_equal(path[-1], [1.0, -1.0])
    # identity generator: straight segment, equally spaced
    assert np.allclose(np.diff(path, axis=0), np.tile([0.25, -0.25], (4, 1)))


def test_interpolation_ring_stays_on_circle():
    path = interpolation_baseline([-0.5], [0.5], 3, ring_generator())
    assert np.allclose(path[0], [0.0, -1.0], atol=1e-12)  # angle -pi/2
    assert np.allclose(path[1], [1.0, 0.0], atol=1e-12)  # midpoint z=0
    assert np.allclose(path[2], [0.0, 1.0], atol=1e-12)  # angle +pi/2
    assert np.allclose(np.linalg.norm(path, axis=1), 1.0)


def test_interpolation_validation():
    with pytest.raises(ValueError):
        interpolation_baseline([0.0], [0.0, 1.0], 3, identity_generator(1))
    with pytest.raises(ValueError):
        interpolation_baseline([0.0], [1.0], 1, identity_generator(1))


def test_curve_and_bench_csv_round_trip(tmp_path):
    pts = [CurvePoint(1, 0.5, 0.01, 3), CurvePoint(10, 0.05, 0.002, 3)]
    cp = tmp_path / "curve.csv"
    write_curve_csv(pts, cp)
    lines = cp.read_text().strip().split("\n")
    assert lines[0] == "n,mean,std,repeats"
    n, mean, std, reps = lines[1].split(",")
    assert (int(n), float(mean), float(std), int(reps)) == (1, 0.5, 0.01, 3)

    cells = [BenchCell(64, 128, 1.25)]
    bp = tmp_path / "bench.csv"
    write_bench_csv(cells, bp)
    lines = bp.read_text().strip().split("\n")
    assert lines[0] == "m,n,ms_per_iter"
    assert lines[1] == "64,128,1.25"
