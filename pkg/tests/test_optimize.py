import numpy as np
import pytest

from kmmatch.kernels import gaussian_kernel, imq_kernel, linear_kernel, median_heuristic
from kmmatch.mmd import WeightedInput, uniform_weighted
from kmmatch.models import (
    GeneratorSpec,
    identity_extractor,
    identity_generator,
    ring_generator,
)
from kmmatch.optimize import (
    AdamState,
    NonFiniteObjectiveError,
    SolveOptions,
    adam_init,
    adam_step,
    clamp_latents,
    compression_run,
    default_clamp_radius,
    read_trace,
    simplex_weight_grid,
    solve_kmm,
    write_trace,
)


def adam_oracle_trace(grads, lr, b1=0.9, b2=0.999, eps=1e-8, z0=0.0):
    # independent straight-line scalar Adam
    z, m, v = z0, 0.0, 0.0
    out = []
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mh = m / (1 - b1**t)
        vh = v / (1 - b2**t)
        z = z - lr * mh / (vh**0.5 + eps)
        out.append(z)
    return out


def test_clamp_inside_box_unchanged():
    Z = np.array([[0.3, -0.9], [0.0, 0.5]])
    assert np.array_equal(clamp_latents(Z, 1.0), Z)


def test_clamp_hand_values():
    assert clamp_latents(np.array([[-5.0]]), 3.5)[0, 0] == -3.5
    assert clamp_latents(np.array([[0.99]]), 1.0)[0, 0] == 0.99


def test_clamp_idempotent():
    rng = np.random.default_rng(0)
    Z = rng.normal(size=(4, 3)) * 5
    once = clamp_latents(Z, 2.0)
    assert np.array_equal(clamp_latents(once, 2.0), once)


def test_clamp_rejects_nonpositive_radius():
    with pytest.raises(ValueError):
        clamp_latents(np.zeros((1, 1)), 0.0)


def test_default_clamp_radii():
    assert default_clamp_radius("uniform_box") == 1.0
    assert default_clamp_radius("standard_normal") == 3.5


def test_adam_zero_gradient_is_fixed_point():
    Z = np.array([[0.5, -0.5]])
    state, Z2 = adam_step(adam_init(Z.shape, 0.1), Z, np.zeros_like(Z))
    assert np.array_equal(Z2, Z)
    assert np.all(state.m == 0.0) and np.all(state.v == 0.0) and state.t == 1


def test_adam_first_step_moves_by_learning_rate():
    # t=1: m_hat = g, v_hat = g^2, step = -lr * g/(|g| + eps) ~ -lr
    Z = np.array([[0.0]])
    _, Z2 = adam_step(adam_init(Z.shape, 0.1), Z, np.array([[1.0]]))
    assert Z2[0, 0] == pytest.approx(-0.1, abs=1e-9)


def test_adam_matches_scalar_reference_trace():
    grads = [1.0, 1.0, -0.5, 0.25, 2.0]
    want = adam_oracle_trace(grads, lr=0.05)
    state = adam_init((1, 1), 0.05)
    Z = np.zeros((1, 1))
    for g, w in zip(grads, want):
        state, Z = adam_step(state, Z, np.array([[g]]))
        assert abs(Z[0, 0] - w) < 1e-14


def test_adam_validation():
    state = adam_init((2, 2), 0.1)
    with pytest.raises(ValueError):
        adam_step(state, np.zeros((2, 2)), np.zeros((3, 2)))
    with pytest.raises(NonFiniteObjectiveError):
        adam_step(state, np.zeros((2, 2)), np.full((2, 2), np.nan))
    with pytest.raises(ValueError):
        AdamState(np.zeros(1), np.zeros(1), t=-1, learning_rate=0.1)
    with pytest.raises(ValueError):
        AdamState(np.zeros(1), np.zeros(1), t=0, learning_rate=0.1, beta1=1.0)


def test_solver_reproduces_single_input():
    inp = uniform_weighted(np.array([[0.37, -0.21]]))
    traj = solve_kmm(
        inp, identity_generator(2), identity_extractor(2), gaussian_kernel(1.0), 1,
        SolveOptions(seed=5),
    )
    assert traj.records[-1][0] <= 2000
    assert np.linalg.norm(traj.final_Y[0] - [0.37, -0.21]) < 1e-3


def test_solver_ring_outputs_stay_on_circle():
    angles = np.array([np.pi / 4, -np.pi / 4])
    X = np.column_stack([np.cos(angles), np.sin(angles)])
    traj = solve_kmm(
        uniform_weighted(X), ring_generator(), identity_extractor(2), imq_kernel(1.0), 2,
        SolveOptions(seed=1, max_iters=300),
    )
    norms = np.linalg.norm(traj.final_Y, axis=1)
    assert np.abs(norms - 1.0).max() < 1e-6


def test_solver_herding_two_clusters_improves_objective():
    rng = np.random.default_rng(2)
    X = np.concatenate([rng.normal(0, 0.1, 50), rng.normal(5, 0.1, 50)])[:, None]
    sigma = median_heuristic(X)
    traj = solve_kmm(
        uniform_weighted(X), identity_generator(1), identity_extractor(1),
        gaussian_kernel(sigma), 4,
        SolveOptions(seed=3, c_clamp_override=6.0, max_iters=800),
    )
    assert traj.objectives[-1] <= 0.1 * traj.objectives[0]


def test_solver_box_invariant_every_iteration():
    rng = np.random.default_rng(4)
    X = rng.uniform(-0.8, 0.8, size=(5, 2))
    traj = solve_kmm(
        uniform_weighted(X), identity_generator(2), identity_extractor(2),
        gaussian_kernel(0.5), 3, SolveOptions(seed=4, max_iters=150),
    )
    assert max(traj.z_inf_norms[1:]) <= 1.0 + 1e-12


def test_solver_standard_normal_prior_clamps_at_3_5():
    rng = np.random.default_rng(5)
    X = rng.normal(0, 2.0, size=(6, 2))
    gen = GeneratorSpec("identity", 2, 2, prior="standard_normal")
    traj = solve_kmm(
        uniform_weighted(X), gen, identity_extractor(2), gaussian_kernel(1.0), 4,
        SolveOptions(seed=5, max_iters=100),
    )
    assert traj.final_state.clamp_radius == 3.5
    assert max(traj.z_inf_norms[1:]) <= 3.5 + 1e-12


def test_solver_linear_kernel_reaches_weighted_mean():
    rng = np.random.default_rng(6)
    X = rng.uniform(-0.9, 0.9, size=(5, 2))
    w = rng.uniform(0.1, 1, 5)
    w /= w.sum()
    traj = solve_kmm(
        WeightedInput(X, w), identity_generator(2), identity_extractor(2),
        linear_kernel(), 3, SolveOptions(seed=6),
    )
    assert np.linalg.norm(traj.final_Y.mean(axis=0) - w @ X) < 1e-4


def test_solver_best_so_far_not_worse_than_start():
    rng = np.random.default_rng(7)
    for seed in range(5):
        X = rng.uniform(-0.8, 0.8, size=(4, 2))
        traj = solve_kmm(
            uniform_weighted(X), identity_generator(2), identity_extractor(2),
            imq_kernel(1.0), 2, SolveOptions(seed=seed, max_iters=120),
        )
        assert traj.objectives.min() <= traj.objectives[0]


def test_solver_deterministic_given_seed():
    rng = np.random.default_rng(8)
    X = rng.uniform(-0.8, 0.8, size=(4, 2))
    kw = dict(opts=SolveOptions(seed=11, max_iters=80))
    a = solve_kmm(uniform_weighted(X), identity_generator(2), identity_extractor(2),
                  gaussian_kernel(0.7), 3, **kw)
    b = solve_kmm(uniform_weighted(X), identity_generator(2), identity_extractor(2),
                  gaussian_kernel(0.7), 3, **kw)
    # elapsed wall times differ; everything numeric must agree bitwise
    assert a.iterations.tolist() == b.iterations.tolist()
    assert a.objectives.tolist() == b.objectives.tolist()
    assert np.array_equal(a.final_Z, b.final_Z)
    assert np.array_equal(a.final_Y, b.final_Y)


def test_solver_constant_flag_leaves_iterates_unchanged():
    rng = np.random.default_rng(9)
    X = rng.uniform(-0.8, 0.8, size=(4, 2))
    base = SolveOptions(seed=12, max_iters=50, tol=0.0, patience=60, keep_iterates=True)
    on = solve_kmm(uniform_weighted(X), identity_generator(2), identity_extractor(2),
                   gaussian_kernel(0.7), 3, base)
    off = solve_kmm(uniform_weighted(X), identity_generator(2), identity_extractor(2),
                    gaussian_kernel(0.7), 3,
                    SolveOptions(seed=12, max_iters=50, tol=0.0, patience=60,
                                 keep_iterates=True, include_constant=False))
    assert len(on.iterates) == len(off.iterates) == 51
    for a, b in zip(on.iterates, off.iterates):
        assert np.abs(a - b).max() <= 1e-15


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_solver_aborts_on_non_finite_objective():
    # linear kernel on astronomically large inputs overflows to inf
    X = np.full((2, 2), 1e200)
    with pytest.raises(NonFiniteObjectiveError):
        solve_kmm(uniform_weighted(X), identity_generator(2), identity_extractor(2),
                  linear_kernel(), 1, SolveOptions(seed=0, max_iters=5,
                                                   c_clamp_override=1e300))


def test_solver_rejects_mismatched_dims():
    inp = uniform_weighted(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        solve_kmm(inp, identity_generator(2), identity_extractor(2), linear_kernel(), 1)
    with pytest.raises(ValueError):
        solve_kmm(inp, identity_generator(3), identity_extractor(2), linear_kernel(), 1)
    with pytest.raises(ValueError):
        solve_kmm(inp, identity_generator(3), identity_extractor(3), linear_kernel(), 0)


def test_compression_degenerate_weights_reproduce_first_input():
    X = np.array([[0.4, -0.3], [-0.5, 0.2], [0.1, 0.6]])
    traj = compression_run(X, [1.0, 0.0, 0.0], identity_generator(2), identity_extractor(2),
                           gaussian_kernel(0.5), SolveOptions(seed=3))
    assert np.linalg.norm(traj.final_Y[0] - X[0]) < 1e-3


def test_compression_identical_inputs_match_single_input_case():
    x = np.array([0.25, -0.4])
    pair = compression_run(np.vstack([x, x]), [0.5, 0.5], identity_generator(2),
                           identity_extractor(2), gaussian_kernel(0.5), SolveOptions(seed=4))
    assert np.linalg.norm(pair.final_Y[0] - x) < 1e-3


def test_compression_linear_kernel_closed_form():
    X = np.array([[0.0, 0.0], [2.0, 0.0]])
    traj = compression_run(X, [0.5, 0.5], identity_generator(2), identity_extractor(2),
                           linear_kernel(), SolveOptions(seed=5, c_clamp_override=3.0))
    assert np.linalg.norm(traj.final_Y[0] - [1.0, 0.0]) < 1e-4
    assert traj.final_objective < 1e-10


def test_compression_rejects_wrong_input_count():
    with pytest.raises(ValueError):
        compression_run(np.zeros((4, 2)), [0.25] * 4, identity_generator(2),
                        identity_extractor(2), linear_kernel())


def test_weight_grid_denominator_one():
    assert simplex_weight_grid(1) == [(0.0, 0.0, 1.0), (0.0, 1.0, 0.0), (1.0, 0.0, 0.0)]


def test_weight_grid_counts_and_sums():
    for D in (1, 2, 5, 8):
        triples = simplex_weight_grid(D)
        assert len(triples) == (D + 1) * (D + 2) // 2
        assert len(set(triples)) == len(triples)
        assert triples == sorted(triples)
        for t in triples:
            assert abs(sum(t) - 1.0) <= 1e-15
            assert min(t) >= 0.0


def test_weight_grid_rejects_zero():
    with pytest.raises(ValueError):
        simplex_weight_grid(0)


def test_trace_round_trip(tmp_path):
    rng = np.random.default_rng(10)
    X = rng.uniform(-0.8, 0.8, size=(3, 2))
    traj = solve_kmm(uniform_weighted(X), identity_generator(2), identity_extractor(2),
                     gaussian_kernel(0.8), 2, SolveOptions(seed=6, max_iters=40))
    p = tmp_path / "trace.csv"
    write_trace(traj, p)
    its, objs, times = read_trace(p)
    assert its.tolist() == traj.iterations.tolist()
    assert objs.tolist() == traj.objectives.tolist()  # 17 sig digits round-trips
    assert np.all(times == 0.0)  # timing zeroed by default for reproducibility
    write_trace(traj, p, include_timing=True)
    _, _, times = read_trace(p)
    assert np.all(times[1:] > 0.0)
