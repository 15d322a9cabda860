"""Evaluation metrics and scaling experiments.

Feature-space analogs of the usual generative-model metrics: a Frechet
distance between Gaussians fitted to extractor features, and a mean pairwise
feature distance. Absolute values are not comparable to metrics computed with
pretrained perceptual networks; only orderings carry over. Also houses the
objective-vs-n and runtime-vs-n experiment loops.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .kernels import KernelSpec
from .mmd import WeightedInput
from .models import ExtractorSpec, GeneratorSpec, extractor_forward_batch, generator_forward
from .optimize import SolveOptions, solve_kmm


@dataclass(frozen=True)
class GaussianMoments:
    """Mean vector and symmetric covariance matrix of a feature sample."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).ravel()
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=np.float64))
        if cov.shape != (mean.size, mean.size):
            raise ValueError("covariance shape must match the mean dimension")
        scale = max(1.0, float(np.abs(cov).max()))
        if np.abs(cov - cov.T).max() > 1e-10 * scale:
            raise ValueError("covariance must be symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)


@dataclass(frozen=True)
class CurvePoint:
    """Aggregated objective statistics at one output count n."""

    n: int
    mean: float
    std: float
    repeats: int

    def __post_init__(self):
        if self.n < 1 or self.repeats < 1:
            raise ValueError("n and repeats must be >= 1")
        if self.std < 0.0:
            raise ValueError("std must be nonnegative")


@dataclass(frozen=True)
class BenchCell:
    """Per-iteration wall time for one (input count, output count) pair."""

    m: int
    n: int
    ms_per_iter: float


def fit_moments(features: np.ndarray) -> GaussianMoments:
    """Sample mean and sample covariance (s-1 denominator) of feature rows."""
    F = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if F.shape[0] < 2:
        raise ValueError("need at least 2 feature rows to fit moments")
    mean = F.mean(axis=0)
    cov = np.cov(F, rowvar=False, ddof=1).reshape(F.shape[1], F.shape[1])
    return GaussianMoments(mean, cov)


def _psd_sqrt(S: np.ndarray) -> np.ndarray:
    # eigenvalues clamped at 0: S is PSD up to rounding noise
    vals, vecs = np.linalg.eigh(S)
    vals = np.maximum(vals, 0.0)
    return (vecs * np.sqrt(vals)) @ vecs.T


def frechet_feature_distance(a: GaussianMoments, b: GaussianMoments) -> float:
    """Squared Wasserstein-2 distance between the two fitted Gaussians.

    ||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2), with the
    inner square root taken through a symmetric eigendecomposition.
    """
    if a.mean.size != b.mean.size:
        raise ValueError("moment dimensions differ")
    dmu = a.mean - b.mean
    ra = _psd_sqrt(a.covariance)
    inner = ra @ b.covariance @ ra
    inner = 0.5 * (inner + inner.T)
    vals = np.maximum(np.linalg.eigvalsh(inner), 0.0)
    cross = 2.0 * np.sqrt(vals).sum()
    val = float(dmu @ dmu + np.trace(a.covariance) + np.trace(b.covariance) - cross)
    return max(val, 0.0)


def mean_pairwise_feature_distance(X: np.ndarray, Y: np.ndarray, e: ExtractorSpec) -> float:
    """(1/mn) sum_ij ||E(x_i) - E(y_j)||; lower means higher coherence."""
    FX = extractor_forward_batch(e, np.atleast_2d(np.asarray(X, dtype=np.float64)))
    FY = extractor_forward_batch(e, np.atleast_2d(np.asarray(Y, dtype=np.float64)))
    diff = FX[:, None, :] - FY[None, :, :]
    return float(np.sqrt(np.sum(diff**2, axis=-1)).mean())


def derived_seed(*parts: int) -> int:
    """Deterministic child seed for grid/curve/bench cells."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def objective_vs_n_curve(
    inp: WeightedInput,
    generator: GeneratorSpec,
    extractor: ExtractorSpec,
    kernel: KernelSpec,
    n_values,
    repeats: int,
    seed: int,
    opts: SolveOptions = SolveOptions(),
):
    """Final reporting objective vs output count, averaged over repeats.

    Each (n, repeat) cell runs solve_kmm with its own derived seed.
    """
    n_values = [int(n) for n in n_values]
    if not n_values or any(n < 1 for n in n_values):
        raise ValueError("n_values must be nonempty with every n >= 1")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    points = []
    for i, n in enumerate(n_values):
        finals = []
        for r in range(repeats):
            cell_opts = replace(opts, seed=derived_seed(seed, i, r), include_constant=True)
            finals.append(solve_kmm(inp, generator, extractor, kernel, n, cell_opts).final_objective)
        finals = np.array(finals)
        points.append(CurvePoint(n, float(finals.mean()), float(finals.std()), repeats))
    return points


def time_solver_iterations(
    inp: WeightedInput,
    generator: GeneratorSpec,
    extractor: ExtractorSpec,
    kernel: KernelSpec,
    n: int,
    iters: int,
    warmup: int,
    seed: int,
    learning_rate: float = 0.05,
) -> np.ndarray:
    """Measured wall time (ms) of each solver iteration after warm-up."""
    total = warmup + iters
    opts = SolveOptions(
        max_iters=total, learning_rate=learning_rate, seed=seed, tol=0.0, patience=total + 1
    )
    traj = solve_kmm(inp, generator, extractor, kernel, n, opts)
    # row 0 is initialization; discard it plus the warm-up iterations
    return traj.elapsed_ms[1 + warmup :]


def runtime_vs_n(
    m_values,
    n_values,
    generator: GeneratorSpec,
    extractor: ExtractorSpec,
    kernel: KernelSpec,
    iters_per_point: int,
    seed: int,
    warmup: int = 5,
):
    """Mean per-iteration wall time over a grid of (m, n) sizes.

    Inputs are seeded uniform draws in [-1, 1]^d with uniform weights, one
    fresh set per m.
    """
    cells = []
    d = generator.output_dim
    for i, m in enumerate(m_values):
        m = int(m)
        rng = np.random.default_rng(derived_seed(seed, i))
        X = rng.uniform(-1.0, 1.0, size=(m, d))
        inp = WeightedInput(X, np.full(m, 1.0 / m))
        for j, n in enumerate(n_values):
            times = time_solver_iterations(
                inp, generator, extractor, kernel, int(n), iters_per_point, warmup,
                seed=derived_seed(seed, i, j),
            )
            cells.append(BenchCell(m, int(n), float(times.mean())))
    return cells


def interpolation_baseline(z_a, z_b, steps: int, g: GeneratorSpec) -> np.ndarray:
    """Generator outputs along the straight latent segment from z_a to z_b."""
    z_a = np.asarray(z_a, dtype=np.float64).ravel()
    z_b = np.asarray(z_b, dtype=np.float64).ravel()
    if z_a.size != z_b.size:
        raise ValueError("endpoint dimensions differ")
    if steps < 2:
        raise ValueError("steps must be >= 2")
    t = np.linspace(0.0, 1.0, steps)[:, None]
    Z = (1.0 - t) * z_a[None, :] + t * z_b[None, :]
    return generator_forward(g, Z)


def write_curve_csv(points, path) -> None:
    lines = ["n,mean,std,repeats"]
    for p in points:
        lines.append(f"{p.n},{p.mean:.17g},{p.std:.17g},{p.repeats}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_bench_csv(cells, path) -> None:
    lines = ["m,n,ms_per_iter"]
    for c in cells:
        lines.append(f"{c.m},{c.n},{c.ms_per_iter:.17g}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
