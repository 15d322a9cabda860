"""Kernel mean matching for content-addressable generation.

Match a weighted input sample with generated outputs by minimizing a weighted
squared maximum mean discrepancy under a kernel composed with a feature
extractor, optimizing latent codes with Adam inside an l-infinity box.
"""

from .kernels import (
    KernelSpec,
    gaussian_kernel,
    gram,
    imq_kernel,
    kernel_eval,
    kernel_grad_second_arg,
    linear_kernel,
    median_heuristic,
)
from .mmd import (
    MatchObjective,
    WeightedInput,
    kmm_gradient_wrt_outputs,
    kmm_objective,
    mmd2_hat,
    mmd2_hat_weighted,
    uniform_weighted,
)
from .models import (
    ExtractorSpec,
    GeneratorSpec,
    affine_generator,
    color_max_pool_extractor,
    concat_extractor,
    extractor_forward,
    extractor_forward_batch,
    extractor_vjp,
    extractor_vjp_batch,
    generator_forward,
    generator_vjp,
    generator_vjp_batch,
    identity_extractor,
    identity_generator,
    mlp_generator,
    random_projection_tanh_extractor,
    ring_generator,
    sample_prior,
)
from .optimize import (
    AdamState,
    LatentState,
    NonFiniteObjectiveError,
    SolveOptions,
    Trajectory,
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
from .evaluate import (
    BenchCell,
    CurvePoint,
    GaussianMoments,
    fit_moments,
    frechet_feature_distance,
    interpolation_baseline,
    mean_pairwise_feature_distance,
    objective_vs_n_curve,
    runtime_vs_n,
    time_solver_iterations,
)
from .gradcheck import run_gradcheck_suite, max_rel_error

__version__ = "0.1.0"

__all__ = [
    "KernelSpec", "linear_kernel", "gaussian_kernel", "imq_kernel", "kernel_eval",
    "gram", "kernel_grad_second_arg", "median_heuristic",
    "WeightedInput", "MatchObjective", "uniform_weighted", "mmd2_hat",
    "mmd2_hat_weighted", "kmm_objective", "kmm_gradient_wrt_outputs",
    "GeneratorSpec", "ExtractorSpec", "identity_generator", "affine_generator",
    "mlp_generator", "ring_generator", "identity_extractor", "color_max_pool_extractor",
    "random_projection_tanh_extractor", "concat_extractor", "generator_forward",
    "generator_vjp", "generator_vjp_batch", "extractor_forward", "extractor_forward_batch",
    "extractor_vjp", "extractor_vjp_batch", "sample_prior",
    "AdamState", "LatentState", "SolveOptions", "Trajectory", "NonFiniteObjectiveError",
    "adam_init", "adam_step", "clamp_latents", "default_clamp_radius", "solve_kmm",
    "compression_run", "simplex_weight_grid", "write_trace", "read_trace",
    "GaussianMoments", "CurvePoint", "BenchCell", "fit_moments",
    "frechet_feature_distance", "mean_pairwise_feature_distance",
    "objective_vs_n_curve", "runtime_vs_n", "time_solver_iterations",
    "interpolation_baseline",
    "run_gradcheck_suite", "max_rel_error",
    "__version__",
]
