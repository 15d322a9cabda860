"""Latent-space optimization of the kernel mean matching objective.

The solver runs Adam over a stack of latent codes Z (one row per output),
pulling the objective gradient back through the extractor and generator, and
projects onto an l-infinity ball after every step by clamping. Herding is the
same loop with the identity generator and a data-domain clamp radius; the
compression task is the n=1 special case with two or three weighted inputs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .kernels import KernelSpec
from .mmd import MatchObjective, WeightedInput, kmm_gradient_wrt_outputs, kmm_objective
from .models import (
    STANDARD_NORMAL,
    UNIFORM_BOX,
    ExtractorSpec,
    GeneratorSpec,
    generator_forward,
    generator_vjp_batch,
    sample_prior,
)

DEFAULT_CLAMP = {UNIFORM_BOX: 1.0, STANDARD_NORMAL: 3.5}


class NonFiniteObjectiveError(RuntimeError):
    """Raised when the objective or gradient stops being finite."""


def default_clamp_radius(prior: str) -> float:
    return DEFAULT_CLAMP[prior]


@dataclass(frozen=True)
class LatentState:
    """Current latent stack with its box constraint."""

    Z: np.ndarray
    clamp_radius: float
    prior: str

    def __post_init__(self):
        if self.clamp_radius <= 0.0:
            raise ValueError("clamp_radius must be positive")
        object.__setattr__(self, "Z", np.atleast_2d(np.asarray(self.Z, dtype=np.float64)))


@dataclass(frozen=True)
class AdamState:
    """Bias-corrected Adam accumulators; immutable, one instance per step."""

    m: np.ndarray
    v: np.ndarray
    t: int
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("step counter must be nonnegative")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if self.learning_rate <= 0.0 or self.epsilon <= 0.0:
            raise ValueError("learning_rate and epsilon must be positive")


def adam_init(shape, learning_rate: float = 0.05, beta1: float = 0.9,
              beta2: float = 0.999, epsilon: float = 1e-8) -> AdamState:
    return AdamState(np.zeros(shape), np.zeros(shape), 0, learning_rate, beta1, beta2, epsilon)


def adam_step(state: AdamState, Z: np.ndarray, gradient: np.ndarray):
    """One bias-corrected Adam update; returns (new state, new Z) unclamped."""
    Z = np.asarray(Z, dtype=np.float64)
    gradient = np.asarray(gradient, dtype=np.float64)
    if Z.shape != gradient.shape or Z.shape != state.m.shape:
        raise ValueError("Z, gradient, and Adam accumulators must share a shape")
    if not np.all(np.isfinite(gradient)):
        raise NonFiniteObjectiveError("non-finite gradient passed to adam_step")
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * gradient
    v = state.beta2 * state.v + (1.0 - state.beta2) * gradient**2
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    Z_new = Z - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return replace(state, m=m, v=v, t=t), Z_new


def clamp_latents(Z: np.ndarray, c_clamp: float) -> np.ndarray:
    """Project onto the l-infinity ball of radius c_clamp (entrywise clip)."""
    if c_clamp <= 0.0:
        raise ValueError("c_clamp must be positive")
    return np.clip(np.asarray(Z, dtype=np.float64), -c_clamp, c_clamp)


@dataclass(frozen=True)
class SolveOptions:
    """Solver knobs. Defaults: Adam lr=0.05, beta1=0.9, beta2=0.999, eps=1e-8,
    at most 2000 iterations, stopping early after `patience` consecutive
    iterations whose relative objective improvement falls below `tol`.

    include_constant picks the objective form written into the trajectory
    (reporting form with the input-side constant, or the optimization form
    without it); the gradient is the same either way.
    """

    max_iters: int = 2000
    learning_rate: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0
    c_clamp_override: float | None = None
    tol: float = 1e-7
    patience: int = 20
    include_constant: bool = True
    keep_iterates: bool = False


@dataclass(frozen=True)
class Trajectory:
    """Per-iteration (iteration, objective, elapsed_ms) records plus the final
    latent state and outputs. Row 0 holds the objective at initialization.

    z_inf_norms tracks max|Z| per record row, so the post-step box invariant
    can be checked from outside; iterates holds every Z when the solver ran
    with keep_iterates.
    """

    records: tuple[tuple[int, float, float], ...]
    final_state: LatentState
    final_Y: np.ndarray
    z_inf_norms: tuple[float, ...] = ()
    iterates: tuple[np.ndarray, ...] | None = None

    @property
    def final_Z(self) -> np.ndarray:
        return self.final_state.Z

    @property
    def iterations(self) -> np.ndarray:
        return np.array([r[0] for r in self.records], dtype=np.int64)

    @property
    def objectives(self) -> np.ndarray:
        return np.array([r[1] for r in self.records])

    @property
    def elapsed_ms(self) -> np.ndarray:
        return np.array([r[2] for r in self.records])

    @property
    def final_objective(self) -> float:
        return self.records[-1][1]


def solve_kmm(
    inp: WeightedInput,
    generator: GeneratorSpec,
    extractor: ExtractorSpec,
    kernel: KernelSpec,
    n: int,
    opts: SolveOptions = SolveOptions(),
) -> Trajectory:
    """Minimize the composed-kernel matching objective over n latent codes.

    Z starts as a prior draw with the given seed. Each iteration forms
    Y = g(Z), pulls the objective gradient back through extractor and
    generator, takes an Adam step, clamps Z to the box, and records the
    objective at the new iterate. Stops at max_iters or once the relative
    improvement stays below tol for `patience` consecutive iterations.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if inp.X.shape[1] != generator.output_dim:
        raise ValueError("input dimension does not match generator output_dim")
    if extractor.input_dim != generator.output_dim:
        raise ValueError("extractor input_dim does not match generator output_dim")
    c_clamp = (
        opts.c_clamp_override
        if opts.c_clamp_override is not None
        else default_clamp_radius(generator.prior)
    )
    if c_clamp <= 0.0:
        raise ValueError("clamp radius must be positive")

    obj = MatchObjective.build(kernel, extractor, inp)
    Z = sample_prior(generator, n, opts.seed)
    adam = adam_init(Z.shape, opts.learning_rate, opts.beta1, opts.beta2, opts.epsilon)

    def objective_at(Z_now):
        val = kmm_objective(obj, generator_forward(generator, Z_now), opts.include_constant)
        if not np.isfinite(val):
            raise NonFiniteObjectiveError(f"objective became non-finite: {val!r}")
        return val

    start = time.perf_counter()
    prev = objective_at(Z)
    records = [(0, prev, (time.perf_counter() - start) * 1e3)]
    norms = [float(np.abs(Z).max())]
    iterates = [Z.copy()] if opts.keep_iterates else None

    stall = 0
    for it in range(1, opts.max_iters + 1):
        start = time.perf_counter()
        Y = generator_forward(generator, Z)
        U = kmm_gradient_wrt_outputs(obj, Y)
        G = generator_vjp_batch(generator, Z, U)
        adam, Z = adam_step(adam, Z, G)
        Z = clamp_latents(Z, c_clamp)
        val = objective_at(Z)
        records.append((it, val, (time.perf_counter() - start) * 1e3))
        norms.append(float(np.abs(Z).max()))
        if iterates is not None:
            iterates.append(Z.copy())
        rel = (prev - val) / max(abs(prev), 1e-12)
        stall = stall + 1 if rel < opts.tol else 0
        prev = val
        if stall >= opts.patience:
            break

    state = LatentState(Z, c_clamp, generator.prior)
    return Trajectory(
        tuple(records),
        state,
        generator_forward(generator, Z),
        tuple(norms),
        tuple(iterates) if iterates is not None else None,
    )


def compression_run(
    inputs: np.ndarray,
    weight_vector,
    generator: GeneratorSpec,
    extractor: ExtractorSpec,
    kernel: KernelSpec,
    opts: SolveOptions = SolveOptions(),
) -> Trajectory:
    """Single-output matching against two or three weighted inputs."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    if inputs.shape[0] not in (2, 3):
        raise ValueError("compression_run expects exactly 2 or 3 input points")
    inp = WeightedInput(inputs, np.asarray(weight_vector, dtype=np.float64))
    return solve_kmm(inp, generator, extractor, kernel, n=1, opts=opts)


def simplex_weight_grid(denominator: int):
    """All weight triples with entries in {0, 1/D, ..., 1} summing to 1.

    Lexicographically ordered and exhaustive; the count is
    (D+1)(D+2)/2 triples for denominator D.
    """
    if denominator < 1:
        raise ValueError("denominator must be >= 1")
    D = int(denominator)
    out = []
    for a in range(D + 1):
        for b in range(D - a + 1):
            out.append((a / D, b / D, (D - a - b) / D))
    return out


def write_trace(traj: Trajectory, path, include_timing: bool = False) -> None:
    """Write the trajectory as CSV with header iter,objective,elapsed_ms.

    elapsed_ms is measured wall time and varies run to run; it is written as 0
    unless include_timing is set, so the default file is byte-identical across
    reruns with the same config and seed.
    """
    lines = ["iter,objective,elapsed_ms"]
    for it, val, ms in traj.records:
        shown = ms if include_timing else 0.0
        lines.append(f"{it},{val:.17g},{shown:.17g}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trace(path):
    """Read a trace CSV back into (iterations, objectives, elapsed_ms) arrays."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != "iter,objective,elapsed_ms":
            raise ValueError(f"unexpected trace header: {header!r}")
        its, objs, times = [], [], []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            a, b, c = line.split(",")
            its.append(int(a))
            objs.append(float(b))
            times.append(float(c))
    return np.array(its, dtype=np.int64), np.array(objs), np.array(times)
