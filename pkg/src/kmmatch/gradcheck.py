"""Finite-difference validation of the full latent-space gradient chain.

Each case builds a weighted input, a generator, an extractor, and a kernel,
then compares the analytic gradient of the matching objective with central
finite differences at every latent coordinate. Max-pool extractors are only
checked at points where every pooling block has a clear argmax margin, since
the objective is not differentiable at ties.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import KernelSpec, gaussian_kernel, imq_kernel, linear_kernel
from .mmd import MatchObjective, WeightedInput, kmm_gradient_wrt_outputs, kmm_objective
from .models import (
    ExtractorSpec,
    GeneratorSpec,
    affine_generator,
    color_max_pool_extractor,
    concat_extractor,
    generator_forward,
    generator_vjp_batch,
    identity_extractor,
    identity_generator,
    mlp_generator,
    random_projection_tanh_extractor,
    ring_generator,
)

POOL_MARGIN = 1e-3


@dataclass(frozen=True)
class GradCheckCase:
    description: str
    rel_error: float


def analytic_latent_gradient(
    obj: MatchObjective, generator: GeneratorSpec, Z: np.ndarray
) -> np.ndarray:
    """Gradient of the matching objective with respect to every entry of Z."""
    Y = generator_forward(generator, Z)
    U = kmm_gradient_wrt_outputs(obj, Y)
    return generator_vjp_batch(generator, Z, U)


def finite_difference_latent_gradient(
    obj: MatchObjective, generator: GeneratorSpec, Z: np.ndarray, h: float = 1e-5
) -> np.ndarray:
    """Central differences of the objective at every latent coordinate."""
    Z = np.array(Z, dtype=np.float64)
    out = np.zeros_like(Z)
    for j in range(Z.shape[0]):
        for k in range(Z.shape[1]):
            orig = Z[j, k]
            Z[j, k] = orig + h
            hi = kmm_objective(obj, generator_forward(generator, Z), include_constant=False)
            Z[j, k] = orig - h
            lo = kmm_objective(obj, generator_forward(generator, Z), include_constant=False)
            Z[j, k] = orig
            out[j, k] = (hi - lo) / (2.0 * h)
    return out


def _pool_blocks(e: ExtractorSpec, Y: np.ndarray):
    c, h, w = e.layout
    bh, bw = h // 2, w // 2
    return (
        Y.reshape(-1, c, 2, bh, 2, bw).transpose(0, 1, 2, 4, 3, 5).reshape(Y.shape[0], 12, bh * bw)
    )


def _pool_margins_ok(e: ExtractorSpec, Y: np.ndarray, margin: float) -> bool:
    """True when every block's top value beats its runner-up by `margin`."""
    if e.kind == "concat":
        return all(_pool_margins_ok(ch, Y, margin) for ch in e.children)
    if e.kind != "color_max_pool":
        return True
    blocks = np.sort(_pool_blocks(e, Y), axis=2)
    return bool(np.all(blocks[:, :, -1] - blocks[:, :, -2] > margin))


def _case_rel_error(inp, generator, extractor, kernel, Z, h):
    obj = MatchObjective.build(kernel, extractor, inp)
    g_an = analytic_latent_gradient(obj, generator, Z)
    g_fd = finite_difference_latent_gradient(obj, generator, Z, h)
    scale = max(float(np.abs(g_fd).max()), 1e-10)
    return float(np.abs(g_an - g_fd).max()) / scale


def _generator_for(kind: str, extractor_kind: str, seed: int) -> GeneratorSpec:
    d = 48 if extractor_kind == "color_max_pool" else 3
    if kind == "identity":
        return identity_generator(d)
    if kind == "affine":
        return affine_generator(latent_dim=4, output_dim=d, seed=seed)
    if kind == "mlp":
        return mlp_generator(latent_dim=4, layer_sizes=(6,), output_dim=d, seed=seed)
    return ring_generator()


def _extractor_for(kind: str, input_dim: int, seed: int) -> ExtractorSpec:
    if kind == "identity":
        return identity_extractor(input_dim)
    if kind == "color_max_pool":
        return color_max_pool_extractor(4, 4)
    if kind == "random_projection_tanh":
        return random_projection_tanh_extractor(input_dim, 5, seed=seed)
    return concat_extractor(
        [identity_extractor(input_dim), random_projection_tanh_extractor(input_dim, 4, seed=seed)]
    )


def _kernel_for(kind: str) -> KernelSpec:
    if kind == "linear":
        return linear_kernel()
    if kind == "gaussian":
        return gaussian_kernel(0.7)
    return imq_kernel(1.0)


def _compatible_combos():
    combos = []
    for gk in ("identity", "affine", "mlp", "ring"):
        for ek in ("identity", "color_max_pool", "random_projection_tanh", "concat"):
            if ek == "color_max_pool" and gk == "ring":
                continue  # ring output is 2-dimensional, pooling needs an image
            for kk in ("linear", "gaussian", "imq"):
                combos.append((gk, ek, kk))
    return combos


def run_gradcheck_suite(cases: int = 50, seed: int = 0, h: float = 1e-5):
    """Run `cases` seeded finite-difference checks over all compatible
    generator/extractor/kernel combinations; returns a list of GradCheckCase."""
    combos = _compatible_combos()
    results = []
    idx = 0
    while len(results) < cases:
        gk, ek, kk = combos[idx % len(combos)]
        case_seed = seed + 1000 * idx
        rng = np.random.default_rng(case_seed)
        generator = _generator_for(gk, ek, case_seed)
        extractor = _extractor_for(ek, generator.output_dim, case_seed)
        kernel = _kernel_for(kk)

        m, n = 4, 3
        d = generator.output_dim
        if ek == "color_max_pool":
            X = rng.uniform(0.0, 1.0, size=(m, d))
        else:
            X = rng.uniform(-1.0, 1.0, size=(m, d))
        w = rng.uniform(0.2, 1.0, size=m)
        inp = WeightedInput(X, w / w.sum())

        # redraw until pooled blocks are clear of argmax ties
        Z = None
        for attempt in range(50):
            cand = rng.uniform(-0.9, 0.9, size=(n, generator.latent_dim))
            Y = generator_forward(generator, cand)
            if _pool_margins_ok(extractor, Y, POOL_MARGIN):
                Z = cand
                break
        if Z is None:
            idx += 1
            continue

        rel = _case_rel_error(inp, generator, extractor, kernel, Z, h)
        results.append(GradCheckCase(f"{gk}/{ek}/{kk} seed={case_seed}", rel))
        idx += 1
    return results


def max_rel_error(results) -> float:
    return max(r.rel_error for r in results)
