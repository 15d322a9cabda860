"""Differentiable generators and feature extractors with vector-Jacobian products.

These are desk-scale stand-ins for pretrained deep models: every generator and
extractor is a deterministic map defined by a (possibly empty) flat parameter
vector, and each ships an analytic VJP so objective gradients can be pulled
back to latent space without an autodiff framework.

Generators
    identity    z -> z                         (requires latent_dim == output_dim)
    affine      z -> W z + b
    mlp         tanh hidden layers, sigmoid output (outputs in (0, 1))
    ring        z in R^1 -> (cos pi z, sin pi z)

Extractors
    identity                x -> x
    color_max_pool          (3, H, W) image -> 12 block maxima (2x2 blocks per channel)
    random_projection_tanh  x -> tanh(W x + b), W and b fixed by seed
    concat                  stacked child features
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

UNIFORM_BOX = "uniform_box"
STANDARD_NORMAL = "standard_normal"

_PRIORS = (UNIFORM_BOX, STANDARD_NORMAL)

_GEN_KINDS = ("identity", "affine", "mlp", "ring")
_EXT_KINDS = ("identity", "color_max_pool", "random_projection_tanh", "concat")


def _mlp_widths(latent_dim: int, layer_sizes: tuple[int, ...], output_dim: int):
    return (latent_dim, *layer_sizes, output_dim)


def _mlp_param_count(widths) -> int:
    return sum((fan_in + 1) * fan_out for fan_in, fan_out in zip(widths[:-1], widths[1:]))


@dataclass(frozen=True)
class GeneratorSpec:
    """Immutable description of a generator g: R^latent_dim -> R^output_dim."""

    kind: str
    latent_dim: int
    output_dim: int
    prior: str = UNIFORM_BOX
    parameters: np.ndarray = field(default_factory=lambda: np.zeros(0))
    layer_sizes: tuple[int, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _GEN_KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.prior not in _PRIORS:
            raise ValueError(f"unknown prior {self.prior!r}")
        if self.latent_dim < 1 or self.output_dim < 1:
            raise ValueError("latent_dim and output_dim must be positive")
        object.__setattr__(
            self, "parameters", np.asarray(self.parameters, dtype=np.float64).ravel()
        )
        object.__setattr__(self, "layer_sizes", tuple(int(s) for s in self.layer_sizes))
        if self.kind == "identity" and self.latent_dim != self.output_dim:
            raise ValueError("identity generator requires latent_dim == output_dim")
        if self.kind == "affine":
            want = self.output_dim * self.latent_dim + self.output_dim
            if self.parameters.size != want:
                raise ValueError(f"affine generator expects {want} parameters")
        if self.kind == "mlp":
            want = _mlp_param_count(_mlp_widths(self.latent_dim, self.layer_sizes, self.output_dim))
            if self.parameters.size != want:
                raise ValueError(f"mlp generator expects {want} parameters")
        if self.kind == "ring" and (self.latent_dim != 1 or self.output_dim != 2):
            raise ValueError("ring generator requires latent_dim=1, output_dim=2")

    def _affine_wb(self):
        d, dz = self.output_dim, self.latent_dim
        W = self.parameters[: d * dz].reshape(d, dz)
        b = self.parameters[d * dz :]
        return W, b

    def _mlp_layers(self):
        widths = _mlp_widths(self.latent_dim, self.layer_sizes, self.output_dim)
        layers = []
        pos = 0
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            W = self.parameters[pos : pos + fan_in * fan_out].reshape(fan_out, fan_in)
            pos += fan_in * fan_out
            b = self.parameters[pos : pos + fan_out]
            pos += fan_out
            layers.append((W, b))
        return layers


def identity_generator(dim: int, prior: str = UNIFORM_BOX) -> GeneratorSpec:
    return GeneratorSpec("identity", latent_dim=dim, output_dim=dim, prior=prior)


def ring_generator() -> GeneratorSpec:
    return GeneratorSpec("ring", latent_dim=1, output_dim=2, prior=UNIFORM_BOX)


def _fan_in_uniform(rng, fan_in, size):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=size)


def affine_generator(
    latent_dim: int, output_dim: int, prior: str = UNIFORM_BOX, seed: int = 0
) -> GeneratorSpec:
    """Affine generator with seeded fan-in-uniform weights."""
    rng = np.random.default_rng(seed)
    W = _fan_in_uniform(rng, latent_dim, (output_dim, latent_dim))
    b = _fan_in_uniform(rng, latent_dim, output_dim)
    params = np.concatenate([W.ravel(), b])
    return GeneratorSpec("affine", latent_dim, output_dim, prior, params, seed=seed)


def mlp_generator(
    latent_dim: int,
    layer_sizes: tuple[int, ...],
    output_dim: int,
    prior: str = UNIFORM_BOX,
    seed: int = 0,
) -> GeneratorSpec:
    """MLP generator with seeded fan-in-uniform weights per layer."""
    rng = np.random.default_rng(seed)
    widths = _mlp_widths(latent_dim, tuple(layer_sizes), output_dim)
    chunks = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        chunks.append(_fan_in_uniform(rng, fan_in, (fan_out, fan_in)).ravel())
        chunks.append(_fan_in_uniform(rng, fan_in, fan_out))
    return GeneratorSpec(
        "mlp", latent_dim, output_dim, prior, np.concatenate(chunks), tuple(layer_sizes), seed
    )


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def generator_forward(g: GeneratorSpec, Z: np.ndarray) -> np.ndarray:
    """Apply g to each row of Z; returns an (n, output_dim) array."""
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    if Z.shape[1] != g.latent_dim:
        raise ValueError(f"latent width {Z.shape[1]} does not match latent_dim {g.latent_dim}")
    if g.kind == "identity":
        return Z.copy()
    if g.kind == "affine":
        W, b = g._affine_wb()
        return Z @ W.T + b
    if g.kind == "ring":
        theta = np.pi * Z[:, 0]
        return np.column_stack([np.cos(theta), np.sin(theta)])
    # mlp
    h = Z
    layers = g._mlp_layers()
    for W, b in layers[:-1]:
        h = np.tanh(h @ W.T + b)
    W, b = layers[-1]
    return _sigmoid(h @ W.T + b)


def generator_vjp(g: GeneratorSpec, z: np.ndarray, cotangent: np.ndarray) -> np.ndarray:
    """cotangent^T (dg/dz) for a single latent vector."""
    out = generator_vjp_batch(g, np.atleast_2d(z), np.atleast_2d(cotangent))
    return out[0]


def generator_vjp_batch(g: GeneratorSpec, Z: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Row-wise VJP: row j is U[j]^T (dg/dz at Z[j]). Shapes (n, d_z) <- (n, d)."""
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    U = np.atleast_2d(np.asarray(U, dtype=np.float64))
    if Z.shape[0] != U.shape[0]:
        raise ValueError("Z and cotangent row counts differ")
    if Z.shape[1] != g.latent_dim or U.shape[1] != g.output_dim:
        raise ValueError("shape mismatch in generator VJP")
    if g.kind == "identity":
        return U.copy()
    if g.kind == "affine":
        W, _ = g._affine_wb()
        return U @ W
    if g.kind == "ring":
        theta = np.pi * Z[:, 0]
        d0 = -np.pi * np.sin(theta)
        d1 = np.pi * np.cos(theta)
        return (U[:, 0] * d0 + U[:, 1] * d1)[:, None]
    # mlp: forward pass caching activations, then backprop
    layers = g._mlp_layers()
    acts = [Z]
    h = Z
    for W, b in layers[:-1]:
        h = np.tanh(h @ W.T + b)
        acts.append(h)
    W, b = layers[-1]
    y = _sigmoid(h @ W.T + b)
    delta = U * y * (1.0 - y)
    for idx in range(len(layers) - 1, 0, -1):
        W, _ = layers[idx]
        delta = (delta @ W) * (1.0 - acts[idx] ** 2)
    W0, _ = layers[0]
    return delta @ W0


def sample_prior(g: GeneratorSpec, n: int, seed: int) -> np.ndarray:
    """Seeded draw of n latent vectors from the generator's prior."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    if g.prior == UNIFORM_BOX:
        return rng.uniform(-1.0, 1.0, size=(n, g.latent_dim))
    return rng.standard_normal(size=(n, g.latent_dim))


@dataclass(frozen=True)
class ExtractorSpec:
    """Immutable description of a feature extractor E: R^input_dim -> R^feature_dim."""

    kind: str
    input_dim: int
    feature_dim: int
    layout: tuple[int, int, int] | None = None  # (channels, height, width)
    parameters: np.ndarray = field(default_factory=lambda: np.zeros(0))
    seed: int = 0
    children: tuple["ExtractorSpec", ...] = ()

    def __post_init__(self):
        if self.kind not in _EXT_KINDS:
            raise ValueError(f"unknown extractor kind {self.kind!r}")
        object.__setattr__(
            self, "parameters", np.asarray(self.parameters, dtype=np.float64).ravel()
        )
        if self.kind == "identity" and self.feature_dim != self.input_dim:
            raise ValueError("identity extractor requires feature_dim == input_dim")
        if self.kind == "color_max_pool":
            if self.layout is None:
                raise ValueError("color_max_pool needs an image layout")
            c, h, w = self.layout
            if c != 3 or h < 2 or w < 2 or h % 2 or w % 2:
                raise ValueError("color_max_pool requires 3 channels and even H, W >= 2")
            if self.input_dim != c * h * w or self.feature_dim != 12:
                raise ValueError("color_max_pool dims inconsistent with layout")
        if self.kind == "random_projection_tanh":
            want = self.feature_dim * self.input_dim + self.feature_dim
            if self.parameters.size != want:
                raise ValueError(f"random_projection_tanh expects {want} parameters")
        if self.kind == "concat":
            if not self.children:
                raise ValueError("concat extractor needs children")
            if any(ch.input_dim != self.input_dim for ch in self.children):
                raise ValueError("concat children must share the input dimension")
            if self.feature_dim != sum(ch.feature_dim for ch in self.children):
                raise ValueError("concat feature_dim must equal the sum over children")

    def _wb(self):
        W = self.parameters[: self.feature_dim * self.input_dim].reshape(
            self.feature_dim, self.input_dim
        )
        b = self.parameters[self.feature_dim * self.input_dim :]
        return W, b


def identity_extractor(dim: int) -> ExtractorSpec:
    return ExtractorSpec("identity", input_dim=dim, feature_dim=dim)


def color_max_pool_extractor(height: int, width: int) -> ExtractorSpec:
    return ExtractorSpec(
        "color_max_pool",
        input_dim=3 * height * width,
        feature_dim=12,
        layout=(3, height, width),
    )


def random_projection_tanh_extractor(
    input_dim: int, feature_dim: int, seed: int = 0
) -> ExtractorSpec:
    """Fixed seeded nonlinear features: tanh(W x + b)."""
    rng = np.random.default_rng(seed)
    W = rng.normal(0.0, 1.0 / np.sqrt(input_dim), size=(feature_dim, input_dim))
    b = rng.uniform(-0.3, 0.3, size=feature_dim)
    params = np.concatenate([W.ravel(), b])
    return ExtractorSpec(
        "random_projection_tanh", input_dim, feature_dim, parameters=params, seed=seed
    )


def concat_extractor(children) -> ExtractorSpec:
    children = tuple(children)
    if not children:
        raise ValueError("concat extractor needs at least one child")
    return ExtractorSpec(
        "concat",
        input_dim=children[0].input_dim,
        feature_dim=sum(ch.feature_dim for ch in children),
        children=children,
    )


def extractor_forward(e: ExtractorSpec, x: np.ndarray) -> np.ndarray:
    out = extractor_forward_batch(e, np.atleast_2d(x))
    return out[0]


def extractor_forward_batch(e: ExtractorSpec, X: np.ndarray) -> np.ndarray:
    """Apply E to each row of X; returns an (n, feature_dim) array."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != e.input_dim:
        raise ValueError(f"input width {X.shape[1]} does not match input_dim {e.input_dim}")
    if e.kind == "identity":
        return X.copy()
    if e.kind == "random_projection_tanh":
        W, b = e._wb()
        return np.tanh(X @ W.T + b)
    if e.kind == "concat":
        return np.hstack([extractor_forward_batch(ch, X) for ch in e.children])
    # color_max_pool: block maxima in channel-major, row-major block order
    c, h, w = e.layout
    imgs = X.reshape(-1, c, 2, h // 2, 2, w // 2)
    return imgs.max(axis=(3, 5)).reshape(X.shape[0], 12)


def extractor_vjp(e: ExtractorSpec, x: np.ndarray, cotangent: np.ndarray) -> np.ndarray:
    out = extractor_vjp_batch(e, np.atleast_2d(x), np.atleast_2d(cotangent))
    return out[0]


def extractor_vjp_batch(e: ExtractorSpec, X: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Row-wise pullback: row j is U[j]^T (dE/dx at X[j])."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    U = np.atleast_2d(np.asarray(U, dtype=np.float64))
    if X.shape[1] != e.input_dim or U.shape[1] != e.feature_dim or X.shape[0] != U.shape[0]:
        raise ValueError("shape mismatch in extractor VJP")
    if e.kind == "identity":
        return U.copy()
    if e.kind == "random_projection_tanh":
        W, b = e._wb()
        t = np.tanh(X @ W.T + b)
        return (U * (1.0 - t**2)) @ W
    if e.kind == "concat":
        out = np.zeros_like(X)
        pos = 0
        for ch in e.children:
            out += extractor_vjp_batch(ch, X, U[:, pos : pos + ch.feature_dim])
            pos += ch.feature_dim
        return out
    # color_max_pool: cotangent routed to each block's argmax (first index on ties)
    c, h, w = e.layout
    n = X.shape[0]
    bh, bw = h // 2, w // 2
    blocks = X.reshape(n, c, 2, bh, 2, bw).transpose(0, 1, 2, 4, 3, 5).reshape(n, 12, bh * bw)
    hit = np.argmax(blocks, axis=2)
    grad_blocks = np.zeros_like(blocks)
    rows = np.arange(n)[:, None]
    feats = np.arange(12)[None, :]
    grad_blocks[rows, feats, hit] = U
    out = grad_blocks.reshape(n, c, 2, 2, bh, bw).transpose(0, 1, 2, 4, 3, 5)
    return out.reshape(n, e.input_dim)
