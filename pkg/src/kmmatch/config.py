"""Run configuration: JSON parsing, strict validation, and resolution.

Configs are JSON objects with explicit keys; unknown keys are an error so
typos in sweep scripts fail fast. Resolution loads the referenced data, fills
every default (including a median-heuristic bandwidth when the Gaussian sigma
is omitted), and produces a fully explicit dict that re-validates to itself,
so the emitted config.json plus the same seed reproduces a run exactly.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .dataio import images_to_matrix, load_image_dir, load_points_csv
from .kernels import GAUSSIAN, IMQ, LINEAR, KernelSpec, median_heuristic
from .mmd import WeightedInput
from .models import (
    ExtractorSpec,
    GeneratorSpec,
    affine_generator,
    color_max_pool_extractor,
    concat_extractor,
    extractor_forward_batch,
    identity_extractor,
    identity_generator,
    mlp_generator,
    random_projection_tanh_extractor,
    ring_generator,
    UNIFORM_BOX,
    STANDARD_NORMAL,
)
from .optimize import SolveOptions

EXPERIMENTS = ("match", "herd", "compress", "grid", "curve", "bench", "gradcheck")

DEFAULT_IMQ_C = 10.0


class ConfigError(ValueError):
    """Invalid configuration; maps to exit status 2."""


_COMMON_KEYS = {"experiment", "seed", "output_dir", "figures"}
_ALLOWED_KEYS = {
    "match": _COMMON_KEYS
    | {"input", "weights", "n_outputs", "kernel", "generator", "extractor", "optimizer"},
    "herd": _COMMON_KEYS | {"input", "weights", "n_outputs", "kernel", "extractor", "optimizer"},
    "compress": _COMMON_KEYS
    | {"input", "weights", "n_outputs", "kernel", "generator", "extractor", "optimizer"},
    "grid": _COMMON_KEYS
    | {"input", "grid_denominator", "kernel", "generator", "extractor", "optimizer"},
    "curve": _COMMON_KEYS
    | {"input", "weights", "kernel", "generator", "extractor", "optimizer", "curve"},
    "bench": _COMMON_KEYS | {"kernel", "generator", "extractor", "optimizer", "bench"},
    "gradcheck": _COMMON_KEYS | {"gradcheck"},
}


def _check_keys(obj: dict, allowed, where: str) -> None:
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _as_int(val, name: str, minimum: int | None = None) -> int:
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"{name} must be an integer")
    if minimum is not None and val < minimum:
        raise ConfigError(f"{name} must be >= {minimum}")
    return val


def _as_float(val, name: str, positive: bool = False) -> float:
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{name} must be a number")
    val = float(val)
    if positive and val <= 0.0:
        raise ConfigError(f"{name} must be positive")
    return val


def _as_bool(val, name: str) -> bool:
    if not isinstance(val, bool):
        raise ConfigError(f"{name} must be true or false")
    return val


def _as_dict(val, name: str) -> dict:
    if not isinstance(val, dict):
        raise ConfigError(f"{name} must be an object")
    return val


def _as_number_list(val, name: str):
    if not isinstance(val, list) or not val:
        raise ConfigError(f"{name} must be a nonempty array of numbers")
    out = []
    for item in val:
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ConfigError(f"{name} must contain only numbers")
        out.append(float(item))
    return out


def _as_int_list(val, name: str, minimum: int):
    if not isinstance(val, list) or not val:
        raise ConfigError(f"{name} must be a nonempty array of integers")
    return [_as_int(item, f"{name} entry", minimum) for item in val]


def load_config_file(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config root must be a JSON object")
    return raw


@dataclass
class RunContext:
    """Everything a run needs, built once from the validated config."""

    experiment: str
    seed: int
    out_dir: str
    figures: bool
    resolved: dict
    input_matrix: np.ndarray | None = None
    image_layout: tuple[int, int, int] | None = None
    weighted: WeightedInput | None = None
    kernel: KernelSpec | None = None
    generator: GeneratorSpec | None = None
    extractor: ExtractorSpec | None = None
    solve: SolveOptions | None = None
    n_outputs: int | None = None
    grid_denominator: int | None = None
    curve_n_values: list[int] = field(default_factory=list)
    curve_repeats: int = 3
    bench_m_values: list[int] = field(default_factory=list)
    bench_n_values: list[int] = field(default_factory=list)
    bench_iters: int = 50
    bench_warmup: int = 5
    bench_dim: int = 2
    gradcheck_cases: int = 50
    gradcheck_h: float = 1e-5


def _resolve_input(cfg: dict, config_dir: str):
    inp = _as_dict(cfg, "input")
    _check_keys(inp, {"points_csv", "image_dir"}, "input")
    if len(inp) != 1:
        raise ConfigError("input must contain exactly one of points_csv or image_dir")
    key, path = next(iter(inp.items()))
    if not isinstance(path, str):
        raise ConfigError(f"input.{key} must be a path string")
    full = path if os.path.isabs(path) else os.path.join(config_dir, path)
    full = os.path.abspath(full)
    try:
        if key == "points_csv":
            matrix, layout = load_points_csv(full), None
        else:
            images = load_image_dir(full)
            matrix = images_to_matrix(images)
            layout = (images[0].channels, images[0].height, images[0].width)
    except OSError as exc:
        raise ConfigError(f"cannot read input {full}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return matrix, layout, {key: full}


def _resolve_extractor(cfg, data_dim: int | None, layout, where="extractor"):
    if cfg is None:
        if data_dim is None:
            raise ConfigError(f"{where} must be given when there is no input data")
        spec = identity_extractor(data_dim)
        return spec, {"kind": "identity", "input_dim": data_dim}
    cfg = _as_dict(cfg, where)
    kind = cfg.get("kind")
    if kind == "identity":
        _check_keys(cfg, {"kind", "input_dim"}, where)
        dim = cfg.get("input_dim", data_dim)
        if dim is None:
            raise ConfigError(f"{where}.input_dim is required without input data")
        dim = _as_int(dim, f"{where}.input_dim", 1)
        spec = identity_extractor(dim)
        return spec, {"kind": "identity", "input_dim": dim}
    if kind == "color_max_pool":
        _check_keys(cfg, {"kind", "height", "width"}, where)
        if "height" in cfg or "width" in cfg:
            height = _as_int(cfg.get("height"), f"{where}.height", 2)
            width = _as_int(cfg.get("width"), f"{where}.width", 2)
        elif layout is not None:
            if layout[0] != 3:
                raise ConfigError("color_max_pool requires 3-channel images")
            height, width = layout[1], layout[2]
        else:
            raise ConfigError(f"{where} needs height and width (or an image input)")
        if layout is not None and (layout[0], layout[1], layout[2]) != (3, height, width):
            raise ConfigError(f"{where} layout does not match the input images")
        try:
            spec = color_max_pool_extractor(height, width)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return spec, {"kind": "color_max_pool", "height": height, "width": width}
    if kind == "random_projection_tanh":
        _check_keys(cfg, {"kind", "input_dim", "feature_dim", "seed"}, where)
        dim = cfg.get("input_dim", data_dim)
        if dim is None:
            raise ConfigError(f"{where}.input_dim is required without input data")
        dim = _as_int(dim, f"{where}.input_dim", 1)
        feature_dim = _as_int(cfg.get("feature_dim"), f"{where}.feature_dim", 1)
        seed = _as_int(cfg.get("seed", 0), f"{where}.seed", 0)
        spec = random_projection_tanh_extractor(dim, feature_dim, seed)
        return spec, {
            "kind": "random_projection_tanh",
            "input_dim": dim,
            "feature_dim": feature_dim,
            "seed": seed,
        }
    if kind == "concat":
        _check_keys(cfg, {"kind", "children"}, where)
        children_cfg = cfg.get("children")
        if not isinstance(children_cfg, list) or not children_cfg:
            raise ConfigError(f"{where}.children must be a nonempty array")
        specs, dicts = [], []
        for i, child in enumerate(children_cfg):
            s, d = _resolve_extractor(child, data_dim, layout, f"{where}.children[{i}]")
            specs.append(s)
            dicts.append(d)
        try:
            spec = concat_extractor(specs)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return spec, {"kind": "concat", "children": dicts}
    raise ConfigError(f"unknown {where} kind {kind!r}")


def _resolve_generator(cfg, data_dim: int | None, config_dir: str):
    if cfg is None:
        if data_dim is None:
            raise ConfigError("generator must be given when there is no input data")
        spec = identity_generator(data_dim)
        return spec, _generator_dict(spec)
    cfg = _as_dict(cfg, "generator")
    kind = cfg.get("kind")
    allowed = {
        "identity": {"kind", "latent_dim", "output_dim", "prior"},
        "ring": {"kind", "prior"},
        "affine": {"kind", "latent_dim", "output_dim", "prior", "seed", "parameters",
                   "parameters_csv"},
        "mlp": {"kind", "latent_dim", "output_dim", "prior", "seed", "layer_sizes",
                "parameters", "parameters_csv"},
    }
    if kind not in allowed:
        raise ConfigError(f"unknown generator kind {kind!r}")
    _check_keys(cfg, allowed[kind], "generator")
    prior = cfg.get("prior", UNIFORM_BOX)
    if prior not in (UNIFORM_BOX, STANDARD_NORMAL):
        raise ConfigError(f"unknown prior {prior!r}")

    if kind == "identity":
        dim = cfg.get("output_dim", cfg.get("latent_dim", data_dim))
        if dim is None:
            raise ConfigError("identity generator needs output_dim without input data")
        dim = _as_int(dim, "generator.output_dim", 1)
        if "latent_dim" in cfg and cfg["latent_dim"] != dim:
            raise ConfigError("identity generator requires latent_dim == output_dim")
        spec = identity_generator(dim, prior)
        return spec, _generator_dict(spec)
    if kind == "ring":
        if prior != UNIFORM_BOX:
            raise ConfigError("ring generator uses the uniform_box prior")
        spec = ring_generator()
        return spec, _generator_dict(spec)

    latent_dim = _as_int(cfg.get("latent_dim"), "generator.latent_dim", 1)
    output_dim = cfg.get("output_dim", data_dim)
    if output_dim is None:
        raise ConfigError("generator.output_dim is required without input data")
    output_dim = _as_int(output_dim, "generator.output_dim", 1)
    seed = _as_int(cfg.get("seed", 0), "generator.seed", 0)

    params = None
    if "parameters" in cfg and "parameters_csv" in cfg:
        raise ConfigError("generator: give parameters or parameters_csv, not both")
    if "parameters" in cfg:
        params = np.asarray(_as_number_list(cfg["parameters"], "generator.parameters"))
    elif "parameters_csv" in cfg:
        path = cfg["parameters_csv"]
        if not isinstance(path, str):
            raise ConfigError("generator.parameters_csv must be a path string")
        full = path if os.path.isabs(path) else os.path.join(config_dir, path)
        try:
            params = load_points_csv(full).ravel()
        except OSError as exc:
            raise ConfigError(f"cannot read {full}: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    try:
        if kind == "affine":
            if params is None:
                spec = affine_generator(latent_dim, output_dim, prior, seed)
            else:
                spec = GeneratorSpec("affine", latent_dim, output_dim, prior, params, seed=seed)
        else:
            layer_sizes = cfg.get("layer_sizes", [])
            if not isinstance(layer_sizes, list):
                raise ConfigError("generator.layer_sizes must be an array of integers")
            layer_sizes = tuple(
                _as_int(s, "generator.layer_sizes entry", 1) for s in layer_sizes
            )
            if params is None:
                spec = mlp_generator(latent_dim, layer_sizes, output_dim, prior, seed)
            else:
                spec = GeneratorSpec(
                    "mlp", latent_dim, output_dim, prior, params, layer_sizes, seed
                )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return spec, _generator_dict(spec)


def _generator_dict(spec: GeneratorSpec) -> dict:
    out = {
        "kind": spec.kind,
        "latent_dim": spec.latent_dim,
        "output_dim": spec.output_dim,
        "prior": spec.prior,
    }
    if spec.kind in ("affine", "mlp"):
        out["seed"] = spec.seed
        out["parameters"] = [float(v) for v in spec.parameters]
    if spec.kind == "mlp":
        out["layer_sizes"] = list(spec.layer_sizes)
    return out


def _resolve_kernel(cfg, extractor: ExtractorSpec | None, matrix: np.ndarray | None):
    cfg = _as_dict(cfg, "kernel")
    _check_keys(cfg, {"kind", "sigma", "c"}, "kernel")
    kind = cfg.get("kind")
    if kind == LINEAR:
        if "sigma" in cfg or "c" in cfg:
            raise ConfigError("linear kernel takes no parameters")
        return KernelSpec(LINEAR), {"kind": LINEAR}
    if kind == GAUSSIAN:
        if "c" in cfg:
            raise ConfigError("c is only valid for the imq kernel")
        if "sigma" in cfg:
            sigma = _as_float(cfg["sigma"], "kernel.sigma", positive=True)
        else:
            if matrix is None or extractor is None:
                raise ConfigError("kernel.sigma is required when there is no input data")
            try:
                sigma = median_heuristic(extractor_forward_batch(extractor, matrix))
            except ValueError as exc:
                raise ConfigError(f"median-heuristic sigma failed: {exc}") from exc
        return KernelSpec(GAUSSIAN, bandwidth_sigma=sigma), {"kind": GAUSSIAN, "sigma": sigma}
    if kind == IMQ:
        if "sigma" in cfg:
            raise ConfigError("sigma is only valid for the gaussian kernel")
        c = _as_float(cfg.get("c", DEFAULT_IMQ_C), "kernel.c", positive=True)
        return KernelSpec(IMQ, imq_c=c), {"kind": IMQ, "c": c}
    raise ConfigError(f"unknown kernel kind {kind!r}")


def _resolve_optimizer(cfg, seed: int, experiment: str) -> tuple[SolveOptions, dict]:
    cfg = _as_dict(cfg, "optimizer") if cfg is not None else {}
    _check_keys(
        cfg,
        {"max_iters", "learning_rate", "beta1", "beta2", "epsilon", "tol", "patience", "c_clamp"},
        "optimizer",
    )
    c_clamp = cfg.get("c_clamp")
    if c_clamp is not None:
        c_clamp = _as_float(c_clamp, "optimizer.c_clamp", positive=True)
    if experiment == "herd" and c_clamp is None:
        raise ConfigError("herd requires optimizer.c_clamp (the data-domain box radius)")
    opts = SolveOptions(
        max_iters=_as_int(cfg.get("max_iters", 2000), "optimizer.max_iters", 1),
        learning_rate=_as_float(cfg.get("learning_rate", 0.05), "optimizer.learning_rate", True),
        beta1=_as_float(cfg.get("beta1", 0.9), "optimizer.beta1"),
        beta2=_as_float(cfg.get("beta2", 0.999), "optimizer.beta2"),
        epsilon=_as_float(cfg.get("epsilon", 1e-8), "optimizer.epsilon", True),
        seed=seed,
        c_clamp_override=c_clamp,
        tol=_as_float(cfg.get("tol", 1e-7), "optimizer.tol"),
        patience=_as_int(cfg.get("patience", 20), "optimizer.patience", 1),
    )
    resolved = {
        "max_iters": opts.max_iters,
        "learning_rate": opts.learning_rate,
        "beta1": opts.beta1,
        "beta2": opts.beta2,
        "epsilon": opts.epsilon,
        "tol": opts.tol,
        "patience": opts.patience,
        "c_clamp": c_clamp,
    }
    return opts, resolved


def resolve_config(
    raw: dict,
    config_dir: str = ".",
    experiment: str | None = None,
    out_override: str | None = None,
    seed_override: int | None = None,
) -> RunContext:
    """Validate a raw config dict and build the run context.

    `experiment` is the CLI subcommand; it must agree with the config's own
    experiment key when both are present.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    exp = raw.get("experiment", experiment)
    if exp is None:
        raise ConfigError("experiment kind missing (config key or CLI subcommand)")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment kind {exp!r}")
    if experiment is not None and exp != experiment:
        raise ConfigError(f"config says experiment={exp!r} but the subcommand is {experiment!r}")
    _check_keys(raw, _ALLOWED_KEYS[exp], "config")

    seed = _as_int(raw.get("seed", 0), "seed", 0)
    if seed_override is not None:
        seed = _as_int(seed_override, "seed", 0)
    out_dir = raw.get("output_dir", "out")
    if not isinstance(out_dir, str):
        raise ConfigError("output_dir must be a path string")
    if out_override is not None:
        out_dir = out_override
    out_dir = os.path.abspath(out_dir)
    figures = _as_bool(raw.get("figures", True), "figures")

    resolved = {"experiment": exp, "seed": seed, "output_dir": out_dir, "figures": figures}
    ctx = RunContext(exp, seed, out_dir, figures, resolved)

    if exp == "gradcheck":
        g = _as_dict(raw.get("gradcheck", {}), "gradcheck")
        _check_keys(g, {"cases", "h"}, "gradcheck")
        ctx.gradcheck_cases = _as_int(g.get("cases", 50), "gradcheck.cases", 1)
        ctx.gradcheck_h = _as_float(g.get("h", 1e-5), "gradcheck.h", positive=True)
        resolved["gradcheck"] = {"cases": ctx.gradcheck_cases, "h": ctx.gradcheck_h}
        return ctx

    if exp == "bench":
        b = _as_dict(raw.get("bench"), "bench")
        _check_keys(b, {"m_values", "n_values", "iters_per_point", "warmup", "dim"}, "bench")
        ctx.bench_m_values = _as_int_list(b.get("m_values"), "bench.m_values", 1)
        ctx.bench_n_values = _as_int_list(b.get("n_values"), "bench.n_values", 1)
        ctx.bench_iters = _as_int(b.get("iters_per_point", 50), "bench.iters_per_point", 1)
        ctx.bench_warmup = _as_int(b.get("warmup", 5), "bench.warmup", 0)
        ctx.bench_dim = _as_int(b.get("dim", 2), "bench.dim", 1)
        ctx.generator, gen_dict = _resolve_generator(raw.get("generator"), ctx.bench_dim, config_dir)
        if ctx.generator.output_dim != ctx.bench_dim:
            raise ConfigError("generator.output_dim must equal bench.dim")
        ctx.extractor, ext_dict = _resolve_extractor(
            raw.get("extractor"), ctx.bench_dim, None
        )
        if ctx.extractor.input_dim != ctx.bench_dim:
            raise ConfigError("extractor.input_dim must equal bench.dim")
        ctx.kernel, ker_dict = _resolve_kernel(raw.get("kernel"), None, None)
        ctx.solve, opt_dict = _resolve_optimizer(raw.get("optimizer"), seed, exp)
        resolved.update(
            bench={
                "m_values": ctx.bench_m_values,
                "n_values": ctx.bench_n_values,
                "iters_per_point": ctx.bench_iters,
                "warmup": ctx.bench_warmup,
                "dim": ctx.bench_dim,
            },
            generator=gen_dict,
            extractor=ext_dict,
            kernel=ker_dict,
            optimizer=opt_dict,
        )
        return ctx

    # the remaining kinds all consume input data
    if "input" not in raw:
        raise ConfigError(f"{exp} requires an input section")
    matrix, layout, input_dict = _resolve_input(raw["input"], config_dir)
    ctx.input_matrix, ctx.image_layout = matrix, layout
    m, d = matrix.shape
    resolved["input"] = input_dict

    if exp == "grid":
        if m != 3:
            raise ConfigError(f"grid requires exactly 3 input points, got {m}")
        ctx.grid_denominator = _as_int(raw.get("grid_denominator", 8), "grid_denominator", 1)
        resolved["grid_denominator"] = ctx.grid_denominator
        weights = np.full(m, 1.0 / m)  # placeholder; the sweep supplies each cell's triple
    else:
        if "weights" in raw:
            weights = np.asarray(_as_number_list(raw["weights"], "weights"))
            if weights.size != m:
                raise ConfigError(f"weights has {weights.size} entries for {m} input points")
        else:
            weights = np.full(m, 1.0 / m)
        resolved["weights"] = [float(v) for v in weights]

    if exp == "compress":
        if m not in (2, 3):
            raise ConfigError(f"compress requires 2 or 3 input points, got {m}")
        n_outputs = raw.get("n_outputs", 1)
        if _as_int(n_outputs, "n_outputs", 1) != 1:
            raise ConfigError("compress uses exactly one output (n_outputs = 1)")
        ctx.n_outputs = 1
    elif exp == "grid":
        ctx.n_outputs = 1
    elif exp in ("match", "herd"):
        if "n_outputs" not in raw:
            raise ConfigError(f"{exp} requires n_outputs")
        ctx.n_outputs = _as_int(raw["n_outputs"], "n_outputs", 1)
    if ctx.n_outputs is not None and exp != "grid":
        resolved["n_outputs"] = ctx.n_outputs

    try:
        ctx.weighted = WeightedInput(matrix, weights)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    if exp == "herd":
        ctx.generator = identity_generator(d)
        gen_dict = None
    else:
        ctx.generator, gen_dict = _resolve_generator(raw.get("generator"), d, config_dir)
        if ctx.generator.output_dim != d:
            raise ConfigError(
                f"generator.output_dim {ctx.generator.output_dim} does not match data width {d}"
            )
        resolved["generator"] = gen_dict

    ctx.extractor, ext_dict = _resolve_extractor(raw.get("extractor"), d, layout)
    if ctx.extractor.input_dim != d:
        raise ConfigError(
            f"extractor.input_dim {ctx.extractor.input_dim} does not match data width {d}"
        )
    resolved["extractor"] = ext_dict

    if "kernel" not in raw:
        raise ConfigError("kernel section is required")
    ctx.kernel, ker_dict = _resolve_kernel(raw["kernel"], ctx.extractor, matrix)
    resolved["kernel"] = ker_dict

    ctx.solve, opt_dict = _resolve_optimizer(raw.get("optimizer"), seed, exp)
    resolved["optimizer"] = opt_dict

    if exp == "curve":
        c = _as_dict(raw.get("curve"), "curve")
        _check_keys(c, {"n_values", "repeats"}, "curve")
        ctx.curve_n_values = _as_int_list(c.get("n_values"), "curve.n_values", 1)
        ctx.curve_repeats = _as_int(c.get("repeats", 3), "curve.repeats", 1)
        resolved["curve"] = {"n_values": ctx.curve_n_values, "repeats": ctx.curve_repeats}

    return ctx


def write_config_json(resolved: dict, path) -> None:
    """Write the resolved config; floats use Python's exact round-trip form."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(resolved, fh, indent=2, sort_keys=True)
        fh.write("\n")
