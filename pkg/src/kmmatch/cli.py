"""Command-line entry point.

One subcommand per experiment kind (match, herd, compress, grid, curve,
bench, gradcheck), each driven by a JSON config. Every run writes the
resolved config plus its result CSVs (and figures) under the output
directory. Exit status: 0 success, 2 invalid config, 3 numerical failure,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import replace

import numpy as np

from .config import ConfigError, RunContext, load_config_file, resolve_config, write_config_json
from .dataio import image_from_vector, save_image_grid, save_image_pnm, save_points_csv
from .evaluate import derived_seed, objective_vs_n_curve, runtime_vs_n, write_bench_csv, write_curve_csv
from .figures import (
    save_bench_figure,
    save_curve_figure,
    save_grid_figure,
    save_match_scatter,
    save_trace_figure,
)
from .gradcheck import max_rel_error, run_gradcheck_suite
from .optimize import (
    NonFiniteObjectiveError,
    compression_run,
    simplex_weight_grid,
    solve_kmm,
    write_trace,
)

GRADCHECK_PASS_THRESHOLD = 1e-5


def _write_solver_artifacts(ctx: RunContext, traj) -> None:
    write_trace(traj, os.path.join(ctx.out_dir, "trace.csv"))
    write_trace(traj, os.path.join(ctx.out_dir, "timing.csv"), include_timing=True)
    save_points_csv(traj.final_Z, os.path.join(ctx.out_dir, "latents.csv"))
    if ctx.image_layout is None:
        save_points_csv(traj.final_Y, os.path.join(ctx.out_dir, "outputs.csv"))
    else:
        out_dir = os.path.join(ctx.out_dir, "outputs")
        os.makedirs(out_dir, exist_ok=True)
        images = [image_from_vector(row, *ctx.image_layout) for row in traj.final_Y]
        for i, img in enumerate(images):
            suffix = "pgm" if img.channels == 1 else "ppm"
            save_image_pnm(img, os.path.join(out_dir, f"out_{i:03d}.{suffix}"))
        cols = max(1, math.ceil(math.sqrt(len(images))))
        save_image_grid(images, cols, os.path.join(ctx.out_dir, "outputs_grid.ppm"))
    if ctx.figures:
        save_trace_figure(
            traj.iterations, traj.objectives, os.path.join(ctx.out_dir, "trace.png")
        )
        if ctx.image_layout is None and ctx.input_matrix.shape[1] == 2:
            save_match_scatter(
                ctx.input_matrix, traj.final_Y, os.path.join(ctx.out_dir, "match_scatter.png")
            )


def _run_solver(ctx: RunContext) -> int:
    if ctx.experiment == "compress":
        traj = compression_run(
            ctx.input_matrix, ctx.weighted.weights, ctx.generator, ctx.extractor,
            ctx.kernel, ctx.solve,
        )
    else:
        traj = solve_kmm(
            ctx.weighted, ctx.generator, ctx.extractor, ctx.kernel, ctx.n_outputs, ctx.solve
        )
    _write_solver_artifacts(ctx, traj)
    return 0


def _run_grid(ctx: RunContext) -> int:
    triples = simplex_weight_grid(ctx.grid_denominator)
    cells_dir = os.path.join(ctx.out_dir, "cells")
    os.makedirs(cells_dir, exist_ok=True)
    D = ctx.grid_denominator
    summary = []
    for i, w in enumerate(triples):
        opts = replace(ctx.solve, seed=derived_seed(ctx.seed, i))
        traj = compression_run(
            ctx.input_matrix, np.asarray(w), ctx.generator, ctx.extractor, ctx.kernel, opts
        )
        tag = "_".join(str(round(v * D)) for v in w)
        if ctx.image_layout is None:
            save_points_csv(traj.final_Y, os.path.join(cells_dir, f"cell_{tag}.csv"))
        else:
            img = image_from_vector(traj.final_Y[0], *ctx.image_layout)
            save_image_pnm(img, os.path.join(cells_dir, f"cell_{tag}.ppm"))
        summary.append((w, traj.final_objective))
    lines = ["w1,w2,w3,objective"]
    for w, val in summary:
        lines.append(f"{w[0]:.17g},{w[1]:.17g},{w[2]:.17g},{val:.17g}")
    with open(os.path.join(ctx.out_dir, "grid.csv"), "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    if ctx.figures:
        save_grid_figure(
            [w for w, _ in summary], [v for _, v in summary],
            os.path.join(ctx.out_dir, "grid.png"),
        )
    return 0


def _run_curve(ctx: RunContext) -> int:
    points = objective_vs_n_curve(
        ctx.weighted, ctx.generator, ctx.extractor, ctx.kernel,
        ctx.curve_n_values, ctx.curve_repeats, ctx.seed, ctx.solve,
    )
    write_curve_csv(points, os.path.join(ctx.out_dir, "curve.csv"))
    if ctx.figures:
        save_curve_figure(points, os.path.join(ctx.out_dir, "curve.png"))
    return 0


def _run_bench(ctx: RunContext) -> int:
    cells = runtime_vs_n(
        ctx.bench_m_values, ctx.bench_n_values, ctx.generator, ctx.extractor, ctx.kernel,
        ctx.bench_iters, ctx.seed, ctx.bench_warmup,
    )
    write_bench_csv(cells, os.path.join(ctx.out_dir, "bench.csv"))
    if ctx.figures:
        save_bench_figure(cells, os.path.join(ctx.out_dir, "bench.png"))
    return 0


def _run_gradcheck(ctx: RunContext) -> int:
    results = run_gradcheck_suite(ctx.gradcheck_cases, ctx.seed, ctx.gradcheck_h)
    lines = ["case,rel_error"]
    for r in results:
        lines.append(f"{r.description},{r.rel_error:.17g}")
    path = os.path.join(ctx.out_dir, "gradcheck.csv")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    worst = max_rel_error(results)
    print(f"gradcheck: {len(results)} cases, max relative error {worst:.6e}")
    return 0 if worst < GRADCHECK_PASS_THRESHOLD else 3


_RUNNERS = {
    "match": _run_solver,
    "herd": _run_solver,
    "compress": _run_solver,
    "grid": _run_grid,
    "curve": _run_curve,
    "bench": _run_bench,
    "gradcheck": _run_gradcheck,
}


def run(ctx: RunContext) -> int:
    """Execute a resolved run and write its artifacts; returns the exit status."""
    try:
        os.makedirs(ctx.out_dir, exist_ok=True)
        write_config_json(ctx.resolved, os.path.join(ctx.out_dir, "config.json"))
        return _RUNNERS[ctx.experiment](ctx)
    except (NonFiniteObjectiveError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kmmatch",
        description="Kernel mean matching: match weighted inputs with generated outputs.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    descriptions = {
        "match": "optimize latent codes so generator outputs match the weighted input",
        "herd": "herd data-space points toward the weighted input (identity generator)",
        "compress": "match one output against 2-3 weighted inputs",
        "grid": "sweep all weight triples on a simplex grid (3 inputs, 1 output each)",
        "curve": "final objective vs output count n",
        "bench": "per-iteration runtime over (m, n) sizes",
        "gradcheck": "finite-difference check of the full gradient chain",
    }
    for kind, desc in descriptions.items():
        p = sub.add_parser(kind, help=desc)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--seed", type=int, default=None, help="seed override")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        raw = load_config_file(args.config)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 4
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        ctx = resolve_config(
            raw,
            config_dir=os.path.dirname(os.path.abspath(args.config)),
            experiment=args.experiment,
            out_override=args.out,
            seed_override=args.seed,
        )
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(ctx)


if __name__ == "__main__":
    sys.exit(main())
