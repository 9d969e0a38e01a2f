"""Command-line surface: generate, diagram, optimize, apply, invert, bench.

Exit codes: 0 success, 1 usage/config/format errors, 2 simplex budget
exceeded (with a hint to subsample).
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import fileio
from .datasets import SHAPES, generate
from .losses import FAMILIES
from .optimizer import MODES, STOP_RULES, apply_flow, invert_flow, run
from .rips import SimplexBudgetError, build_filtration, compute_persistence
from .runconfig import (RunConfig, load_config, to_loss_spec, to_optim_config,
                        validate_config)


def _optimize_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="run-config JSON file")
    sub.add_argument("--input", help="input points CSV (or .off)")
    sub.add_argument("--output", help="output points CSV")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--mode", choices=MODES)
    sub.add_argument("--lr", type=float)
    sub.add_argument("--sigma", type=float)
    sub.add_argument("--subsample", type=int)
    sub.add_argument("--epochs", type=int)
    sub.add_argument("--stop-rule", choices=STOP_RULES, dest="stop_rule")
    sub.add_argument("--stop-eps", type=float, dest="stop_eps")
    sub.add_argument("--val-reps", type=int, dest="val_reps")
    sub.add_argument("--val-every", type=int, dest="val_every")
    sub.add_argument("--loss", choices=FAMILIES, dest="loss_family")
    sub.add_argument("--dims", help="homology dimensions, e.g. 0,1")
    sub.add_argument("--flow-out", dest="flow_out")
    sub.add_argument("--trace-out", dest="trace_out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="topoflow")
    cmds = parser.add_subparsers(dest="command", required=True)

    gen = cmds.add_parser("generate", help="sample a synthetic point cloud")
    gen.add_argument("--shape", choices=SHAPES, required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--noise-std", type=float, default=0.0, dest="noise_std")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--dim", type=int)
    gen.add_argument("--output", required=True)

    dia = cmds.add_parser("diagram", help="persistence diagram of a point cloud")
    dia.add_argument("--input", required=True)
    dia.add_argument("--output", required=True)
    dia.add_argument("--max-dim", type=int, default=2, dest="max_dim")
    dia.add_argument("--dims", default="0,1")
    dia.add_argument("--max-radius", type=float, dest="max_radius")
    dia.add_argument("--include-zero", action="store_true", dest="include_zero")

    opt = cmds.add_parser("optimize", help="run topological gradient descent")
    _optimize_flags(opt)

    ben = cmds.add_parser("bench", help="vanilla vs diffeo on the same cloud")
    _optimize_flags(ben)

    app = cmds.add_parser("apply", help="apply a recorded flow to points")
    app.add_argument("--flow", required=True)
    app.add_argument("--input", required=True)
    app.add_argument("--output", required=True)

    inv = cmds.add_parser("invert", help="run a recorded flow backward")
    inv.add_argument("--flow", required=True)
    inv.add_argument("--input", required=True)
    inv.add_argument("--output", required=True)
    return parser


def _read_cloud(path: str):
    if str(path).endswith(".off"):
        return fileio.read_off(path)
    return fileio.read_points(path)


_OVERRIDABLE = ("input", "output", "seed", "mode", "lr", "sigma", "subsample",
                "epochs", "stop_rule", "stop_eps", "val_reps", "val_every",
                "loss_family", "flow_out", "trace_out")


def _merged_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    for key in _OVERRIDABLE:
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    if getattr(args, "dims", None):
        cfg.hom_dims = tuple(int(t) for t in args.dims.split(","))
    validate_config(cfg)
    return cfg


def _load_input(cfg: RunConfig):
    if cfg.input is not None:
        return _read_cloud(cfg.input)
    return generate(cfg.shape, cfg.n, cfg.noise_std, cfg.seed, cfg.dim)


def _spec_from(cfg: RunConfig):
    target = fileio.read_diagram(cfg.target_diagram) if cfg.target_diagram else None
    return to_loss_spec(cfg, target=target)


def cmd_generate(args) -> int:
    cloud = generate(args.shape, args.n, args.noise_std, args.seed, args.dim)
    fileio.write_points(args.output, cloud)
    print(f"wrote {cloud.n} points in R^{cloud.d} to {args.output}")
    return 0


def cmd_diagram(args) -> int:
    cloud = _read_cloud(args.input)
    dims = sorted(int(t) for t in args.dims.split(","))
    C = build_filtration(cloud, args.max_dim, max_radius=args.max_radius)
    D = compute_persistence(C, dims, include_zero=args.include_zero)
    fileio.write_diagram(args.output, D)
    print(f"wrote {len(D)} diagram points to {args.output}")
    return 0


def cmd_optimize(args) -> int:
    cfg = _merged_config(args)
    cloud = _load_input(cfg)
    result = run(cloud, _spec_from(cfg), to_optim_config(cfg))
    fileio.write_points(cfg.output, result.cloud)
    fileio.write_flow(cfg.flow_out, result.flow)
    fileio.write_trace(cfg.trace_out, result.trace)
    print(f"stopped: {result.stop_reason}")
    print(f"epochs run: {result.epochs_run}, final validation loss: "
          f"{result.final_val_loss:.6g}")
    print(f"wrote {cfg.output}, {cfg.flow_out}, {cfg.trace_out}")
    return 0


def cmd_bench(args) -> int:
    cfg = _merged_config(args)
    cloud = _load_input(cfg)
    spec = _spec_from(cfg)
    rows = []
    for mode in ("vanilla", "diffeo"):
        result = run(cloud, spec, replace(to_optim_config(cfg), mode=mode))
        print(f"{mode}: {result.stop_reason} "
              f"(final validation loss {result.final_val_loss:.6g})")
        for r in result.trace:
            rows.append(f"{mode},{r.epoch},{r.train_loss!r},{r.val_loss!r},"
                        f"{r.support},{r.kappa!r},{r.lip_bound!r},{r.seconds!r}")
    with open(cfg.trace_out, "w") as fh:
        fh.write("mode,epoch,train_loss,val_loss,support,kappa,lip_bound,seconds\n")
        fh.write("\n".join(rows) + "\n")
    print(f"wrote benchmark series to {cfg.trace_out}")
    return 0


def cmd_apply(args, inverse: bool = False) -> int:
    flow = fileio.read_flow(args.flow)
    cloud = _read_cloud(args.input)
    if flow.steps and cloud.d != flow.dim:
        print(f"error: points are in R^{cloud.d} but the flow acts on R^{flow.dim}",
              file=sys.stderr)
        return 1
    out = invert_flow(flow, cloud.coords) if inverse else apply_flow(flow, cloud.coords)
    fileio.write_points(args.output, out)
    print(f"wrote {len(out)} points to {args.output}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        if args.command == "generate":
            return cmd_generate(args)
        if args.command == "diagram":
            return cmd_diagram(args)
        if args.command == "optimize":
            return cmd_optimize(args)
        if args.command == "bench":
            return cmd_bench(args)
        if args.command == "apply":
            return cmd_apply(args)
        if args.command == "invert":
            return cmd_apply(args, inverse=True)
        parser.error(f"unknown command {args.command}")
    except SimplexBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
