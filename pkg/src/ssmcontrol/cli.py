"""Command-line interface.

Subcommands mirror the pipeline stages::

    ssmcontrol analyze    --preset pendulum-fig3
    ssmcontrol reduce     --preset pendulum-fig3 --out runs
    ssmcontrol synthesize --preset pendulum-fig3 --out runs
    ssmcontrol simulate   --preset pendulum-fig4 --out runs
    ssmcontrol sweep      --preset pendulum-fig5 --out runs --workers 4
    ssmcontrol pipeline   --preset pendulum-fig3 --out runs

``--config`` points at a JSON config (merged over the preset when both
are given); ``--out`` defaults to $SSMCONTROL_OUT or the working
directory. Every run writes its artifacts under a config-stamped
subdirectory.
"""

import argparse
import json
import os
import sys

from . import pipeline as pl
from .presets import load_config


def _common(parser):
    parser.add_argument("--config", help="JSON config path")
    parser.add_argument("--preset", help="named preset config")
    parser.add_argument("--out", help="output root directory "
                                      "(default $SSMCONTROL_OUT or '.')")
    parser.add_argument("--seed", type=int, help="optimizer seed override")
    parser.add_argument("--workers", type=int, default=1,
                        help="parallel workers for sweep cells")


def _resolve(args):
    if not args.config and not args.preset:
        raise SystemExit("one of --config or --preset is required")
    overrides = {}
    if args.seed is not None:
        overrides["optimizer"] = {"seed": args.seed}
    cfg = load_config(source=args.config, preset=args.preset,
                      overrides=overrides)
    out_root = args.out or os.environ.get("SSMCONTROL_OUT") or "."
    return cfg, out_root


def _fail(stage, exc):
    print(json.dumps({"status": "error", "stage": stage,
                      "error": str(exc)}, sort_keys=True))
    return 1


def cmd_analyze(args):
    cfg, out_root = _resolve(args)
    try:
        _, _, payload = pl.analyze(cfg)
    except pl.StageError as err:
        return _fail(err.stage, err.cause)
    print(json.dumps(payload, sort_keys=True, indent=1,
                     default=pl._json_default))
    if args.out:
        out_dir = pl._run_dir(cfg, out_root)
        doc = dict(pl._stamp(cfg))
        doc["analysis"] = payload
        pl.write_json(os.path.join(out_dir, "analysis.json"), doc)
    return 0


def cmd_reduce(args):
    cfg, out_root = _resolve(args)
    out_dir = pl._run_dir(cfg, out_root)
    try:
        result = pl.run_reduce(cfg, out_dir=out_dir)
    except pl.StageError as err:
        return _fail(err.stage, err.cause)
    print(json.dumps({"status": "ok", "artifact": result["artifact"]},
                     sort_keys=True))
    return 0


def cmd_synthesize(args):
    cfg, out_root = _resolve(args)
    out_dir = pl._run_dir(cfg, out_root)
    try:
        result = pl.run_synthesize(cfg, out_dir=out_dir, seed=args.seed)
    except pl.StageError as err:
        return _fail(err.stage, err.cause)
    synth = result["synth"]
    print(json.dumps({"status": "ok",
                      "objective_value": synth.objective_value,
                      "evals": synth.cma.evals,
                      "stop_reason": synth.cma.stop_reason,
                      "artifacts": result["artifacts"]}, sort_keys=True))
    return 0


def cmd_simulate(args):
    cfg, out_root = _resolve(args)
    out_dir = pl._run_dir(cfg, out_root)
    try:
        synth_bundle = pl.run_synthesize(cfg, out_dir=out_dir,
                                         seed=args.seed)
        result = pl.run_simulate(cfg, synth_bundle, out_dir=out_dir)
    except pl.StageError as err:
        return _fail(err.stage, err.cause)
    print(json.dumps({"status": "ok", "metrics": result["metrics"],
                      "artifacts": result["artifacts"]}, sort_keys=True))
    return 0


def cmd_sweep(args):
    cfg, out_root = _resolve(args)
    if not cfg.get("sweep"):
        cfg["sweep"] = {}
    out_dir = pl._run_dir(cfg, out_root)
    try:
        synth_bundle = pl.run_synthesize(cfg, out_dir=out_dir,
                                         seed=args.seed)
        result = pl.run_sweep(cfg, synth_bundle["synth"].controller,
                              synth_bundle["reference"], out_dir=out_dir,
                              workers=args.workers)
    except pl.StageError as err:
        return _fail(err.stage, err.cause)
    ok = sum(1 for c in result["cells"] if c.status == "ok")
    print(json.dumps({"status": "ok", "cells": len(result["cells"]),
                      "cells_ok": ok,
                      "artifacts": result["artifacts"]}, sort_keys=True))
    return 0


def cmd_pipeline(args):
    cfg, out_root = _resolve(args)
    result = pl.run_pipeline(cfg, out_root=out_root, seed=args.seed,
                             workers=args.workers)
    if result.status != "ok":
        return _fail(result.stage, result.error)
    print(json.dumps({"status": "ok", "out_dir": result.out_dir,
                      "metrics": result.metrics}, sort_keys=True))
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="ssmcontrol",
        description="Slow-manifold model reduction and periodic feedback "
                    "controller synthesis")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in [("analyze", cmd_analyze), ("reduce", cmd_reduce),
                     ("synthesize", cmd_synthesize),
                     ("simulate", cmd_simulate), ("sweep", cmd_sweep),
                     ("pipeline", cmd_pipeline)]:
        p = sub.add_parser(name)
        _common(p)
        p.set_defaults(fn=fn)
    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
