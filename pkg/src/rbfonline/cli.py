"""``rbfonline`` command line: run, synth, validate, report, checkpoint.

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 runtime error.
Diagnostics go to stderr; results go to files (and short summaries to stdout).
"""
import argparse
import json
import logging
import os
import platform
import sys

import numpy as np

from . import __version__, checkpoint, data
from ._backend import BACKEND
from .config import ExperimentConfig, apply_overrides, dump_config, load_config
from .errors import (ConfigError, DataError, DomainError, InputFormatError, RbfOnlineError,
                     ValidationError)
from .evaluation import emit_report, evaluate
from .featsel import write_selections
from .pipeline import fit_model, prepare, run_experiment
from .records import read_log, write_log

logger = logging.getLogger("rbfonline")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _add_config_flags(p, seed_help="experiment seed"):
    p.add_argument("--config", help="config file (key = value lines)")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key; repeatable")
    p.add_argument("--seed", type=int, help=seed_help)


def build_parser():
    parser = _Parser(prog="rbfonline", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run an experiment and write its report")
    _add_config_flags(p)
    p.add_argument("--out", default="run", help="output directory")
    p.add_argument("--threads", type=int)
    p.add_argument("--rw-mode", choices=("last_value", "zero"))

    p = sub.add_parser("synth", help="write a synthetic price CSV")
    _add_config_flags(p, "generator seed (synth.seed)")
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("validate", help="check a price CSV")
    p.add_argument("path")

    p = sub.add_parser("report", help="re-render a report from a forecast log")
    p.add_argument("--log", required=True, help="forecasts.csv written by 'run'")
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--models", help="comma-separated models to report (default: all in log)")

    p = sub.add_parser("checkpoint", help="fit the model bank on the training split and save it,"
                                          " or inspect a saved checkpoint")
    _add_config_flags(p)
    p.add_argument("--out", help="checkpoint directory")
    p.add_argument("--inspect", help="print a summary of one checkpoint file")
    return parser


def _effective_config(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    apply_overrides(cfg, args.overrides)
    if args.seed is not None:
        cfg.seed = args.seed
    if getattr(args, "threads", None) is not None:
        cfg.threads = args.threads
    if getattr(args, "rw_mode", None) is not None:
        cfg.rw_mode = args.rw_mode
    return cfg.validate()


def _versions():
    import scipy

    try:
        import numba
        numba_version = numba.__version__
    except ImportError:
        numba_version = None
    return {"rbfonline": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "numba": numba_version,
            "backend": BACKEND}


def cmd_run(args):
    cfg = _effective_config(args)
    text = dump_config(cfg)
    logger.info("effective config:\n%s", text)
    result = run_experiment(cfg)
    out = args.out
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "effective_config.cfg"), "w") as fh:
        fh.write(text)
    emit_report(result.report, os.path.join(out, "report"))
    write_log(result.cells, os.path.join(out, "forecasts.csv"))
    write_selections([s for s in result.selections.values() if s is not None],
                     os.path.join(out, "feature_selection.tsv"))
    manifest = {"seed": cfg.seed, "config_file": "effective_config.cfg", "argv": sys.argv[1:],
                "versions": _versions(), "timings_s": result.timings,
                "rows": result.n_rows, "train_rows": result.boundary,
                "failed_cells": sum(1 for c in result.cells if c.error)}
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    for m in cfg.models:
        s = result.report.summary_nmse[m]
        print(f"{m}: mean nmse {s['mean']:.4g} over {s['count']} cells")
    return EXIT_OK


def cmd_synth(args):
    cfg = _effective_config(args)
    if args.seed is not None:
        cfg.synth.seed = args.seed
    cfg.data.path = ""
    from .pipeline import load_panel

    panel = load_panel(cfg)
    data.write_csv(panel, args.out)
    print(f"wrote {panel.n_rows} rows x {len(panel.instruments)} instruments to {args.out}")
    return EXIT_OK


def cmd_validate(args):
    if not os.path.exists(args.path):
        print(f"data file not found: {args.path}", file=sys.stderr)
        return EXIT_DATA
    problems = data.check_csv(args.path)
    if problems:
        for msg in problems:
            print(msg)
        return EXIT_DATA
    print("ok")
    return EXIT_OK


def cmd_report(args):
    cells = read_log(args.log)
    models = args.models.split(",") if args.models else None
    report = evaluate(cells, models=models)
    for path in emit_report(report, args.out):
        print(path)
    return EXIT_OK


def cmd_checkpoint(args):
    if args.inspect:
        obj = checkpoint.load(args.inspect)
        d = obj.to_dict()
        print(f"kind: {checkpoint._kind(obj)}")
        for key in ("target_id", "horizon"):
            if key in d:
                print(f"{key}: {d[key]}")
        if "prototypes" in d and d["prototypes"] is not None:
            print(f"prototypes: k={len(d['prototypes']['means'])}")
        if d.get("head"):
            print(f"head: dim={len(d['head']['theta'])} updates={d['head']['n_updates']}")
        return EXIT_OK
    if not args.out:
        raise ConfigError("checkpoint needs --out (or --inspect FILE)")
    cfg = _effective_config(args)
    prep = prepare(cfg)
    os.makedirs(args.out, exist_ok=True)
    n = 0
    for tgt in prep.targets:
        for m in cfg.models:
            if m == "rw":
                continue
            for h in cfg.horizons:
                model = fit_model(m, prep, tgt, h, cfg)
                checkpoint.save(model, os.path.join(args.out, f"{tgt}__{m}__h{h}.json"))
                n += 1
    print(f"wrote {n} checkpoints to {args.out}")
    return EXIT_OK


_COMMANDS = {"run": cmd_run, "synth": cmd_synth, "validate": cmd_validate,
             "report": cmd_report, "checkpoint": cmd_checkpoint}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return _COMMANDS[args.verb](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"file not found: {exc.filename}", file=sys.stderr)
        return EXIT_DATA
    except (InputFormatError, ValidationError, DomainError, DataError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (RbfOnlineError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
