"""Command-line entry point: ``paretoarch <command> [options]``.

Exit codes: 0 success, 2 configuration/usage error, 3 data error,
4 a requested rediscovery is infeasible.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

from . import config as config_mod
from .arch_space import ArchSpaceError, enumerate_space
from .config import ConfigError, RunConfig
from .data import DataError, make_windows, read_series, split, synthetic_series, write_series
from .lp import Status
from .pareto import EmptyInput, KeyNotInFront, ParetoError, UncertifiedPreference
from .prefs import PreferenceError, check_monotone, resolve
from .report import (
    build_report,
    certificate_line,
    discovery_rows,
    format_table,
    front_rows,
    rediscovery_rows,
    write_report,
)
from .store import RecordStore, StoreCorrupt
from .trainer import DivergedTraining, run_space

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INFEASIBLE = 0, 2, 3, 4

log = logging.getLogger("paretoarch")


def _build_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig.from_dict({})
    if getattr(args, "grid", None):
        cfg.space = config_mod.builtin_space(args.grid)
    if args.store:
        cfg.store = str(Path(args.store).resolve())
    if args.out:
        cfg.out = str(Path(args.out).resolve())
    if args.jobs is not None:
        cfg.jobs = args.jobs
    if args.seed is not None:
        cfg.train = {**cfg.train, "seed": args.seed}
        cfg.train_config()
    if getattr(args, "pref", None):
        cfg.preferences = list(args.pref)
    if getattr(args, "target", None):
        cfg.targets = list(args.target)
    return cfg


def _load_dataset(cfg: RunConfig):
    ds = cfg.dataset
    if ds.path:
        values = read_series(cfg.resolve(ds.path), column=ds.column)
        name = ds.name or Path(ds.path).stem
    else:
        values = synthetic_series(**ds.synthetic)
        name = ds.name or "synthetic"
    if ds.prefix:
        values = values[: ds.prefix]
    space = cfg.search_space()
    if len(space.lookbacks) != 1:
        raise ConfigError("`run` needs exactly one lookback per invocation; split multi-lookback grids into runs")
    windows = make_windows(values, space.lookbacks[0], space.horizon, ds.shift, ds.dt, name=name)
    sp = ds.split
    return split(windows, sp["fraction"], sp["mode"], sp.get("seed", 0))


def _records(cfg: RunConfig):
    store = RecordStore(cfg.store_path)
    records = store.load()
    if not records:
        raise EmptyInput(f"record store {store.path} is empty; run `paretoarch run` first")
    return records


# -- commands -------------------------------------------------------------

def cmd_enumerate(args, cfg: RunConfig) -> int:
    space = cfg.search_space()
    specs = enumerate_space(space)
    print(len(specs))
    if args.verbose:
        print(f"raw product before deduplication: {space.raw_size()}", file=sys.stderr)
    listing = Path(args.listing) if args.listing else cfg.out_dir / "architectures.txt"
    listing.parent.mkdir(parents=True, exist_ok=True)
    listing.write_text("".join(s.key + "\n" for s in specs))
    return EXIT_OK


def cmd_synth(args, cfg: RunConfig) -> int:
    values = synthetic_series(**cfg.dataset.synthetic)
    path = Path(args.output) if args.output else cfg.out_dir / "synthetic.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_series(path, values, cfg.dataset.dt)
    print(path)
    return EXIT_OK


def cmd_run(args, cfg: RunConfig) -> int:
    dataset = _load_dataset(cfg)
    space = cfg.search_space()
    store = RecordStore(cfg.store_path)

    def progress(record, done, total):
        print(f"[{done}/{total}] {record.key} f1={record.f1:.5f} f2={record.f2:.3f}s f3={record.f3}", flush=True)

    new = run_space(space, dataset, cfg.train_config(), store, jobs=cfg.jobs, on_record=progress)
    print(f"{len(new)} new records in {store.path}")
    return EXIT_OK


def cmd_pareto(args, cfg: RunConfig) -> int:
    report = build_report(_records(cfg))
    print(format_table(front_rows(report)))
    return EXIT_OK


def _preferences(cfg: RunConfig):
    prefs = [resolve(p) for p in cfg.preferences]
    for p in prefs:
        rep = check_monotone(p)
        if not rep.is_nondecreasing:
            warnings.warn(
                f"preference {p.name!r} is not nondecreasing (terms {list(rep.offending_terms)}): "
                "the Pareto-front reduction is uncertified, evaluating over all records",
                UncertifiedPreference,
            )
    return prefs


def cmd_discover(args, cfg: RunConfig) -> int:
    report = build_report(_records(cfg), _preferences(cfg))
    print(format_table(discovery_rows(report)))
    return EXIT_OK


def cmd_rediscover(args, cfg: RunConfig) -> int:
    if not cfg.targets:
        raise ConfigError("rediscover needs at least one --target KEY")
    report = build_report(_records(cfg), targets=cfg.targets)
    print(format_table(rediscovery_rows(report)))
    for c in report.certificates:
        print(certificate_line(c), file=sys.stderr)
    return EXIT_INFEASIBLE if any(c.status is Status.INFEASIBLE for c in report.certificates) else EXIT_OK


def cmd_report(args, cfg: RunConfig) -> int:
    report = build_report(_records(cfg), _preferences(cfg), cfg.targets)
    paths = write_report(report, cfg.out_dir)
    print(paths["summary"].read_text())
    return EXIT_INFEASIBLE if any(c.status is Status.INFEASIBLE for c in report.certificates) else EXIT_OK


COMMANDS = {
    "enumerate": cmd_enumerate,
    "synth": cmd_synth,
    "run": cmd_run,
    "pareto": cmd_pareto,
    "discover": cmd_discover,
    "rediscover": cmd_rediscover,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML run configuration (schema below)")
    common.add_argument("--store", metavar="PATH", help="record store (overrides `store`)")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides `out`)")
    common.add_argument("--jobs", type=int, metavar="N", help="parallel training processes (overrides `jobs`)")
    common.add_argument("--seed", type=int, metavar="N", help="training seed (overrides `train.seed`)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="paretoarch",
        description="Enumerate, benchmark and select composite forecasting architectures.",
        epilog="Configuration schema:\n" + (config_mod.__doc__ or "").split("::", 1)[-1],
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("enumerate", parents=[common], help="count and list the architectures of a space")
    p.add_argument("--grid", choices=["app1", "app4"], help="use one of the built-in grids")
    p.add_argument("--listing", metavar="PATH", help="where to write the key listing")
    p = sub.add_parser("synth", parents=[common], help="write the configured synthetic series")
    p.add_argument("--output", metavar="PATH")
    sub.add_parser("run", parents=[common], help="train every architecture missing from the store")
    sub.add_parser("pareto", parents=[common], help="print the Pareto front")
    p = sub.add_parser("discover", parents=[common], help="best architecture per preference")
    p.add_argument("--pref", action="append", metavar="NAME|EXPR", help="p1..p10 or an inline expression")
    p = sub.add_parser("rediscover", parents=[common], help="weighted-sum weights certifying a front member")
    p.add_argument("--target", action="append", metavar="KEY")
    p = sub.add_parser("report", parents=[common], help="write front/discovery/rediscovery tables and plot data")
    p.add_argument("--pref", action="append", metavar="NAME|EXPR")
    p.add_argument("--target", action="append", metavar="KEY")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    warnings.simplefilter("always", UncertifiedPreference)
    warnings.showwarning = lambda msg, cat, *a, **k: print(f"warning: {msg}", file=sys.stderr)
    try:
        cfg = _build_config(args)
        return COMMANDS[args.command](args, cfg)
    except (ConfigError, ArchSpaceError, PreferenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, StoreCorrupt, KeyNotInFront, ParetoError, DivergedTraining, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
