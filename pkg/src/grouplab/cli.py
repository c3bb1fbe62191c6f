"""Command-line entry point: ``grouplab <subcommand> [flags]``.

Exit codes: 0 when every checked cell passes, 1 when any bound fails, 2 on
usage or configuration errors.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import experiments as ex
from .errors import ConfigError, GroupLabError
from .sampling import normalize_family

SUBCOMMANDS = ("haar-check", "coupling", "dims", "laplacian", "level-d", "mixing", "product-free",
               "doubling", "repr-audit", "all")
ALL_ORDER = ("haar-check", "coupling", "level-d", "product-free", "mixing", "doubling", "repr-audit")
SEED_ENV = "GROUPLAB_SEED"


@dataclass
class RunConfig:
    subcommand: str
    family: str | None = None
    n: int | None = None
    seed: int = 0
    samples: int | None = None
    jobs: int | None = None
    dmax: int | None = None
    full: bool = False
    out: str | None = None
    csv: str | None = None
    config: str | None = None
    sections: dict = field(default_factory=dict)

    def echo(self) -> dict:
        """Settings that determine the report; paths and job counts are left out."""
        return {
            "subcommand": self.subcommand, "family": self.family, "n": self.n, "seed": self.seed,
            "samples": self.samples, "dmax": self.dmax, "full": self.full, "file": self.sections,
        }

    def default_out(self) -> str:
        return f"grouplab-{self.subcommand}.json"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--family", help="group family: so, su, sp or spin")
    common.add_argument("--n", type=int, help="group rank parameter")
    common.add_argument("--seed", type=int, help=f"master seed (fallback: ${SEED_ENV}, then 0)")
    common.add_argument("--samples", type=int, help="override every sample count of the experiment")
    common.add_argument("--jobs", type=int, help="concurrent grid cells (default: all cores)")
    common.add_argument("--out", help="JSON report path (default: grouplab-<subcommand>.json)")
    common.add_argument("--csv", help="also write per-cell CSV here")
    common.add_argument("--config", help="INI file with [run] and per-experiment sections")
    common.add_argument("--dmax", type=int, help="maximal level for dims / laplacian")
    common.add_argument("--full", action="store_true",
                        help="for 'all': run every experiment at its acceptance settings")
    parser = argparse.ArgumentParser(prog="grouplab", description="Compact-group experiments.")
    sub = parser.add_subparsers(dest="subcommand", metavar="subcommand")
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=f"run {name}")
    return parser


def _read_file(path: str) -> dict:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return {s: dict(cp[s]) for s in cp.sections()}


def resolve(args: argparse.Namespace) -> RunConfig:
    sections = _read_file(args.config) if args.config else {}
    run = dict(sections.get("run", {}))
    unknown = set(run) - {"family", "n", "seed", "samples", "jobs", "dmax", "full"}
    if unknown:
        raise ConfigError(f"unknown [run] keys: {sorted(unknown)}")

    def pick(name, cast):
        val = getattr(args, name)
        if val is not None and val is not False:
            return val
        if name in run:
            try:
                return cast(run[name])
            except ValueError as exc:
                raise ConfigError(f"bad [run] value for {name}") from exc
        return None

    seed = pick("seed", int)
    if seed is None:
        env = os.environ.get(SEED_ENV)
        try:
            seed = int(env) if env else 0
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV} must be an integer") from exc
    family = pick("family", str)
    if family is not None:
        try:
            family = normalize_family(family)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    full = args.full or run.get("full", "").lower() in ("1", "true", "yes")
    return RunConfig(args.subcommand, family, pick("n", int), seed, pick("samples", int),
                     pick("jobs", int), pick("dmax", int), full, args.out, args.csv, args.config,
                     {k: v for k, v in sections.items() if k != "run"})


def _group_overrides(rc: RunConfig, experiment: str) -> dict:
    """Translate --family / --n / --dmax into experiment parameters."""
    p: dict = {}
    so_only = ("coupling", "level-d", "mixing", "doubling", "product-free")
    if rc.family is not None and experiment in so_only and rc.family != "SO":
        raise ConfigError(f"{experiment} runs on SO(n) only")
    if experiment == "repr-audit":
        return p
    if experiment in ("haar-check", "dims") and rc.family is not None:
        p["family"] = rc.family
    if experiment == "laplacian" and rc.family is not None:
        p["families"] = (rc.family,)
    if rc.n is not None:
        p["ns" if experiment == "product-free" else "n"] = (rc.n,) if experiment == "product-free" else rc.n
    if rc.dmax is not None and experiment in ("dims", "laplacian"):
        p["dmax"] = rc.dmax
    return p


def _experiment_config(rc: RunConfig, experiment: str, quick: bool):
    params = dict(rc.sections.get(experiment, {}))
    params.update(_group_overrides(rc, experiment))
    return ex.make_config(experiment, params, rc.samples, quick=quick)


def execute(rc: RunConfig) -> tuple[dict, list[ex.ExperimentReport], str]:
    """Run the subcommand; returns (JSON document, reports, stdout text)."""
    if rc.subcommand == "all":
        names, quick = ALL_ORDER, not rc.full
    else:
        names, quick = (rc.subcommand,), False
    cfgs = [(name, _experiment_config(rc, name, quick)) for name in names]
    reports = [ex.RUNNERS[name](cfg, seed=rc.seed, jobs=rc.jobs) for name, cfg in cfgs]
    if rc.subcommand == "dims":
        text = ex.dims_csv(cfgs[0][1])
    elif rc.subcommand == "laplacian":
        text = ex.laplacian_csv(cfgs[0][1])
    else:
        text = "\n\n".join(r.to_text() for r in reports) + "\n"
    doc = {
        "schema": ex.SCHEMA,
        "command": rc.subcommand,
        "config": rc.echo(),
        "verdict": "pass" if all(r.passed for r in reports) else "fail",
        "reports": [r.to_dict() for r in reports],
    }
    return doc, reports, text


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.subcommand is None:
        parser.print_help(sys.stderr)
        return 2
    try:
        rc = resolve(args)
        doc, reports, text = execute(rc)
    except (GroupLabError, ValueError) as exc:
        print(f"grouplab: configuration error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(text)
    out = Path(rc.out or rc.default_out())
    out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    if rc.csv:
        Path(rc.csv).write_text("".join(
            r.to_csv() if i == 0 else r.to_csv().split("\n", 1)[1] for i, r in enumerate(reports)))
    return 0 if doc["verdict"] == "pass" else 1


if __name__ == "__main__":
    sys.exit(main())
