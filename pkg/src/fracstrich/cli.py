"""Command line harness: ``fracstrich <subcommand> --config <path> [--threads N] [--out DIR]``.

Each run writes three files into the output directory:

* ``manifest.json``: the fully resolved config, the package version, the thread cap and
  the definition (with hash) of the dyadic cutoff;
* ``results.csv``: one row per measurement, floats in shortest round-trip form;
* ``summary.json``: fitted quantities plus an ``acceptance`` block keyed by criterion.

Passing a ``manifest.json`` back as ``--config`` repeats the run exactly.
Exit status: 0 success, 1 acceptance failure, 2 bad config, 3 resolution
error, 4 hypothesis violation.
"""

import argparse
import csv
import inspect
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, config
from .errors import ConfigError, FracstrichError
from .propagator import CUTOFF_DEFINITION, CUTOFF_HASH


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (dict, list, tuple)):
        return json.dumps(_plain(v), sort_keys=True)
    return str(v)


def _plain(v):
    """JSON-ready copy: numpy scalars unwrapped, non-finite floats as strings."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_plain(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    return v


def write_csv(path, rows):
    cols = []
    for r in rows:
        cols.extend(k for k in r if k not in cols)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_cell(r.get(c)) for c in cols])


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_plain(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def default_toml(subcommand):
    """The default config of a subcommand as TOML text."""
    lines = [f'subcommand = "{subcommand}"']
    for k, v in config.schema(subcommand).items():
        if isinstance(v, bool):
            lines.append(f"{k} = {str(v).lower()}")
        elif isinstance(v, tuple):
            lines.append(f"{k} = [{', '.join(repr(x) for x in v)}]")
        else:
            lines.append(f"{k} = {v!r}")
    return "\n".join(lines) + "\n"


def run(subcommand, cfg, out, threads=1):
    """Run one subcommand with a resolved config; returns the suite result."""
    fn = config.SUBCOMMANDS[subcommand]
    kwargs = dict(cfg)
    if "threads" in inspect.signature(fn).parameters:
        kwargs["threads"] = threads
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "manifest.json", {"subcommand": subcommand, "version": __version__,
                                       "config": config.to_jsonable(cfg), "threads": threads,
                                       "cutoff": {"definition": CUTOFF_DEFINITION, "sha256": CUTOFF_HASH}})
    res = fn(**kwargs)
    write_csv(out / "results.csv", res.rows)
    write_json(out / "summary.json", {"subcommand": subcommand, "version": __version__, "summary": res.summary,
                                      "acceptance": res.acceptance(), "pass": res.passed,
                                      "seconds": res.seconds})
    return res


def _threads(arg):
    if arg is not None:
        return arg
    env = os.environ.get("FRACSTRICH_THREADS")
    if env is None:
        return 1
    try:
        val = int(env)
    except ValueError:
        raise ConfigError(f"FRACSTRICH_THREADS must be an integer, got {env!r}") from None
    return val


def build_parser():
    ap = argparse.ArgumentParser(prog="fracstrich", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"fracstrich {__version__}")
    sub = ap.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")
    for name, fn in config.SUBCOMMANDS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or "").strip().split("\n")[0])
        p.add_argument("--config", help="TOML/JSON config or a previous manifest.json (default: built-in)")
        p.add_argument("--threads", type=int, help="worker cap (default: $FRACSTRICH_THREADS or 1)")
        p.add_argument("--out", help="output directory (default: runs/<subcommand>)")
        p.add_argument("--print-config", action="store_true", help="print the default config and exit")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    name = args.subcommand
    if args.print_config:
        sys.stdout.write(default_toml(name))
        return 0
    try:
        threads = _threads(args.threads)
        if threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = config.load(args.config, name)[0] if args.config else config.resolve(name, {})
        out = args.out or os.path.join("runs", name)
        res = run(name, cfg, out, threads)
    except FracstrichError as exc:
        print(f"fracstrich {name}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        # parameters that pass the schema but not the library's own validation
        print(f"fracstrich {name}: invalid parameters: {exc}", file=sys.stderr)
        return ConfigError.exit_code
    for crit, block in res.acceptance().items():
        print(f"criterion {crit}: {'PASS' if block['pass'] else 'FAIL'}")
        for c in block["checks"]:
            print(f"  {'ok  ' if c['pass'] else 'FAIL'} {c['name']}: {c['value']} (bound {c['bound']})")
    print(f"wrote {out} in {res.seconds:.1f} s")
    return 0 if res.passed else 1


if __name__ == "__main__":
    sys.exit(main())
