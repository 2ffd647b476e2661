"""Command line: ``lcrm simulate <config>`` and ``lcrm bench <name>``."""

import argparse
import logging
import sys
from pathlib import Path

from . import kernels
from .config import load_config
from .errors import ConfigError, LcrmError

log = logging.getLogger("lcrm")


def _parse_set(items):
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep or "." not in key:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        out[key.strip()] = val.strip()
    return out


def cmd_simulate(args):
    from .simulation import run

    cfg = load_config(args.config)
    if args.deterministic:
        cfg.run.deterministic = True
    out = Path(args.out) if args.out else Path(cfg.run.output_dir)
    state, report = run(cfg, out_dir=out)
    print(f"{state.step} steps to t={state.time:.6g} in {report['wall_time_s']:.1f} s "
          f"({report['backend']} kernels); outputs in {out}")
    return 0


def cmd_bench(args):
    from .harness.benchmarks import SCENARIOS, list_benchmarks, run_benchmark

    if args.list or not args.name:
        for name, desc, res, longrun in list_benchmarks():
            tag = " [long-running]" if longrun else ""
            print(f"{name:18s} res={','.join(map(str, res)):10s} {desc}{tag}")
        return 0
    if args.name not in SCENARIOS:
        raise ConfigError(f"unknown benchmark {args.name!r}; valid: {', '.join(SCENARIOS)}")
    out = Path(args.out) if args.out else Path("bench") / args.name
    rep = run_benchmark(args.name, args.res, _parse_set(args.set), out, args.deterministic)
    for n in rep.resolutions:
        print(f"{args.name} res={n}: {rep.metric} = {rep.value[n]!r}")
    if rep.orders:
        print("observed orders: " + ", ".join(f"{o:.3f}" for o in rep.orders))
    print(f"{'PASS' if rep.passed else 'FAIL'} ({rep.tolerance}); report in {out}")
    return 0 if rep.passed else 1


def build_parser():
    p = argparse.ArgumentParser(prog="lcrm", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a configuration file")
    s.add_argument("config", help="INI file with [grid] [fluids] [surfactant] [tension] [run]")
    s.add_argument("--out", help="output directory (default: [run] output_dir)")
    s.add_argument("--deterministic", action="store_true", help="fixed reduction order")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bench", help="run a benchmark scenario")
    b.add_argument("name", nargs="?", help="scenario name (see --list)")
    b.add_argument("--list", action="store_true", help="list scenarios and exit")
    b.add_argument("--res", type=int, nargs="+", help="cells along x, one run per value")
    b.add_argument("--deterministic", action="store_true", help="fixed reduction order")
    b.add_argument("--out", help="output directory (default: bench/<name>)")
    b.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override a config value")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    log.info("kernel backend: %s, workers: %d", kernels.BACKEND_NAME, kernels.worker_count())
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"lcrm: configuration error: {exc}", file=sys.stderr)
        return 2
    except LcrmError as exc:
        print(f"lcrm: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
