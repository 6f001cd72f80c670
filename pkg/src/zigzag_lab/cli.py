"""Command line entry point: ``zigzag-lab run | verify | list``."""

import argparse
import sys

from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, load_config, run_experiment

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


def _overrides(extra):
    """``['--replicates', '100', '--nu=1,2']`` -> ``{'replicates': '100', 'nu': '1,2'}``."""
    out = {}
    it = iter(extra)
    for tok in it:
        if not tok.startswith("--") or len(tok) <= 2:
            raise ConfigError(f"unexpected argument {tok!r}")
        key, eq, val = tok[2:].partition("=")
        if not eq:
            try:
                val = next(it)
            except StopIteration:
                raise ConfigError(f"missing value for --{key}") from None
        out[key.replace("-", "_")] = val
    return out


def _parser():
    ap = argparse.ArgumentParser(prog="zigzag-lab", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a configured experiment")
    run.add_argument("--config", help="key = value configuration file")
    ver = sub.add_parser("verify", help="run the acceptance suite")
    ver.add_argument("--profile", choices=("quick", "full"), default="full")
    sub.add_parser("list", help="list experiment names")
    return ap


def _run(args, extra) -> int:
    try:
        over = _overrides(extra)
        if args.config:
            cfg = load_config(args.config, over)
        else:
            cfg = ExperimentConfig.from_mapping(over)
    except ConfigError as exc:
        print(f"zigzag-lab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"zigzag-lab: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        manifest = run_experiment(cfg)
    except OSError as exc:
        print(f"zigzag-lab: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {manifest}")
    return EXIT_OK


def main(argv=None) -> int:
    ap = _parser()
    args, extra = ap.parse_known_args(argv)
    if args.command == "run":
        return _run(args, extra)
    if extra:
        ap.error(f"unrecognized arguments: {' '.join(extra)}")
    if args.command == "list":
        for name in EXPERIMENTS:
            print(name)
        return EXIT_OK
    from .acceptance import verify_all
    results = verify_all(args.profile)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
