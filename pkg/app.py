import argparse
import logging
import sys
from typing import List, Optional

from commands.selftest import cmd_selftest
from commands.sweep import cmd_sweep
from commands.timeseries import cmd_timeseries
from utils.config_manager import TOOL_NAME, TOOL_VERSION, ConfigManager
from utils.errors import ConfigError, PreconditionError

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

logger = logging.getLogger(TOOL_NAME)


# PARSER SETUP
def _add_physics_flags(parser: argparse.ArgumentParser):
    S = argparse.SUPPRESS
    group = parser.add_argument_group("physical parameters (units of Q)")
    group.add_argument("--spin", default=S, help="spin quantum number, e.g. 3 or 5/2")
    group.add_argument("--Q", dest="Q", type=float, default=S, help="quadrupole coupling (default 1)")
    group.add_argument("--B0", dest="B0", type=float, default=S, help="static field")
    group.add_argument("--B1", dest="B1", type=float, default=S, help="drive amplitude")
    group.add_argument("--omega", type=float, default=S, help="drive angular frequency")

    group = parser.add_argument_group("methods and sampling")
    group.add_argument("--methods", default=S, help="comma-separated: exact,rwa-zeeman,rwa-reduced,rwa-full,chrw")
    group.add_argument("--samples", type=int, default=S, help="samples per trace (default 1000)")
    group.add_argument("--initial", default=S, help="'M=<m>' or 'x' (default M=0)")
    group.add_argument("--m-target", dest="m_target", default=S, help="pin the reduced block's upper level M")
    group.add_argument("--xi", default=S, help="force the CHRW xi instead of solving for it")

    group = parser.add_argument_group("exact solver")
    group.add_argument("--dt", default=S, help="RK4 step (default (2 pi / omega_max) / 200)")
    group.add_argument("--renorm-interval", dest="renorm_interval", type=int, default=S)
    group.add_argument("--no-renormalize", dest="no_renormalize", action="store_true", default=S)
    group.add_argument("--allow-large-dt", dest="allow_large_dt", action="store_true", default=S)

    parser.add_argument("--out", default=S, help="output prefix; writes <out>.csv and <out>.manifest.json")
    parser.add_argument("--config", dest="config_path", default=None, help="JSON file of settings")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=TOOL_NAME,
        description="Exact and rotating-wave propagators for a driven quadrupolar spin, with fidelity benchmarks.",
    )
    parser.add_argument("--version", action="version", version=f"{TOOL_NAME} {TOOL_VERSION}")
    parser.add_argument("--log-level", dest="log_level", default=None,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], type=str.upper)
    sub = parser.add_subparsers(dest="command", required=True)

    ts = sub.add_parser("timeseries", help="fidelity versus time for each method")
    _add_physics_flags(ts)
    ts.add_argument("--t-max-pi", dest="t_max_pi", type=float, default=argparse.SUPPRESS,
                    help="trace length in units of T_pi (default 20)")

    sw = sub.add_parser("sweep", help="window-averaged fidelity versus omega or B1")
    _add_physics_flags(sw)
    sw.add_argument("--vary", choices=ConfigManager.VARY_CHOICES, default=argparse.SUPPRESS)
    sw.add_argument("--from", dest="from", type=float, default=argparse.SUPPRESS)
    sw.add_argument("--to", type=float, default=argparse.SUPPRESS)
    sw.add_argument("--points", type=int, default=argparse.SUPPRESS)
    sw.add_argument("--metric", choices=ConfigManager.METRIC_CHOICES, default=argparse.SUPPRESS)
    sw.add_argument("--window-pi", dest="window_pi", type=float, default=argparse.SUPPRESS,
                    help="averaging window in units of T_pi (default 20)")
    sw.add_argument("--parallel", type=int, default=argparse.SUPPRESS, help="worker processes")

    st = sub.add_parser("selftest", help="run the invariant suites")
    st.add_argument("--quick", action="store_true", help="subset suite")
    st.add_argument("--seed", type=int, default=0)
    return parser


def setup_logging(level: Optional[str]):
    logging.basicConfig(
        level=getattr(logging, (level or ConfigManager.default_log_level()).upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )


# COMMAND DISPATCH
def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    setup_logging(args.log_level)

    if args.command == "selftest":
        return cmd_selftest(seed=args.seed, quick=args.quick)

    flags = {k: v for k, v in vars(args).items() if k not in ("command", "log_level", "config_path")}
    try:
        config = ConfigManager.resolve(flags, args.config_path)
        runner = cmd_timeseries if args.command == "timeseries" else cmd_sweep
        return runner(config)
    except (ConfigError, PreconditionError) as e:
        logger.error(f"Invalid input: {e}")
        return EXIT_USAGE
    except Exception as e:
        logger.exception(f"{args.command} failed: {e}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
