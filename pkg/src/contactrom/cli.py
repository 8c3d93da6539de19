import argparse
import os
import sys

from .lib import logger
from .lib.errors import NumericalFailure, UsageError
from .lib.logger import debug, error, log
from .version import __description__, __name__, __version__

CONFIG_NAMESPACE = "CFG:"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_ACCEPTANCE = 3


def _gen_config_header(path):
    return bytes(
        "from contactrom.config_api import *;"
        f"__config__ = {str(path)!r};\n",
        "utf-8",
    )


def eval_config(path):
    """Load a config file: TOML and JSON are parsed, Python is executed."""
    from .config_api import load_config

    if not str(path).endswith(".py"):
        load_config(path)
        return
    with open(path, "rb") as file:
        header = _gen_config_header(path)
        config_code = header + file.read()
        # the config is Python code, run with the config API in scope
        exec(  # nosec
            compile(config_code, f"{CONFIG_NAMESPACE}{path}", "exec"), {}
        )


def print_config_traceback():
    import traceback

    cls, desc, tb = sys.exc_info()

    print("\nTraceback (while executing your config):")
    for frame in traceback.extract_tb(tb):
        if "contactrom/cli" in frame.filename:
            continue

        file = frame.filename.replace(CONFIG_NAMESPACE, "")
        print(f'  File "{file}", line {frame.lineno}, in {frame.name}')
        if frame.line:
            print(frame.line)
    print(f"{cls.__name__}: {desc}")


def check_is_config_good(filename):
    config_good = False
    try:
        eval_config(filename)
        log(f"CONFIG: {filename} is a valid study")
        config_good = True
    except BaseException:
        error(f"CONFIG: {filename} could not be evaluated")
        print_config_traceback()

    return config_good


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _default_config():
    from appdirs import user_config_dir

    path = user_config_dir("contactrom/config.toml")
    return path if os.path.exists(path) else None


def _build_parser():
    parser = _Parser(prog="contactrom", description=__description__)
    parser.add_argument(
        "-v", dest="verbose", action="store_true", help="increase debug logging"
    )
    parser.add_argument(
        "--flush",
        dest="flush",
        action="store_true",
        help="immediately flush all log output",
    )
    parser.add_argument(
        "--version", dest="show_version", action="store_true", help=""
    )
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    run = sub.add_parser("run", help="run a study stage")
    run.add_argument(
        "-c",
        "--config",
        dest="config",
        metavar="config.toml",
        type=str,
        default=None,
        help="study configuration (.toml, .json or .py)",
    )
    run.add_argument(
        "--check",
        dest="check_config",
        action="store_true",
        help="evaluate the config file and report errors",
    )
    run.add_argument("--problem", help="hertz, ironing, ironing2p or rope")
    run.add_argument("--stage", help="offline, online, full, chls or tau")
    run.add_argument("--design", help="training design, e.g. uniform:12")
    run.add_argument("--validation", help="query design, e.g. midpoints:120")
    run.add_argument("--delta", type=float, help="primal truncation tolerance")
    run.add_argument("--tau", type=float, help="projected penetration slack")
    run.add_argument("--k-max", dest="k_max", type=int)
    run.add_argument("--conv-tol", dest="conv_tol", type=float)
    run.add_argument("--hf-tol", dest="hf_tol", type=float)
    run.add_argument("--seed", type=int)
    run.add_argument("--output-dir", dest="output_dir")
    run.add_argument("--model", dest="model_path")
    run.add_argument("--workers", type=int)
    run.add_argument(
        "--warm-pairing",
        dest="warm_pairing",
        action="store_const",
        const=True,
        help="pair at the unconstrained reduced solution first",
    )
    run.add_argument("--delta-b", dest="delta_B", type=float)
    run.add_argument("--sketch-size", dest="sketch_size", type=int)

    compare = sub.add_parser("compare", help="compare two reports")
    compare.add_argument("report_a", help="baseline report (dir or json)")
    compare.add_argument("report_b", help="report under test")
    compare.add_argument(
        "--thresholds",
        dest="thresholds",
        default=None,
        help="config file whose thresholds apply to report_b",
    )
    return parser


_FLAGS = (
    "problem",
    "stage",
    "design",
    "validation",
    "delta",
    "tau",
    "k_max",
    "conv_tol",
    "hf_tol",
    "seed",
    "output_dir",
    "model_path",
    "workers",
    "warm_pairing",
    "delta_B",
    "sketch_size",
)


def _run(args):
    from .bench import run
    from .config_api import get_configuration

    path = args.config or _default_config()
    if args.check_config:
        if path is None:
            error("CONFIG: no config file given")
            return EXIT_USAGE
        return EXIT_OK if check_is_config_good(path) else EXIT_USAGE

    if path is not None:
        debug(f"CONFIG: {path}")
        try:
            eval_config(path)
        except (UsageError, NumericalFailure):
            raise
        except BaseException:
            print_config_traceback()
            return EXIT_USAGE

    config = get_configuration(**{k: getattr(args, k) for k in _FLAGS})
    summary = run(config)
    if not summary["acceptance"]["passed"]:
        return EXIT_ACCEPTANCE
    return EXIT_OK


def _compare(args):
    from .bench import compare_tables, print_table
    from .config_api import get_configuration

    limits = None
    if args.thresholds:
        eval_config(args.thresholds)
        limits = get_configuration().thresholds
    rows, failures = compare_tables(args.report_a, args.report_b, limits)
    print_table(rows, failures)
    return EXIT_ACCEPTANCE if failures else EXIT_OK


def main(argv=None):
    try:
        args = _build_parser().parse_args(argv)
    except UsageError as e:
        error(f"USAGE: {e}")
        return EXIT_USAGE

    if args.show_version:
        print(f"{__name__} v{__version__}")
        return EXIT_OK

    if args.verbose:
        logger.VERBOSE = True

    if args.flush:
        logger.FLUSH = True

    if args.command is None:
        error("USAGE: expected a command, 'run' or 'compare'")
        return EXIT_USAGE

    try:
        if args.command == "run":
            return _run(args)
        return _compare(args)
    except UsageError as e:
        error(f"USAGE: {e}")
        return EXIT_USAGE
    except NumericalFailure as e:
        error(f"NUMERICS: {e}")
        return EXIT_NUMERICAL
