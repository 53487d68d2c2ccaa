"""Command line: collocate {convergence,structure,crane,bench}.

Exit codes: 0 success, 1 acceptance failure, 2 usage error.
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from .harness import EXIT_USAGE, ExperimentConfig, ExperimentHarness

logger = logging.getLogger(__name__)


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _global_options(suppress: bool) -> argparse.ArgumentParser:
    # subcommands repeat the global flags without overwriting values given before them
    default = argparse.SUPPRESS if suppress else None
    options = argparse.ArgumentParser(add_help=False, argument_default=default)
    options.add_argument("--seed", type=int, help="64-bit seed of the instance sampler")
    options.add_argument("--output", "-o", help="output file (default: stdout)")
    options.add_argument("--config", help="JSON experiment configuration")
    options.add_argument("--n-instances", type=int, help="number of sampled crane instances")
    verbosity = argparse.SUPPRESS if suppress else 0
    options.add_argument("--verbose", "-v", action="count", default=verbosity, help="-v for INFO, -vv for DEBUG")
    return options


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="collocate", description="Direct collocation experiments", parents=[_global_options(False)]
    )
    common = [_global_options(True)]
    sub = parser.add_subparsers(dest="command", required=True)

    conv = sub.add_parser("convergence", parents=common, help="convergence study on q'' + q = cos t")
    conv.add_argument("--d", type=_int_list, default=[2])
    conv.add_argument("--family", type=_str_list, default=["gauss"])
    conv.add_argument("--N", type=_int_list, default=[10, 20, 40, 80, 160])
    conv.add_argument("--sampling", choices=("grid", "dense"), default="grid")

    struct = sub.add_parser("structure", parents=common, help="structural counts of a crane transcription")
    struct.add_argument("--N", type=int, default=20)
    struct.add_argument("--d", type=int, default=2)
    struct.add_argument("--method", choices=("sc", "pc"), default="sc")
    struct.add_argument("--family", default="gauss")
    struct.add_argument("--beta0", action="store_true", help="friction-less crane (velocity-independent)")

    batches = {
        "crane": "crane batch: per-instance results and geometric means",
        "bench": "crane batch as Pareto scatter points",
    }
    for name, text in batches.items():
        batch = sub.add_parser(name, parents=common, help=text)
        batch.add_argument("--iteration-logs", default=None, help="directory for one solver iteration log per solve")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    overrides = {"seed": args.seed, "n_instances": args.n_instances}
    if args.config:
        return ExperimentConfig.from_file(args.config, **overrides)
    return ExperimentConfig.from_document({}, **overrides)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)

    try:
        config = load_config(args)
    except (ValidationError, OSError, ValueError) as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_USAGE

    params = {key: value for key, value in vars(args).items() if key not in ("command", "config", "verbose")}
    result = ExperimentHarness(config).execute(args.command, params)

    # CSV commands print their table on stdout when no output file is given
    if args.command == "structure" or args.output is not None:
        if args.command == "structure" and args.output is not None:
            with open(args.output, "w") as fh:
                json.dump(result.data, fh, indent=2)
                fh.write("\n")
        else:
            print(json.dumps(result.data if args.command == "structure" else result.to_wire(), indent=2))
    if not result:
        logger.error(result.error)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
