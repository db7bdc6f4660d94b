import argparse
import sys

from .. import __version__
from ..common.config.run_config import LOG_LEVELS, read_config_file, resolve_config
from ..domain.adapter.hyperet_adapter import SPACES
from ..domain.exceptions.domain_exception import DomainException
from ..domain.exceptions.invalid_config import InvalidConfigException
from ..domain.exceptions.invalid_tensor_file import InvalidTensorFileException
from ..domain.exceptions.shape_mismatch import ShapeMismatchException
from ..domain.exceptions.training_diverged import TrainingDivergedException
from ..domain.geometry.poincare import set_ball_eps
from ..logging import log
from .commands import (EXIT_DIVERGED, EXIT_INVALID_CONFIG, EXIT_IO_ERROR, cmd_adjust, cmd_check_grad,
                       cmd_report, cmd_train, cmd_verify)

KIND_CHOICES = ["diagonal", "block", "banded", "dense"]

# flag dest -> RunConfig key
CONFIG_FLAGS = [
    "curvature", "kind", "block_size", "bandwidth", "scalar", "uniform", "space", "seed", "lr", "momentum",
    "max_steps", "targets_uniform", "bins", "samples", "step", "suites", "log_level",
]


def _shared_flags():
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", help="key=value file, overridden by flags")
    parser.add_argument("--curvature", type=float, help="ball curvature c > 0 (default 0.01)")
    parser.add_argument("--kind", choices=KIND_CHOICES, help="scaling matrix structure")
    parser.add_argument("--block-size", type=int, help="block size of the block kind")
    parser.add_argument("--bandwidth", type=int, help="bandwidth d of the banded kind")
    parser.add_argument("--scalar", type=float, help="use the scalar form with this scale")
    parser.add_argument("--uniform", type=float, help="initialize the scaling matrix to s * I")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--lr", type=float)
    parser.add_argument("--momentum", type=float)
    parser.add_argument("--max-steps", type=int)
    parser.add_argument("--targets-uniform", type=float, help="give every toy sample this target scale")
    parser.add_argument("--bins", type=int, help="radius histogram bins")
    parser.add_argument("--samples", type=int, help="gradient check cases per kind")
    parser.add_argument("--step", type=float, help="finite difference step")
    parser.add_argument("--suites", help="comma separated verify suites")
    parser.add_argument("--log-level", choices=LOG_LEVELS)
    return parser


def _weight_input_flags():
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("weights_in", help="input weight tensor file")
    parser.add_argument("--csv", action="store_true", help="read the input weights from a plain CSV")
    parser.add_argument("--scaling", help="scaling operator tensor file, e.g. written by train")
    parser.add_argument("--space", choices=SPACES,
                        help="mobius (default), or a comparison path: plain or euclidean")
    return parser


def build_parser():
    shared = _shared_flags()
    weights = _weight_input_flags()
    parser = argparse.ArgumentParser(prog="hyperadapt", description="Hyperbolic radius adjustment of frozen weights")
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    subparsers = parser.add_subparsers(dest="command", required=True)

    verify = subparsers.add_parser("verify", parents=[shared], help="run the property suites")
    verify.add_argument("--out", help="JSON report path (stdout when omitted)")

    adjust = subparsers.add_parser("adjust", parents=[shared, weights], help="adjust a weight file")
    adjust.add_argument("weights_out", help="output weight tensor file")
    adjust.add_argument("--report", help="AdapterReport JSON path")

    report = subparsers.add_parser("report", parents=[shared, weights], help="radius report of a weight file")
    report.add_argument("--out", help="JSON report path (stdout when omitted)")

    train = subparsers.add_parser("train", parents=[shared], help="train on the radius alignment task")
    train.add_argument("--out", required=True, help="output directory")

    check_grad = subparsers.add_parser("check-grad", parents=[shared], help="check analytic gradients")
    check_grad.add_argument("--out", help="JSON report path (stdout when omitted)")
    return parser


def resolve(args):
    file_values = read_config_file(args.config) if args.config else None
    flag_values = {name: getattr(args, name, None) for name in CONFIG_FLAGS}
    config = resolve_config(file_values, flag_values)
    set_ball_eps(config.ball_eps)
    log.set_level(config.logging_level)
    return config


def run(args):
    config = resolve(args)
    if args.command == "verify":
        return cmd_verify(config, args.out)
    if args.command == "adjust":
        return cmd_adjust(config, args.weights_in, args.weights_out, args.report,
                          from_csv=args.csv, scaling_path=args.scaling)
    if args.command == "report":
        return cmd_report(config, args.weights_in, args.out, from_csv=args.csv, scaling_path=args.scaling)
    if args.command == "train":
        return cmd_train(config, args.out)
    return cmd_check_grad(config, args.out)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except (InvalidConfigException, ShapeMismatchException, DomainException) as e:
        log.error(e.message)
        return EXIT_INVALID_CONFIG
    except (InvalidTensorFileException, OSError) as e:
        log.error(getattr(e, "message", None) or str(e))
        return EXIT_IO_ERROR
    except TrainingDivergedException as e:
        log.error(e.message)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
