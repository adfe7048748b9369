"""sigstack command-line interface

Exit codes: 0 success, 1 usage or input error, 2 numerical failure, 3 gradient check failure.
JSON results go to stdout, logs to stderr.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from src import __version__
from src.application.generative import GanExperimentConfig
from src.application.hurst import HurstExperimentConfig
from src.application.use_cases import pen_reference
from src.config.dependencies import (
    get_compute_signature_use_case,
    get_generate_data_use_case,
    get_generative_experiment_use_case,
    get_gradcheck_use_case,
    get_hurst_experiment_use_case,
    get_invert_signature_use_case,
    get_mmd_test_use_case,
    get_report_repository,
    get_settings,
    get_stream_repository,
)
from src.core.autodiff import InversionConfig
from src.core.optim import AdamConfig
from src.core.sigkernel import KernelConfig
from src.core.streamnet.architectures import ModelConfig
from src.core.streamnet.training import TrainingConfig
from src.domain.exceptions import GradientCheckError, NumericalError, SigstackError
from src.domain.models import ProcessSpec
from src.infrastructure.synthdata import HurstDatasetConfig

logger = logging.getLogger("sigstack")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_GRADCHECK = 3

DEFAULT_STREAM_LENGTH = 100


class CliArgumentParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with status 1"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=2))


def _default_output(name: str) -> str:
    return str(Path(get_settings().output_dir) / name)


def cmd_compute(args: argparse.Namespace) -> int:
    use_case = get_compute_signature_use_case()
    if Path(args.input).suffix.lower() == ".jsonl":
        payload = use_case.execute_batch(args.depth, args.input, time_augmented=args.time_augment)
    else:
        payload = use_case.execute(args.depth, path=args.input, time_augmented=args.time_augment)
    if args.output:
        get_report_repository().save_json(args.output, payload)
    _emit(payload)
    return EXIT_OK


def cmd_invert(args: argparse.Namespace) -> int:
    use_case = get_invert_signature_use_case()
    config = InversionConfig(
        adam=AdamConfig(lr=args.lr),
        max_iterations=args.max_iter,
        tolerance=args.tol,
        lr_decay=args.lr_decay,
        decay_every=args.decay_every,
        energy_weight=args.energy_weight,
    )
    output = args.output or _default_output("inversion.csv")
    if args.pen_style is not None:
        reference = pen_reference(args.pen_style, args.length or 30, args.pen_noise, args.seed)
        get_stream_repository().write_stream(str(Path(output).with_suffix("")) + ".target.csv", reference)
        result = use_case.execute(args.depth, reference=reference, config=config, seed=args.seed,
                                  output_path=output)
    else:
        result = use_case.execute(args.depth, path=args.input, length=args.length, config=config, seed=args.seed,
                                  output_path=output)
    payload = {
        "depth": args.depth,
        "final_loss": result.final_loss,
        "iterations_used": result.iterations_used,
        "increment_rmse": result.increment_rmse,
        "converged": result.final_loss < args.tol,
        "recovered": output,
        "loss_trace": result.loss_trace,
    }
    if args.report:
        get_report_repository().save_json(args.report, payload)
    _emit(payload)
    if result.final_loss >= args.tol:
        logger.error(f"Inversion did not reach tolerance {args.tol:.1e} (final loss {result.final_loss:.3e})")
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_hurst(args: argparse.Namespace) -> int:
    architecture = None
    if args.model_config:
        architecture = ModelConfig.model_validate_json(Path(args.model_config).read_text())
    config = HurstExperimentConfig(
        model=args.model,
        architecture=architecture,
        dataset=HurstDatasetConfig(train_size=args.train_size, test_size=args.test_size, length=args.length),
        training=TrainingConfig(epochs=args.epochs, batch_size=args.batch_size, adam=AdamConfig(lr=args.lr)),
        runs=args.runs,
        rr_reading=args.rr_reading,
        seed=args.seed,
    )
    report = get_hurst_experiment_use_case().execute(config, save_params=args.save_params)
    if args.output:
        get_report_repository().save_report(args.output, report)
    print(report.model_dump_json(indent=2))
    return EXIT_OK


def cmd_gan(args: argparse.Namespace) -> int:
    config = GanExperimentConfig(
        epochs=args.epochs,
        paths=args.paths,
        length=args.length,
        generator_depth=args.generator_depth,
        discriminator_depth=args.discriminator_depth,
        adam=AdamConfig(lr=args.lr),
        permutations=args.permutations,
        seed=args.seed,
    )
    report, samples = get_generative_experiment_use_case().execute(config, save_params=args.save_params)
    if samples is not None:
        get_stream_repository().write_batch(args.samples or _default_output("gan_samples.jsonl"), samples)
    if args.output:
        get_report_repository().save_report(args.output, report)
    print(report.model_dump_json(indent=2))
    return EXIT_OK


def cmd_mmd(args: argparse.Namespace) -> int:
    kernel = KernelConfig(depth=args.depth, normalization_target=args.target_norm)
    payload = get_mmd_test_use_case().execute_files(
        args.a, args.b, kernel=kernel, permutations=args.permutations, seed=args.seed,
        time_augmented=not args.no_time_augment,
    )
    _emit(payload)
    return EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    length = args.len
    if length is None:
        length = HurstDatasetConfig().length if args.kind == "hurst-dataset" else DEFAULT_STREAM_LENGTH
    spec = ProcessSpec(
        kind=args.kind if args.kind in ("brownian", "ou", "fbm") else "brownian",
        length=length,
        seed=args.seed,
        hurst=args.hurst,
        theta=args.theta,
        mu=args.mu,
        sigma=args.sigma,
        x0=args.x0,
    )
    dataset = None
    if args.kind == "hurst-dataset":
        dataset = HurstDatasetConfig(train_size=args.train_size, test_size=args.test_size, length=length,
                                     seed=args.seed)
    manifest = get_generate_data_use_case().execute(
        args.kind, args.n, args.output or _default_output(f"{args.kind}.jsonl"), spec=spec,
        pen_style=args.style, pen_noise=args.noise, dataset=dataset,
    )
    _emit({key: value for key, value in manifest.items() if not key.endswith("_hurst")})
    return EXIT_OK


def cmd_gradcheck(args: argparse.Namespace) -> int:
    payload = get_gradcheck_use_case().execute(seed=args.seed, models=not args.no_models, tolerance=args.tolerance)
    _emit(payload)
    if not payload["passed"]:
        raise GradientCheckError("gradient suite failed", payload["max_error"])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = CliArgumentParser(prog="sigstack", description="Path signatures as differentiable layers")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=settings.log_level, help="logging level (default from SIGSTACK_LOG_LEVEL)")
    commands = parser.add_subparsers(dest="command", required=True)

    compute = commands.add_parser("compute", help="signature of a CSV stream or of every stream in a batch")
    compute.add_argument("input", help="CSV stream file or JSON-lines batch (.jsonl)")
    compute.add_argument("--depth", type=int, default=settings.default_depth)
    compute.add_argument("--time-augment", action="store_true", help="prepend the time channel")
    compute.add_argument("--output", help="also write the signature JSON here")
    compute.set_defaults(handler=cmd_compute)

    invert = commands.add_parser("invert", help="recover a stream from its signature")
    source = invert.add_mutually_exclusive_group(required=True)
    source.add_argument("--input", help="CSV stream or signature JSON")
    source.add_argument("--pen-style", type=int, help="invert a synthetic pen stroke of this style")
    invert.add_argument("--length", type=int, help="points to recover (pen strokes default to 30)")
    invert.add_argument("--pen-noise", type=float, default=0.0)
    invert.add_argument("--depth", type=int, default=settings.inversion_depth)
    invert.add_argument("--lr", type=float, default=0.05)
    invert.add_argument("--max-iter", type=int, default=20000)
    invert.add_argument("--tol", type=float, default=1e-10)
    invert.add_argument("--lr-decay", type=float, default=0.5)
    invert.add_argument("--decay-every", type=int, default=4000)
    invert.add_argument("--energy-weight", type=float, default=1e-2, help="starting weight of the path energy term")
    invert.add_argument("--seed", type=int, default=0)
    invert.add_argument("--output", help="recovered stream CSV")
    invert.add_argument("--report", help="write the result JSON here as well")
    invert.set_defaults(handler=cmd_invert)

    hurst = commands.add_parser("hurst", help="Hurst parameter regression on fBM")
    hurst.add_argument("--model", choices=["feedforward", "neural-sig", "neural-sig-augment", "deep-sig",
                                           "deeper-sig", "rr"], default="deep-sig")
    hurst.add_argument("--model-config", help="JSON model configuration overriding the preset")
    hurst.add_argument("--epochs", type=int, default=100)
    hurst.add_argument("--runs", type=int, default=3)
    hurst.add_argument("--batch-size", type=int, default=128)
    hurst.add_argument("--lr", type=float, default=1e-3)
    hurst.add_argument("--train-size", type=int, default=600)
    hurst.add_argument("--test-size", type=int, default=100)
    hurst.add_argument("--length", type=int, default=300)
    hurst.add_argument("--rr-reading", choices=["increments", "levels", "pooled"], default="pooled",
                       help="series the rescaled-range baseline runs on")
    hurst.add_argument("--seed", type=int, default=0)
    hurst.add_argument("--output", help="report JSON")
    hurst.add_argument("--save-params", help="parameter file for the last run")
    hurst.set_defaults(handler=cmd_hurst)

    gan = commands.add_parser("gan", help="train the signature generator against the MMD discriminator")
    gan.add_argument("--epochs", type=int, default=200)
    gan.add_argument("--paths", type=int, default=256)
    gan.add_argument("--length", type=int, default=100)
    gan.add_argument("--generator-depth", type=int, default=3)
    gan.add_argument("--discriminator-depth", type=int, default=4)
    gan.add_argument("--lr", type=float, default=1e-2)
    gan.add_argument("--permutations", type=int, default=settings.permutations)
    gan.add_argument("--seed", type=int, default=0)
    gan.add_argument("--output", help="report JSON")
    gan.add_argument("--samples", help="JSON-lines file for generated sample paths")
    gan.add_argument("--save-params", help="parameter file for the trained generator")
    gan.set_defaults(handler=cmd_gan)

    mmd = commands.add_parser("mmd", help="two-sample test between JSON-lines batches")
    mmd.add_argument("a")
    mmd.add_argument("b")
    mmd.add_argument("--depth", type=int, default=settings.default_depth)
    mmd.add_argument("--permutations", type=int, default=settings.permutations)
    mmd.add_argument("--target-norm", type=float, default=settings.kernel_target_norm)
    mmd.add_argument("--seed", type=int, default=0)
    mmd.add_argument("--no-time-augment", action="store_true")
    mmd.set_defaults(handler=cmd_mmd)

    generate = commands.add_parser("generate", help="write seeded synthetic streams")
    generate.add_argument("kind", choices=["brownian", "ou", "fbm", "pen", "hurst-dataset"])
    generate.add_argument("--n", type=int, default=16, help="number of streams")
    generate.add_argument("--len", type=int,
                          help=f"points per stream (default {DEFAULT_STREAM_LENGTH}, 300 for hurst-dataset)")
    generate.add_argument("--seed", type=int, default=0)
    generate.add_argument("--hurst", type=float, default=0.5)
    generate.add_argument("--theta", type=float, default=8.0)
    generate.add_argument("--mu", type=float, default=0.0)
    generate.add_argument("--sigma", type=float, default=1.0)
    generate.add_argument("--x0", type=float, default=0.0)
    generate.add_argument("--style", type=int, default=0)
    generate.add_argument("--noise", type=float, default=0.0)
    generate.add_argument("--train-size", type=int, default=600)
    generate.add_argument("--test-size", type=int, default=100)
    generate.add_argument("--output")
    generate.set_defaults(handler=cmd_generate)

    gradcheck = commands.add_parser("gradcheck", help="finite-difference gradient suite")
    gradcheck.add_argument("--seed", type=int, default=0)
    gradcheck.add_argument("--tolerance", type=float, default=1e-5)
    gradcheck.add_argument("--no-models", action="store_true", help="skip the model presets")
    gradcheck.set_defaults(handler=cmd_gradcheck)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), stream=sys.stderr)
    try:
        return args.handler(args)
    except GradientCheckError as e:
        logger.error(f"{e}; refusing to continue")
        return EXIT_GRADCHECK
    except NumericalError as e:
        logger.error(str(e))
        return EXIT_NUMERICAL
    except (SigstackError, ValueError, OSError) as e:
        logger.error(str(e))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
