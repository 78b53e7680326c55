"""Main CLI interface for the trace reconstruction simulator."""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from channel import ChannelSpec, generate_traces, substream
from config import Config
from core_model import CodeParams, Trace, derive_params, format_bitstrings, parse_bitstrings
from errors import ConfigError, FormatError, ParamError, TraceRecError
from experiment import Scheme, format_csv, load_config, override_config, run_experiment, sample_for_scheme
from reconstruction import reconstruct_coded_bma, reconstruct_ours_detailed
from storage import ResultStore
from trace_code import (
    block_overflow_probability,
    default_p_target,
    delta_star,
    info_length,
    rate,
    redundancy_bounds,
    redundancy_D,
    segmentation_failure_bound,
    select_delta,
)

EXIT_USAGE = 1
EXIT_RUNTIME = 2


class UsageError(Exception):
    """Bad command-line usage."""


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage problems with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"❌ {self.prog}: {message}\n")


def status(message: str):
    """Status lines go to stderr; stdout carries sequences and CSV."""
    print(message, file=sys.stderr)


def read_input(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="ascii")


def write_output(path: Optional[str], text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    Path(path).write_text(text, encoding="ascii")
    status(f"✅ Wrote {path}")


def resolve_params(n: int, k: float, alpha: float, delta: Optional[int]) -> CodeParams:
    """Derive code parameters; without an explicit δ the selected δ is used."""
    if delta is None:
        delta = select_delta(n, alpha)
    return derive_params(n, k, alpha, delta)


def sample_command(args) -> int:
    """Emit codewords of the chosen scheme."""
    params = resolve_params(args.n, args.k, args.alpha, args.delta)
    scheme = Scheme(args.scheme)
    words = [
        sample_for_scheme(scheme, params, substream(args.seed, index, 0), retry_limit=args.retry_limit)
        for index in range(args.count)
    ]
    comments = [f"scheme={scheme.value} n={params.n} ell={params.ell} delta={params.delta} seed={args.seed}"]
    write_output(args.output, format_bitstrings(words, comments))
    status(f"✅ Sampled {len(words)} {scheme.value} codeword(s) of length {params.n}")
    return 0


def corrupt_command(args) -> int:
    """Read one codeword and emit t traces."""
    sequences = parse_bitstrings(read_input(args.input))
    if len(sequences) != 1:
        raise UsageError(f"expected exactly one codeword, found {len(sequences)}")
    x = sequences[0]
    if args.p is not None:
        p = args.p
    else:
        if args.k is None:
            raise UsageError("give either --p or --k (with optional --alpha)")
        p = args.k / len(x) ** args.alpha
    try:
        spec = ChannelSpec(p=p, t=args.t)
    except ValidationError:
        raise ParamError("0 <= p < 0.5, t >= 1", f"invalid channel: p={p:.6g}, t={args.t}") from None
    traces = generate_traces(x, spec, substream(args.seed))
    comments = [f"n={len(x)} p={p:.6g} t={args.t} seed={args.seed}"]
    write_output(args.output, format_bitstrings([trace.bits for trace in traces], comments))
    lengths = ", ".join(str(len(trace)) for trace in traces)
    status(f"✅ Generated {len(traces)} traces (lengths {lengths})")
    return 0


def reconstruct_command(args) -> int:
    """Read traces and emit the estimate."""
    sequences = parse_bitstrings(read_input(args.input))
    if not sequences:
        raise UsageError("no traces in input")
    scheme = Scheme(args.scheme)
    traces = [Trace(bits=bits, origin_len=args.n) for bits in sequences]
    if scheme is Scheme.OURS:
        params = resolve_params(args.n, args.k, args.alpha, args.delta)
        result = reconstruct_ours_detailed(traces, params)
        estimate = result.bits
        if result.segmentation_failures:
            status(f"⏭️  {result.segmentation_failures} of {len(traces)} traces failed segmentation")
    else:
        estimate = reconstruct_coded_bma(traces, args.n)
    write_output(args.output, format_bitstrings([estimate]))
    status(f"✅ Reconstructed {args.n} bits from {len(traces)} traces ({scheme.value})")
    return 0


def experiment_command(args) -> int:
    """Run a Monte-Carlo sweep and emit its CSV."""
    config = load_config(args.config)
    if args.seed is not None:
        config = override_config(config, seed=args.seed)
    if args.trials is not None:
        config = override_config(config, trials=args.trials)
    status(f"📊 Running {config.trials} trials per point (seed {config.seed})")
    rows = run_experiment(config, workers=args.workers, progress=args.progress)
    skipped = sum(1 for row in rows if row.skipped == row.trials)
    if skipped:
        status(f"⏭️  {skipped} parameter point(s) skipped as invalid")
    write_output(args.output, format_csv(rows))
    if args.save:
        store = ResultStore()
        run_id = store.save_run(config, rows)
        status(f"✅ Saved run {run_id} to {store.root}")
    return 0


def params_command(args) -> int:
    """Print derived parameters, redundancy, rate and δ*."""
    p_target = args.p_target if args.p_target is not None else default_p_target(args.n, args.alpha)
    star = delta_star(args.n, args.alpha, p_target)
    delta = args.delta if args.delta is not None else select_delta(args.n, args.alpha, p_target)
    params = derive_params(args.n, args.k, args.alpha, delta)
    low, high = redundancy_bounds(params)
    lines = [f"{key}={value}" for key, value in params.to_dict().items()]
    lines += [
        f"redundancy_D={redundancy_D(params)}",
        f"rate={rate(params):.6g}",
        f"info_length={info_length(params)}",
        f"redundancy_bounds={low:.6g},{high:.6g}",
        f"p_target={p_target:.6g}",
        f"delta_star={star:.6g}",
        f"block_overflow_probability={block_overflow_probability(params):.6g}",
        f"segmentation_failure_bound={segmentation_failure_bound(params):.6g}",
    ]
    write_output(args.output, "".join(line + "\n" for line in lines))
    return 0


def runs_command(args) -> int:
    """List stored experiment runs."""
    runs = ResultStore().list_runs()
    if not runs:
        status("No stored runs found")
        return 0
    for run in runs:
        config = run.get("config", {})
        schemes = ",".join(config.get("scheme", []))
        print(f"{run['id']}  {run.get('created', '?')}  schemes={schemes}  rows={len(run.get('rows', []))}")
    return 0


def add_code_arguments(parser: argparse.ArgumentParser, need_k: bool = True):
    parser.add_argument("--n", type=int, required=True, help="Block length of the codeword")
    parser.add_argument("--k", type=float, required=need_k, default=None if need_k else 10.0,
                        help="Deletion-rate constant in p = k/n^alpha")
    parser.add_argument("--alpha", type=float, default=1.0, help="Deletion-rate exponent")
    parser.add_argument("--delta", type=int, help="Code parameter delta (default: select from n, alpha)")


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(description="Coded trace reconstruction simulator")
    subparsers = parser.add_subparsers(dest="command", help="Available commands", parser_class=CliParser)

    # Sample codewords
    sample_parser = subparsers.add_parser("sample", help="Emit a random codeword")
    add_code_arguments(sample_parser)
    sample_parser.add_argument("--scheme", choices=[s.value for s in Scheme], default=Scheme.OURS.value)
    sample_parser.add_argument("--count", type=int, default=1, help="Number of codewords")
    sample_parser.add_argument("--seed", type=int, default=Config.DEFAULT_SEED)
    sample_parser.add_argument("--retry-limit", type=int, default=Config.RETRY_LIMIT)
    sample_parser.add_argument("--output", help="Output file (default: stdout)")

    # Corrupt a codeword
    corrupt_parser = subparsers.add_parser("corrupt", help="Pass a codeword through the deletion channel t times")
    corrupt_parser.add_argument("input", nargs="?", default="-", help="Codeword file ('-' for stdin)")
    corrupt_parser.add_argument("--t", type=int, required=True, help="Number of traces")
    corrupt_parser.add_argument("--p", type=float, help="Deletion probability")
    corrupt_parser.add_argument("--k", type=float, help="Use p = k/n^alpha")
    corrupt_parser.add_argument("--alpha", type=float, default=1.0)
    corrupt_parser.add_argument("--seed", type=int, default=Config.DEFAULT_SEED)
    corrupt_parser.add_argument("--output", help="Output file (default: stdout)")

    # Reconstruct from traces
    reconstruct_parser = subparsers.add_parser("reconstruct", help="Estimate a codeword from its traces")
    reconstruct_parser.add_argument("input", nargs="?", default="-", help="Trace file ('-' for stdin)")
    add_code_arguments(reconstruct_parser, need_k=False)
    reconstruct_parser.add_argument("--scheme", choices=[s.value for s in Scheme], default=Scheme.OURS.value)
    reconstruct_parser.add_argument("--output", help="Output file (default: stdout)")

    # Experiments
    experiment_parser = subparsers.add_parser("experiment", help="Run a Monte-Carlo sweep from a config file")
    experiment_parser.add_argument("config", help="Experiment configuration file")
    experiment_parser.add_argument("--workers", type=int, default=Config.WORKERS)
    experiment_parser.add_argument("--trials", type=int, help="Override the trial count")
    experiment_parser.add_argument("--seed", type=int, help="Override the master seed")
    experiment_parser.add_argument("--progress", action="store_true", help="Show a progress bar")
    experiment_parser.add_argument("--save", action="store_true", help="Store CSV and manifest under the results directory")
    experiment_parser.add_argument("--output", help="CSV file (default: stdout)")

    # Parameters
    params_parser = subparsers.add_parser("params", help="Print derived code parameters")
    add_code_arguments(params_parser)
    params_parser.add_argument("--p-target", type=float, help="Error-decay target for delta selection")
    params_parser.add_argument("--output", help="Output file (default: stdout)")

    # Stored runs
    subparsers.add_parser("runs", help="List stored experiment runs")

    return parser


COMMANDS = {
    "sample": sample_command,
    "corrupt": corrupt_command,
    "reconstruct": reconstruct_command,
    "experiment": experiment_command,
    "params": params_command,
    "runs": runs_command,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help(sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(level=Config.LOG_LEVEL, format="%(levelname)s %(name)s: %(message)s")

    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, FormatError, ParamError) as e:
        status(f"❌ Error: {e}")
        return EXIT_USAGE
    except KeyboardInterrupt:
        status("\n\n⚠️  Interrupted by user")
        return EXIT_RUNTIME
    except (TraceRecError, OSError, ValueError) as e:
        status(f"❌ Error: {e}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
