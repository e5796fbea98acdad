"""``vqcsim bench <task>`` command line entry point."""
from __future__ import annotations

import argparse
import sys

from .bench import FORMATS, TASKS, BenchSpec, UsageError, VerificationError, emit_report, run_bench

EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_VERIFY = 4


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vqcsim", description="State-vector simulator benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)
    bench = sub.add_parser("bench", help="time a benchmark workload")
    bench.add_argument("task", choices=TASKS)
    bench.add_argument("--qubits", type=_int_list, default=[10], help="qubit counts, e.g. 14,16,18")
    bench.add_argument("--depth", type=int, default=4, help="number of circuit layers")
    bench.add_argument("--threads", type=_int_list, default=[1], help="thread counts, e.g. 1,2,4,8")
    bench.add_argument("--reps", type=int, default=10, help="timed repetitions after one warm-up")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--noise-p", type=float, default=0.01, help="depolarizing strength for noisy-grad")
    bench.add_argument("--out", default=None, help="report path (default: stdout)")
    bench.add_argument("--format", choices=FORMATS, default="json")
    bench.add_argument("--verify", action="store_true",
                       help="check norms / finite-difference gradients and fail on mismatch")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = BenchSpec(task=args.task, qubits=args.qubits, depth=args.depth, threads=args.threads,
                     repetitions=args.reps, seed=args.seed, noise_p=args.noise_p,
                     fmt=args.format, verify=args.verify)
    try:
        records = run_bench(spec)
        text = emit_report(records, args.format)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except UsageError as exc:
        print(f"vqcsim: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"vqcsim: cannot write report: {exc}", file=sys.stderr)
        return EXIT_IO
    except VerificationError as exc:
        print(f"vqcsim: verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (ValueError, IndexError, TypeError) as exc:
        print(f"vqcsim: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
