"""Benchmark commands: bench-matmul, bench-conv, bench-gadgets."""

import argparse

from models.conv2mm import ConvShape, plan_layout
from services import bench
from utils.config import Settings, make_rng
from utils.validators import check_dims


def _trials(args: argparse.Namespace, settings: Settings) -> int:
    return args.trials if args.trials is not None else settings.bench_trials


def cmd_bench_matmul(args: argparse.Namespace, settings: Settings) -> int:
    dims = check_dims(args.dim or [], settings.bench_dim_cap)
    records = bench.bench_matmul(dims, _trials(args, settings), make_rng(settings.seed))
    bench.write_csv(args.out, records)
    print(bench.format_speedup(bench.speedup_table(records)))
    return 0


def cmd_bench_conv(args: argparse.Namespace, settings: Settings) -> int:
    check_dims(args.filters or [], settings.bench_dim_cap)
    check_dims(args.inputs or [], settings.bench_dim_cap)
    check_dims([args.n, args.m], settings.bench_dim_cap)
    check_dims(
        [plan_layout(ConvShape(M=M, m=args.m, n=args.n, B=B)).L for M in args.filters for B in args.inputs],
        settings.bench_dim_cap,
    )
    records = bench.bench_conv(
        args.filters, args.inputs, args.n, args.m, _trials(args, settings),
        make_rng(settings.seed), seed=settings.seed or 0,
    )
    bench.write_csv(args.out, records)
    print(bench.format_speedup(bench.speedup_table(records)))
    return 0


def cmd_bench_gadgets(args: argparse.Namespace, settings: Settings) -> int:
    check_dims([args.elements], settings.bench_dim_cap)
    for count in bench.gadget_counts(settings.relu_bits):
        print(f"{count.name}: {count.constraints} constraints per element (reference {count.reference})")
    runs = bench.bench_gadgets(args.elements, settings.relu_bits, _trials(args, settings), make_rng(settings.seed))
    bench.write_csv(args.out, [rec for recs in runs.values() for rec in recs])
    for name, recs in runs.items():
        med = bench.medians(recs)[("qap", args.elements)]
        print(f"{name}: setup {med['setup_ms']:.1f} ms, prove {med['prove_ms']:.1f} ms, verify {med['verify_ms']:.1f} ms")
    return 0


def register(sub: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    """Add the benchmark commands to the CLI."""
    p = sub.add_parser("bench-matmul", parents=[common], help="QMP vs QAP on L×L products")
    p.add_argument("--dim", type=int, action="append")
    p.add_argument("--trials", type=int)
    p.add_argument("--out", default="bench.csv")
    p.set_defaults(handler=cmd_bench_matmul)

    p = sub.add_parser("bench-conv", parents=[common], help="QMP vs QAP on batch convolutions")
    p.add_argument("--filters", type=int, action="append")
    p.add_argument("--inputs", type=int, action="append")
    p.add_argument("-n", type=int, default=5, help="input dimension")
    p.add_argument("-m", type=int, default=3, help="filter dimension")
    p.add_argument("--trials", type=int)
    p.add_argument("--out", default="conv.csv")
    p.set_defaults(handler=cmd_bench_conv)

    p = sub.add_parser("bench-gadgets", parents=[common], help="relu and avgpool gadget costs")
    p.add_argument("--elements", type=int, default=16)
    p.add_argument("--trials", type=int)
    p.add_argument("--out", default="gadgets.csv")
    p.set_defaults(handler=cmd_bench_gadgets)
