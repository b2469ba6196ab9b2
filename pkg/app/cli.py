"""
Command-line front end.

    python -m app.cli summarize FILE --k K [--scheme det|alg1|alg2] [--o O] [--seed HEX] --out S
    python -m app.cli reconstruct SUMMARY FPRIME --out F [--budget N]
    python -m app.cli inspect SUMMARY
    python -m app.cli encode FILE --k K --out C
    python -m app.cli decode CODEWORD --out X
    python -m app.cli corrupt CODEWORD --k K [--placement P] [--seed HEX] --out C2
    python -m app.cli bench --sizes 1024:2,4096:4 [--scheme det] [--trials 5] [--csv OUT]
    python -m app.cli selftest

Paths may be "-" for standard input/output. Outputs are written to a temporary file and
renamed into place only on success.

Exit codes: 0 ok, 2 usage or parameter error, 3 malformed input file, 4 decode failure,
5 final check mismatch, 1 anything else.
"""
import argparse
import os
import sys
import tempfile
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import settings
from app.core.errors import (
    DecodeFailure,
    ExchangeError,
    FinalCheckMismatch,
    FormatError,
    InnerDecodeFailure,
    ParameterError,
    RecoveryFailure,
    SeedSearchExhausted,
    WitnessSearchExhausted,
)
from app.models.params import Scheme, derive_params
from app.services.bench.harness import adversary_edits, bench_summary_scaling, fitted_constant, mutate, write_csv
from app.services.coding.insdelcode import codeword_bits, decode, encode, parse_codeword, serialize_codeword
from app.services.recovery.recovery import RepairBudget, reconstruct
from app.services.sketch.codec import deserialize, inspect_summary, serialize
from app.services.sketch.smallbias import entropy_size
from app.services.sketch.summary import build_summary, expand_entropy

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_USAGE = 2
EXIT_FORMAT = 3
EXIT_DECODE = 4
EXIT_CHECK = 5

_EXIT_CODES: Sequence[Tuple[type, int]] = (
    (FinalCheckMismatch, EXIT_CHECK),
    (FormatError, EXIT_FORMAT),
    (ParameterError, EXIT_USAGE),
    (DecodeFailure, EXIT_DECODE),
    (WitnessSearchExhausted, EXIT_DECODE),
    (InnerDecodeFailure, EXIT_DECODE),
    (RecoveryFailure, EXIT_DECODE),
    (SeedSearchExhausted, EXIT_DECODE),
)


def exit_code_for(e: BaseException) -> int:
    for kind, code in _EXIT_CODES:
        if isinstance(e, kind):
            return code
    return EXIT_OTHER


def _read(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    with open(path, "rb") as f:
        return f.read()


def _write(path: str, data: bytes) -> None:
    """Write all-or-nothing: temp file in the target directory, then rename."""
    if path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".dxsync-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _info(message: str) -> None:
    sys.stderr.write(message + "\n")


def cmd_summarize(args: argparse.Namespace) -> int:
    data = _read(args.file)
    params = derive_params(8 * len(data), args.k, Scheme(args.scheme), o=args.o)
    entropy = None
    if params.scheme != Scheme.DETERMINISTIC:
        entropy = expand_entropy(args.seed, entropy_size(params))
    encoded = serialize(build_summary(data, params, entropy=entropy, threads=args.threads))
    _write(args.out, encoded)
    _info(
        f"scheme={params.scheme.value} n={params.n} k={params.k} L={params.L} o={params.o} "
        f"bytes={len(encoded)} bits={8 * len(encoded)}"
    )
    return EXIT_OK


def cmd_reconstruct(args: argparse.Namespace) -> int:
    summary = deserialize(_read(args.summary))
    nearby = _read(args.fprime)
    budget = RepairBudget(args.budget, args.budget)
    data, report = reconstruct(summary, nearby, budget=budget, fp_bits=args.fprime_bits)
    _write(args.out, data)
    _info(
        f"scheme={summary.scheme.value} n={summary.n} levels={len(report.levels)} "
        f"corrections={report.total_corrections}"
    )
    return EXIT_OK


def cmd_inspect(args: argparse.Namespace) -> int:
    _, report = inspect_summary(_read(args.summary))
    _info(
        f"scheme={report.scheme.value} n={report.n} k={report.k} o={report.o} L={report.L} w={report.w}\n"
        f"header={report.header_bytes} seed={report.seed_bytes} level0={report.level0_bytes} "
        f"payloads={sum(report.payload_bytes)} final_check={report.final_check_bytes} "
        f"crc={report.crc_bytes} total={report.total_bytes}\n"
        f"c={report.c} verify_multiplier={report.verify_multiplier} "
        f"color_hash_bits={report.color_hash_bits} final_check_bits={report.final_check_bits}\n"
        f"lanes={len(report.lane_widths)} seed_bits={sum(report.lane_widths)}"
    )
    if report.enumeration_cap_bits is not None:
        clamp = " (clamped below the bias target)" if report.lane_clamped else ""
        _info(f"enumeration_cap_bits={report.enumeration_cap_bits} lane_width={report.lane_widths[0]}{clamp}")
    return EXIT_OK


def cmd_encode(args: argparse.Namespace) -> int:
    message = _read(args.file)
    codeword = encode(message, args.k, threads=args.threads or 1)
    _write(args.out, serialize_codeword(codeword.n, codeword.k, codeword.inner_code, codeword_bits(codeword)))
    _info(f"n={codeword.n} k={codeword.k} redundancy_bits={codeword.redundancy_bits}")
    return EXIT_OK


def cmd_decode(args: argparse.Namespace) -> int:
    n, k, inner_code, bits = parse_codeword(_read(args.codeword))
    message = decode(bits, n, k, inner_code)
    _write(args.out, message)
    _info(f"n={n} k={k} received_bits={bits.size}")
    return EXIT_OK


def cmd_corrupt(args: argparse.Namespace) -> int:
    n, k, inner_code, bits = parse_codeword(_read(args.codeword))
    try:
        rng = np.random.default_rng(int(args.seed, 16) if args.seed else None)
    except ValueError as e:
        raise ParameterError(f"seed {args.seed!r} is not hexadecimal") from e
    corrupted, script = adversary_edits(bits, n, args.k, rng, placement=args.placement)
    _write(args.out, serialize_codeword(n, k, inner_code, corrupted))
    _info(f"applied {len(script)} edits ({args.placement})")
    return EXIT_OK


def _parse_sizes(text: str) -> List[Tuple[int, int]]:
    sizes = []
    for item in text.split(","):
        try:
            n, k = item.split(":")
            sizes.append((int(n), int(k)))
        except ValueError as e:
            raise ParameterError(f"size {item!r} is not N:K") from e
    return sizes


def cmd_bench(args: argparse.Namespace) -> int:
    rows = bench_summary_scaling(
        _parse_sizes(args.sizes), Scheme(args.scheme), args.trials, seed=args.bench_seed, threads=args.threads or 1
    )
    if args.csv:
        if args.csv == "-":
            write_csv(rows, sys.stdout)
        else:
            with open(args.csv, "w", newline="") as f:
                write_csv(rows, f)
    constant = fitted_constant(rows)
    successes = sum(1 for row in rows if row.success)
    if constant is None:
        _info("no rows")
    else:
        _info(f"trials={len(rows)} successes={successes} fitted_constant={constant:.3f}")
    return EXIT_OK


def cmd_selftest(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(2024)
    n, k = 1024, 2
    F = rng.integers(0, 256, size=n // 8, dtype=np.uint8).tobytes()
    Fp, _ = mutate(F, k, rng)
    for scheme in (Scheme.DETERMINISTIC, Scheme.ALG1_RANDOM, Scheme.ALG2_OPTIMAL):
        params = derive_params(n, k, scheme)
        entropy = rng.bytes(entropy_size(params)) if scheme != Scheme.DETERMINISTIC else None
        summary = deserialize(serialize(build_summary(F, params, entropy=entropy)))
        data, _ = reconstruct(summary, Fp)
        if data != F:
            _info(f"selftest: {scheme.value} recovered the wrong file")
            return EXIT_OTHER
        _info(f"selftest: {scheme.value} ok")
    codeword = encode(F, k)
    corrupted, _ = adversary_edits(codeword_bits(codeword), codeword.n, k, rng)
    if decode(corrupted, codeword.n, k) != F:
        _info("selftest: insdel code recovered the wrong message")
        return EXIT_OTHER
    _info("selftest: insdel code ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dxsync", description="Single-round document exchange")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--threads", type=int, default=settings.THREADS, help="worker threads")

    p = sub.add_parser("summarize", help="write a DXS1 summary of FILE")
    p.add_argument("file")
    p.add_argument("--k", type=int, required=True, help="edit budget")
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default=Scheme.DETERMINISTIC.value)
    p.add_argument("--o", type=int, default=None, help="hash width override")
    p.add_argument("--seed", default=None, help="hex seed for reproducible randomized summaries")
    p.add_argument("--out", required=True)
    add_common(p)
    p.set_defaults(handler=cmd_summarize)

    p = sub.add_parser("reconstruct", help="recover the summarized file from FPRIME")
    p.add_argument("summary")
    p.add_argument("fprime")
    p.add_argument("--out", required=True)
    p.add_argument("--budget", type=int, default=None, help="witness and candidate cap per level")
    p.add_argument("--fprime-bits", type=int, default=None, help="bit length of FPRIME when its last byte is partly fill")
    add_common(p)
    p.set_defaults(handler=cmd_reconstruct)

    p = sub.add_parser("inspect", help="report the sections of a DXS1 summary")
    p.add_argument("summary")
    p.set_defaults(handler=cmd_inspect)

    p = sub.add_parser("encode", help="write a systematic DXC1 codeword of FILE")
    p.add_argument("file")
    p.add_argument("--k", type=int, required=True, help="edits to tolerate")
    p.add_argument("--out", required=True)
    add_common(p)
    p.set_defaults(handler=cmd_encode)

    p = sub.add_parser("decode", help="recover the message from a DXC1 codeword")
    p.add_argument("codeword")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_decode)

    p = sub.add_parser("corrupt", help="apply K edits to a DXC1 codeword")
    p.add_argument("codeword")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--placement", choices=["uniform", "systematic", "redundancy", "boundary"], default="uniform")
    p.add_argument("--seed", default=None, help="hex seed")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_corrupt)

    p = sub.add_parser("bench", help="measure summary size and recovery success")
    p.add_argument("--sizes", default="1024:2,4096:2,4096:4", help="comma-separated N:K pairs (bits)")
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default=Scheme.DETERMINISTIC.value)
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--bench-seed", type=int, default=0)
    p.add_argument("--csv", default=None, help="write rows as CSV ('-' for stdout)")
    add_common(p)
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("selftest", help="round-trip every scheme on random data")
    p.set_defaults(handler=cmd_selftest)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "k", 1) is not None and getattr(args, "k", 1) <= 0:
        _info("error: --k must be positive")
        return EXIT_USAGE
    handler: Callable[[argparse.Namespace], int] = args.handler
    try:
        return handler(args)
    except ExchangeError as e:
        _info(f"error: {type(e).__name__}: {e}")
        return exit_code_for(e)
    except OSError as e:
        _info(f"error: {e}")
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
