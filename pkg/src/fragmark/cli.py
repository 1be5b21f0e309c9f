"""Command-line front end.

Nine subcommands cover the full pipeline: key generation, embedding,
tampering, verification, recovery, the theory tables, the Monte Carlo
sweeps, and the mapping audit. Tables land on standard output so commands
compose in shells; human status lines go to standard error. Every command
is deterministic given its flags, seed, and inputs (keygen excepted).

Exit codes form a fixed mapping:

  0  success; verify: no tampering detected
  1  check failed: verify found tampering, audit found violations,
     or a sweep recorded failed cells
  2  usage error (bad flags, missing required arguments)
  3  invalid parameters (out-of-domain n/r/l, region outside the grid,
     infeasible neighborhood)
  4  I/O or format failure (unreadable image, malformed key file)
  5  mapping construction failed to satisfy its constraints
  70 unexpected internal error
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .analysis import TheoryParams, average_recovery_rate, emit_block_heatmap, emit_theory_table
from .codec import generate_keyset, read_key_file, write_key_file
from .errors import (
    DimensionError,
    FragmarkError,
    KeyFileError,
    MappingConstructionError,
    ParameterError,
    RateUndefinedError,
)
from .experiment import (
    ExperimentPlan,
    apply_random_tamper,
    apply_square_tamper,
    emit_cells_csv,
    emit_trials_csv,
    psnr,
    run_plan,
    synthetic_suite,
)
from .figures import comparison_series, render_block_heatmap, render_rate_curves
from .image_io import read_image, write_block_mask, write_image
from .image_model import BlockGrid, BlockIndex, TamperRegion
from .mapping import (
    DENEIGHBORHOOD,
    STRATEGIES,
    build_mapping,
    hall_feasible,
    verify_mapping,
)
from .protocol import authenticate, embed, measure_recovery_rate, recover
from .rng import SplitMix64

_EXIT_OK = 0
_EXIT_CHECK_FAILED = 1
_EXIT_PARAMS = 3
_EXIT_IO = 4
_EXIT_MAPPING = 5
_EXIT_INTERNAL = 70

_SEED_ENV = "FRAGMARK_SEED"

_EXIT_CODE_HELP = """\
exit codes:
  0   success; verify: no tampering detected
  1   check failed (tampering found, audit violations, failed sweep cells)
  2   usage error
  3   invalid parameters
  4   I/O or format failure
  5   mapping construction failure
  70  unexpected internal error
"""


def _status(msg: str) -> None:
    print(msg, file=sys.stderr)


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _origin(text: str) -> BlockIndex:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected row,col, got {text!r}")
    try:
        return BlockIndex(int(parts[0]), int(parts[1]))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected row,col integers, got {text!r}")


def _region(text: str) -> tuple[BlockIndex, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected row,col,l, got {text!r}")
    try:
        row, col, side = (int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected row,col,l integers, got {text!r}")
    return BlockIndex(row, col), side


def _seed_from(args: argparse.Namespace, default: int = 0) -> int:
    """--seed flag wins; FRAGMARK_SEED is the fallback."""
    if args.seed is not None:
        return args.seed
    env = os.environ.get(_SEED_ENV)
    if env is not None:
        try:
            return int(env, 0)
        except ValueError:
            raise ParameterError(f"{_SEED_ENV} must be an integer, got {env!r}")
    return default


def _require_feasible(grid: BlockGrid, r: int) -> None:
    if not hall_feasible(grid, r):
        raise ParameterError(
            f"r={r} violates the feasibility condition r*r <= total/2 "
            f"on a {grid.cols}x{grid.rows} grid (r*r={r*r}, total/2={grid.total // 2})"
        )


def _out_stream(args: argparse.Namespace):
    if getattr(args, "out", None):
        return open(args.out, "w", newline="")
    return sys.stdout


# --- commands ---------------------------------------------------------


def cmd_keygen(args) -> int:
    keys = generate_keyset()
    write_key_file(keys, args.out)
    _status(f"wrote {args.out} fingerprint={keys.fingerprint()}")
    return _EXIT_OK


def cmd_embed(args) -> int:
    image = read_image(args.input)
    keys = read_key_file(args.key)
    wm = embed(image, keys, args.r, args.strategy, arnold_iterations=args.arnold_iterations)
    write_image(wm.image, args.out)
    quality = psnr(image, wm.image)
    _status(f"wrote {args.out} psnr_db={quality:.2f} fingerprint={keys.fingerprint()}")
    return _EXIT_OK


def cmd_tamper(args) -> int:
    image = read_image(args.input)
    seed = _seed_from(args)
    if args.region is not None:
        origin, side = args.region
        tampered, mask = apply_square_tamper(image, TamperRegion(origin, side), seed)
    else:
        tampered, mask = apply_random_tamper(image, args.random_blocks, seed)
    write_image(tampered, args.out)
    _status(f"wrote {args.out} tampered_blocks={int(mask.sum())} seed={seed}")
    return _EXIT_OK


def cmd_verify(args) -> int:
    image = read_image(args.input)
    keys = read_key_file(args.key)
    mapping = build_mapping(
        args.strategy, keys.k3, image.grid, r=args.r, arnold_iterations=args.arnold_iterations
    )
    report = authenticate(image, keys, args.r, args.strategy, mapping=mapping)
    if args.mask:
        write_block_mask(report.final.tampered, args.mask)
    tampered = report.final.count
    if tampered == 0:
        print("tampered=0 recovered_possible=0")
        return _EXIT_OK
    result = recover(image, report, keys, mapping)
    print(f"tampered={tampered} recovered_possible={result.recovered_count}")
    return _EXIT_CHECK_FAILED


def cmd_recover(args) -> int:
    image = read_image(args.input)
    keys = read_key_file(args.key)
    mapping = build_mapping(
        args.strategy, keys.k3, image.grid, r=args.r, arnold_iterations=args.arnold_iterations
    )
    report = authenticate(image, keys, args.r, args.strategy, mapping=mapping)
    result = recover(image, report, keys, mapping)
    write_image(result.image, args.out)

    lines = [
        f"fingerprint={keys.fingerprint()}",
        f"strategy={args.strategy}",
        f"r={args.r if args.r is not None else '-'}",
        f"tampered={report.final.count}",
        f"recovered={result.recovered_count}",
        f"unrecoverable={result.unrecoverable_count}",
    ]
    if args.region is not None:
        origin, side = args.region
        rate = measure_recovery_rate(TamperRegion(origin, side), result)
        lines.append(f"recovery_rate={rate:.6f}")
        _status(f"recovery_rate={rate:.4f} ({100 * rate:.1f}%)")
    report_path = args.report or f"{args.out}.report.txt"
    Path(report_path).write_text("\n".join(lines) + "\n")
    _status(
        f"wrote {args.out} (+{report_path}) "
        f"recovered={result.recovered_count} unrecoverable={result.unrecoverable_count}"
    )
    return _EXIT_OK


def cmd_analyze(args) -> int:
    grid = BlockGrid(cols=args.n, rows=args.n)
    for r in args.r:
        _require_feasible(grid, r)
    for l in args.l:
        TamperRegion(args.origin, l).validate_inside(grid)
        if l < 1:
            raise ParameterError(f"l must be positive, got {l}")

    if args.heatmap:
        if len(args.r) != 1 or len(args.l) != 1:
            raise ParameterError("--heatmap needs exactly one r and one l")
        params = TheoryParams(n=args.n, r=args.r[0], l=args.l[0], origin=args.origin)
        stream = _out_stream(args)
        try:
            emit_block_heatmap(stream, params)
        finally:
            if stream is not sys.stdout:
                stream.close()
        if args.figdir:
            Path(args.figdir).mkdir(parents=True, exist_ok=True)
            profile = average_recovery_rate(params)
            render_block_heatmap(
                profile.rates,
                Path(args.figdir) / f"heatmap_r{args.r[0]}_l{args.l[0]}.png",
                title=f"per-block recovery rate, r={args.r[0]}, l={args.l[0]}",
            )
        return _EXIT_OK

    stream = _out_stream(args)
    try:
        emit_theory_table(stream, args.n, args.r, args.l, args.origin)
    finally:
        if stream is not sys.stdout:
            stream.close()
    if args.figdir:
        Path(args.figdir).mkdir(parents=True, exist_ok=True)
        series = {}
        for r in args.r:
            rates = [
                average_recovery_rate(TheoryParams(n=args.n, r=r, l=l, origin=args.origin)).average
                for l in args.l
            ]
            series[f"r={r}"] = (list(args.l), rates)
        render_rate_curves(
            series,
            Path(args.figdir) / "theory_rates.png",
            title=f"average recovery rate, n={args.n}",
        )
    return _EXIT_OK


def _plan_images(args):
    if args.images:
        pairs = []
        for path in args.images:
            pairs.append((Path(path).stem, read_image(path)))
        return tuple(pairs)
    return synthetic_suite(count=args.synthetic, size=args.size)


def _run_sweep(args, strategies: tuple[str, ...]) -> int:
    plan = ExperimentPlan(
        images=_plan_images(args),
        r_values=tuple(args.r),
        l_values=tuple(args.l),
        strategies=strategies,
        tamper_origin=args.origin,
        trials=args.trials,
        master_seed=_seed_from(args),
        arnold_iterations=args.arnold_iterations,
    )
    result = run_plan(
        plan,
        out_dir=args.out_dir,
        save_masks=args.save_masks,
        save_recovered=args.save_recovered,
    )
    emit_cells_csv(sys.stdout, result.cells)
    if args.out_dir is None and args.trials_csv:
        with open(args.trials_csv, "w", newline="") as fh:
            emit_trials_csv(fh, result.records)
    if args.figdir:
        Path(args.figdir).mkdir(parents=True, exist_ok=True)
        series = comparison_series(result.cells)
        if series:
            render_rate_curves(
                series,
                Path(args.figdir) / "measured_rates.png",
                title="measured recovery rate by strategy",
            )
    failed = [c for c in result.cells if c.error is not None]
    for cell in failed:
        _status(f"cell failed: {cell.strategy} r={cell.r} l={cell.l}: {cell.error}")
    return _EXIT_CHECK_FAILED if failed else _EXIT_OK


def cmd_experiment(args) -> int:
    return _run_sweep(args, tuple(args.strategies.split(",")))


def cmd_compare(args) -> int:
    # fixed roster: the constrained mapping against all three baselines
    return _run_sweep(args, (DENEIGHBORHOOD, "random", "offset", "arnold"))


def cmd_audit_mapping(args) -> int:
    grid = BlockGrid(cols=args.n, rows=args.n)
    if args.strategy == DENEIGHBORHOOD:
        _require_feasible(grid, args.r)
    stream = _out_stream(args)
    rng = SplitMix64(_seed_from(args))
    bad = 0
    try:
        stream.write("key_index,strategy,r,bijection,min_chebyshev,violations\n")
        for index in range(args.keys):
            k3 = rng.next_u64()
            mapping = build_mapping(
                args.strategy, k3, grid, r=args.r, arnold_iterations=args.arnold_iterations
            )
            audit = verify_mapping(mapping, grid)
            ok = audit.is_bijection and audit.violations == 0
            bad += 0 if ok else 1
            r_text = args.r if args.strategy == DENEIGHBORHOOD else ""
            stream.write(
                f"{index},{args.strategy},{r_text},{str(audit.is_bijection).lower()},"
                f"{audit.min_chebyshev_distance},{audit.violations}\n"
            )
    finally:
        if stream is not sys.stdout:
            stream.close()
    _status(f"audited {args.keys} keys: {args.keys - bad} ok, {bad} violating")
    return _EXIT_CHECK_FAILED if bad else _EXIT_OK


# --- parser ---------------------------------------------------------


def _add_common_protocol_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--key", required=True, help="key file from keygen")
    p.add_argument("--r", type=int, default=None, help="neighborhood side (odd), deneighborhood only")
    p.add_argument("--strategy", choices=STRATEGIES, default=DENEIGHBORHOOD)
    p.add_argument("--arnold-iterations", type=int, default=1, help="scrambling rounds (arnold)")


def _add_sweep_flags(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--images", nargs="+", help="input image files")
    src.add_argument("--synthetic", type=int, help="number of generated test images")
    p.add_argument("--size", type=int, default=512, help="synthetic image side in pixels")
    p.add_argument("--r", type=_int_list, required=True, help="comma-separated r values")
    p.add_argument("--l", type=_int_list, required=True, help="comma-separated tamper sides")
    p.add_argument("--origin", type=_origin, default=BlockIndex(3, 5), help="tamper origin row,col")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int, default=None, help=f"master seed (or ${_SEED_ENV})")
    p.add_argument("--out-dir", default=None, help="artifact directory (tables, masks, recovered)")
    p.add_argument("--trials-csv", default=None, help="write per-trial rows here when no --out-dir")
    p.add_argument("--figdir", default=None, help="render figures into this directory")
    p.add_argument("--save-masks", action="store_true")
    p.add_argument("--save-recovered", action="store_true")
    p.add_argument("--arnold-iterations", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fragmark",
        description="Self-embedding fragile watermarking: tamper detection and recovery.",
        epilog=_EXIT_CODE_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="generate a fresh key file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("embed", help="embed watermarks into a grayscale image")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    _add_common_protocol_flags(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("tamper", help="overwrite blocks with seeded random content")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--region", type=_region, help="square region row,col,l (blocks, 0-based)")
    grp.add_argument("--random-blocks", type=int, help="tamper this many random blocks")
    p.add_argument("--seed", type=int, default=None, help=f"tamper seed (or ${_SEED_ENV})")
    p.set_defaults(func=cmd_tamper)

    p = sub.add_parser("verify", help="detect and localize tampering")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--mask", default=None, help="write the final tamper map as a PGM mask")
    _add_common_protocol_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("recover", help="restore tampered blocks from embedded data")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None, help="sidecar report path (default <out>.report.txt)")
    p.add_argument("--region", type=_region, default=None, help="ground truth row,col,l for the rate")
    _add_common_protocol_flags(p)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("analyze", help="theoretical recovery-rate tables")
    p.add_argument("--n", type=int, required=True, help="block grid side")
    p.add_argument("--r", type=_int_list, required=True)
    p.add_argument("--l", type=_int_list, required=True)
    p.add_argument("--origin", type=_origin, default=BlockIndex(0, 0))
    p.add_argument("--heatmap", action="store_true", help="per-block rates for a single (r, l)")
    p.add_argument("--out", default=None, help="write CSV here instead of stdout")
    p.add_argument("--figdir", default=None, help="render figures into this directory")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("experiment", help="Monte Carlo sweep over chosen strategies")
    _add_sweep_flags(p)
    p.add_argument(
        "--strategies", default=DENEIGHBORHOOD, help="comma-separated strategy names"
    )
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("compare", help="sweep the constrained mapping against all baselines")
    _add_sweep_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("audit-mapping", help="verify mapping constraints over many keys")
    p.add_argument("--n", type=int, required=True, help="block grid side")
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--strategy", choices=STRATEGIES, default=DENEIGHBORHOOD)
    p.add_argument("--arnold-iterations", type=int, default=1)
    p.add_argument("--keys", type=int, default=1, help="how many keys to audit")
    p.add_argument("--seed", type=int, default=None, help=f"key-stream seed (or ${_SEED_ENV})")
    p.add_argument("--out", default=None, help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_audit_mapping)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParameterError, DimensionError, RateUndefinedError) as exc:
        _status(f"error: {exc}")
        return _EXIT_PARAMS
    except KeyFileError as exc:
        _status(f"key file error: {exc}")
        return _EXIT_IO
    except MappingConstructionError as exc:
        _status(f"mapping error: {exc}")
        return _EXIT_MAPPING
    except (OSError, FragmarkError) as exc:
        _status(f"i/o error: {exc}")
        return _EXIT_IO
    except Exception as exc:  # total mapping: nothing escapes unlabeled
        _status(f"internal error: {type(exc).__name__}: {exc}")
        return _EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
