import argparse
import logging
import multiprocessing
import sys
from typing import List, Optional

from svg_builder import RenderSpec, SvgBuilder
from tanglegram.construct import FamilyFactory
from tanglegram.errors import FormatError, SizeLimitError, TanglegramError
from tanglegram.extremal import bound_check, format_report, max_crt, save_report
from tanglegram.lights import (
    gb_exact,
    gb_greedy,
    greedy_monte_carlo,
    greedy_reference,
    parse_sign_matrix,
    random_sign_matrix,
)
from tanglegram.optimize import crt_bruteforce, crt_exact, crt_heuristic
from tanglegram.tangle import is_isomorphic, random_instance, read_tgl, serialize_layout, write_tgl
from tanglegram.tree import H_EXACT_LIMIT, h_exact, h_formula

logger = logging.getLogger("tgl")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_LIMIT = 3
EXIT_INPUT = 4


def cmd_gen(args) -> int:
    if args.fig4:
        layout = FamilyFactory.fig4_tanglegram()
    elif args.family:
        if args.i is None:
            raise TanglegramError("--family ti needs --i")
        layout = FamilyFactory.d_star(args.i)
    else:
        if args.size is None:
            raise TanglegramError("--random needs --size")
        layout = random_instance(args.size, args.seed)

    if args.out:
        write_tgl(args.out, layout)
        logger.info("wrote size %d tanglegram to %s", layout.n, args.out)
    else:
        sys.stdout.write(serialize_layout(layout))
    return EXIT_OK


def cmd_crt(args) -> int:
    layout = read_tgl(args.input)
    t = layout.tanglegram
    if args.method == "exact":
        result = crt_exact(t, jobs=args.jobs)
    elif args.method == "brute":
        result = crt_bruteforce(t)
    else:
        result = crt_heuristic(t, seed=args.seed, restarts=args.restarts, both_sides=args.both_sides)

    if result.method == "heuristic":
        guarantee = result.chain.guarantee if result.chain else 0
        print(f"ub {result.value} guarantee {guarantee}")
    else:
        print(f"crt {result.value}")
    logger.debug("%s search explored %d nodes", result.method, result.nodes_explored)

    if args.witness:
        write_tgl(args.witness, result.witness)
        logger.info("witness written to %s", args.witness)
    return EXIT_OK


def cmd_render(args) -> int:
    layout = read_tgl(args.input)
    spec = RenderSpec(
        width=args.width,
        height=args.height,
        leaf_gap=args.leaf_gap,
        show_crossing_count=args.caption,
    )
    builder = SvgBuilder(spec)
    builder.add_layout(layout)
    builder.save(args.out)
    return EXIT_OK


def cmd_h(args) -> int:
    if args.max_n < 1:
        raise TanglegramError("--max-n must be positive")
    if args.max_n > H_EXACT_LIMIT:
        raise SizeLimitError("exhaustive h(n)", args.max_n, H_EXACT_LIMIT)
    for n in range(1, args.max_n + 1):
        exact, _ = h_exact(n)
        formula = h_formula(n)
        verdict = "match" if exact == formula else "mismatch"
        print(f"n {n} exact {exact} formula {formula} {verdict}")
    return EXIT_OK


def _format_signs(values) -> str:
    return " ".join(f"{v:+d}" for v in values)


def cmd_gb(args) -> int:
    if args.random:
        if args.size is None:
            raise TanglegramError("--random needs --size")
        m = random_sign_matrix(args.size, args.seed)
    else:
        try:
            if args.matrix:
                with open(args.matrix, "r", encoding="utf-8") as f:
                    text = f.read()
            else:
                text = sys.stdin.read()
        except (OSError, UnicodeDecodeError) as e:
            raise FormatError(f"cannot read sign matrix: {e}") from e
        m = parse_sign_matrix(text)
        if args.size is not None and args.size != m.n:
            raise TanglegramError(f"--size {args.size} does not match the {m.n}x{m.n} matrix")

    if args.greedy and args.trials > 1:
        mean, stderr = greedy_monte_carlo(m, args.trials, seed=args.seed, jobs=args.jobs)
        print(f"mean {mean:.3f}")
        print(f"stderr {stderr:.3f}")
        print(f"reference {greedy_reference(m.n):.3f}")
        return EXIT_OK

    result = gb_greedy(m, args.seed) if args.greedy else gb_exact(m)
    print(f"value {result.value}")
    print(f"x {_format_signs(result.x)}")
    print(f"y {_format_signs(result.y)}")
    return EXIT_OK


def _flag(value) -> str:
    if value is None:
        return "n/a"
    return str(value).lower()


def cmd_search_max(args) -> int:
    report = max_crt(args.n, jobs=args.jobs)
    sys.stdout.write(format_report(report))
    verdicts = bound_check(report)
    print(f"strict_upper {_flag(verdicts.strict_upper)}")
    print(f"claimed_upper {_flag(verdicts.claimed_upper)}")
    print(f"provable_upper {_flag(verdicts.provable_upper)}")
    print(f"family_lower {_flag(verdicts.family_lower)}")
    print(f"family_lower_held {_flag(verdicts.family_lower_held)}")
    if verdicts.earlier_lower is not None:
        print(f"earlier_lower {verdicts.earlier_lower:.3f}")
    if args.report_out:
        save_report(args.report_out, report)
        logger.info("report written to %s", args.report_out)
    return EXIT_OK


def cmd_iso(args) -> int:
    first = read_tgl(args.first)
    second = read_tgl(args.second)
    same = is_isomorphic(first.tanglegram, second.tanglegram)
    print("isomorphic" if same else "not isomorphic")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tgl", description="Tanglegram crossing-number toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="Write a tanglegram in .tgl format")
    source = gen.add_mutually_exclusive_group(required=True)
    source.add_argument("--family", choices=["ti"], help="Extremal family T_i")
    source.add_argument("--fig4", action="store_true", help="Size-8 tanglegram with crossing number 9")
    source.add_argument("--random", action="store_true", help="Random instance")
    gen.add_argument("--i", type=int, help="Family level")
    gen.add_argument("--size", type=int, help="Leaf count for --random")
    gen.add_argument("--seed", type=int, default=0, help="Seed for --random")
    gen.add_argument("-o", "--out", help="Output .tgl file (default: stdout)")
    gen.set_defaults(func=cmd_gen)

    crt = sub.add_parser("crt", help="Crossing number of a .tgl file")
    crt.add_argument("input", help="Input .tgl file")
    crt.add_argument("--method", choices=["exact", "brute", "heuristic"], default="exact")
    crt.add_argument("--jobs", type=int, help="Workers for the exact solver (0 = auto, default $TGL_JOBS or 1)")
    crt.add_argument("--witness", help="Write the achieving layout to this .tgl file")
    crt.add_argument("--seed", type=int, default=0, help="Seed for heuristic restarts")
    crt.add_argument("--restarts", type=int, default=1, help="Local search restarts for the heuristic")
    crt.add_argument("--both-sides", action="store_true", help="Also run the mirrored switching chain")
    crt.set_defaults(func=cmd_crt)

    render = sub.add_parser("render", help="Draw a .tgl file as SVG")
    render.add_argument("input", help="Input .tgl file")
    render.add_argument("-o", "--out", required=True, help="Output .svg file")
    render.add_argument("--width", type=int, default=RenderSpec.width)
    render.add_argument("--height", type=int, help="Canvas height (default: derived from the leaf gap)")
    render.add_argument("--leaf-gap", type=int, default=RenderSpec.leaf_gap)
    render.add_argument("--caption", dest="caption", action="store_true", default=True)
    render.add_argument("--no-caption", dest="caption", action="store_false")
    render.set_defaults(func=cmd_render)

    h = sub.add_parser("h", help="Tabulate h(n), exhaustive against the closed form")
    h.add_argument("--max-n", type=int, default=12)
    h.set_defaults(func=cmd_h)

    gb = sub.add_parser("gb", help="Unbalancing-lights game on a +-1 matrix")
    gb.add_argument("matrix", nargs="?", help="Matrix file (default: stdin)")
    gb.add_argument("--size", type=int, help="Matrix dimension")
    mode = gb.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="Exact maximum (default)")
    mode.add_argument("--greedy", action="store_true", help="Random y with majority rows")
    gb.add_argument("--random", action="store_true", help="Play on a random matrix of --size")
    gb.add_argument("--seed", type=int, default=0)
    gb.add_argument("--trials", type=int, default=1, help="Monte-Carlo trials for --greedy")
    gb.add_argument("--jobs", type=int, help="Workers for Monte-Carlo trials")
    gb.set_defaults(func=cmd_gb)

    search = sub.add_parser("search-max", help="Largest crossing number over all size-n tanglegrams")
    search.add_argument("--n", type=int, required=True)
    search.add_argument("--jobs", type=int, help="Workers (0 = auto, default $TGL_JOBS or 1)")
    search.add_argument("--report-out", help="Save the report as key-value text")
    search.set_defaults(func=cmd_search_max)

    iso = sub.add_parser("iso", help="Tanglegram isomorphism of two .tgl files")
    iso.add_argument("first")
    iso.add_argument("second")
    iso.set_defaults(func=cmd_iso)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except SizeLimitError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_LIMIT
    except FormatError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except TanglegramError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    multiprocessing.freeze_support()  # Windows support
    sys.exit(main())
