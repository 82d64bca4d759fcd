"""
Equipped Markov compacta - command-line entry point
Graded graphs, cotransition equipments, Markov measures, the ergodic method and RSK
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from pydantic import TypeAdapter, ValidationError

from absolute.ergodic_method import (
    ErgodicityTester, backward_table, boundary_limit_estimate, boundary_sequence,
    exchangeability_check, martin_kernel, martin_table, pascal_frequency_sequence,
)
from config.settings import Settings, load_settings
from equipment.cotransitions import CocycleChecker, central_equipment, random_equipment
from graphs.graded_graph import BUILTIN_GRAPHS, GradedGraph, PascalGraph, YoungGraph, builtin_graph
from measures.markov_measure import BernoulliMeasure, PlancherelMeasure, matches_equipment
from models.exceptions import CompactumError
from models.pydantic_models import (
    FinitePath, LetterDistribution, RunConfig, SampledPath, StatisticSpec, YoungPath,
    format_rational, parse_rational,
)
from reporting.reporter import ReportGenerator
from rsk.correspondence import (
    compare_shape_distributions, plancherel_shapes, pushforward_samples, q_shape_path,
    rsk_pair, thoma_frequency_estimate,
)
from serialization.formats import (
    COTRANSITION_TABLES, csv_text, dump_model, dump_models, load_equipment, load_graph,
    load_measure, read_json, write_output,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2

reporter = ReportGenerator()

SAMPLED_PATHS = TypeAdapter(List[SampledPath])
YOUNG_PATHS = TypeAdapter(List[YoungPath])


class Context:
    """Parsed arguments, validated run configuration and settings of one invocation"""

    def __init__(self, args: argparse.Namespace, settings: Settings):
        self.args = args
        self.settings = settings
        self.config = RunConfig(
            command=[args.group, args.command],
            inputs=[v for k, v in vars(args).items() if k in ("graph", "equipment", "measure", "file") and v],
            depth=args.depth,
            level=getattr(args, "level", None),
            seed=args.seed,
            samples=args.samples,
            tolerance=args.tolerance,
            threshold=args.threshold,
            out=args.out,
            fmt=_output_format(args),
        )

    @property
    def cap(self) -> int:
        return self.args.cap or self.settings.enumeration_cap

    @property
    def samples(self) -> int:
        return self.config.samples or self.settings.samples

    def emit(self, text: str) -> None:
        write_output(text, self.config.out, self.settings.output_dir)

    def emit_report(self, report, csv_fields: Optional[Sequence[str]] = None, csv_rows=None) -> None:
        fmt = self.config.fmt
        if fmt == "json":
            self.emit(dump_model(report))
        elif fmt == "csv" and csv_fields is not None:
            self.emit(csv_text(csv_fields, csv_rows, self.settings.csv_significant_digits))
        else:
            self.emit(reporter.generate_markdown_report(report))

    def emit_value(self, payload: Dict[str, str], text: str) -> None:
        if self.config.fmt == "json":
            self.emit(json.dumps(payload, indent=2) + "\n")
        else:
            self.emit(text + "\n")


OUTPUT_SUFFIXES = {".csv": "csv", ".json": "json", ".md": "md"}


def _output_format(args: argparse.Namespace) -> str:
    """--json, an explicit --format, or the suffix of --out"""
    if args.json:
        return "json"
    if args.format is None:
        suffix = Path(args.out).suffix.lower() if args.out else ""
        return OUTPUT_SUFFIXES.get(suffix, "text")
    return args.format


def _graph(ctx: Context, needed_level: Optional[int] = None) -> GradedGraph:
    """Graph argument; a bare built-in name gets depth needed_level + 1"""
    depth = None if needed_level is None else needed_level + 1
    return load_graph(ctx.args.graph, depth)


def _levels(text: str) -> List[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _check_exit(passed: bool) -> int:
    return EXIT_OK if passed else EXIT_CHECK_FAILED


# graph

def graph_validate(ctx: Context) -> int:
    """Validate a JSON graph file"""
    graph = load_graph(ctx.args.graph, validate=False)
    report = graph.validate()
    ctx.emit_report(report)
    return _check_exit(report.passed)


def graph_builtin(ctx: Context) -> int:
    """Write a built-in graph in the JSON graph format"""
    if ctx.config.depth is None:
        raise CompactumError("graph builtin needs --depth")
    graph = builtin_graph(ctx.args.name, ctx.config.depth)
    ctx.emit(dump_model(graph.to_document()))
    return EXIT_OK


# equip

def equip_central(ctx: Context) -> int:
    """Central equipment rows up to the deepest level (or --level)"""
    graph = _graph(ctx, ctx.config.level or ctx.config.depth)
    sys_ = central_equipment(graph)
    ctx.emit(dump_models(sys_.to_tables(ctx.config.level), COTRANSITION_TABLES))
    return EXIT_OK


def equip_random(ctx: Context) -> int:
    """Seeded random equipment with exact rational rows"""
    graph = _graph(ctx, ctx.config.level or ctx.config.depth)
    sys_ = random_equipment(graph, ctx.config.seed, ctx.config.level)
    ctx.emit(dump_models(sys_.to_tables(ctx.config.level), COTRANSITION_TABLES))
    return EXIT_OK


def equip_check(ctx: Context) -> int:
    """Exhaustive cocycle-axiom check up to --depth"""
    graph = _graph(ctx, ctx.config.depth)
    level_bound = ctx.config.depth or graph.depth - 1
    sys_ = load_equipment(ctx.args.equipment, graph)
    report = CocycleChecker(ctx.cap).check_equipment(sys_, level_bound)
    ctx.emit_report(report)
    return _check_exit(report.passed)


# measure

def measure_cylinder(ctx: Context) -> int:
    """Cylinder probability of a path from level 0"""
    path = FinitePath.parse(ctx.args.path)
    graph = _graph(ctx, path.end_level)
    measure = load_measure(ctx.args.measure, graph)
    prob = measure.cylinder_prob(path)
    ctx.emit_value({"path": path.label(), "p": format_rational(prob)}, format_rational(prob))
    return EXIT_OK


def measure_check(ctx: Context) -> int:
    """Compare a measure's RN cocycle with an equipment"""
    graph = _graph(ctx, ctx.config.depth)
    depth = ctx.config.depth or graph.depth - 1
    measure = load_measure(ctx.args.measure, graph)
    sys_ = load_equipment(ctx.args.equipment, graph)
    report = matches_equipment(measure, sys_, depth, ctx.cap)
    ctx.emit_report(report)
    return _check_exit(report.passed)


def measure_sample(ctx: Context) -> int:
    """Sampled paths as CSV path_id,level,vertex (or JSON)"""
    graph = _graph(ctx, ctx.config.depth)
    depth = ctx.config.depth or graph.depth - 1
    measure = load_measure(ctx.args.measure, graph)
    paths = measure.sample_paths(depth, ctx.config.samples or 1, ctx.config.seed)
    if ctx.config.fmt == "json":
        sampled = [SampledPath(path_id=i, path=p) for i, p in enumerate(paths)]
        ctx.emit(dump_models(sampled, SAMPLED_PATHS))
        return EXIT_OK
    rows = [
        {"path_id": i, "level": level, "vertex": vertex}
        for i, p in enumerate(paths)
        for level, vertex in enumerate(p.vertices)
    ]
    ctx.emit(csv_text(["path_id", "level", "vertex"], rows))
    return EXIT_OK


def measure_plancherel(ctx: Context) -> int:
    """Plancherel measure on the Young graph as a JSON measure file"""
    if ctx.config.depth is None:
        raise CompactumError("measure plancherel needs --depth")
    measure = PlancherelMeasure(YoungGraph(ctx.config.depth))
    ctx.emit(dump_model(measure.to_document()))
    return EXIT_OK


def measure_bernoulli(ctx: Context) -> int:
    """Bernoulli(p) on the Pascal graph as a JSON measure file"""
    if ctx.config.depth is None:
        raise CompactumError("measure bernoulli needs --depth")
    measure = BernoulliMeasure(PascalGraph(ctx.config.depth), parse_rational(ctx.args.p))
    ctx.emit(dump_model(measure.to_document()))
    return EXIT_OK


def measure_induced(ctx: Context) -> int:
    """Cotransitions induced by a measure"""
    graph = _graph(ctx, ctx.config.depth)
    measure = load_measure(ctx.args.measure, graph)
    induced = measure.induced_cotransitions(ctx.config.depth)
    ctx.emit(dump_models(induced.to_tables(ctx.config.depth), COTRANSITION_TABLES))
    return EXIT_OK


# absolute

def absolute_backward(ctx: Context) -> int:
    """Distribution of x_n given x_N = w"""
    graph = _graph(ctx, ctx.args.terminal_level)
    sys_ = load_equipment(ctx.args.equipment, graph)
    level = ctx.config.level if ctx.config.level is not None else 0
    table = backward_table(sys_, ctx.args.terminal, level)
    if ctx.config.fmt == "json":
        ctx.emit(dump_model(table))
    elif ctx.config.fmt == "csv":
        rows = [{"vertex": e.vertex, "p": e.p} for e in table.entries]
        ctx.emit(csv_text(["vertex", "p"], rows, ctx.settings.csv_significant_digits))
    else:
        ctx.emit("".join(f"{e.vertex}\t{format_rational(e.p)}\n" for e in table.entries))
    return EXIT_OK


def absolute_kernel(ctx: Context) -> int:
    """Martin kernel K(p, w), or the whole level table with --level"""
    graph = _graph(ctx, ctx.args.terminal_level)
    sys_ = load_equipment(ctx.args.equipment, graph)
    if ctx.args.path is None:
        if ctx.config.level is None:
            raise CompactumError("absolute kernel needs --path or --level")
        ctx.emit(dump_model(martin_table(sys_, ctx.args.terminal, ctx.config.level, ctx.cap)))
        return EXIT_OK
    path = FinitePath.parse(ctx.args.path)
    value = martin_kernel(sys_, path, ctx.args.terminal)
    ctx.emit_value(
        {"path": path.label(), "terminal": ctx.args.terminal, "value": format_rational(value)},
        format_rational(value),
    )
    return EXIT_OK


def absolute_limit(ctx: Context) -> int:
    """Kernel values along a boundary sequence, CSV N,value"""
    args = ctx.args
    if args.terminals:
        terminals = [t for t in args.terminals.split(";") if t]
        graph = _graph(ctx)
        seq = boundary_sequence(graph, terminals)
    else:
        if args.p is None or not args.levels:
            raise CompactumError("absolute limit needs --p and --levels, or --terminals")
        levels = _levels(args.levels)
        seq = pascal_frequency_sequence(parse_rational(args.p), levels)
        graph = _graph(ctx, max(levels))
    sys_ = load_equipment(args.equipment, graph)
    event = FinitePath.parse(args.event) if ";" in args.event else args.event
    target = parse_rational(args.target) if args.target else None
    tolerance = ctx.config.tolerance or ctx.settings.limit_tolerance
    report = boundary_limit_estimate(sys_, seq, event, tolerance=tolerance, target=target)
    rows = [{"N": point.level, "value": point.value} for point in report.points]
    ctx.emit_report(report, ["N", "value"], rows)
    return EXIT_OK


def absolute_ergodic(ctx: Context) -> int:
    """Monte Carlo variance of a level-n statistic, CSV n,variance,stderr"""
    levels = _levels(ctx.args.levels)
    graph = _graph(ctx, max(levels))
    measure = load_measure(ctx.args.measure, graph)
    tester = ErgodicityTester(
        threshold=ctx.config.threshold or ctx.settings.ergodicity_threshold,
        sigmas=ctx.settings.stabilization_sigmas,
        check_depth=ctx.settings.central_check_depth,
        enumeration_cap=ctx.cap,
    )
    statistic = StatisticSpec.parse(ctx.args.statistic)
    report = tester.run(measure, statistic, levels, ctx.samples, ctx.config.seed)
    rows = [{"n": r.level, "variance": r.variance, "stderr": r.stderr} for r in report.rows]
    ctx.emit_report(report, ["n", "variance", "stderr"], rows)
    return EXIT_OK


def absolute_exchange(ctx: Context) -> int:
    """Exact exchangeability check on the Pascal graph"""
    level = ctx.config.level if ctx.config.level is not None else ctx.config.depth
    graph = _graph(ctx, level)
    level = graph.depth - 1 if level is None else level
    measure = load_measure(ctx.args.measure, graph)
    report = exchangeability_check(measure, level, ctx.cap)
    ctx.emit_report(report)
    return _check_exit(report.passed)


# rsk

def rsk_word(ctx: Context) -> int:
    """P and Q tableaux and the shape path of a word"""
    letters = [int(letter) for letter in ctx.args.letters]
    p_tableau, q_tableau = rsk_pair(letters)
    path = q_shape_path(letters)
    if ctx.config.fmt == "json":
        payload = {
            "P": p_tableau.model_dump(), "Q": q_tableau.model_dump(),
            "shapes": [list(shape) for shape in path.shapes()],
        }
        ctx.emit(json.dumps(payload, indent=2) + "\n")
        return EXIT_OK
    lines = ["P:"] + ["  " + " ".join(map(str, row)) for row in p_tableau.rows]
    lines += ["Q:"] + ["  " + " ".join(map(str, row)) for row in q_tableau.rows]
    lines.append("shapes: " + " ".join(str(shape) for shape in path.shapes()))
    ctx.emit("\n".join(lines) + "\n")
    return EXIT_OK


def _frequency_rows(report) -> List[dict]:
    return [{"row": r.index, "frequency": r.frequency, "stderr": r.stderr} for r in report.rows]


def rsk_push(ctx: Context) -> int:
    """Thoma frequencies of RSK pushforward samples, CSV row,frequency,stderr"""
    atoms = [a for a in (ctx.args.atoms or "").split(",") if a.strip()]
    dist = LetterDistribution(atoms=atoms)
    paths = pushforward_samples(dist, ctx.args.n, ctx.config.samples or 1000, ctx.config.seed)
    if ctx.args.paths_out:
        write_output(dump_models(paths, YOUNG_PATHS), ctx.args.paths_out, ctx.settings.output_dir)
    report = thoma_frequency_estimate(paths, ctx.args.rows or ctx.settings.row_cap)
    ctx.emit_report(report, ["row", "frequency", "stderr"], _frequency_rows(report))
    return EXIT_OK


def rsk_freq(ctx: Context) -> int:
    """Thoma frequencies of Young paths read from a JSON file"""
    paths = YOUNG_PATHS.validate_python(read_json(ctx.args.file))
    report = thoma_frequency_estimate(paths, ctx.args.rows or ctx.settings.row_cap)
    ctx.emit_report(report, ["row", "frequency", "stderr"], _frequency_rows(report))
    return EXIT_OK


def rsk_compare(ctx: Context) -> int:
    """Chi-square comparison of γ=1 pushforward shapes with Plancherel growth"""
    count = ctx.config.samples or 10000
    pushed = [path.shape for path in pushforward_samples(LetterDistribution(), ctx.args.n, count, ctx.config.seed)]
    reference = plancherel_shapes(ctx.args.n, count, ctx.config.seed + 1)
    ctx.emit_report(compare_shape_distributions(pushed, reference))
    return EXIT_OK


COMMANDS: Dict[str, Dict[str, Callable[[Context], int]]] = {
    "graph": {"validate": graph_validate, "builtin": graph_builtin},
    "equip": {"central": equip_central, "check": equip_check, "random": equip_random},
    "measure": {
        "cylinder": measure_cylinder, "check": measure_check, "sample": measure_sample,
        "plancherel": measure_plancherel, "bernoulli": measure_bernoulli, "induced": measure_induced,
    },
    "absolute": {
        "backward": absolute_backward, "kernel": absolute_kernel, "limit": absolute_limit,
        "ergodic": absolute_ergodic, "exchange": absolute_exchange,
    },
    "rsk": {"word": rsk_word, "push": rsk_push, "freq": rsk_freq, "compare": rsk_compare},
}


class _Parser(argparse.ArgumentParser):
    """ArgumentParser raising instead of exiting, so dispatch owns the exit code"""

    def error(self, message: str):
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--depth", type=int, help="level bound (checks) or number of levels (generators)")
    common.add_argument("--level", type=int, help="target level n")
    common.add_argument("--seed", type=int, default=0, help="64-bit seed (default 0)")
    common.add_argument("--samples", type=int, help="Monte Carlo sample count")
    common.add_argument("--tolerance", type=float, help="limit delta tolerance")
    common.add_argument("--threshold", type=float, help="ergodicity variance threshold")
    common.add_argument("--cap", type=int, help="path enumeration cap")
    common.add_argument("--out", help="output file (relative to $COMPACTA_OUTPUT_DIR)")
    common.add_argument("--format", choices=["text", "json", "csv", "md"], help="default: from the --out suffix, else text")
    common.add_argument("--json", action="store_true", help="same as --format json")
    common.add_argument("--config", help="YAML settings file")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="compacta", description="Equipped Markov compacta toolkit")
    groups = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)

    graph = groups.add_parser("graph").add_subparsers(dest="command", required=True, parser_class=_Parser)
    graph.add_parser("validate", parents=[common]).add_argument("graph")
    graph.add_parser("builtin", parents=[common]).add_argument("name", choices=sorted(BUILTIN_GRAPHS))

    equip = groups.add_parser("equip").add_subparsers(dest="command", required=True, parser_class=_Parser)
    equip.add_parser("central", parents=[common]).add_argument("graph")
    equip.add_parser("random", parents=[common]).add_argument("graph")
    check = equip.add_parser("check", parents=[common])
    check.add_argument("graph")
    check.add_argument("equipment")

    measure = groups.add_parser("measure").add_subparsers(dest="command", required=True, parser_class=_Parser)
    cylinder = measure.add_parser("cylinder", parents=[common])
    cylinder.add_argument("graph")
    cylinder.add_argument("measure")
    cylinder.add_argument("path", help='path label such as "0,0;1,1;2,1"')
    mcheck = measure.add_parser("check", parents=[common])
    mcheck.add_argument("graph")
    mcheck.add_argument("measure")
    mcheck.add_argument("equipment")
    for name in ("sample", "induced"):
        sub = measure.add_parser(name, parents=[common])
        sub.add_argument("graph")
        sub.add_argument("measure")
    measure.add_parser("plancherel", parents=[common])
    measure.add_parser("bernoulli", parents=[common]).add_argument("--p", required=True)

    absolute = groups.add_parser("absolute").add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("backward", "kernel"):
        sub = absolute.add_parser(name, parents=[common])
        sub.add_argument("graph")
        sub.add_argument("equipment")
        sub.add_argument("terminal")
        if name == "kernel":
            sub.add_argument("--path")
    limit = absolute.add_parser("limit", parents=[common])
    limit.add_argument("graph")
    limit.add_argument("equipment")
    limit.add_argument("--event", required=True, help="path label or vertex")
    limit.add_argument("--p")
    limit.add_argument("--levels")
    limit.add_argument("--terminals", help="explicit terminals separated by ';'")
    limit.add_argument("--target")
    ergodic = absolute.add_parser("ergodic", parents=[common])
    ergodic.add_argument("graph")
    ergodic.add_argument("measure")
    ergodic.add_argument("--levels", required=True)
    ergodic.add_argument("--statistic", default="coordinate:1")
    exchange = absolute.add_parser("exchange", parents=[common])
    exchange.add_argument("graph")
    exchange.add_argument("measure")

    rsk = groups.add_parser("rsk").add_subparsers(dest="command", required=True, parser_class=_Parser)
    rsk.add_parser("word", parents=[common]).add_argument("letters", nargs="+")
    push = rsk.add_parser("push", parents=[common])
    push.add_argument("--atoms", default="")
    push.add_argument("--n", type=int, required=True)
    push.add_argument("--rows", type=int)
    push.add_argument("--paths-out")
    freq = rsk.add_parser("freq", parents=[common])
    freq.add_argument("file")
    freq.add_argument("--rows", type=int)
    rsk.add_parser("compare", parents=[common]).add_argument("--n", type=int, required=True)
    return parser


def _terminal_level(args: argparse.Namespace) -> None:
    """Level of the terminal argument for bare built-in graph names"""
    terminal = getattr(args, "terminal", None)
    args.terminal_level = None
    if terminal is None:
        return
    if terminal.startswith("("):
        args.terminal_level = sum(int(part) for part in terminal.strip("()").split(",") if part)
    elif "," in terminal:
        args.terminal_level = int(terminal.split(",")[0])


def dispatch(argv: Sequence[str]) -> int:
    """
    Run exactly one subcommand

    Returns:
        0 on success or a passed check, 1 on a failed check (witness
        printed), 2 on usage, format or input errors
    """
    try:
        args = build_parser().parse_args(list(argv))
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        _terminal_level(args)
        ctx = Context(args, load_settings(args.config))
        return COMMANDS[args.group][args.command](ctx)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(part) for part in first.get("loc", ()))
        print(f"error: invalid input {where}: {first.get('msg')}", file=sys.stderr)
    except (CompactumError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(dispatch(sys.argv[1:]))
