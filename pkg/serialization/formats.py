"""
File formats module
JSON loaders for graphs, equipments and measures, CSV rendering and atomic
output writing
"""

import csv
import io
import json
import logging
import os
import sys
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

from pydantic import TypeAdapter

from equipment.cotransitions import CotransitionSystem, central_equipment, from_table
from graphs.graded_graph import BUILTIN_GRAPHS, GradedGraph, PascalGraph, TabulatedGraph, builtin_graph
from measures.markov_measure import (
    BernoulliMeasure, BernoulliMixture, MarkovMeasure, PascalChain, PlancherelMeasure,
    TabulatedMarkovMeasure,
)
from models.exceptions import GraphFormatError, MeasureError
from models.pydantic_models import (
    CotransitionTable, GraphDocument, MeasureDocument, parse_rational,
)

logger = logging.getLogger(__name__)

COTRANSITION_TABLES = TypeAdapter(List[CotransitionTable])


def read_json(path: str) -> Any:
    """
    Raises:
        FileNotFoundError: missing file
        GraphFormatError: malformed JSON
    """
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})")


def load_graph(source: str, depth: Optional[int] = None, validate: bool = True) -> GradedGraph:
    """
    A built-in graph name ("pascal", "young", "pascal:6") or a JSON graph file

    A depth after the colon overrides `depth`; file graphs are validated on read.

    Raises:
        GraphFormatError: missing depth, malformed document or the first
            violated invariant when `validate` is set
    """
    name, _, explicit = source.partition(":")
    if name in BUILTIN_GRAPHS:
        if explicit:
            if not explicit.isdigit():
                raise GraphFormatError(f"bad depth in {source!r}")
            depth = int(explicit)
        if depth is None:
            raise GraphFormatError(f"built-in graph {name!r} needs a depth, e.g. {name}:6")
        return builtin_graph(name, depth)
    document = GraphDocument.model_validate(read_json(source))
    graph = TabulatedGraph.from_document(document)
    if validate:
        report = graph.validate()
        if not report.passed:
            raise GraphFormatError(f"{source}: {report.violations[0].detail}")
    logger.info("loaded graph %s with depth %d", source, graph.depth)
    return graph


def load_equipment(source: str, graph: GradedGraph) -> CotransitionSystem:
    """"central" or a JSON array of cotransition rows"""
    if source == "central":
        return central_equipment(graph)
    tables = COTRANSITION_TABLES.validate_python(read_json(source))
    return from_table(graph, tables)


def parse_components(text: str) -> List[tuple]:
    """ "w@p,w@p" -> [(w, p), ...] with exact rationals"""
    components = []
    for part in text.split(","):
        weight, _, p = part.partition("@")
        if not p:
            raise MeasureError(f"mixture component {part!r} is not weight@p")
        components.append((parse_rational(weight), parse_rational(p)))
    return components


def load_measure(source: str, graph: GradedGraph) -> MarkovMeasure:
    """
    A JSON measure file or a built-in family:

        plancherel              Young graph
        bernoulli:p             Pascal graph
        chain:p0,p1,...         Pascal graph, per-level up-probabilities
        mixture:w@p,w@p,...     Pascal graph
    """
    family, _, argument = source.partition(":")
    if family == "plancherel" and not argument:
        return PlancherelMeasure(graph)
    if family in ("bernoulli", "chain", "mixture"):
        if not isinstance(graph, PascalGraph):
            raise MeasureError(f"{family} measures need the built-in Pascal graph")
        if family == "bernoulli":
            return BernoulliMeasure(graph, parse_rational(argument))
        if family == "chain":
            return PascalChain(graph, [parse_rational(p) for p in argument.split(",") if p])
        return BernoulliMixture(graph, parse_components(argument))
    document = MeasureDocument.model_validate(read_json(source))
    return TabulatedMarkovMeasure.from_document(graph, document)


def dump_model(model: Any) -> str:
    return model.model_dump_json(by_alias=True, indent=2) + "\n"


def dump_models(models: Sequence[Any], adapter: TypeAdapter) -> str:
    return adapter.dump_json(list(models), by_alias=True, indent=2).decode() + "\n"


def format_decimal(value: Any, digits: int = 12) -> str:
    """Exact rationals and floats as decimals with `digits` significant digits"""
    if isinstance(value, Fraction):
        value = float(value)
    if isinstance(value, float):
        return f"{value:.{digits}g}"
    return str(value)


def csv_text(fieldnames: Sequence[str], rows: Iterable[Dict[str, Any]], digits: int = 12) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(fieldnames), extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: format_decimal(row.get(k, ""), digits) for k in fieldnames})
    return buffer.getvalue()


def resolve_output(out: str, output_dir: Optional[str] = None) -> Path:
    path = Path(out)
    if not path.is_absolute() and output_dir:
        path = Path(output_dir) / path
    return path


def write_output(text: str, out: Optional[str] = None, output_dir: Optional[str] = None) -> None:
    """
    Write to stdout, or atomically to a file (temp file in the target
    directory, then rename)
    """
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    path = resolve_output(out, output_dir)
    path.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile(
        mode="w", encoding="utf-8", dir=path.parent, prefix=f".{path.name}.", suffix=".tmp", delete=False
    ) as tmp:
        tmp.write(text)
        tmp.flush()
        os.fsync(tmp.fileno())
        tmp_path = tmp.name
    try:
        os.replace(tmp_path, path)
    except OSError:
        try:
            os.unlink(tmp_path)
        except OSError:
            pass  # Ignore cleanup errors
        raise
    logger.info("wrote %s", path)
