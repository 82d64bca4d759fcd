"""
Equipment module
Cotransition systems on a graded graph, the Markov cocycle they induce on
the tail relation, and exact checks of the cocycle axioms
"""

import logging
from abc import ABC, abstractmethod
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Tuple

import numpy as np

from graphs.graded_graph import GradedGraph, TabulatedGraph
from models.exceptions import CotransitionTableError, LevelError, TailEquivalenceError
from models.pydantic_models import (
    CocycleCheckReport, CocycleCounterexample, CocycleValue, CotransitionEntry,
    CotransitionTable, FinitePath,
)

logger = logging.getLogger(__name__)

# (predecessor or successor label, parallel-edge index)
EdgeKey = Tuple[str, int]
Cocycle = Callable[[FinitePath, FinitePath], CocycleValue]

ZERO = Fraction(0)
ONE = Fraction(1)


def tail_split(p: FinitePath, q: FinitePath) -> int:
    """
    Number of leading steps outside the common tail of two paths

    Steps j, j+1, ... coincide (vertices and edge choices) and the paths
    share vertex j; only steps 0..j-1 enter a cocycle.

    Raises:
        TailEquivalenceError: different start levels, lengths or endpoints
    """
    if p.start_level != q.start_level or len(p.vertices) != len(q.vertices):
        raise TailEquivalenceError(
            f"paths {p.label()} and {q.label()} do not span the same levels"
        )
    if p.endpoint != q.endpoint:
        raise TailEquivalenceError(
            f"paths {p.label()} and {q.label()} end at different vertices"
        )
    j = len(p.vertices) - 1
    while j > 0 and p.vertices[j - 1] == q.vertices[j - 1] and p.edge_choices[j - 1] == q.edge_choices[j - 1]:
        j -= 1
    return j


class CotransitionSystem(ABC):
    """
    Rows P^{n,x}(y, e) = Prob(x_n = y via edge e | x_{n+1} = x) for every
    vertex x above the initial level
    """

    central = False

    def __init__(self, graph: GradedGraph):
        self.graph = graph

    @abstractmethod
    def row(self, x: str) -> Dict[EdgeKey, Fraction]:
        """Distribution over incoming edges of x"""

    def is_unreachable(self, x: str) -> bool:
        return False

    def prob(self, x: str, y: str, edge: int = 0) -> Fraction:
        return self.row(x).get((y, edge), ZERO)

    def path_weight(self, path: FinitePath, steps: Optional[int] = None) -> Fraction:
        """Product of cotransitions along the first `steps` steps of a path"""
        weight = ONE
        for i in range(path.steps if steps is None else steps):
            weight *= self.prob(path.vertices[i + 1], path.vertices[i], path.edge_choices[i])
            if not weight:
                break
        return weight

    def cocycle(self, p: FinitePath, q: FinitePath) -> CocycleValue:
        """
        Markov cocycle of two tail-equivalent paths

        Product over the non-common steps of Prob(x_i|x_{i+1}) / Prob(y_i|y_{i+1}).
        A zero denominator gives the undefined flag.
        """
        self.graph.check_path(p)
        self.graph.check_path(q)
        split = tail_split(p, q)
        numerator = self.path_weight(p, split)
        denominator = self.path_weight(q, split)
        if not denominator:
            return CocycleValue.undefined_flag()
        return CocycleValue.of(numerator / denominator)

    def to_tables(self, max_level: Optional[int] = None) -> List[CotransitionTable]:
        """Rows for targets at levels 1..max_level in the JSON table form"""
        top = self.graph.depth - 1 if max_level is None else max_level
        tables = []
        for n in range(1, top + 1):
            for x in self.graph.level(n):
                if self.is_unreachable(x):
                    tables.append(CotransitionTable(level=n - 1, to=x, unreachable=True))
                    continue
                rows = [
                    CotransitionEntry(from_=y, edge=e, p=p)
                    for (y, e), p in self.row(x).items()
                ]
                tables.append(CotransitionTable(level=n - 1, to=x, rows=rows))
        return tables


class TabulatedCotransitions(CotransitionSystem):
    """Explicit cotransition rows, validated exactly (no renormalization)"""

    def __init__(
        self,
        graph: GradedGraph,
        rows: Dict[str, Dict[EdgeKey, Fraction]],
        unreachable: Iterable[str] = (),
        max_level: Optional[int] = None,
    ):
        super().__init__(graph)
        self.max_level = graph.depth - 1 if max_level is None else max_level
        self._rows = {x: dict(row) for x, row in rows.items()}
        self._unreachable: FrozenSet[str] = frozenset(unreachable)
        self._validate()

    def _validate(self) -> None:
        for x, row in self._rows.items():
            n = self.graph.level_of(x) - 1
            if n < 0:
                raise CotransitionTableError(f"row for root vertex {x}")
            incoming = dict(self.graph.predecessors(x))
            for (y, e), p in row.items():
                if e >= incoming.get(y, 0):
                    raise CotransitionTableError(
                        f"row ({n},{x}): probability on non-edge {y} -> {x} #{e}"
                    )
                if p < 0:
                    raise CotransitionTableError(f"row ({n},{x}): negative probability for {y}")
            if x in self._unreachable:
                continue
            total = sum(row.values(), ZERO)
            if total != 1:
                raise CotransitionTableError(f"row ({n},{x}) sums to {total}, not 1")
        for n in range(1, self.max_level + 1):
            for x in self.graph.level(n):
                if x not in self._rows and x not in self._unreachable:
                    raise CotransitionTableError(f"missing row ({n - 1},{x})")

    def row(self, x: str) -> Dict[EdgeKey, Fraction]:
        if x in self._rows:
            return dict(self._rows[x])
        if x in self._unreachable:
            return {}
        raise CotransitionTableError(f"no cotransition row for {x}")

    def is_unreachable(self, x: str) -> bool:
        return x in self._unreachable


class CentralCotransitions(CotransitionSystem):
    """
    Central equipment: P^{n,x}(y, e) = dim(y) / dim(x), so every cocycle
    value between paths with a common start is 1
    """

    central = True

    def __init__(self, graph: GradedGraph):
        super().__init__(graph)
        self.dimension = lru_cache(maxsize=None)(graph.dimension)

    def row(self, x: str) -> Dict[EdgeKey, Fraction]:
        total = self.dimension(x)
        if total == 0:
            raise CotransitionTableError(f"no path from the initial level to {x}")
        return {
            (y, e): Fraction(self.dimension(y), total)
            for y, k in self.graph.predecessors(x)
            for e in range(k)
        }


def central_equipment(graph: GradedGraph) -> CentralCotransitions:
    """
    Central (maximal-entropy) equipment of a graph

    Raises:
        CotransitionTableError: a tabulated graph has a vertex with no path
            from the initial level
    """
    if isinstance(graph, TabulatedGraph):
        for n in range(graph.depth):
            for v, dim in graph.level_dimensions(n).items():
                if dim == 0:
                    raise CotransitionTableError(f"no path from the initial level to {v}")
    return CentralCotransitions(graph)


def from_table(graph: GradedGraph, tables: List[CotransitionTable]) -> TabulatedCotransitions:
    """
    Build a validated equipment from JSON rows

    Raises:
        CotransitionTableError: row not summing to 1, support off the
            predecessor set, level mismatch, duplicate or missing rows
    """
    rows: Dict[str, Dict[EdgeKey, Fraction]] = {}
    unreachable = set()
    for table in tables:
        try:
            target_level = graph.level_of(table.to)
        except LevelError as exc:
            raise CotransitionTableError(str(exc))
        if table.level != target_level - 1:
            raise CotransitionTableError(
                f"row for {table.to} declares level {table.level}, expected {target_level - 1}"
            )
        if table.to in rows or table.to in unreachable:
            raise CotransitionTableError(f"duplicate row for {table.to}")
        if table.unreachable:
            unreachable.add(table.to)
            continue
        row: Dict[EdgeKey, Fraction] = {}
        for entry in table.rows:
            key = (entry.from_, entry.edge)
            if key in row:
                raise CotransitionTableError(f"row ({table.level},{table.to}): duplicate entry {key}")
            row[key] = entry.p
        rows[table.to] = row
    return TabulatedCotransitions(graph, rows, unreachable)


def random_equipment(
    graph: GradedGraph,
    seed: int,
    max_level: Optional[int] = None,
    zero_probability: float = 0.2,
    max_weight: int = 6,
) -> TabulatedCotransitions:
    """
    Random valid equipment with exact rational rows

    Each incoming edge gets an integer weight in 1..max_weight, zeroed with
    probability `zero_probability` (one edge per row always stays positive).
    """
    rng = np.random.default_rng(seed)
    top = graph.depth - 1 if max_level is None else max_level
    rows: Dict[str, Dict[EdgeKey, Fraction]] = {}
    for n in range(1, top + 1):
        for x in graph.level(n):
            keys = [(y, e) for y, k in graph.predecessors(x) for e in range(k)]
            weights = rng.integers(1, max_weight + 1, size=len(keys))
            weights[rng.random(len(keys)) < zero_probability] = 0
            if not weights.any():
                weights[rng.integers(len(keys))] = 1
            total = int(weights.sum())
            rows[x] = {key: Fraction(int(w), total) for key, w in zip(keys, weights)}
    return TabulatedCotransitions(graph, rows, max_level=top)


class TabulatedCocycle:
    """Cocycle given by an explicit table of pair values"""

    def __init__(self, values: Dict[Tuple[FinitePath, FinitePath], CocycleValue]):
        self._values = dict(values)

    @classmethod
    def from_equipment(cls, sys: CotransitionSystem, level_bound: int, cap: int) -> "TabulatedCocycle":
        values = {}
        for n in range(1, level_bound + 1):
            for group in sys.graph.paths_by_endpoint(n, cap).values():
                for p in group:
                    for q in group:
                        values[(p, q)] = sys.cocycle(p, q)
        return cls(values)

    def with_value(self, p: FinitePath, q: FinitePath, value: CocycleValue) -> "TabulatedCocycle":
        values = dict(self._values)
        values[(p, q)] = value
        return TabulatedCocycle(values)

    def __call__(self, p: FinitePath, q: FinitePath) -> CocycleValue:
        try:
            return self._values[(p, q)]
        except KeyError:
            raise TailEquivalenceError(f"no tabulated value for {p.label()} / {q.label()}")


class CocycleChecker:
    """Exhaustive exact check of ρ(p,p)=1, ρ(p,q)ρ(q,p)=1, ρ(p,q)ρ(q,r)=ρ(p,r)"""

    def __init__(self, enumeration_cap: int = 100000):
        self.enumeration_cap = enumeration_cap

    def check(
        self,
        cocycle: Cocycle,
        graph: GradedGraph,
        level_bound: int,
        support: Optional[Callable[[FinitePath], bool]] = None,
    ) -> CocycleCheckReport:
        """
        Check the axioms over all tail-equivalent triples up to a level

        Args:
            cocycle: any function of two paths
            graph: graph whose level paths are enumerated
            level_bound: deepest level checked
            support: keeps only the paths it accepts, e.g. positive-measure ones

        Returns:
            Report with counts and the first counterexample, if any
        """
        graph.check_level(level_bound)
        report = CocycleCheckReport(passed=True, level_bound=level_bound)
        logger.info("checking cocycle axioms up to level %d", level_bound)
        for n in range(1, level_bound + 1):
            for group in graph.paths_by_endpoint(n, self.enumeration_cap).values():
                if support is not None:
                    group = [p for p in group if support(p)]
                counterexample = self._check_class(cocycle, group, report)
                if counterexample is not None:
                    report.passed = False
                    report.counterexample = counterexample
                    logger.info("%s axiom fails at level %d", counterexample.axiom, n)
                    return report
        return report

    def _check_class(
        self, cocycle: Cocycle, group: List[FinitePath], report: CocycleCheckReport
    ) -> Optional[CocycleCounterexample]:
        size = len(group)
        values = {(i, j): cocycle(group[i], group[j]) for i in range(size) for j in range(size)}
        report.pairs_checked += len(values)

        for i in range(size):
            value = values[(i, i)]
            if not value.is_defined or value.value != 1:
                return CocycleCounterexample(
                    axiom="identity", paths=[group[i]], values=[value],
                    detail=f"ρ(p,p) = {value}",
                )
        for i in range(size):
            for j in range(i + 1, size):
                a, b = values[(i, j)], values[(j, i)]
                if not (a.is_defined and b.is_defined):
                    report.undefined_skipped += 1
                    continue
                if a.value * b.value != 1:
                    return CocycleCounterexample(
                        axiom="inverse", paths=[group[i], group[j]], values=[a, b],
                        detail=f"ρ(p,q)ρ(q,p) = {a.value * b.value}",
                    )
        for i in range(size):
            for j in range(size):
                for k in range(size):
                    a, b, c = values[(i, j)], values[(j, k)], values[(i, k)]
                    report.triples_checked += 1
                    if not (a.is_defined and b.is_defined and c.is_defined):
                        report.undefined_skipped += 1
                        continue
                    if a.value * b.value != c.value:
                        return CocycleCounterexample(
                            axiom="multiplicative", paths=[group[i], group[j], group[k]],
                            values=[a, b, c],
                            detail=f"ρ(p,q)ρ(q,r) = {a.value * b.value} but ρ(p,r) = {c.value}",
                        )
        return None

    def check_equipment(self, sys: CotransitionSystem, level_bound: int) -> CocycleCheckReport:
        return self.check(sys.cocycle, sys.graph, level_bound)


def check_cocycle_axioms(sys: CotransitionSystem, level_bound: int, cap: int = 100000) -> CocycleCheckReport:
    return CocycleChecker(cap).check_equipment(sys, level_bound)


def cocycle_eval(sys: CotransitionSystem, p: FinitePath, q: FinitePath) -> CocycleValue:
    return sys.cocycle(p, q)
