"""
Graded graph module
Finite-depth truncations of N-graded graphs (Markov compacta with finite
levels) and exact path-counting and path-enumeration primitives
"""

import logging
from abc import ABC, abstractmethod
from collections import defaultdict
from functools import lru_cache
from math import comb, factorial, prod
from typing import Dict, List, Optional, Set, Tuple

from models.exceptions import EnumerationCapExceeded, GraphFormatError, LevelError
from models.pydantic_models import (
    FinitePath, GraphDocument, GraphEdge, ValidationReport, Violation,
)

logger = logging.getLogger(__name__)

Partition = Tuple[int, ...]


class GradedGraph(ABC):
    """
    Leveled vertex sets X_0..X_{depth-1} with integer edge multiplicities
    between consecutive levels. Immutable after construction.
    """

    mode = "graph"

    def __init__(self, depth: int):
        if depth < 1:
            raise LevelError(f"depth must be at least 1, got {depth}")
        self._depth = depth

    @property
    def depth(self) -> int:
        return self._depth

    @abstractmethod
    def level(self, n: int) -> List[str]:
        """Vertex labels of level n"""

    @abstractmethod
    def level_of(self, label: str) -> int:
        """Level of a vertex; LevelError for unknown labels"""

    @abstractmethod
    def successors(self, label: str) -> List[Tuple[str, int]]:
        """(w, mult) pairs with mult > 0 at the next level"""

    @abstractmethod
    def predecessors(self, label: str) -> List[Tuple[str, int]]:
        """(y, mult) pairs with mult > 0 at the previous level"""

    def roots(self) -> List[str]:
        return self.level(0)

    def has_vertex(self, label: str) -> bool:
        try:
            self.level_of(label)
        except LevelError:
            return False
        return True

    def mult(self, v: str, w: str) -> int:
        for x, k in self.successors(v):
            if x == w:
                return k
        return 0

    def coordinates(self, label: str) -> Tuple[int, ...]:
        """Integer coordinates encoded in a label such as "4,2" or "(3,1)" """
        self.level_of(label)
        body = label.strip().strip("()")
        if not body:
            return ()
        try:
            return tuple(int(part) for part in body.split(","))
        except ValueError:
            raise LevelError(f"vertex {label!r} has no integer coordinates")

    def may_reach(self, v: str, w: str) -> bool:
        """Cheap necessary condition for a path v -> w; subclasses sharpen it"""
        return True

    def check_level(self, n: int) -> None:
        if not 0 <= n < self._depth:
            raise LevelError(f"level {n} outside 0..{self._depth - 1}")

    def is_path(self, path: FinitePath) -> bool:
        """Whether consecutive vertices are adjacent and edge choices in range"""
        try:
            self.check_path(path)
        except LevelError:
            return False
        return True

    def check_path(self, path: FinitePath) -> None:
        for i, vertex in enumerate(path.vertices):
            if self.level_of(vertex) != path.start_level + i:
                raise LevelError(f"vertex {vertex!r} is not at level {path.start_level + i}")
        for v, w, edge in zip(path.vertices, path.vertices[1:], path.edge_choices):
            if edge >= self.mult(v, w):
                raise LevelError(f"no edge #{edge} from {v!r} to {w!r}")

    def path_count(self, v: str, w: str) -> int:
        """
        Number of paths v -> w counted with edge multiplicities

        Args:
            v: start vertex at level m
            w: end vertex at level n >= m

        Returns:
            Exact integer count (1 for v == w)
        """
        m, n = self.level_of(v), self.level_of(w)
        if m > n:
            raise LevelError(f"{v!r} (level {m}) is above {w!r} (level {n})")
        counts: Dict[str, int] = {v: 1}
        for _ in range(m, n):
            step: Dict[str, int] = defaultdict(int)
            for u, c in counts.items():
                for x, k in self.successors(u):
                    if self.may_reach(x, w):
                        step[x] += c * k
            counts = step
        return counts.get(w, 0)

    def dimension(self, v: str) -> int:
        """Number of paths from the initial level to v"""
        return sum(self.path_count(r, v) for r in self.roots())

    def level_dimensions(self, n: int) -> Dict[str, int]:
        """dimension() of every level-n vertex in one forward pass"""
        self.check_level(n)
        counts: Dict[str, int] = {r: 1 for r in self.roots()}
        for _ in range(n):
            step: Dict[str, int] = defaultdict(int)
            for u, c in counts.items():
                for x, k in self.successors(u):
                    step[x] += c * k
            counts = step
        return {v: counts.get(v, 0) for v in self.level(n)}

    def cone(self, w: str, n: int) -> List[str]:
        """Level-n vertices having a path to w, in level order"""
        alive = self._backward_sets(w, n)
        order = {v: i for i, v in enumerate(self.level(n))}
        return sorted(alive[n], key=order.__getitem__)

    def _backward_sets(self, w: str, n: int) -> Dict[int, Set[str]]:
        top = self.level_of(w)
        self.check_level(n)
        if n > top:
            raise LevelError(f"level {n} is above the level {top} of {w!r}")
        alive = {top: {w}}
        for level in range(top, n, -1):
            alive[level - 1] = {y for x in alive[level] for y, _ in self.predecessors(x)}
        return alive

    def enumerate_paths(self, v: str, w: str, cap: int) -> List[FinitePath]:
        """
        All paths v -> w, distinguishing parallel edges

        Raises:
            EnumerationCapExceeded: if path_count(v, w) > cap
        """
        count = self.path_count(v, w)
        if count > cap:
            raise EnumerationCapExceeded(count, cap)
        m = self.level_of(v)
        alive = self._backward_sets(w, m)
        if v not in alive[m]:
            return []
        paths = [FinitePath(start_level=m, vertices=(v,))]
        for level in range(m + 1, self.level_of(w) + 1):
            paths = [
                p.extend(x, e)
                for p in paths
                for x, k in self.successors(p.endpoint)
                if x in alive[level]
                for e in range(k)
            ]
        return paths

    def enumerate_level_paths(self, n: int, cap: int) -> List[FinitePath]:
        """All paths from the initial level to level n"""
        total = sum(self.level_dimensions(n).values())
        if total > cap:
            raise EnumerationCapExceeded(total, cap)
        logger.info("enumerating %d paths to level %d", total, n)
        paths = [FinitePath(vertices=(r,)) for r in self.roots()]
        for _ in range(n):
            paths = [
                p.extend(x, e)
                for p in paths
                for x, k in self.successors(p.endpoint)
                for e in range(k)
            ]
        return paths

    def paths_by_endpoint(self, n: int, cap: int) -> Dict[str, List[FinitePath]]:
        """Level-n paths grouped by their endpoint (the finite tail classes)"""
        groups: Dict[str, List[FinitePath]] = defaultdict(list)
        for path in self.enumerate_level_paths(n, cap):
            groups[path.endpoint].append(path)
        return dict(groups)

    def validate(self) -> ValidationReport:
        """
        Check the graph invariants

        Returns:
            Report listing dangling vertices, dead ends, empty level pairs and
            document problems; passed when there are none
        """
        violations = list(self._document_issues())
        roots = self.level(0)
        if not roots:
            violations.append(Violation(kind="empty level", level=0, detail="level 0 has no vertices"))
        elif self.mode == "graph" and len(roots) != 1:
            violations.append(Violation(
                kind="root", level=0,
                detail=f"graph mode needs exactly one root, found {len(roots)}",
            ))
        for n in range(self._depth):
            vertices = self.level(n)
            if not vertices:
                violations.append(Violation(kind="empty level", level=n, detail=f"level {n} has no vertices"))
                continue
            if n > 0:
                for w in vertices:
                    if not self.predecessors(w):
                        violations.append(Violation(
                            kind="dangling vertex", vertex=w, level=n,
                            detail=f"{w} has no incoming edge",
                        ))
            if n < self._depth - 1:
                positive = False
                for v in vertices:
                    if self.successors(v):
                        positive = True
                    else:
                        violations.append(Violation(
                            kind="dead end", vertex=v, level=n,
                            detail=f"{v} has no outgoing edge",
                        ))
                if not positive:
                    violations.append(Violation(
                        kind="zero multiplicities", level=n,
                        detail=f"no positive multiplicity between levels {n} and {n + 1}",
                    ))
        return ValidationReport(passed=not violations, depth=self._depth, violations=violations)

    def _document_issues(self) -> List[Violation]:
        return []

    def to_document(self) -> GraphDocument:
        levels = [self.level(n) for n in range(self._depth)]
        edges = [
            GraphEdge(from_=v, to=w, mult=k)
            for level in levels[:-1]
            for v in level
            for w, k in self.successors(v)
        ]
        return GraphDocument(levels=levels, edges=edges, mode=self.mode)


class TabulatedGraph(GradedGraph):
    """Graph given by explicit level lists and an edge multiplicity table"""

    def __init__(self, levels: List[List[str]], edges: List[Tuple[str, str, int]], mode: str = "graph"):
        if not levels:
            raise GraphFormatError("graph has no levels")
        super().__init__(len(levels))
        self.mode = mode
        self._levels = [list(level) for level in levels]
        self._level_of: Dict[str, int] = {}
        self._issues: List[Violation] = []
        self._succ: Dict[str, List[Tuple[str, int]]] = defaultdict(list)
        self._pred: Dict[str, List[Tuple[str, int]]] = defaultdict(list)

        for n, level in enumerate(self._levels):
            for label in level:
                if label in self._level_of:
                    self._issues.append(Violation(
                        kind="duplicate label", vertex=label, level=n,
                        detail=f"{label} already appears at level {self._level_of[label]}",
                    ))
                    continue
                self._level_of[label] = n

        seen: Set[Tuple[str, str]] = set()
        for v, w, k in edges:
            if v not in self._level_of or w not in self._level_of:
                missing = v if v not in self._level_of else w
                self._issues.append(Violation(
                    kind="unknown vertex", vertex=missing,
                    detail=f"edge {v} -> {w} names an unknown vertex",
                ))
                continue
            if self._level_of[w] != self._level_of[v] + 1:
                self._issues.append(Violation(
                    kind="bad level indexing", vertex=v, level=self._level_of[v],
                    detail=f"edge {v} -> {w} does not join consecutive levels",
                ))
                continue
            if (v, w) in seen:
                self._issues.append(Violation(
                    kind="duplicate edge", vertex=v, level=self._level_of[v],
                    detail=f"edge {v} -> {w} listed twice",
                ))
                continue
            if k < 0:
                self._issues.append(Violation(
                    kind="negative multiplicity", vertex=v, level=self._level_of[v],
                    detail=f"edge {v} -> {w} has multiplicity {k}",
                ))
                continue
            seen.add((v, w))
            if k > 0:
                self._succ[v].append((w, k))
                self._pred[w].append((v, k))

    @classmethod
    def from_document(cls, document: GraphDocument) -> "TabulatedGraph":
        return cls(
            levels=document.levels,
            edges=[(e.from_, e.to, e.mult) for e in document.edges],
            mode=document.mode,
        )

    def level(self, n: int) -> List[str]:
        self.check_level(n)
        return list(self._levels[n])

    def level_of(self, label: str) -> int:
        try:
            return self._level_of[label]
        except KeyError:
            raise LevelError(f"unknown vertex {label!r}")

    def successors(self, label: str) -> List[Tuple[str, int]]:
        self.level_of(label)
        return list(self._succ.get(label, ()))

    def predecessors(self, label: str) -> List[Tuple[str, int]]:
        self.level_of(label)
        return list(self._pred.get(label, ()))

    def _document_issues(self) -> List[Violation]:
        return list(self._issues)


class PascalGraph(GradedGraph):
    """Pascal graph: level n = {"n,k": 0 <= k <= n}, edges (n,k) -> (n+1,k), (n+1,k+1)"""

    @staticmethod
    def vertex(n: int, k: int) -> str:
        return f"{n},{k}"

    def _parse(self, label: str) -> Tuple[int, int]:
        try:
            n_text, k_text = label.split(",")
            n, k = int(n_text), int(k_text)
        except ValueError:
            raise LevelError(f"not a Pascal vertex: {label!r}")
        if not (0 <= k <= n < self._depth) or label != self.vertex(n, k):
            raise LevelError(f"vertex {label!r} is not in the Pascal graph of depth {self._depth}")
        return n, k

    def level(self, n: int) -> List[str]:
        self.check_level(n)
        return [self.vertex(n, k) for k in range(n + 1)]

    def level_of(self, label: str) -> int:
        return self._parse(label)[0]

    def coordinates(self, label: str) -> Tuple[int, ...]:
        return self._parse(label)

    def successors(self, label: str) -> List[Tuple[str, int]]:
        n, k = self._parse(label)
        if n + 1 >= self._depth:
            return []
        return [(self.vertex(n + 1, k), 1), (self.vertex(n + 1, k + 1), 1)]

    def predecessors(self, label: str) -> List[Tuple[str, int]]:
        n, k = self._parse(label)
        out = []
        if n > 0 and k >= 1:
            out.append((self.vertex(n - 1, k - 1), 1))
        if n > 0 and k <= n - 1:
            out.append((self.vertex(n - 1, k), 1))
        return out

    def may_reach(self, v: str, w: str) -> bool:
        (m, j), (n, k) = self._parse(v), self._parse(w)
        return 0 <= k - j <= n - m

    def path_count(self, v: str, w: str) -> int:
        (m, j), (n, k) = self._parse(v), self._parse(w)
        if m > n:
            raise LevelError(f"{v!r} is above {w!r}")
        return comb(n - m, k - j) if 0 <= k - j <= n - m else 0

    def dimension(self, v: str) -> int:
        n, k = self._parse(v)
        return comb(n, k)

    def cone(self, w: str, n: int) -> List[str]:
        top, k = self._parse(w)
        self.check_level(n)
        if n > top:
            raise LevelError(f"level {n} is above {w!r}")
        return [self.vertex(n, j) for j in range(max(0, k - (top - n)), min(n, k) + 1)]


def partition_label(shape: Partition) -> str:
    return "(" + ",".join(str(part) for part in shape) + ")"


def parse_partition(label: str) -> Partition:
    """Inverse of partition_label(); LevelError on anything else"""
    if not (label.startswith("(") and label.endswith(")")):
        raise LevelError(f"not a partition label: {label!r}")
    body = label[1:-1]
    try:
        shape = tuple(int(part) for part in body.split(",")) if body else ()
    except ValueError:
        raise LevelError(f"not a partition label: {label!r}")
    if any(part <= 0 for part in shape) or any(b > a for a, b in zip(shape, shape[1:])):
        raise LevelError(f"not a partition: {label!r}")
    if partition_label(shape) != label:
        raise LevelError(f"non-canonical partition label: {label!r}")
    return shape


@lru_cache(maxsize=None)
def partitions(n: int, largest: Optional[int] = None) -> Tuple[Partition, ...]:
    """Partitions of n with parts at most `largest`, in reverse lexicographic order"""
    if largest is None:
        largest = n
    if n == 0:
        return ((),)
    out = []
    for first in range(min(n, largest), 0, -1):
        for rest in partitions(n - first, first):
            out.append((first,) + rest)
    return tuple(out)


def conjugate(shape: Partition) -> Partition:
    return tuple(sum(1 for part in shape if part > j) for j in range(shape[0])) if shape else ()


def hook_length_dimension(shape: Partition) -> int:
    """Number of standard tableaux of the shape: n! / product of hook lengths"""
    columns = conjugate(shape)
    hooks = prod(
        shape[i] - j + columns[j] - i - 1
        for i in range(len(shape))
        for j in range(shape[i])
    )
    return factorial(sum(shape)) // hooks


def add_box(shape: Partition, row: int) -> Optional[Partition]:
    """Shape with a box added in `row`, or None when that is not a partition"""
    if row == len(shape):
        return shape + (1,)
    if 0 <= row < len(shape) and (row == 0 or shape[row - 1] > shape[row]):
        return shape[:row] + (shape[row] + 1,) + shape[row + 1:]
    return None


def remove_box(shape: Partition, row: int) -> Optional[Partition]:
    """Shape with the last box of `row` removed, or None when `row` has no corner"""
    if not 0 <= row < len(shape):
        return None
    below = shape[row + 1] if row + 1 < len(shape) else 0
    if shape[row] <= below:
        return None
    smaller = shape[:row] + (shape[row] - 1,) + shape[row + 1:]
    return smaller[:-1] if smaller[-1] == 0 else smaller


class YoungGraph(GradedGraph):
    """Young graph: level n = partitions of n, λ -> Λ when Λ adds one box to λ"""

    def shape(self, label: str) -> Partition:
        shape = parse_partition(label)
        if sum(shape) >= self._depth:
            raise LevelError(f"{label} is beyond depth {self._depth}")
        return shape

    def level(self, n: int) -> List[str]:
        self.check_level(n)
        return [partition_label(shape) for shape in partitions(n)]

    def level_of(self, label: str) -> int:
        return sum(self.shape(label))

    def coordinates(self, label: str) -> Tuple[int, ...]:
        return self.shape(label)

    def successors(self, label: str) -> List[Tuple[str, int]]:
        shape = self.shape(label)
        if sum(shape) + 1 >= self._depth:
            return []
        grown = (add_box(shape, row) for row in range(len(shape) + 1))
        return [(partition_label(s), 1) for s in grown if s is not None]

    def predecessors(self, label: str) -> List[Tuple[str, int]]:
        shape = self.shape(label)
        shrunk = (remove_box(shape, row) for row in range(len(shape)))
        return [(partition_label(s), 1) for s in shrunk if s is not None]

    def may_reach(self, v: str, w: str) -> bool:
        inner, outer = self.shape(v), self.shape(w)
        return len(inner) <= len(outer) and all(a <= b for a, b in zip(inner, outer))

    def dimension(self, v: str) -> int:
        return hook_length_dimension(self.shape(v))

    def path_count(self, v: str, w: str) -> int:
        if not self.shape(v):
            self.level_of(w)
            return self.dimension(w)
        return super().path_count(v, w)


def pascal_graph(depth: int) -> PascalGraph:
    return PascalGraph(depth)


def young_graph(depth: int) -> YoungGraph:
    return YoungGraph(depth)


BUILTIN_GRAPHS = {"pascal": pascal_graph, "young": young_graph}


def builtin_graph(name: str, depth: int) -> GradedGraph:
    try:
        return BUILTIN_GRAPHS[name](depth)
    except KeyError:
        raise GraphFormatError(f"unknown built-in graph {name!r}; choose from {sorted(BUILTIN_GRAPHS)}")
