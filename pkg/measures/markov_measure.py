"""
Markov measure module
Markov measures on the path space of a graded graph: cylinder probabilities,
induced cotransitions, the Radon-Nikodym cocycle, matching against an
equipment and seeded sampling
"""

import logging
from abc import ABC, abstractmethod
from collections import defaultdict
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from equipment.cotransitions import (
    CotransitionSystem, EdgeKey, TabulatedCotransitions, tail_split,
)
from graphs.graded_graph import GradedGraph, PascalGraph, YoungGraph
from models.exceptions import LevelError, MeasureError
from models.pydantic_models import (
    CocycleValue, FinitePath, InitialEntry, MatchReport, MeasureDocument,
    RowMismatch, TransitionEntry, TransitionTable, WitnessPair,
)

logger = logging.getLogger(__name__)

ZERO = Fraction(0)
ONE = Fraction(1)

DYADIC_BITS = 53
DYADIC_SCALE = 1 << DYADIC_BITS


def dyadic_thresholds(probabilities: Iterable[Fraction]) -> np.ndarray:
    """
    ceil(c * 2^53) for each cumulative sum c of exact probabilities

    A 53-bit uniform integer u selects the first index whose threshold
    exceeds u, so outcome i has probability exactly
    (t_i - t_{i-1}) / 2^53, within 2^-53 of the rational value.
    """
    thresholds = []
    cumulative = ZERO
    for p in probabilities:
        cumulative += p
        thresholds.append(-((-cumulative.numerator * DYADIC_SCALE) // cumulative.denominator))
    return np.array(thresholds, dtype=np.int64)


class MarkovMeasure(ABC):
    """
    Initial distribution on level 0 and forward transition rows
    P_{n,x}(w, e) over the outgoing edges of every non-terminal vertex
    """

    def __init__(self, graph: GradedGraph):
        self.graph = graph

    @abstractmethod
    def initial(self) -> Dict[str, Fraction]:
        """Distribution over level-0 vertices"""

    @abstractmethod
    def forward_row(self, x: str) -> Dict[EdgeKey, Fraction]:
        """Distribution over outgoing (successor, edge) pairs; empty at the last level"""

    def forward_prob(self, x: str, w: str, edge: int = 0) -> Fraction:
        return self.forward_row(x).get((w, edge), ZERO)

    def cylinder_prob(self, path: FinitePath) -> Fraction:
        """
        Measure of the cylinder of a path from the initial level

        Paths off the support (non-adjacent vertices, zero-probability
        edges) get exactly 0.

        Raises:
            MeasureError: the path does not start at level 0
        """
        if path.start_level != 0:
            raise MeasureError(f"cylinder paths start at level 0, not {path.start_level}")
        if not self.graph.is_path(path):
            return ZERO
        prob = self.initial().get(path.vertices[0], ZERO)
        for x, w, e in zip(path.vertices, path.vertices[1:], path.edge_choices):
            if not prob:
                break
            prob *= self.forward_prob(x, w, e)
        return prob

    def level_marginals(self, n: int) -> List[Dict[str, Fraction]]:
        """Exact distributions of x_0, ..., x_n (vertices with mass only)"""
        self.graph.check_level(n)
        marginals = [{v: p for v, p in self.initial().items() if p}]
        for _ in range(n):
            nxt: Dict[str, Fraction] = defaultdict(Fraction)
            for y, mass in marginals[-1].items():
                for (x, _), f in self.forward_row(y).items():
                    if f:
                        nxt[x] += mass * f
            marginals.append(dict(nxt))
        return marginals

    def marginal(self, vertex: str) -> Fraction:
        return self.level_marginals(self.graph.level_of(vertex))[-1].get(vertex, ZERO)

    def induced_cotransitions(self, max_level: Optional[int] = None) -> TabulatedCotransitions:
        """
        Cotransitions Prob(x_n = y via e | x_{n+1} = x) by exact Bayes over
        the level marginals; vertices of zero mass are flagged unreachable
        """
        top = self.graph.depth - 1 if max_level is None else max_level
        marginals = self.level_marginals(top)
        rows: Dict[str, Dict[EdgeKey, Fraction]] = {}
        unreachable = []
        for n in range(top):
            joint: Dict[str, Dict[EdgeKey, Fraction]] = defaultdict(dict)
            for y, mass in marginals[n].items():
                for (x, e), f in self.forward_row(y).items():
                    if f:
                        joint[x][(y, e)] = mass * f
            for x in self.graph.level(n + 1):
                total = marginals[n + 1].get(x, ZERO)
                if not total:
                    unreachable.append(x)
                    continue
                rows[x] = {key: value / total for key, value in joint[x].items()}
        if unreachable:
            logger.warning("%d vertices have zero mass and are flagged unreachable", len(unreachable))
        return TabulatedCotransitions(self.graph, rows, unreachable, max_level=top)

    def rn_cocycle(self, p: FinitePath, q: FinitePath) -> CocycleValue:
        """Ratio of cylinder probabilities of two tail-equivalent paths"""
        tail_split(p, q)
        denominator = self.cylinder_prob(q)
        if not denominator:
            return CocycleValue.undefined_flag()
        return CocycleValue.of(self.cylinder_prob(p) / denominator)

    def sample_paths(self, depth_level: int, count: int, seed: int) -> List[FinitePath]:
        """Independent paths from level 0 to `depth_level`, deterministic in the seed"""
        walk = _BatchWalk(self, count, seed, keep_all=True)
        walk.run(depth_level)
        return walk.paths()

    def sample_path(self, depth_level: int, seed: int) -> FinitePath:
        return self.sample_paths(depth_level, 1, seed)[0]

    def endpoint_counts(self, levels: Sequence[int], count: int, seed: int) -> Dict[int, Dict[str, int]]:
        """
        Counts of the vertex x_n over `count` sampled paths, for each n in `levels`

        Only the requested levels are recorded, so long walks stay cheap.
        """
        walk = _BatchWalk(self, count, seed, record_levels=set(levels))
        walk.run(max(levels))
        return walk.counts()

    def to_document(self, max_level: Optional[int] = None) -> MeasureDocument:
        top = self.graph.depth - 1 if max_level is None else max_level
        initial = [InitialEntry(vertex=v, p=p) for v, p in self.initial().items()]
        forward = []
        for n in range(top):
            for x in self.graph.level(n):
                entries = [TransitionEntry(to=w, edge=e, p=p) for (w, e), p in self.forward_row(x).items()]
                forward.append(TransitionTable(level=n, from_=x, rows=entries))
        return MeasureDocument(initial=initial, forward=forward)


class _BatchWalk:
    """Level-by-level sampler for many paths sharing one numpy Generator"""

    def __init__(self, measure: MarkovMeasure, count: int, seed: int,
                 keep_all: bool = False, record_levels: Optional[set] = None):
        if count < 1:
            raise MeasureError("sample count must be positive")
        self.measure = measure
        self.count = count
        self.rng = np.random.default_rng(seed)
        self.keep_all = keep_all
        self.record_levels = record_levels or set()
        self._label_map: Dict[int, List[str]] = {}
        self.indices: Dict[int, np.ndarray] = {}
        self.edges: Dict[int, np.ndarray] = {}

    def run(self, depth_level: int) -> None:
        graph = self.measure.graph
        graph.check_level(depth_level)
        labels = graph.level(0)
        initial = self.measure.initial()
        thresholds = dyadic_thresholds(initial.get(v, ZERO) for v in labels)
        current = np.searchsorted(thresholds, self._uniforms(), side="right")
        if current.max() >= len(labels):
            raise MeasureError("initial distribution does not sum to 1")
        self._store(0, labels, current, None)
        logger.info("sampling %d paths to level %d", self.count, depth_level)
        for n in range(depth_level):
            next_labels = graph.level(n + 1)
            position = {v: i for i, v in enumerate(next_labels)}
            u = self._uniforms()
            nxt = np.empty(self.count, dtype=np.int64)
            chosen = np.zeros(self.count, dtype=np.int64)
            order = np.argsort(current, kind="stable")
            values, starts = np.unique(current[order], return_index=True)
            stops = np.append(starts[1:], self.count)
            for vertex_index, start, stop in zip(values, starts, stops):
                x = labels[vertex_index]
                row = list(self.measure.forward_row(x).items())
                row_thresholds = dyadic_thresholds(p for _, p in row)
                members = order[start:stop]
                picks = np.searchsorted(row_thresholds, u[members], side="right")
                if not row or picks.max() >= len(row):
                    raise MeasureError(f"forward row at {x} does not sum to 1")
                targets = np.array([position[w] for (w, _), _ in row], dtype=np.int64)
                edge_ids = np.array([e for (_, e), _ in row], dtype=np.int64)
                nxt[members] = targets[picks]
                chosen[members] = edge_ids[picks]
            current, labels = nxt, next_labels
            self._store(n + 1, labels, current, chosen)

    def _uniforms(self) -> np.ndarray:
        return self.rng.integers(0, DYADIC_SCALE, size=self.count, dtype=np.int64)

    def _store(self, n: int, labels: List[str], current: np.ndarray, chosen: Optional[np.ndarray]) -> None:
        if self.keep_all or n in self.record_levels:
            self._label_map[n] = labels
            self.indices[n] = current
            if chosen is not None:
                self.edges[n] = chosen

    def paths(self) -> List[FinitePath]:
        levels = sorted(self.indices)
        vertex_rows = [[self._label_map[n][i] for i in self.indices[n]] for n in levels]
        edge_rows = [self.edges[n].tolist() for n in levels[1:]]
        return [
            FinitePath(
                vertices=tuple(row[j] for row in vertex_rows),
                edge_choices=tuple(row[j] for row in edge_rows),
            )
            for j in range(self.count)
        ]

    def counts(self) -> Dict[int, Dict[str, int]]:
        out = {}
        for n in sorted(self.indices):
            values, counts = np.unique(self.indices[n], return_counts=True)
            out[n] = {self._label_map[n][v]: int(c) for v, c in zip(values, counts)}
        return out


class TabulatedMarkovMeasure(MarkovMeasure):
    """Measure given by explicit initial and forward tables, validated exactly"""

    def __init__(self, graph: GradedGraph, initial: Dict[str, Fraction],
                 forward: Dict[str, Dict[EdgeKey, Fraction]]):
        super().__init__(graph)
        self._initial = dict(initial)
        self._forward = {x: dict(row) for x, row in forward.items()}
        self._validate()

    def _validate(self) -> None:
        for v, p in self._initial.items():
            if self.graph.level_of(v) != 0:
                raise MeasureError(f"initial vertex {v} is not at level 0")
            if p < 0:
                raise MeasureError(f"negative initial probability at {v}")
        total = sum(self._initial.values(), ZERO)
        if total != 1:
            raise MeasureError(f"initial distribution sums to {total}, not 1")
        for x, row in self._forward.items():
            outgoing = dict(self.graph.successors(x))
            for (w, e), p in row.items():
                if e >= outgoing.get(w, 0):
                    raise MeasureError(f"forward row at {x}: probability on non-edge {x} -> {w} #{e}")
                if p < 0:
                    raise MeasureError(f"forward row at {x}: negative probability for {w}")
            total = sum(row.values(), ZERO)
            if total != 1:
                raise MeasureError(f"forward row at {x} sums to {total}, not 1")
        for n in range(self.graph.depth - 1):
            for x in self.graph.level(n):
                if x not in self._forward:
                    raise MeasureError(f"missing forward row at ({n},{x})")

    def initial(self) -> Dict[str, Fraction]:
        return dict(self._initial)

    def forward_row(self, x: str) -> Dict[EdgeKey, Fraction]:
        if x in self._forward:
            return dict(self._forward[x])
        if self.graph.level_of(x) == self.graph.depth - 1:
            return {}
        raise MeasureError(f"no forward row at {x}")

    @classmethod
    def from_document(cls, graph: GradedGraph, document: MeasureDocument) -> "TabulatedMarkovMeasure":
        """
        Raises:
            MeasureError: duplicate rows, level mismatch or invalid tables
        """
        initial: Dict[str, Fraction] = {}
        for entry in document.initial:
            if entry.vertex in initial:
                raise MeasureError(f"duplicate initial entry {entry.vertex}")
            initial[entry.vertex] = entry.p
        forward: Dict[str, Dict[EdgeKey, Fraction]] = {}
        for table in document.forward:
            try:
                level = graph.level_of(table.from_)
            except LevelError as exc:
                raise MeasureError(str(exc))
            if level != table.level:
                raise MeasureError(f"row for {table.from_} declares level {table.level}, expected {level}")
            if table.from_ in forward:
                raise MeasureError(f"duplicate forward row for {table.from_}")
            row: Dict[EdgeKey, Fraction] = {}
            for entry in table.rows:
                row[(entry.to, entry.edge)] = row.get((entry.to, entry.edge), ZERO) + entry.p
            forward[table.from_] = row
        return cls(graph, initial, forward)


class PascalChain(MarkovMeasure):
    """
    Pascal-graph chain stepping (n,k) -> (n+1,k+1) with probability p_n

    A short list of up-probabilities is extended with its last value.
    """

    def __init__(self, graph: PascalGraph, up_probabilities: Sequence[Fraction]):
        if not isinstance(graph, PascalGraph):
            raise MeasureError("Pascal chains live on the Pascal graph")
        super().__init__(graph)
        ups = [Fraction(p) for p in up_probabilities]
        if not ups:
            raise MeasureError("a Pascal chain needs at least one up-probability")
        ups += [ups[-1]] * max(graph.depth - 1 - len(ups), 0)
        for n, p in enumerate(ups):
            if not 0 <= p <= 1:
                raise MeasureError(f"up-probability p_{n} = {p} outside [0, 1]")
        self.ups = ups

    def initial(self) -> Dict[str, Fraction]:
        return {PascalGraph.vertex(0, 0): ONE}

    def up_probability(self, n: int, k: int) -> Fraction:
        return self.ups[n]

    def forward_row(self, x: str) -> Dict[EdgeKey, Fraction]:
        n, k = self.graph.coordinates(x)
        if n + 1 >= self.graph.depth:
            return {}
        up = self.up_probability(n, k)
        return {
            (PascalGraph.vertex(n + 1, k), 0): 1 - up,
            (PascalGraph.vertex(n + 1, k + 1), 0): up,
        }


class BernoulliMeasure(PascalChain):
    """i.i.d. Bernoulli(p) coordinates: a constant Pascal chain"""

    def __init__(self, graph: PascalGraph, p: Fraction):
        p = Fraction(p)
        if not 0 <= p <= 1:
            raise MeasureError(f"Bernoulli parameter {p} outside [0, 1]")
        self.p = p
        super().__init__(graph, [p] * (graph.depth - 1))

    def up_probability(self, n: int, k: int) -> Fraction:
        return self.p


class BernoulliMixture(PascalChain):
    """
    Mixture Σ w_i Bernoulli(p_i), written as an exchangeable Pascal chain
    with the posterior predictive up-probability at (n,k)
    """

    def __init__(self, graph: PascalGraph, components: Sequence[Tuple[Fraction, Fraction]]):
        weights = [Fraction(w) for w, _ in components]
        params = [Fraction(p) for _, p in components]
        if not components or any(w < 0 for w in weights) or sum(weights) != 1:
            raise MeasureError("mixture weights must be nonnegative and sum to 1")
        if any(not 0 <= p <= 1 for p in params):
            raise MeasureError("mixture parameters must lie in [0, 1]")
        self.components = list(zip(weights, params))
        prior = sum((w * p for w, p in self.components), ZERO)
        super().__init__(graph, [prior] * (graph.depth - 1))

    def up_probability(self, n: int, k: int) -> Fraction:
        masses = [w * p ** k * (1 - p) ** (n - k) for w, p in self.components]
        total = sum(masses, ZERO)
        if not total:
            return self.ups[0]
        return sum((m * p for m, (_, p) in zip(masses, self.components)), ZERO) / total


class PlancherelMeasure(MarkovMeasure):
    """Plancherel growth on the Young graph: λ -> Λ with dim(Λ) / ((|λ|+1) dim(λ))"""

    def __init__(self, graph: YoungGraph):
        if not isinstance(graph, YoungGraph):
            raise MeasureError("the Plancherel measure lives on the Young graph")
        super().__init__(graph)

    def initial(self) -> Dict[str, Fraction]:
        return {"()": ONE}

    def forward_row(self, x: str) -> Dict[EdgeKey, Fraction]:
        n = self.graph.level_of(x)
        base = (n + 1) * self.graph.dimension(x)
        return {(w, 0): Fraction(self.graph.dimension(w), base) for w, _ in self.graph.successors(x)}


def bernoulli_on_pascal(p: Fraction, depth: int) -> BernoulliMeasure:
    return BernoulliMeasure(PascalGraph(depth), p)


def plancherel_measure(graph: YoungGraph) -> PlancherelMeasure:
    return PlancherelMeasure(graph)


def cylinder_prob(m: MarkovMeasure, p: FinitePath) -> Fraction:
    return m.cylinder_prob(p)


def rn_cocycle(m: MarkovMeasure, p: FinitePath, q: FinitePath) -> CocycleValue:
    return m.rn_cocycle(p, q)


def _edge_key(key: EdgeKey) -> str:
    y, e = key
    return f"{y}#{e}" if e else y


def matches_equipment(m: MarkovMeasure, sys: CotransitionSystem, depth: int, cap: int = 100000) -> MatchReport:
    """
    Exact check that the measure's RN cocycle agrees with an equipment

    Two checks run: cylinder ratios against the equipment cocycle over all
    tail-equivalent pairs of positive-measure paths up to level `depth`,
    and induced cotransition rows against the equipment rows at every
    vertex of positive mass. The first disagreement is reported.
    """
    graph = m.graph
    graph.check_level(depth)
    report = MatchReport(passed=True, depth=depth)

    for n in range(1, depth + 1):
        for group in graph.paths_by_endpoint(n, cap).values():
            weighted = [(p, m.cylinder_prob(p)) for p in group]
            positive = [(p, w) for p, w in weighted if w]
            for i, (p, wp) in enumerate(positive):
                for q, wq in positive[i + 1:]:
                    report.pairs_checked += 1
                    expected = sys.cocycle(p, q)
                    if report.witness is None and (not expected.is_defined or expected.value != wp / wq):
                        report.witness = WitnessPair(
                            p=p, q=q,
                            measure_ratio=CocycleValue.of(wp / wq),
                            equipment_ratio=expected,
                        )

    induced = m.induced_cotransitions(depth)
    for n in range(1, depth + 1):
        for x in graph.level(n):
            if induced.is_unreachable(x):
                continue
            report.rows_checked += 1
            got = {k: v for k, v in induced.row(x).items() if v}
            want = {k: v for k, v in sys.row(x).items() if v}
            if got != want and report.row_mismatch is None:
                report.row_mismatch = RowMismatch(
                    level=n - 1, vertex=x,
                    induced={_edge_key(k): v for k, v in got.items()},
                    expected={_edge_key(k): v for k, v in want.items()},
                )

    report.passed = report.witness is None and report.row_mismatch is None
    return report
