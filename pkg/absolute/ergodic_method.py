"""
Ergodic method module
Backward (Martin-kernel) approximations to the extreme measures matching an
equipment, boundary-sequence limits, the statistical ergodicity test and the
exchangeability check on the Pascal graph
"""

import logging
import math
from collections import defaultdict
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Union

from equipment.cotransitions import CotransitionSystem, central_equipment
from graphs.graded_graph import GradedGraph, PascalGraph
from measures.markov_measure import MarkovMeasure, matches_equipment
from models.exceptions import CotransitionTableError, LevelError, MeasureError, NonCentralMeasureError
from models.pydantic_models import (
    BackwardDistribution, BoundarySequence, DistributionEntry, ErgodicityReport,
    ExchangeabilityReport, ExchangeWitness, FinitePath, LimitPoint, LimitReport,
    MartinEntry, MartinTable, StatisticSpec, VarianceRow,
)

logger = logging.getLogger(__name__)

ZERO = Fraction(0)
ONE = Fraction(1)

Event = Union[FinitePath, str]


def backward_distribution(sys: CotransitionSystem, w: str, n: int) -> Dict[str, Fraction]:
    """
    Distribution of x_n given x_N = w under the cotransitions

    Central equipments use the closed form dim(v) path_count(v, w) / dim(w);
    other equipments run the DP D_k(y) = Σ_x D_{k+1}(x) P^{k,x}(y) down from δ_w.

    Raises:
        LevelError: n outside 0..N
        CotransitionTableError: conditioning on an unreachable vertex
    """
    graph = sys.graph
    top = graph.level_of(w)
    graph.check_level(n)
    if n > top:
        raise LevelError(f"level {n} is above the level {top} of {w!r}")
    if n == top:
        return {w: ONE}

    if sys.central:
        total = graph.dimension(w)
        if not total:
            raise CotransitionTableError(f"no path from the initial level to {w}")
        out = {}
        for v in graph.cone(w, n):
            mass = graph.dimension(v) * graph.path_count(v, w)
            if mass:
                out[v] = Fraction(mass, total)
        return out

    if top - n > 50:
        logger.info("backward DP over %d levels from %s", top - n, w)
    current: Dict[str, Fraction] = {w: ONE}
    for k in range(top - 1, n - 1, -1):
        nxt: Dict[str, Fraction] = defaultdict(Fraction)
        for x, mass in current.items():
            if sys.is_unreachable(x):
                raise CotransitionTableError(f"backward mass reaches unreachable vertex ({k},{x})")
            for (y, _), p in sys.row(x).items():
                if p:
                    nxt[y] += mass * p
        current = dict(nxt)
    return current


def backward_table(sys: CotransitionSystem, w: str, n: int) -> BackwardDistribution:
    distribution = backward_distribution(sys, w, n)
    entries = [DistributionEntry(vertex=v, p=p) for v, p in sorted(distribution.items())]
    return BackwardDistribution(terminal=w, level=n, entries=entries)


def martin_kernel(sys: CotransitionSystem, p: FinitePath, w: str) -> Fraction:
    """
    K(p, w) = Prob(x_s..x_n = p | x_N = w)

    The backward mass at the endpoint of p times the cotransition weights
    along p.
    """
    sys.graph.check_path(p)
    distribution = backward_distribution(sys, w, p.end_level)
    mass = distribution.get(p.endpoint, ZERO)
    if not mass:
        return ZERO
    return mass * sys.path_weight(p)


def martin_table(sys: CotransitionSystem, w: str, n: int, cap: int = 100000) -> MartinTable:
    """Kernels of every level-n prefix from level 0; values sum to 1"""
    distribution = backward_distribution(sys, w, n)
    entries = []
    for p in sys.graph.enumerate_level_paths(n, cap):
        mass = distribution.get(p.endpoint, ZERO)
        entries.append(MartinEntry(path=p, value=mass * sys.path_weight(p) if mass else ZERO))
    return MartinTable(level=n, terminal=w, entries=entries)


def pascal_frequency_sequence(p: Fraction, levels: Sequence[int]) -> BoundarySequence:
    """w_N = (N, round(pN)), half-to-even rounding of the exact product"""
    p = Fraction(p)
    if not 0 <= p <= 1:
        raise MeasureError(f"frequency {p} outside [0, 1]")
    terminals = [PascalGraph.vertex(N, round(p * N)) for N in levels]
    return BoundarySequence(rule=f"pascal:round({p}*N)", terminals=terminals, levels=list(levels))


def boundary_sequence(graph: GradedGraph, terminals: Sequence[str], rule: str = "explicit") -> BoundarySequence:
    """Sequence of explicit terminal vertices; their levels must increase"""
    levels = [graph.level_of(w) for w in terminals]
    return BoundarySequence(rule=rule, terminals=list(terminals), levels=levels)


def event_probability(sys: CotransitionSystem, event: Event, w: str) -> Fraction:
    """Kernel of a path, or backward mass of a vertex event x_n = v"""
    if isinstance(event, FinitePath):
        return martin_kernel(sys, event, w)
    distribution = backward_distribution(sys, w, sys.graph.level_of(event))
    return distribution.get(event, ZERO)


def boundary_limit_estimate(
    sys: CotransitionSystem,
    seq: BoundarySequence,
    event: Event,
    n_list: Optional[Sequence[int]] = None,
    tolerance: float = 1e-3,
    target: Optional[Fraction] = None,
) -> LimitReport:
    """
    Kernels K(event, w_N) along a boundary sequence

    The report holds the raw values with successive deltas; `stable` only
    says the last delta is below `tolerance`, no limit is claimed.

    Raises:
        LevelError: an N of n_list is not in the sequence
    """
    terminal_at = dict(zip(seq.levels, seq.terminals))
    levels = list(seq.levels if n_list is None else n_list)
    if not levels:
        raise LevelError("no levels to evaluate")
    points: List[LimitPoint] = []
    previous: Optional[Fraction] = None
    for N in levels:
        if N not in terminal_at:
            raise LevelError(f"boundary sequence has no terminal at level {N}")
        value = event_probability(sys, event, terminal_at[N])
        delta = None if previous is None else float(abs(value - previous))
        points.append(LimitPoint(level=N, terminal=terminal_at[N], value=value, delta=delta))
        previous = value
        logger.info("K at N=%d: %s", N, float(value))

    deltas = [point.delta for point in points if point.delta is not None]
    last_delta = deltas[-1] if deltas else None
    return LimitReport(
        event=event.label() if isinstance(event, FinitePath) else event,
        points=points,
        last_value=points[-1].value,
        last_delta=last_delta,
        max_delta=max(deltas) if deltas else None,
        tolerance=tolerance,
        stable=last_delta is not None and last_delta < tolerance,
        target=target,
        target_gap=None if target is None else float(abs(points[-1].value - target)),
    )


def statistic_value(graph: GradedGraph, statistic: StatisticSpec, x: str, n: int) -> Fraction:
    """
    Level-n statistic as a function of the endpoint x_n

    The indicator statistic is the conditional probability, under uniform
    paths to x_n, of passing through the statistic's vertex.
    """
    if statistic.kind == "coordinate":
        coordinates = graph.coordinates(x)
        value = coordinates[statistic.coordinate] if statistic.coordinate < len(coordinates) else 0
        return Fraction(value, n) if n else Fraction(value)
    v = statistic.vertex
    if graph.level_of(v) > n:
        raise LevelError(f"indicator vertex {v} is above level {n}")
    return Fraction(graph.dimension(v) * graph.path_count(v, x), graph.dimension(x))


class ErgodicityTester:
    """
    Monte Carlo test that a level-n statistic converges to a constant

    Only central measures are accepted. The verdict compares the variance
    at the largest level and the floor a of a fitted a + b/n against the
    threshold; it never claims a proof.
    """

    def __init__(self, threshold: float = 1e-3, sigmas: float = 3.0,
                 check_depth: int = 4, enumeration_cap: int = 100000):
        self.threshold = threshold
        self.sigmas = sigmas
        self.check_depth = check_depth
        self.enumeration_cap = enumeration_cap

    def require_central(self, m: MarkovMeasure) -> None:
        depth = min(self.check_depth, m.graph.depth - 1)
        if depth < 1:
            return
        report = matches_equipment(m, central_equipment(m.graph), depth, self.enumeration_cap)
        if not report.passed:
            raise NonCentralMeasureError(
                f"the ergodicity test needs a central measure; cocycle differs from 1 by level {depth}"
            )

    def run(self, m: MarkovMeasure, statistic: StatisticSpec, n_list: Sequence[int],
            samples: int, seed: int) -> ErgodicityReport:
        levels = sorted(set(n_list))
        if not levels:
            raise LevelError("no levels to test")
        self.require_central(m)
        counts = m.endpoint_counts(levels, samples, seed)
        rows = [self._variance_row(m.graph, statistic, n, counts[n], samples) for n in levels]

        decreasing = all(
            b.variance <= a.variance + self.sigmas * math.hypot(a.stderr, b.stderr)
            for a, b in zip(rows, rows[1:])
        )
        floor, floor_stderr = self._floor(rows)
        last = rows[-1]
        if last.variance < self.threshold and decreasing:
            verdict = "consistent with ergodic"
        elif floor is not None and floor - self.sigmas * floor_stderr > self.threshold:
            verdict = "inconsistent with ergodic"
        else:
            verdict = "undetermined"
        return ErgodicityReport(
            statistic=statistic, samples=samples, seed=seed, threshold=self.threshold,
            rows=rows, decreasing=decreasing, floor=floor, floor_stderr=floor_stderr,
            verdict=verdict,
        )

    def _variance_row(self, graph: GradedGraph, statistic: StatisticSpec, n: int,
                      counts: Dict[str, int], samples: int) -> VarianceRow:
        """Exact moments over the distinct endpoint values"""
        values = [(statistic_value(graph, statistic, x, n), c) for x, c in counts.items()]
        mean = sum((v * c for v, c in values), ZERO) / samples
        m2 = sum(((v - mean) ** 2 * c for v, c in values), ZERO) / samples
        m4 = sum(((v - mean) ** 4 * c for v, c in values), ZERO) / samples
        if samples > 1:
            variance = m2 * samples / (samples - 1)
            spread = m4 - m2 ** 2 * Fraction(samples - 3, samples - 1)
            stderr = math.sqrt(max(float(spread), 0.0) / samples)
        else:
            variance, stderr = ZERO, 0.0
        return VarianceRow(level=n, mean=float(mean), variance=float(variance), stderr=stderr)

    def _floor(self, rows: List[VarianceRow]):
        if len(rows) < 2:
            return None, None
        a, b = rows[-2], rows[-1]
        span = b.level - a.level
        floor = (b.level * b.variance - a.level * a.variance) / span
        stderr = math.hypot(b.level * b.stderr, a.level * a.stderr) / span
        return floor, stderr


def ergodicity_test(m: MarkovMeasure, statistic: StatisticSpec, n_list: Sequence[int],
                    samples: int, seed: int, threshold: float = 1e-3) -> ErgodicityReport:
    return ErgodicityTester(threshold=threshold).run(m, statistic, n_list, samples, seed)


def exchangeability_check(m: MarkovMeasure, n: int, cap: int = 100000) -> ExchangeabilityReport:
    """
    Exact check that cylinder probabilities at level n depend only on the
    endpoint, i.e. on the number of ones among the first n coordinates
    """
    if not isinstance(m.graph, PascalGraph):
        raise MeasureError("exchangeability is checked on the Pascal graph")
    m.graph.check_level(n)
    checked = 0
    for group in m.graph.paths_by_endpoint(n, cap).values():
        first = group[0]
        first_prob = m.cylinder_prob(first)
        for q in group:
            checked += 1
            q_prob = m.cylinder_prob(q)
            if q_prob != first_prob:
                return ExchangeabilityReport(
                    passed=False, level=n, paths_checked=checked,
                    witness=ExchangeWitness(p=first, q=q, p_prob=first_prob, q_prob=q_prob),
                )
    return ExchangeabilityReport(passed=True, level=n, paths_checked=checked)
