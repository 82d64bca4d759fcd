"""
RSK module
Robinson-Schensted-Knuth row insertion, Q-shape growth paths in the Young
graph, the pushforward of i.i.d. letter sequences to central measures and
Thoma frequency estimation
"""

import itertools
import logging
from bisect import bisect_right
from collections import Counter, defaultdict
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from equipment.cotransitions import EdgeKey
from graphs.graded_graph import (
    Partition, YoungGraph, add_box, conjugate, parse_partition, partition_label, partitions,
)
from measures.markov_measure import DYADIC_SCALE, MarkovMeasure, PlancherelMeasure, dyadic_thresholds
from models.exceptions import MeasureError, TableauError
from models.pydantic_models import (
    ChiSquareReport, FinitePath, FrequencyEstimate, FrequencyRow, LetterDistribution,
    Tableau, YoungPath,
)

logger = logging.getLogger(__name__)

ZERO = Fraction(0)
ONE = Fraction(1)


def _insert(rows: List[List[int]], letter: int) -> Tuple[int, int]:
    """Schensted row insertion in place; returns the (row, column) of the new box"""
    for r, row in enumerate(rows):
        position = bisect_right(row, letter)
        if position == len(row):
            row.append(letter)
            return r, position
        row[position], letter = letter, row[position]
    rows.append([letter])
    return len(rows) - 1, 0


def row_insert(t: Tableau, letter: int) -> Tuple[Tableau, Tuple[int, int]]:
    """
    Insert a letter into a semistandard tableau

    Args:
        t: semistandard P-tableau
        letter: integer letter

    Returns:
        The new tableau and the 0-based (row, column) of the added box
    """
    rows = [list(row) for row in t.rows]
    box = _insert(rows, letter)
    return Tableau(rows=rows, kind="semistandard"), box


def rank_letters(word: Sequence[Hashable]) -> List[int]:
    """Order-preserving map of comparable letters to 1, 2, ... (equal letters share a rank)"""
    ranks = {letter: i + 1 for i, letter in enumerate(sorted(set(word)))}
    return [ranks[letter] for letter in word]


def _as_integers(word: Sequence) -> List[int]:
    if all(isinstance(letter, (int, np.integer)) and not isinstance(letter, bool) for letter in word):
        return [int(letter) for letter in word]
    return rank_letters(word)


def rsk_pair(word: Sequence) -> Tuple[Tableau, Tableau]:
    """
    P (semistandard) and Q (standard) tableaux of a word

    Integer words keep their letters; other comparable letters are replaced
    by their ranks.
    """
    p_rows: List[List[int]] = []
    q_rows: List[List[int]] = []
    for step, letter in enumerate(_as_integers(word), start=1):
        r, _ = _insert(p_rows, letter)
        if r == len(q_rows):
            q_rows.append([])
        q_rows[r].append(step)
    return Tableau(rows=p_rows, kind="semistandard"), Tableau(rows=q_rows, kind="standard")


def _growth_rows(letters: Sequence[int]) -> List[int]:
    rows: List[List[int]] = []
    return [_insert(rows, letter)[0] for letter in letters]


def q_shape_path(word: Sequence) -> YoungPath:
    """Shape after each insertion, as a path in the Young graph"""
    return YoungPath(rows=_growth_rows(_as_integers(word)))


def young_path_to_finite(path: YoungPath) -> FinitePath:
    return FinitePath(vertices=tuple(partition_label(shape) for shape in path.shapes()))


def finite_to_young_path(path: FinitePath) -> YoungPath:
    """
    Raises:
        TableauError: the path does not start at the empty partition or
            does not add one box per step
    """
    shapes = [parse_partition(v) for v in path.vertices]
    if shapes[0] != ():
        raise TableauError("Young paths start at the empty partition")
    rows = []
    for small, big in zip(shapes, shapes[1:]):
        grown = [r for r in range(len(small) + 1) if add_box(small, r) == big]
        if not grown:
            raise TableauError(f"{partition_label(big)} does not add one box to {partition_label(small)}")
        rows.append(grown[0])
    return YoungPath(rows=rows)


def _path_rng(seed: int, index: int) -> np.random.Generator:
    """Stream of path `index`: SeedSequence(seed, spawn_key=(index,))"""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def sample_letters(dist: LetterDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
    """
    i.i.d. letters as tie-free integer ranks

    Atom i becomes the letter of rank block i; continuous letters are
    distinct and ordered by a fresh uniform draw, then by draw order.
    """
    atoms = len(dist.atoms)
    thresholds = dyadic_thresholds(list(dist.atoms) + [dist.continuous_mass])
    category = np.searchsorted(thresholds, rng.integers(0, DYADIC_SCALE, size=n, dtype=np.int64), side="right")
    fresh = np.where(category == atoms, rng.random(n), 0.0)
    draw_order = np.where(category == atoms, np.arange(n), 0)
    order = np.lexsort((draw_order, fresh, category))
    keys = np.stack([category, fresh, draw_order], axis=1)[order]
    new_letter = np.ones(n, dtype=bool)
    new_letter[1:] = np.any(keys[1:] != keys[:-1], axis=1)
    letters = np.empty(n, dtype=np.int64)
    letters[order] = np.cumsum(new_letter)
    return letters


def pushforward_sample(dist: LetterDistribution, n: int, seed: int, index: int = 0) -> YoungPath:
    """Q-shape path of an i.i.d. word of length n; deterministic in (seed, index)"""
    if n < 0:
        raise TableauError("word length must be nonnegative")
    letters = sample_letters(dist, n, _path_rng(seed, index))
    return YoungPath(rows=_growth_rows(letters.tolist()))


def pushforward_samples(dist: LetterDistribution, n: int, count: int, seed: int) -> List[YoungPath]:
    logger.info("pushing %d words of length %d through RSK", count, n)
    return [pushforward_sample(dist, n, seed, index) for index in range(count)]


def _frequency_rows(lengths: np.ndarray, n: int) -> List[FrequencyRow]:
    frequencies = lengths / n
    means = frequencies.mean(axis=0)
    if len(frequencies) > 1:
        errors = stats.sem(frequencies, axis=0, ddof=1)
    else:
        errors = np.zeros(frequencies.shape[1])
    return [
        FrequencyRow(index=i + 1, frequency=float(mean), stderr=float(error))
        for i, (mean, error) in enumerate(zip(means, errors))
    ]


def thoma_frequency_estimate(paths: Sequence[YoungPath], row_cap: int = 10) -> FrequencyEstimate:
    """
    Mean row_i(λ(n))/n and col_i(λ(n))/n over paths of equal length n

    Raises:
        TableauError: empty input, unequal lengths or n = 0
    """
    if not paths:
        raise TableauError("frequency estimation needs at least one path")
    n = paths[0].length
    if any(path.length != n for path in paths):
        raise TableauError("all paths must have the same length")
    if n == 0:
        raise TableauError("frequencies of empty paths are undefined")
    rows = np.zeros((len(paths), row_cap))
    columns = np.zeros((len(paths), row_cap))
    for i, path in enumerate(paths):
        shape = path.shape
        rows[i, :min(row_cap, len(shape))] = shape[:row_cap]
        dual = conjugate(shape)
        columns[i, :min(row_cap, len(dual))] = dual[:row_cap]
    return FrequencyEstimate(
        n=n, samples=len(paths),
        rows=_frequency_rows(rows, n),
        columns=_frequency_rows(columns, n),
    )


def exact_pushforward(letter_probs: Sequence[Fraction], n: int) -> Dict[Tuple[int, ...], Fraction]:
    """
    Law of the Q-shape path of an i.i.d. word over letters 1..m

    Keys are YoungPath rows; every word of length n is enumerated.
    """
    probs = [Fraction(p) for p in letter_probs]
    if any(p < 0 for p in probs) or sum(probs) != 1:
        raise TableauError("letter probabilities must be nonnegative and sum to 1")
    law: Dict[Tuple[int, ...], Fraction] = defaultdict(Fraction)
    for word in itertools.product(range(len(probs)), repeat=n):
        weight = ONE
        for letter in word:
            weight *= probs[letter]
        if weight:
            law[tuple(_growth_rows([letter + 1 for letter in word]))] += weight
    return dict(law)


class ThomaMeasure(MarkovMeasure):
    """
    Central measure on the Young graph with atoms α, β = 0 and continuous
    mass γ: cylinder probability φ(λ) of any path to λ, forward rule φ(Λ)/φ(λ),

        φ(λ) = Σ_{μ ⊆ λ} s_μ(α) γ^{|λ/μ|} dim(λ/μ) / |λ/μ|!
    """

    def __init__(self, graph: YoungGraph, dist: LetterDistribution):
        if not isinstance(graph, YoungGraph):
            raise MeasureError("Thoma measures live on the Young graph")
        super().__init__(graph)
        self.dist = dist
        self.atoms = tuple(dist.atoms)
        self.gamma = dist.continuous_mass
        self._schur = lru_cache(maxsize=None)(self._schur_uncached)
        self._phi_cache: Dict[Partition, Fraction] = {}

    def _schur_uncached(self, shape: Partition, m: int) -> Fraction:
        """s_shape(α_1..α_m) by branching over horizontal strips"""
        if not shape:
            return ONE
        if m == 0 or len(shape) > m:
            return ZERO
        x = self.atoms[m - 1]
        total = ZERO
        bounds = [range(below, above + 1) for above, below in zip(shape, shape[1:] + (0,))]
        for inner in itertools.product(*bounds):
            inner_shape = tuple(part for part in inner if part)
            strip = sum(shape) - sum(inner_shape)
            if strip and not x:
                continue
            total += self._schur(inner_shape, m - 1) * x ** strip
        return total

    def phi(self, shape: Partition) -> Fraction:
        cached = self._phi_cache.get(shape)
        if cached is not None:
            return cached
        size = sum(shape)
        value = ZERO
        for k in range(size + 1):
            weight = self.gamma ** (size - k) / factorial(size - k) if size - k else ONE
            if not weight:
                continue
            for inner in partitions(k):
                if len(inner) > len(shape) or any(a > b for a, b in zip(inner, shape)):
                    continue
                s = self._schur(inner, len(self.atoms))
                if s:
                    value += s * weight * self.graph.path_count(partition_label(inner), partition_label(shape))
        self._phi_cache[shape] = value
        return value

    def initial(self) -> Dict[str, Fraction]:
        return {"()": ONE}

    def forward_row(self, x: str) -> Dict[EdgeKey, Fraction]:
        shape = parse_partition(x)
        successors = self.graph.successors(x)
        base = self.phi(shape)
        if not base:
            logger.warning("vertex %s has zero Thoma mass; using the Plancherel row", x)
            scale = (sum(shape) + 1) * self.graph.dimension(x)
            return {(w, 0): Fraction(self.graph.dimension(w), scale) for w, _ in successors}
        return {(w, 0): self.phi(parse_partition(w)) / base for w, _ in successors}


def compare_shape_distributions(a: Sequence[Partition], b: Sequence[Partition], min_count: int = 5) -> ChiSquareReport:
    """
    Chi-square contingency test of two samples of terminal shapes

    Shapes seen fewer than `min_count` times in total are pooled.
    """
    counts_a, counts_b = Counter(a), Counter(b)
    frequent, pooled = [], [0, 0]
    for shape in sorted(set(counts_a) | set(counts_b)):
        pair = [counts_a[shape], counts_b[shape]]
        if sum(pair) >= min_count:
            frequent.append(pair)
        else:
            pooled = [pooled[0] + pair[0], pooled[1] + pair[1]]
    if sum(pooled):
        frequent.append(pooled)
    if len(frequent) < 2:
        raise TableauError("need at least two shape categories to compare")
    statistic, p_value, dof, _ = stats.chi2_contingency(np.array(frequent).T)
    return ChiSquareReport(statistic=float(statistic), dof=int(dof), p_value=float(p_value), categories=len(frequent))


def plancherel_shapes(n: int, count: int, seed: int, measure: Optional[MarkovMeasure] = None) -> List[Partition]:
    """Terminal shapes of `count` Plancherel growth paths of length n"""
    measure = measure or PlancherelMeasure(YoungGraph(n + 1))
    counts = measure.endpoint_counts([n], count, seed)[n]
    return [parse_partition(label) for label, c in sorted(counts.items()) for _ in range(c)]
