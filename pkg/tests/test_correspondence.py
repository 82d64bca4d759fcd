import itertools
from collections import defaultdict
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from equipment.cotransitions import central_equipment
from graphs.graded_graph import YoungGraph
from measures.markov_measure import PlancherelMeasure, matches_equipment
from models.exceptions import TableauError
from models.pydantic_models import FinitePath, LetterDistribution, Tableau, YoungPath
from rsk.correspondence import (
    ThomaMeasure, compare_shape_distributions, exact_pushforward, finite_to_young_path,
    plancherel_shapes, pushforward_sample, pushforward_samples, q_shape_path, rank_letters,
    row_insert, rsk_pair, sample_letters, thoma_frequency_estimate, young_path_to_finite,
    _path_rng,
)

F = Fraction


def test_row_insert_bumps_into_next_row():
    tableau, box = row_insert(Tableau(rows=[[2]]), 1)
    assert tableau.rows == [[1], [2]]
    assert box == (1, 0)


def test_row_insert_appends_at_row_end():
    tableau, box = row_insert(Tableau(rows=[[1, 2]]), 3)
    assert tableau.rows == [[1, 2, 3]]
    assert box == (0, 2)
    assert row_insert(Tableau(), 5) == (Tableau(rows=[[5]]), (0, 0))


def test_equal_letters_stay_in_the_row():
    tableau, box = row_insert(Tableau(rows=[[1, 2]]), 1)
    assert tableau.rows == [[1, 1], [2]]
    assert box == (1, 0)


def test_rsk_pair_of_small_word():
    p, q = rsk_pair([2, 1, 1])
    assert p.rows == [[1, 1], [2]]
    assert q.rows == [[1, 3], [2]]
    assert q_shape_path([2, 1, 1]).shapes() == [(), (1,), (1, 1), (2, 1)]


def test_increasing_and_decreasing_words():
    assert q_shape_path([1, 2, 3, 4]).shape == (4,)
    assert q_shape_path([3, 3, 3]).shapes() == [(), (1,), (2,), (3,)]
    assert q_shape_path([3, 2, 1]).shapes() == [(), (1,), (1, 1), (1, 1, 1)]


def test_non_integer_letters_are_ranked():
    assert rank_letters(["b", "a", "b"]) == [2, 1, 2]
    p, _ = rsk_pair([0.5, 0.2])
    assert p.rows == [[1], [2]]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=5), max_size=30))
def test_rsk_shapes_and_contents(word):
    p, q = rsk_pair(word)
    assert p.shape == q.shape
    assert q.size == len(word)
    assert sorted(v for row in p.rows for v in row) == sorted(word)
    assert q_shape_path(word).shape == p.shape


def test_rsk_is_injective_on_short_words():
    pairs = set()
    words = [w for n in range(7) for w in itertools.product((1, 2, 3), repeat=n)]
    for word in words:
        p, q = rsk_pair(word)
        pairs.add((tuple(map(tuple, p.rows)), tuple(map(tuple, q.rows))))
    assert len(pairs) == len(words)


def test_young_path_conversions():
    path = YoungPath(rows=[0, 1, 0, 2])
    finite = young_path_to_finite(path)
    assert finite.vertices == ("()", "(1)", "(1,1)", "(2,1)", "(2,1,1)")
    assert finite_to_young_path(finite) == path
    assert YoungGraph(5).is_path(finite)
    with pytest.raises(TableauError):
        finite_to_young_path(FinitePath.parse("(1);(2)", start_level=1))


def test_young_path_rejects_invalid_growth():
    with pytest.raises(ValueError):
        YoungPath(rows=[0, 2])
    with pytest.raises(ValueError):
        YoungPath(rows=[0, 1, 1])


def test_letter_distribution_validation():
    assert LetterDistribution(atoms=["0.6", "0.4"]).continuous_mass == 0
    with pytest.raises(ValueError):
        LetterDistribution(atoms=["0.4", "0.6"])
    with pytest.raises(ValueError):
        LetterDistribution(atoms=["0.7", "0.6"])


def test_single_atom_gives_one_row():
    path = pushforward_sample(LetterDistribution(atoms=[1]), 50, seed=3)
    assert path.shape == (50,)


def test_continuous_letters_are_a_permutation():
    letters = sample_letters(LetterDistribution(), 40, _path_rng(7, 0))
    assert sorted(letters.tolist()) == list(range(1, 41))


def test_atom_letters_share_ranks():
    letters = sample_letters(LetterDistribution(atoms=["1/2", "1/2"]), 200, _path_rng(1, 0)).tolist()
    assert set(letters) <= {1, 2}


def test_pushforward_is_deterministic_per_path_index():
    dist = LetterDistribution(atoms=["1/2"])
    assert pushforward_sample(dist, 100, seed=5, index=2) == pushforward_sample(dist, 100, seed=5, index=2)
    batch = pushforward_samples(dist, 100, 4, seed=5)
    assert batch[2] == pushforward_sample(dist, 100, seed=5, index=2)
    assert batch[0] != batch[1]


def test_frequency_estimate_of_single_atom():
    paths = pushforward_samples(LetterDistribution(atoms=[1]), 30, 5, seed=0)
    report = thoma_frequency_estimate(paths, row_cap=3)
    assert [row.frequency for row in report.rows] == [1.0, 0.0, 0.0]
    assert [row.stderr for row in report.rows] == [0.0, 0.0, 0.0]
    assert report.columns[0].frequency == pytest.approx(1 / 30)


def test_frequency_estimate_rejects_bad_input():
    with pytest.raises(TableauError):
        thoma_frequency_estimate([])
    with pytest.raises(TableauError):
        thoma_frequency_estimate([YoungPath(rows=[0]), YoungPath(rows=[0, 0])])
    with pytest.raises(TableauError):
        thoma_frequency_estimate([YoungPath()])


def test_exact_pushforward_is_central():
    for n in range(1, 5):
        law = exact_pushforward([F(1, 3), F(2, 3)], n)
        assert sum(law.values()) == 1
        by_shape = defaultdict(set)
        for rows, mass in law.items():
            by_shape[YoungPath(rows=list(rows)).shape].add(mass)
        assert all(len(masses) == 1 for masses in by_shape.values())


def test_thoma_measure_matches_exact_pushforward():
    graph = YoungGraph(5)
    thoma = ThomaMeasure(graph, LetterDistribution(atoms=["2/3", "1/3"]))
    law = exact_pushforward([F(2, 3), F(1, 3)], 4)
    for path in graph.enumerate_level_paths(4, cap=1000):
        rows = tuple(finite_to_young_path(path).rows)
        assert thoma.cylinder_prob(path) == law.get(rows, 0)


def test_thoma_with_unit_continuous_mass_is_plancherel():
    graph = YoungGraph(6)
    thoma = ThomaMeasure(graph, LetterDistribution())
    plancherel = PlancherelMeasure(graph)
    for n in range(5):
        for x in graph.level(n):
            assert thoma.forward_row(x) == plancherel.forward_row(x)


def test_mixed_thoma_measure_is_central():
    graph = YoungGraph(6)
    thoma = ThomaMeasure(graph, LetterDistribution(atoms=["1/2", "1/4"]))
    assert thoma.phi(()) == 1
    assert matches_equipment(thoma, central_equipment(graph), 5).passed


def test_shape_comparison_of_identical_samples():
    shapes = [(2,), (1, 1)] * 20
    report = compare_shape_distributions(shapes, shapes)
    assert report.statistic == pytest.approx(0.0)
    assert report.p_value == pytest.approx(1.0)
    with pytest.raises(TableauError):
        compare_shape_distributions([(1,)] * 10, [(1,)] * 10)


def test_plancherel_shapes():
    shapes = plancherel_shapes(4, 300, seed=2)
    assert len(shapes) == 300
    assert all(sum(shape) == 4 for shape in shapes)


def test_continuous_pushforward_looks_like_plancherel():
    n, count = 6, 3000
    pushed = [path.shape for path in pushforward_samples(LetterDistribution(), n, count, seed=11)]
    reference = plancherel_shapes(n, count, seed=12)
    assert compare_shape_distributions(pushed, reference).p_value > 1e-3
