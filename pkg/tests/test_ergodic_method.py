from collections import defaultdict
from fractions import Fraction
from math import comb

import pytest

from absolute.ergodic_method import (
    ErgodicityTester, backward_distribution, backward_table, boundary_limit_estimate,
    boundary_sequence, ergodicity_test, event_probability, exchangeability_check, martin_kernel,
    martin_table, pascal_frequency_sequence, statistic_value,
)
from equipment.cotransitions import central_equipment, from_table, random_equipment
from graphs.graded_graph import PascalGraph, YoungGraph
from measures.markov_measure import BernoulliMeasure, BernoulliMixture, PascalChain, PlancherelMeasure
from models.exceptions import LevelError, MeasureError, NonCentralMeasureError
from models.pydantic_models import FinitePath, StatisticSpec

F = Fraction


def test_central_backward_distribution(pascal):
    sys_ = central_equipment(pascal)
    assert backward_distribution(sys_, "4,2", 2) == {"2,0": F(1, 6), "2,1": F(2, 3), "2,2": F(1, 6)}
    assert backward_distribution(sys_, "4,2", 4) == {"4,2": F(1)}
    assert backward_distribution(sys_, "4,2", 0) == {"0,0": F(1)}


def test_young_backward_distribution(young):
    sys_ = central_equipment(young)
    assert backward_distribution(sys_, "(2,1)", 1) == {"(1)": F(1)}
    assert backward_distribution(sys_, "(2,2)", 3) == {"(2,1)": F(1)}
    assert backward_distribution(sys_, "(3,1)", 2) == {"(2)": F(2, 3), "(1,1)": F(1, 3)}


@pytest.mark.parametrize("graph", [PascalGraph(7), YoungGraph(7)], ids=["pascal", "young"])
@pytest.mark.parametrize("equipment", ["central", "tabulated", 4, 11])
def test_backward_distribution_matches_path_enumeration(graph, equipment, conditional_oracle):
    if equipment == "central":
        sys_ = central_equipment(graph)
    elif equipment == "tabulated":
        sys_ = from_table(graph, central_equipment(graph).to_tables())
    else:
        sys_ = random_equipment(graph, equipment)
    for N in range(1, graph.depth):
        for w in graph.level(N):
            conditional = conditional_oracle(sys_, w)
            for n in range(N + 1):
                expected = defaultdict(Fraction)
                for path, prob in conditional.items():
                    if prob:
                        expected[path.vertices[n]] += prob
                assert backward_distribution(sys_, w, n) == dict(expected)


def test_backward_distribution_rejects_level_above_terminal(pascal):
    with pytest.raises(LevelError):
        backward_distribution(central_equipment(pascal), "3,1", 4)


def test_backward_table_is_sorted_and_normalized(pascal):
    table = backward_table(random_equipment(pascal, seed=8), "6,3", 3)
    assert [entry.vertex for entry in table.entries] == sorted(entry.vertex for entry in table.entries)
    assert sum(entry.p for entry in table.entries) == 1


def test_martin_kernel_examples(pascal):
    sys_ = central_equipment(pascal)
    assert martin_kernel(sys_, FinitePath.parse("0,0;1,0;2,1"), "4,2") == F(1, 3)
    assert martin_kernel(sys_, FinitePath.parse("0,0;1,1;2,2"), "4,0") == 0
    assert martin_kernel(sys_, FinitePath.parse("0,0;1,1"), "4,2") == F(1, 2)


def test_martin_kernel_of_partial_path(pascal):
    sys_ = central_equipment(pascal)
    partial = FinitePath.parse("2,1;3,2", start_level=2)
    # Prob(x_2 = (2,1), x_3 = (3,2) | x_4 = (4,2)) = 3/6 * 2/3
    assert martin_kernel(sys_, partial, "4,2") == F(1, 3)


def test_martin_table_sums_to_one(pascal):
    for sys_ in (central_equipment(pascal), random_equipment(pascal, seed=21)):
        table = martin_table(sys_, "6,2", 3)
        assert len(table.entries) == 8
        assert sum(entry.value for entry in table.entries) == 1


def test_martingale_identity(pascal):
    sys_ = random_equipment(pascal, seed=5)
    for w in pascal.level(6):
        for n in range(5):
            for p in pascal.enumerate_level_paths(n, cap=100):
                extended = sum(
                    martin_kernel(sys_, p.extend(x), w) for x, _ in pascal.successors(p.endpoint)
                )
                assert extended == martin_kernel(sys_, p, w)


def test_kernel_of_root_prefix_at_half_is_exact():
    graph = PascalGraph(2001)
    sys_ = central_equipment(graph)
    seq = pascal_frequency_sequence(F(1, 2), [500, 1000, 2000])
    report = boundary_limit_estimate(sys_, seq, FinitePath.parse("0,0;1,1"))
    assert [point.value for point in report.points] == [F(1, 2)] * 3
    assert report.stable
    assert report.max_delta == 0


def test_vertex_event_approaches_bernoulli_value():
    graph = PascalGraph(3001)
    sys_ = central_equipment(graph)
    seq = pascal_frequency_sequence(F(1, 3), [300, 3000])
    report = boundary_limit_estimate(sys_, seq, "2,1", target=F(4, 9))
    # 2 k (N - k) / (N (N - 1)) at N = 3000, k = 1000
    assert report.last_value == F(2 * 1000 * 2000, 3000 * 2999)
    assert report.target_gap < 1e-3
    assert report.points[0].delta is None


def test_constant_sequence_gives_constant_values(pascal):
    sys_ = random_equipment(pascal, seed=2)
    seq = boundary_sequence(pascal, ["4,2"])
    report = boundary_limit_estimate(sys_, seq, FinitePath.parse("0,0;1,1"), n_list=[4, 4, 4])
    values = {point.value for point in report.points}
    assert len(values) == 1
    assert report.last_delta == 0.0


def test_limit_rejects_level_outside_sequence(pascal):
    seq = boundary_sequence(pascal, ["3,1", "5,2"])
    with pytest.raises(LevelError):
        boundary_limit_estimate(central_equipment(pascal), seq, "1,0", n_list=[4])


def test_boundary_sequence_levels_must_increase(pascal):
    with pytest.raises(ValueError):
        boundary_sequence(pascal, ["5,2", "3,1"])


def test_frequency_sequence_rounding():
    assert pascal_frequency_sequence(F(1, 2), [3, 5]).terminals == ["3,2", "5,2"]
    assert pascal_frequency_sequence(F(1, 3), [5000]).terminals == ["5000,1667"]
    with pytest.raises(MeasureError):
        pascal_frequency_sequence(F(3, 2), [4])


def test_event_probability_of_vertex(pascal):
    sys_ = central_equipment(pascal)
    assert event_probability(sys_, "2,1", "4,2") == F(2, 3)


def test_statistic_values(pascal, young):
    coordinate = StatisticSpec.parse("coordinate:1")
    assert statistic_value(pascal, coordinate, "4,1", 4) == F(1, 4)
    assert statistic_value(young, StatisticSpec.parse("coordinate:0"), "(3,1)", 4) == F(3, 4)
    assert statistic_value(young, StatisticSpec.parse("coordinate:2"), "(3,1)", 4) == 0
    indicator = StatisticSpec.parse("indicator:1,1")
    assert statistic_value(pascal, indicator, "4,2", 4) == F(1, 2)
    assert statistic_value(pascal, indicator, "4,0", 4) == 0


def test_statistic_spec_parsing():
    assert StatisticSpec.parse("coordinate").coordinate == 1
    assert StatisticSpec.parse("indicator:(2,1)").vertex == "(2,1)"
    with pytest.raises(ValueError):
        StatisticSpec.parse("median")


def test_ergodicity_of_deterministic_measure():
    report = ergodicity_test(BernoulliMeasure(PascalGraph(21), F(0)), StatisticSpec(), [10, 20], 200, seed=1)
    assert [row.variance for row in report.rows] == [0.0, 0.0]
    assert report.verdict == "consistent with ergodic"


def test_ergodicity_of_fair_bernoulli():
    measure = BernoulliMeasure(PascalGraph(101), F(1, 2))
    tester = ErgodicityTester(threshold=0.01)
    report = tester.run(measure, StatisticSpec(), [25, 100], samples=20000, seed=3)
    for row in report.rows:
        assert abs(row.variance - 1 / (4 * row.level)) < 4 * row.stderr
        assert abs(row.mean - 0.5) < 0.01
    assert report.decreasing
    assert report.verdict == "consistent with ergodic"


def test_ergodicity_of_bernoulli_mixture():
    measure = BernoulliMixture(PascalGraph(401), [(F(1, 2), F(1, 4)), (F(1, 2), F(3, 4))])
    report = ErgodicityTester().run(measure, StatisticSpec(), [100, 400], samples=20000, seed=9)
    assert abs(report.floor - 1 / 16) < 4 * report.floor_stderr
    assert report.verdict == "inconsistent with ergodic"


def test_ergodicity_with_too_few_samples_is_undetermined():
    measure = BernoulliMeasure(PascalGraph(41), F(1, 2))
    report = ErgodicityTester(threshold=1e-3).run(measure, StatisticSpec(), [20, 40], samples=50, seed=0)
    assert report.verdict == "undetermined"


def test_ergodicity_refuses_non_central_measure():
    chain = PascalChain(PascalGraph(31), [F(1, 2), F(1, 3)] + [F(1, 2)] * 28)
    with pytest.raises(NonCentralMeasureError):
        ergodicity_test(chain, StatisticSpec(), [10, 30], 100, seed=0)


def test_indicator_statistic_on_plancherel_growth():
    measure = PlancherelMeasure(YoungGraph(13))
    statistic = StatisticSpec.parse("indicator:(2)")
    report = ErgodicityTester(threshold=0.05).run(measure, statistic, [6, 12], samples=2000, seed=4)
    assert all(0 <= row.mean <= 1 for row in report.rows)
    assert abs(report.rows[-1].mean - 0.5) < 0.05


def test_exchangeability():
    bernoulli = BernoulliMeasure(PascalGraph(5), F(1, 3))
    report = exchangeability_check(bernoulli, 4)
    assert report.passed
    assert report.paths_checked == 16
    for path in bernoulli.graph.paths_by_endpoint(4, cap=100)["4,2"]:
        assert bernoulli.cylinder_prob(path) == F(4, 81)
    assert exchangeability_check(bernoulli, 1).passed


def test_exchangeability_witness_for_chain():
    chain = PascalChain(PascalGraph(5), [F(1, 2), F(1, 3), F(1, 2), F(1, 2)])
    report = exchangeability_check(chain, 2)
    assert not report.passed
    assert (report.witness.p_prob, report.witness.q_prob) == (F(1, 6), F(1, 3))


def test_exchangeability_needs_pascal_graph():
    with pytest.raises(MeasureError):
        exchangeability_check(PlancherelMeasure(YoungGraph(4)), 2)


def test_kernel_is_bernoulli_cylinder_in_the_limit():
    n_big, k = 4000, 1000
    graph = PascalGraph(n_big + 1)
    sys_ = central_equipment(graph)
    w = PascalGraph.vertex(n_big, k)
    path = FinitePath.parse("0,0;1,1;2,1")
    assert martin_kernel(sys_, path, w) == F(comb(n_big - 2, k - 1), comb(n_big, k))
    assert abs(float(martin_kernel(sys_, path, w)) - 0.25 * 0.75) < 1e-3
