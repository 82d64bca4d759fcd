"""Shared fixtures and independent oracles"""

from collections import defaultdict
from fractions import Fraction

import pytest

from graphs.graded_graph import PascalGraph, TabulatedGraph, YoungGraph


@pytest.fixture
def pascal():
    return PascalGraph(7)


@pytest.fixture
def young():
    return YoungGraph(7)


@pytest.fixture
def multigraph():
    """r -> a (x1), r -> b (x2); a -> c, a -> d, b -> c (x2), b -> d"""
    return TabulatedGraph(
        levels=[["r"], ["a", "b"], ["c", "d"]],
        edges=[
            ("r", "a", 1), ("r", "b", 2),
            ("a", "c", 1), ("a", "d", 1),
            ("b", "c", 2), ("b", "d", 1),
        ],
    )


@pytest.fixture
def conditional_oracle():
    """
    Brute-force conditional measure: Prob(path | x_n = w) for every path
    from level 0 to w, as the product of cotransitions along the whole path
    """
    def oracle(sys, w, cap=100000):
        graph = sys.graph
        out = {}
        for root in graph.roots():
            for path in graph.enumerate_paths(root, w, cap):
                weight = Fraction(1)
                for i in range(path.steps):
                    weight *= sys.prob(path.vertices[i + 1], path.vertices[i], path.edge_choices[i])
                out[path] = weight
        return out
    return oracle


@pytest.fixture
def bayes_oracle():
    """Cotransition rows of a measure by summing cylinder probabilities of enumerated paths"""
    def oracle(measure, n, cap=100000):
        graph = measure.graph
        joint = defaultdict(lambda: defaultdict(Fraction))
        totals = defaultdict(Fraction)
        for path in graph.enumerate_level_paths(n, cap):
            prob = measure.cylinder_prob(path)
            key = (path.vertices[-2], path.edge_choices[-1])
            joint[path.endpoint][key] += prob
            totals[path.endpoint] += prob
        return {
            x: {key: value / totals[x] for key, value in row.items() if value}
            for x, row in joint.items()
            if totals[x]
        }
    return oracle
