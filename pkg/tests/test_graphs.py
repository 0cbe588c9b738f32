import collections
import math

import pytest

from evosi import graphs as gr
from evosi.degrees import DegreeSequence
from evosi.errors import OddDegreeSum
from evosi.rng import TrialRandom, TAG_GRAPH

from oracles import enumerate_matchings


def _graph_stream(master, trial):
    return TrialRandom(master, trial).stream(TAG_GRAPH)


def test_single_edge_and_self_loop():
    g = gr.build_configuration_model(
        DegreeSequence.from_degrees([1, 1]), _graph_stream(0, 0)
    )
    assert [tuple(sorted(e)) for e in g.edges] == [(0, 1)]
    g = gr.build_configuration_model(
        DegreeSequence.from_degrees([2, 0]), _graph_stream(0, 1)
    )
    assert g.edges == [(0, 0)]
    assert g.degree(0) == 2 and g.degree(1) == 0


def test_odd_sum_rejected():
    with pytest.raises(OddDegreeSum):
        gr.build_configuration_model(
            DegreeSequence.from_degrees([1, 1, 1]), _graph_stream(0, 0)
        )


def test_degrees_preserved_always():
    seq = DegreeSequence.from_degrees([4, 3, 2, 1, 0, 2])
    for trial in range(40):
        g = gr.build_configuration_model(seq, _graph_stream(5, trial))
        assert [g.degree(v) for v in range(seq.n)] == list(seq.degrees)
        assert g.edge_count == int(seq.degrees.sum()) // 2


def test_matching_frequencies_uniform():
    # degrees (1,1,1,1): 3 perfect matchings, each frequency 1/3 +- 0.01
    matchings = enumerate_matchings(range(4))
    assert len(matchings) == 3
    seq = DegreeSequence.from_degrees([1, 1, 1, 1])
    trials = 10**5
    counts = collections.Counter()
    for trial in range(trials):
        g = gr.build_configuration_model(seq, _graph_stream(77, trial))
        counts[frozenset(frozenset(e) for e in g.edges)] += 1
    assert len(counts) == 3
    for key in counts:
        assert abs(counts[key] / trials - 1.0 / 3.0) < 0.01


def test_exchangeable_on_equal_degrees():
    # degrees (2,2,2): edge-multiset law symmetric under vertex relabeling
    seq = DegreeSequence.from_degrees([2, 2, 2])
    trials = 30000
    counts = collections.Counter()
    for trial in range(trials):
        g = gr.build_configuration_model(seq, _graph_stream(13, trial))
        counts[tuple(sorted(tuple(sorted(e)) for e in g.edges))] += 1
    # group outcomes by relabeling orbit: triangle, loop+edge+?, etc.
    def orbit(edge_key):
        best = None
        for perm in ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)):
            relabeled = tuple(
                sorted(tuple(sorted((perm[a], perm[b]))) for a, b in edge_key)
            )
            if best is None or relabeled < best:
                best = relabeled
        return best

    by_orbit = collections.defaultdict(list)
    for key, c in counts.items():
        by_orbit[orbit(key)].append(c)
    for members in by_orbit.values():
        mean = sum(members) / len(members)
        for c in members:
            # binomial fluctuation band, 5 sigma
            assert abs(c - mean) < 5.0 * math.sqrt(mean) + 5


def test_pool_uniformity_and_removal():
    pool = gr.HalfEdgePool(range(10))
    rng = TrialRandom(3, 0).stream(TAG_GRAPH)
    draws = collections.Counter(
        gr.draw_uniform_half_edge(pool, rng) for _ in range(10**6)
    )
    for h in range(10):
        p = draws[h] / 10**6
        assert abs(p - 0.1) < 5.0 * math.sqrt(0.1 * 0.9 / 10**6)

    pool = gr.HalfEdgePool([4, 9])
    gr.remove(pool, 9)
    assert pool.draw(rng) == 4
    gr.remove(pool, 4)
    with pytest.raises(gr.EmptyPool):
        pool.draw(rng)


def test_pool_of_one():
    pool = gr.HalfEdgePool([42])
    rng = TrialRandom(3, 1).stream(TAG_GRAPH)
    assert pool.draw(rng) == 42
