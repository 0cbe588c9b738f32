"""Configuration-model multigraphs and the uniform half-edge pool.

The pool is a flat array with swap-remove so that uniform draws and removals
are both O(1); the builder pairs half-edges uniformly at random by repeated
(draw, draw, pair), keeping self-loops and multi-edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .degrees import DegreeSequence
from .errors import DegenerateState, OddDegreeSum
from .rng import Stream


class EmptyPool(DegenerateState):
    """Draw from an empty half-edge pool."""


class HalfEdgePool:
    """Live half-edge ids with O(1) uniform draw and swap-remove.

    `owner[h]` gives the vertex a half-edge belongs to. Removal swaps the
    removed entry with the last one, so the remaining ids stay densely
    packed and draws stay uniform.
    """

    __slots__ = ("entries", "positions", "owner")

    def __init__(self, ids, owner=None):
        self.entries = list(ids)
        self.positions = {h: i for i, h in enumerate(self.entries)}
        self.owner = owner

    @property
    def count(self) -> int:
        return len(self.entries)

    def owner_of(self, h: int) -> int:
        return int(self.owner[h])

    def draw(self, rng: Stream) -> int:
        if not self.entries:
            raise EmptyPool("draw from empty half-edge pool")
        return self.entries[rng.randint_below(len(self.entries))]

    def remove(self, h: int) -> None:
        pos = self.positions.pop(h)
        last = self.entries.pop()
        if last != h:
            self.entries[pos] = last
            self.positions[last] = pos


def draw_uniform_half_edge(pool: HalfEdgePool, rng: Stream) -> int:
    return pool.draw(rng)


def remove(pool: HalfEdgePool, h: int) -> None:
    pool.remove(h)


@dataclass
class MultiGraph:
    """Multigraph as an edge list plus per-vertex incident stub lists.

    A self-loop contributes two stubs to its vertex; multi-edges are kept.
    adjacency[v] lists (edge_id, side) pairs with side in {0, 1} naming the
    endpoint of edges[edge_id] that sits at v.
    """

    n: int
    edges: list = field(default_factory=list)       # [(a, b), ...]
    adjacency: list = field(default_factory=list)   # per-vertex [(eid, side)]

    @staticmethod
    def empty(n: int) -> "MultiGraph":
        return MultiGraph(n, [], [[] for _ in range(n)])

    def add_edge(self, a: int, b: int) -> int:
        eid = len(self.edges)
        self.edges.append((a, b))
        self.adjacency[a].append((eid, 0))
        self.adjacency[b].append((eid, 1))
        return eid

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    @property
    def edge_count(self) -> int:
        return len(self.edges)


def build_configuration_model(seq: DegreeSequence, rng: Stream) -> MultiGraph:
    """Uniform pairing of the sequence's half-edges into a multigraph."""
    degrees = np.asarray(seq.degrees, dtype=np.int64)
    total = int(degrees.sum())
    if total % 2 == 1:
        raise OddDegreeSum(f"degree sum {total} is odd; parity-fix first")
    owner = np.repeat(np.arange(seq.n, dtype=np.int64), degrees)
    pool = HalfEdgePool(range(total), owner)
    graph = MultiGraph.empty(seq.n)
    while pool.count:
        a = pool.draw(rng)
        pool.remove(a)
        b = pool.draw(rng)
        pool.remove(b)
        graph.add_edge(int(owner[a]), int(owner[b]))
    return graph
