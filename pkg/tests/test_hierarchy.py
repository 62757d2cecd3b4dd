import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from probcascade.errors import CycleDetected, DuplicateParent, EmptyInput, MalformedLine, MultipleRoots, UnknownNode
from probcascade.hierarchy import (
    Hierarchy,
    ancestors,
    lca,
    leaf_descendants,
    parse_hierarchy,
    path_from_root,
    serialize_hierarchy,
    tree_distance,
)

from oracles import ARTS, DANCE, FITNESS, HEALTH, MEDICINE, MUSIC, ROOT, bfs_distance, random_tree_edges


@st.composite
def trees(draw, max_nodes=40):
    n = draw(st.integers(2, max_nodes))
    parents = [draw(st.integers(0, i - 1)) for i in range(1, n)]
    ids = draw(st.permutations(range(n * 2)))[:n]
    return [(ids[p], ids[i + 1]) for i, p in enumerate(parents)]


class TestParse:
    def test_arts_health(self, arts_health):
        h = arts_health
        assert h.root == ROOT
        assert h.leaves == {MUSIC, DANCE, MEDICINE, FITNESS}
        assert h.children_of[ROOT] == (ARTS, HEALTH)
        assert h.children_of[HEALTH] == (MEDICINE, FITNESS)
        assert h.parent_of[MUSIC] == ARTS

    def test_minimal(self):
        h = parse_hierarchy(["0 1"])
        assert h.root == 0
        assert h.leaves == {1}

    def test_two_node_cycle(self):
        with pytest.raises(CycleDetected):
            parse_hierarchy(["0 1", "1 0"])

    def test_cycle_beside_valid_tree(self):
        with pytest.raises(CycleDetected):
            parse_hierarchy(["0 1", "2 3", "3 2"])

    def test_self_loop(self):
        with pytest.raises(CycleDetected):
            parse_hierarchy(["1 1"])

    def test_multiple_roots(self):
        with pytest.raises(MultipleRoots):
            parse_hierarchy(["0 1", "2 3"])

    def test_duplicate_parent(self):
        with pytest.raises(DuplicateParent):
            parse_hierarchy(["0 1", "0 2", "2 1"])

    @pytest.mark.parametrize("lines", [[], ["", "   "]])
    def test_empty(self, lines):
        with pytest.raises(EmptyInput):
            parse_hierarchy(lines)

    @pytest.mark.parametrize("line", ["0", "0 1 2", "a b", "0 -1"])
    def test_malformed(self, line):
        with pytest.raises(MalformedLine) as exc:
            parse_hierarchy(["0 5", line])
        assert exc.value.line_no == 2

    def test_crlf_and_blank_lines(self):
        h = parse_hierarchy(["0 1\r\n", "\r\n", "0 2\n"])
        assert h.leaves == {1, 2}

    def test_children_keep_file_order(self):
        h = parse_hierarchy(["0 9", "0 3", "0 5"])
        assert h.children_of[0] == (9, 3, 5)


class TestQueries:
    def test_leaf_descendants(self, arts_health):
        assert leaf_descendants(arts_health, ARTS) == {MUSIC, DANCE}
        assert leaf_descendants(arts_health, MUSIC) == {MUSIC}
        assert leaf_descendants(arts_health, ROOT) == {MUSIC, DANCE, MEDICINE, FITNESS}

    def test_ancestors(self, arts_health):
        assert ancestors(arts_health, MUSIC) == [ARTS, ROOT]
        assert ancestors(arts_health, ROOT) == []
        assert ancestors(arts_health, FITNESS) == [HEALTH, ROOT]

    def test_path_from_root(self, arts_health):
        assert path_from_root(arts_health, MUSIC) == [ARTS, MUSIC]
        assert path_from_root(arts_health, ROOT) == []

    def test_tree_distance(self, arts_health):
        assert tree_distance(arts_health, MUSIC, MUSIC) == 0
        assert tree_distance(arts_health, MUSIC, DANCE) == 2
        assert tree_distance(arts_health, MUSIC, MEDICINE) == 4

    def test_siblings(self, arts_health):
        assert arts_health.siblings(MUSIC) == (DANCE,)
        assert arts_health.siblings(ROOT) == ()

    @pytest.mark.parametrize("fn", [leaf_descendants, ancestors, path_from_root])
    def test_unknown_node(self, arts_health, fn):
        with pytest.raises(UnknownNode):
            fn(arts_health, 42)

    def test_unknown_node_distance(self, arts_health):
        with pytest.raises(UnknownNode):
            tree_distance(arts_health, MUSIC, 42)


@settings(max_examples=60, deadline=None)
@given(trees())
def test_leaf_descendants_union_of_children(edges):
    h = Hierarchy(edges)
    for n in h.nodes:
        kids = h.children_of[n]
        if kids:
            assert leaf_descendants(h, n) == frozenset().union(*(leaf_descendants(h, k) for k in kids))
        else:
            assert leaf_descendants(h, n) == {n}


@settings(max_examples=60, deadline=None)
@given(trees())
def test_ancestor_count_is_depth(edges):
    h = Hierarchy(edges)
    assert ancestors(h, h.root) == []
    for n in h.nodes:
        assert len(ancestors(h, n)) == h.depth[n]


@settings(max_examples=60, deadline=None)
@given(trees())
def test_serialize_round_trip(edges):
    h = Hierarchy(edges)
    again = parse_hierarchy(serialize_hierarchy(h))
    assert again == h
    assert all(again.children_of[n] == h.children_of[n] for n in h.nodes)


@settings(max_examples=40, deadline=None)
@given(trees(max_nodes=25))
def test_tree_distance_is_metric_matching_bfs(edges):
    h = Hierarchy(edges)
    nodes = list(h.nodes)
    for a, b in itertools.product(nodes, repeat=2):
        d = tree_distance(h, a, b)
        assert d == bfs_distance(edges, a, b)
        assert d == tree_distance(h, b, a)
        assert (d == 0) == (a == b)
    for a, b, c in itertools.islice(itertools.product(nodes, repeat=3), 2000):
        assert tree_distance(h, a, c) <= tree_distance(h, a, b) + tree_distance(h, b, c)


def test_lca_on_random_trees():
    rng = np.random.default_rng(7)
    for _ in range(20):
        edges = random_tree_edges(rng, max_depth=5, max_leaves=30)
        h = Hierarchy(edges)
        nodes = list(h.nodes)
        for _ in range(50):
            a, b = (nodes[i] for i in rng.integers(len(nodes), size=2))
            top = lca(h, a, b)
            assert top == a or top in ancestors(h, a)
            assert top == b or top in ancestors(h, b)
            assert h.depth[a] + h.depth[b] - 2 * h.depth[top] == bfs_distance(edges, a, b)
