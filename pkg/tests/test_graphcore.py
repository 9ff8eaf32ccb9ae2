import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specgap.errors import DisconnectedError, GraphError
from specgap.graphcore import (
    Graph,
    add_edge,
    boundary_graph,
    box_order,
    canonical_code,
    cartesian_product,
    connected_prefix_order,
    emit_edge_list,
    emit_graph6,
    enumerate_connected,
    first_disconnected_prefix,
    h_size,
    induced_subgraph,
    intermediate_sequence,
    is_isomorphic,
    make_box,
    make_complete,
    make_cycle,
    make_path,
    make_star,
    parse_edge_list,
    parse_graph6,
    read_graph_file,
    remove_pendant_edge,
)


def to_nx(G):
    H = nx.Graph()
    H.add_nodes_from(range(G.n))
    H.add_edges_from(G.edge_list)
    return H


def iso(G, H):
    return nx.is_isomorphic(to_nx(G), to_nx(H))


def lattice_edges(points):
    """Brute-force scan: pairs of lattice points at L1 distance one."""
    return sum(
        1 for p, q in itertools.combinations(points, 2) if sum(abs(a - b) for a, b in zip(p, q)) == 1
    )


@st.composite
def graphs(draw, max_n=9):
    n = draw(st.integers(1, max_n))
    pairs = [(i, j) for j in range(n) for i in range(j)]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Graph.from_edges(n, [p for p, keep in zip(pairs, mask) if keep])


class TestConstructors:
    def test_path(self):
        assert make_path(0).n == 1 and make_path(0).num_edges == 0
        assert make_path(1).edge_list == [(0, 1)]
        assert make_path(3).edge_list == [(0, 1), (1, 2), (2, 3)]

    def test_box_small(self):
        assert is_isomorphic(make_box(1, 2), make_path(2))
        sq = make_box(2, 1)
        assert (sq.n, sq.num_edges) == (4, 4)
        assert is_isomorphic(sq, make_cycle(4))
        cube = make_box(3, 1)
        assert (cube.n, cube.num_edges) == (8, 12)
        assert cube.num_edges == lattice_edges(cube.coords)

    @pytest.mark.parametrize("d,L", [(1, 5), (2, 3), (3, 2), (4, 1)])
    def test_box_edges_match_lattice_scan(self, d, L):
        B = make_box(d, L)
        assert B.n == (L + 1) ** d
        assert B.num_edges == lattice_edges(B.coords) == d * L * (L + 1) ** (d - 1)

    def test_box_budget(self):
        with pytest.raises(Exception, match="budget"):
            make_box(3, 200, budget=1000)

    def test_product(self):
        assert is_isomorphic(cartesian_product(make_path(1), make_path(1)), make_cycle(4))
        grid = cartesian_product(make_path(2), make_path(1))
        assert (grid.n, grid.num_edges) == (6, 7)
        cube = cartesian_product(cartesian_product(make_path(1), make_path(1)), make_path(1))
        assert nx.is_isomorphic(to_nx(cube), to_nx(make_box(3, 1)))

    @given(graphs(5), graphs(5))
    @settings(max_examples=40, deadline=None)
    def test_product_edge_count(self, G, H):
        P = cartesian_product(G, H)
        assert P.n == G.n * H.n
        assert P.num_edges == G.num_edges * H.n + H.num_edges * G.n
        assert nx.is_isomorphic(to_nx(P), nx.cartesian_product(to_nx(G), to_nx(H)))

    def test_validation(self):
        with pytest.raises(GraphError):
            Graph.from_edges(3, [(0, 0)])
        with pytest.raises(GraphError):
            Graph.from_edges(3, [(0, 3)])
        with pytest.raises(GraphError):
            Graph.from_edges(3, [(0, 1), (1, 0)])


class TestPrefixesAndBoxSequence:
    def test_induced(self):
        G = make_cycle(5)
        assert induced_subgraph(G, 5) == G
        assert induced_subgraph(make_path(2), 2).edge_list == [(0, 1)]
        assert is_isomorphic(induced_subgraph(make_box(2, 1), 3), make_path(2))

    def test_d1_single_stage(self):
        seq = intermediate_sequence(1, 4)
        assert len(seq.snapshots) == 1
        assert seq.snapshots[0] == make_path(4)

    def test_d2_L1_snapshots(self):
        seq = intermediate_sequence(2, 1)
        shapes = [make_path(1), make_path(2), make_cycle(4)]
        assert len(seq.snapshots) == 3
        for got, want in zip(seq.snapshots, shapes):
            assert is_isomorphic(got, want)

    def test_d2_L2_stage_graphs(self):
        seq = intermediate_sequence(2, 2)
        assert seq.snapshots[-1].n == 9 and iso(seq.snapshots[-1], make_box(2, 2))
        H1 = seq.h_graph(1)
        assert H1.n == 6 and iso(H1, cartesian_product(make_path(2), make_path(1)))
        assert seq.h_graph(2) == make_box(2, 2)

    @pytest.mark.parametrize("d,L", [(2, 3), (3, 2)])
    def test_prefixes_are_build_graphs(self, d, L):
        B = make_box(d, L)
        order = box_order(d, L)
        assert [tuple(c) for c in B.coords] == order
        for k in range(d + 1):
            size = h_size(d, L, k)
            assert size == (L + 1) ** k * L ** (d - k)
            # H_k is the box [0,L]^k x [0,L-1]^(d-k)
            pts = [p for p in order if all(x <= L - 1 for x in p[k:])]
            assert set(order[:size]) == set(pts)
        assert first_disconnected_prefix(B) is None

    def test_boundary_graph(self):
        assert boundary_graph(1, 4, 1) == make_path(4)
        # H_0 is one vertex: only the edge touching it survives
        assert boundary_graph(2, 1, 1).num_edges == 1
        G = boundary_graph(2, 2, 2)
        assert G.n == 9 and G.num_edges == 12 - 2


class TestEdits:
    def test_add(self):
        assert is_isomorphic(add_edge(make_path(2), 0, 2), make_complete(3))
        with pytest.raises(GraphError):
            add_edge(make_path(2), 0, 1)

    def test_add_drops_coords_off_lattice(self):
        assert make_path(2).coords is not None
        assert add_edge(make_path(2), 0, 2).coords is None

    def test_pendant(self):
        assert remove_pendant_edge(make_path(3), 2, 3) == make_path(2)
        with pytest.raises(GraphError):
            remove_pendant_edge(make_path(3), 1, 2)

    def test_pendant_relabels(self):
        star = make_star(3)
        G = remove_pendant_edge(star, 0, 1)
        assert is_isomorphic(G, make_star(2)) and G.n == 3


class TestGraph6:
    def test_examples(self):
        assert parse_graph6("A_") == make_path(1)
        assert is_isomorphic(parse_graph6("Bw"), make_complete(3))

    @given(graphs(12))
    @settings(max_examples=150, deadline=None)
    def test_against_networkx(self, G):
        s = emit_graph6(G)
        assert s == nx.to_graph6_bytes(to_nx(G), header=False).decode().strip()
        assert parse_graph6(s) == G

    @pytest.mark.parametrize("bad", ["", "A", "A~", "B_x", "Bw\x01"])
    def test_rejects(self, bad):
        with pytest.raises(GraphError):
            parse_graph6(bad)

    def test_edge_list_round_trip(self, tmp_path):
        G = make_cycle(5)
        text = emit_edge_list(G)
        assert parse_edge_list(text) == G
        path = tmp_path / "g.txt"
        path.write_text(text)
        assert read_graph_file(path) == G
        (tmp_path / "g.g6").write_text(emit_graph6(G) + "\n")
        assert read_graph_file(tmp_path / "g.g6") == G

    def test_edge_list_rejects_weights(self):
        with pytest.raises(GraphError):
            parse_edge_list("n 2\n0 1 0.5\n")


class TestEnumeration:
    @pytest.mark.parametrize("n,count", [(1, 1), (2, 1), (3, 2), (4, 6), (5, 21), (6, 112)])
    def test_counts(self, n, count):
        assert len(list(enumerate_connected(n))) == count

    def test_matches_atlas(self):
        atlas = [g for g in nx.graph_atlas_g() if 2 <= g.number_of_nodes() <= 6 and nx.is_connected(g)]
        ours = [G for n in range(2, 7) for G in enumerate_connected(n)]
        assert len(ours) == len(atlas) == 142
        for G in ours:
            assert sum(nx.is_isomorphic(to_nx(G), a) for a in atlas) == 1

    def test_n3(self):
        gs = list(enumerate_connected(3))
        assert {g.num_edges for g in gs} == {2, 3}

    @given(graphs(6), st.randoms(use_true_random=False))
    @settings(max_examples=60, deadline=None)
    def test_canonical_invariant(self, G, rnd):
        order = list(range(G.n))
        rnd.shuffle(order)
        assert canonical_code(G) == canonical_code(G.relabel(order))

    @given(graphs(6), graphs(6))
    @settings(max_examples=80, deadline=None)
    def test_isomorphism_against_networkx(self, G, H):
        if G.n == H.n:
            assert is_isomorphic(G, H) == iso(G, H)

    @given(graphs(9))
    @settings(max_examples=60, deadline=None)
    def test_bfs_order(self, G):
        if G.is_connected():
            assert first_disconnected_prefix(G.relabel(connected_prefix_order(G))) is None
        elif G.n > 1:
            with pytest.raises(DisconnectedError):
                connected_prefix_order(G)
