import numpy as np
import pytest

from hyperdescent.graphs import (
    DisconnectedGraphError,
    Graph,
    GraphFormatError,
    complete_binary_tree,
    graph_distance_matrix,
    load_edge_list,
    save_edge_list,
    transitive_closure,
)


def _bfs(n, edges, src):
    adj = {i: set() for i in range(n)}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    dist = {src: 0}
    frontier = [src]
    while frontier:
        nxt = []
        for u in frontier:
            for w in adj[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    nxt.append(w)
        frontier = nxt
    return dist


class TestTrees:
    def test_depth_one(self):
        g = complete_binary_tree(1, "undirected")
        assert g.num_nodes == 3
        assert g.edges == {(1, 0), (0, 1), (2, 0), (0, 2)}
        assert not g.directed

    @pytest.mark.parametrize("depth", [1, 2, 5, 8])
    def test_closure_edge_count(self, depth):
        g = complete_binary_tree(depth, "directed_closure")
        assert g.num_nodes == 2 ** (depth + 1) - 1
        assert len(g.edges) == sum(2 ** k * k for k in range(1, depth + 1))

    def test_depth_five(self):
        g = complete_binary_tree(5, "directed_closure")
        assert (g.num_nodes, len(g.edges)) == (63, 258)
        assert complete_binary_tree(5).num_nodes == 63

    def test_closure_points_to_ancestors(self):
        g = complete_binary_tree(3, "closure")
        for u, v in g.edges:
            a = u
            while a and a != v:
                a = (a - 1) // 2
            assert a == v

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            complete_binary_tree(0)
        with pytest.raises(ValueError):
            complete_binary_tree(21)
        with pytest.raises(ValueError):
            complete_binary_tree(2, "sideways")


class TestClosure:
    def test_chain(self):
        g = Graph(["a", "b", "c"], {(0, 1), (1, 2)})
        assert transitive_closure(g).edges == {(0, 1), (1, 2), (0, 2)}

    def test_idempotent(self):
        g = transitive_closure(Graph(["a", "b", "c", "d"], {(0, 1), (1, 2), (3, 2)}))
        assert transitive_closure(g).edges == g.edges

    def test_tree_closure_matches(self):
        n = 63
        tree = Graph([f"n{i}" for i in range(n)], {(i, (i - 1) // 2) for i in range(1, n)})
        assert transitive_closure(tree).edges == complete_binary_tree(5, "directed_closure").edges


class TestGraph:
    def test_self_loop(self):
        with pytest.raises(ValueError):
            Graph(["a"], {(0, 0)})

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            Graph(["a", "b"], {(0, 2)})

    def test_undirected_needs_both(self):
        with pytest.raises(ValueError):
            Graph(["a", "b"], {(0, 1)}, directed=False)

    def test_non_neighbors_exclude_self(self):
        g = complete_binary_tree(1)
        nn = g.non_neighbors()
        assert nn[0].tolist() == []
        assert nn[1].tolist() == [2]
        assert nn[2].tolist() == [1]


class TestEdgeList:
    def test_two_lines(self, tmp_path):
        p = tmp_path / "g.tsv"
        p.write_text("a\tb\nb\tc\n")
        g = load_edge_list(p)
        assert g.num_nodes == 3
        assert len(g.edges) == 2
        assert g.directed

    def test_duplicates(self, tmp_path):
        p = tmp_path / "g.tsv"
        p.write_text("a\tb\na\tb\n")
        assert len(load_edge_list(p).edges) == 1

    def test_comments_and_blanks(self, tmp_path):
        p = tmp_path / "g.tsv"
        p.write_text("# a comment\n\na\tb\n   \n# another\nb\tc\n")
        assert len(load_edge_list(p).edges) == 2

    def test_malformed_line_number(self, tmp_path):
        p = tmp_path / "g.tsv"
        p.write_text("a\tb\nc d\n")
        with pytest.raises(GraphFormatError, match=":2:"):
            load_edge_list(p)

    def test_empty(self, tmp_path):
        p = tmp_path / "g.tsv"
        p.write_text("# nothing\n")
        with pytest.raises(GraphFormatError):
            load_edge_list(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_edge_list(tmp_path / "absent.tsv")

    @pytest.mark.parametrize("mode", ["undirected", "directed_closure"])
    def test_round_trip(self, tmp_path, mode):
        g = complete_binary_tree(3, mode)
        p = tmp_path / "g.tsv"
        save_edge_list(g, p)
        h = load_edge_list(p)
        assert h.directed == g.directed
        relabel = {lab: i for i, lab in enumerate(g.nodes)}
        mapped = {(relabel[h.nodes[u]], relabel[h.nodes[v]]) for u, v in h.edges}
        assert mapped == g.edges

    def test_closure_file_lines(self, tmp_path):
        p = tmp_path / "c.tsv"
        save_edge_list(complete_binary_tree(5, "directed_closure"), p)
        assert len(p.read_text().splitlines()) == 258

    def test_undirected_file(self, tmp_path):
        p = tmp_path / "u.tsv"
        save_edge_list(complete_binary_tree(1), p)
        assert p.read_text().splitlines() == ["# undirected", "n1\tn0", "n2\tn0"]


class TestDistances:
    def test_depth_one(self):
        D = graph_distance_matrix(complete_binary_tree(1))
        np.testing.assert_array_equal(D, [[0, 1, 1], [1, 0, 2], [1, 2, 0]])

    def test_matches_bfs(self):
        g = complete_binary_tree(4)
        D = graph_distance_matrix(g)
        assert D.dtype == np.int64
        np.testing.assert_array_equal(D, D.T)
        assert np.all(np.diag(D) == 0)
        for src in (0, 5, 30):
            ref = _bfs(g.num_nodes, g.edges, src)
            assert [ref[i] for i in range(g.num_nodes)] == D[src].tolist()

    def test_closure_symmetrized(self):
        D = graph_distance_matrix(complete_binary_tree(2, "closure"))
        assert D[3, 0] == 1
        assert D[3, 4] == 2

    def test_disconnected(self):
        g = Graph(["a", "b", "c", "d"], {(0, 1), (2, 3)})
        with pytest.raises(DisconnectedGraphError):
            graph_distance_matrix(g)
