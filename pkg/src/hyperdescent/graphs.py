"""Graphs for embedding experiments.

Complete binary trees (plain or transitively closed), transitive closure,
tab-separated edge lists and hop-distance matrices.

Edge-list format: one ``child<TAB>parent`` pair per line, ``#`` starts a
comment.  A header line ``# undirected`` marks a file whose lines each stand
for both orientations.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

MAX_TREE_DEPTH = 20
UNDIRECTED_HEADER = "# undirected"


class GraphFormatError(ValueError):
    """Raised for malformed or empty edge-list files."""


class DisconnectedGraphError(ValueError):
    """Raised when a distance matrix is requested for a disconnected graph."""


@dataclass(frozen=True)
class Graph:
    """Nodes with string labels and a set of ordered index pairs.

    Undirected graphs store both orientations of every edge.
    """

    nodes: tuple
    edges: frozenset
    directed: bool = True

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", frozenset((int(u), int(v)) for u, v in self.edges))
        n = len(self.nodes)
        if len(set(self.nodes)) != n:
            raise ValueError("node labels must be unique")
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range")
        if not self.directed:
            missing = [(u, v) for u, v in self.edges if (v, u) not in self.edges]
            if missing:
                raise ValueError(f"undirected graph lacks reverse of {missing[0]}")

    @property
    def num_nodes(self):
        return len(self.nodes)

    def sorted_edges(self):
        """Edges as an ``(m, 2)`` integer array in lexicographic order."""
        if not self.edges:
            return np.empty((0, 2), dtype=np.intp)
        return np.array(sorted(self.edges), dtype=np.intp)

    def neighbors(self):
        """``N(u)``: list of sorted out-neighbour arrays, one per node."""
        out = [[] for _ in self.nodes]
        for u, v in sorted(self.edges):
            out[u].append(v)
        return [np.array(a, dtype=np.intp) for a in out]

    def non_neighbors(self):
        """``N'(u) = V - N(u) - {u}`` for every node, as sorted arrays."""
        n = self.num_nodes
        res = []
        for u, nb in enumerate(self.neighbors()):
            mask = np.ones(n, dtype=bool)
            mask[nb] = False
            mask[u] = False
            res.append(np.flatnonzero(mask).astype(np.intp))
        return res

    def symmetrized(self):
        e = set(self.edges) | {(v, u) for u, v in self.edges}
        return Graph(self.nodes, e, directed=False)


def _tree_parent_edges(depth):
    n = 2 ** (depth + 1) - 1
    return n, [(i, (i - 1) // 2) for i in range(1, n)]


def _check_depth(depth):
    if int(depth) != depth or depth < 1:
        raise ValueError(f"depth must be a positive integer, got {depth}")
    if depth > MAX_TREE_DEPTH:
        raise ValueError(f"depth {depth} exceeds the size guard of {MAX_TREE_DEPTH}")


def complete_binary_tree(depth, mode="undirected"):
    """Complete binary tree with ``2**(depth+1) - 1`` nodes in level order.

    ``mode="undirected"`` links parents and children both ways;
    ``mode="directed_closure"`` links every node to each of its ancestors.
    Node ``i`` is labelled ``"n{i}"`` and its parent is ``(i - 1) // 2``.
    """
    _check_depth(depth)
    n, pe = _tree_parent_edges(depth)
    labels = [f"n{i}" for i in range(n)]
    if mode == "undirected":
        return Graph(labels, set(pe) | {(v, u) for u, v in pe}, directed=False)
    if mode in ("directed_closure", "closure"):
        return transitive_closure(Graph(labels, pe, directed=True))
    raise ValueError(f"unknown mode {mode!r}")


def transitive_closure(g):
    """Reachability closure of a directed graph, without self pairs."""
    n = g.num_nodes
    if n == 0:
        return g
    e = g.sorted_edges()
    adj = csr_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n)) if len(e) else csr_matrix((n, n))
    hops = shortest_path(adj, method="D", unweighted=True, directed=True)
    reach = np.isfinite(hops)
    np.fill_diagonal(reach, False)
    u, v = np.nonzero(reach)
    return Graph(g.nodes, zip(u.tolist(), v.tolist()), directed=True)


def load_edge_list(path):
    """Read a ``child<TAB>parent`` file into a :class:`Graph`.

    Labels are numbered in order of first appearance.  Duplicate lines
    collapse into one edge.
    """
    labels = {}
    edges = set()
    undirected = False
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except UnicodeDecodeError as exc:
        raise GraphFormatError(f"{path}: not valid UTF-8 ({exc})") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line.lower() == UNDIRECTED_HEADER:
                undirected = True
            continue
        parts = raw.rstrip("\r\n").split("\t")
        parts = [p.strip() for p in parts]
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise GraphFormatError(f"{path}:{lineno}: expected 'child<TAB>parent', got {raw!r}")
        if parts[0] == parts[1]:
            raise GraphFormatError(f"{path}:{lineno}: self-loop on {parts[0]!r}")
        ids = [labels.setdefault(lab, len(labels)) for lab in parts]
        edges.add((ids[0], ids[1]))
    if not labels:
        raise GraphFormatError(f"{path}: no edges found")
    nodes = list(labels)
    if undirected:
        edges |= {(v, u) for u, v in edges}
        return Graph(nodes, edges, directed=False)
    return Graph(nodes, edges, directed=True)


def save_edge_list(g, path):
    """Write ``g`` in the format read by :func:`load_edge_list`.

    Directed graphs are written one line per edge with no header; undirected
    graphs get the ``# undirected`` header and one line per pair.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if g.directed:
            for u, v in sorted(g.edges):
                fh.write(f"{g.nodes[u]}\t{g.nodes[v]}\n")
        else:
            fh.write(UNDIRECTED_HEADER + "\n")
            for u, v in sorted(g.edges):
                if u > v:
                    fh.write(f"{g.nodes[u]}\t{g.nodes[v]}\n")


def graph_distance_matrix(g):
    """Hop distances on the symmetrized edge set, as an integer matrix."""
    n = g.num_nodes
    e = g.symmetrized().sorted_edges()
    adj = csr_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
    ncomp, lab = connected_components(adj, directed=False)
    if ncomp > 1:
        comps = [[g.nodes[i] for i in np.flatnonzero(lab == c)][:5] for c in range(ncomp)]
        raise DisconnectedGraphError(f"graph has {ncomp} components, e.g. {comps}")
    hops = shortest_path(adj, method="D", unweighted=True, directed=False)
    return hops.astype(np.int64)
