"""Labeled undirected graphs: paths, boxes, products, induced prefixes, graph6 I/O.

Vertex labels are ``0..n-1``.  For box graphs the labels follow the build order
(origin first, then each one-unit lengthening in direction 1, 2, ..., d, for side
lengths 1, 2, ..., L), so the induced prefix on the first ``k`` labels is exactly
the ``k``-th intermediate graph of the box construction.
"""

from __future__ import annotations

import functools
import itertools
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import BudgetExceeded, DisconnectedError, GraphError

DEFAULT_VERTEX_BUDGET = 4_000_000
MAX_GRAPH6_N = 62
MAX_ENUM_N = 7

Edge = tuple[int, int]


def _norm(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    """Immutable simple undirected graph on vertices ``0..n-1``.

    ``coords`` optionally maps each vertex to an integer lattice point; when it is
    present every edge joins points at l1-distance 1.
    """

    n: int
    edges: frozenset[Edge]
    coords: tuple[tuple[int, ...], ...] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.n < 0:
            raise GraphError("vertex count must be nonnegative")
        normed = set()
        for e in self.edges:
            u, v = e
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise GraphError(f"edge {e} has an endpoint outside 0..{self.n - 1}")
            normed.add(_norm(u, v))
        object.__setattr__(self, "edges", frozenset(normed))
        if self.coords is not None:
            if len(self.coords) != self.n:
                raise GraphError("coords must list one lattice point per vertex")
            for u, v in normed:
                dist = sum(abs(a - b) for a, b in zip(self.coords[u], self.coords[v]))
                if dist != 1:
                    raise GraphError(f"edge {(u, v)} is not a unit lattice step")

    @classmethod
    def from_edges(cls, n: int, edges: Sequence[Sequence[int]], coords=None) -> "Graph":
        normed = [_norm(int(u), int(v)) for u, v in edges]
        if len(set(normed)) != len(normed):
            raise GraphError("duplicate edge")
        return cls(n, frozenset(normed), coords)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def edge_list(self) -> list[Edge]:
        return sorted(self.edges)

    @functools.cached_property
    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        for nbrs in adj:
            nbrs.sort()
        return adj

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for u, v in self.edges:
            a[u, v] = a[v, u] = 1.0
        return a

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        seen = {0}
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for w in self.adjacency[u]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return len(seen) == self.n

    def relabel(self, order: Sequence[int]) -> "Graph":
        """Return the graph whose vertex ``i`` is old vertex ``order[i]``."""
        if sorted(order) != list(range(self.n)):
            raise GraphError("relabeling must be a permutation of the vertices")
        new = {old: i for i, old in enumerate(order)}
        coords = None if self.coords is None else tuple(self.coords[o] for o in order)
        return Graph(self.n, frozenset(_norm(new[u], new[v]) for u, v in self.edges), coords)

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={self.edge_list})"


# ---------------------------------------------------------------------------
# constructors


def make_path(L: int) -> Graph:
    """The path on vertices ``0..L`` (``L`` edges)."""
    if L < 0:
        raise GraphError("path length must be nonnegative")
    return Graph(L + 1, frozenset((i, i + 1) for i in range(L)), tuple((i,) for i in range(L + 1)))


def make_complete(n: int) -> Graph:
    if n < 1:
        raise GraphError("complete graph needs at least one vertex")
    return Graph(n, frozenset(itertools.combinations(range(n), 2)))


def make_cycle(n: int) -> Graph:
    if n < 3:
        raise GraphError("cycle needs at least three vertices")
    return Graph(n, frozenset(_norm(i, (i + 1) % n) for i in range(n)))


def make_star(leaves: int) -> Graph:
    """K_{1,leaves} with the center labeled 0."""
    if leaves < 1:
        raise GraphError("star needs at least one leaf")
    return Graph(leaves + 1, frozenset((0, i) for i in range(1, leaves + 1)))


def _stage_points(d: int, L: int, k: int) -> list[tuple[int, ...]]:
    # V(H_k) - V(H_{k-1}): coordinate k equals L, earlier ones range 0..L, later 0..L-1
    ranges = [range(L + 1)] * (k - 1) + [range(L, L + 1)] + [range(L)] * (d - k)
    return list(itertools.product(*ranges))


def box_order(d: int, L: int) -> list[tuple[int, ...]]:
    """Lattice points of ``{0..L}^d`` in build order."""
    points = [(0,) * d]
    for side in range(1, L + 1):
        for k in range(1, d + 1):
            points.extend(_stage_points(d, side, k))
    return points


def _lattice_graph(points: list[tuple[int, ...]]) -> Graph:
    index = {p: i for i, p in enumerate(points)}
    edges = set()
    for i, p in enumerate(points):
        for axis in range(len(p)):
            q = p[:axis] + (p[axis] + 1,) + p[axis + 1 :]
            j = index.get(q)
            if j is not None:
                edges.add(_norm(i, j))
    return Graph(len(points), frozenset(edges), tuple(points))


def _check_box_budget(d: int, L: int, budget: int) -> None:
    if d < 1:
        raise GraphError("box dimension must be at least 1")
    if L < 0:
        raise GraphError("box side length must be nonnegative")
    size = (L + 1) ** d
    if size > budget:
        raise BudgetExceeded(f"box {{0..{L}}}^{d}", size, budget)


def make_box(d: int, L: int, budget: int = DEFAULT_VERTEX_BUDGET) -> Graph:
    """The box ``{0..L}^d`` with unit lattice edges, labeled in build order."""
    _check_box_budget(d, L, budget)
    return _lattice_graph(box_order(d, L))


def cartesian_product(H: Graph, H2: Graph) -> Graph:
    """Cartesian product; vertex ``(a, b)`` gets label ``a * H2.n + b``."""
    if H.n == 0 or H2.n == 0:
        raise GraphError("cartesian product needs nonempty factors")
    m = H2.n
    edges = set()
    for a in range(H.n):
        for u, v in H2.edges:
            edges.add((a * m + u, a * m + v))
    for b in range(m):
        for u, v in H.edges:
            edges.add((u * m + b, v * m + b))
    coords = None
    if H.coords is not None and H2.coords is not None:
        coords = tuple(H.coords[a] + H2.coords[b] for a in range(H.n) for b in range(m))
    return Graph(H.n * m, frozenset(edges), coords)


def induced_subgraph(G: Graph, k: int) -> Graph:
    """Subgraph induced by the vertices ``0..k-1``."""
    if not 1 <= k <= G.n:
        raise GraphError(f"prefix size {k} outside 1..{G.n}")
    edges = frozenset(e for e in G.edges if e[1] < k)
    coords = None if G.coords is None else G.coords[:k]
    return Graph(k, edges, coords)


@dataclass(frozen=True)
class BuildSequence:
    """Growth of ``B_{L-1}`` into ``B_L`` one vertex at a time.

    ``stages[i]`` is the lattice point added to produce ``snapshots[i]`` together
    with the direction index (1-based) of the lengthening it belongs to.
    """

    d: int
    L: int
    base: Graph
    stages: list[tuple[tuple[int, ...], int]]
    snapshots: list[Graph]

    @property
    def stage_ends(self) -> dict[int, int]:
        """Map direction ``k`` to the snapshot index at which ``H_k`` is complete."""
        ends: dict[int, int] = {}
        for i, (_, k) in enumerate(self.stages):
            ends[k] = i
        return ends

    def h_graph(self, k: int) -> Graph:
        """``H_k``; ``H_0`` is the base box."""
        if k == 0:
            return self.base
        return self.snapshots[self.stage_ends[k]]


def intermediate_sequence(d: int, L: int, budget: int = DEFAULT_VERTEX_BUDGET) -> BuildSequence:
    if L < 1:
        raise GraphError("intermediate sequence needs L >= 1")
    box = make_box(d, L, budget)
    base_size = L**d
    stages = [(p, k) for k in range(1, d + 1) for p in _stage_points(d, L, k)]
    snapshots = [induced_subgraph(box, base_size + i + 1) for i in range(len(stages))]
    return BuildSequence(d, L, induced_subgraph(box, base_size), stages, snapshots)


def h_size(d: int, L: int, k: int) -> int:
    """``|V(H_k)| = (L+1)^k L^(d-k)``."""
    return (L + 1) ** k * L ** (d - k)


def boundary_graph(d: int, L: int, k: int, budget: int = DEFAULT_VERTEX_BUDGET) -> Graph:
    """``G'(L, k)``: vertices of ``H_k``, edges of ``H_k`` touching ``V(H_{k-1})``."""
    if not 1 <= k <= d:
        raise GraphError(f"direction {k} outside 1..{d}")
    if L < 1:
        raise GraphError("boundary graph needs L >= 1")
    box = make_box(d, L, budget)
    hk = induced_subgraph(box, h_size(d, L, k))
    inner = h_size(d, L, k - 1)
    edges = frozenset(e for e in hk.edges if e[0] < inner)
    return Graph(hk.n, edges, hk.coords)


def add_edge(G: Graph, u: int, v: int) -> Graph:
    """Add edge ``{u, v}``; coords are dropped when it is not a lattice step."""
    e = _norm(u, v)
    if u == v or not (0 <= u < G.n and 0 <= v < G.n):
        raise GraphError(f"cannot add edge {(u, v)}")
    if e in G.edges:
        raise GraphError(f"edge {e} already present")
    coords = G.coords
    if coords is not None and sum(abs(a - b) for a, b in zip(coords[u], coords[v])) != 1:
        coords = None
    return Graph(G.n, G.edges | {e}, coords)


def remove_pendant_edge(G: Graph, u: int, v: int) -> Graph:
    """Delete a pendant edge together with its degree-1 endpoint.

    Remaining vertices keep their relative order.  When both endpoints have
    degree 1 the larger label is deleted.
    """
    e = _norm(u, v)
    if e not in G.edges:
        raise GraphError(f"edge {e} not present")
    leaf = next((w for w in (e[1], e[0]) if G.degree(w) == 1), None)
    if leaf is None:
        raise GraphError(f"edge {e} is not pendant")
    keep = [w for w in range(G.n) if w != leaf]
    new = {old: i for i, old in enumerate(keep)}
    edges = frozenset(_norm(new[a], new[b]) for a, b in G.edges if e != (a, b))
    coords = None if G.coords is None else tuple(G.coords[w] for w in keep)
    H = Graph(G.n - 1, edges, coords)
    if not H.is_connected():
        raise DisconnectedError("pendant removal left a disconnected graph")
    return H


# ---------------------------------------------------------------------------
# text formats


def _g6_pairs(n: int) -> list[Edge]:
    return [(i, j) for j in range(1, n) for i in range(j)]


def emit_graph6(G: Graph) -> str:
    if G.n > MAX_GRAPH6_N:
        raise GraphError(f"graph6 short form supports n <= {MAX_GRAPH6_N}")
    bits = [1 if p in G.edges else 0 for p in _g6_pairs(G.n)]
    bits += [0] * (-len(bits) % 6)
    out = [chr(G.n + 63)]
    for i in range(0, len(bits), 6):
        val = 0
        for b in bits[i : i + 6]:
            val = (val << 1) | b
        out.append(chr(val + 63))
    return "".join(out)


def parse_graph6(text: str) -> Graph:
    s = text.strip()
    if s.startswith(">>graph6<<"):
        s = s[len(">>graph6<<") :]
    if not s:
        raise GraphError("empty graph6 string")
    if any(not 63 <= ord(c) <= 126 for c in s):
        raise GraphError(f"graph6 string {s!r} contains characters outside '?'..'~'")
    n = ord(s[0]) - 63
    if n > MAX_GRAPH6_N:
        raise GraphError("graph6 long form (n >= 63) is not supported")
    pairs = _g6_pairs(n)
    nchars = (len(pairs) + 5) // 6
    if len(s) != 1 + nchars:
        raise GraphError(f"graph6 string {s!r} has wrong length for n={n}")
    bits = []
    for c in s[1:]:
        val = ord(c) - 63
        bits.extend((val >> (5 - t)) & 1 for t in range(6))
    if any(bits[len(pairs) :]):
        raise GraphError(f"graph6 string {s!r} has nonzero padding bits")
    return Graph(n, frozenset(p for p, b in zip(pairs, bits) if b))


def parse_edge_list(text: str) -> Graph:
    """Parse ``n <count>`` followed by one ``u v`` pair per line."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise GraphError("empty edge list")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "n":
        raise GraphError("edge list must start with a line 'n <count>'")
    try:
        n = int(head[1])
        edges = []
        for ln in lines[1:]:
            tok = ln.split()
            if len(tok) != 2:
                raise GraphError(f"edge line {ln!r}: expected 'u v' (weighted edges are not supported)")
            edges.append((int(tok[0]), int(tok[1])))
    except ValueError as exc:
        raise GraphError(f"malformed edge list: {exc}") from None
    return Graph.from_edges(n, edges)


def emit_edge_list(G: Graph) -> str:
    return "\n".join([f"n {G.n}"] + [f"{u} {v}" for u, v in G.edge_list]) + "\n"


def read_graph_file(path: str | Path) -> Graph:
    text = Path(path).read_text()
    if text.lstrip().startswith("n "):
        return parse_edge_list(text)
    return parse_graph6(text)


# ---------------------------------------------------------------------------
# small-graph canonical forms and enumeration
#
# The canonical code of a graph is the smallest integer whose bits, read in
# graph6 pair order with the first pair most significant, encode an adjacency
# matrix of some relabeling.  Brute force over all n! relabelings: n <= 7 only.


@functools.lru_cache(maxsize=None)
def _relabel_weights(n: int) -> np.ndarray:
    pairs = _g6_pairs(n)
    npairs = len(pairs)
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64).reshape(-1, n)
    weights = np.empty((len(perms), npairs))
    for t, (i, j) in enumerate(pairs):
        a, b = perms[:, i], perms[:, j]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        weights[:, t] = 2.0 ** (npairs - 1 - (hi * (hi - 1) // 2 + lo))
    return weights


def _min_codes(bits: np.ndarray, n: int) -> np.ndarray:
    # float64 products are exact: codes stay below 2**21
    weights = _relabel_weights(n)
    out = np.empty(len(bits), dtype=np.int64)
    chunk = max(1, 2_000_000 // max(1, weights.shape[0]))
    for s in range(0, len(bits), chunk):
        out[s : s + chunk] = (bits[s : s + chunk] @ weights.T).min(axis=1).astype(np.int64)
    return out


def _check_enum_n(n: int) -> None:
    if not 1 <= n <= MAX_ENUM_N:
        raise GraphError(f"brute-force canonical forms need 1 <= n <= {MAX_ENUM_N}")


def canonical_code(G: Graph) -> int:
    _check_enum_n(G.n)
    bits = np.array([[1.0 if p in G.edges else 0.0 for p in _g6_pairs(G.n)]])
    return int(_min_codes(bits, G.n)[0])


def graph_from_code(n: int, code: int) -> Graph:
    pairs = _g6_pairs(n)
    npairs = len(pairs)
    return Graph(n, frozenset(p for t, p in enumerate(pairs) if (code >> (npairs - 1 - t)) & 1))


def is_isomorphic(G: Graph, H: Graph) -> bool:
    if G.n != H.n or G.num_edges != H.num_edges:
        return False
    return canonical_code(G) == canonical_code(H)


@functools.lru_cache(maxsize=None)
def _connected_codes(n: int) -> tuple[int, ...]:
    if n == 1:
        return (0,)
    # every connected graph has a non-cut vertex: extend each connected graph on
    # n-1 vertices by a vertex joined to a nonempty subset
    prev = _connected_codes(n - 1)
    old_pairs = len(_g6_pairs(n - 1))
    prev_bits = np.array(
        [[(c >> (old_pairs - 1 - t)) & 1 for t in range(old_pairs)] for c in prev], dtype=float
    ).reshape(len(prev), old_pairs)
    subsets = np.array(list(itertools.product((0.0, 1.0), repeat=n - 1))[1:])
    cand = np.concatenate(
        [np.repeat(prev_bits, len(subsets), axis=0), np.tile(subsets, (len(prev), 1))], axis=1
    )
    return tuple(sorted(set(_min_codes(cand, n).tolist())))


def enumerate_connected(n: int) -> Iterator[Graph]:
    """One canonical representative per isomorphism class of connected graphs on n vertices."""
    _check_enum_n(n)
    for code in _connected_codes(n):
        yield graph_from_code(n, code)


def connected_prefix_order(G: Graph, root: int = 0) -> list[int]:
    """Breadth-first vertex order; relabeling by it makes every prefix connected."""
    if not G.is_connected():
        raise DisconnectedError("graph is disconnected")
    order = [root]
    seen = {root}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for w in G.adjacency[u]:
            if w not in seen:
                seen.add(w)
                order.append(w)
                queue.append(w)
    return order


def first_disconnected_prefix(G: Graph) -> int | None:
    """Smallest k >= 2 whose induced prefix is disconnected, or None."""
    for k in range(2, G.n + 1):
        if not induced_subgraph(G, k).is_connected():
            return k
    return None
