"""Symmetric rate operators for the random walk, interchange, exclusion and
suppressed processes, plus the Dirichlet-form and variance functionals.

Permutation states store ``perm[p] = vertex of particle p`` and are ranked by
their Lehmer code; subset states (occupied vertex sets) are ranked by
combinadics.  Particles, vertices and classes are all labeled from 0.

Every process here moves by involutions: for each active edge ``e`` there is a
map ``sigma_e`` on states with ``Q(x, sigma_e(x)) = 1`` whenever
``sigma_e(x) != x``, so ``(Qf)(x) = sum_e f(sigma_e(x)) - f(x)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import BudgetExceeded, DisconnectedError, SpecgapError
from .graphcore import Graph

DEFAULT_STATE_BUDGET = 4_000_000
VARIANCE_FLOOR = 1e-28


@dataclass(frozen=True)
class StateIndexer:
    """Bijection between process states and ``0..size-1``.

    kind ``vertex`` and ``block`` states are plain integers; ``permutation``
    states are tuples ``perm`` with ``perm[particle] = vertex``; ``subset``
    states are sorted tuples of ``m`` occupied vertices.
    """

    kind: str
    n: int
    m: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("vertex", "block", "permutation", "subset"):
            raise ValueError(f"unknown indexer kind {self.kind!r}")
        if self.kind == "subset" and not 0 <= self.m <= self.n:
            raise ValueError("subset size out of range")

    @property
    def size(self) -> int:
        if self.kind == "permutation":
            return math.factorial(self.n)
        if self.kind == "subset":
            return math.comb(self.n, self.m)
        return self.n

    @cached_property
    def _binom(self) -> np.ndarray:
        table = np.zeros((self.n + 1, self.m + 2), dtype=np.int64)
        for c in range(self.n + 1):
            for i in range(self.m + 2):
                table[c, i] = math.comb(c, i)
        return table

    def rank(self, state) -> int:
        if self.kind in ("vertex", "block"):
            s = int(state)
            if not 0 <= s < self.n:
                raise ValueError(f"state {state} out of range")
            return s
        arr = np.asarray(state, dtype=np.int64).reshape(1, -1)
        if self.kind == "permutation" and sorted(arr[0].tolist()) != list(range(self.n)):
            raise ValueError(f"{state} is not a permutation of 0..{self.n - 1}")
        if self.kind == "subset":
            if arr.shape[1] != self.m or len(set(arr[0].tolist())) != self.m:
                raise ValueError(f"{state} is not an {self.m}-subset")
            if arr.size and not (0 <= arr.min() and arr.max() < self.n):
                raise ValueError(f"{state} has vertices outside 0..{self.n - 1}")
        return int(self.rank_many(arr)[0])

    def rank_many(self, states: np.ndarray) -> np.ndarray:
        states = np.asarray(states)
        if self.kind in ("vertex", "block"):
            return states.astype(np.int64).reshape(-1)
        if self.kind == "permutation":
            n = self.n
            r = np.zeros(len(states), dtype=np.int64)
            for i in range(n):
                smaller = (states[:, i + 1 :] < states[:, i : i + 1]).sum(axis=1)
                r = r * (n - i) + smaller
            return r
        occ = np.zeros((len(states), self.n), dtype=bool)
        if self.m:
            occ[np.arange(len(states))[:, None], states] = True
        return self.rank_occupancy(occ)

    def rank_occupancy(self, occ: np.ndarray) -> np.ndarray:
        """Combinadic rank of subsets given as boolean occupancy rows."""
        pos = np.cumsum(occ, axis=1)
        cols = np.arange(self.n)
        return np.where(occ, self._binom[cols, np.minimum(pos, self.m + 1)], 0).sum(axis=1)

    def unrank(self, r: int):
        if not 0 <= r < self.size:
            raise ValueError(f"rank {r} outside 0..{self.size - 1}")
        if self.kind in ("vertex", "block"):
            return int(r)
        if self.kind == "permutation":
            pool = list(range(self.n))
            out = []
            for i in range(self.n, 0, -1):
                q, r = divmod(r, math.factorial(i - 1))
                out.append(pool.pop(q))
            return tuple(out)
        out = []
        for i in range(self.m, 0, -1):
            c = i - 1
            while math.comb(c + 1, i) <= r:
                c += 1
            out.append(c)
            r -= math.comb(c, i)
        return tuple(sorted(out))

    def states(self) -> np.ndarray:
        """All states as an array, row ``r`` holding the state of rank ``r``."""
        if self.kind in ("vertex", "block"):
            return np.arange(self.n)
        dtype = np.int8 if self.n < 127 else np.int64
        if self.kind == "permutation":
            # itertools yields permutations in lexicographic = Lehmer order
            flat = np.fromiter(
                itertools.chain.from_iterable(itertools.permutations(range(self.n))),
                dtype=dtype,
                count=self.size * self.n,
            )
            return flat.reshape(self.size, self.n)
        combos = np.array(list(itertools.combinations(range(self.n), self.m)), dtype=dtype)
        combos = combos.reshape(self.size, self.m)
        out = np.empty_like(combos)
        out[self.rank_many(combos)] = combos
        return out


class Generator:
    """Symmetric transition-rate operator ``Q`` on an indexed state space."""

    indexer: StateIndexer
    descriptor: dict
    symmetric = True

    @property
    def size(self) -> int:
        return self.indexer.size

    def apply(self, f: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __matmul__(self, f: np.ndarray) -> np.ndarray:
        return self.apply(f)

    def to_sparse(self) -> sp.csr_matrix:
        raise NotImplementedError

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def energy(self, f: np.ndarray) -> float:
        """``(1/2) sum_{x,y} (f(x) - f(y))^2 Q(x, y)``."""
        raise NotImplementedError

    def norm_bound(self) -> float:
        """Gershgorin bound on the operator norm."""
        raise NotImplementedError


@dataclass(eq=False)
class MoveGenerator(Generator):
    """Generator given by a list of state involutions, one per active edge."""

    indexer: StateIndexer
    moves: list[np.ndarray]
    descriptor: dict = field(default_factory=dict)

    def apply(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape[0] != self.size:
            raise ValueError(f"vector has {f.shape[0]} entries, expected {self.size}")
        out = -len(self.moves) * f
        for sigma in self.moves:
            out += f[sigma]
        return out

    def diagonal(self) -> np.ndarray:
        idx = np.arange(self.size)
        return -sum((sigma != idx).astype(float) for sigma in self.moves) if self.moves else np.zeros(self.size)

    def to_sparse(self) -> sp.csr_matrix:
        idx = np.arange(self.size)
        rows, cols = [], []
        for sigma in self.moves:
            moved = sigma != idx
            rows.append(idx[moved])
            cols.append(sigma[moved])
        rows = np.concatenate(rows + [idx])
        cols = np.concatenate(cols + [idx])
        vals = np.ones(len(rows))
        vals[-self.size :] = self.diagonal()
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.size, self.size))

    def energy(self, f: np.ndarray, mask: np.ndarray | None = None) -> float:
        f = np.asarray(f, dtype=float)
        total = 0.0
        for sigma in self.moves:
            diff = (f[sigma] - f) ** 2
            total += float(diff[mask].sum() if mask is not None else diff.sum())
        return 0.5 * total

    def norm_bound(self) -> float:
        return 2.0 * float(-self.diagonal().min()) if self.size else 0.0


@dataclass(eq=False)
class MatrixGenerator(Generator):
    """Generator backed by an explicit sparse symmetric matrix."""

    indexer: StateIndexer
    matrix: sp.csr_matrix
    descriptor: dict = field(default_factory=dict)

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(f, dtype=float)

    def to_sparse(self) -> sp.csr_matrix:
        return self.matrix

    def energy(self, f: np.ndarray) -> float:
        f = np.asarray(f, dtype=float)
        coo = self.matrix.tocoo()
        off = coo.row != coo.col
        return 0.5 * float((coo.data[off] * (f[coo.row[off]] - f[coo.col[off]]) ** 2).sum())

    def norm_bound(self) -> float:
        return float(abs(self.matrix).sum(axis=1).max()) if self.size else 0.0


def _check_budget(what: str, size: int, budget: int) -> None:
    if size > budget:
        raise BudgetExceeded(what, size, budget)


def rw_generator(G: Graph) -> MoveGenerator:
    """Continuous-time random walk: rate 1 along every edge."""
    if not G.is_connected():
        raise DisconnectedError("random walk generator needs a connected graph")
    moves = []
    for u, v in G.edge_list:
        sigma = np.arange(G.n)
        sigma[u], sigma[v] = v, u
        moves.append(sigma)
    return MoveGenerator(StateIndexer("vertex", G.n), moves, {"process": "rw", "graph": G})


def _swap_moves(G: Graph, edges, budget: int) -> tuple[StateIndexer, list[np.ndarray]]:
    indexer = StateIndexer("permutation", G.n)
    _check_budget(f"interchange process on {G.n} vertices", indexer.size, budget)
    perms = indexer.states()
    moves = []
    for u, v in edges:
        swapped = perms.copy()
        swapped[perms == u] = v
        swapped[perms == v] = u
        moves.append(indexer.rank_many(swapped).astype(np.int32 if indexer.size < 2**31 else np.int64))
    return indexer, moves


def interchange_generator(G: Graph, budget: int = DEFAULT_STATE_BUDGET) -> MoveGenerator:
    """Interchange process: along each edge the two particles swap at rate 1."""
    indexer, moves = _swap_moves(G, G.edge_list, budget)
    return MoveGenerator(indexer, moves, {"process": "ip", "graph": G})


def suppressed_generator(G: Graph, budget: int = DEFAULT_STATE_BUDGET) -> MoveGenerator:
    """Interchange process with every move touching the last vertex disabled."""
    last = G.n - 1
    edges = [e for e in G.edge_list if last not in e]
    indexer, moves = _swap_moves(G, edges, budget)
    return MoveGenerator(indexer, moves, {"process": "suppressed", "graph": G})


def exclusion_generator(G: Graph, m: int, budget: int = DEFAULT_STATE_BUDGET) -> MoveGenerator:
    """Symmetric exclusion with ``m`` indistinguishable particles.

    Edges whose endpoints are both occupied or both empty are fixed points of
    their move and contribute nothing to the diagonal.
    """
    if not 1 <= m <= G.n - 1:
        raise ValueError(f"particle count {m} outside 1..{G.n - 1}")
    indexer = StateIndexer("subset", G.n, m)
    _check_budget(f"exclusion process with {m} particles on {G.n} vertices", indexer.size, budget)
    occ = np.zeros((indexer.size, G.n), dtype=bool)
    subsets = indexer.states()
    occ[np.arange(indexer.size)[:, None], subsets] = True
    moves = []
    for u, v in G.edge_list:
        swapped = occ.copy()
        swapped[:, u], swapped[:, v] = occ[:, v], occ[:, u]
        moves.append(indexer.rank_occupancy(swapped))
    return MoveGenerator(indexer, moves, {"process": "ex", "graph": G, "particles": m})


def suppressed_classes(gen: MoveGenerator) -> np.ndarray:
    """Class label of every permutation state: the particle sitting on the last vertex."""
    if gen.indexer.kind != "permutation":
        raise SpecgapError("suppressed classes are defined on permutation states")
    perms = gen.indexer.states()
    return np.argmax(perms == gen.indexer.n - 1, axis=1)


def restrict(gen: Generator, members: np.ndarray, descriptor: dict | None = None) -> MatrixGenerator:
    """Restriction of ``gen`` to a closed set of states, re-indexed in rank order."""
    members = np.flatnonzero(members) if members.dtype == bool else np.asarray(members)
    sub = gen.to_sparse()[members][:, members].tocsr()
    desc = dict(gen.descriptor, restricted=len(members)) if descriptor is None else descriptor
    return MatrixGenerator(StateIndexer("block", len(members)), sub, desc)


@dataclass(frozen=True)
class FormValues:
    """Dirichlet form, variance, mean and their quotient for one vector.

    ``total`` is the plain sum of the vector over the domain the forms were
    evaluated on.
    """

    dirichlet: float
    variance: float
    mean: float
    rayleigh: float | None
    total: float


def rayleigh_quotient(gen: Generator, f: np.ndarray) -> FormValues:
    f = np.asarray(f, dtype=float)
    if f.shape != (gen.size,):
        raise ValueError(f"vector must have shape ({gen.size},)")
    size = gen.size
    dirichlet = gen.energy(f) / size
    mean = float(f.mean())
    variance = float(((f - mean) ** 2).mean())
    scale = float(np.abs(f).max()) if size else 0.0
    is_const = variance <= VARIANCE_FLOOR * max(1.0, scale**2)
    return FormValues(dirichlet, variance, mean, None if is_const else dirichlet / variance, float(f.sum()))


def class_forms(gen: MoveGenerator, f: np.ndarray, k: int) -> FormValues:
    """Forms restricted to the class ``W_k`` of the suppressed process.

    Both forms are normalized by ``(n-1)!``; the variance is the raw second
    moment over the class, with no mean subtracted.
    """
    if gen.descriptor.get("process") != "suppressed":
        raise SpecgapError("class_forms needs a suppressed generator")
    n = gen.indexer.n
    if not 0 <= k < n:
        raise ValueError(f"class {k} outside 0..{n - 1}")
    f = np.asarray(f, dtype=float)
    members = suppressed_classes(gen) == k
    norm = math.factorial(n - 1)
    dirichlet = gen.energy(f, mask=members) / norm
    fk = f[members]
    second = float((fk**2).sum()) / norm
    total = float(fk.sum())
    rq = None if second <= VARIANCE_FLOOR else dirichlet / second
    return FormValues(dirichlet, second, total / norm, rq, total)
