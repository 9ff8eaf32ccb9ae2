"""Lumping maps, quotient chains and eigenvector projection.

A lumping map assigns every state a block.  If rows of ``Q`` in the same block
put the same total rate into every block, the block process is Markov with
rates ``Q'(U, U') = sum_{y in U'} Q(u, y)`` for any ``u`` in ``U``, and block sums
of an eigenvector of ``Q`` are either zero or an eigenvector of ``Q'`` with the
same eigenvalue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import LumpabilityError
from .operators import Generator, MatrixGenerator, StateIndexer
from .report import AuditReport, Check, compare
from .spectral import dense_eigh

LUMP_TOL = 1e-10
SYMMETRY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class LumpingMap:
    """Partition of a state space into blocks ``0..num_blocks-1``.

    ``labels[x]`` is the block of state ``x``; ``target`` indexes the blocks
    (for the canonical maps it is the vertex or subset indexer of the projected
    process).
    """

    source: StateIndexer
    labels: np.ndarray
    target: StateIndexer
    name: str = ""

    def __post_init__(self) -> None:
        if self.labels.shape != (self.source.size,):
            raise ValueError("one block label per state is required")
        counts = np.bincount(self.labels, minlength=self.num_blocks)
        if len(counts) != self.num_blocks or (counts == 0).any():
            raise ValueError("block labels must cover 0..num_blocks-1 with no empty block")

    @property
    def num_blocks(self) -> int:
        return self.target.size

    @property
    def blocks(self) -> list[np.ndarray]:
        order = np.argsort(self.labels, kind="stable")
        bounds = np.cumsum(np.bincount(self.labels, minlength=self.num_blocks))[:-1]
        return np.split(order, bounds)

    @property
    def block_sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_blocks)

    def indicator(self) -> sp.csr_matrix:
        n = self.source.size
        return sp.csr_matrix((np.ones(n), (np.arange(n), self.labels)), shape=(n, self.num_blocks))


def identity_map(indexer: StateIndexer) -> LumpingMap:
    return LumpingMap(indexer, np.arange(indexer.size), StateIndexer("block", indexer.size), "identity")


def constant_map(indexer: StateIndexer) -> LumpingMap:
    return LumpingMap(indexer, np.zeros(indexer.size, dtype=np.int64), StateIndexer("block", 1), "constant")


def _perm_indexer(n_vertices: int) -> StateIndexer:
    return StateIndexer("permutation", n_vertices)


def position_map(n_vertices: int, m: int) -> LumpingMap:
    """Block = vertex occupied by particle ``m`` (particles labeled ``0..n-1``)."""
    if not 0 <= m < n_vertices:
        raise ValueError(f"particle {m} outside 0..{n_vertices - 1}")
    src = _perm_indexer(n_vertices)
    labels = src.states()[:, m].astype(np.int64)
    return LumpingMap(src, labels, StateIndexer("vertex", n_vertices), f"position:{m}")


def occupancy_map(n_vertices: int, m: int) -> LumpingMap:
    """Block = set of vertices holding the red particles ``0..m-1``."""
    if not 1 <= m <= n_vertices - 1:
        raise ValueError(f"red count {m} outside 1..{n_vertices - 1}")
    src = _perm_indexer(n_vertices)
    target = StateIndexer("subset", n_vertices, m)
    perms = src.states()
    occ = np.zeros((src.size, n_vertices), dtype=bool)
    occ[np.arange(src.size)[:, None], perms[:, :m]] = True
    return LumpingMap(src, target.rank_occupancy(occ), target, f"occupancy:{m}")


def project_eigenvector(f: np.ndarray, g: LumpingMap) -> np.ndarray:
    """Block sums ``h(U) = sum_{x in U} f(x)``; ``f`` may hold vectors as columns."""
    f = np.asarray(f, dtype=float)
    if f.shape[0] != g.source.size:
        raise ValueError("vector length does not match the lumping map's state space")
    if f.ndim == 1:
        return np.bincount(g.labels, weights=f, minlength=g.num_blocks)
    return np.asarray(g.indicator().T @ f)


@dataclass(eq=False)
class QuotientChain:
    map: LumpingMap
    qprime: MatrixGenerator
    representatives: np.ndarray


def block_rates(gen: Generator, g: LumpingMap) -> np.ndarray:
    """``R[x, U] = sum_{y in U} Q(x, y)`` as a dense array (states x blocks)."""
    return np.asarray((gen.to_sparse() @ g.indicator()).todense())


def check_lumpable(gen: Generator, g: LumpingMap, tol: float = LUMP_TOL) -> None:
    """Raise LumpabilityError naming a witness ``(x, y, U)`` if ``g`` is not lumpable."""
    if gen.indexer != g.source:
        raise LumpabilityError("lumping map and generator index different state spaces")
    rates = block_rates(gen, g)
    for b, members in enumerate(g.blocks):
        rows = rates[members]
        dev = np.abs(rows - rows[0])
        if dev.max(initial=0.0) > tol:
            i, u = np.unravel_index(np.argmax(dev), dev.shape)
            x, y = int(members[0]), int(members[i])
            raise LumpabilityError(
                f"states {x} and {y} share block {b} but put rates "
                f"{rows[0, u]:g} vs {rows[i, u]:g} into block {u}",
                witness=(x, y, int(u)),
            )


def build_quotient(gen: Generator, g: LumpingMap, tol: float = LUMP_TOL) -> QuotientChain:
    """Quotient rate operator from the lowest-ranked state of each block.

    Lumpability is checked first.  The quotient must come out symmetric (equal
    block sizes), since every spectral routine here assumes symmetry.
    """
    check_lumpable(gen, g, tol)
    reps = np.array([members.min() for members in g.blocks])
    qp = block_rates(gen, g)[reps]
    if not np.allclose(qp, qp.T, rtol=0.0, atol=SYMMETRY_TOL):
        sizes = g.block_sizes
        raise LumpabilityError(
            f"quotient under {g.name or 'map'} is not symmetric "
            f"(block sizes range {sizes.min()}..{sizes.max()})"
        )
    qp = 0.5 * (qp + qp.T)
    desc = {"process": "quotient", "of": gen.descriptor.get("process"), "map": g.name}
    if "graph" in gen.descriptor:
        desc["graph"] = gen.descriptor["graph"]
    return QuotientChain(g, MatrixGenerator(g.target, sp.csr_matrix(qp), desc), reps)


def expected_block_size(g: LumpingMap) -> int | None:
    """Common block size of the canonical maps, or None for other maps."""
    n = g.source.n
    if g.name.startswith("position:"):
        return math.factorial(n - 1)
    if g.name.startswith("occupancy:"):
        m = g.target.m
        return math.factorial(m) * math.factorial(n - m)
    return None


def is_submultiset(sub: np.ndarray, full: np.ndarray, tol: float) -> bool:
    """Whether every value of ``sub`` can be matched to a distinct value of ``full`` within ``tol``."""
    used = np.zeros(len(full), dtype=bool)
    for q in np.sort(sub):
        hits = np.flatnonzero(~used & (np.abs(full - q) <= tol))
        if not len(hits):
            return False
        used[hits[0]] = True
    return True


def projection_audit(gen: Generator, g: LumpingMap, tol: float = 1e-9, spectrum_tol: float = 1e-8) -> AuditReport:
    """Project every eigenvector of ``gen`` through ``g`` and check it against the quotient.

    Each block-sum vector ``h`` must satisfy ``||Q'h + lam h|| <= tol * max(1, ||h||)``;
    the quotient spectrum must sit inside the source spectrum.
    """
    quotient = build_quotient(gen, g)
    w, V = dense_eigh(gen)
    H = project_eigenvector(V, g)
    QH = quotient.qprime.to_dense() @ H
    residuals = np.linalg.norm(QH + H * w, axis=0)
    hnorms = np.linalg.norm(H, axis=0)
    bounds = tol * np.maximum(1.0, hnorms)
    qspec = dense_eigh(quotient.qprime)[0]
    zero = hnorms <= tol

    rep = AuditReport(f"projection[{gen.descriptor.get('process')}, {g.name}]")
    worst = int(np.argmax(residuals / bounds))
    rep.add(compare("max_i ||Q'h_i + lam_i h_i|| / (tol max(1, ||h_i||))", float(residuals[worst] / bounds[worst]), "<=", 1.0, 0.0))
    rep.add(Check("quotient spectrum within source spectrum", None, "subset", None, is_submultiset(qspec, w, spectrum_tol)))
    rep.quantities.update(
        states=gen.size,
        blocks=g.num_blocks,
        eigenpairs=len(w),
        zero_projections=int(zero.sum()),
        eigenvector_projections=int((~zero).sum()),
        max_residual=float(residuals.max()),
        quotient_spectrum=qspec.tolist(),
    )
    return rep
