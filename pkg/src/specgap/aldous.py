"""Interchange vs random-walk gaps: the prefix lower bound and its audits.

For a labeled graph ``G`` with connected prefixes ``G_k`` (vertices ``0..k-1``),
``alpha_k = min_{2 <= j <= k} gap_rw(G_j)`` bounds the interchange gap from
below: ``gap_ip(G) >= alpha_n``.  ``case2_audit`` replays the two-case
argument on every eigenvector of the interchange generator.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DisconnectedPrefixError, GraphError
from .graphcore import (
    Graph,
    connected_prefix_order,
    emit_graph6,
    enumerate_connected,
    first_disconnected_prefix,
    induced_subgraph,
)
from .lumping import position_map, project_eigenvector
from .operators import (
    DEFAULT_STATE_BUDGET,
    class_forms,
    interchange_generator,
    rw_generator,
    suppressed_generator,
)
from .report import AuditReport, compare
from .spectral import DEFAULT_SEED, DEFAULT_TOL, DENSE_THRESHOLD, dense_eigh, spectral_gap

ZERO_PROJECTION = 1e-9
CASE2_MAX_N = 6


@dataclass
class SolverOptions:
    dense_threshold: int = DENSE_THRESHOLD
    state_budget: int = DEFAULT_STATE_BUDGET
    tol: float = DEFAULT_TOL
    seed: int = DEFAULT_SEED

    def gap(self, gen):
        return spectral_gap(gen, dense_threshold=self.dense_threshold, tol=self.tol, seed=self.seed)


def rw_gap(G: Graph, opts: SolverOptions | None = None) -> float:
    return (opts or SolverOptions()).gap(rw_generator(G)).gap


def ip_gap(G: Graph, opts: SolverOptions | None = None) -> float:
    opts = opts or SolverOptions()
    return opts.gap(interchange_generator(G, opts.state_budget)).gap


@dataclass
class LabelingAudit:
    graph: Graph
    prefix_gaps: list[float]
    alpha: list[float]
    lambda_rw: float
    lambda_ip: float | None
    tol: float = 1e-8

    @property
    def alpha_n(self) -> float:
        return self.alpha[-1]

    @property
    def bound_holds(self) -> bool | None:
        if self.lambda_ip is None:
            return None
        return self.lambda_ip >= self.alpha_n - self.tol

    @property
    def prefix_gaps_nonincreasing(self) -> bool:
        g = self.prefix_gaps
        return all(b <= a + self.tol for a, b in zip(g, g[1:]))


def alpha_sequence(
    G: Graph, opts: SolverOptions | None = None, *, with_ip: bool = True, tol: float = 1e-8
) -> LabelingAudit:
    """Prefix gaps ``gap_rw(G_k)`` for ``k = 2..n``, their running minimum, and ``gap_ip(G)``.

    The interchange gap is computed only when ``n!`` fits the state budget.
    """
    opts = opts or SolverOptions()
    if G.n < 2:
        raise GraphError("alpha sequence needs at least two vertices")
    bad = first_disconnected_prefix(G)
    if bad is not None:
        raise DisconnectedPrefixError(bad)
    gaps = [rw_gap(induced_subgraph(G, k), opts) for k in range(2, G.n + 1)]
    alpha = np.minimum.accumulate(gaps).tolist()
    lam_ip = None
    if with_ip and math.factorial(G.n) <= opts.state_budget:
        lam_ip = ip_gap(G, opts)
    return LabelingAudit(G, gaps, alpha, gaps[-1], lam_ip, tol)


@dataclass
class ConjectureRow:
    graph6: str
    n: int
    edges: int
    lambda_rw: float
    lambda_ip: float
    rel_diff: float
    alpha_n: float
    passed: bool
    contraction_ok: bool


CSV_COLUMNS = ["graph6", "lambda_rw", "lambda_ip", "rel_diff", "alpha_n"]


def verify_conjecture(G: Graph, tol: float = 1e-8, opts: SolverOptions | None = None) -> ConjectureRow:
    """Compare the interchange and random-walk gaps of ``G``.

    ``alpha_n`` is computed on the breadth-first relabeling of ``G`` so that every
    prefix is connected.
    """
    opts = opts or SolverOptions()
    lam_rw = rw_gap(G, opts)
    lam_ip = ip_gap(G, opts)
    rel = abs(lam_ip - lam_rw) / lam_rw
    bfs = G.relabel(connected_prefix_order(G))
    alpha_n = alpha_sequence(bfs, opts, with_ip=False).alpha_n
    return ConjectureRow(
        emit_graph6(G), G.n, G.num_edges, lam_rw, lam_ip, rel, alpha_n, rel <= tol, lam_ip <= lam_rw + 1e-9
    )


def _verify_task(args):
    G, tol, opts = args
    return verify_conjecture(G, tol, opts)


@dataclass
class BatchSummary:
    rows: list[ConjectureRow]
    tol: float

    @property
    def failures(self) -> list[ConjectureRow]:
        return [r for r in self.rows if not r.passed]

    @property
    def worst_rel_diff(self) -> float:
        return max((r.rel_diff for r in self.rows), default=0.0)

    @property
    def counts(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for r in self.rows:
            out[r.n] = out.get(r.n, 0) + 1
        return out

    def to_dict(self) -> dict:
        return {
            "tol": self.tol,
            "graphs": len(self.rows),
            "counts": self.counts,
            "failures": len(self.failures),
            "worst_rel_diff": self.worst_rel_diff,
            "contraction_violations": sum(not r.contraction_ok for r in self.rows),
            "rows": [asdict(r) for r in self.rows],
        }


def batch_verify(n_max: int, tol: float = 1e-8, opts: SolverOptions | None = None, jobs: int = 1) -> BatchSummary:
    """Run verify_conjecture on every connected graph with 2..n_max vertices."""
    if not 2 <= n_max <= 7:
        raise GraphError("batch verification supports 2 <= n_max <= 7")
    opts = opts or SolverOptions()
    tasks = [(G, tol, opts) for n in range(2, n_max + 1) for G in enumerate_connected(n)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_verify_task, tasks, chunksize=4))
    else:
        rows = [_verify_task(t) for t in tasks]
    return BatchSummary(rows, tol)


def case2_audit(G: Graph, tol: float = 1e-9) -> AuditReport:
    """Classify every interchange eigenvector into Case 1 or Case 2 and verify it.

    Case 1: some position projection ``h_m(v) = sum_{perm[m] = v} f`` is nonzero;
    it must then be a random-walk eigenvector with the same eigenvalue.
    Case 2: all projections vanish; the inequality chain over the suppressed
    classes is evaluated line by line.  The constant eigenvector is recorded as
    trivial and left out of the gap audit.
    """
    if not 2 <= G.n <= CASE2_MAX_N:
        raise GraphError(f"case audit supports 2 <= n <= {CASE2_MAX_N}")
    n = G.n
    labeling = alpha_sequence(G, with_ip=False)
    alpha_n = labeling.alpha_n
    alpha_prev = labeling.alpha[-2] if n > 2 else None

    ip = interchange_generator(G)
    supp = suppressed_generator(G)
    rw = rw_generator(G)
    w, V = dense_eigh(ip)
    rw_spec = dense_eigh(rw)[0]
    maps = [position_map(n, m) for m in range(n)]
    nfact, mfact = math.factorial(n), math.factorial(n - 1)

    report = AuditReport(f"case2_audit[{emit_graph6(G)}]")
    pairs = []
    for i in range(len(w)):
        f, lam = V[:, i], float(w[i])
        fmax = float(np.abs(f).max())
        projections = [project_eigenvector(f, g) for g in maps]
        sizes = [float(np.abs(h).max()) for h in projections]
        entry = {"index": i, "eigenvalue": lam}
        if lam <= 1e-9 * max(1.0, abs(w[-1])):
            entry["case"] = "trivial"
            pairs.append(entry)
            continue
        tag = f"pair[{i}]"
        if max(sizes) > ZERO_PROJECTION * fmax:
            m = int(np.argmax(sizes))
            h = projections[m]
            entry.update(case=1, particle=m)
            res = float(np.linalg.norm(rw.apply(h) + lam * h))
            bound = tol * max(1.0, float(np.linalg.norm(h)))
            report.add(compare(f"{tag} case1 ||Q'h + lam h||", res, "<=", bound, 0.0, note=f"h = projection on particle {m}"))
            report.add(compare(f"{tag} case1 lam in rw spectrum", float(np.abs(rw_spec - lam).min()), "<=", tol, 0.0))
            report.add(compare(f"{tag} case1 lam >= alpha_n", lam, ">=", alpha_n, tol))
        else:
            entry["case"] = 2
            classes = [class_forms(supp, f, k) for k in range(n)]
            for k, cf in enumerate(classes):
                report.add(compare(f"{tag} case2 class {k} sum", abs(cf.total), "<=", tol, 0.0))
                if alpha_prev is not None:
                    report.add(compare(f"{tag} case2 E_k >= alpha_(n-1) var_k [k={k}]", cf.dirichlet, ">=", alpha_prev * cf.variance, tol))
            line0 = ip.energy(f)  # n! E(f,f)
            line1 = supp.energy(f)  # (1/2) sum_k sum_{W_k} ...
            line1b = sum(mfact * cf.dirichlet for cf in classes)
            line2 = alpha_n * sum(mfact * cf.variance for cf in classes)
            var = float(((f - f.mean()) ** 2).mean())
            line3 = alpha_n * nfact * var
            entry.update(chain=[line0, line1, line1b, line2, line3])
            report.add(compare(f"{tag} case2 n!E >= half-sum over classes", line0, ">=", line1, tol))
            report.add(compare(f"{tag} case2 half-sum == sum_k (n-1)! E_k", line1, "==", line1b, tol))
            report.add(compare(f"{tag} case2 sum_k (n-1)! E_k >= alpha_n sum_k (n-1)! var_k", line1b, ">=", line2, tol))
            report.add(compare(f"{tag} case2 alpha_n sum_k (n-1)! var_k == alpha_n n! var", line2, "==", line3, tol))
            report.add(compare(f"{tag} case2 lam == E/var", lam, "==", line0 / nfact / var, tol))
            report.add(compare(f"{tag} case2 lam >= alpha_n", lam, ">=", alpha_n, tol))
        pairs.append(entry)

    report.quantities.update(
        n=n,
        alpha_n=alpha_n,
        alpha_n_minus_1=alpha_prev,
        lambda_rw=labeling.lambda_rw,
        lambda_ip=float(w[1]),
        case1=sum(p["case"] == 1 for p in pairs),
        case2=sum(p["case"] == 2 for p in pairs),
        trivial=sum(p["case"] == "trivial" for p in pairs),
        eigenpairs=pairs,
    )
    return report


def random_connected_labeling(G: Graph, rng: np.random.Generator, max_tries: int = 10_000) -> Graph:
    """Uniformly random relabeling, resampled until every prefix is connected."""
    for _ in range(max_tries):
        H = G.relabel(rng.permutation(G.n).tolist())
        if first_disconnected_prefix(H) is None:
            return H
    raise GraphError("no connected-prefix labeling found")


def random_connected_graph(n: int, rng: np.random.Generator, p: float = 0.5) -> Graph:
    pairs = [(i, j) for j in range(n) for i in range(j)]
    while True:
        edges = [e for e in pairs if rng.random() < p]
        G = Graph.from_edges(n, edges)
        if G.is_connected():
            return G


def labeling_suite(count: int = 100, n_min: int = 3, n_max: int = 6, seed: int = DEFAULT_SEED) -> list[LabelingAudit]:
    """Seeded random (graph, labeling) pairs with connected prefixes, each audited."""
    rng = np.random.default_rng(seed)
    audits = []
    for _ in range(count):
        n = int(rng.integers(n_min, n_max + 1))
        G = random_connected_labeling(random_connected_graph(n, rng, float(rng.uniform(0.3, 0.9))), rng)
        audits.append(alpha_sequence(G))
    return audits


def leaf_last_trees(n_max: int = 6) -> list[Graph]:
    """Every tree on 2..n_max vertices, labeled breadth-first so each prefix is a subtree."""
    trees = []
    for n in range(2, n_max + 1):
        for T in enumerate_connected(n):
            if T.num_edges == n - 1:
                trees.append(T.relabel(connected_prefix_order(T)))
    return trees
