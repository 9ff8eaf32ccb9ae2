"""Random-walk gaps along the vertex-by-vertex construction of boxes.

``gamma(L)`` is the path gap, ``beta(d, L)`` the smallest gap over the graphs met
while growing ``B_{L-1}`` into ``B_L``, and ``corollary_audit`` evaluates the
boundary-layer estimates on the gap eigenvector of ``G'(L, k)``.

Ratios in the boundary-layer audit use the edge-sum energy
``sum_{edges} (f(x) - f(y))^2``, i.e. the Dirichlet form without the ``1/|V'|``
factor, so that they are directly comparable with raw sums of ``f(x)^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GraphError
from .graphcore import (
    Graph,
    boundary_graph,
    h_size,
    induced_subgraph,
    intermediate_sequence,
    make_box,
    make_path,
)
from .lumping import LumpingMap, build_quotient, project_eigenvector
from .operators import StateIndexer, interchange_generator, rw_generator
from .report import AuditReport, compare, inapplicable
from .spectral import DENSE_THRESHOLD, dense_eigh, spectral_gap

GAMMA_EIGENSOLVE_MAX_L = 60
IP_MAX_VERTICES = 9
ZERO_SUM = 1e-9
DEGENERACY_TOL = 1e-8
NEGLIGIBLE_MASS = 1e-20

REPORT_COLUMNS = ["d", "L", "gamma", "beta", "beta_over_gamma", "gamma_L2_over_pi2", "lambda_ip", "ip_over_rw"]


def gamma_closed_form(L: int) -> float:
    return 4.0 * math.sin(math.pi / (2 * (L + 1))) ** 2


def gamma(L: int) -> float:
    """Random-walk gap of the path on ``L + 1`` vertices.

    Eigensolved for ``L <= 60`` (and checked against the closed form), closed
    form beyond.
    """
    if L < 1:
        raise GraphError("gamma needs L >= 1")
    if L > GAMMA_EIGENSOLVE_MAX_L:
        return gamma_closed_form(L)
    gap = spectral_gap(rw_generator(make_path(L)), method="dense").gap
    if abs(gap - gamma_closed_form(L)) > 1e-10:
        raise ArithmeticError(f"path gap {gap!r} disagrees with the closed form at L={L}")
    return gap


@dataclass
class BoxReport:
    d: int
    L: int
    gamma: float
    beta: float
    snapshot_gaps: list[float]
    boundary_gaps: dict[int, float] = field(default_factory=dict)
    stage_of_snapshot: list[int] = field(default_factory=list)

    @property
    def ratio(self) -> float:
        return self.beta / self.gamma

    @property
    def normalized(self) -> float:
        return self.gamma * self.L**2 / math.pi**2

    def boundary_comparison(self, tol: float = 1e-9) -> list[bool]:
        """For each snapshot, whether its gap is at least that of ``G'`` for its stage."""
        return [
            g >= self.boundary_gaps[k] - tol for g, k in zip(self.snapshot_gaps, self.stage_of_snapshot)
        ]

    def row(self) -> dict:
        return {
            "d": self.d,
            "L": self.L,
            "gamma": self.gamma,
            "beta": self.beta,
            "beta_over_gamma": self.ratio,
            "gamma_L2_over_pi2": self.normalized,
        }


def _rw_gap(G: Graph, dense_threshold: int = DENSE_THRESHOLD) -> float:
    return spectral_gap(rw_generator(G), dense_threshold=dense_threshold).gap


def beta(d: int, L: int, *, dense_threshold: int = DENSE_THRESHOLD, budget: int | None = None) -> BoxReport:
    """Gaps of every intermediate graph between ``B_{L-1}`` and ``B_L``."""
    seq = intermediate_sequence(d, L) if budget is None else intermediate_sequence(d, L, budget)
    gaps = [_rw_gap(G, dense_threshold) for G in seq.snapshots]
    stages = [k for _, k in seq.stages]
    bgaps = {k: _rw_gap(boundary_graph(d, L, k), dense_threshold) for k in range(1, d + 1)}
    return BoxReport(d, L, gamma(L), min(gaps), gaps, bgaps, stages)


@dataclass
class CorollaryAudit:
    d: int
    L: int
    k: int
    M: int
    epsilon: float | None
    s_size: int
    boundary_size: int
    eigenvalue: float
    gamma: float
    reports: list[AuditReport]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "L": self.L,
            "k": self.k,
            "M": self.M,
            "epsilon": self.epsilon,
            "s_size": self.s_size,
            "boundary_size": self.boundary_size,
            "eigenvalue": self.eigenvalue,
            "gamma": self.gamma,
            "passed": self.passed,
            "reports": [r.to_dict() for r in self.reports],
        }


def epsilon_from_M(M: int) -> float | None:
    """Invert ``(1 - 4/M)^-1 = (1 - eps)^-1/2``; undefined for ``M <= 4``."""
    if M <= 4:
        return None
    return 1.0 - (1.0 - 4.0 / M) ** 2


def _gap_eigenspace(G: Graph, dense_threshold: int) -> tuple[float, list[np.ndarray]]:
    gen = rw_generator(G)
    if gen.size <= dense_threshold:
        w, V = dense_eigh(gen, dense_threshold)
        lam = float(w[1])
        idx = [i for i in range(1, len(w)) if abs(w[i] - lam) <= DEGENERACY_TOL * max(1.0, lam)]
        return lam, [V[:, i] for i in idx]
    res = spectral_gap(gen, dense_threshold=dense_threshold)
    return res.gap, [res.eigenvector]


def corollary_audit(d: int, L: int, k: int, M: int, *, tol: float = 1e-9, dense_threshold: int = DENSE_THRESHOLD) -> CorollaryAudit:
    """Evaluate the boundary-layer estimates for the gap eigenvector(s) of ``G'(L, k)``.

    Hypotheses that do not hold (``M > L``, nonzero sum over ``S``,
    ``M <= 4`` for the divided bound, ``L`` not yet large enough for the final
    ``(1 - eps)`` bound) make the affected checks inapplicable, never failed.
    """
    if M < 1:
        raise GraphError("M must be a positive integer")
    Gp = boundary_graph(d, L, k)
    inner = h_size(d, L, k - 1)
    coords = np.array(Gp.coords)
    axis = k - 1
    where = {tuple(c): i for i, c in enumerate(Gp.coords)}
    S = np.arange(Gp.n) < inner
    boundary = np.flatnonzero(~S)
    gam = gamma(L)
    lam_hprev = _rw_gap(induced_subgraph(make_box(d, L), inner), dense_threshold) if inner > 1 else None
    eps = epsilon_from_M(M)

    rw = rw_generator(Gp)
    layer = LumpingMap(rw.indexer, coords[:, axis].astype(np.int64), StateIndexer("vertex", L + 1), f"coordinate:{k}")
    quotient = build_quotient(rw, layer)
    path_q = rw_generator(make_path(L)).to_dense()
    inner_edges = [(u, v) for u, v in Gp.edge_list if v < inner]

    lam, vectors = _gap_eigenspace(Gp, dense_threshold)
    reports = []
    for b, f in enumerate(vectors):
        f = f / np.linalg.norm(f)
        rep = AuditReport(f"corollary_audit[d={d},L={L},k={k},M={M}] vector {b}")
        total = float((f**2).sum())
        energy = rw.energy(f)
        energy_s = float(sum((f[u] - f[v]) ** 2 for u, v in inner_edges))
        sum_s = float(f[S].sum())
        h = project_eigenvector(f, layer)

        rep.add(compare("lambda == energy / sum f^2", lam, "==", energy / total, tol))
        rep.add(compare("coordinate quotient == path generator", float(np.abs(quotient.qprime.to_dense() - path_q).max()), "<=", 1e-12, 0.0))
        rep.add(compare("||Q'h + lambda h||", float(np.linalg.norm(quotient.qprime.apply(h) + lam * h)), "<=", tol * max(1.0, float(np.linalg.norm(h))), 0.0))
        if lam < gam * (1 - tol):
            rep.add(compare("lambda < gamma_L => profile h == 0", float(np.abs(h).max()), "<=", ZERO_SUM, 0.0))
            rep.add(compare("lambda < gamma_L => sum_S f == 0", abs(sum_s), "<=", ZERO_SUM, 0.0))
        else:
            rep.add(inapplicable("lambda < gamma_L => profile h == 0", f"lambda={lam:.6g} >= gamma_L={gam:.6g}"))

        if inner > 1:
            rep.add(compare("gap(H_(k-1)) >= gamma_L", lam_hprev, ">=", gam, tol))
        else:
            rep.add(inapplicable("gap(H_(k-1)) >= gamma_L", "H_(k-1) is a single vertex"))
        interior_ok = inner > 1 and abs(sum_s) <= ZERO_SUM
        if interior_ok:
            rep.add(compare("interior: E_S / sum_S f^2 >= gap(H_(k-1))", energy_s / float((f[S] ** 2).sum()), ">=", lam_hprev, tol))
        else:
            why = "H_(k-1) is a single vertex" if inner == 1 else f"sum_S f = {sum_s:.3e} is not zero"
            rep.add(inapplicable("interior: E_S / sum_S f^2 >= gap(H_(k-1))", why))

        good, bad, display_misses, witness_misses = [], [], 0, 0
        bad_neighbour_mass = 0.0
        for x in boundary:
            cx = coords[x]
            steps = []
            for i in range(1, M + 1):
                cy = cx.copy()
                cy[axis] -= i
                if cy[axis] < 0:
                    break
                steps.append(where[tuple(cy)])
            fx = abs(f[x])
            if any(abs(f[y]) <= fx / 2 for y in steps):
                good.append(int(x))
                # walk down from x: some unit step changes f by at least |f(x)|/2M
                chain = [int(x)] + steps
                best = max(abs(f[chain[j]] - f[chain[j + 1]]) for j in range(len(chain) - 1))
                if best < fx / (2 * M) * (1 - tol):
                    witness_misses += 1
            else:
                bad.append(int(x))
                if len(steps) == M:
                    mass = float((f[steps] ** 2).sum())
                    bad_neighbour_mass += mass
                    if f[x] ** 2 > (4.0 / M) * mass * (1 + tol) + 1e-300:
                        display_misses += 1
        sum_bad = float((f[bad] ** 2).sum())
        sum_good = float((f[good] ** 2).sum())
        rep.quantities.update(
            eigenvalue=lam,
            gamma=gam,
            sum_f2=total,
            energy=energy,
            energy_normalized=energy / Gp.n,
            energy_S=energy_s,
            sum_S=sum_s,
            sum_bad_f2=sum_bad,
            sum_good_f2=sum_good,
            good=good,
            bad=bad,
            profile=h.tolist(),
        )
        rep.add(compare("good/bad partition of boundary", len(good) + len(bad), "==", len(boundary), 0.0))

        if M <= L:
            rep.add(compare("bad vertices satisfy f(x)^2 <= (4/M) sum_j f(x - j e_k)^2", display_misses, "==", 0, 0.0,
                            note="discrepancies between the good/bad definition and the bad-vertex display"))
            rep.add(compare("bad mass: sum_B f^2 <= (4/M) sum f^2", sum_bad, "<=", 4.0 / M * total, tol))
        else:
            rep.add(inapplicable("bad mass: sum_B f^2 <= (4/M) sum f^2", f"M={M} > L={L}"))

        if sum_good > NEGLIGIBLE_MASS * total:
            rep.add(compare("good vertices have a step >= |f(x)|/2M", witness_misses, "==", 0, 0.0))
            rep.add(compare("good energy: energy / sum_G f^2 >= 1/4M^2", energy / sum_good, ">=", 1.0 / (4 * M * M), tol))
        else:
            rep.add(inapplicable("good energy: energy / sum_G f^2 >= 1/4M^2", "no good vertex carries mass"))

        if interior_ok and M <= L:
            combined = (1.0 / gam + 4 * M * M) * energy + (4.0 / M) * total
            rep.add(compare("sum f^2 <= (1/gamma + 4M^2) E + (4/M) sum f^2", total, "<=", combined, tol))
            if M > 4:
                bound = (1.0 / gam + 4 * M * M) * energy / (1.0 - 4.0 / M)
                rep.add(compare("divided: sum f^2 <= (1 - 4/M)^-1 (1/gamma + 4M^2) E", total, "<=", bound, tol))
                large_enough = 1.0 / gam + 4 * M * M <= (1 - eps) ** -0.5 / gam
                if large_enough:
                    rep.add(compare("lambda / gamma_L >= 1 - eps", lam / gam, ">=", 1 - eps, tol))
                else:
                    rep.add(inapplicable("lambda / gamma_L >= 1 - eps", f"1/gamma + 4M^2 > (1-eps)^-1/2 / gamma at L={L}"))
            else:
                rep.add(inapplicable("divided: sum f^2 <= (1 - 4/M)^-1 (1/gamma + 4M^2) E", f"1 - 4/M <= 0 for M={M}"))
        else:
            why = f"M={M} > L={L}" if M > L else "the interior bound is inapplicable"
            rep.add(inapplicable("divided: sum f^2 <= (1 - 4/M)^-1 (1/gamma + 4M^2) E", why))
        reports.append(rep)

    return CorollaryAudit(d, L, k, M, eps, int(S.sum()), len(boundary), lam, gam, reports)


def asymptotic_report(d: int, L_max: int, *, with_ip: bool = False, dense_threshold: int = DENSE_THRESHOLD, seed: int = 1) -> list[dict]:
    """One row per ``L = 1..L_max``; interchange columns only for boxes with at most 9 vertices."""
    rows = []
    for L in range(1, L_max + 1):
        rep = beta(d, L, dense_threshold=dense_threshold)
        row = rep.row()
        row["lambda_ip"] = row["ip_over_rw"] = None
        if with_ip and (L + 1) ** d <= IP_MAX_VERTICES:
            lam_ip = spectral_gap(interchange_generator(make_box(d, L)), dense_threshold=dense_threshold, seed=seed).gap
            row["lambda_ip"] = lam_ip
            row["ip_over_rw"] = lam_ip / rep.gamma
        rows.append(row)
    return rows
