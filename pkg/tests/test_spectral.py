import math

import numpy as np
import pytest
import scipy.sparse as sp

from specgap.errors import BudgetExceeded, ReducibleChainError
from specgap.graphcore import (
    Graph,
    add_edge,
    cartesian_product,
    enumerate_connected,
    make_box,
    make_complete,
    make_cycle,
    make_path,
    make_star,
)
from specgap.operators import MatrixGenerator, StateIndexer, exclusion_generator, interchange_generator, rayleigh_quotient, rw_generator
from specgap.spectral import check_eigenpair, dense_eigh, full_spectrum, spectral_gap


def gamma_closed(L):
    return 4 * math.sin(math.pi / (2 * (L + 1))) ** 2


def test_k2():
    assert spectral_gap(rw_generator(make_path(1))).gap == pytest.approx(2, abs=1e-12)


def test_interchange_path2():
    assert spectral_gap(interchange_generator(make_path(2))).gap == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("L", list(range(1, 61)))
def test_path_closed_form_dense(L):
    assert abs(spectral_gap(rw_generator(make_path(L))).gap - gamma_closed(L)) <= 1e-10


@pytest.mark.parametrize("L", [150, 400])
def test_path_closed_form_lanczos(L):
    res = spectral_gap(rw_generator(make_path(L)), method="lanczos")
    assert abs(res.gap - gamma_closed(L)) <= 1e-10
    assert res.residual <= 1e-9 and res.method == "lanczos" and res.seed == 1


@pytest.mark.slow
def test_path_2000_lanczos():
    res = spectral_gap(rw_generator(make_path(2000)))
    assert abs(res.gap - gamma_closed(2000)) <= 1e-10


def test_full_spectrum_examples():
    np.testing.assert_allclose(full_spectrum(rw_generator(make_path(2))), [0, 1, 3], atol=1e-12)
    np.testing.assert_allclose(full_spectrum(interchange_generator(make_complete(3))), [0, 3, 3, 3, 3, 6], atol=1e-12)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_single_zero_eigenvalue(n):
    for G in enumerate_connected(n):
        w = full_spectrum(interchange_generator(G))
        assert abs(w[0]) < 1e-9 and w[1] > 1e-9


def generators_up_to_2000():
    gens = []
    for n in range(2, 6):
        gens += [interchange_generator(G) for G in enumerate_connected(n)]
    gens += [interchange_generator(make_star(5)), interchange_generator(make_cycle(6))]
    gens += [exclusion_generator(make_box(2, 3), 4), rw_generator(make_box(3, 3)), rw_generator(make_path(1999))]
    return gens


def test_dense_lanczos_agreement():
    for gen in generators_up_to_2000():
        assert gen.size <= 2000
        dense = spectral_gap(gen, method="dense")
        lanczos = spectral_gap(gen, method="lanczos")
        assert lanczos.gap == pytest.approx(dense.gap, rel=1e-8)
        assert lanczos.residual <= 1e-9


@pytest.mark.parametrize("method", ["dense", "lanczos"])
def test_variational_consistency(method):
    gen = interchange_generator(make_cycle(5))
    res = spectral_gap(gen, method=method)
    assert rayleigh_quotient(gen, res.eigenvector).rayleigh == pytest.approx(res.gap, rel=1e-8)
    assert check_eigenpair(gen, res.eigenvector, res.gap) <= 1e-9


@pytest.mark.parametrize("G", [make_path(3), make_star(3), make_cycle(5), make_complete(4), make_box(2, 1)], ids=repr)
def test_rayleigh_lower_bound(G):
    gen = interchange_generator(G)
    gap = spectral_gap(gen).gap
    F = np.random.default_rng(7).normal(size=(1000, gen.size))
    for f in F:
        assert rayleigh_quotient(gen, f).rayleigh >= gap - 1e-8


def test_check_eigenpair():
    gen = interchange_generator(make_cycle(4))
    assert check_eigenpair(gen, np.ones(24), 0.0) == 0.0
    res = spectral_gap(gen)
    g = np.random.default_rng(3).normal(size=24)
    g /= np.linalg.norm(g)
    assert check_eigenpair(gen, res.eigenvector + 0.1 * g, res.gap) > 1e-3
    with pytest.raises(ValueError):
        check_eigenpair(gen, np.zeros(24), 1.0)


def test_determinism():
    gen = interchange_generator(make_complete(5))
    a = spectral_gap(gen, method="lanczos", seed=4)
    b = spectral_gap(gen, method="lanczos", seed=4)
    assert a.gap == b.gap and (a.eigenvector == b.eigenvector).all()


def test_reducible():
    two_blocks = sp.block_diag([rw_generator(make_path(1)).to_sparse()] * 2).tocsr()
    gen = MatrixGenerator(StateIndexer("block", 4), two_blocks)
    for method in ("dense", "lanczos"):
        with pytest.raises(ReducibleChainError):
            spectral_gap(gen, method=method)


def test_dense_budget():
    with pytest.raises(BudgetExceeded):
        dense_eigh(rw_generator(make_path(50)), dense_threshold=10)


def test_unknown_method():
    with pytest.raises(ValueError):
        spectral_gap(rw_generator(make_path(2)), method="qr")


def _random_connected(rng, n):
    while True:
        pairs = [(i, j) for j in range(n) for i in range(j)]
        G = Graph.from_edges(n, [e for e in pairs if rng.random() < 0.4])
        if G.is_connected():
            return G


def test_edge_addition_monotone():
    rng = np.random.default_rng(11)
    for _ in range(60):
        G = _random_connected(rng, int(rng.integers(3, 9)))
        missing = [(i, j) for j in range(G.n) for i in range(j) if (i, j) not in G.edges]
        if not missing:
            continue
        u, v = missing[rng.integers(len(missing))]
        assert spectral_gap(rw_generator(add_edge(G, u, v))).gap >= spectral_gap(rw_generator(G)).gap - 1e-9


def _small_family():
    return (
        [make_path(L) for L in range(1, 6)]
        + [make_cycle(n) for n in range(3, 7)]
        + [make_complete(n) for n in range(2, 7)]
    )


def test_product_min_rule():
    fam = _small_family()
    gaps = [spectral_gap(rw_generator(G)).gap for G in fam]
    for G, a in zip(fam, gaps):
        for H, b in zip(fam, gaps):
            got = spectral_gap(rw_generator(cartesian_product(G, H))).gap
            assert abs(got - min(a, b)) <= 1e-9
