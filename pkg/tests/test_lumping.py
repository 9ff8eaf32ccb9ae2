import math

import numpy as np
import pytest
import scipy.sparse as sp

from specgap.errors import LumpabilityError
from specgap.graphcore import enumerate_connected, make_complete, make_cycle, make_path
from specgap.lumping import (
    LumpingMap,
    build_quotient,
    check_lumpable,
    constant_map,
    expected_block_size,
    identity_map,
    is_submultiset,
    occupancy_map,
    position_map,
    project_eigenvector,
    projection_audit,
)
from specgap.operators import StateIndexer, exclusion_generator, interchange_generator, rw_generator
from specgap.spectral import check_eigenpair, dense_eigh, full_spectrum


def all_graphs(n_max=5):
    return [G for n in range(2, n_max + 1) for G in enumerate_connected(n)]


def test_identity_map():
    gen = interchange_generator(make_cycle(4))
    q = build_quotient(gen, identity_map(gen.indexer))
    np.testing.assert_array_equal(q.qprime.to_dense(), gen.to_dense())


def test_constant_map():
    gen = interchange_generator(make_path(3))
    q = build_quotient(gen, constant_map(gen.indexer))
    assert q.qprime.to_dense().shape == (1, 1) and q.qprime.to_dense()[0, 0] == 0


def test_block_counts():
    g = occupancy_map(2, 1)
    assert g.num_blocks == 2 and g.block_sizes.tolist() == [1, 1]
    g = occupancy_map(3, 2)
    assert g.num_blocks == 3 and g.block_sizes.tolist() == [2, 2, 2]
    for n in range(2, 6):
        for m in range(n):
            assert (position_map(n, m).block_sizes == expected_block_size(position_map(n, m))).all()
        for m in range(1, n):
            assert (occupancy_map(n, m).block_sizes == expected_block_size(occupancy_map(n, m))).all()


def test_single_red_particle_is_position():
    # one red particle: the occupied singleton is the particle's position
    for n in range(2, 6):
        occ = occupancy_map(n, 1)
        pos = position_map(n, 0)
        subsets = [occ.target.unrank(b)[0] for b in occ.labels]
        assert subsets == pos.labels.tolist()


def test_bad_map_arguments():
    with pytest.raises(ValueError):
        position_map(3, 3)
    with pytest.raises(ValueError):
        occupancy_map(3, 0)
    with pytest.raises(ValueError):
        LumpingMap(StateIndexer("permutation", 3), np.array([0, 0, 0, 0, 0, 2]), StateIndexer("block", 3))


@pytest.mark.parametrize("G", all_graphs(5), ids=repr)
def test_quotients_are_projected_processes(G):
    gen = interchange_generator(G)
    for m in range(G.n):
        q = build_quotient(gen, position_map(G.n, m))
        np.testing.assert_allclose(q.qprime.to_dense(), rw_generator(G).to_dense(), atol=1e-12)
    for m in range(1, G.n):
        q = build_quotient(gen, occupancy_map(G.n, m))
        np.testing.assert_allclose(q.qprime.to_dense(), exclusion_generator(G, m).to_dense(), atol=1e-12)


def test_quotient_spectra_examples():
    gen = interchange_generator(make_path(2))
    q = build_quotient(gen, position_map(3, 0))
    np.testing.assert_allclose(full_spectrum(q.qprime), [0, 1, 3], atol=1e-12)
    tri = interchange_generator(make_complete(3))
    qs = full_spectrum(build_quotient(tri, occupancy_map(3, 1)).qprime)
    np.testing.assert_allclose(qs, [0, 3, 3], atol=1e-12)
    assert is_submultiset(qs, full_spectrum(tri), 1e-8)


def test_projection_basics():
    g = occupancy_map(4, 2)
    np.testing.assert_array_equal(project_eigenvector(np.ones(24), g), g.block_sizes)
    F = np.random.default_rng(0).normal(size=(24, 3))
    np.testing.assert_allclose(project_eigenvector(F, g)[:, 1], project_eigenvector(F[:, 1], g))
    with pytest.raises(ValueError):
        project_eigenvector(np.ones(5), g)


def test_antisymmetric_vector_projects_to_zero():
    g = position_map(3, 0)
    f = np.zeros(6)
    for block in g.blocks:
        f[block] = [1.0, -1.0]
    assert not project_eigenvector(f, g).any()


def test_both_branches_on_path2():
    gen = interchange_generator(make_path(2))
    g = position_map(3, 0)
    quotient = build_quotient(gen, g).qprime
    w, V = dense_eigh(gen)
    branches = []
    for lam, f in zip(w, V.T):
        h = project_eigenvector(f, g)
        if np.linalg.norm(h) <= 1e-10:
            branches.append("zero")
        else:
            assert check_eigenpair(quotient, h, lam) <= 1e-9
            branches.append("eigen")
    assert set(branches) == {"zero", "eigen"}


def test_not_lumpable_witness():
    # blocks {0,1} and {2,3} of a 4-path are not lumpable
    gen = rw_generator(make_path(3))
    g = LumpingMap(gen.indexer, np.array([0, 1, 0, 1]), StateIndexer("block", 2))
    with pytest.raises(LumpabilityError) as info:
        check_lumpable(gen, g)
    x, y, U = info.value.witness
    R = gen.to_dense() @ g.indicator().toarray()
    assert g.labels[x] == g.labels[y] and R[x, U] != R[y, U]


def test_asymmetric_quotient_rejected():
    # lumpable but with unequal blocks: star centre vs leaves
    gen = rw_generator(make_complete(3))
    g = LumpingMap(gen.indexer, np.array([0, 1, 1]), StateIndexer("block", 2))
    with pytest.raises(LumpabilityError, match="symmetric"):
        build_quotient(gen, g)


def test_submultiset():
    assert is_submultiset(np.array([0, 3, 3]), np.array([0, 3, 3, 3, 3, 6]), 1e-8)
    assert not is_submultiset(np.array([0, 0]), np.array([0, 3, 3]), 1e-8)


@pytest.mark.parametrize("G", all_graphs(4), ids=repr)
def test_projection_audit(G):
    gen = interchange_generator(G)
    maps = [position_map(G.n, m) for m in range(G.n)] + [occupancy_map(G.n, m) for m in range(1, G.n)]
    for g in maps:
        rep = projection_audit(gen, g)
        assert rep.passed, rep.failures
        q = rep.quantities
        assert q["zero_projections"] + q["eigenvector_projections"] == math.factorial(G.n)
        # each nonzero quotient eigenvector is hit at least once
        assert q["eigenvector_projections"] >= g.num_blocks
