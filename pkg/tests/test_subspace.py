import numpy as np
import pytest
from scipy.linalg import hadamard

from ksdetect import densecore, subspace
from ksdetect.errors import (
    DegenerateSignalError,
    DimensionError,
    EmptyComplementError,
    SingularityError,
)


def flat_basis(m, n):
    """Orthonormal columns whose entries all have magnitude 1/sqrt(m)."""
    return hadamard(m).astype(float)[:, :n] / np.sqrt(m)


def direct_product_coherence(model):
    """Oracle: evaluate the coherence definition on the explicit Kronecker basis.

    Builds the product basis, materializes its projector, and takes the
    max projected-basis-vector norm over all ambient coordinates.
    """
    d = densecore.kron(model.row_space.basis, model.col_space.basis)
    p = subspace.projector(subspace.Subspace(d))
    col_norms_sq = np.sum(p * p, axis=0)  # ||P e_j||^2 for every j
    mm = d.shape[0]
    nn = d.shape[1]
    return (mm / nn) * float(np.max(col_norms_sq))


def test_projector_full_space_is_identity():
    rng = np.random.default_rng(0)
    s = subspace.Subspace(rng.standard_normal((4, 4)))
    assert np.linalg.norm(subspace.projector(s) - np.eye(4)) <= 1e-10


def test_projector_axis():
    s = subspace.Subspace([[1.0], [0.0], [0.0]])
    assert np.allclose(subspace.projector(s), np.diag([1.0, 0.0, 0.0]), atol=1e-14)


def test_projector_idempotent_symmetric_fixpoint():
    rng = np.random.default_rng(1)
    basis = rng.standard_normal((20, 5))
    s = subspace.Subspace(basis)
    p = subspace.projector(s)
    assert np.linalg.norm(p @ p - p) <= 1e-10
    assert np.linalg.norm(p - p.T) <= 1e-10
    assert np.linalg.norm(p @ basis - basis) <= 1e-10 * np.linalg.norm(basis)


def test_coherence_flat_basis_is_one():
    s = subspace.Subspace(flat_basis(16, 4))
    assert abs(s.coherence - 1.0) <= 1e-10


def test_coherence_standard_basis_column_maximal():
    basis = np.zeros((10, 2))
    basis[0, 0] = 1.0
    basis[3:, 1] = np.arange(7.0) + 1.0
    s = subspace.Subspace(basis)
    assert abs(s.coherence - 5.0) <= 1e-10


def test_gaussian_coherence_band():
    # Definitional truth at (100, 10): the 50-seed mean sits near 2.4; the
    # oft-quoted ~1.3 does not follow from the projector definition.
    vals = [
        subspace.random_gaussian_subspace(100, 10, seed).coherence
        for seed in range(50)
    ]
    mean = float(np.mean(vals))
    assert 2.0 <= mean <= 2.8
    assert all(1.0 <= v <= 10.0 for v in vals)


def test_coherence_matches_explicit_projector():
    rng = np.random.default_rng(4)
    basis = rng.standard_normal((30, 6))
    s = subspace.Subspace(basis)
    p = subspace.projector(s)
    direct = (30 / 6) * max(
        float(np.linalg.norm(p @ densecore.standard_basis_vector(30, j)) ** 2)
        for j in range(30)
    )
    assert abs(s.coherence - direct) <= 1e-12 * direct


def test_ks_coherence_is_product():
    a = subspace.Subspace(flat_basis(8, 2))
    basis = np.zeros((10, 2))
    basis[0, 0] = 1.0
    basis[5, 1] = 1.0
    b = subspace.Subspace(basis)
    model = subspace.KSModel(row_space=b, col_space=a)
    assert abs(b.coherence - 5.0) <= 1e-10
    assert abs(subspace.ks_coherence(model) - 5.0) <= 1e-9


def test_ks_coherence_matches_direct_kron_evaluation():
    a = subspace.random_gaussian_subspace(12, 3, 100)
    b = subspace.random_gaussian_subspace(10, 2, 200)
    model = subspace.KSModel(row_space=a, col_space=b)
    direct = direct_product_coherence(model)
    assert abs(subspace.ks_coherence(model) - direct) <= 1e-9 * direct


def test_signal_coherence():
    assert abs(subspace.signal_coherence(np.full((4, 6), 2.5)) - 1.0) <= 1e-12
    spike = np.zeros((5, 7))
    spike[2, 3] = -4.0
    assert abs(subspace.signal_coherence(spike) - 35.0) <= 1e-12

    rng = np.random.default_rng(8)
    y = rng.standard_normal((100, 100))
    y /= np.linalg.norm(y)
    direct = 100 * 100 * np.max(np.abs(y)) ** 2 / np.sum(y * y)
    assert abs(subspace.signal_coherence(y) - direct) <= 1e-12 * direct

    with pytest.raises(DegenerateSignalError):
        subspace.signal_coherence(np.zeros((3, 3)))


def test_orthogonal_complement_axis():
    s = subspace.Subspace([[1.0], [0.0]])
    comp = subspace.orthogonal_complement(s)
    assert np.allclose(np.abs(comp.ortho), [[0.0], [1.0]], atol=1e-14)


def test_complement_projectors_sum_to_identity():
    rng = np.random.default_rng(10)
    s = subspace.Subspace(rng.standard_normal((15, 6)))
    comp = subspace.orthogonal_complement(s)
    total = subspace.projector(s) + subspace.projector(comp)
    assert np.linalg.norm(total - np.eye(15)) <= 1e-10


def test_complement_dimensions_and_cross_gram():
    s = subspace.random_gaussian_subspace(100, 10, 77)
    comp = subspace.orthogonal_complement(s)
    assert comp.basis.shape == (100, 90)
    assert np.linalg.norm(comp.ortho.T @ s.ortho) <= 1e-10


def test_complement_of_full_space_fails():
    rng = np.random.default_rng(12)
    s = subspace.Subspace(rng.standard_normal((5, 5)))
    with pytest.raises(EmptyComplementError):
        subspace.orthogonal_complement(s)


def test_random_subspace_determinism_and_rank():
    s1 = subspace.random_gaussian_subspace(100, 10, 42)
    s2 = subspace.random_gaussian_subspace(100, 10, 42)
    assert np.array_equal(s1.basis, s2.basis)
    s3 = subspace.random_gaussian_subspace(100, 10, 43)
    assert not np.array_equal(s1.basis, s3.basis)
    assert np.linalg.norm(s1.ortho.T @ s1.ortho - np.eye(10)) <= 1e-10


def test_coherence_range_invariant():
    for seed, (m, n) in enumerate([(10, 1), (10, 9), (40, 5), (25, 25)]):
        s = subspace.random_gaussian_subspace(m, n, seed)
        assert 1.0 - 1e-8 <= s.coherence <= m / n + 1e-8


def test_coherence_invariant_under_basis_change():
    rng = np.random.default_rng(21)
    basis = rng.standard_normal((30, 5))
    mu = subspace.Subspace(basis).coherence
    for _ in range(5):
        g = rng.standard_normal((5, 5)) + 3.0 * np.eye(5)
        mu_g = subspace.Subspace(basis @ g).coherence
        assert abs(mu_g - mu) <= 1e-9 * mu


def test_rank_deficient_basis_rejected():
    basis = np.ones((8, 2))
    with pytest.raises(SingularityError):
        subspace.Subspace(basis)


def test_model_dimension_invariant():
    a = subspace.random_gaussian_subspace(3, 3, 0)
    b = subspace.random_gaussian_subspace(4, 4, 1)
    subspace.KSModel(row_space=a, col_space=b)  # 12 <= 12 is allowed
    with pytest.raises(DimensionError):
        subspace.Subspace(np.ones((2, 3)))
