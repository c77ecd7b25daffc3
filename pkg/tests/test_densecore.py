import numpy as np
import pytest

from ksdetect import densecore
from ksdetect.errors import DimensionError, InputFormatError, SingularityError


def kron_four_loop(a, b):
    """Brute-force oracle: entry (i*p+r, j*q+s) = a[i,j] * b[r,s]."""
    m, n = a.shape
    p, q = b.shape
    out = np.zeros((m * p, n * q))
    for i in range(m):
        for j in range(n):
            for r in range(p):
                for s in range(q):
                    out[i * p + r, j * q + s] = a[i, j] * b[r, s]
    return out


def test_kron_identities():
    assert np.array_equal(densecore.kron(np.eye(2), np.eye(3)), np.eye(6))
    m = np.arange(6.0).reshape(2, 3)
    assert np.array_equal(densecore.kron([[2.0]], m), 2.0 * m)


def test_kron_matches_four_loop_oracle():
    rng = np.random.default_rng(11)
    a = rng.standard_normal((3, 2))
    b = rng.standard_normal((2, 2))
    assert np.array_equal(densecore.kron(a, b), kron_four_loop(a, b))


def test_vectorize_basics():
    assert np.array_equal(densecore.vectorize([[5.0]]), [5.0])
    rng = np.random.default_rng(3)
    y = rng.standard_normal((4, 7))
    v = densecore.vectorize(y)
    assert v.shape == (28,)
    assert np.isclose(np.sum(v * v), densecore.frobenius_norm_sq(y), rtol=1e-14)
    assert np.array_equal(densecore.unvectorize(v, 4, 7), y)


def test_vec_kron_identity_single():
    rng = np.random.default_rng(5)
    a = rng.standard_normal((4, 2))
    x = rng.standard_normal((2, 3))
    b = rng.standard_normal((5, 3))
    left = densecore.vectorize(a @ x @ b.T)
    right = densecore.kron(a, b) @ densecore.vectorize(x)
    assert np.linalg.norm(left - right) <= 1e-12 * np.linalg.norm(left)


def test_vec_kron_identity_100_instances():
    rng = np.random.default_rng(17)
    for _ in range(100):
        m1, n1 = rng.integers(1, 7, size=2)
        m2, n2 = rng.integers(1, 7, size=2)
        a = rng.standard_normal((m1, n1))
        x = rng.standard_normal((n1, n2))
        b = rng.standard_normal((m2, n2))
        product = a @ x @ b.T
        gap = densecore.vectorize(product) - densecore.kron(a, b) @ densecore.vectorize(x)
        assert np.linalg.norm(gap) <= 1e-10 * np.sqrt(
            densecore.frobenius_norm_sq(product)
        ) + 1e-14


def test_kron_mixed_product_identity():
    rng = np.random.default_rng(23)
    a = rng.standard_normal((6, 3))
    b = rng.standard_normal((5, 2))
    d = densecore.kron(a, b)
    lhs = d.T @ d
    rhs = densecore.kron(a.T @ a, b.T @ b)
    assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(rhs)


def test_frobenius_norm_sq():
    assert densecore.frobenius_norm_sq(np.zeros((3, 4))) == 0.0
    assert densecore.frobenius_norm_sq(np.eye(3)) == 3.0
    rng = np.random.default_rng(7)
    m = rng.standard_normal((10, 10))
    assert np.isclose(
        densecore.frobenius_norm_sq(m), np.trace(m.T @ m), rtol=1e-12
    )


def test_infinity_entry_norm():
    assert densecore.infinity_entry_norm([[-3.0, 1.0], [2.0, 0.0]]) == 3.0
    assert densecore.infinity_entry_norm(np.zeros((2, 2))) == 0.0
    rng = np.random.default_rng(9)
    m = rng.standard_normal((6, 8))
    best = 0.0
    for row in m:
        for v in row:
            best = max(best, abs(v))
    assert densecore.infinity_entry_norm(m) == best


def test_pseudoinverse_gram():
    rng = np.random.default_rng(13)
    q, _ = np.linalg.qr(rng.standard_normal((12, 4)))
    assert np.linalg.norm(densecore.pseudoinverse_gram(q) - np.eye(4)) <= 1e-10

    assert np.allclose(
        densecore.pseudoinverse_gram(2.0 * np.eye(3)), 0.25 * np.eye(3), atol=1e-14
    )

    m = rng.standard_normal((20, 5))
    inv_gram = densecore.pseudoinverse_gram(m)
    assert np.linalg.norm(inv_gram @ (m.T @ m) - np.eye(5)) <= 1e-10


def test_pseudoinverse_gram_rank_deficient():
    m = np.ones((6, 3))
    with pytest.raises(SingularityError) as exc:
        densecore.pseudoinverse_gram(m)
    assert "2" in str(exc.value)  # two dependent columns


def test_standard_basis_vector():
    assert np.array_equal(densecore.standard_basis_vector(3, 0), [1.0, 0.0, 0.0])
    for j in range(5):
        e = densecore.standard_basis_vector(5, j)
        assert np.linalg.norm(e) == 1.0
    with pytest.raises(DimensionError):
        densecore.standard_basis_vector(3, 3)
    with pytest.raises(DimensionError):
        densecore.standard_basis_vector(3, -1)


def test_basis_vector_kron_indexing():
    # kron(e_i, e_j) = e_{i*m2+j}: the row-major cell order.
    m1, m2 = 3, 4
    for i in range(m1):
        for j in range(m2):
            ei = densecore.standard_basis_vector(m1, i)
            ej = densecore.standard_basis_vector(m2, j)
            expect = densecore.standard_basis_vector(m1 * m2, i * m2 + j)
            assert np.array_equal(np.kron(ei, ej), expect)


def test_matrix_validation():
    with pytest.raises(DimensionError):
        densecore.as_matrix([1.0, 2.0])
    with pytest.raises(DimensionError):
        densecore.as_matrix([[np.nan]])
    with pytest.raises(DimensionError):
        densecore.as_matrix(np.zeros((0, 3)))


def test_matrix_io_round_trip(tmp_path):
    rng = np.random.default_rng(29)
    m = rng.standard_normal((5, 7)) * 10.0 ** rng.integers(-8, 8, size=(5, 7))
    path = tmp_path / "m.csv"
    densecore.write_matrix(path, m)
    back = densecore.read_matrix(path)
    assert np.array_equal(back, m)


def test_matrix_io_malformed(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1,2,3\n4,x,6\n")
    with pytest.raises(InputFormatError) as exc:
        densecore.read_matrix(path)
    assert "line 2" in str(exc.value) and "column 2" in str(exc.value)

    path.write_text("1,2,3\n4,5\n")
    with pytest.raises(InputFormatError) as exc:
        densecore.read_matrix(path)
    assert "line 2" in str(exc.value)

    path.write_text("")
    with pytest.raises(InputFormatError):
        densecore.read_matrix(path)
