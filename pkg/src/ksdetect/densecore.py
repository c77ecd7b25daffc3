"""Dense real-matrix kernels shared by every other module.

Matrices are 2-D float64 ``numpy`` arrays; vectors are 1-D arrays. The
vectorization order is row-major throughout the package, chosen so that
``vectorize(a @ x @ b.T) == kron(a, b) @ vectorize(x)`` holds exactly.
Under this convention the entry (i, j) of an m1 x m2 matrix maps to
position i * m2 + j of its vectorization.

Matrix file format (shared repo-wide): comma-separated values, one matrix
row per line, no header. Writers emit 17 significant digits so values
round-trip exactly.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionError, InputFormatError, SingularityError

# A column of a basis counts as dependent when its R diagonal falls below
# this fraction of the largest R diagonal.
RANK_RTOL = 1e-10


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    """Validate and return a 2-D float64 array with finite entries."""
    m = np.asarray(values, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={m.ndim}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionError(f"{name} must be nonempty, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DimensionError(f"{name} contains NaN or Inf entries")
    return m


def kron(a, b) -> np.ndarray:
    """Kronecker product: block (i, j) of the result is a[i, j] * b."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if rows > np.iinfo(np.intp).max or cols > np.iinfo(np.intp).max:
        raise DimensionError("Kronecker product dimensions overflow index range")
    return np.kron(a, b)


def vectorize(m) -> np.ndarray:
    """Row-major vectorization of a matrix into a 1-D vector."""
    return as_matrix(m, "m").reshape(-1)


def unvectorize(v, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vectorize` for a known shape."""
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.size != rows * cols:
        raise DimensionError(
            f"cannot reshape length-{v.size} vector into {rows}x{cols}"
        )
    return v.reshape(rows, cols)


def frobenius_norm_sq(m) -> float:
    """Sum of squared entries, ||M||_F^2."""
    m = as_matrix(m, "m")
    return float(np.sum(m * m))


def infinity_entry_norm(m) -> float:
    """Largest absolute entry, max_ij |M(i,j)|."""
    m = as_matrix(m, "m")
    return float(np.max(np.abs(m)))


def pseudoinverse_gram(basis) -> np.ndarray:
    """Inverse Gram matrix (M^T M)^-1 computed through a QR factorization.

    Raises SingularityError when the basis is column-rank deficient, i.e.
    when any R diagonal is below RANK_RTOL times the largest one.
    """
    m = as_matrix(basis, "basis")
    r = np.linalg.qr(m, mode="r")
    diag = np.abs(np.diag(r))
    tol = RANK_RTOL * diag.max(initial=0.0)
    deficient = int(np.sum(diag <= tol))
    if deficient > 0 or m.shape[0] < m.shape[1]:
        raise SingularityError(
            f"basis is rank deficient: {max(deficient, m.shape[1] - m.shape[0])} "
            f"dependent column(s) out of {m.shape[1]}",
            deficient_columns=deficient,
        )
    r_inv = solve_triangular(r, np.eye(m.shape[1]), lower=False)
    return r_inv @ r_inv.T


def standard_basis_vector(dim: int, j: int) -> np.ndarray:
    """Unit vector e_j in R^dim (1-D array)."""
    if dim < 1:
        raise DimensionError(f"dimension must be positive, got {dim}")
    if not 0 <= j < dim:
        raise DimensionError(f"index {j} out of range for dimension {dim}")
    e = np.zeros(dim)
    e[j] = 1.0
    return e


def write_matrix(path, m) -> None:
    """Write a matrix in the shared CSV format (17 significant digits)."""
    m = as_matrix(m, "m")
    with open(path, "w", encoding="ascii") as fh:
        for row in m:
            fh.write(",".join(f"{x:.17g}" for x in row))
            fh.write("\n")


def read_matrix(path) -> np.ndarray:
    """Read a matrix written in the shared CSV format.

    Raises InputFormatError with a line/column diagnostic on malformed
    input (non-numeric field, ragged rows, empty file).
    """
    rows = []
    width = None
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise InputFormatError(
                    f"{path}: line {lineno}: expected {width} columns, got {len(fields)}"
                )
            row = []
            for colno, field in enumerate(fields, start=1):
                try:
                    row.append(float(field))
                except ValueError:
                    raise InputFormatError(
                        f"{path}: line {lineno}, column {colno}: "
                        f"not a number: {field!r}"
                    ) from None
            rows.append(row)
    if not rows:
        raise InputFormatError(f"{path}: empty matrix file")
    m = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(m)):
        raise InputFormatError(f"{path}: matrix contains NaN or Inf entries")
    return m
