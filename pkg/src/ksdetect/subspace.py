"""Subspaces, their coherence, and Kronecker-structured models.

A Subspace wraps a full-column-rank basis matrix together with an
orthonormalized copy (reduced QR, no pivoting, so construction is
deterministic) and its cached coherence. Coherence measures how
concentrated a subspace is on coordinate axes: 1 means maximally spread,
ambient/dim means a coordinate axis lies inside the subspace.

A KSModel pairs a left factor acting on the rows of a 2-D signal with a
right factor acting on its columns: signals in the model have the form
``row_space.basis @ coeffs @ col_space.basis.T``, equivalently their
vectorization lies in the span of ``kron(row_basis, col_basis)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .densecore import (
    RANK_RTOL,
    as_matrix,
    frobenius_norm_sq,
    infinity_entry_norm,
)
from .errors import (
    DegenerateSignalError,
    DimensionError,
    EmptyComplementError,
    SingularityError,
)

# Slack allowed before the coherence range check [1, ambient/dim] fails.
COHERENCE_SLACK = 1e-8


class Subspace:
    """Span of the columns of a basis matrix, with cached orthonormal form."""

    def __init__(self, basis):
        basis = as_matrix(basis, "basis")
        m, n = basis.shape
        if n > m:
            raise DimensionError(
                f"subspace dimension {n} exceeds ambient dimension {m}"
            )
        q, r = np.linalg.qr(basis, mode="reduced")
        diag = np.abs(np.diag(r))
        tol = RANK_RTOL * diag.max(initial=0.0)
        deficient = int(np.sum(diag <= tol))
        if deficient > 0:
            raise SingularityError(
                f"basis is rank deficient: {deficient} dependent column(s) "
                f"out of {n}",
                deficient_columns=deficient,
            )
        self.basis = basis
        self.ortho = q
        self._coherence = _coherence_from_ortho(q)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def sub_dim(self) -> int:
        return self.basis.shape[1]

    @property
    def coherence(self) -> float:
        return self._coherence

    def __repr__(self):
        return (
            f"Subspace(ambient={self.ambient_dim}, dim={self.sub_dim}, "
            f"coherence={self._coherence:.6g})"
        )


def _coherence_from_ortho(q: np.ndarray) -> float:
    """(ambient/dim) * max squared row norm of an orthonormal basis.

    Row norms of the orthonormal basis equal the projected basis-vector
    norms ||P e_j||, so this avoids materializing the projector.
    """
    m, n = q.shape
    raw = (m / n) * float(np.max(np.sum(q * q, axis=1)))
    upper = m / n
    if raw < 1.0 - COHERENCE_SLACK or raw > upper + COHERENCE_SLACK:
        raise SingularityError(
            f"coherence {raw} escaped its range [1, {upper}]; "
            "the orthonormalization is unreliable"
        )
    return min(max(raw, 1.0), upper)


@dataclass(frozen=True)
class KSModel:
    """Pair of factor subspaces; the model span is their Kronecker product."""

    row_space: Subspace
    col_space: Subspace

    def __post_init__(self):
        n_prod = self.row_space.sub_dim * self.col_space.sub_dim
        m_prod = self.row_space.ambient_dim * self.col_space.ambient_dim
        if n_prod > m_prod:
            raise DimensionError(
                f"model dimension {n_prod} exceeds ambient product {m_prod}"
            )

    @property
    def shape(self):
        """(m1, m2) ambient shape of signals this model describes."""
        return (self.row_space.ambient_dim, self.col_space.ambient_dim)

    @property
    def sub_shape(self):
        """(n1, n2) coefficient shape."""
        return (self.row_space.sub_dim, self.col_space.sub_dim)


def projector(s: Subspace) -> np.ndarray:
    """Orthogonal projector onto the subspace, ambient x ambient."""
    return s.ortho @ s.ortho.T


def coherence(s: Subspace) -> float:
    """Coherence of a subspace, in [1, ambient/dim]."""
    return s.coherence


def ks_coherence(model: KSModel) -> float:
    """Coherence of the Kronecker-product span: the product of the factors'."""
    return model.row_space.coherence * model.col_space.coherence


def signal_coherence(y) -> float:
    """Coherence of a single signal: m1*m2 * ||Y||_inf^2 / ||Y||_F^2."""
    y = as_matrix(y, "y")
    energy = frobenius_norm_sq(y)
    if energy == 0.0:
        raise DegenerateSignalError("signal coherence is undefined for the zero matrix")
    peak = infinity_entry_norm(y)
    return y.size * peak * peak / energy


def orthogonal_complement(s: Subspace) -> Subspace:
    """Subspace spanning everything orthogonal to s.

    Taken from the trailing columns of the full QR of the basis, so the
    result is deterministic for a given basis.
    """
    m, n = s.basis.shape
    if n >= m:
        raise EmptyComplementError(
            f"subspace of dimension {n} fills its ambient space R^{m}"
        )
    q_full, _ = np.linalg.qr(s.basis, mode="complete")
    return Subspace(q_full[:, n:])


def random_gaussian_subspace(ambient: int, dim: int, seed: int) -> Subspace:
    """Subspace with independent standard-normal basis entries.

    Deterministic per seed; see the rng module for the generator choice.
    """
    if dim > ambient:
        raise DimensionError(f"dim {dim} exceeds ambient {ambient}")
    gen = rng.make_generator(seed)
    return Subspace(rng.standard_normals(gen, (ambient, dim)))
