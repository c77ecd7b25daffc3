"""Observation patterns for partially observed 2-D signals.

Two kinds of pattern exist. An IntersectionPattern observes whole rows and
whole columns; the observed signal is the k1 x k2 submatrix at their
intersection. A DiscretePattern observes an arbitrary cell set through a
boolean mask (missingness is always carried by the mask, never by sentinel
values, since zero is a legal signal value).

The "union" construction, where the observed cells are exactly the union
of k1 full rows and k2 full columns, is a DiscretePattern whose missing
cells form a full (m1-k1) x (m2-k2) rectangle. Those masks match the
closed-form sampling-energy expectations exactly and are what the sweep
harness draws in its union regime.

Pattern file formats: a discrete mask is a CSV grid of 0/1 in the shared
matrix format; an intersection pattern is two lines ``rows: i,j,...`` and
``cols: i,j,...``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng
from .densecore import as_matrix
from .errors import DimensionError, InputFormatError


@dataclass(frozen=True)
class IntersectionPattern:
    """Whole observed rows x whole observed columns."""

    row_indices: np.ndarray
    col_indices: np.ndarray
    dims: tuple[int, int]

    def __post_init__(self):
        rows = _checked_indices(self.row_indices, self.dims[0], "row")
        cols = _checked_indices(self.col_indices, self.dims[1], "col")
        object.__setattr__(self, "row_indices", rows)
        object.__setattr__(self, "col_indices", cols)


@dataclass(frozen=True)
class DiscretePattern:
    """Arbitrary observed cells, True = observed."""

    mask: np.ndarray
    dims: tuple[int, int] = field(init=False)

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.ndim != 2 or mask.shape[0] < 1 or mask.shape[1] < 1:
            raise DimensionError(f"mask must be a nonempty 2-D grid, got {mask.shape}")
        if not mask.any():
            raise DimensionError("pattern observes no cells")
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "dims", mask.shape)


SamplingPattern = IntersectionPattern | DiscretePattern


def _checked_indices(indices, bound: int, what: str) -> np.ndarray:
    idx = np.asarray(indices, dtype=np.intp).reshape(-1)
    if idx.size < 1:
        raise DimensionError(f"at least one {what} index required")
    if idx.min(initial=0) < 0 or idx.max(initial=-1) >= bound:
        raise DimensionError(f"{what} indices out of range [0, {bound})")
    if np.any(np.diff(idx) <= 0):
        raise DimensionError(f"{what} indices must be strictly increasing")
    idx.setflags(write=False)
    return idx


@dataclass(frozen=True)
class SampleCounts:
    """Observed row/column counts and the raw observed-cell count.

    For a discrete mask k1/k2 count the rows/columns untouched by any
    missing entry, so observed_cells can disagree with the union formula
    k1*m2 + k2*m1 - k1*k2; union_cells exposes that formula and
    cells_diverge flags a mismatch above 10%.
    """

    k1: int
    k2: int
    observed_cells: int
    dims: tuple[int, int]

    @property
    def union_cells(self) -> int:
        m1, m2 = self.dims
        return self.k1 * m2 + self.k2 * m1 - self.k1 * self.k2

    @property
    def cells_diverge(self) -> bool:
        expected = self.union_cells
        if expected <= 0:
            return self.observed_cells > 0
        return abs(self.observed_cells - expected) > 0.1 * expected


def derive_counts(p: SamplingPattern) -> SampleCounts:
    """Counts (k1, k2, observed cells) for either pattern kind."""
    if isinstance(p, IntersectionPattern):
        k1 = int(p.row_indices.size)
        k2 = int(p.col_indices.size)
        return SampleCounts(k1, k2, k1 * k2, p.dims)
    m1, m2 = p.dims
    rows_clean = int(np.sum(p.mask.all(axis=1)))
    cols_clean = int(np.sum(p.mask.all(axis=0)))
    return SampleCounts(rows_clean, cols_clean, int(p.mask.sum()), p.dims)


def sample_intersection(m1: int, m2: int, k1: int, k2: int, seed: int) -> IntersectionPattern:
    """Uniform k1-subset of rows and k2-subset of columns."""
    if not (1 <= k1 <= m1 and 1 <= k2 <= m2):
        raise DimensionError(
            f"counts ({k1}, {k2}) out of range for dims ({m1}, {m2})"
        )
    gen = rng.make_generator(seed)
    rows = rng.sample_without_replacement(gen, m1, k1)
    cols = rng.sample_without_replacement(gen, m2, k2)
    return IntersectionPattern(rows, cols, (m1, m2))


def sample_discrete(m1: int, m2: int, n_observed: int, seed: int) -> DiscretePattern:
    """Uniform n_observed-subset of the m1*m2 cells."""
    if not 1 <= n_observed <= m1 * m2:
        raise DimensionError(
            f"observed-cell count {n_observed} out of range for {m1}x{m2}"
        )
    gen = rng.make_generator(seed)
    cells = rng.sample_without_replacement(gen, m1 * m2, n_observed)
    mask = np.zeros(m1 * m2, dtype=bool)
    mask[cells] = True
    return DiscretePattern(mask.reshape(m1, m2))


def sample_union(m1: int, m2: int, k1: int, k2: int, seed: int) -> DiscretePattern:
    """Observe exactly the union of k1 uniform rows and k2 uniform columns.

    The missing cells form the full rectangle (unselected rows) x
    (unselected columns).
    """
    if not (1 <= k1 <= m1 and 1 <= k2 <= m2):
        raise DimensionError(
            f"counts ({k1}, {k2}) out of range for dims ({m1}, {m2})"
        )
    gen = rng.make_generator(seed)
    rows = rng.sample_without_replacement(gen, m1, k1)
    cols = rng.sample_without_replacement(gen, m2, k2)
    mask = np.zeros((m1, m2), dtype=bool)
    mask[rows, :] = True
    mask[:, cols] = True
    return DiscretePattern(mask)


def restrict_rows(m, indices) -> np.ndarray:
    """Submatrix of the selected rows, order preserved."""
    m = as_matrix(m, "m")
    idx = _checked_indices(indices, m.shape[0], "row")
    return m[idx, :]


def restrict_signal(y, p: SamplingPattern) -> np.ndarray:
    """Observed portion of a signal.

    Intersection: the k1 x k2 submatrix at the selected rows and columns.
    Discrete: a same-shape copy with unobserved entries set to zero (the
    carrier used for vectorized cell selection downstream).
    """
    y = as_matrix(y, "y")
    if y.shape != tuple(p.dims):
        raise DimensionError(f"signal shape {y.shape} does not match pattern {p.dims}")
    if isinstance(p, IntersectionPattern):
        return y[np.ix_(p.row_indices, p.col_indices)]
    return np.where(p.mask, y, 0.0)


def write_pattern(path, p: SamplingPattern) -> None:
    """Serialize a pattern (mask grid, or rows:/cols: index lines)."""
    with open(path, "w", encoding="ascii") as fh:
        if isinstance(p, IntersectionPattern):
            fh.write("rows: " + ",".join(str(i) for i in p.row_indices) + "\n")
            fh.write("cols: " + ",".join(str(j) for j in p.col_indices) + "\n")
        else:
            for row in p.mask:
                fh.write(",".join("1" if v else "0" for v in row) + "\n")


def read_pattern(path, dims: tuple[int, int] | None = None) -> SamplingPattern:
    """Read a pattern file; intersection files need dims supplied."""
    with open(path, "r", encoding="ascii") as fh:
        text = fh.read()
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InputFormatError(f"{path}: empty pattern file")
    if lines[0].startswith("rows:"):
        if len(lines) < 2 or not lines[1].startswith("cols:"):
            raise InputFormatError(f"{path}: expected a 'cols:' line after 'rows:'")
        if dims is None:
            raise InputFormatError(
                f"{path}: intersection patterns need the signal dims to validate"
            )
        try:
            rows = [int(v) for v in lines[0][len("rows:"):].split(",")]
            cols = [int(v) for v in lines[1][len("cols:"):].split(",")]
        except ValueError as exc:
            raise InputFormatError(f"{path}: bad index list: {exc}") from None
        return IntersectionPattern(np.array(rows), np.array(cols), dims)
    grid = []
    for lineno, line in enumerate(lines, start=1):
        row = []
        for colno, field_ in enumerate(line.split(","), start=1):
            if field_ not in ("0", "1"):
                raise InputFormatError(
                    f"{path}: line {lineno}, column {colno}: mask entries must be 0/1"
                )
            row.append(field_ == "1")
        grid.append(row)
    widths = {len(r) for r in grid}
    if len(widths) != 1:
        raise InputFormatError(f"{path}: ragged mask rows")
    mask = np.array(grid, dtype=bool)
    if dims is not None and mask.shape != tuple(dims):
        raise InputFormatError(
            f"{path}: mask shape {mask.shape} does not match signal dims {tuple(dims)}"
        )
    return DiscretePattern(mask)
