"""Residual energies of restricted projections, and the detection tests.

The statistic throughout is the energy of the observed signal outside the
restricted model span. For an intersection pattern that is the classic
two-sided projection residual on the k1 x k2 submatrix. For a discrete
mask the observed cells select rows of the Kronecker basis and the
statistic is the vectorized least-squares residual onto those rows; this
is the unique extension that coincides with the intersection formula on
intersection masks and vanishes exactly when the observations are
consistent with the model.

Masks whose missing cells fill a complete rows x columns rectangle (the
union construction) are solved through the Kronecker structure of their
normal equations instead of materializing the selected basis rows, which
is what makes large sweeps cheap. Ill-conditioned systems fall back to a
dense QR solve.

Hypothesis convention: H0 means the signal lies in the model and is
accepted when the statistic is at or below the threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.special import gammainc, gammaln

from .densecore import RANK_RTOL, as_matrix, frobenius_norm_sq
from .errors import DimensionError, UndersampledError
from .sampling import (
    DiscretePattern,
    IntersectionPattern,
    SampleCounts,
    SamplingPattern,
    derive_counts,
    restrict_signal,
)
from .subspace import KSModel

# Residuals below this fraction of the observed energy count as zero in
# the noiseless test; eta = 0 is unusable in floating point.
NOISELESS_FLOOR = 1e-9

# Switch the discrete-mask solve from normal equations to dense QR when
# the selected-rows matrix has an estimated condition number above this.
CONDITION_LIMIT = 1e6

# Poisson-mixture truncation for the noncentral chi-square CDF.
_POISSON_TAIL = 1e-12


@dataclass(frozen=True)
class ResidualResult:
    """Residual energy of one restricted projection."""

    residual_energy: float
    observed_energy: float
    full_residual_energy: float
    counts: SampleCounts

    def __post_init__(self):
        slack = 1e-9 * self.observed_energy
        if not -slack <= self.residual_energy <= self.observed_energy + slack:
            raise DimensionError(
                f"residual energy {self.residual_energy} outside "
                f"[0, observed={self.observed_energy}]"
            )


@dataclass(frozen=True)
class DetectionOutcome:
    """Thresholded decision; H0 = signal accepted as in-model."""

    statistic: float
    eta: float
    decision: str

    def __post_init__(self):
        expected = "H0" if self.statistic <= self.eta else "H1"
        if self.decision != expected:
            raise DimensionError("decision inconsistent with statistic and eta")


@dataclass(frozen=True)
class NoiseModel:
    """Per-entry Gaussian noise variance."""

    variance: float

    def __post_init__(self):
        if not self.variance > 0:
            raise DimensionError(f"noise variance must be positive, got {self.variance}")


def _thin_qr(m: np.ndarray, what: str):
    """Reduced QR with a rank check; deficiency means undersampling."""
    q, r = np.linalg.qr(m, mode="reduced")
    diag = np.abs(np.diag(r))
    tol = RANK_RTOL * diag.max(initial=0.0)
    deficient = int(np.sum(diag <= tol))
    if deficient > 0 or m.shape[0] < m.shape[1]:
        raise UndersampledError(
            f"{what} is rank deficient "
            f"({max(deficient, m.shape[1] - m.shape[0])} of {m.shape[1]} columns); "
            "observe more rows/columns",
            deficient_columns=deficient,
        )
    return q, r


def _check_signal_model(y, model: KSModel) -> np.ndarray:
    y = as_matrix(y, "y")
    if y.shape != model.shape:
        raise DimensionError(
            f"signal shape {y.shape} does not match model ambient {model.shape}"
        )
    return y


def full_residual(y, model: KSModel) -> float:
    """Two-sided projection residual energy on the complete signal."""
    y = _check_signal_model(y, model)
    qa = model.row_space.ortho
    qb = model.col_space.ortho
    proj = qa @ ((qa.T @ y) @ qb) @ qb.T
    return frobenius_norm_sq(y - proj)


def residual_intersection(y, model: KSModel, p: IntersectionPattern) -> ResidualResult:
    """Residual energy when whole rows and columns are observed."""
    if not isinstance(p, IntersectionPattern):
        raise DimensionError("residual_intersection needs an intersection pattern")
    y = _check_signal_model(y, model)
    if tuple(p.dims) != y.shape:
        raise DimensionError(f"pattern dims {p.dims} do not match signal {y.shape}")
    counts = derive_counts(p)
    n1, n2 = model.sub_shape
    if counts.k1 < n1 or counts.k2 < n2:
        raise UndersampledError(
            f"observed counts ({counts.k1}, {counts.k2}) below the "
            f"identifiability floor ({n1}, {n2})"
        )
    qa, _ = _thin_qr(model.row_space.ortho[p.row_indices, :], "restricted row factor")
    qb, _ = _thin_qr(model.col_space.ortho[p.col_indices, :], "restricted column factor")
    y_obs = restrict_signal(y, p)
    proj = qa @ ((qa.T @ y_obs) @ qb) @ qb.T
    return ResidualResult(
        residual_energy=frobenius_norm_sq(y_obs - proj),
        observed_energy=frobenius_norm_sq(y_obs),
        full_residual_energy=full_residual(y, model),
        counts=counts,
    )


def _rectangular_missing(mask: np.ndarray):
    """Rows/cols of the missing rectangle, or None if not rectangular.

    A mask observes "the union of rows and columns" exactly when its
    missing cells fill the complete Cartesian product of the missing rows
    and missing columns; that includes fully observed masks.
    """
    missing_rows = np.nonzero(~mask.all(axis=1))[0]
    missing_cols = np.nonzero(~mask.all(axis=0))[0]
    n_missing = mask.size - int(mask.sum())
    if n_missing == missing_rows.size * missing_cols.size:
        return missing_rows, missing_cols
    return None


def _solve_union_structured(y, model: KSModel, mask, missing_rows, missing_cols):
    """Least-squares coefficients via the Kronecker normal equations.

    With orthonormal factors the Gram matrix of the selected basis rows is
    I - kron(Ga, Gb) where Ga, Gb are the Grams of the *missing* factor
    rows, and its eigenvalues are 1 - eig(Ga)*eig(Gb), so conditioning is
    known exactly. Returns None when the system is too ill-conditioned for
    normal equations (caller falls back to dense QR).
    """
    qa = model.row_space.ortho
    qb = model.col_space.ortho
    n1, n2 = model.sub_shape
    gram = np.eye(n1 * n2)
    if missing_rows.size and missing_cols.size:
        ga = qa[missing_rows, :].T @ qa[missing_rows, :]
        gb = qb[missing_cols, :].T @ qb[missing_cols, :]
        lam = np.outer(np.linalg.eigvalsh(ga), np.linalg.eigvalsh(gb)).ravel()
        lo = 1.0 - lam.max()
        hi = 1.0 - lam.min()
        if lo <= 1e-14 * hi:
            raise UndersampledError(
                "selected basis rows are rank deficient; observe more cells"
            )
        if hi / lo > CONDITION_LIMIT**2:
            return None
        gram -= np.kron(ga, gb)
    y_masked = np.where(mask, y, 0.0)
    rhs = (qa.T @ y_masked @ qb).reshape(-1)
    try:
        coeffs = cho_solve(cho_factor(gram, lower=True), rhs)
    except np.linalg.LinAlgError:
        return None
    return coeffs.reshape(n1, n2)


def _selected_basis_rows(model: KSModel, mask):
    """Rows of the Kronecker basis at the observed cells, in row-major order."""
    ci, cj = np.nonzero(mask)
    qa = model.row_space.ortho
    qb = model.col_space.ortho
    n1, n2 = model.sub_shape
    return (qa[ci, :, None] * qb[cj, None, :]).reshape(ci.size, n1 * n2)


def _solve_dense(d: np.ndarray, y_obs: np.ndarray) -> np.ndarray:
    """Least squares on the selected rows, QR when ill-conditioned."""
    gram = d.T @ d
    eigs = np.linalg.eigvalsh(gram)
    if eigs[0] <= 1e-14 * max(eigs[-1], 0.0) or eigs[-1] <= 0.0:
        raise UndersampledError(
            "selected basis rows are rank deficient; observe more cells"
        )
    if eigs[-1] / eigs[0] <= CONDITION_LIMIT**2:
        try:
            return cho_solve(cho_factor(gram, lower=True), d.T @ y_obs)
        except np.linalg.LinAlgError:
            pass
    q, r = _thin_qr(d, "selected basis rows")
    return solve_triangular(r, q.T @ y_obs, lower=False)


def residual_discrete(y, model: KSModel, p: DiscretePattern) -> ResidualResult:
    """Residual energy for an arbitrary observed-cell mask."""
    if not isinstance(p, DiscretePattern):
        raise DimensionError("residual_discrete needs a discrete pattern")
    y = _check_signal_model(y, model)
    if tuple(p.dims) != y.shape:
        raise DimensionError(f"pattern dims {p.dims} do not match signal {y.shape}")
    counts = derive_counts(p)
    n1, n2 = model.sub_shape
    if counts.observed_cells < n1 * n2:
        raise UndersampledError(
            f"{counts.observed_cells} observed cells cannot identify a "
            f"{n1 * n2}-dimensional model"
        )
    mask = p.mask
    observed_energy = float(np.sum(np.where(mask, y, 0.0) ** 2))

    coeffs = None
    rect = _rectangular_missing(mask)
    if rect is not None:
        coeffs = _solve_union_structured(y, model, mask, *rect)
    if coeffs is None:
        d = _selected_basis_rows(model, mask)
        x = _solve_dense(d, y[mask])
        coeffs = x.reshape(n1, n2)

    fitted = model.row_space.ortho @ coeffs @ model.col_space.ortho.T
    residual = float(np.sum(np.where(mask, y - fitted, 0.0) ** 2))
    return ResidualResult(
        residual_energy=residual,
        observed_energy=observed_energy,
        full_residual_energy=full_residual(y, model),
        counts=counts,
    )


def residual(y, model: KSModel, p: SamplingPattern) -> ResidualResult:
    """Dispatch on the pattern kind."""
    if isinstance(p, IntersectionPattern):
        return residual_intersection(y, model, p)
    return residual_discrete(y, model, p)


def detect_noiseless(r: ResidualResult, eta: float | None = None) -> DetectionOutcome:
    """Accept H0 when the residual is at or below eta.

    The default eta is NOISELESS_FLOOR times the observed energy, the
    floating-point stand-in for a zero threshold.
    """
    if eta is None:
        eta = NOISELESS_FLOOR * r.observed_energy
    if eta < 0:
        raise DimensionError(f"threshold must be nonnegative, got {eta}")
    statistic = r.residual_energy
    return DetectionOutcome(
        statistic=statistic,
        eta=float(eta),
        decision="H0" if statistic <= eta else "H1",
    )


def detect_noisy(
    y_noisy,
    model: KSModel,
    p: SamplingPattern,
    eta: float,
    noise: NoiseModel,
) -> DetectionOutcome:
    """Threshold the residual of a noisy observation.

    The statistic is reported in units of the noise variance, so under H0
    it is approximately a chi-square variate; as variance goes to zero the
    test reduces to the noiseless decision.
    """
    if eta < 0:
        raise DimensionError(f"threshold must be nonnegative, got {eta}")
    r = residual(y_noisy, model, p)
    statistic = r.residual_energy / noise.variance
    return DetectionOutcome(
        statistic=statistic,
        eta=float(eta),
        decision="H0" if statistic <= eta else "H1",
    )


def noncentral_chisq_cdf(x: float, dof: int, noncentrality: float) -> float:
    """CDF of the noncentral chi-square distribution.

    Evaluated as the Poisson mixture of central chi-square CDFs, truncated
    once the Poisson weights cover all but 1e-12 of their mass; the
    central CDF is the regularized lower incomplete gamma function.
    """
    if x < 0:
        raise DimensionError(f"cdf argument must be nonnegative, got {x}")
    if noncentrality < 0:
        raise DimensionError(f"noncentrality must be nonnegative, got {noncentrality}")
    if dof < 1 or int(dof) != dof:
        raise DimensionError(f"degrees of freedom must be a positive integer, got {dof}")
    half_x = x / 2.0
    half_lam = noncentrality / 2.0
    if half_lam == 0.0:
        return float(gammainc(dof / 2.0, half_x))
    log_half_lam = math.log(half_lam)
    total = 0.0
    weight_sum = 0.0
    max_terms = int(half_lam + 50.0 * math.sqrt(half_lam + 1.0) + 100.0)
    for j in range(max_terms):
        w = math.exp(-half_lam + j * log_half_lam - gammaln(j + 1))
        total += w * float(gammainc(dof / 2.0 + j, half_x))
        weight_sum += w
        if 1.0 - weight_sum < _POISSON_TAIL:
            break
    return min(max(total, 0.0), 1.0)


def detection_probability(noncentrality: float, dof: int, eta: float) -> float:
    """P[statistic > eta] for the noncentral chi-square statistic.

    For the noisy matched-subspace test the stated dof is n1*n2 and the
    noncentrality is the clean signal's residual energy over the noise
    variance; pass a different dof to override the stated convention.
    """
    if eta < 0:
        raise DimensionError(f"threshold must be nonnegative, got {eta}")
    return 1.0 - noncentral_chisq_cdf(eta, dof, noncentrality)
