"""Closed-form residual-energy bounds for the two sampling regimes.

Everything here is pure arithmetic on the problem parameters: dimensions,
observed counts, coherences, a confidence parameter delta, and the two
reference energies of the full signal. Each regime yields four
concentration parameters (alpha, beta, gamma1, gamma2), a probabilistic
lower/upper envelope on the observed residual energy that holds with
probability at least 1 - 8*delta, and the minimum sample counts under
which the lower bound is meaningful.

Two source formulas are dimensionally inconsistent as printed: beta's
denominator pairs m1 with n2, and gamma2 reuses the row-factor coherence.
The defaults here use the symmetric forms (m1/n1, and the column-factor
coherence in gamma2); ``as_written=True`` evaluates the printed forms
verbatim for auditability.

For the union regime the upper bound is printed against the total signal
energy rather than the full residual energy; both normalizations are
reported (``upper`` as printed, ``upper_residual_scale`` for symmetry
with the intersection regime).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DimensionError

INTERSECTION = "intersection"
UNION = "union"

# Column order of BoundReport.to_csv_row(); also documented in the CLI.
BOUND_CSV_COLUMNS = (
    "regime,m1,m2,n1,n2,k1,k2,delta,alpha,beta,gamma1,gamma2,"
    "lower,lower_clamped,upper,upper_residual_scale,probability_floor,"
    "k1_condition_met,k2_condition_met"
)


@dataclass(frozen=True)
class BoundInputs:
    """Problem parameters the bound formulas consume.

    The count range n <= k <= m is checked when a bound is evaluated, not
    at construction, so inputs can be built incrementally.
    """

    m1: int
    m2: int
    n1: int
    n2: int
    k1: int
    k2: int
    mu_a: float
    mu_b: float
    mu_y: float
    delta: float
    full_residual_energy: float = 1.0
    signal_energy: float = 1.0

    def __post_init__(self):
        for name in ("m1", "m2", "n1", "n2", "k1", "k2"):
            if getattr(self, name) < 1:
                raise DimensionError(f"{name} must be a positive integer")
        if self.n1 > self.m1 or self.n2 > self.m2:
            raise DimensionError("subspace dimensions exceed ambient dimensions")
        for name in ("mu_a", "mu_b", "mu_y"):
            if getattr(self, name) < 1.0:
                raise DimensionError(f"{name} must be at least 1")
        if not 0.0 < self.delta < 1.0:
            raise DimensionError(f"delta must lie in (0, 1), got {self.delta}")
        if self.full_residual_energy < 0 or self.signal_energy < 0:
            raise DimensionError("energies must be nonnegative")


@dataclass(frozen=True)
class BoundReport:
    """Evaluated bound envelope for one regime."""

    regime: str
    alpha: float
    beta: float
    gamma1: float
    gamma2: float
    lower: float
    lower_clamped: float
    upper: float
    upper_residual_scale: float
    probability_floor: float
    sample_conditions_met: tuple[bool, bool]
    inputs: BoundInputs

    def to_kv_text(self) -> str:
        b = self.inputs
        lines = [
            f"regime={self.regime}",
            f"m1={b.m1}", f"m2={b.m2}", f"n1={b.n1}", f"n2={b.n2}",
            f"k1={b.k1}", f"k2={b.k2}", f"delta={b.delta:.17g}",
            f"alpha={self.alpha:.17g}",
            f"beta={self.beta:.17g}",
            f"gamma1={self.gamma1:.17g}",
            f"gamma2={self.gamma2:.17g}",
            f"lower={self.lower:.17g}",
            f"lower_clamped={self.lower_clamped:.17g}",
            f"upper={self.upper:.17g}",
            f"upper_residual_scale={self.upper_residual_scale:.17g}",
            f"probability_floor={self.probability_floor:.17g}",
            f"k1_condition_met={str(self.sample_conditions_met[0]).lower()}",
            f"k2_condition_met={str(self.sample_conditions_met[1]).lower()}",
        ]
        return "\n".join(lines)

    def to_csv_row(self) -> str:
        b = self.inputs
        fields = [
            self.regime,
            str(b.m1), str(b.m2), str(b.n1), str(b.n2), str(b.k1), str(b.k2),
            f"{b.delta:.17g}",
            f"{self.alpha:.17g}", f"{self.beta:.17g}",
            f"{self.gamma1:.17g}", f"{self.gamma2:.17g}",
            f"{self.lower:.17g}", f"{self.lower_clamped:.17g}",
            f"{self.upper:.17g}", f"{self.upper_residual_scale:.17g}",
            f"{self.probability_floor:.17g}",
            str(self.sample_conditions_met[0]).lower(),
            str(self.sample_conditions_met[1]).lower(),
        ]
        return ",".join(fields)


def min_samples(n: int, mu: float, delta: float) -> int:
    """Smallest count satisfying k >= (8/3) n mu ln(2n/delta)."""
    if n < 1:
        raise DimensionError(f"n must be a positive integer, got {n}")
    if mu < 1.0:
        raise DimensionError(f"coherence must be at least 1, got {mu}")
    if not 0.0 < delta < 1.0:
        raise DimensionError(f"delta must lie in (0, 1), got {delta}")
    return math.ceil((8.0 / 3.0) * n * mu * math.log(2.0 * n / delta))


def _beta_denominator(b: BoundInputs, as_written: bool) -> float:
    # The printed form divides m1 by n2; the symmetric (default) form by n1.
    first = (b.m2 / b.n2) / b.mu_b
    second = (b.m1 / (b.n2 if as_written else b.n1)) / b.mu_a
    return first + second


def _gammas(b: BoundInputs, as_written: bool) -> tuple[float, float]:
    log1 = math.log(2.0 * b.n1 / b.delta)
    log2 = math.log(2.0 * b.n2 / b.delta)
    gamma1 = math.sqrt(8.0 * b.n1 * b.mu_a / (3.0 * b.k1) * log1)
    # The printed gamma2 reuses the row-factor coherence.
    mu2 = b.mu_a if as_written else b.mu_b
    gamma2 = math.sqrt(8.0 * b.n2 * mu2 / (3.0 * b.k2) * log2)
    return gamma1, gamma2


def intersection_params(b: BoundInputs, as_written: bool = False):
    """(alpha, beta, gamma1, gamma2) for the whole-rows/columns regime."""
    log_inv = math.log(1.0 / b.delta)
    alpha = math.sqrt(2.0 * b.mu_y**2 * log_inv / (b.k1 * b.k2))
    beta = math.sqrt(4.0 * b.mu_y * log_inv / _beta_denominator(b, as_written))
    gamma1, gamma2 = _gammas(b, as_written)
    return alpha, beta, gamma1, gamma2


def union_params(b: BoundInputs, as_written: bool = False):
    """(alpha, beta, gamma1, gamma2) for the arbitrary-missing-cells regime."""
    log_inv = math.log(1.0 / b.delta)
    union_cells = b.k1 * b.m2 + b.k2 * b.m1 - b.k1 * b.k2
    alpha = math.sqrt(2.0 * b.mu_y**2 * b.k1 * b.k2 * log_inv / union_cells**2)
    extra = b.m1 / b.k1 + b.m2 / b.k2 - 1.0
    beta = math.sqrt(4.0 * b.mu_y * log_inv / (extra * _beta_denominator(b, as_written)))
    gamma1, gamma2 = _gammas(b, as_written)
    return alpha, beta, gamma1, gamma2


def _check_counts(b: BoundInputs) -> None:
    if not (b.n1 <= b.k1 <= b.m1 and b.n2 <= b.k2 <= b.m2):
        raise DimensionError(
            f"counts ({b.k1}, {b.k2}) must satisfy n <= k <= m with "
            f"n=({b.n1}, {b.n2}), m=({b.m1}, {b.m2})"
        )


def _coherence_term(b: BoundInputs) -> float:
    return b.n1 / b.m1 * b.mu_a + b.n2 / b.m2 * b.mu_b


def _conditions(b: BoundInputs) -> tuple[bool, bool]:
    return (
        b.k1 >= min_samples(b.n1, b.mu_a, b.delta),
        b.k2 >= min_samples(b.n2, b.mu_b, b.delta),
    )


def intersection_bounds(b: BoundInputs, as_written: bool = False) -> BoundReport:
    """Residual-energy envelope for intersection sampling.

    Both sides multiply the full residual energy. When either gamma
    reaches 1 the lower bound degenerates and is reported as -inf rather
    than raised.
    """
    _check_counts(b)
    alpha, beta, gamma1, gamma2 = intersection_params(b, as_written)
    fraction = b.k1 * b.k2 / (b.m1 * b.m2)
    upper = (1.0 + alpha) * fraction * b.full_residual_energy
    if gamma1 < 1.0 and gamma2 < 1.0:
        coeff = (1.0 - alpha) * fraction - (beta + 1.0) ** 2 / (
            2.0 * (1.0 - gamma2) * (1.0 - gamma1)
        ) * _coherence_term(b)
        lower = coeff * b.full_residual_energy
    else:
        lower = -math.inf
    return BoundReport(
        regime=INTERSECTION,
        alpha=alpha, beta=beta, gamma1=gamma1, gamma2=gamma2,
        lower=lower, lower_clamped=max(lower, 0.0),
        upper=upper, upper_residual_scale=upper,
        probability_floor=1.0 - 8.0 * b.delta,
        sample_conditions_met=_conditions(b),
        inputs=b,
    )


def union_bounds(b: BoundInputs, as_written: bool = False) -> BoundReport:
    """Residual-energy envelope for union sampling.

    The lower bound multiplies the full residual energy; the printed upper
    bound multiplies the total signal energy (``upper``), with the
    residual-scaled variant reported alongside.
    """
    _check_counts(b)
    alpha, beta, gamma1, gamma2 = union_params(b, as_written)
    fraction = (b.k1 * b.m2 + b.k2 * b.m1 - b.k1 * b.k2) / (b.m1 * b.m2)
    upper = (1.0 + alpha) * fraction * b.signal_energy
    upper_residual = (1.0 + alpha) * fraction * b.full_residual_energy
    if gamma1 < 1.0 and gamma2 < 1.0:
        coeff = fraction * (
            (1.0 - alpha)
            - (b.m1 * b.m2) * (beta + 1.0) ** 2
            / (2.0 * b.k1 * b.k2 * (1.0 - gamma1) * (1.0 - gamma2))
            * _coherence_term(b)
        )
        lower = coeff * b.full_residual_energy
    else:
        lower = -math.inf
    return BoundReport(
        regime=UNION,
        alpha=alpha, beta=beta, gamma1=gamma1, gamma2=gamma2,
        lower=lower, lower_clamped=max(lower, 0.0),
        upper=upper, upper_residual_scale=upper_residual,
        probability_floor=1.0 - 8.0 * b.delta,
        sample_conditions_met=_conditions(b),
        inputs=b,
    )


def evaluate_bounds(b: BoundInputs, regime: str, as_written: bool = False) -> BoundReport:
    """Dispatch on the regime name ("intersection" or "union")."""
    if regime == INTERSECTION:
        return intersection_bounds(b, as_written)
    if regime == UNION:
        return union_bounds(b, as_written)
    raise DimensionError(f"unknown regime {regime!r}")


def incoherent_lower_bound(m: int, n: int, k: int) -> float:
    """Lower-bound coefficient in the symmetric fully incoherent limit.

    Square case m1 = m2 = m, n1 = n2 = n, k1 = k2 = k with unit coherences
    and vanishing concentration parameters: 2k(m-k)/m^2 * (1 - n m / k^2).
    Nonpositive whenever n*m > k^2, consistent with a residual that can be
    exactly zero below the sampling floor.
    """
    if m < 1 or n < 1 or k < 1:
        raise DimensionError("dimensions must be positive integers")
    return (2.0 * k * (m - k) / m**2) * (1.0 - n * m / k**2)
