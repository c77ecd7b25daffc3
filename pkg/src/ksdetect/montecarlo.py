"""Seeded simulation harness: residual sweeps and expectation checks.

A sweep fixes one random model and one unit-norm signal, then draws fresh
observation patterns at each grid point and aggregates the residual
energies. The union regime draws union-of-rows-and-columns masks, whose
observed-cell counts match the closed-form sampling expectations exactly.

Seed scheme (all derived through rng.derive_seed from the config seed):
stream 0 = row-factor basis, 1 = column-factor basis, 2 = signal,
(3, g, t) = pattern for trial t of grid point g, (4/5, g, t) = the
intersection/union patterns of the expectation validator, (2, g, t) =
per-trial signals when resampling is enabled. Grid points are independent
tasks, so results are identical for any thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext
from dataclasses import dataclass
from enum import Enum

import numpy as np

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # pragma: no cover
    threadpool_limits = None

from . import rng
from .bounds import BoundInputs, intersection_bounds, union_bounds
from .densecore import frobenius_norm_sq
from .detector import NOISELESS_FLOOR, full_residual, residual
from .errors import DimensionError
from .sampling import sample_intersection, sample_union
from .subspace import (
    KSModel,
    Subspace,
    orthogonal_complement,
    random_gaussian_subspace,
    signal_coherence,
)

SWEEP_CSV_HEADER = (
    "k1,k2,k1k2,min,mean,max,positive_fraction,coverage_fraction,"
    "lower,upper,threshold"
)


class SignalCase(str, Enum):
    """Where the sweep signal lives relative to the model span."""

    IN_MODEL = "ind"
    ROW_PERP = "aperpb"
    COL_PERP = "abperp"
    FULL_PERP = "dperp"


class Regime(str, Enum):
    """Which pattern family the sweep draws."""

    INTERSECTION = "intersection"
    UNION = "union"


@dataclass(frozen=True)
class ExperimentConfig:
    m1: int
    m2: int
    n1: int
    n2: int
    k_grid: tuple[tuple[int, int], ...]
    trials: int
    seed: int
    signal_case: SignalCase
    regime: Regime
    delta: float | None = None
    resample_signal: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise DimensionError(f"trials must be positive, got {self.trials}")
        if not self.k_grid:
            raise DimensionError("k_grid must contain at least one point")
        for k1, k2 in self.k_grid:
            if not (1 <= k1 <= self.m1 and 1 <= k2 <= self.m2):
                raise DimensionError(
                    f"grid point ({k1}, {k2}) outside [1, {self.m1}] x [1, {self.m2}]"
                )
        if self.delta is not None and not 0.0 < self.delta < 1.0:
            raise DimensionError(f"delta must lie in (0, 1), got {self.delta}")

    def to_text(self) -> str:
        """Resolved-config sidecar format (key=value lines)."""
        grid = ";".join(f"{k1}x{k2}" for k1, k2 in self.k_grid)
        lines = [
            f"m1={self.m1}",
            f"m2={self.m2}",
            f"n1={self.n1}",
            f"n2={self.n2}",
            f"k_grid={grid}",
            f"trials={self.trials}",
            f"seed={self.seed}",
            f"case={self.signal_case.value}",
            f"regime={self.regime.value}",
            f"delta={'' if self.delta is None else format(self.delta, '.17g')}",
            f"resample_signal={str(self.resample_signal).lower()}",
        ]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class TrialSummary:
    """Aggregated residual energies at one grid point."""

    k1: int
    k2: int
    min: float
    mean: float
    max: float
    positive_fraction: float
    coverage_fraction: float | None
    lower: float | None
    upper: float | None
    undersampled: bool = False


@dataclass(frozen=True)
class IdentityCheck:
    """One Monte Carlo check of a closed-form expectation or bound."""

    name: str
    k1: int
    k2: int
    estimate: float
    target: float
    std_error: float
    kind: str  # "equality" or "upper-bound"
    passed: bool

    @property
    def ratio(self) -> float:
        return self.estimate / self.target if self.target != 0 else math.nan


def default_k_grid(n: int, m: int, step: int = 5) -> tuple[tuple[int, int], ...]:
    """Symmetric grid k1 = k2 in {n, n+step, ..., m}."""
    ks = list(range(n, m + 1, step))
    if ks[-1] != m:
        ks.append(m)
    return tuple((k, k) for k in ks)


def model_for(cfg: ExperimentConfig) -> KSModel:
    """The sweep's fixed model, derived from the config seed."""
    return KSModel(
        row_space=random_gaussian_subspace(cfg.m1, cfg.n1, rng.derive_seed(cfg.seed, 0)),
        col_space=random_gaussian_subspace(cfg.m2, cfg.n2, rng.derive_seed(cfg.seed, 1)),
    )


def make_signal(case: SignalCase, model: KSModel, seed: int) -> np.ndarray:
    """Unit-Frobenius-norm signal in the requested region.

    IN_MODEL multiplies a Gaussian coefficient matrix by both factors;
    ROW_PERP/COL_PERP replace one factor by its orthogonal complement;
    FULL_PERP removes the model projection from a Gaussian matrix, which
    guarantees exact membership in the orthogonal complement of the span.
    """
    gen = rng.make_generator(seed)
    a: Subspace = model.row_space
    b: Subspace = model.col_space
    if case == SignalCase.IN_MODEL:
        x = rng.standard_normals(gen, (a.sub_dim, b.sub_dim))
        y = a.basis @ x @ b.basis.T
    elif case == SignalCase.ROW_PERP:
        a_perp = orthogonal_complement(a)
        x = rng.standard_normals(gen, (a_perp.sub_dim, b.sub_dim))
        y = a_perp.ortho @ x @ b.basis.T
    elif case == SignalCase.COL_PERP:
        b_perp = orthogonal_complement(b)
        x = rng.standard_normals(gen, (a.sub_dim, b_perp.sub_dim))
        y = a.basis @ x @ b_perp.ortho.T
    elif case == SignalCase.FULL_PERP:
        g = rng.standard_normals(gen, model.shape)
        qa, qb = a.ortho, b.ortho
        y = g - qa @ ((qa.T @ g) @ qb) @ qb.T
    else:
        raise DimensionError(f"unknown signal case {case!r}")
    norm = math.sqrt(frobenius_norm_sq(y))
    if norm == 0.0:
        raise DimensionError("generated signal is identically zero")
    return y / norm


def signal_for(cfg: ExperimentConfig, model: KSModel) -> np.ndarray:
    return make_signal(cfg.signal_case, model, rng.derive_seed(cfg.seed, 2))


def positivity_threshold(model: KSModel) -> float:
    """k1*k2 value past which a non-model residual stays positive.

    The product of the per-axis floors n*mu*ln(n) for the two factors.
    """
    a, b = model.row_space, model.col_space
    return (a.sub_dim * a.coherence * math.log(a.sub_dim)) * (
        b.sub_dim * b.coherence * math.log(b.sub_dim)
    )


def _bound_inputs(cfg, model, y, k1, k2):
    return BoundInputs(
        m1=cfg.m1, m2=cfg.m2, n1=cfg.n1, n2=cfg.n2, k1=k1, k2=k2,
        mu_a=model.row_space.coherence,
        mu_b=model.col_space.coherence,
        mu_y=signal_coherence(y),
        delta=cfg.delta,
        full_residual_energy=full_residual(y, model),
        signal_energy=frobenius_norm_sq(y),
    )


def _grid_point(cfg: ExperimentConfig, model: KSModel, y, g: int) -> TrialSummary:
    k1, k2 = cfg.k_grid[g]
    if k1 < cfg.n1 or k2 < cfg.n2:
        return TrialSummary(
            k1, k2, math.nan, math.nan, math.nan, math.nan,
            None, None, None, undersampled=True,
        )

    lower = upper = None
    if cfg.delta is not None and not cfg.resample_signal:
        evaluate = intersection_bounds if cfg.regime == Regime.INTERSECTION else union_bounds
        report = evaluate(_bound_inputs(cfg, model, y, k1, k2))
        lower, upper = max(report.lower, 0.0), report.upper

    energies = np.empty(cfg.trials)
    positive = 0
    covered = 0
    for t in range(cfg.trials):
        if cfg.resample_signal:
            y_t = make_signal(cfg.signal_case, model, rng.derive_seed(cfg.seed, 2, g, t))
        else:
            y_t = y
        pattern_seed = rng.derive_seed(cfg.seed, 3, g, t)
        if cfg.regime == Regime.INTERSECTION:
            pattern = sample_intersection(cfg.m1, cfg.m2, k1, k2, pattern_seed)
        else:
            pattern = sample_union(cfg.m1, cfg.m2, k1, k2, pattern_seed)
        r = residual(y_t, model, pattern)
        energies[t] = r.residual_energy
        if r.residual_energy > NOISELESS_FLOOR * r.observed_energy:
            positive += 1
        if cfg.delta is not None:
            lo, up = lower, upper
            if cfg.resample_signal:
                evaluate = (
                    intersection_bounds if cfg.regime == Regime.INTERSECTION else union_bounds
                )
                rep = evaluate(_bound_inputs(cfg, model, y_t, k1, k2))
                lo, up = max(rep.lower, 0.0), rep.upper
            if lo <= r.residual_energy <= up:
                covered += 1

    return TrialSummary(
        k1=k1, k2=k2,
        min=float(energies.min()),
        mean=float(energies.mean()),
        max=float(energies.max()),
        positive_fraction=positive / cfg.trials,
        coverage_fraction=None if cfg.delta is None else covered / cfg.trials,
        lower=lower,
        upper=upper,
    )


def run_residual_sweep(cfg: ExperimentConfig, threads: int = 1) -> list[TrialSummary]:
    """One summary per grid point, in grid order.

    Grid points whose counts sit below the identifiability floor are
    flagged undersampled instead of aborting the sweep. BLAS pools are
    pinned to one thread per call so the output is byte-identical for any
    ``threads`` value.
    """
    model = model_for(cfg)
    y = signal_for(cfg, model)
    limiter = (
        threadpool_limits(limits=1) if threadpool_limits is not None else nullcontext()
    )
    with limiter:
        if threads <= 1:
            return [_grid_point(cfg, model, y, g) for g in range(len(cfg.k_grid))]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(
                pool.map(lambda g: _grid_point(cfg, model, y, g), range(len(cfg.k_grid)))
            )


def sweep_laws(cfg: ExperimentConfig, model: KSModel, summaries) -> list[tuple[str, bool, str]]:
    """(name, passed, detail) for the qualitative laws a sweep must obey.

    In-model signals must never produce a positive residual; signals with
    any orthogonal factor must always produce one once both counts clear
    their per-axis floors n*mu*ln(n); and when bounds were evaluated the
    coverage at gated points must reach 1 - 8*delta - 0.03.
    """
    a, b = model.row_space, model.col_space
    floor1 = a.sub_dim * a.coherence * math.log(a.sub_dim)
    floor2 = b.sub_dim * b.coherence * math.log(b.sub_dim)
    usable = [s for s in summaries if not s.undersampled]
    gated = [s for s in usable if s.k1 >= floor1 and s.k2 >= floor2]
    laws = []
    if cfg.signal_case == SignalCase.IN_MODEL:
        worst = max((s.positive_fraction for s in usable), default=0.0)
        laws.append((
            "in-model residual stays at zero",
            worst == 0.0,
            f"max positive_fraction={worst:.4g} over {len(usable)} grid points",
        ))
    else:
        worst = min((s.positive_fraction for s in gated), default=1.0)
        laws.append((
            "residual positive past the sampling floor",
            worst == 1.0,
            f"min positive_fraction={worst:.4g} over {len(gated)} gated points",
        ))
    if cfg.delta is not None:
        floor = 1.0 - 8.0 * cfg.delta - 0.03
        coverages = [s.coverage_fraction for s in gated if s.coverage_fraction is not None]
        worst_cov = min(coverages, default=1.0)
        laws.append((
            f"bound coverage >= {floor:.3g}",
            worst_cov >= floor,
            f"min coverage_fraction={worst_cov:.4g} over {len(coverages)} gated points",
        ))
    return laws


def write_sweep_csv(path, summaries, threshold: float) -> None:
    """Sweep CSV with the documented column order (17 significant digits)."""

    def fmt(v):
        if v is None:
            return "nan"
        return f"{v:.17g}"

    with open(path, "w", encoding="ascii") as fh:
        fh.write(SWEEP_CSV_HEADER + "\n")
        for s in summaries:
            fields = [
                str(s.k1), str(s.k2), str(s.k1 * s.k2),
                fmt(s.min), fmt(s.mean), fmt(s.max),
                fmt(s.positive_fraction), fmt(s.coverage_fraction),
                fmt(s.lower), fmt(s.upper), fmt(threshold),
            ]
            fh.write(",".join(fields) + "\n")


def validate_expectations(cfg: ExperimentConfig) -> list[IdentityCheck]:
    """Monte Carlo checks of the sampling-expectation identities.

    At every grid point, for both pattern families: the mean observed
    energy must match its closed form ((k1 k2 / m1 m2) * ||Y||^2 for
    intersections; (k1/m1 + k2/m2 - k1 k2/(m1 m2)) * ||Y||^2 for union
    masks) within 3 standard errors, and the mean squared norm of the
    compressed observation (row factor)^T Y_observed (column factor) must
    stay below its coherence bound. The factor matrices here are the
    orthonormalized bases, which is what the bound presumes.
    """
    model = model_for(cfg)
    y = signal_for(cfg, model)
    energy = frobenius_norm_sq(y)
    qa, qb = model.row_space.ortho, model.col_space.ortho
    mu_a, mu_b = model.row_space.coherence, model.col_space.coherence
    coh_term = cfg.n1 / cfg.m1 * mu_a + cfg.n2 / cfg.m2 * mu_b
    checks = []
    for g, (k1, k2) in enumerate(cfg.k_grid):
        inter_e = np.empty(cfg.trials)
        union_e = np.empty(cfg.trials)
        inter_v = np.empty(cfg.trials)
        union_v = np.empty(cfg.trials)
        for t in range(cfg.trials):
            ip = sample_intersection(cfg.m1, cfg.m2, k1, k2, rng.derive_seed(cfg.seed, 4, g, t))
            up = sample_union(cfg.m1, cfg.m2, k1, k2, rng.derive_seed(cfg.seed, 5, g, t))
            y_i = y[np.ix_(ip.row_indices, ip.col_indices)]
            y_u = np.where(up.mask, y, 0.0)
            inter_e[t] = np.sum(y_i * y_i)
            union_e[t] = np.sum(y_u * y_u)
            vi = qa[ip.row_indices, :].T @ y_i @ qb[ip.col_indices, :]
            vu = qa.T @ y_u @ qb
            inter_v[t] = np.sum(vi * vi)
            union_v[t] = np.sum(vu * vu)

        inter_frac = k1 * k2 / (cfg.m1 * cfg.m2)
        union_frac = k1 / cfg.m1 + k2 / cfg.m2 - inter_frac

        def se(values):
            if cfg.trials < 2:
                return 0.0
            return float(values.std(ddof=1)) / math.sqrt(cfg.trials)

        specs = [
            ("energy-intersection", inter_e, inter_frac * energy, "equality"),
            ("energy-union", union_e, union_frac * energy, "equality"),
            ("coeff-bound-intersection", inter_v, inter_frac / 2.0 * coh_term * energy,
             "upper-bound"),
            ("coeff-bound-union", union_v, union_frac / 2.0 * coh_term * energy,
             "upper-bound"),
        ]
        for name, values, target, kind in specs:
            estimate = float(values.mean())
            err = se(values)
            if kind == "equality":
                passed = abs(estimate - target) <= 3.0 * err + 1e-12 * abs(target)
            else:
                passed = estimate <= target + 3.0 * err + 1e-12 * abs(target)
            checks.append(IdentityCheck(
                name=name, k1=k1, k2=k2, estimate=estimate, target=target,
                std_error=err, kind=kind, passed=passed,
            ))
    return checks


def write_expectation_csv(path, checks) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("identity,k1,k2,estimate,target,std_error,kind,passed\n")
        for c in checks:
            fh.write(
                f"{c.name},{c.k1},{c.k2},{c.estimate:.17g},{c.target:.17g},"
                f"{c.std_error:.17g},{c.kind},{str(c.passed).lower()}\n"
            )
