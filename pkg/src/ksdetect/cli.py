"""Command-line front end.

Subcommands: ``coherence`` (basis coherences and the product rule),
``detect`` (residual test on files), ``bounds`` (closed-form envelopes),
``simulate`` (sweeps and expectation checks). Human-readable output goes
to stdout; machine output (CSV, config sidecar, manifest) goes to files
under the ``--out`` prefix. Every run writes exactly one manifest listing
the resolved parameters, a FNV-1a 64-bit digest of each input file, the
seed, and the tool version.

Exit status: 0 = success (decision H0 for detect), 10 = decision H1,
2 = input error, 3 = numerical failure (rank deficiency, undersampling).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .bounds import (
    BOUND_CSV_COLUMNS,
    INTERSECTION,
    UNION,
    BoundInputs,
    evaluate_bounds,
)
from .densecore import frobenius_norm_sq, kron, read_matrix
from .detector import (
    NOISELESS_FLOOR,
    NoiseModel,
    detect_noiseless,
    detect_noisy,
    full_residual,
    residual,
)
from .errors import (
    DegenerateSignalError,
    DimensionError,
    EmptyComplementError,
    InputFormatError,
    KsdetectError,
    SingularityError,
)
from .montecarlo import (
    ExperimentConfig,
    Regime,
    SignalCase,
    default_k_grid,
    model_for,
    positivity_threshold,
    run_residual_sweep,
    signal_for,
    sweep_laws,
    validate_expectations,
    write_expectation_csv,
    write_sweep_csv,
)
from .sampling import IntersectionPattern, derive_counts, read_pattern
from .subspace import KSModel, Subspace, signal_coherence

EXIT_OK = 0
EXIT_H1 = 10
EXIT_INPUT = 2
EXIT_NUMERIC = 3

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash, used for input-file digests in manifests."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def _digest_file(path: str) -> str:
    with open(path, "rb") as fh:
        return f"{fnv1a64(fh.read()):016x}"


def _write_manifest(out_prefix, subcommand, params, input_files, seed):
    path = f"{out_prefix}.manifest.txt"
    lines = [f"subcommand={subcommand}", f"version={__version__}", f"seed={seed}"]
    for key in sorted(params):
        lines.append(f"param.{key}={params[key]}")
    for name, fpath in input_files:
        lines.append(f"input.{name}={_digest_file(fpath)}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def _parse_int_pair(text: str, flag: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise InputFormatError(f"{flag} expects two comma-separated integers")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise InputFormatError(f"{flag}: not integers: {text!r}") from None


def _parse_index_list(text: str, flag: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise InputFormatError(f"{flag}: not an integer list: {text!r}") from None


def _parse_k_grid(text: str) -> tuple[tuple[int, int], ...]:
    """Grid spec: 'k1xk2;k1xk2;...' pairs, or 'start:stop:step' symmetric."""
    text = text.strip()
    if "x" in text:
        points = []
        for item in text.split(";"):
            a, _, b = item.partition("x")
            try:
                points.append((int(a), int(b)))
            except ValueError:
                raise InputFormatError(f"bad k-grid point: {item!r}") from None
        return tuple(points)
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise InputFormatError("k-grid range must be start:stop:step")
        try:
            start, stop, step = (int(p) for p in parts)
        except ValueError:
            raise InputFormatError(f"bad k-grid range: {text!r}") from None
        ks = list(range(start, stop + 1, step))
        if not ks:
            raise InputFormatError(f"empty k-grid range: {text!r}")
        if ks[-1] != stop:
            ks.append(stop)
        return tuple((k, k) for k in ks)
    try:
        k = int(text)
    except ValueError:
        raise InputFormatError(f"bad k-grid: {text!r}") from None
    return ((k, k),)


def _load_subspace(path: str) -> Subspace:
    return Subspace(read_matrix(path))


# ---------------------------------------------------------------- coherence

def cmd_coherence(args) -> int:
    inputs = [("basis", args.basis)]
    s1 = _load_subspace(args.basis)
    print(f"mu({args.basis}) = {s1.coherence:.17g}")
    params = {"basis": args.basis}
    if args.basis2 is not None:
        inputs.append(("basis2", args.basis2))
        params["basis2"] = args.basis2
        s2 = _load_subspace(args.basis2)
        print(f"mu({args.basis2}) = {s2.coherence:.17g}")
        product = s1.coherence * s2.coherence
        print(f"mu(product-span) = {product:.17g}")
        ambient = s1.ambient_dim * s2.ambient_dim
        if ambient <= 10_000:
            direct = Subspace(kron(s1.basis, s2.basis)).coherence
            print(f"mu(product-span, direct) = {direct:.17g}")
            print(f"product-rule deviation = {abs(product - direct):.17g}")
        else:
            print("direct cross-check skipped (ambient product too large)")
    _write_manifest(args.out, "coherence", params, inputs, seed="none")
    return EXIT_OK


# ------------------------------------------------------------------- detect

def _pattern_from_args(args, dims):
    if args.mask is not None:
        return read_pattern(args.mask, dims), [("mask", args.mask)]
    if args.rows is None or args.cols is None:
        raise InputFormatError("provide either --mask or both --rows and --cols")
    rows = _parse_index_list(args.rows, "--rows")
    cols = _parse_index_list(args.cols, "--cols")
    return IntersectionPattern(np.array(rows), np.array(cols), dims), []


def cmd_detect(args) -> int:
    y = read_matrix(args.signal)
    model = KSModel(
        row_space=_load_subspace(args.basis_a),
        col_space=_load_subspace(args.basis_b),
    )
    pattern, extra_inputs = _pattern_from_args(args, y.shape)
    r = residual(y, model, pattern)

    if args.noisy:
        noise = NoiseModel(variance=args.variance)
        eta = args.eta
        if eta is None:
            eta = NOISELESS_FLOOR * r.observed_energy / noise.variance
        outcome = detect_noisy(y, model, pattern, eta, noise)
    else:
        outcome = detect_noiseless(r, args.eta)

    c = r.counts
    print(f"statistic = {outcome.statistic:.17g}")
    print(f"eta = {outcome.eta:.17g}")
    print(f"decision = {outcome.decision}")
    print(f"k1 = {c.k1}")
    print(f"k2 = {c.k2}")
    print(f"observed_cells = {c.observed_cells}")
    print(f"residual_energy = {r.residual_energy:.17g}")
    print(f"observed_energy = {r.observed_energy:.17g}")
    print(f"full_residual_energy = {r.full_residual_energy:.17g}")
    if c.cells_diverge:
        print(
            f"note: observed_cells={c.observed_cells} diverges >10% from the "
            f"union count {c.union_cells} implied by (k1, k2)"
        )

    if args.delta is not None:
        regime = INTERSECTION if isinstance(pattern, IntersectionPattern) else UNION
        inputs = BoundInputs(
            m1=y.shape[0], m2=y.shape[1],
            n1=model.row_space.sub_dim, n2=model.col_space.sub_dim,
            k1=c.k1, k2=c.k2,
            mu_a=model.row_space.coherence,
            mu_b=model.col_space.coherence,
            mu_y=signal_coherence(y),
            delta=args.delta,
            full_residual_energy=r.full_residual_energy,
            signal_energy=frobenius_norm_sq(y),
        )
        report = evaluate_bounds(inputs, regime, as_written=args.as_written)
        print(report.to_kv_text())
        with open(f"{args.out}.bounds.csv", "w", encoding="ascii") as fh:
            fh.write(BOUND_CSV_COLUMNS + "\n" + report.to_csv_row() + "\n")

    params = {
        "signal": args.signal, "basis_a": args.basis_a, "basis_b": args.basis_b,
        "eta": "floor" if args.eta is None else format(args.eta, ".17g"),
        "noisy": str(args.noisy).lower(),
        "variance": format(args.variance, ".17g"),
        "delta": "none" if args.delta is None else format(args.delta, ".17g"),
        "as_written": str(args.as_written).lower(),
        "rows": args.rows or "none", "cols": args.cols or "none",
        "mask": args.mask or "none",
    }
    input_files = [
        ("signal", args.signal), ("basis_a", args.basis_a), ("basis_b", args.basis_b),
    ] + extra_inputs
    _write_manifest(args.out, "detect", params, input_files, seed="none")
    return EXIT_OK if outcome.decision == "H0" else EXIT_H1


# ------------------------------------------------------------------- bounds

def cmd_bounds(args) -> int:
    input_files = []
    if args.from_files is not None:
        signal_path, a_path, b_path = args.from_files
        y = read_matrix(signal_path)
        model = KSModel(
            row_space=_load_subspace(a_path),
            col_space=_load_subspace(b_path),
        )
        if y.shape != model.shape:
            raise DimensionError(
                f"signal shape {y.shape} does not match bases {model.shape}"
            )
        k1, k2 = _parse_int_pair(args.counts, "--counts")
        inputs = BoundInputs(
            m1=y.shape[0], m2=y.shape[1],
            n1=model.row_space.sub_dim, n2=model.col_space.sub_dim,
            k1=k1, k2=k2,
            mu_a=model.row_space.coherence,
            mu_b=model.col_space.coherence,
            mu_y=signal_coherence(y),
            delta=args.delta,
            full_residual_energy=full_residual(y, model),
            signal_energy=frobenius_norm_sq(y),
        )
        input_files = [("signal", signal_path), ("basis_a", a_path), ("basis_b", b_path)]
    else:
        if args.dims is None or args.subdims is None or args.counts is None:
            raise InputFormatError(
                "provide --dims, --subdims and --counts (or --from-files)"
            )
        m1, m2 = _parse_int_pair(args.dims, "--dims")
        n1, n2 = _parse_int_pair(args.subdims, "--subdims")
        k1, k2 = _parse_int_pair(args.counts, "--counts")
        mus = [float(v) for v in args.mu.split(",")] if args.mu else [1.0, 1.0]
        if len(mus) == 2:
            mus.append(1.0)
        if len(mus) != 3:
            raise InputFormatError("--mu expects MU_A,MU_B or MU_A,MU_B,MU_Y")
        energies = (
            [float(v) for v in args.energies.split(",")] if args.energies else [1.0, 1.0]
        )
        if len(energies) != 2:
            raise InputFormatError("--energies expects FULL_RESIDUAL,SIGNAL")
        inputs = BoundInputs(
            m1=m1, m2=m2, n1=n1, n2=n2, k1=k1, k2=k2,
            mu_a=mus[0], mu_b=mus[1], mu_y=mus[2],
            delta=args.delta,
            full_residual_energy=energies[0], signal_energy=energies[1],
        )
    report = evaluate_bounds(inputs, args.regime, as_written=args.as_written)
    print(report.to_kv_text())
    with open(f"{args.out}.csv", "w", encoding="ascii") as fh:
        fh.write(BOUND_CSV_COLUMNS + "\n" + report.to_csv_row() + "\n")
    params = {
        "regime": args.regime,
        "delta": format(args.delta, ".17g"),
        "as_written": str(args.as_written).lower(),
        "counts": args.counts,
    }
    if args.from_files is None:
        params.update({"dims": args.dims, "subdims": args.subdims,
                       "mu": args.mu or "1,1,1",
                       "energies": args.energies or "1,1"})
    _write_manifest(args.out, "bounds", params, input_files, seed="none")
    return EXIT_OK


# ----------------------------------------------------------------- simulate

_PRESETS = {
    # paper-scale sweep profile and a quick desk-scale profile
    "full": {"m1": 100, "m2": 100, "n1": 10, "n2": 10, "trials": 1000},
    "fast": {"m1": 40, "m2": 40, "n1": 5, "n2": 5, "trials": 200},
}


def _read_config_file(path: str) -> dict:
    values = {}
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise InputFormatError(f"{path}: line {lineno}: expected key=value")
            values[key.strip()] = value.strip()
    return values


def _config_from_args(args) -> ExperimentConfig:
    base: dict = {}
    if args.preset is not None:
        base.update(_PRESETS[args.preset])
    if args.config is not None:
        raw = _read_config_file(args.config)
        known = {"m1", "m2", "n1", "n2", "k_grid", "trials", "seed", "case",
                 "regime", "delta", "resample_signal"}
        unknown = set(raw) - known
        if unknown:
            raise InputFormatError(
                f"{args.config}: unknown config keys: {', '.join(sorted(unknown))}"
            )
        for key in ("m1", "m2", "n1", "n2", "trials", "seed"):
            if key in raw:
                try:
                    base[key] = int(raw[key])
                except ValueError:
                    raise InputFormatError(f"{args.config}: {key} must be an integer") from None
        if "k_grid" in raw:
            base["k_grid"] = _parse_k_grid(raw["k_grid"])
        if "case" in raw:
            base["case"] = raw["case"]
        if "regime" in raw:
            base["regime"] = raw["regime"]
        if "delta" in raw and raw["delta"]:
            try:
                base["delta"] = float(raw["delta"])
            except ValueError:
                raise InputFormatError(f"{args.config}: delta must be a number") from None
        if "resample_signal" in raw:
            base["resample_signal"] = raw["resample_signal"] == "true"

    for key in ("m1", "m2", "n1", "n2", "trials"):
        flag = getattr(args, key)
        if flag is not None:
            base[key] = flag
    if args.k_grid is not None:
        base["k_grid"] = _parse_k_grid(args.k_grid)
    if args.case is not None:
        base["case"] = args.case
    if args.regime is not None:
        base["regime"] = args.regime
    if args.delta is not None:
        base["delta"] = args.delta
    if args.seed is not None:
        base["seed"] = args.seed
    if args.resample_signal:
        base["resample_signal"] = True

    required = ("m1", "m2", "n1", "n2")
    missing = [k for k in required if k not in base]
    if missing:
        raise InputFormatError(f"missing simulate parameters: {', '.join(missing)}")
    base.setdefault("trials", 100)
    base.setdefault("seed", 0)
    base.setdefault("case", SignalCase.FULL_PERP.value)
    base.setdefault("regime", Regime.UNION.value)
    if "k_grid" not in base:
        base["k_grid"] = default_k_grid(max(base["n1"], base["n2"]),
                                        min(base["m1"], base["m2"]))
    try:
        case = SignalCase(base["case"])
    except ValueError:
        raise InputFormatError(
            f"unknown case {base['case']!r}; choose from "
            f"{', '.join(c.value for c in SignalCase)}"
        ) from None
    try:
        regime = Regime(base["regime"])
    except ValueError:
        raise InputFormatError(
            f"unknown regime {base['regime']!r}; choose intersection or union"
        ) from None
    return ExperimentConfig(
        m1=base["m1"], m2=base["m2"], n1=base["n1"], n2=base["n2"],
        k_grid=tuple(base["k_grid"]), trials=base["trials"], seed=base["seed"],
        signal_case=case, regime=regime, delta=base.get("delta"),
        resample_signal=base.get("resample_signal", False),
    )


def cmd_simulate(args) -> int:
    cfg = _config_from_args(args)
    input_files = [("config", args.config)] if args.config else []
    with open(f"{args.out}.config.txt", "w", encoding="ascii") as fh:
        fh.write(cfg.to_text())

    if args.validate_expectations:
        checks = validate_expectations(cfg)
        write_expectation_csv(f"{args.out}.expectations.csv", checks)
        for c in checks:
            status = "PASS" if c.passed else "FAIL"
            print(
                f"{status} {c.name} k=({c.k1},{c.k2}): estimate={c.estimate:.6g} "
                f"target={c.target:.6g} se={c.std_error:.3g}"
            )
    else:
        model = model_for(cfg)
        summaries = run_residual_sweep(cfg, threads=args.threads)
        write_sweep_csv(f"{args.out}.csv", summaries, positivity_threshold(model))
        for name, passed, detail in sweep_laws(cfg, model, summaries):
            print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")

    params = {
        "m1": cfg.m1, "m2": cfg.m2, "n1": cfg.n1, "n2": cfg.n2,
        "k_grid": ";".join(f"{a}x{b}" for a, b in cfg.k_grid),
        "trials": cfg.trials,
        "case": cfg.signal_case.value, "regime": cfg.regime.value,
        "delta": "none" if cfg.delta is None else format(cfg.delta, ".17g"),
        "resample_signal": str(cfg.resample_signal).lower(),
        "validate_expectations": str(args.validate_expectations).lower(),
        "threads": args.threads,
    }
    _write_manifest(args.out, "simulate", params, input_files, seed=cfg.seed)
    return EXIT_OK


# -------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ksdetect",
        description=(
            "Detect whether a partially observed 2-D signal lies in a "
            "Kronecker-structured subspace."
        ),
    )
    parser.add_argument("--version", action="version", version=f"ksdetect {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("coherence", help="coherence of one or two basis files")
    p.add_argument("basis", help="CSV basis matrix")
    p.add_argument("basis2", nargs="?", default=None,
                   help="second basis; also reports the product rule")
    p.add_argument("--out", default="ks-coherence", help="output file prefix")
    p.set_defaults(func=cmd_coherence)

    p = sub.add_parser("detect", help="residual test for a signal against a model")
    p.add_argument("signal", help="CSV signal matrix")
    p.add_argument("basis_a", help="CSV row-factor basis (m1 x n1)")
    p.add_argument("basis_b", help="CSV column-factor basis (m2 x n2)")
    p.add_argument("--mask", default=None, help="0/1 CSV mask of observed cells")
    p.add_argument("--rows", default=None, help="observed row indices, comma-separated")
    p.add_argument("--cols", default=None, help="observed column indices, comma-separated")
    p.add_argument("--eta", type=float, default=None,
                   help="decision threshold (default: noiseless floor)")
    p.add_argument("--noisy", action="store_true", help="treat the signal as noisy")
    p.add_argument("--variance", type=float, default=1.0, help="noise variance")
    p.add_argument("--delta", type=float, default=None,
                   help="also evaluate the bound envelope at this delta")
    p.add_argument("--as-written", dest="as_written", action="store_true",
                   help="use the verbatim (uncorrected) bound formulas")
    p.add_argument("--out", default="ks-detect", help="output file prefix")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("bounds", help="closed-form residual-energy envelope")
    p.add_argument("--dims", default=None, help="M1,M2 ambient dimensions")
    p.add_argument("--subdims", default=None, help="N1,N2 subspace dimensions")
    p.add_argument("--counts", default=None, help="K1,K2 observed counts")
    p.add_argument("--mu", default=None, help="MU_A,MU_B[,MU_Y] coherences")
    p.add_argument("--energies", default=None,
                   help="FULL_RESIDUAL,SIGNAL energies (default 1,1)")
    p.add_argument("--from-files", nargs=3, metavar=("SIGNAL", "BASIS_A", "BASIS_B"),
                   default=None, help="derive dimensions/coherences/energies from files")
    p.add_argument("--delta", type=float, required=True, help="confidence parameter")
    p.add_argument("--regime", choices=[INTERSECTION, UNION], default=INTERSECTION)
    p.add_argument("--as-written", dest="as_written", action="store_true",
                   help="use the verbatim (uncorrected) bound formulas")
    p.add_argument("--out", default="ks-bounds", help="output file prefix")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("simulate", help="residual sweep or expectation checks")
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--preset", choices=sorted(_PRESETS), default=None,
                   help="parameter profile: full (100x100, 1000 trials) or "
                        "fast (40x40, 200 trials)")
    p.add_argument("--m1", type=int, default=None)
    p.add_argument("--m2", type=int, default=None)
    p.add_argument("--n1", type=int, default=None)
    p.add_argument("--n2", type=int, default=None)
    p.add_argument("--k-grid", dest="k_grid", default=None,
                   help="'k1xk2;...' pairs or 'start:stop:step' symmetric range")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--case", default=None,
                   help="signal location: ind, aperpb, abperp, dperp")
    p.add_argument("--regime", choices=[r.value for r in Regime], default=None)
    p.add_argument("--delta", type=float, default=None,
                   help="evaluate bound coverage at this delta")
    p.add_argument("--resample-signal", dest="resample_signal", action="store_true",
                   help="draw a fresh signal every trial")
    p.add_argument("--validate-expectations", dest="validate_expectations",
                   action="store_true",
                   help="run the sampling-expectation checks instead of a sweep")
    p.add_argument("--seed", type=int, default=None, help="root seed (default 0)")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads for grid points (output-invariant)")
    p.add_argument("--out", default="ks-simulate", help="output file prefix")
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputFormatError, DimensionError, DegenerateSignalError,
            EmptyComplementError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SingularityError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except KsdetectError as exc:  # any remaining package error is input-ish
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
