"""Command line interface.

::

    eqzero <basis|scaling-curves|montecarlo|asymptotics>
        --domain <file|disk|ellipse:<m>|perturbed:<eps>> --weight <spec>
        --degree <N> --quad <M> --trials <T> --seed <u64> --out <dir>
        [--extended-precision] [--workers <k>]

Domain files are YAML (JSON is accepted as a subset) with the keys::

    c: 1.0                  # positive real, coefficient of w
    c0: [0.0, 0.0]          # constant term as [re, im]
    tail: [[0.5, 0.0]]      # c_1, c_2, ... as [re, im] pairs (coefficients of w^-k)
    weight: constant:1      # constant:<v> or exp_cos:<amplitude>
    label: my-ellipse

Unknown keys are rejected.  ``--weight`` overrides the file's weight.

Exit status: 0 success, 2 configuration error, 3 numerical breakdown,
4 insufficient statistics.
"""
from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import domain as dom
from . import ensemble as ens
from . import orthopoly as op
from . import scaling as sc
from .errors import ConfigError, EqzeroError, InsufficientStatistics, NumericalError
from .output import line_plots, version_string, write_csv, write_json

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_STATISTICS = 4

SZEGO_FIT_START = 5
DOMAIN_FILE_SUFFIXES = (".yaml", ".yml", ".json")


@dataclass
class RunConfig:
    command: str
    domain: str = "disk"
    weight: Optional[str] = None
    degree: int = 20
    quad: Optional[int] = None
    trials: int = 200
    seed: int = 0
    out: str = "results"
    extended_precision: bool = False
    workers: int = 1
    knobs: dict = field(default_factory=dict)


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _int_list(text: str):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}") from None


def _float_list(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--domain", default="disk", help="domain file, or disk | ellipse:<m> | perturbed:<eps>")
    common.add_argument("--weight", default=None, help="constant:<v> or exp_cos:<amplitude>")
    common.add_argument("--degree", type=int, default=20, help="polynomial degree N (at most 60 without --extended-precision)")
    common.add_argument("--quad", type=int, default=None, help="boundary quadrature nodes M")
    common.add_argument("--trials", type=int, default=200)
    common.add_argument("--seed", type=int, default=0, help="unsigned 64-bit master seed")
    common.add_argument("--out", default="results", help="output directory")
    common.add_argument("--extended-precision", action="store_true")
    common.add_argument("--workers", type=int, default=1)

    parser = argparse.ArgumentParser(prog="eqzero", description="Zeros of random orthonormal polynomials on plane domains.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("basis", parents=[common], help="orthonormal basis coefficients and Gram residual")
    p.add_argument("--inner-product", choices=[op.BOUNDARY, op.INTERIOR], default=op.BOUNDARY)

    p = sub.add_parser("scaling-curves", parents=[common], help="tabulate the universal scaling limits")
    p.add_argument("--tangential-range", type=float, nargs=2, default=[0.0, 20.0], metavar=("LO", "HI"))
    p.add_argument("--normal-range", type=float, nargs=2, default=[0.0, 10.0], metavar=("LO", "HI"))
    p.add_argument("--density-range", type=float, nargs=2, default=[-5.0, 5.0], metavar=("LO", "HI"))
    p.add_argument("--step", type=float, default=1e-3)

    p = sub.add_parser("montecarlo", parents=[common], help="Monte Carlo experiments on zeros")
    p.add_argument("--experiment", choices=["density", "correlation", "variance"], default="density")
    p.add_argument("--bins", type=int, default=32)
    p.add_argument("--n-list", type=_int_list, default=[8, 16, 32, 64])
    p.add_argument("--kind", choices=[ens.TANGENTIAL, ens.NORMAL], default=ens.TANGENTIAL)
    p.add_argument("--separations", type=_float_list, default=None)
    p.add_argument("--window-half-width", type=float, default=0.4)
    p.add_argument("--bin-half-width", type=float, default=0.25)
    p.add_argument("--tolerance", type=float, default=0.15, help="relative tolerance against the limit curve")

    p = sub.add_parser("asymptotics", parents=[common], help="Szego, Carleman and scaled-kernel convergence")
    p.add_argument("--point", type=_complex, default=2.0 + 0j, help="exterior point for the polynomial asymptotics")
    p.add_argument("--n-list", type=_int_list, default=[20, 40, 80, 160])
    p.add_argument("--zeta1", type=_complex, default=1 + 1j)
    p.add_argument("--zeta2", type=_complex, default=0.5 + 0j)
    return parser


def make_config(args: argparse.Namespace) -> RunConfig:
    """Validate parsed arguments; raises :class:`ConfigError`."""
    base = {f for f in RunConfig.__dataclass_fields__ if f not in ("command", "knobs")}
    values = vars(args)
    cfg = RunConfig(command=args.command, **{k: values[k] for k in base})
    cfg.knobs = {k: v for k, v in values.items() if k not in base and k != "command"}
    if cfg.degree < 1:
        raise ConfigError(f"--degree: must be positive, got {cfg.degree}")
    if cfg.degree > op.MAX_STANDARD_DEGREE and not cfg.extended_precision:
        raise ConfigError(f"--degree: {cfg.degree} exceeds {op.MAX_STANDARD_DEGREE}; pass --extended-precision")
    for name in ("trials", "workers"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"--{name}: must be positive, got {getattr(cfg, name)}")
    if cfg.quad is not None and cfg.quad < 1:
        raise ConfigError(f"--quad: must be positive, got {cfg.quad}")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError(f"--seed: must be an unsigned 64-bit integer, got {cfg.seed}")
    k = cfg.knobs
    if k.get("bins", 1) < 1:
        raise ConfigError(f"--bins: must be positive, got {k['bins']}")
    if k.get("step", 1.0) <= 0:
        raise ConfigError(f"--step: must be positive, got {k['step']}")
    for name in ("window_half_width", "bin_half_width", "tolerance"):
        if name in k and not k[name] > 0:
            raise ConfigError(f"--{name.replace('_', '-')}: must be positive, got {k[name]}")
    if "n_list" in k and (not k["n_list"] or min(k["n_list"]) < 1):
        raise ConfigError("--n-list: needs at least one positive integer")
    return cfg


def resolve_domain(cfg: RunConfig):
    """``(DomainSpec, WeightSpec)`` from ``--domain`` and ``--weight``."""
    path = Path(cfg.domain)
    if path.exists() or path.suffix in DOMAIN_FILE_SUFFIXES:
        domain, weight = dom.load_domain_file(path)
    else:
        domain, weight = dom.builtin_domain(cfg.domain), dom.constant_weight(1.0)
    if cfg.weight is not None:
        weight = dom.parse_weight(cfg.weight)
    return domain, weight


def _grid(lo: float, hi: float, step: float):
    n = int(math.floor((hi - lo) / step + 1e-9))
    return [round(lo + k * step, 12) for k in range(n + 1)]


def _fit_slope(x, y) -> Optional[float]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = y > 0
    if np.count_nonzero(ok) < 2:
        return None
    return float(np.polyfit(x[ok], np.log(y[ok]), 1)[0])


# commands ---------------------------------------------------------------------


def cmd_basis(cfg: RunConfig, out: Path) -> dict:
    domain, weight = resolve_domain(cfg)
    N = cfg.degree
    if cfg.knobs.get("inner_product", op.BOUNDARY) == op.INTERIOR:
        basis = op.build_interior_basis(domain, N, cfg.quad, cfg.extended_precision)
        residual = op.gram_residual(basis, domain)
    else:
        basis = op.build_boundary_basis(domain, weight, N, cfg.quad, cfg.extended_precision)
        residual = op.gram_residual(basis, domain, weight)
    C = basis.monomial_matrix
    cols = ["j"] + [f"{part}_{k}" for k in range(N + 1) for part in ("re", "im")]
    rows = [[j] + [v for k in range(N + 1) for v in (C[j, k].real, C[j, k].imag)] for j in range(N + 1)]
    write_csv(out / "basis.csv", cols, rows, "coefficient of z^k in P_j (dimensionless)")
    write_json(out / "gram_residual.json", {"gram_residual": residual, "N": N, "pass": residual < 1e-8})
    return {"gram_residual": residual, "quadrature": basis.quad_provenance, "domain": domain.describe()}


def cmd_scaling_curves(cfg: RunConfig, out: Path) -> dict:
    k = cfg.knobs
    results = {}
    for kind, rng, name, title, xlabel in (
        (sc.TANGENTIAL, k["tangential_range"], "kappa_tangential", "tangential pair correlation", "alpha"),
        (sc.NORMAL, k["normal_range"], "kappa_normal", "normal pair correlation", "tau"),
    ):
        grid = _grid(*rng, k["step"])
        table = sc.kappa_curves(kind, grid)
        write_csv(out / f"{name}.csv", ["separation", "value"], table, "scaled separation, dimensionless correlation")
        xs, ys = zip(*table)
        line_plots(out / name, [(xs, ys, name)], title, xlabel, "K")
        results[name] = {"rows": len(table)}
    grid = _grid(*k["density_range"], k["step"])
    dvals = sc.d_infinity(np.array(grid))
    write_csv(out / "d_infinity.csv", ["separation", "value"], zip(grid, dvals), "scaled normal distance, zeros per unit scaled area")
    line_plots(out / "d_infinity", [(grid, dvals, "D_inf")], "scaled zero density", "tau", "D")
    results["d_infinity"] = {"rows": len(grid), "value_at_0": float(sc.d_infinity(0.0)), "expected_at_0": 1 / (12 * math.pi)}
    return results


def _mc_density(cfg, out, domain, weight):
    basis = op.build_boundary_basis(domain, weight, cfg.degree, cfg.quad, cfg.extended_precision)
    s = ens.montecarlo_density(basis, domain, cfg.trials, cfg.knobs["bins"], cfg.seed, cfg.workers)
    e = s.angular_edges
    write_csv(out / "density_hist.csv", ["bin_lo", "bin_hi", "count"], zip(e[:-1], e[1:], s.angular_histogram), "angle of Phi(zero) in radians, zero count")
    r = s.radial_edges
    write_csv(out / "radial_hist.csv", ["bin_lo", "bin_hi", "count"], zip(r[:-1], r[1:], s.radial_histogram), "|Phi(zero)| - 1, zero count")
    mid = 0.5 * (e[:-1] + e[1:])
    dens = s.angular_histogram / max(s.total, 1) / np.diff(e)
    line_plots(out / "density_hist", [(mid, dens, "empirical"), (mid, np.full(mid.shape, 1 / (2 * math.pi)), "uniform")], "angular distribution of zeros", "arg Phi", "density")
    return {
        "ks_angle": s.ks_angle,
        "ks_critical": s.ks_critical,
        "ks_pass": s.ks_angle < s.ks_critical,
        "chi2_pvalue": s.chi2_pvalue,
        "fraction_near_boundary": s.fraction_near_boundary,
        "near_boundary_pass": s.fraction_near_boundary >= 0.9,
        "outside_collar": s.outside_collar,
        "zeros_binned": s.total,
        "resampled": s.resampled,
    }


def _mc_variance(cfg, out, domain, weight):
    n_list = cfg.knobs["n_list"]
    table = ens.variance_experiment(domain, weight, ens.default_test_function, n_list, cfg.trials, cfg.seed, cfg.workers)
    write_csv(out / "variance.csv", ["N", "variance"], table, "degree, variance of the linear statistic")
    Ns, var = zip(*table)
    slope = ens.loglog_slope(Ns, var)
    line_plots(out / "variance", [(np.log10(Ns), var, "sample variance")], "variance of (1/N) sum phi(zero)", "log10 N", "variance", logy=True)
    return {"slope": slope, "slope_pass": -2.6 <= slope <= -1.4}


def _mc_correlation(cfg, out, domain, weight):
    k = cfg.knobs
    seps = k["separations"] or ([2.0, math.pi, 6.0] if k["kind"] == ens.TANGENTIAL else [0.5, 1.0, 2.0])
    window = ens.PairWindow(k["kind"], tuple(seps), k["window_half_width"], k["bin_half_width"])
    basis = op.build_boundary_basis(domain, weight, cfg.degree, cfg.quad, cfg.extended_precision)
    est = ens.montecarlo_pair_correlation(basis, domain, cfg.trials, window, cfg.seed, cfg.workers)
    exact = [sc.kappa(k["kind"], s) for s in seps]
    rows = list(zip(est.separations, est.values, exact, est.pair_counts, est.stderr))
    write_csv(out / "pair_correlation.csv", ["separation", "value", "closed_form", "pair_count", "stderr"], rows, "scaled separation, dimensionless correlation")
    rel = [abs(v / e - 1) for v, e in zip(est.values, exact)]
    grid = np.linspace(0.05, max(seps) * 1.2, 200)
    line_plots(
        out / "pair_correlation",
        [(grid, [sc.kappa(k["kind"], g) for g in grid], "limit"), (est.separations, est.values, "Monte Carlo")],
        f"{k['kind']} pair correlation",
        "separation",
        "K",
    )
    return {
        "relative_error": dict(zip(map(str, seps), rel)),
        "pass": all(r <= k["tolerance"] for r in rel),
        "outside_collar": est.outside_collar,
    }


def cmd_montecarlo(cfg: RunConfig, out: Path) -> dict:
    domain, weight = resolve_domain(cfg)
    experiment = cfg.knobs["experiment"]
    handler = {"density": _mc_density, "variance": _mc_variance, "correlation": _mc_correlation}[experiment]
    return {"experiment": experiment, **handler(cfg, out, domain, weight)}


def cmd_asymptotics(cfg: RunConfig, out: Path) -> dict:
    domain, weight = resolve_domain(cfg)
    N = cfg.degree
    z = cfg.knobs["point"]
    outer = dom.outer_function(domain, weight)

    basis = op.build_boundary_basis(domain, weight, N, cfg.quad, cfg.extended_precision)
    P = op.eval_basis(basis, z)
    ns = np.arange(N + 1)
    szego = np.abs(P - op.szego_prediction(domain, outer, ns, z))
    write_csv(out / "szego_error.csv", ["n", "abs_error"], zip(ns, szego), "degree, absolute error")

    ibasis = op.build_interior_basis(domain, N, None, cfg.extended_precision)
    Q = op.eval_basis(ibasis, z)
    carleman = np.abs(Q - np.array([op.carleman_prediction(domain, n, z) for n in ns]))
    write_csv(out / "carleman_error.csv", ["n", "abs_error"], zip(ns, carleman), "degree, absolute error")

    n_list = cfg.knobs["n_list"]
    kern = sc.scaled_kernel_convergence(domain, weight, n_list, cfg.knobs["zeta1"], cfg.knobs["zeta2"])
    write_csv(out / "kernel_scaling.csv", ["N", "abs_error"], kern, "degree, absolute error")

    line_plots(out / "szego_error", [(ns, szego, "Szego"), (ns, carleman, "Carleman")], "polynomial asymptotics", "n", "|P_n - prediction|", logy=True)
    Ks, kerr = zip(*kern)
    line_plots(out / "kernel_scaling", [(np.log10(Ks), kerr, "scaled kernel")], "scaled kernel error", "log10 N", "error", logy=True)
    fit = ns >= SZEGO_FIT_START
    return {
        "point": z,
        "szego_rate": _fit_slope(ns[fit], szego[fit]),
        "carleman_rate": _fit_slope(ns[fit], carleman[fit]),
        "kernel_loglog_slope": ens.loglog_slope(Ks, kerr),
    }


COMMANDS = {
    "basis": cmd_basis,
    "scaling-curves": cmd_scaling_curves,
    "montecarlo": cmd_montecarlo,
    "asymptotics": cmd_asymptotics,
}


def run(cfg: RunConfig) -> dict:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    results = COMMANDS[cfg.command](cfg, out)
    summary = {
        "version": version_string(),
        "config": asdict(cfg),
        "results": results,
        "timings": {"wall_seconds": time.perf_counter() - t0},
    }
    write_json(out / "summary.json", summary)
    return summary


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        summary = run(make_config(args))
    except InsufficientStatistics as exc:
        print(f"eqzero: insufficient statistics: {exc}", file=sys.stderr)
        return EXIT_STATISTICS
    except NumericalError as exc:
        print(f"eqzero: numerical breakdown: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (EqzeroError, ValueError) as exc:
        print(f"eqzero: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"eqzero {summary['config']['command']}: wrote {summary['config']['out']}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
