"""Gaussian random polynomials in an orthonormal basis and their zeros.

A random polynomial is ``f = sum_j a_j P_j`` with ``a_j`` i.i.d. standard
complex normal.  Each Monte Carlo trial draws from its own generator, derived
from ``(seed, trial index)``, so results do not depend on how trials are
split across workers.

All densities here are with respect to Lebesgue measure ``dx dy``.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats
from scipy.special import bernoulli

from .domain import DomainSpec, WeightSpec, exterior_map_partial
from .errors import GridTooCoarse, InsufficientStatistics, NonConvergence
from .numerics import DEFAULT_ROOT_TOL, MonomialPolynomial, scaled_residual
from .orthopoly import OrthonormalBasis, basis_roots, build_boundary_basis, eval_basis

DEGENERATE_LEAD = 1e-14
MIN_NORMALIZATION_COUNT = 10
_CHUNK = 256


# --------------------------------------------------------------------------
# sampling


def trial_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based generator for trial ``index`` of a run seeded with ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


def sample_coefficients(N: int, rng: np.random.Generator) -> np.ndarray:
    """``N+1`` i.i.d. standard complex Gaussians (real and imaginary variance 1/2)."""
    g = rng.standard_normal(2 * (N + 1))
    return (g[: N + 1] + 1j * g[N + 1 :]) * math.sqrt(0.5)


@dataclass(frozen=True)
class PolynomialSample:
    coefficients: np.ndarray
    monomial: MonomialPolynomial
    zeros: np.ndarray
    seed_record: dict = field(default_factory=dict)


def _draw(basis: OrthonormalBasis, rng: np.random.Generator):
    """Coefficients with a non-degenerate leading monomial term, and the resample count."""
    lead = basis.monomial_matrix[-1, -1]
    a = sample_coefficients(basis.degree, rng)
    resampled = 0
    if abs(a[-1] * lead) < DEGENERATE_LEAD:
        a = sample_coefficients(basis.degree, rng)
        resampled = 1
    return a, resampled


def _checked_roots(basis: OrthonormalBasis, A: np.ndarray, tol: float = DEFAULT_ROOT_TOL):
    roots, _ = basis_roots(basis, A)
    res = scaled_residual(A @ basis.monomial_matrix, roots)
    bad = np.flatnonzero(~np.all(res < tol, axis=1))
    if bad.size:
        raise NonConvergence(f"{bad.size} polynomial(s) have roots failing the residual test (worst {res.max():.2e})")
    return roots


def sample_polynomial(basis: OrthonormalBasis, rng: np.random.Generator, seed_record: Optional[dict] = None) -> PolynomialSample:
    """Draw ``f = sum a_j P_j`` and find its ``N`` zeros."""
    if basis.degree < 1:
        raise ValueError("degree must be at least 1 to have zeros")
    a, resampled = _draw(basis, rng)
    zeros = _checked_roots(basis, a[None, :])[0]
    record = dict(seed_record or {})
    record["resampled"] = resampled
    return PolynomialSample(a, MonomialPolynomial(a @ basis.monomial_matrix), zeros, record)


def _zeros_chunk(basis: OrthonormalBasis, seed: int, start: int, stop: int):
    rows = [_draw(basis, trial_rng(seed, i)) for i in range(start, stop)]
    A = np.array([r[0] for r in rows])
    return _checked_roots(basis, A), sum(r[1] for r in rows)


def sample_zeros(basis: OrthonormalBasis, trials: int, seed: int, workers: int = 1, start: int = 0):
    """Zeros of ``trials`` independent samples, shape ``(trials, N)``.

    Trial ``i`` uses ``trial_rng(seed, start + i)``; chunks are merged in
    index order, so the result is the same for any ``workers``.

    Returns
    -------
    zeros : ndarray
    resampled : int
        Number of draws repeated because the leading coefficient was degenerate.
    """
    bounds = [(s, min(s + _CHUNK, start + trials)) for s in range(start, start + trials, _CHUNK)]
    if workers > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_zeros_chunk, *zip(*[(basis, seed, lo, hi) for lo, hi in bounds])))
    else:
        parts = [_zeros_chunk(basis, seed, lo, hi) for lo, hi in bounds]
    if not parts:
        return np.zeros((0, basis.degree), dtype=complex), 0
    return np.concatenate([p[0] for p in parts]), sum(p[1] for p in parts)


# --------------------------------------------------------------------------
# exact disk density


def g_series(N: int, rho, terms: int = 14):
    """Taylor series of ``g_N`` about ``rho = 0``.

    ``g_N = (log h_N)''`` with ``h_N(rho) = sum_{n<=N} exp(n rho)``; from
    ``log((e^x - 1)/x) = x/2 + sum_k B_2k x^2k / (2k (2k)!)`` one gets
    ``g_N = sum_k B_2k (2k-1) ((N+1)^2k - 1) rho^(2k-2) / (2k)!``.
    The series converges for ``(N+1)|rho| < 2 pi``.
    """
    rho = np.asarray(rho, dtype=float)
    B = bernoulli(2 * terms)
    M = N + 1
    out = np.zeros_like(rho)
    for k in range(terms, 0, -1):
        coef = B[2 * k] * (2 * k - 1) * (float(M) ** (2 * k) - 1) / math.factorial(2 * k)
        out = out * rho**2 + coef
    return out


def _inv_four_sinh2(x):
    """``1 / (4 sinh(x/2)**2)`` without overflow."""
    ax = np.abs(x)
    return np.exp(-ax) / np.expm1(-ax) ** 2


def g_function(N: int, rho):
    """``g_N(rho)``; the series is used where ``(N+1)|rho| < 1``."""
    rho = np.asarray(rho, dtype=float)
    small = (N + 1) * np.abs(rho) < 1
    with np.errstate(divide="ignore", invalid="ignore"):
        closed = _inv_four_sinh2(rho) - (N + 1) ** 2 * _inv_four_sinh2((N + 1) * rho)
    out = np.where(small, g_series(N, np.where(small, rho, 0.0)), closed)
    return out[()] if out.ndim == 0 else out


def exact_disk_density(N: int, z):
    """Expected zero density of the degree-``N`` disk ensemble, per unit area.

    Equal to ``g_N(rho) / (pi |z|^2)`` with ``rho = log |z|^2``.  This is the
    only place where the ``1/pi`` between ``(i/2pi) dz dzbar`` and ``dx dy``
    enters.
    """
    r2 = np.abs(np.asarray(z, dtype=complex)) ** 2
    with np.errstate(divide="ignore"):
        rho = np.log(r2)
    M = N + 1
    small = M * np.abs(rho) < 1
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # g_N(rho) / |z|^2 with each exponential combined before evaluation
        ar = np.abs(rho)
        first = np.exp(-ar - rho) / np.expm1(-ar) ** 2
        second = M**2 * np.exp(-M * ar - rho) / np.expm1(-M * ar) ** 2
        closed = first - second
    closed = np.where(r2 == 0, 1.0, closed)
    series = g_series(N, np.where(small, rho, 0.0)) / np.where(small, r2, 1.0)
    out = np.where(small, series, closed) / math.pi
    return out[()] if out.ndim == 0 else out


# --------------------------------------------------------------------------
# expected density in weak form


@dataclass(frozen=True)
class PlanarGrid:
    """Square tensor grid ``[x0, x1] x [y0, y1]`` with spacing ``h``."""

    x0: float
    x1: float
    y0: float
    y1: float
    h: float

    @classmethod
    def square(cls, half_width: float, h: float) -> "PlanarGrid":
        return cls(-half_width, half_width, -half_width, half_width, h)

    def points(self):
        nx = int(round((self.x1 - self.x0) / self.h)) + 1
        ny = int(round((self.y1 - self.y0) / self.h)) + 1
        x = np.linspace(self.x0, self.x1, nx)
        y = np.linspace(self.y0, self.y1, ny)
        X, Y = np.meshgrid(x, y, indexing="ij")
        return X + 1j * Y, x[1] - x[0], y[1] - y[0]


def _fd_laplacian(F: np.ndarray, hx: float, hy: float) -> np.ndarray:
    """Fourth-order central Laplacian; ``F`` is taken to vanish off the grid."""
    P = np.pad(F, 2)
    c = P[2:-2, 2:-2]
    dxx = (-P[4:, 2:-2] + 16 * P[3:-1, 2:-2] - 30 * c + 16 * P[1:-3, 2:-2] - P[:-4, 2:-2]) / (12 * hx**2)
    dyy = (-P[2:-2, 4:] + 16 * P[2:-2, 3:-1] - 30 * c + 16 * P[2:-2, 1:-3] - P[2:-2, :-4]) / (12 * hy**2)
    return dxx + dyy


def expected_density_pairing(
    basis: OrthonormalBasis,
    phi: Callable,
    grid: PlanarGrid,
    laplacian: Optional[Callable] = None,
) -> float:
    """``(E Z_f, phi) = (1/4pi) iint log S_N(z, z) Laplacian(phi) dx dy``.

    ``S_N`` is never differentiated: the Laplacian falls on ``phi``, either
    from ``laplacian`` or by fourth-order finite differences.  ``phi`` must be
    negligible at the edge of the grid.
    """
    if not grid.h <= 0.01:
        raise GridTooCoarse(f"grid spacing {grid.h} exceeds 0.01")
    Z, hx, hy = grid.points()
    if laplacian is not None:
        lap = np.asarray(laplacian(Z), dtype=float)
    else:
        lap = _fd_laplacian(np.asarray(phi(Z), dtype=float), hx, hy)
    logS = np.empty(Z.shape)
    for i in range(Z.shape[0]):
        P = eval_basis(basis, Z[i])
        logS[i] = np.log(np.sum(P.real**2 + P.imag**2, axis=-1))
    wx = np.full(Z.shape[0], hx)
    wx[[0, -1]] *= 0.5
    wy = np.full(Z.shape[1], hy)
    wy[[0, -1]] *= 0.5
    return float(wx @ (logS * lap) @ wy / (4 * math.pi))


# --------------------------------------------------------------------------
# Monte Carlo: one-point statistics


@dataclass(frozen=True)
class EmpiricalMeasureSummary:
    angular_edges: np.ndarray
    angular_histogram: np.ndarray
    radial_edges: np.ndarray
    radial_histogram: np.ndarray
    trials: int
    N: int
    outside_collar: int
    radial_scaled: bool
    ks_angle: float
    ks_critical: float
    chi2_pvalue: float
    fraction_near_boundary: float
    resampled: int = 0

    @property
    def total(self) -> int:
        return int(self.angular_histogram.sum())


def ks_uniform_angle(angles) -> float:
    """Kolmogorov-Smirnov distance between ``angles / 2pi`` and U[0, 1)."""
    return float(stats.kstest(np.asarray(angles) / (2 * math.pi), "uniform").statistic)


def montecarlo_density(
    basis: OrthonormalBasis,
    domain: DomainSpec,
    trials: int,
    bins: int,
    seed: int,
    workers: int = 1,
    scale_radial: bool = False,
    radial_range: float = 0.5,
    near: float = 0.1,
) -> EmpiricalMeasureSummary:
    """Pool ``arg Phi`` and ``|Phi| - 1`` over the zeros of ``trials`` samples.

    Zeros where the exterior map cannot be inverted (deep inside the domain)
    are counted in ``outside_collar`` and left out of the histograms.  Radial
    values beyond ``radial_range`` (times ``N`` if scaled) go to the end bins.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    zeros, resampled = sample_zeros(basis, trials, seed, workers)
    N = basis.degree
    w, ok = exterior_map_partial(domain, zeros.ravel())
    w = w[ok]
    angles = np.mod(np.angle(w), 2 * math.pi)
    radial = np.abs(w) - 1
    if scale_radial:
        radial = radial * N
        radial_range = radial_range * N
    a_edges = np.linspace(0, 2 * math.pi, bins + 1)
    a_hist = np.histogram(angles, a_edges)[0]
    r_edges = np.linspace(-radial_range, radial_range, bins + 1)
    r_hist = np.histogram(np.clip(radial, -radial_range, radial_range), r_edges)[0]
    n = angles.size
    near_count = np.count_nonzero(np.abs(np.abs(w) - 1) < near)
    chi2 = stats.chisquare(a_hist).pvalue if n else float("nan")
    return EmpiricalMeasureSummary(
        angular_edges=a_edges,
        angular_histogram=a_hist,
        radial_edges=r_edges,
        radial_histogram=r_hist,
        trials=trials,
        N=N,
        outside_collar=int(zeros.size - n),
        radial_scaled=scale_radial,
        ks_angle=ks_uniform_angle(angles) if n else float("nan"),
        ks_critical=1.63 / math.sqrt(max(n, 1)),
        chi2_pvalue=float(chi2),
        fraction_near_boundary=near_count / zeros.size,
        resampled=resampled,
    )


def linear_statistic(zeros: np.ndarray, phi: Callable) -> np.ndarray:
    """``(1/N) sum phi(zero)`` for each row of ``zeros``."""
    return np.mean(np.asarray(phi(zeros), dtype=float), axis=-1)


def default_test_function(z):
    """Smooth bounded test function used by the variance experiment."""
    return np.exp(-np.abs(z - 0.5) ** 2)


def variance_experiment(
    domain: DomainSpec,
    weight: WeightSpec,
    phi: Callable,
    N_list: Sequence[int],
    trials: int,
    seed: int,
    workers: int = 1,
):
    """Sample variance of ``(1/N) sum phi(zero)`` for each ``N`` in ``N_list``."""
    if trials < 100:
        raise ValueError("trials must be at least 100")
    out = []
    for N in N_list:
        if N < 4:
            raise ValueError("every N must be at least 4")
        basis = build_boundary_basis(domain, weight, N)
        zeros, _ = sample_zeros(basis, trials, seed, workers, start=0)
        stat = linear_statistic(zeros, phi)
        out.append((int(N), float(np.var(stat, ddof=1))))
    return out


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


# --------------------------------------------------------------------------
# Monte Carlo: pair correlation


TANGENTIAL = "tangential"
NORMAL = "normal"


@dataclass(frozen=True)
class PairWindow:
    """Window in the scaled coordinate ``zeta = N log Phi = t + i s``.

    For ``tangential``, both zeros lie in the band ``|t| < half_width`` and
    are binned by ``|s1 - s2|`` (taken around the circle).  For ``normal``,
    the first zero lies in ``|t| < half_width`` and the second in
    ``|t - separation| < half_width`` with ``|s2 - s1| < half_width``; each
    band's intensity is estimated separately.
    ``separations`` are bin centres; ``bin_half_width`` is used for the
    tangential bins.
    """

    kind: str
    separations: tuple
    half_width: float = 0.4
    bin_half_width: float = 0.25

    def __post_init__(self):
        if self.kind not in (TANGENTIAL, NORMAL):
            raise ValueError(f"unknown window kind {self.kind!r}")
        if self.half_width <= 0 or self.bin_half_width <= 0:
            raise ValueError("window widths must be positive")
        object.__setattr__(self, "separations", tuple(float(s) for s in self.separations))


@dataclass(frozen=True)
class PairCorrelationEstimate:
    kind: str
    separations: np.ndarray
    values: np.ndarray
    pair_counts: np.ndarray
    stderr: np.ndarray
    trials: int
    N: int
    outside_collar: int


def scaled_coordinates(domain: DomainSpec, zeros: np.ndarray, N: int):
    """``zeta = N log Phi(z)`` for every zero, with a mask of successful inversions."""
    w, ok = exterior_map_partial(domain, zeros)
    with np.errstate(divide="ignore", invalid="ignore"):
        zeta = N * np.log(np.where(ok, w, 1.0))
    return zeta, ok


def _wrap(ds, period):
    return (ds + period / 2) % period - period / 2


def _pair_counts(zeta: np.ndarray, ok: np.ndarray, window: PairWindow, N: int):
    """Ordered pair counts per separation, and normalization counts per region."""
    t, s = zeta.real, zeta.imag
    period = 2 * math.pi * N
    d = window.half_width
    seps = np.array(window.separations)
    pairs = np.zeros(seps.size, dtype=np.int64)
    if window.kind == TANGENTIAL:
        region = ok & (np.abs(t) < d)
        counts = np.array([np.count_nonzero(region)])
        for row in range(zeta.shape[0]):
            sr = s[row][region[row]]
            if sr.size < 2:
                continue
            ds = np.abs(_wrap(sr[:, None] - sr[None, :], period))
            ds = ds[~np.eye(sr.size, dtype=bool)]
            pairs += np.count_nonzero(np.abs(ds[None, :] - seps[:, None]) < window.bin_half_width, axis=1)
        return pairs, counts
    base = ok & (np.abs(t) < d)
    counts = np.array([np.count_nonzero(base)] + [np.count_nonzero(ok & (np.abs(t - c) < d)) for c in seps])
    for row in range(zeta.shape[0]):
        b = base[row]
        if not b.any():
            continue
        t1, s1 = t[row][b], s[row][b]
        t2, s2 = t[row][ok[row]], s[row][ok[row]]
        ds = np.abs(_wrap(s2[None, :] - s1[:, None], period))
        same = (ds == 0) & (t2[None, :] == t1[:, None])
        close = (ds < d) & ~same
        for j, c in enumerate(seps):
            pairs[j] += np.count_nonzero(close & (np.abs(t2 - c) < d)[None, :])
    return pairs, counts


def _pair_chunk(basis, domain, window, seed, start, stop):
    zeros, _ = _zeros_chunk(basis, seed, start, stop)
    zeta, ok = scaled_coordinates(domain, zeros, basis.degree)
    pairs, counts = _pair_counts(zeta, ok, window, basis.degree)
    return pairs, counts, int(np.count_nonzero(~ok))


def montecarlo_pair_correlation(
    basis: OrthonormalBasis,
    domain: DomainSpec,
    trials: int,
    window: PairWindow,
    seed: int,
    workers: int = 1,
) -> PairCorrelationEstimate:
    """Binned estimate of the scaled two-point function near the boundary.

    The estimate is the pair intensity divided by the product of the
    one-point intensities of the two regions, both measured in the same run:
    ``K = pairs * trials * |R1| |R2| / (count1 * count2 * |pair region|)``.

    Raises
    ------
    InsufficientStatistics
        If a normalization region holds fewer than 10 zeros in total.
    """
    N = basis.degree
    if N < 30:
        raise ValueError("pair correlation needs N >= 30")
    bounds = [(s, min(s + _CHUNK, trials)) for s in range(0, trials, _CHUNK)]
    args = [(basis, domain, window, seed, lo, hi) for lo, hi in bounds]
    if workers > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_pair_chunk, *zip(*args)))
    else:
        parts = [_pair_chunk(*a) for a in args]
    pairs = sum(p[0] for p in parts)
    counts = sum(p[1] for p in parts)
    outside = sum(p[2] for p in parts)
    if np.any(counts < MIN_NORMALIZATION_COUNT):
        raise InsufficientStatistics(
            f"normalization region count {int(counts.min())} < {MIN_NORMALIZATION_COUNT}; increase trials"
        )
    d = window.half_width
    seps = np.array(window.separations)
    if window.kind == TANGENTIAL:
        band = 2 * d * 2 * math.pi * N
        # partner region: the band, at |s2 - s1| within the bin, on both sides
        measure = band * 2 * d * 2 * (2 * window.bin_half_width)
        values = pairs * trials * band**2 / (counts[0] ** 2 * measure)
    else:
        cell = 2 * d * 2 * math.pi * N
        measure = cell * (2 * d) * (2 * d)
        values = pairs * trials * cell**2 / (counts[0] * counts[1:] * measure)
    # tangential pairs are counted in both orders, so half of them are independent
    independent = pairs / 2 if window.kind == TANGENTIAL else pairs
    with np.errstate(divide="ignore", invalid="ignore"):
        stderr = np.where(pairs > 0, values / np.sqrt(independent), np.nan)
    return PairCorrelationEstimate(window.kind, seps, values, pairs, stderr, trials, N, outside)


__all__ = [
    "EmpiricalMeasureSummary",
    "NORMAL",
    "PairCorrelationEstimate",
    "PairWindow",
    "PlanarGrid",
    "PolynomialSample",
    "TANGENTIAL",
    "default_test_function",
    "exact_disk_density",
    "expected_density_pairing",
    "g_function",
    "g_series",
    "ks_uniform_angle",
    "linear_statistic",
    "loglog_slope",
    "montecarlo_density",
    "montecarlo_pair_correlation",
    "sample_coefficients",
    "sample_polynomial",
    "sample_zeros",
    "scaled_coordinates",
    "trial_rng",
]
