"""Complex numerics kernel: polynomials, root finding and boundary quadrature.

Everything here is a pure function of its inputs.  Polynomials are stored
with ascending coefficients ``c[0] + c[1] z + ... + c[d] z**d``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import LengthMismatch, NonConvergence

DEFAULT_ROOT_TOL = 1e-10
DEFAULT_MAX_ITER = 200

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class MonomialPolynomial:
    """Polynomial in the monomial basis with ascending coefficients.

    Exactly-zero leading coefficients are trimmed on construction so that
    ``coeffs[-1] != 0`` unless the polynomial is the constant ``c[0]``.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex)).copy()
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a non-empty 1-D sequence")
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else c[:1]
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, z):
        return horner_eval(self, z)


def horner_eval(p: MonomialPolynomial, z):
    """Evaluate ``p`` at ``z`` (scalar or array) by nested multiplication."""
    z = np.asarray(z, dtype=complex)
    c = p.coeffs
    acc = np.full(z.shape, c[-1], dtype=complex)
    for ck in c[-2::-1]:
        acc = acc * z + ck
    return acc[()] if acc.ndim == 0 else acc


def horner_eval_with_derivative(p: MonomialPolynomial, z):
    """Return ``(p(z), p'(z))``."""
    z = np.asarray(z, dtype=complex)
    c = p.coeffs
    val = np.full(z.shape, c[-1], dtype=complex)
    der = np.zeros(z.shape, dtype=complex)
    for ck in c[-2::-1]:
        der = der * z + val
        val = val * z + ck
    return val, der


def scaled_residual(coeffs, roots):
    """Residual ``|p(r)| / (max|c_k| * max(1, |r|)**d)`` used as the root acceptance test.

    ``coeffs`` is ``(..., d+1)`` ascending and ``roots`` is ``(..., d)``.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    roots = np.asarray(roots, dtype=complex)
    d = coeffs.shape[-1] - 1
    val = np.broadcast_to(coeffs[..., -1:], roots.shape).astype(complex)
    for k in range(d - 1, -1, -1):
        val = val * roots + coeffs[..., k : k + 1]
    scale = np.max(np.abs(coeffs), axis=-1, keepdims=True)
    return np.abs(val) / (scale * np.maximum(1.0, np.abs(roots)) ** d)


def _initial_guesses(coeffs: np.ndarray) -> np.ndarray:
    """Points on a circle whose radius is the geometric mean root modulus."""
    d = coeffs.shape[-1] - 1
    lead = np.abs(coeffs[..., -1])
    const = np.abs(coeffs[..., 0])
    with np.errstate(divide="ignore"):
        radius = (const / lead) ** (1.0 / d)
    # fall back to the Fujiwara-style bound when c_0 is tiny
    bound = np.max(np.abs(coeffs[..., :-1] / coeffs[..., -1:]) ** (1.0 / (d - np.arange(d))), axis=-1)
    radius = np.where(radius > 1e-8 * np.maximum(bound, 1e-300), radius, bound)
    radius = np.where(radius > 0, radius, 1.0)
    angles = 2 * np.pi * np.arange(d) / d + 0.7
    return radius[..., None] * np.exp(1j * angles)


def horner_evaluator(coeffs: np.ndarray):
    """Row-wise ``(p, p', error bound)`` evaluator for :func:`aberth`.

    ``coeffs`` is ``(T, d+1)`` ascending.  The bound is the usual running
    error estimate of Horner's rule.
    """
    desc = coeffs[:, ::-1]
    adesc = np.abs(desc)
    n = desc.shape[1]

    def evaluate(rows, z):
        cr = desc[rows]
        ar = adesc[rows]
        az = np.abs(z)
        val = np.repeat(cr[:, :1], z.shape[1], axis=1)
        der = np.zeros_like(z)
        bound = np.repeat(ar[:, :1], z.shape[1], axis=1)
        for k in range(1, n):
            der = der * z + val
            val = val * z + cr[:, k : k + 1]
            bound = bound * az + ar[:, k : k + 1]
        return val, der, 2 * n * _EPS * bound

    return evaluate


def aberth(evaluate, z, max_iter: int = DEFAULT_MAX_ITER) -> np.ndarray:
    """Aberth-Ehrlich simultaneous iteration applied row-wise.

    Parameters
    ----------
    evaluate : callable
        ``evaluate(rows, z) -> (p, dp, err)`` for the polynomials selected by
        the integer array ``rows`` at points ``z`` of shape ``(len(rows), d)``;
        ``err`` bounds the rounding error in ``p``.
    z : ndarray, shape (T, d)
        Starting points, one row per polynomial.

    A root is frozen once its correction is at rounding level or its value is
    below the evaluation error bound, so a row's result never depends on the
    other rows in the batch.
    """
    z = np.array(z, dtype=complex)
    T, d = z.shape
    active = np.ones((T, d), dtype=bool)
    idx = np.arange(d)
    for _ in range(max_iter):
        rows = np.flatnonzero(active.any(axis=1))
        if rows.size == 0:
            break
        zr = z[rows]
        val, der, err = evaluate(rows, zr)
        diff = zr[:, :, None] - zr[:, None, :]
        diff[:, idx, idx] = np.inf
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            recip = 1.0 / diff
            recip[~np.isfinite(recip)] = 0.0
            ratio = val / der
            ratio[~np.isfinite(ratio)] = 0.0
            step = ratio / (1.0 - ratio * recip.sum(axis=2))
        step[~np.isfinite(step)] = 0.0
        act = active[rows]
        small = np.abs(val) <= err
        step[~act | small] = 0.0
        zr = zr - step
        done = small | (np.abs(step) <= 4 * _EPS * np.maximum(np.abs(zr), 1e-300))
        z[rows] = zr
        active[rows] = act & ~done
    return z


def find_roots_batch(coeffs, tol: float = DEFAULT_ROOT_TOL, max_iter: int = DEFAULT_MAX_ITER):
    """All roots of many polynomials of the same degree at once.

    Parameters
    ----------
    coeffs : array_like, shape (T, d+1)
        Ascending coefficients; every row must have a nonzero leading term.

    Returns
    -------
    roots : ndarray, shape (T, d)
    ok : ndarray of bool, shape (T,)
        Rows whose roots all pass the scaled residual test.
    """
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=complex))
    T, n = coeffs.shape
    d = n - 1
    if d < 1:
        raise ValueError("degree must be at least 1")
    if np.any(coeffs[:, -1] == 0):
        raise ValueError("leading coefficient must be nonzero")
    # exact zero roots are split off (c_0 = ... = c_{k-1} = 0)
    nzero = np.argmax(coeffs != 0, axis=1)
    roots = np.zeros((T, d), dtype=complex)
    for k in np.unique(nzero):
        sel = np.flatnonzero(nzero == k)
        dd = d - k
        if dd == 0:
            continue
        sub = coeffs[sel, k:] / coeffs[sel, -1:]
        if dd == 1:
            roots[sel, :1] = -sub[:, :1]
            continue
        roots[sel, :dd] = aberth(horner_evaluator(sub), _initial_guesses(sub), max_iter)
    ok = np.all(scaled_residual(coeffs, roots) < tol, axis=1)
    return roots, ok


def find_roots(p: MonomialPolynomial, tol: float = DEFAULT_ROOT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> np.ndarray:
    """All ``p.degree`` roots of ``p`` by simultaneous Aberth-Ehrlich iteration.

    Raises
    ------
    NonConvergence
        If some root fails ``|p(r)| / (max|c| max(1,|r|)**d) < tol`` after
        ``max_iter`` sweeps.  Retrying on a rescaled or perturbed polynomial
        is the caller's choice.
    """
    if p.degree < 1:
        raise ValueError("degree must be at least 1")
    roots, ok = find_roots_batch(p.coeffs[None, :], tol, max_iter)
    if not ok[0]:
        worst = scaled_residual(p.coeffs, roots[0]).max()
        raise NonConvergence(f"Aberth iteration left scaled residual {worst:.3e} > {tol:g}")
    return roots[0]


def poly_from_roots(roots) -> MonomialPolynomial:
    """Expand ``prod (z - r_k)`` into ascending monomial coefficients."""
    c = np.array([1.0 + 0j])
    for r in np.asarray(roots, dtype=complex):
        c = np.concatenate([[0j], c]) - r * np.concatenate([c, [0j]])
    return MonomialPolynomial(c)


@dataclass(frozen=True)
class BoundaryQuadrature:
    """Periodic trapezoid rule on a closed curve ``z(theta)``, ``theta_m = 2 pi m / M``.

    ``weights`` carry the arc-length element ``|dz|`` (they sum to the curve
    length); ``dz`` carries the complex element ``z'(theta) dtheta`` used by
    contour integrals.
    """

    node_count: int
    angles: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    dz: np.ndarray
    label: str = field(default="")

    @property
    def length(self) -> float:
        return float(self.weights.sum())

    def describe(self) -> dict:
        return {"rule": "periodic-trapezoid", "M": self.node_count, "curve": self.label}


def boundary_integral(samples, quad: BoundaryQuadrature) -> complex:
    """``sum_m samples[m] * weights[m]``, i.e. the integral against ``|dz|``."""
    samples = np.asarray(samples)
    if samples.shape[-1] != quad.node_count:
        raise LengthMismatch(f"got {samples.shape[-1]} samples for {quad.node_count} nodes")
    return samples @ quad.weights


def contour_integral(samples, quad: BoundaryQuadrature) -> complex:
    """Counter-clockwise integral against ``dz``."""
    samples = np.asarray(samples)
    if samples.shape[-1] != quad.node_count:
        raise LengthMismatch(f"got {samples.shape[-1]} samples for {quad.node_count} nodes")
    return samples @ quad.dz


def interior_monomial_integral(j: int, k: int, quad: BoundaryQuadrature) -> complex:
    """Area integral of ``z**j * conj(z)**k`` over the region bounded by ``quad``.

    Green's identity turns it into
    ``1/(2i(k+1)) * contour integral of z**j conj(z)**(k+1) dz``.
    """
    if j < 0 or k < 0:
        raise ValueError("exponents must be nonnegative")
    z = quad.points
    integrand = z**j * np.conj(z) ** (k + 1)
    return contour_integral(integrand, quad) / (2j * (k + 1))


def periodic_antiderivative(values, quad: BoundaryQuadrature):
    """Values of ``F`` with ``dF = f dz`` along the curve, ``F(z(0)) = 0``.

    ``f`` must be the trace of a polynomial (or any function holomorphic
    across the curve) so that the contour integral of ``f dz`` vanishes;
    the mean of ``f z'`` is dropped under that assumption.
    """
    M = quad.node_count
    g = np.asarray(values) * quad.dz * (M / (2 * np.pi))  # f(z(theta)) z'(theta)
    G = np.fft.fft(g, axis=-1)
    k = np.fft.fftfreq(M, 1.0 / M)
    with np.errstate(divide="ignore", invalid="ignore"):
        H = np.where(k != 0, G / (1j * k), 0.0)
    if M % 2 == 0:
        # the Nyquist mode has no well-defined derivative; it is zero for resolved data
        H[..., M // 2] = 0.0
    F = np.fft.ifft(H, axis=-1)
    return F - F[..., :1]


# compensated arithmetic for the monomial expansion at large degree

_SPLIT = 134217729.0  # 2**27 + 1


def _two_prod(a, b):
    p = a * b
    ca = _SPLIT * a
    ahi = ca - (ca - a)
    alo = a - ahi
    cb = _SPLIT * b
    bhi = cb - (cb - b)
    blo = b - bhi
    err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, err


def compensated_complex_dot(x, y) -> complex:
    """``sum x_i y_i`` with error-free products and exactly rounded summation."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    terms_re = []
    terms_im = []
    for a, b, sign, out in (
        (x.real, y.real, 1.0, terms_re),
        (x.imag, y.imag, -1.0, terms_re),
        (x.real, y.imag, 1.0, terms_im),
        (x.imag, y.real, 1.0, terms_im),
    ):
        p, e = _two_prod(a, b)
        out.extend((sign * p).tolist())
        out.extend((sign * e).tolist())
    return complex(math.fsum(terms_re), math.fsum(terms_im))
