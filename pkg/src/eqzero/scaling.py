"""Universal scaling limits of zeros near the boundary.

In the scaled coordinate ``zeta`` the normalized Szego kernel tends to
``G(zeta_1 + conj(zeta_2))`` with ``G(z) = (e^z - 1)/z``.  Everything here
(the scaled density, the 2x2 covariance blocks and the pair correlation) is
built from ``G`` and its first two derivatives.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domain import (
    DomainSpec,
    WeightSpec,
    exterior_map_derivative,
    outer_function,
    psi_factor,
)
from .errors import NearDiagonal
from .orthopoly import build_boundary_basis, build_interior_basis, kernel_values

SERIES_RADIUS = 0.5
SERIES_TERMS = 25
DET_FLOOR = 1e-10
TANGENTIAL = "tangential"
NORMAL = "normal"

# d^m/dz^m sum_k z^k/(k+1)!  =  sum_k z^k (k+m)! / (k! (k+m+1)!)
_SERIES = [
    np.array([math.factorial(k + m) / (math.factorial(k) * math.factorial(k + m + 1)) for k in range(SERIES_TERMS)])
    for m in range(3)
]


def _series(z, order):
    out = np.zeros_like(z)
    for c in _SERIES[order][::-1]:
        out = out * z + c
    return out


def _closed(z, order):
    e = np.exp(z)
    if order == 0:
        return (e - 1) / z
    if order == 1:
        return (e * (z - 1) + 1) / z**2
    return (e * (z * z - 2 * z + 2) - 2) / z**3


def eval_G(z, order: int = 0):
    """``G``, ``G'`` or ``G''`` at ``z`` (scalar or array).

    A 25-term Taylor series is used for ``|z| < 0.5``, where the closed forms
    lose digits to cancellation.
    """
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < SERIES_RADIUS
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(small, _series(z, order), _closed(np.where(small, 1.0, z), order))
    return out[()] if out.ndim == 0 else out


def log_G_second_derivative(x):
    """``(log G)''(x) = (G G'' - G'^2) / G^2`` from :func:`eval_G`."""
    g0, g1, g2 = (eval_G(x, k) for k in range(3))
    return (g0 * g2 - g1 * g1) / (g0 * g0)


def d_infinity(tau):
    """Scaled zero density ``(1/pi) (log G)''(2 tau)``.

    Near ``tau = 0`` the value comes from the series path of :func:`eval_G`;
    elsewhere from ``1/x^2 - 1/(4 sinh^2(x/2))`` at ``x = 2 tau``, which is the
    same function without the cancellation of the quotient form.  The result
    is even in ``tau``.
    """
    tau = np.asarray(tau, dtype=float)
    x = 2 * tau
    small = np.abs(x) < SERIES_RADIUS
    xs = np.where(small, 1.0, x)
    with np.errstate(over="ignore"):
        closed = 1 / xs**2 - 1 / (4 * np.sinh(xs / 2) ** 2)
    near = np.real(log_G_second_derivative(np.where(small, x, 0.0)))
    out = np.where(small, near, closed) / math.pi
    return out[()] if out.ndim == 0 else out


def d_infinity_closed_form(tau):
    """``[e^{4t} - (2 + 4t^2) e^{2t} + 1] / [4 pi (e^{2t} - 1)^2 t^2]``, for ``t != 0``."""
    t = np.asarray(tau, dtype=float)
    e2 = np.exp(2 * t)
    return (e2 * e2 - (2 + 4 * t * t) * e2 + 1) / (4 * math.pi * (e2 - 1) ** 2 * t * t)


@dataclass(frozen=True)
class CorrelationMatrices:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    Lam: np.ndarray

    @property
    def det_A(self) -> complex:
        return self.A[0, 0] * self.A[1, 1] - self.A[0, 1] * self.A[1, 0]


def _blocks(zeta1, zeta2, scale):
    """``A, B, C`` stacked with shape ``(..., 2, 2)``."""
    zeta = np.stack(np.broadcast_arrays(np.asarray(zeta1, complex), np.asarray(zeta2, complex)), axis=-1)
    S = zeta[..., :, None] + zeta.conj()[..., None, :]
    return tuple(scale * eval_G(S, k) for k in range(3))


def _lambda(A, B, C):
    det = A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
    adj = np.stack(
        [np.stack([A[..., 1, 1], -A[..., 0, 1]], -1), np.stack([-A[..., 1, 0], A[..., 0, 0]], -1)], -2
    )
    Bh = np.conj(np.swapaxes(B, -1, -2))
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = adj / det[..., None, None]
    return C - Bh @ inv @ B, det


def _check_det(det, zeta1, zeta2, scale):
    bad = ~(np.abs(det) > DET_FLOOR * scale**2)
    if np.any(bad):
        sep = np.abs(np.broadcast_to(np.asarray(zeta2) - np.asarray(zeta1), np.shape(det)))[bad].min()
        raise NearDiagonal(f"|det A| = {np.abs(det)[bad].min():.3e} at separation {sep:.3e}")


def correlation_matrices(zeta1: complex, zeta2: complex, scale: float = 1.0) -> CorrelationMatrices:
    """``A, B, C`` with entries ``G, G', G''`` at ``zeta_j + conj(zeta_k)``, and
    ``Lam = C - B^* A^{-1} B``.

    ``scale`` multiplies ``A``, ``B`` and ``C`` (the prefactor that cancels in
    the pair correlation).  ``A`` is inverted through its adjugate.

    Raises
    ------
    NearDiagonal
        If ``|det A| <= 1e-10``; this happens as ``zeta2 -> zeta1``.
    """
    A, B, C = _blocks(zeta1, zeta2, scale)
    Lam, det = _lambda(A, B, C)
    _check_det(det, zeta1, zeta2, scale)
    return CorrelationMatrices(A, B, C, Lam)


def pair_correlation_array(zeta1, zeta2, scale: float = 1.0) -> np.ndarray:
    """Vectorized :func:`pair_correlation_K2` over broadcast arrays of points."""
    A, B, C = _blocks(zeta1, zeta2, scale)
    L, det = _lambda(A, B, C)
    _check_det(det, zeta1, zeta2, scale)
    perm = L[..., 0, 0] * L[..., 1, 1] + L[..., 0, 1] * L[..., 1, 0]
    D1 = d_infinity(np.real(zeta1))
    D2 = d_infinity(np.real(zeta2))
    K = perm / (math.pi**2 * det * D1 * D2)
    if np.any(np.abs(K.imag) > 1e-10 * np.maximum(1.0, np.abs(K.real))):
        raise ArithmeticError(f"pair correlation has imaginary part {np.abs(K.imag).max():.3e}")
    return K.real


def pair_correlation_K2(zeta1: complex, zeta2: complex, scale: float = 1.0) -> float:
    """Limit pair correlation of zeros at scaled points ``zeta1, zeta2``.

    ``perm(Lam) / (pi^2 det A D(Re zeta1) D(Re zeta2))``.  The ``pi^2`` makes
    the value tend to 1 at large separation.
    """
    return float(pair_correlation_array(complex(zeta1), complex(zeta2), scale))


def _section_points(kind: str, separation):
    if kind == TANGENTIAL:
        return 1j * np.asarray(separation, dtype=float)
    if kind == NORMAL:
        return np.asarray(separation, dtype=float) + 0j
    raise ValueError(f"unknown kind {kind!r}")


def kappa(kind: str, separation: float) -> float:
    """``K(0, i a)`` for ``tangential`` or ``K(0, a)`` for ``normal``; 0 at ``a = 0``."""
    z2 = _section_points(kind, separation)
    if separation == 0:
        return 0.0
    return pair_correlation_K2(0.0, complex(z2))


def kappa_curves(kind: str, grid: Sequence[float]):
    """Tabulate the tangential or normal section as ``[(separation, value), ...]``."""
    a = np.asarray(grid, dtype=float)
    z2 = _section_points(kind, a)
    values = np.zeros(a.shape)
    nz = a != 0
    if np.any(nz):
        values[nz] = pair_correlation_array(0j, z2[nz])
    return [(float(x), float(v)) for x, v in zip(a, values)]


def _scaled_points(domain: DomainSpec, N: int, zetas):
    return [domain.psi(1 + zeta / N) for zeta in zetas]


def scaled_kernel_limit(domain: DomainSpec, zeta1: complex, zeta2: complex, weight: WeightSpec = None) -> complex:
    """Limit of the normalized partial kernel at ``Psi(1 + zeta/N)``.

    Boundary (``weight`` given): ``|psi(z0)|^2 G(zeta1 + conj zeta2)``.
    Interior (``weight is None``): ``|Phi'(z0)|^2 G'(zeta1 + conj zeta2) / pi``.
    """
    z0 = domain.psi(1.0 + 0j)
    s = zeta1 + np.conj(zeta2)
    if weight is not None:
        outer = outer_function(domain, weight)
        return abs(psi_factor(domain, outer, z0)) ** 2 * eval_G(s, 0)
    return abs(exterior_map_derivative(domain, z0)) ** 2 * eval_G(s, 1) / math.pi


def scaled_kernel_convergence(
    domain: DomainSpec,
    weight: WeightSpec,
    N_list: Sequence[int],
    zeta1: complex,
    zeta2: complex,
    interior: bool = False,
):
    """``[(N, |error|), ...]`` for the partial kernel scaled at ``z0 = Psi(1)``.

    The boundary kernel is divided by ``N`` and the interior (Bergman) kernel
    by ``N^2`` before comparing with :func:`scaled_kernel_limit`.
    """
    if min(zeta1.real, zeta2.real) < -2:
        raise ValueError("Re zeta must be at least -2")
    limit = scaled_kernel_limit(domain, zeta1, zeta2, None if interior else weight)
    out = []
    for N in N_list:
        if N < 20:
            raise ValueError("N must be at least 20")
        z1, z2 = _scaled_points(domain, N, (zeta1, zeta2))
        if interior:
            basis = build_interior_basis(domain, N)
            value = kernel_values(basis, z1, z2) / N**2
        else:
            basis = build_boundary_basis(domain, weight, N)
            value = kernel_values(basis, z1, z2) / N
        out.append((int(N), float(abs(value - limit))))
    return out


__all__ = [
    "CorrelationMatrices",
    "NORMAL",
    "TANGENTIAL",
    "correlation_matrices",
    "d_infinity",
    "d_infinity_closed_form",
    "eval_G",
    "kappa",
    "kappa_curves",
    "log_G_second_derivative",
    "pair_correlation_K2",
    "pair_correlation_array",
    "scaled_kernel_convergence",
    "scaled_kernel_limit",
]
