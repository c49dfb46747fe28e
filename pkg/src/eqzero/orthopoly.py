"""Orthonormal polynomials on a domain and its boundary, and their kernels.

Bases are built by the Arnoldi (Stieltjes) process on quadrature nodes:
``z P_k`` is orthogonalized against ``P_0 .. P_k`` and normalized, which
yields a Hessenberg recurrence

    z P_k = sum_{j <= k+1} H[j, k] P_j.

Evaluation everywhere goes through that recurrence.  Monomial coefficients
are expanded from it only for the root finder.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .domain import (
    DomainSpec,
    OuterFunction,
    WeightSpec,
    exterior_map,
    exterior_map_derivative,
    psi_factor,
    quadrature,
)
from .errors import NumericalBreakdown, QuadratureTooCoarse
from .numerics import aberth, compensated_complex_dot, find_roots_batch, periodic_antiderivative

BOUNDARY = "boundary"
INTERIOR = "interior"
MAX_STANDARD_DEGREE = 60


def default_quad_size(N: int, kind: str = BOUNDARY) -> int:
    extra = 1 if kind == BOUNDARY else 2
    return max(256, 8 * (N + extra))


@dataclass(frozen=True)
class OrthonormalBasis:
    degree: int
    inner_product_kind: str
    hessenberg: np.ndarray
    p0: float
    monomial_matrix: np.ndarray
    quad_provenance: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.degree

    def __call__(self, z):
        return eval_basis(self, z)


@dataclass(frozen=True)
class KernelEvaluation:
    value: complex
    N: int
    kind: str


def _expand_monomials(H: np.ndarray, p0: float, extended: bool) -> np.ndarray:
    N = H.shape[1]
    C = np.zeros((N + 1, N + 1), dtype=complex)
    C[0, 0] = p0
    for k in range(N):
        shifted = np.zeros(N + 1, dtype=complex)
        shifted[1:] = C[k, :-1]
        h = H[: k + 1, k]
        if extended:
            comb = np.array(
                [compensated_complex_dot(np.append(h, -1.0), np.append(C[: k + 1, i], shifted[i])) for i in range(N + 1)]
            )
            C[k + 1] = -comb / H[k + 1, k]
        else:
            C[k + 1] = (shifted - h @ C[: k + 1]) / H[k + 1, k]
    return C


def _arnoldi(points, dual, N: int, mass: float):
    """Run the Stieltjes recurrence with one reorthogonalization pass.

    ``dual(q)`` returns the row vector ``d`` with ``<v, q> = d @ v``.
    """
    M = points.size
    Q = np.zeros((N + 1, M), dtype=complex)
    Dq = np.zeros((N + 1, M), dtype=complex)
    H = np.zeros((N + 1, N), dtype=complex)
    p0 = 1.0 / math.sqrt(mass)
    Q[0] = p0
    Dq[0] = dual(Q[0])
    for k in range(N):
        v = points * Q[k]
        before = math.sqrt(max((dual(v) @ v).real, 0.0))
        for _ in range(2):
            h = Dq[: k + 1] @ v
            v = v - h @ Q[: k + 1]
            H[: k + 1, k] += h
        dv = dual(v)
        nrm = math.sqrt(max((dv @ v).real, 0.0))
        if not nrm > 1e-14 * max(before, 1e-300):
            raise NumericalBreakdown(
                f"normalization factor {nrm:.3e} at degree {k + 1} is at rounding level; "
                "the degree is too high for double precision"
            )
        H[k + 1, k] = nrm
        Q[k + 1] = v / nrm
        Dq[k + 1] = dv / nrm
    return H, p0


def build_boundary_basis(
    domain: DomainSpec,
    weight: WeightSpec,
    N: int,
    M: Optional[int] = None,
    extended_precision: bool = False,
) -> OrthonormalBasis:
    """Orthonormal ``P_0..P_N`` for ``<f, g> = int f conj(g) rho |dz|`` on the boundary."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    M = default_quad_size(N, BOUNDARY) if M is None else M
    if M < 8 * (N + 1):
        raise QuadratureTooCoarse(f"M={M} < 8(N+1)={8 * (N + 1)}")
    quad = quadrature(domain, M)
    rho = np.asarray(weight(quad.angles), dtype=float)
    mass_w = quad.weights * rho

    def dual(q):
        return q.conj() * mass_w

    H, p0 = _arnoldi(quad.points, dual, N, float(mass_w.sum()))
    C = _expand_monomials(H, p0, extended_precision)
    prov = {
        **quad.describe(),
        "inner_product": BOUNDARY,
        "weight": weight.label,
        "extended_precision": extended_precision,
    }
    return OrthonormalBasis(N, BOUNDARY, H, p0, C, prov)


def build_interior_basis(
    domain: DomainSpec,
    N: int,
    M: Optional[int] = None,
    extended_precision: bool = False,
) -> OrthonormalBasis:
    """Orthonormal ``P_0..P_N`` for area measure on the domain.

    ``int_Omega p conj(q) dA = (1/2i) contour integral of p conj(Q) dz`` where
    ``Q' = q``; ``Q`` on the boundary is obtained spectrally by integrating
    ``q dz`` along the curve.
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    M = default_quad_size(N, INTERIOR) if M is None else M
    if M < 8 * (N + 2):
        raise QuadratureTooCoarse(f"M={M} < 8(N+2)={8 * (N + 2)}")
    quad = quadrature(domain, M)
    dz_over_2i = quad.dz / 2j

    def dual(q):
        return periodic_antiderivative(q, quad).conj() * dz_over_2i

    area = float(np.real(np.conj(quad.points) @ dz_over_2i))
    H, p0 = _arnoldi(quad.points, dual, N, area)
    C = _expand_monomials(H, p0, extended_precision)
    prov = {**quad.describe(), "inner_product": INTERIOR, "extended_precision": extended_precision}
    return OrthonormalBasis(N, INTERIOR, H, p0, C, prov)


def eval_basis(basis: OrthonormalBasis, z):
    """``(P_0(z), ..., P_N(z))`` along the last axis, via the recurrence."""
    z = np.asarray(z, dtype=complex)
    H = basis.hessenberg
    N = basis.degree
    P = np.empty(z.shape + (N + 1,), dtype=complex)
    P[..., 0] = basis.p0
    for k in range(N):
        v = z * P[..., k] - P[..., : k + 1] @ H[: k + 1, k]
        P[..., k + 1] = v / H[k + 1, k]
    return P


def eval_basis_with_derivative(basis: OrthonormalBasis, z):
    """Values and ``z``-derivatives of ``P_0..P_N``."""
    z = np.asarray(z, dtype=complex)
    H = basis.hessenberg
    N = basis.degree
    P = np.empty(z.shape + (N + 1,), dtype=complex)
    D = np.zeros_like(P)
    P[..., 0] = basis.p0
    for k in range(N):
        h = H[: k + 1, k]
        P[..., k + 1] = (z * P[..., k] - P[..., : k + 1] @ h) / H[k + 1, k]
        D[..., k + 1] = (P[..., k] + z * D[..., k] - D[..., : k + 1] @ h) / H[k + 1, k]
    return P, D


def recurrence_evaluator(basis: OrthonormalBasis, a: np.ndarray):
    """Row-wise evaluator of ``f_t = sum_k a[t, k] P_k`` for :func:`~eqzero.numerics.aberth`."""
    a = np.atleast_2d(a)
    N = basis.degree

    def evaluate(rows, z):
        ar = a[rows][:, None, :]
        with np.errstate(over="ignore", invalid="ignore"):
            P, D = eval_basis_with_derivative(basis, z)
            terms = P * ar
            err = 4 * (N + 1) * np.finfo(float).eps * np.sum(np.abs(terms), axis=-1)
            return terms.sum(axis=-1), np.sum(D * ar, axis=-1), err

    return evaluate


def _backward_error(basis: OrthonormalBasis, a: np.ndarray, roots: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        P = eval_basis(basis, roots)
        f = np.einsum("tk,tjk->tj", a, P)
        scale = np.linalg.norm(a, axis=1)[:, None] * np.linalg.norm(P, axis=-1)
        return np.abs(f) / scale


def basis_roots(basis: OrthonormalBasis, a, polish_tol: float = 1e-12, polish_iter: int = 20):
    """Zeros of ``sum_k a[t, k] P_k`` for each row ``t`` of ``a``.

    Roots of the monomial expansion are accepted when their backward error
    in the orthonormal basis is below ``polish_tol``; otherwise they seed a
    few Aberth sweeps that evaluate through the recurrence, which removes the
    error of the expansion.

    Returns
    -------
    roots : ndarray, shape (T, N)
    residual : ndarray, shape (T, N)
        ``|f(r)| / (||a|| * ||P(r)||)``, the backward error of each root in the
        orthonormal basis.
    """
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    roots, _ = find_roots_batch(a @ basis.monomial_matrix)
    res = _backward_error(basis, a, roots)
    rows = np.flatnonzero(~np.all(res <= polish_tol, axis=1))
    if rows.size:
        sub = a[rows]
        roots[rows] = aberth(recurrence_evaluator(basis, sub), roots[rows], polish_iter)
        res[rows] = _backward_error(basis, sub, roots[rows])
    return roots, res


def kernel_values(basis: OrthonormalBasis, z, w):
    """Vectorized ``sum_k P_k(z) conj(P_k(w))``."""
    return np.sum(eval_basis(basis, z) * np.conj(eval_basis(basis, w)), axis=-1)


def kernel_diagonal(basis: OrthonormalBasis, z, chunk: int = 65536):
    """``S_N(z, z)`` (or ``B_N``) on an array of points, evaluated in chunks."""
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    out = np.empty(flat.shape, dtype=float)
    for start in range(0, flat.size, chunk):
        P = eval_basis(basis, flat[start : start + chunk])
        out[start : start + chunk] = np.sum(P.real**2 + P.imag**2, axis=-1)
    return out.reshape(z.shape)


def partial_kernel(basis: OrthonormalBasis, z: complex, w: complex) -> KernelEvaluation:
    kind = "szego_partial" if basis.inner_product_kind == BOUNDARY else "bergman_partial"
    return KernelEvaluation(complex(kernel_values(basis, z, w)), basis.degree, kind)


def gram_matrix(basis: OrthonormalBasis, domain: DomainSpec, weight: Optional[WeightSpec] = None):
    """Gram matrix of the basis on its construction quadrature."""
    quad = quadrature(domain, basis.quad_provenance["M"])
    P = eval_basis(basis, quad.points).T  # (N+1, M)
    if basis.inner_product_kind == BOUNDARY:
        if weight is None:
            raise ValueError("boundary Gram matrix needs the weight")
        w = quad.weights * np.asarray(weight(quad.angles), dtype=float)
        return (P * w) @ P.conj().T
    A = np.array([periodic_antiderivative(row, quad) for row in P])
    return (P * (quad.dz / 2j)) @ A.conj().T


def gram_residual(basis: OrthonormalBasis, domain: DomainSpec, weight: Optional[WeightSpec] = None) -> float:
    G = gram_matrix(basis, domain, weight)
    return float(np.max(np.abs(G - np.eye(G.shape[0]))))


def szego_prediction(domain: DomainSpec, outer: OuterFunction, n: int, z):
    """``G_n(z) = psi(z) Phi(z)**n``."""
    return psi_factor(domain, outer, z) * exterior_map(domain, z) ** n


def carleman_prediction(domain: DomainSpec, n: int, z):
    """``((n+1)/pi)**1/2 Phi'(z) Phi(z)**n``."""
    w = exterior_map(domain, z)
    return math.sqrt((n + 1) / math.pi) * w**n / domain.dpsi(w)


def kernel_ratio(basis: OrthonormalBasis, domain: DomainSpec, z):
    """``A_N(z) = S_N(z, z) / sum_{n<=N} |Phi(z)|**(2n)``."""
    r2 = np.abs(exterior_map(domain, z)) ** 2
    N = basis.degree
    with np.errstate(divide="ignore", invalid="ignore"):
        geom = np.where(np.abs(r2 - 1) > 1e-12, (r2 ** (N + 1) - 1) / (r2 - 1), N + 1.0)
    return kernel_diagonal(basis, z) / geom


__all__ = [
    "BOUNDARY",
    "INTERIOR",
    "KernelEvaluation",
    "OrthonormalBasis",
    "build_boundary_basis",
    "basis_roots",
    "build_interior_basis",
    "carleman_prediction",
    "eval_basis",
    "eval_basis_with_derivative",
    "exterior_map_derivative",
    "gram_matrix",
    "gram_residual",
    "kernel_diagonal",
    "kernel_ratio",
    "kernel_values",
    "partial_kernel",
    "recurrence_evaluator",
    "szego_prediction",
]
