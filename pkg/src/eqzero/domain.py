"""Analytic plane domains described by the inverse exterior Riemann map.

A domain is given by finitely many Laurent coefficients of

    Psi(w) = c w + c_0 + sum_{k=1..K} c_k w**(-k),     |w| >= 1,

which maps the exterior of the unit disk onto the exterior of the domain.
``Phi`` (the exterior map) is its inverse.  Boundary weights are functions
of the angle ``theta`` of the preimage point ``e^{i theta}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import yaml

from .errors import ConfigError, DegenerateBoundary, MapInversionFailure, WeightNotPositive
from .numerics import BoundaryQuadrature, MonomialPolynomial, find_roots

DEFAULT_OUTER_MODES = 256
_LOG_DERIVATIVE_SAMPLES = 4096


@dataclass(frozen=True)
class DomainSpec:
    c: float
    c0: complex = 0j
    tail: tuple = ()
    label: str = "domain"
    collar: Optional[float] = None

    def __post_init__(self):
        if not (np.isfinite(self.c) and self.c > 0):
            raise DegenerateBoundary(f"capacity coefficient c must be positive, got {self.c!r}")
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "c0", complex(self.c0))
        tail = tuple(complex(t) for t in self.tail)
        while tail and tail[-1] == 0:
            tail = tail[:-1]
        object.__setattr__(self, "tail", tail)
        r = self.critical_radius
        if r >= 1.0:
            raise DegenerateBoundary(
                f"Psi' vanishes at |w| = {r:.4g} >= 1; the Laurent data is not univalent outside the disk"
            )
        if self.collar is None:
            object.__setattr__(self, "collar", 0.2 * (1.0 - r * r))
        if not _curve_is_simple(self.psi(np.exp(2j * np.pi * np.arange(512) / 512))):
            raise DegenerateBoundary(f"boundary curve of {self.label!r} intersects itself")

    # Laurent evaluation -------------------------------------------------

    def psi(self, w):
        """Inverse exterior map ``Psi(w)``."""
        w = np.asarray(w, dtype=complex)
        inv = 1.0 / w
        acc = np.zeros_like(w)
        for ck in self.tail[::-1]:
            acc = (acc + ck) * inv
        out = self.c * w + self.c0 + acc
        return out[()] if out.ndim == 0 else out

    def dpsi(self, w):
        """``Psi'(w) = c - sum k c_k w**(-k-1)``."""
        w = np.asarray(w, dtype=complex)
        inv = 1.0 / w
        acc = np.zeros_like(w)
        for k in range(len(self.tail), 0, -1):
            acc = (acc + k * self.tail[k - 1]) * inv
        out = self.c - acc * inv
        return out[()] if out.ndim == 0 else out

    @cached_property
    def critical_radius(self) -> float:
        """Largest modulus of a zero of ``Psi'``; the map is conformal beyond it."""
        K = len(self.tail)
        if K == 0:
            return 0.0
        # w**(K+1) Psi'(w) = c w**(K+1) - sum_k k c_k w**(K-k)
        coeffs = np.zeros(K + 2, dtype=complex)
        coeffs[K + 1] = self.c
        for k in range(1, K + 1):
            coeffs[K - k] -= k * self.tail[k - 1]
        p = MonomialPolynomial(coeffs)
        if p.degree < 1:
            return 0.0
        return float(np.max(np.abs(find_roots(p))))

    @cached_property
    def is_real_symmetric(self) -> bool:
        return self.c0.imag == 0 and all(t.imag == 0 for t in self.tail)

    @cached_property
    def length(self) -> float:
        """Perimeter, by trapezoid quadrature of ``|Psi'(e^{i theta})|``."""
        return quadrature(self, 2048).length

    @cached_property
    def _log_dpsi_coeffs(self) -> np.ndarray:
        # Laurent coefficients l_k of log(Psi'(w)/c) = sum_{k>=1} l_k w**(-k)
        M = _LOG_DERIVATIVE_SAMPLES
        theta = 2 * np.pi * np.arange(M) / M
        vals = self.dpsi(np.exp(1j * theta)) / self.c
        # zero winding is guaranteed by critical_radius < 1
        logv = np.log(np.abs(vals)) + 1j * np.unwrap(np.angle(vals))
        X = np.fft.fft(logv) / M
        # coefficient of e^{-ik theta} is X[M-k]
        coeffs = np.concatenate([[0j], X[::-1][: M // 2 - 1]])
        return coeffs

    def log_dpsi(self, w):
        """Branch of ``log(Psi'(w)/c)`` that vanishes at infinity."""
        w = np.asarray(w, dtype=complex)
        inv = 1.0 / w
        acc = np.zeros_like(w)
        for lk in self._log_dpsi_coeffs[:0:-1]:
            acc = (acc + lk) * inv
        return acc[()] if acc.ndim == 0 else acc

    def describe(self) -> dict:
        return {
            "label": self.label,
            "c": self.c,
            "c0": [self.c0.real, self.c0.imag],
            "tail": [[t.real, t.imag] for t in self.tail],
            "collar": self.collar,
        }


def _curve_is_simple(z: np.ndarray) -> bool:
    """No two non-adjacent edges of the closed polygon ``z`` cross."""
    a = z
    b = np.roll(z, -1)
    n = z.size
    d = b - a

    def cross(u, v):
        return u.real * v.imag - u.imag * v.real

    for i in range(n):
        j = np.arange(i + 2, n)
        if i == 0:
            j = j[:-1]
        if j.size == 0:
            continue
        p, r = a[i], d[i]
        q, s = a[j], d[j]
        denom = cross(r, s)
        qp = q - p
        with np.errstate(divide="ignore", invalid="ignore"):
            t = cross(qp, s) / denom
            u = cross(qp, r) / denom
        hit = (denom != 0) & (t >= 0) & (t <= 1) & (u >= 0) & (u <= 1)
        if hit.any():
            return False
    return True


def disk(radius: float = 1.0) -> DomainSpec:
    return DomainSpec(c=radius, label="disk" if radius == 1.0 else f"disk:{radius:g}", collar=0.2)


def ellipse(m: float, c: float = 1.0) -> DomainSpec:
    """``Psi(w) = c (w + m/w)``: semi-axes ``c(1+m)`` and ``c(1-m)``."""
    if not 0.0 <= m < 1.0:
        raise ConfigError(f"ellipse parameter m must lie in [0, 1), got {m}")
    return DomainSpec(c=c, tail=(c * m,), label=f"ellipse:{m:g}", collar=0.2 * (1.0 - m))


def perturbed_disk(eps: float = 0.1) -> DomainSpec:
    """``Psi(w) = w + eps w**-2``."""
    return DomainSpec(c=1.0, tail=(0.0, eps), label=f"perturbed:{eps:g}")


# weights ------------------------------------------------------------------


@dataclass(frozen=True)
class WeightSpec:
    """Positive boundary density as a function of the preimage angle ``theta``."""

    evaluator: Callable
    fourier_budget: int = DEFAULT_OUTER_MODES
    label: str = "weight"

    def __call__(self, theta):
        return self.evaluator(np.asarray(theta, dtype=float))

    def scaled(self, factor: float) -> "WeightSpec":
        if factor <= 0:
            raise WeightNotPositive("scale factor must be positive")
        ev = self.evaluator
        return WeightSpec(lambda t: factor * ev(t), self.fourier_budget, f"{factor:g}*{self.label}")


def constant_weight(value: float = 1.0) -> WeightSpec:
    if not value > 0:
        raise WeightNotPositive(f"constant weight must be positive, got {value}")
    return WeightSpec(lambda t: np.full(np.shape(t), float(value)), label=f"constant:{value!r}")


def exp_cos_weight(amplitude: float) -> WeightSpec:
    """``rho(theta) = exp(amplitude * cos(theta))``."""
    return WeightSpec(lambda t: np.exp(amplitude * np.cos(t)), label=f"exp_cos:{amplitude!r}")


def parse_weight(spec: str) -> WeightSpec:
    """Parse ``constant:<v>`` or ``exp_cos:<amplitude>``."""
    try:
        kind, _, arg = str(spec).partition(":")
        kind = kind.strip()
        if kind == "constant":
            return constant_weight(float(arg) if arg else 1.0)
        if kind == "exp_cos":
            return exp_cos_weight(float(arg))
    except ValueError as exc:
        raise ConfigError(f"weight: cannot parse {spec!r} ({exc})") from None
    raise ConfigError(f"weight: unknown weight spec {spec!r}; expected constant:<v> or exp_cos:<amplitude>")


# boundary geometry --------------------------------------------------------


def boundary_point(domain: DomainSpec, theta):
    return domain.psi(np.exp(1j * np.asarray(theta, dtype=float)))


def boundary_speed(domain: DomainSpec, theta):
    """``|Psi'(e^{i theta})|``, the arc-length density ``|dz| / d theta``."""
    speed = np.abs(domain.dpsi(np.exp(1j * np.asarray(theta, dtype=float))))
    if np.any(speed < 1e-12):
        raise DegenerateBoundary("boundary speed vanishes; Laurent data is not univalent")
    return speed


def quadrature(domain: DomainSpec, M: int) -> BoundaryQuadrature:
    """Trapezoid rule with ``M`` nodes on the boundary curve."""
    if M < 1:
        raise ValueError("M must be positive")
    theta = 2 * np.pi * np.arange(M) / M
    w = np.exp(1j * theta)
    dpsi = domain.dpsi(w)
    dz = 1j * w * dpsi * (2 * np.pi / M)
    return BoundaryQuadrature(
        node_count=M,
        angles=theta,
        points=domain.psi(w),
        weights=np.abs(dz),
        dz=dz,
        label=domain.label,
    )


def exterior_map(domain: DomainSpec, z, max_iter: int = 60):
    """``Phi(z)``: solve ``Psi(w) = z`` by Newton's method.

    Raises
    ------
    MapInversionFailure
        If some point does not converge to a preimage with
        ``|w| >= 1 - collar`` (the point lies too deep inside the domain).
    """
    w, ok = exterior_map_partial(domain, z, max_iter)
    if not np.all(ok):
        bad = np.asarray(z)[~ok] if np.ndim(z) else z
        raise MapInversionFailure(f"cannot invert the exterior map at {np.ravel(bad)[:3]}")
    return w


def exterior_map_partial(domain: DomainSpec, z, max_iter: int = 60):
    """Like :func:`exterior_map` but returns ``(w, ok)`` instead of raising."""
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    shape = z.shape
    z = z.ravel()
    s1 = (z - domain.c0) / domain.c
    mod = np.abs(s1)
    unit = np.where(mod > 0, s1 / np.where(mod > 0, mod, 1), 1.0)
    seeds = [s1, unit * np.maximum(mod, 1.0), 1.5 * unit, unit * (1 - 0.5 * domain.collar)]
    w = np.full(z.shape, np.nan + 0j)
    ok = np.zeros(z.shape, dtype=bool)
    floor = 1.0 - domain.collar
    for seed in seeds:
        todo = ~ok
        if not todo.any():
            break
        cand = seed[todo].copy()
        target = z[todo]
        with np.errstate(all="ignore"):
            for _ in range(max_iter):
                step = (domain.psi(cand) - target) / domain.dpsi(cand)
                cand = cand - step
                if np.all(np.abs(step) <= 1e-15 * np.maximum(1.0, np.abs(cand))):
                    break
            resid = np.abs(domain.psi(cand) - target)
        good = np.isfinite(cand) & (resid < 1e-12 * (1 + np.abs(target))) & (np.abs(cand) >= floor)
        idx = np.flatnonzero(todo)[good]
        w[idx] = cand[good]
        ok[idx] = True
    if scalar:
        return w[0], bool(ok[0])
    return w.reshape(shape), ok.reshape(shape)


def exterior_map_derivative(domain: DomainSpec, z):
    """``Phi'(z) = 1 / Psi'(Phi(z))``."""
    return 1.0 / domain.dpsi(exterior_map(domain, z))


def sqrt_exterior_derivative(domain: DomainSpec, z):
    """``Phi'(z)**(1/2)`` on the branch that is positive at infinity.

    The branch is fixed through ``log Psi'`` expanded in ``1/w``; it is
    therefore continuous along the whole boundary and collar.
    """
    w = exterior_map(domain, z)
    return np.exp(-0.5 * domain.log_dpsi(w)) / math.sqrt(domain.c)


def equilibrium_pairing(domain: DomainSpec, phi: Callable, M: int = 256) -> float:
    """``int phi d nu`` for the equilibrium measure, the push-forward of ``d theta / 2 pi``."""
    if M < 16:
        raise ValueError("M must be at least 16")
    theta = 2 * np.pi * np.arange(M) / M
    vals = np.asarray(phi(boundary_point(domain, theta)))
    return float(np.real(vals.sum()) / M)


# outer function -----------------------------------------------------------


@dataclass(frozen=True)
class OuterFunction:
    """``D(w) = exp(a_0 + sum_{k>=1} a_k w**-k)``, zero-free on ``|w| >= 1``.

    On the unit circle ``|D|**2`` equals the weight it was built from.
    """

    log_coeffs: np.ndarray
    label: str = field(default="")

    def log_value(self, w):
        w = np.asarray(w, dtype=complex)
        inv = 1.0 / w
        acc = np.zeros_like(w)
        for ak in self.log_coeffs[:0:-1]:
            acc = (acc + ak) * inv
        out = acc + self.log_coeffs[0]
        return out[()] if out.ndim == 0 else out

    def value(self, w):
        return np.exp(self.log_value(w))

    def at(self, domain: DomainSpec, z):
        """``Delta_e(z) = D(Phi(z))``."""
        return self.value(exterior_map(domain, z))


def outer_function(domain: DomainSpec, weight: WeightSpec, J: Optional[int] = None) -> OuterFunction:
    """Zero-free exterior function whose boundary modulus squared is ``weight``.

    With ``b_k`` the Fourier coefficients of ``log(rho)/2`` in the preimage
    angle, ``a_0 = b_0`` and ``a_k = 2 b_{-k}``.
    """
    J = weight.fourier_budget if J is None else J
    if J > weight.fourier_budget:
        raise ValueError(f"J={J} exceeds the weight's fourier budget {weight.fourier_budget}")
    M = max(4 * J, 512)
    theta = 2 * np.pi * np.arange(M) / M
    rho = np.asarray(weight(theta), dtype=float)
    if not np.all(rho > 0) or not np.all(np.isfinite(rho)):
        raise WeightNotPositive(f"weight {weight.label} is not strictly positive on the boundary")
    X = np.fft.fft(0.5 * np.log(rho)) / M
    a = np.empty(J + 1, dtype=complex)
    a[0] = X[0].real
    a[1:] = 2 * np.conj(X[1 : J + 1])
    # exact zeros for constant weights keep D identically constant
    a[1:][np.abs(a[1:]) < 1e-17 * max(1.0, abs(a[0]))] = 0
    return OuterFunction(a, label=weight.label)


def psi_factor(domain: DomainSpec, outer: OuterFunction, z):
    """Szego amplitude ``psi(z)`` with ``P_n(z) ~ psi(z) Phi(z)**n``.

    Normalized for the inner product ``int f conj(g) rho |dz|``:
    ``psi = (2 pi)**-1/2 Delta_e(z)**-1 Phi'(z)**1/2``.  This is the classical
    ``(L / 2 pi)**1/2 Delta_e**-1 Phi'**1/2`` written for the length-normalized
    measure ``rho |dz| / L``; the two agree once ``Delta_e`` is taken for the
    same measure.
    """
    w = exterior_map(domain, z)
    sqrt_dphi = np.exp(-0.5 * domain.log_dpsi(w)) / math.sqrt(domain.c)
    return sqrt_dphi / (outer.value(w) * math.sqrt(2 * np.pi))


# domain description files -------------------------------------------------

_FILE_KEYS = {"c", "c0", "tail", "weight", "label"}


def _pair(value, key):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return complex(value[0], value[1])
    raise ConfigError(f"{key}: expected a pair of reals [re, im], got {value!r}")


def parse_domain_mapping(data: dict, default_label: str = "domain"):
    """Build ``(DomainSpec, WeightSpec)`` from an already-parsed mapping."""
    if not isinstance(data, dict):
        raise ConfigError("domain file must contain a mapping of keys")
    unknown = set(data) - _FILE_KEYS
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown key (allowed: {', '.join(sorted(_FILE_KEYS))})")
    c = data.get("c", 1.0)
    if isinstance(c, bool) or not isinstance(c, (int, float)) or not c > 0:
        raise ConfigError(f"c: expected a positive real, got {c!r}")
    c0 = _pair(data.get("c0", [0.0, 0.0]), "c0")
    tail_raw = data.get("tail", [])
    if not isinstance(tail_raw, list):
        raise ConfigError(f"tail: expected a list of [re, im] pairs, got {tail_raw!r}")
    tail = tuple(_pair(t, "tail") for t in tail_raw)
    label = data.get("label", default_label)
    if not isinstance(label, str):
        raise ConfigError(f"label: expected a string, got {label!r}")
    weight = parse_weight(data.get("weight", "constant:1"))
    try:
        dom = DomainSpec(c=float(c), c0=c0, tail=tail, label=label)
    except DegenerateBoundary as exc:
        raise ConfigError(f"tail: {exc}") from None
    return dom, weight


def load_domain_file(path) -> tuple:
    """Read a domain description file (YAML or JSON syntax)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"domain: cannot read {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"domain: {path} is not valid structured text ({exc})") from None
    return parse_domain_mapping(data, default_label=path.stem)


def builtin_domain(name: str) -> DomainSpec:
    """``disk``, ``ellipse:<m>`` or ``perturbed[:<eps>]``."""
    kind, _, arg = name.partition(":")
    try:
        if kind == "disk":
            return disk()
        if kind == "ellipse":
            return ellipse(float(arg) if arg else 0.5)
        if kind == "perturbed":
            return perturbed_disk(float(arg) if arg else 0.1)
    except ValueError as exc:
        raise ConfigError(f"domain: cannot parse {name!r} ({exc})") from None
    raise ConfigError(f"domain: {name!r} is neither a file nor a built-in domain")
