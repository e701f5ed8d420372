"""Special functions: Gamma, Bessel J of real order and the Legendre function P_beta.

Everything here is vectorised over numpy arrays where that is cheap, because the
Hankel transform evaluates J on dense (x, y) products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BesselOrder",
    "DomainError",
    "gamma_fn",
    "bessel_j",
    "legendre_p",
]


class DomainError(ValueError):
    """Argument outside the domain on which a function is defined here."""


@dataclass(frozen=True)
class BesselOrder:
    """The Bessel parameter lambda together with its derived quantities.

    ``alpha`` is the exponent attached to lambda in the mean-value theory and
    ``representation_valid`` flags the range lambda > 1 where the Carleson
    characterisation of Bessel-Poisson integrals holds.
    """

    lam: float
    alpha: float = field(init=False)
    representation_valid: bool = field(init=False)

    def __post_init__(self):
        lam = float(self.lam)
        if not math.isfinite(lam) or lam <= 0:
            raise DomainError(f"lambda must be a positive finite number, got {self.lam!r}")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "alpha", (1.0 + abs(2.0 * lam - 1.0)) / 2.0)
        object.__setattr__(self, "representation_valid", lam > 1.0)

    @classmethod
    def coerce(cls, order: "BesselOrder | float") -> "BesselOrder":
        return order if isinstance(order, cls) else cls(order)

    def __float__(self) -> float:
        return self.lam


# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def _gamma_lanczos(x: float) -> float:
    if x < 0.5:
        # reflection
        return math.pi / (math.sin(math.pi * x) * _gamma_lanczos(1.0 - x))
    x -= 1.0
    acc = _LANCZOS_COEF[0]
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += c / (x + i)
    tt = x + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * tt ** (x + 0.5) * math.exp(-tt) * acc


def gamma_fn(x: float) -> float:
    """Gamma function for real x > 0."""
    x = float(x)
    if not x > 0 or not math.isfinite(x):
        raise DomainError(f"gamma_fn requires x > 0, got {x!r}")
    if x > 171.6:
        return math.inf
    if x == round(x) and x <= 25:
        return float(math.factorial(int(x) - 1))
    return _gamma_lanczos(x)


def _switch_point(nu: float) -> float:
    return max(16.0, nu)


def _j_series(nu: float, z: np.ndarray) -> np.ndarray:
    # extended precision absorbs the cancellation near the switch point
    z = z.astype(np.longdouble)
    half = 0.5 * z
    q = -(half * half)
    with np.errstate(divide="ignore"):
        term = np.where(z > 0, np.exp(nu * np.log(np.where(z > 0, half, 1.0))), 0.0 if nu > 0 else 1.0)
    term = term / gamma_fn(nu + 1.0)
    total = term.copy()
    nu_ext = np.longdouble(nu)
    for k in range(1, 200):
        term = term * q / (k * (k + nu_ext))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
    return total.astype(float)


def _j_asymptotic(nu: float, z: np.ndarray) -> np.ndarray:
    mu = 4.0 * nu * nu
    p = np.ones_like(z)
    q = np.zeros_like(z)
    term = np.ones_like(z)
    live = np.ones(z.shape, dtype=bool)
    prev = np.full(z.shape, np.inf)
    for k in range(1, 80):
        term = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * z)
        mag = np.abs(term)
        # asymptotic series: stop once terms start growing
        live &= mag < prev
        prev = mag
        contrib = np.where(live, term, 0.0)
        if k % 2 == 1:
            q += contrib * (1 if (k // 2) % 2 == 0 else -1)
        else:
            p += contrib * (1 if (k // 2) % 2 == 0 else -1)
        live &= mag > 1e-18
        if not live.any():
            break
    omega = z - (0.5 * nu + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * z)) * (p * np.cos(omega) - q * np.sin(omega))


def _j_large(nu: float, z: np.ndarray) -> np.ndarray:
    # Hankel's expansion loses accuracy as nu grows at fixed z, so expand at
    # the fractional order and recur upwards (stable while order < z).
    if nu < 2.0:
        return _j_asymptotic(nu, z)
    base = nu - math.floor(nu)
    j_prev = _j_asymptotic(base, z)
    j_cur = _j_asymptotic(base + 1.0, z)
    order = base + 1.0
    while order < nu - 0.5:
        j_prev, j_cur = j_cur, (2.0 * order / z) * j_cur - j_prev
        order += 1.0
    return j_cur


def bessel_j(nu: float, z):
    """Bessel function of the first kind J_nu(z) for nu >= 0, z >= 0.

    Power series below ``max(16, nu)``; above it, Hankel's asymptotic expansion at
    the fractional order followed by upward recurrence.
    Accepts scalars or arrays; returns the same shape.
    """
    nu = float(nu)
    if nu < 0:
        raise DomainError(f"bessel_j requires nu >= 0, got {nu}")
    arr = np.asarray(z, dtype=float)
    if np.any(arr < 0) or np.any(~np.isfinite(arr)):
        raise DomainError("bessel_j requires finite z >= 0")
    flat = arr.ravel()
    out = np.empty_like(flat)
    cut = _switch_point(nu)
    lo = flat < cut
    if lo.any():
        out[lo] = _j_series(nu, flat[lo])
    if (~lo).any():
        out[~lo] = _j_large(nu, flat[~lo])
    out = out.reshape(arr.shape)
    return float(out) if np.ndim(z) == 0 else out


def legendre_p(beta: float, x: float, *, rtol: float = 1e-14) -> float:
    """Legendre function of the first kind P_beta(x) for x >= 1.

    Uses Laplace's integral (1/2pi) int_0^{2pi} (x + sqrt(x^2-1) cos th)^beta dth
    with the periodic trapezoid rule, doubling the node count until two
    successive values agree to ``rtol``.
    """
    x = float(x)
    if not x >= 1.0:
        raise DomainError(f"legendre_p requires x >= 1, got {x}")
    beta = float(beta)
    root = math.sqrt(x * x - 1.0)
    n = 16
    prev = None
    while n <= 1 << 16:
        th = 2.0 * math.pi * np.arange(n) / n
        val = float(np.mean((x + root * np.cos(th)) ** beta))
        if prev is not None and abs(val - prev) <= rtol * abs(val):
            return val
        prev = val
        n *= 2
    return prev
