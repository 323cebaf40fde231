"""Fractional-order operators on a bounded horizon.

The production assembly never calls the adaptive routines in this module;
they serve as reference evaluations for tests and for the manufactured
solution forcing.  The closed-form singular moments are shared with the
assembly path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import roots_jacobi

__all__ = [
    "FractionalParams",
    "QuadratureRule",
    "ScalarField1D",
    "kernel_eval",
    "riesz_caputo_derivative",
    "riesz_rl_derivative",
    "gauss_legendre_rule",
    "gauss_jacobi_rule",
    "singular_moment_integrate",
    "polynomial_field",
    "truncated_caputo_field",
    "riesz_adjoint_derivative",
]

# Geometric comparisons on horizon end points.
_GEOM_EPS = 1e-12


@dataclass(frozen=True)
class FractionalParams:
    """Order and horizon lengths of a two-sided fractional derivative.

    Parameters
    ----------
    alpha : float
        Order in (0, 1].
    l_A : float
        Horizon extent toward decreasing coordinate.
    l_B : float
        Horizon extent toward increasing coordinate.
    """

    alpha: float
    l_A: float
    l_B: float

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.l_A < 0 or self.l_B < 0 or self.l_A + self.l_B <= 0:
            raise ValueError(f"invalid horizon lengths l_A={self.l_A}, l_B={self.l_B}")

    @classmethod
    def truncated(cls, alpha: float, x: float, l_f: float, lo: float, hi: float) -> "FractionalParams":
        """Horizon of nominal length ``l_f`` clipped to the interval [lo, hi]."""
        if not (lo <= x <= hi):
            raise ValueError(f"point {x} outside [{lo}, {hi}]")
        return cls(alpha, min(l_f, x - lo), min(l_f, hi - x))

    @property
    def is_integer(self) -> bool:
        return self.alpha == 1.0


@dataclass(frozen=True)
class QuadratureRule:
    """Abscissae and weights on a reference interval."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if len(self.points) != len(self.weights) or len(self.points) < 1:
            raise ValueError("points and weights must have equal nonzero length")

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.dot(self.weights, f(self.points)))


@dataclass(frozen=True)
class ScalarField1D:
    """A sampler returning a value and its first derivative.

    ``interval`` is the closed range the sampler may be queried on; a query
    outside it is a contract violation and raises.
    """

    value: Callable[[float], float]
    derivative: Callable[[float], float]
    interval: tuple[float, float] = (-math.inf, math.inf)
    second: Callable[[float], float] | None = None

    def check(self, a: float, b: float) -> None:
        lo, hi = self.interval
        if a < lo - _GEOM_EPS or b > hi + _GEOM_EPS:
            raise ValueError(f"field defined on {self.interval}, queried on ({a}, {b})")


def polynomial_field(coeffs, interval=(-math.inf, math.inf)) -> ScalarField1D:
    """Field given by ascending power coefficients."""
    P = np.polynomial.polynomial
    c = np.asarray(coeffs, dtype=float)
    dc = P.polyder(c) if len(c) > 1 else np.zeros(1)
    d2c = P.polyder(dc) if len(dc) > 1 else np.zeros(1)
    return ScalarField1D(
        value=lambda x: float(P.polyval(x, c)),
        derivative=lambda x: float(P.polyval(x, dc)),
        interval=interval,
        second=lambda x: float(P.polyval(x, d2c)),
    )


def kernel_eval(x: float, x_prime: float, params: FractionalParams) -> float:
    """Power-law attenuation kernel of the fractional convolution.

    ``K = (1 - alpha)/2 * l**(alpha - 1) * |x - x'|**(-alpha)`` with
    ``l = l_A`` for ``x' < x`` and ``l = l_B`` for ``x' > x``.
    """
    a = params.alpha
    if a == 1.0:
        raise ValueError("kernel undefined at alpha = 1; use the integer-order branch")
    d = x_prime - x
    if d == 0.0:
        raise ValueError("kernel is singular at x' = x")
    if d < 0:
        if -d >= params.l_A + _GEOM_EPS or params.l_A == 0:
            raise ValueError("x' outside the left horizon")
        l = params.l_A
    else:
        if d >= params.l_B + _GEOM_EPS or params.l_B == 0:
            raise ValueError("x' outside the right horizon")
        l = params.l_B
    return 0.5 * (1.0 - a) * l ** (a - 1.0) * abs(d) ** (-a)


def _finite(v: float, where: str) -> float:
    if not np.isfinite(v):
        raise FloatingPointError(f"non-finite field sample in {where}")
    return v


def _weighted_side(g: Callable[[float], float], x: float, ext: float, alpha: float, left: bool, rtol: float) -> float:
    """int over the side of length ``ext`` of |s - x|**(-alpha) * g(s) ds."""
    if ext <= 0:
        return 0.0
    f = lambda s: _finite(g(s), "singular side integral")
    if left:
        val, _ = integrate.quad(f, x - ext, x, weight="alg", wvar=(0.0, -alpha),
                                epsabs=0.0, epsrel=rtol, limit=200)
    else:
        val, _ = integrate.quad(f, x, x + ext, weight="alg", wvar=(-alpha, 0.0),
                                epsabs=0.0, epsrel=rtol, limit=200)
    return val


def riesz_caputo_derivative(field: ScalarField1D, x: float, params: FractionalParams, rtol: float = 1e-10) -> float:
    """Riesz-Caputo derivative written as a kernel convolution of the slope.

    Each side of the horizon is integrated with an adaptive rule carrying
    the algebraic end-point weight, so the singularity at ``x`` is exact.
    At ``alpha = 1`` the integer derivative is returned directly.
    """
    a = params.alpha
    if a == 1.0:
        return _finite(field.derivative(x), "riesz_caputo_derivative")
    field.check(x - params.l_A, x + params.l_B)
    c = 0.5 * (1.0 - a)
    out = 0.0
    if params.l_A > 0:
        out += c * params.l_A ** (a - 1) * _weighted_side(field.derivative, x, params.l_A, a, True, rtol)
    if params.l_B > 0:
        out += c * params.l_B ** (a - 1) * _weighted_side(field.derivative, x, params.l_B, a, False, rtol)
    return out


def riesz_rl_derivative(field: ScalarField1D, x: float, params_shifted: FractionalParams, rtol: float = 1e-10) -> float:
    """Riesz Riemann-Liouville derivative on the shifted interval.

    The interval is ``(x - l_B, x + l_A)``: the left Riemann-Liouville
    derivative runs over length ``l_B`` and the right one over ``l_A``.
    Each one-sided derivative is expanded as the terminal term plus the
    Caputo part, ``RL = f(a) (x-a)**(-alpha) / Gamma(1-alpha) + Caputo``.
    """
    a = params_shifted.alpha
    if a == 1.0:
        return _finite(field.derivative(x), "riesz_rl_derivative")
    lA, lB = params_shifted.l_A, params_shifted.l_B
    field.check(x - lB, x + lA)
    c = 0.5 * (1.0 - a)
    out = 0.0
    if lB > 0:
        left = _finite(field.value(x - lB), "riesz_rl_derivative") / lB
        left += lB ** (a - 1) * _weighted_side(field.derivative, x, lB, a, True, rtol)
        out += c * left
    if lA > 0:
        right = -_finite(field.value(x + lA), "riesz_rl_derivative") / lA
        right += lA ** (a - 1) * _weighted_side(field.derivative, x, lA, a, False, rtol)
        out += c * right
    return out


def gauss_legendre_rule(n: int) -> QuadratureRule:
    """n-point Gauss-Legendre rule on [-1, 1], exact to degree 2n - 1."""
    if n < 1:
        raise ValueError("Gauss-Legendre rule needs n >= 1")
    x, w = np.polynomial.legendre.leggauss(n)
    return QuadratureRule(x, w)


def gauss_jacobi_rule(n: int, alpha: float) -> QuadratureRule:
    """n-point rule on [0, 1] for the weight ``t**(-alpha)``.

    Exact for ``int_0^1 t**(-alpha) p(t) dt`` with deg p <= 2n - 1; the
    weights sum to ``1/(1 - alpha)``.
    """
    if n < 1:
        raise ValueError("Gauss-Jacobi rule needs n >= 1")
    if not (0.0 <= alpha < 1.0):
        raise ValueError("weight exponent must lie in [0, 1)")
    # Jacobi weight (1-z)^0 (1+z)^(-alpha) on [-1,1], mapped by t = (1+z)/2.
    z, w = roots_jacobi(n, 0.0, -alpha)
    return QuadratureRule((1.0 + z) / 2.0, w * 2.0 ** (alpha - 1.0))


def singular_moment_integrate(poly_degree: int, alpha: float, interval: tuple[float, float],
                              singular_end: str = "left") -> np.ndarray:
    """Moments ``int_a^b |s - s*|**(-alpha) s**k ds`` for k = 0..poly_degree.

    ``s*`` is the left or right end of the interval.  The moments are in
    the local coordinate ``s`` measured from the singular point, so for
    ``singular_end='left'`` they are ``int_0^{b-a} t**(k-alpha) dt`` and for
    ``'right'`` they are ``int_{a-b}^0 |t|**(-alpha) t**k dt``.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError("singular moments need 0 < alpha < 1")
    a, b = interval
    if not a < b:
        raise ValueError("interval must satisfy a < b")
    if singular_end == "left":
        return signed_power_moments(0.0, b - a, alpha, poly_degree)
    if singular_end == "right":
        return signed_power_moments(a - b, 0.0, alpha, poly_degree)
    raise ValueError("singular_end must be 'left' or 'right'")


def signed_power_moments(s0: float, s1: float, alpha: float, deg: int) -> np.ndarray:
    """``int_{s0}^{s1} |s|**(-alpha) s**k ds`` for a segment not straddling 0."""
    if s0 < 0 < s1:
        raise ValueError("segment straddles the singular point")
    k = np.arange(deg + 1)
    e = k + 1.0 - alpha
    if s0 >= 0:
        return (s1 ** e - s0 ** e) / e
    t0, t1 = -s1, -s0
    return (-1.0) ** k * (t1 ** e - t0 ** e) / e


def truncated_caputo_field(field: ScalarField1D, alpha: float, l_f: float, lo: float, hi: float,
                           rtol: float = 1e-10) -> ScalarField1D:
    """The map ``s -> D^alpha field(s)`` with the horizon clipped to [lo, hi].

    The returned derivative differentiates through the clipped horizon
    lengths as well as the integrand, so it is exact where the horizon
    touches a boundary.  ``field`` must provide a second derivative.
    """
    if field.second is None:
        raise ValueError("field needs a second derivative")
    a = alpha

    def params(s):
        return FractionalParams.truncated(a, s, l_f, lo, hi)

    def value(s):
        return riesz_caputo_derivative(field, s, params(s), rtol)

    if a == 1.0:
        return ScalarField1D(value, field.second, (lo, hi))

    def derivative(s):
        p = params(s)
        c = 0.5 * (1.0 - a)
        out = 0.0
        for ext, left, hits in ((p.l_A, True, s - lo < l_f), (p.l_B, False, hi - s < l_f)):
            if ext <= 0:
                continue
            inner = _weighted_side(field.derivative, s, ext, a, left, rtol)
            inner2 = _weighted_side(field.second, s, ext, a, left, rtol)
            term = ext ** (a - 1.0) * inner2
            if hits:
                # d(ext)/ds is +1 on the left side and -1 on the right side.
                sgn = 1.0 if left else -1.0
                end = s - ext if left else s + ext
                term += sgn * ((a - 1.0) * ext ** (a - 2.0) * inner + ext ** (-1.0) * field.derivative(end))
            out += c * term
        return out

    return ScalarField1D(value, derivative, (lo, hi))


def _alg_then_plain(g, x0: float, length: float, direction: float, alpha: float, kink: float | None, rtol: float) -> float:
    """int_0^length t**(-alpha) g(x0 + direction*t) dt, split at a known kink in t."""
    if length <= 0:
        return 0.0
    h = lambda t: _finite(g(x0 + direction * t), "adjoint integral")
    if kink is not None and 0.0 < kink < length:
        first, _ = integrate.quad(h, 0.0, kink, weight="alg", wvar=(-alpha, 0.0), epsabs=0.0, epsrel=rtol, limit=200)
        second, _ = integrate.quad(lambda t: h(t) * t ** (-alpha), kink, length, epsabs=0.0, epsrel=rtol, limit=200)
        return first + second
    val, _ = integrate.quad(h, 0.0, length, weight="alg", wvar=(-alpha, 0.0), epsabs=0.0, epsrel=rtol, limit=200)
    return val


def riesz_adjoint_derivative(field: ScalarField1D, x: float, alpha: float, l_f: float, lo: float, hi: float,
                             rtol: float = 1e-10) -> float:
    """Exact adjoint of the truncated Riesz-Caputo operator, ``d/dx G(x)``.

    ``G(x') = int K(x, x') field(x) dx`` collects the kernel weights that
    the point ``x'`` receives from every point whose horizon contains it,
    so that ``int N D^alpha f = -int f dG/dx'`` whenever ``f`` vanishes at
    ``lo`` and ``hi``.  Away from the boundaries this is the Caputo-type
    convolution of the slope with the horizon sides swapped; near them the
    clipped horizon lengths of the contributing points enter as well.
    """
    a = alpha
    if a == 1.0:
        return _finite(field.derivative(x), "riesz_adjoint_derivative")
    c = 0.5 * (1.0 - a)
    f, df = field.value, field.derivative
    # A truncated derivative loses one horizon side exactly at an end point,
    # so the boundary terms need the one-sided limits of the field.
    eps = _GEOM_EPS * (hi - lo)
    f_lo, f_hi = f(lo + eps), f(hi - eps)

    def lA(z):
        return min(l_f, z - lo)

    def lB(z):
        return min(l_f, hi - z)

    out = 0.0
    # Points to the right (z = x + t) weigh x through their left length lA(z).
    ext = min(l_f, hi - x)
    kink = lo + l_f - x  # lA(z) stops growing at z = lo + l_f

    def g_right(z):
        la = lA(z)
        dla = 1.0 if z - lo < l_f else 0.0
        return (a - 1.0) * la ** (a - 2.0) * dla * f(z) + la ** (a - 1.0) * df(z)

    out += c * _alg_then_plain(g_right, x, ext, 1.0, a, kink, rtol)
    if hi - x < l_f:
        # Upper limit hi - x moves with x.
        out -= c * lA(hi) ** (a - 1.0) * ext ** (-a) * f_hi
    # Points to the left (z = x - t) weigh x through their right length lB(z).
    ext = min(l_f, x - lo)
    kink = x - (hi - l_f)  # lB(z) stops growing at z = hi - l_f

    def g_left(z):
        lb = lB(z)
        dlb = -1.0 if hi - z < l_f else 0.0
        return (a - 1.0) * lb ** (a - 2.0) * dlb * f(z) + lb ** (a - 1.0) * df(z)

    out += c * _alg_then_plain(g_left, x, ext, -1.0, a, kink, rtol)
    if x - lo < l_f:
        out += c * lB(lo) ** (a - 1.0) * ext ** (-a) * f_lo
    return out
