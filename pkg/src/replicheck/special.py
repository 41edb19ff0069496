"""Special functions for p-values and confidence intervals.

Everything here is pure Python on floats: log-gamma (Lanczos), the
regularized incomplete beta function (Lentz continued fraction), the F
survival function and Student-t CDF/quantile built on top of it.
"""
from __future__ import annotations

import math

from .errors import NumericError

CF_MAX_ITER = 300
CF_EPS = 1e-14
_TINY = 1e-300

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
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# Stirling series coefficients B_2k / (2k (2k-1)).
_STIRLING = (1 / 12, -1 / 360, 1 / 1260, -1 / 1680, 1 / 1188, -691 / 360360, 1 / 156)


def ln_gamma(x: float) -> float:
    """Natural log of the gamma function for ``x > 0``."""
    x = float(x)
    if not x > 0 or math.isinf(x):
        raise ValueError(f"ln_gamma requires 0 < x < inf, got {x}")
    if x < 0.5:
        # reflection keeps the Lanczos sum in its accurate range
        return math.log(math.pi / math.sin(math.pi * x)) - ln_gamma(1.0 - x)
    if x >= 20.0:
        inv = 1.0 / x
        inv2 = inv * inv
        series, power = 0.0, inv
        for c in _STIRLING:
            series += c * power
            power *= inv2
        return (x - 0.5) * math.log(x) - x + _HALF_LOG_2PI + series
    z = x - 1.0
    acc = _LANCZOS_COEF[0]
    for k in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[k] / (z + k)
    tt = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * math.log(tt) - tt + math.log(acc)


def ln_beta(a: float, b: float) -> float:
    return ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)


def _beta_cf(x: float, a: float, b: float) -> float:
    """Continued fraction for I_x(a, b), modified Lentz's method."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < CF_EPS:
            return h
    raise NumericError(
        f"incomplete beta continued fraction did not converge in {CF_MAX_ITER} "
        f"iterations (x={x}, a={a}, b={b})"
    )


def _reg_inc_beta(x: float, y: float, a: float, b: float) -> float:
    # y = 1 - x, passed separately so callers can avoid cancellation
    if x <= 0.0:
        return 0.0
    if y <= 0.0:
        return 1.0
    log_front = a * math.log(x) + b * math.log(y) - ln_beta(a, b)
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        val = front * _beta_cf(x, a, b) / a
    else:
        val = 1.0 - front * _beta_cf(y, b, a) / b
    return min(1.0, max(0.0, val))


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta function ``I_x(a, b)``."""
    x, a, b = float(x), float(a), float(b)
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if not (a > 0 and b > 0) or math.isinf(a) or math.isinf(b):
        raise ValueError(f"a and b must be positive and finite, got a={a}, b={b}")
    return _reg_inc_beta(x, 1.0 - x, a, b)


def _check_df(df, name="df"):
    if isinstance(df, bool) or int(df) != df or df < 1:
        raise ValueError(f"{name} must be a positive integer, got {df!r}")
    return int(df)


def f_sf(f: float, d1: int, d2: int) -> float:
    """Upper tail probability ``P(F > f)`` of the F(d1, d2) distribution."""
    f = float(f)
    d1 = _check_df(d1, "d1")
    d2 = _check_df(d2, "d2")
    if math.isnan(f) or f < 0:
        raise ValueError(f"F statistic must be >= 0, got {f}")
    if f == 0.0:
        return 1.0
    if math.isinf(f):
        return 0.0
    denom = d2 + d1 * f
    return _reg_inc_beta(d2 / denom, d1 * f / denom, d2 / 2.0, d1 / 2.0)


def t_sf(t: float, df: int) -> float:
    """Upper tail ``P(T > t)`` for Student's t with ``df`` degrees of freedom."""
    t = float(t)
    df = _check_df(df)
    if math.isnan(t):
        raise ValueError("t is NaN")
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    t2 = t * t
    denom = df + t2
    half_two_sided = 0.5 * _reg_inc_beta(df / denom, t2 / denom, df / 2.0, 0.5)
    return half_two_sided if t >= 0 else 1.0 - half_two_sided


def t_cdf(t: float, df: int) -> float:
    t = float(t)
    if t <= 0:
        return t_sf(-t, df)
    return 1.0 - t_sf(t, df)


def t_quantile(p: float, df: int) -> float:
    """Inverse Student-t CDF by bracketing and safeguarded Newton steps."""
    p = float(p)
    df = _check_df(df)
    if not (0.0 < p < 1.0):
        raise ValueError(f"p must lie strictly in (0, 1), got {p}")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -t_quantile(1.0 - p, df)
    # work with the upper tail q = 1 - p to keep precision for p near 1
    q = 1.0 - p
    lo, hi = 0.0, 1.0
    while t_sf(hi, df) > q:
        lo, hi = hi, hi * 2.0
        if hi > 1e300:
            raise NumericError(f"could not bracket t quantile for p={p}, df={df}")
    log_norm = ln_gamma((df + 1) / 2.0) - ln_gamma(df / 2.0) - 0.5 * math.log(df * math.pi)
    x = 0.5 * (lo + hi)
    for _ in range(200):
        g = t_sf(x, df) - q
        if g == 0.0:
            return x
        if g > 0:
            lo = x
        else:
            hi = x
        dens = math.exp(log_norm - (df + 1) / 2.0 * math.log1p(x * x / df))
        delta = g / dens if dens > 0 else math.inf
        if abs(delta) <= 1e-14 * max(1.0, x):
            return x + delta
        step = x + delta
        x = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 1e-15 * max(1.0, x):
            return x
    raise NumericError(f"t quantile did not converge for p={p}, df={df}")
