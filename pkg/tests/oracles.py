"""Independent reference implementations used to pin expected test values.

Everything in here is deliberately written against ``math``/``numpy`` only —
no imports from :mod:`gapforge` — so a test comparing the library to these
helpers exercises two genuinely separate code paths.  The closed-form
constants sprinkled through the test modules were produced by these
functions; re-running them should reproduce every frozen digit.
"""

from __future__ import annotations

import math

import numpy as np


def pairing_defect(w: float, lambda_b: float, mu: float, temperature: float) -> float:
    """Scalar self-consistency defect w - lambda_b * tanh((w - mu) / 2T)."""
    return w - lambda_b * math.tanh((w - mu) / (2.0 * temperature))


def bisect(f, lo: float, hi: float, iters: int = 200) -> float:
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if (f_lo < 0.0) == (f_hi < 0.0):
        raise ValueError(f"no sign change on [{lo}, {hi}]")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if (f_lo < 0.0) == (f_mid < 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    return 0.5 * (lo + hi)


def scan_pairing_roots(lambda_b: float, mu: float, temperature: float,
                       lo: float, hi: float, n: int = 200_000) -> list[float]:
    """Brute-force root scan of the pairing equation on (lo, hi)."""
    f = lambda w: pairing_defect(w, lambda_b, mu, temperature)
    xs = np.linspace(lo, hi, n + 1)
    vals = np.array([f(x) for x in xs])
    roots = []
    for a, b, fa, fb in zip(xs, xs[1:], vals, vals[1:]):
        if fa == 0.0:
            roots.append(float(a))
        elif fa * fb < 0.0:
            roots.append(bisect(f, float(a), float(b)))
    if vals[-1] == 0.0:
        roots.append(float(xs[-1]))
    return roots


def pure_gap(lambda_m: float, beta: float) -> float:
    """Root of d * (1 + exp(beta * d)) = 2 * lambda_m by bisection."""
    if lambda_m == 0.0:
        return 0.0
    g = lambda d: d * (1.0 + math.exp(min(beta * d, 700.0))) - 2.0 * lambda_m
    lo, hi = (-(abs(lambda_m) * 2 + 1), 0.0) if lambda_m < 0 else (0.0, 2 * lambda_m + 1)
    return bisect(g, lo, hi)


def mixed_delta_m(w: float, lambda_b: float, lambda_m: float, mu: float) -> float:
    return lambda_m * (lambda_b - mu) / (lambda_b + lambda_m)


def smearing_intensity_gaussian(kappa: float) -> float:
    """Exact double integral of exp(-2k(p-p')^2 - p^2 - p'^2) over the plane."""
    return math.pi / math.sqrt(4.0 * kappa + 1.0)


def tangency_point(lambda_b_bar: float) -> tuple[float, float]:
    """(mu_e_bar, x_e) where the reduced pairing curve touches the diagonal."""
    theta = math.acosh(math.sqrt(lambda_b_bar))
    x_e = lambda_b_bar * math.tanh(theta)
    return x_e - theta, x_e


def occupation_reference(c2: float, fermi: float) -> float:
    return c2 * fermi + (1.0 - c2) * (1.0 - fermi)
