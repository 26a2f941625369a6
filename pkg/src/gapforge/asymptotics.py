"""Closed-form limits of the scalar gap system in four parameter regimes.

Each regime freezes the tanh factor of the pairing equation at one of its
saturation values and solves the remaining algebra exactly:

* ``IA``  — repulsive pairing channel, low temperature: ``tanh -> +1`` so
  ``w_bar = lambda_b`` and the rest follows in closed form.
* ``IIA`` — attractive pairing channel, low temperature: ``tanh -> -1`` so
  ``w_bar = |lambda_b|`` (both couplings must be attractive for the branch
  to exist at all).
* ``IB``  — repulsive channel near the root-disappearance temperature:
  linearising the tanh gives ``w_bar = lambda_b*mu/(lambda_b - 2T)`` with
  ``delta_m -> lambda_m`` (the small-gap limit of the mean-field equation).
* ``IIB`` — attractive channel, small argument: same linearised forms.

A regime that does not apply to the sign pattern of the couplings raises
:class:`NotApplicable`; a regime whose formulas evaluate fine but sit
outside their own validity window returns ``valid=False`` instead, with the
margin showing how far outside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .core_types import ModelParams, validate
from .errors import NotAdmissible, NotApplicable, SingularDenominator

DEFAULT_MARGIN_FACTOR = 10.0


class Regime(str, Enum):
    IA = "IA"
    IB = "IB"
    IIA = "IIA"
    IIB = "IIB"


@dataclass(frozen=True)
class RegimeSolution:
    """One closed-form branch with its own-validity assessment.

    ``validity_margin`` is >= 1 when the defining inequality of the regime is
    satisfied with the requested safety factor; ``valid`` also requires any
    regime-specific sign conditions.  ``delta_b`` may be NaN when the
    radicand of the energy identity goes negative — that is an out-of-window
    answer, not an error.
    """

    regime: Regime
    w_bar: float
    delta_m: float
    delta_b: float
    valid: bool
    validity_margin: float

    def as_dict(self) -> dict:
        return {
            "regime": self.regime.value,
            "w_bar": self.w_bar,
            "delta_m": self.delta_m,
            "delta_b": self.delta_b,
            "valid": self.valid,
            "validity_margin": self.validity_margin,
        }


def _saturated(regime: Regime, params: ModelParams,
               margin_factor: float) -> RegimeSolution:
    """Shared algebra for the saturated-tanh regimes IA / IIA."""
    lb, lm, mu = params.lambda_b, params.lambda_m, params.mu
    w = abs(lb)
    denom = lb + lm
    if denom == 0.0:
        raise SingularDenominator(
            "lambda_b + lambda_m = 0: closed-form delta_m degenerates"
        )
    delta_m = lm * (lb - mu) / denom
    # radicand factorises: (|lb| - eff)(|lb| + eff) with eff = mu + delta_m
    eff = mu + delta_m
    radicand = w * w - eff * eff
    if regime is Regime.IA:
        gap_scale = lb - mu   # distance to the no-pairing boundary
    else:
        gap_scale = mu - w    # attractive side: Fermi level above |lambda_b|
    if params.temperature == 0.0:
        margin = math.inf if gap_scale > 0.0 else 0.0
    elif math.isinf(params.temperature):
        margin = 0.0
    else:
        margin = gap_scale / (2.0 * params.temperature * margin_factor)
    valid = radicand > 0.0 and margin >= 1.0
    delta_b = math.sqrt(radicand) if radicand >= 0.0 else math.nan
    return RegimeSolution(regime, w, delta_m, delta_b, valid, margin)


def regime_IA(params: ModelParams,
              margin_factor: float = DEFAULT_MARGIN_FACTOR) -> RegimeSolution:
    """Low-temperature closed form for the repulsive pairing channel.

    ``w_bar = lambda_b`` exactly; the returned triple satisfies the energy
    identity to machine precision by construction.  Requires
    ``lambda_b > 0`` (else :class:`NotApplicable`).  Accurate once
    ``beta*(lambda_b - mu)/2 >> 1``; the margin divides that exponent by
    ``margin_factor``.
    """
    params = validate(params)
    if params.lambda_b <= 0.0:
        raise NotApplicable("regime IA needs lambda_b > 0")
    return _saturated(Regime.IA, params, margin_factor)


def regime_IIA(params: ModelParams,
               margin_factor: float = DEFAULT_MARGIN_FACTOR) -> RegimeSolution:
    """Low-temperature closed form for the attractive pairing channel.

    Needs both couplings attractive (``lambda_b < 0`` and ``lambda_m < 0``);
    the mixed branch sits below the Fermi level, ``w_bar = |lambda_b| < mu``.
    The extra sign condition ``lambda_b + mu + 2*lambda_m < 0`` is what makes
    the radicand positive, so it is folded into ``valid``.
    """
    params = validate(params)
    if params.lambda_b >= 0.0 or params.lambda_m >= 0.0:
        raise NotApplicable("regime IIA needs lambda_b < 0 and lambda_m < 0")
    sol = _saturated(Regime.IIA, params, margin_factor)
    if params.lambda_b + params.mu + 2.0 * params.lambda_m >= 0.0:
        return RegimeSolution(sol.regime, sol.w_bar, sol.delta_m, sol.delta_b,
                              False, sol.validity_margin)
    return sol


def _linearised(regime: Regime, params: ModelParams,
                margin_factor: float) -> RegimeSolution:
    """Shared algebra for the small-argument regimes IB / IIB."""
    lb, lm, mu = params.lambda_b, params.lambda_m, params.mu
    T = params.temperature
    if lb == 2.0 * T:
        raise SingularDenominator(
            "lambda_b = 2T: the linearised pairing equation degenerates"
        )
    w = lb * mu / (lb - 2.0 * T)
    delta_m = lm
    eff = mu + lm
    radicand = w * w - eff * eff
    if radicand < -1e-12 * max(1.0, w * w):
        raise NotAdmissible(
            f"linearised w_bar = {w:.6g} below effective energy "
            f"|mu + lambda_m| = {abs(eff):.6g}"
        )
    delta_b = math.sqrt(max(radicand, 0.0))

    if regime is Regime.IB:
        # window: T_lo < T <= T_hi with T_hi set by the small-argument bound
        t_hi = (lb - mu) / (2.0 * margin_factor)
        t_lo = lm * lb / (2.0 * eff) if eff != 0.0 else math.inf
        in_window = eff > 0.0 and t_lo < T <= t_hi
        margin = T / t_lo if (eff > 0.0 and t_lo > 0.0 and math.isfinite(t_lo)) \
            else (math.inf if in_window else 0.0)
    else:
        # IIB mirror: lb < 0, both bounds reflected
        t_hi = lb * lm / (2.0 * eff) if eff != 0.0 else -math.inf
        t_lo = margin_factor * (mu + lb) / 2.0
        in_window = eff > 0.0 and t_lo <= T < t_hi
        margin = t_hi / T if (eff > 0.0 and T > 0.0 and t_hi > 0.0) \
            else (math.inf if in_window else 0.0)
    return RegimeSolution(regime, w, delta_m, delta_b, in_window, margin)


def regime_IB(params: ModelParams,
              margin_factor: float = DEFAULT_MARGIN_FACTOR) -> RegimeSolution:
    """Near-transition closed form for the repulsive channel.

    Valid in a temperature window just below the root-disappearance point:
    high enough that the tanh argument stays small, low enough that the
    linearisation error is controlled.  Requires ``lambda_b > 2T > 0``
    (``lambda_b <= 0`` or ``lambda_b < 2T`` raise :class:`NotApplicable`,
    equality raises :class:`SingularDenominator`).
    """
    params = validate(params)
    if params.lambda_b <= 0.0:
        raise NotApplicable("regime IB needs lambda_b > 0")
    if math.isinf(params.temperature) or params.lambda_b < 2.0 * params.temperature:
        raise NotApplicable(
            "regime IB needs lambda_b > 2T (below the root-disappearance point)"
        )
    return _linearised(Regime.IB, params, margin_factor)


def regime_IIB(params: ModelParams,
               margin_factor: float = DEFAULT_MARGIN_FACTOR) -> RegimeSolution:
    """Small-argument closed form for the attractive channel.

    Same linearised expressions as the repulsive case but with
    ``lambda_b < 0`` the denominator never vanishes at positive temperature.
    Requires ``lambda_b < 0`` and ``lambda_m < 0``.
    """
    params = validate(params)
    if params.lambda_b >= 0.0 or params.lambda_m >= 0.0:
        raise NotApplicable("regime IIB needs lambda_b < 0 and lambda_m < 0")
    return _linearised(Regime.IIB, params, margin_factor)
