"""Shared value types for the coupled mean-field / pairing gap equations.

The model couples two interaction channels of a fermion gas: a density
(mean-field) channel with strength ``lambda_m`` producing an energy shift
``delta_m``, and a pairing channel with strength ``lambda_b`` producing a
superconducting gap ``delta_b``.  Together with the chemical potential ``mu``
and the temperature ``T`` these four energies fix everything; only their
ratios matter, so no unit system is imposed.

Temperature conventions
-----------------------
``T == 0`` is a distinguished flag meaning ``beta = inf``; all thermal
factors then take their exact step/sign limits instead of overflowing.
``T == inf`` is likewise allowed and means ``beta = 0``.

Reduced variables
-----------------
Scale-free analysis uses "barred" quantities ``Q_bar = beta * Q / 2``.  They
are undefined at zero temperature, where :func:`to_reduced` raises.

All types here are immutable value objects and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from enum import Enum
from typing import NamedTuple, TYPE_CHECKING

import numpy as np

from .errors import (
    InvalidParameter,
    NegativeChemicalPotential,
    NegativeTemperature,
    ZeroTemperature,
)

if TYPE_CHECKING:  # pragma: no cover - typing only
    from .phase_diagram import RegionLabel


@dataclass(frozen=True)
class ModelParams:
    """The four model energies: pairing and mean-field couplings, mu, T."""

    lambda_b: float
    lambda_m: float
    mu: float
    temperature: float

    @property
    def beta(self) -> float:
        """Inverse temperature; ``inf`` at T = 0 and ``0`` at T = inf."""
        if self.temperature == 0.0:
            return math.inf
        if math.isinf(self.temperature):
            return 0.0
        return 1.0 / self.temperature

    @property
    def is_zero_temperature(self) -> bool:
        return self.temperature == 0.0


class ReducedParams(NamedTuple):
    """Barred (dimensionless) couplings and chemical potential."""

    lambda_b_bar: float
    lambda_m_bar: float
    mu_bar: float


def validate(params: ModelParams) -> ModelParams:
    """Check parameter ranges and return a normalized copy.

    ``mu`` must be finite and non-negative, the couplings finite, and the
    temperature non-negative (``inf`` is allowed).  Negative zero
    temperature is normalized to plain ``0.0`` so the zero-temperature flag
    compares cleanly.
    """
    lb = float(params.lambda_b)
    lm = float(params.lambda_m)
    mu = float(params.mu)
    temp = float(params.temperature)

    if not math.isfinite(lb):
        raise InvalidParameter(f"lambda_b must be finite, got {lb!r}")
    if not math.isfinite(lm):
        raise InvalidParameter(f"lambda_m must be finite, got {lm!r}")
    if math.isnan(mu) or math.isinf(mu):
        raise InvalidParameter(f"mu must be finite, got {mu!r}")
    if mu < 0.0:
        raise NegativeChemicalPotential(f"mu must be >= 0, got {mu!r}")
    if math.isnan(temp) or temp < 0.0:
        raise NegativeTemperature(f"temperature must be >= 0, got {temp!r}")
    if temp == 0.0:
        temp = 0.0  # normalize -0.0 to the canonical zero-temperature flag
    return ModelParams(lb, lm, mu, temp)


def to_reduced(params: ModelParams) -> ReducedParams:
    """Return the barred values ``beta * Q / 2`` for the couplings and mu.

    Raises :class:`ZeroTemperature` at T = 0 where these diverge.  At
    infinite temperature all barred values are zero.
    """
    if params.temperature == 0.0:
        raise ZeroTemperature("reduced (barred) variables are undefined at T = 0")
    half_beta = 0.5 * params.beta
    return ReducedParams(
        params.lambda_b * half_beta,
        params.lambda_m * half_beta,
        params.mu * half_beta,
    )


def fermi(x, beta: float):
    """Occupation factor 1/(e^(beta*x) + 1), elementwise.

    Exact limits are used at the distinguished temperatures: a step function
    at ``beta = inf`` (with value 1/2 at x = 0) and the constant 1/2 at
    ``beta = 0``.  The exponent is clipped to avoid overflow.
    """
    arr = np.asarray(x, dtype=float)
    if math.isinf(beta):
        out = np.where(arr < 0.0, 1.0, np.where(arr > 0.0, 0.0, 0.5))
    elif beta == 0.0:
        out = np.full_like(arr, 0.5)
    else:
        z = np.clip(beta * arr, -700.0, 700.0)
        out = 1.0 / (1.0 + np.exp(z))
    return float(out) if arr.ndim == 0 else out


def tanh_half(x, beta: float):
    """tanh(beta*x/2) elementwise, with sign-function limit at beta = inf."""
    arr = np.asarray(x, dtype=float)
    if math.isinf(beta):
        out = np.sign(arr)
    else:
        out = np.tanh(0.5 * beta * arr)
    return float(out) if arr.ndim == 0 else out


@dataclass(frozen=True)
class BogoliubovCoefficients:
    """Real rotation coefficients (c, s) with mixing angle phi.

    ``c = cos(phi)`` and ``s = sin(phi)``; the rotation diagonalizes the
    quadratic mode Hamiltonian.  For non-negative effective single-particle
    energy the angle stays in [-pi/4, pi/4], equivalently ``|c| >= sqrt(2)/2``.
    """

    c: float
    s: float
    phi: float

    def as_dict(self) -> dict:
        return {"c": self.c, "s": self.s, "phi": self.phi}


class PhaseLabel(str, Enum):
    """Which self-consistent branch a solution belongs to.

    ``MIXED_LOWER`` / ``MIXED_UPPER`` order the emitted mixed solutions by
    quasi-particle energy; ``TANGENT`` marks the degenerate double root at
    the bifurcation locus.
    """

    PURE_MEAN_FIELD = "pure_mean_field"
    MIXED_LOWER = "mixed_lower"
    MIXED_UPPER = "mixed_upper"
    TANGENT = "tangent"


@dataclass(frozen=True)
class GapSolution:
    """One converged solution of the coupled gap system.

    ``delta_b`` is stored non-negative; the pairing gap enters the equations
    only through its square, so ``+delta_b`` and ``-delta_b`` are physically
    equivalent.  ``delta_b_sign_ambiguous`` records that both signs are valid
    whenever ``delta_b > 0``.

    ``w_bar`` is the quasi-particle energy at the Fermi surface.  Mixed
    solutions always have ``w_bar > 0``; for the pure mean-field branch the
    signed effective energy ``mu + delta_m`` is stored (it may be negative),
    which keeps ``w_bar**2 == (mu + delta_m)**2 + delta_b**2`` exact.
    """

    delta_m: float
    delta_b: float
    w_bar: float
    coeffs: BogoliubovCoefficients
    phase: PhaseLabel
    residual: float
    delta_b_sign_ambiguous: bool

    def as_dict(self) -> dict:
        d = asdict(self)
        d["coeffs"] = self.coeffs.as_dict()
        d["phase"] = self.phase.value
        return d


@dataclass(frozen=True)
class SolveReport:
    """All solutions found at one parameter point.

    ``solutions`` lists the pure mean-field branch first, then mixed
    solutions ordered by increasing ``w_bar``.  ``multiplicity`` counts the
    mixed solutions; ``notes`` records roots that were found but dropped
    (for example because the pairing amplitude would be imaginary there).
    """

    params: ModelParams
    solutions: tuple[GapSolution, ...]
    region: "RegionLabel"
    multiplicity: int
    notes: tuple[str, ...] = ()

    @property
    def pure(self) -> GapSolution:
        return self.solutions[0]

    @property
    def mixed(self) -> tuple[GapSolution, ...]:
        return tuple(s for s in self.solutions if s.phase is not PhaseLabel.PURE_MEAN_FIELD)

    def as_dict(self) -> dict:
        return {
            "params": asdict(self.params),
            "region": str(getattr(self.region, "value", self.region)),
            "multiplicity": self.multiplicity,
            "notes": list(self.notes),
            "solutions": [s.as_dict() for s in self.solutions],
        }


def solution_checks(sol: GapSolution, params: ModelParams, tol: float = 1e-8) -> dict[str, bool]:
    """Evaluate the structural identities every emitted solution should satisfy.

    Returns a name -> bool map; callers decide what to do with failures.  The
    mixing-angle bound ``|c| >= sqrt(2)/2`` is reported but only holds when
    the effective energy ``mu + delta_m`` is non-negative (it is optional for
    mixed solutions unless the caller filtered on it).
    """
    c, s = sol.coeffs.c, sol.coeffs.s
    omega_eff = params.mu + sol.delta_m
    checks: dict[str, bool] = {}
    checks["coefficient_norm"] = abs(c * c + s * s - 1.0) <= 1e-12
    checks["energy_identity"] = (
        abs(sol.w_bar**2 - (omega_eff**2 + sol.delta_b**2)) <= tol * max(1.0, sol.w_bar**2)
    )
    if sol.w_bar != 0.0:
        checks["rotation_consistency"] = (
            abs((c * c - s * s) - omega_eff / sol.w_bar) <= tol
            and abs(2.0 * c * s - sol.delta_b / sol.w_bar) <= tol
        )
    else:
        checks["rotation_consistency"] = sol.delta_b == 0.0
    if params.lambda_m != 0.0:
        checks["mean_field_sign"] = sol.delta_m * params.lambda_m >= 0.0
        checks["mean_field_bound"] = abs(sol.delta_m) <= 2.0 * abs(params.lambda_m) + tol
    else:
        checks["mean_field_sign"] = sol.delta_m == 0.0
        checks["mean_field_bound"] = True
    checks["mixing_angle_bound"] = abs(c) >= math.sqrt(0.5) - 1e-12
    if sol.phase is not PhaseLabel.PURE_MEAN_FIELD:
        checks["pairing_below_quasienergy"] = sol.delta_b <= sol.w_bar + tol
        checks["quasienergy_above_coupling_bound"] = sol.w_bar <= abs(params.lambda_b) + tol
        band = tol * max(1.0, params.mu)
        if params.lambda_b > 0:
            checks["fermi_surface_side"] = sol.w_bar > params.mu - band
        elif params.lambda_b < 0:
            checks["fermi_surface_side"] = sol.w_bar < params.mu + band
        if sol.delta_b > 0.0:
            checks["strictly_above_effective_energy"] = sol.w_bar > omega_eff
    return checks
