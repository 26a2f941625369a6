"""Region classification and parameter-space scans.

Two complementary views of where solutions live:

* :func:`classify_region` evaluates the closed-form coupling-plane
  inequalities — cheap, and independent of any root finding.  Labels:
  ``A+``/``B+``/``C+`` on the repulsive-pairing side (split by which of the
  two asymptotic windows is available), ``A-``/``B-`` on the attractive
  side, ``none`` where no mixed solution is possible.
* :func:`multiplicity_class` counts actual roots of the pairing-energy
  equation via the reduced tangency curve (repulsive side) or the exact
  root finder (attractive side).

The two are cross-checked by tests, not merged: the region map may
over-approximate near its boundaries, so consistency is only asserted away
from them.

Scans walk a row-major lattice over (lambda_b, lambda_m, mu, temperature) in
that fixed axis order, solve every point independently, and emit one
:class:`ScanRow` each.  Points that fail validation land in the row's
``error`` column; a scan never aborts half-way.  Output order is
deterministic regardless of the worker count (``GAPFORGE_THREADS``).
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from enum import Enum
from typing import IO, Iterable, Mapping

import numpy as np

from .core_types import ModelParams, PhaseLabel, to_reduced
from .errors import ConfigError, DomainError, GapEquationError, ZeroTemperature
from .scalar_gap import equilibrium_mu, pairing_energy_roots, solve_all

_AXES = ("lambda_b", "lambda_m", "mu", "temperature")


class RegionLabel(str, Enum):
    A_PLUS = "A+"
    B_PLUS = "B+"
    C_PLUS = "C+"
    A_MINUS = "A-"
    B_MINUS = "B-"
    NONE = "none"


class MultiplicityClass(str, Enum):
    NO_SOLUTION = "no_solution"
    UNIQUE = "unique"
    TWO = "two"


def classify_region(params: ModelParams) -> RegionLabel:
    """Closed-form coupling-plane label; no root finding involved.

    Repulsive pairing channel (lambda_b > 0): mixed solutions need
    ``lambda_b > mu``; within that strip the low-temperature window is open
    for ``lambda_m > -(lambda_b + mu)/2`` and the near-transition window for
    ``lambda_m < (lambda_b - 4 mu)/4`` — both hold in the middle band
    (``B+``), only the former at large ``lambda_m`` (``A+``), only the
    latter at strongly negative ``lambda_m`` (``C+``).  Attractive channel
    (lambda_b < 0): the admissible band is
    ``-2 mu <= lambda_m <= -mu T / (|lambda_b| + 2 T)`` (upper bound taken
    in the limit at T = 0 and T = inf), split into ``B-`` below
    ``-(lambda_b + 4 mu)/4`` and ``A-`` above.  Comparisons are plain IEEE
    inequalities, so exact boundary points deterministically join the closed
    side.
    """
    lb, lm, mu, T = params.lambda_b, params.lambda_m, params.mu, params.temperature
    if lb > 0.0:
        if lb <= mu:
            return RegionLabel.NONE
        low_t_side = lm > -(lb + mu) / 2.0
        near_tc_side = lm < (lb - 4.0 * mu) / 4.0
        if low_t_side and near_tc_side:
            return RegionLabel.B_PLUS
        if low_t_side:
            return RegionLabel.A_PLUS
        return RegionLabel.C_PLUS
    if lb < 0.0:
        if T == 0.0:
            upper = -0.0
        elif math.isinf(T):
            upper = -mu / 2.0
        else:
            upper = -mu * T / (abs(lb) + 2.0 * T)
        if not (-2.0 * mu <= lm <= upper):
            return RegionLabel.NONE
        if lm < -(lb + 4.0 * mu) / 4.0:
            return RegionLabel.B_MINUS
        return RegionLabel.A_MINUS
    return RegionLabel.NONE


def multiplicity_class(params: ModelParams) -> MultiplicityClass:
    """Root count of the pairing-energy equation as a three-way class.

    Repulsive side: the reduced equation ``x = lb tanh(x - mb)`` has two
    roots strictly below the tangency curve ``mb = mb_e(lb)``, one exactly
    on it, none above; ``lb <= 1`` (temperature at or past lambda_b / 2)
    never has any.  ``mu = 0`` degenerates to a single root.  Attractive
    side: delegated to the exact root finder, which returns at most one.
    Positive temperature required: the reduced variables live at T > 0.
    """
    if params.is_zero_temperature:
        raise ZeroTemperature("multiplicity classes are defined at T > 0")
    if params.lambda_b == 0.0:
        return MultiplicityClass.NO_SOLUTION
    if params.lambda_b < 0.0:
        roots = pairing_energy_roots(params)
        return MultiplicityClass.UNIQUE if roots else MultiplicityClass.NO_SOLUTION
    if math.isinf(params.temperature):
        return MultiplicityClass.NO_SOLUTION
    red = to_reduced(params)
    if red.lambda_b_bar <= 1.0:
        return MultiplicityClass.NO_SOLUTION
    if red.mu_bar == 0.0:
        return MultiplicityClass.UNIQUE
    mu_e, _ = equilibrium_mu(red.lambda_b_bar)
    if abs(red.mu_bar - mu_e) <= 1e-9:
        return MultiplicityClass.UNIQUE
    if red.mu_bar < mu_e:
        return MultiplicityClass.TWO
    return MultiplicityClass.NO_SOLUTION


@dataclass(frozen=True)
class ScanRow:
    """One lattice point of a scan, flattened for delimited output.

    Solution columns hold ``None`` (empty CSV field, JSON null) when the
    corresponding branch does not exist — never a placeholder zero.  The
    ``error`` column is set, and all physics columns cleared, for points
    whose evaluation raised.
    """

    lambda_b: float
    lambda_m: float
    mu: float
    temperature: float
    region: RegionLabel | None
    multiplicity: int | None
    delta_m_pure: float | None
    w_bar_pure: float | None
    delta_m_lower: float | None
    delta_b_lower: float | None
    w_bar_lower: float | None
    delta_m_upper: float | None
    delta_b_upper: float | None
    w_bar_upper: float | None
    error: str | None


SCAN_COLUMNS = tuple(f.name for f in fields(ScanRow))


def _evaluate_point(lb: float, lm: float, mu: float, T: float,
                    tol: float) -> ScanRow:
    base = dict(lambda_b=float(lb), lambda_m=float(lm), mu=float(mu),
                temperature=float(T),
                region=None, multiplicity=None,
                delta_m_pure=None, w_bar_pure=None,
                delta_m_lower=None, delta_b_lower=None, w_bar_lower=None,
                delta_m_upper=None, delta_b_upper=None, w_bar_upper=None,
                error=None)
    try:
        report = solve_all(ModelParams(float(lb), float(lm), float(mu),
                                       float(T)), tol=tol)
    except GapEquationError as exc:
        base["error"] = str(exc)
        return ScanRow(**base)
    pure = report.pure
    base.update(region=report.region, multiplicity=report.multiplicity,
                delta_m_pure=pure.delta_m, w_bar_pure=pure.w_bar)
    for sol in report.mixed:
        slot = "upper" if sol.phase is PhaseLabel.MIXED_UPPER else "lower"
        base.update({f"delta_m_{slot}": sol.delta_m,
                     f"delta_b_{slot}": sol.delta_b,
                     f"w_bar_{slot}": sol.w_bar})
    return ScanRow(**base)


def _worker_count() -> int:
    raw = os.environ.get("GAPFORGE_THREADS")
    if raw is None:
        return 1
    try:
        workers = int(raw)
    except ValueError:
        raise ConfigError(f"GAPFORGE_THREADS must be an integer, got {raw!r}") from None
    if workers < 1:
        raise ConfigError(f"GAPFORGE_THREADS must be >= 1, got {workers}")
    return workers


def scan(ranges: Mapping[str, tuple[float, float, int]],
         fixed: Mapping[str, float], tol: float = 1e-10) -> list[ScanRow]:
    """Row-major lattice scan; every parameter set exactly once.

    ``ranges`` maps axis names to ``(lo, hi, steps)`` triples sampled with
    ``numpy.linspace``; ``fixed`` pins the remaining axes.  Axis order in
    the output is always lambda_b, then lambda_m, then mu, then temperature
    — independent of mapping order.  Parallel evaluation (capped by the
    GAPFORGE_THREADS environment variable) preserves that order.
    """
    overlap = set(ranges) & set(fixed)
    if overlap:
        raise ConfigError(f"parameters both ranged and fixed: {sorted(overlap)}")
    unknown = (set(ranges) | set(fixed)) - set(_AXES)
    if unknown:
        raise ConfigError(f"unknown scan parameters: {sorted(unknown)}")
    missing = set(_AXES) - set(ranges) - set(fixed)
    if missing:
        raise ConfigError(f"unspecified scan parameters: {sorted(missing)}")

    axes: list[np.ndarray] = []
    for name in _AXES:
        if name in fixed:
            axes.append(np.array([float(fixed[name])]))
            continue
        lo, hi, steps = ranges[name]
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ConfigError(f"range for {name} must be finite, got ({lo}, {hi})")
        if int(steps) < 1:
            raise ConfigError(f"range for {name} needs steps >= 1, got {steps}")
        axes.append(np.linspace(lo, hi, int(steps)))

    points = [(lb, lm, mu, T)
              for lb in axes[0] for lm in axes[1] for mu in axes[2] for T in axes[3]]
    workers = _worker_count()
    if workers == 1:
        return [_evaluate_point(*pt, tol) for pt in points]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda pt: _evaluate_point(*pt, tol), points))


def equilibrium_curve(lo: float, hi: float,
                      steps: int) -> list[tuple[float, float, float]]:
    """Sample the tangency curve: (lambda_b_bar, mu_e_bar, x_e) triples.

    The reduced coupling range must sit strictly above 1, where the curve
    exists; ``mu_e_bar`` is strictly increasing across the returned list.
    """
    if not (math.isfinite(lo) and math.isfinite(hi)) or not 1.0 < lo <= hi:
        raise DomainError(
            f"equilibrium curve needs 1 < lo <= hi finite, got ({lo!r}, {hi!r})"
        )
    if int(steps) < 1:
        raise DomainError(f"steps must be >= 1, got {steps}")
    out = []
    for value in np.linspace(lo, hi, int(steps)):
        mu_e, x_e = equilibrium_mu(float(value))
        out.append((float(value), mu_e, x_e))
    return out


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, RegionLabel):
        return value.value
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def write_scan_csv(rows: Iterable[ScanRow], stream: IO[str]) -> None:
    """CSV with a mandatory header, LF line endings, shortest-round-trip floats."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SCAN_COLUMNS)
    for row in rows:
        writer.writerow([_cell(getattr(row, name)) for name in SCAN_COLUMNS])


def write_scan_json(rows: Iterable[ScanRow], stream: IO[str]) -> None:
    """JSON mirror of the CSV: an array of one object per row."""
    payload = []
    for row in rows:
        obj = {}
        for name in SCAN_COLUMNS:
            value = getattr(row, name)
            obj[name] = value.value if isinstance(value, RegionLabel) else value
        payload.append(obj)
    json.dump(payload, stream, indent=2)
    stream.write("\n")
