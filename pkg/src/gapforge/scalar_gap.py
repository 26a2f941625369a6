"""Exact solver for the Fermi-surface reduction of the coupled gap equations.

At the Fermi surface the coupled system collapses to three scalar relations
for the mean-field shift ``delta_m``, the pairing gap ``delta_b`` and the
quasi-particle energy ``w_bar``:

* pairing self-consistency   ``w_bar = lambda_b * tanh(beta*(w_bar - mu)/2)``
* mean-field self-consistency, linear in ``delta_m`` once the pairing branch
  fixes ``tanh(...) = w_bar / lambda_b``, giving the closed form
  ``delta_m = lambda_m*(lambda_b - mu)/(lambda_b + lambda_m)``
* energy identity            ``w_bar**2 = (mu + delta_m)**2 + delta_b**2``

Everything here works in the reduced variable ``x = beta*w_bar/2`` where the
pairing equation reads ``x = lb*tanh(x - mb)`` with ``lb = beta*lambda_b/2``,
``mb = beta*mu/2``.  For ``lambda_b > 0`` the defect ``f(x) = x - lb*tanh(x - mb)``
is strictly convex on the search window ``(mb, lb]`` with its minimum at
``x_min = mb + arccosh(sqrt(lb))``; the minimum value equals ``mb - mb_e``
where ``mb_e`` is the equilibrium (tangency) chemical potential of
:func:`equilibrium_mu`.  Root multiplicity therefore flips exactly on that
curve: two roots strictly below it, a single degenerate root on it, none
above.  For ``lambda_b < 0`` the defect is strictly increasing and there is
exactly one root in ``(0, min(mb, |lb|))`` whenever ``mu > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_types import (
    BogoliubovCoefficients,
    GapSolution,
    ModelParams,
    PhaseLabel,
    SolveReport,
    fermi,
    to_reduced,
    validate,
)
from .errors import (
    ConstraintViolation,
    DomainError,
    NotAdmissible,
    NotApplicable,
    SingularDenominator,
    ZeroCoupling,
    ZeroEnergy,
)
from .thermal import bogoliubov_from_gaps

_SCAN_POINTS = 513  # initial bracketing grid: 512 subdivisions


@dataclass(frozen=True)
class RootBracket:
    """A sign-change interval for the reduced pairing defect."""

    lo: float
    hi: float
    f_lo: float
    f_hi: float

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError("bracket endpoints must satisfy lo < hi")
        if self.f_lo * self.f_hi > 0.0:
            raise ValueError("bracket must straddle a sign change")


def _defect(x: float, lb: float, mb: float) -> float:
    return x - lb * math.tanh(x - mb)


def _defect_prime(x: float, lb: float, mb: float) -> float:
    t = math.tanh(x - mb)
    return 1.0 - lb * (1.0 - t * t)


def _bisect(lb: float, mb: float, lo: float, hi: float, f_lo: float, f_hi: float) -> float:
    """Bisection to |hi - lo| < 1e-12 absolute, then one guarded Newton polish."""
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if hi - lo < 1e-12:
            break
        f_mid = _defect(mid, lb, mb)
        if f_mid == 0.0:
            return mid
        if (f_lo < 0.0) == (f_mid < 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    x = 0.5 * (lo + hi)
    fp = _defect_prime(x, lb, mb)
    if abs(fp) > 1e-8:
        x_new = x - _defect(x, lb, mb) / fp
        if lo - 1e-9 <= x_new <= hi + 1e-9:
            x = x_new
    return x


def _reduced_pairing_roots(lb: float, mb: float, tol: float) -> tuple[list[float], bool]:
    """All roots x > max(0, mb)·side of x = lb*tanh(x - mb); tangency flagged.

    Returns (sorted roots, is_tangent).  The tangent flag is set when no sign
    change exists but the convex minimum of the defect lies within
    ``sqrt(tol)`` of zero, in which case the analytic minimum itself is
    emitted as the (double) root.
    """
    if lb > 0.0:
        if lb <= 1.0:
            # slope bound: lb*tanh(x - mb) < x for all x > 0 when lb <= 1, mb >= 0
            return [], False
        lo_edge, hi_edge = mb, lb
        grid = np.linspace(lo_edge, hi_edge, _SCAN_POINTS)
        vals = grid - lb * np.tanh(grid - mb)
        roots: list[float] = []
        for i in range(len(grid) - 1):
            a, b = float(vals[i]), float(vals[i + 1])
            if b == 0.0:
                roots.append(float(grid[i + 1]))
            elif a == 0.0:
                if i > 0:  # x = mb itself is outside the open domain
                    roots.append(float(grid[i]))
            elif (a < 0.0) != (b < 0.0):
                roots.append(_bisect(lb, mb, float(grid[i]), float(grid[i + 1]), a, b))
        roots = _dedupe(roots)

        theta = math.acosh(math.sqrt(lb))
        x_min = mb + theta
        tangent = False
        if not roots:
            f_min = _defect(x_min, lb, mb)
            band = math.sqrt(tol)
            if abs(f_min) <= band:
                roots = [x_min]
                tangent = True
            elif f_min < 0.0:
                # near-tangent pair narrower than the scan grid: bracket both
                # sides of the analytic minimum
                if mb > 0.0:
                    roots.append(_bisect(lb, mb, mb, x_min, mb, f_min))
                roots.append(_bisect(lb, mb, x_min, hi_edge, f_min,
                                     _defect(hi_edge, lb, mb)))
        elif len(roots) == 1 and mb > 0.0:
            # companion-root rescue: convexity gives roots in pairs for mb > 0
            f_min = _defect(x_min, lb, mb)
            if f_min < 0.0:
                known = roots[0]
                if known > x_min and _defect(mb, lb, mb) > 0.0:
                    roots.append(_bisect(lb, mb, mb, x_min, mb, f_min))
                elif known < x_min:
                    roots.append(_bisect(lb, mb, x_min, hi_edge, f_min,
                                         _defect(hi_edge, lb, mb)))
                roots = _dedupe(roots)
        return sorted(roots), tangent

    # attractive-side pairing channel: single root below the Fermi surface
    if mb <= 0.0:
        return [], False
    hi_edge = min(mb, -lb)
    f_lo = _defect(0.0, lb, mb)           # = lb*tanh(mb) < 0
    f_hi = _defect(hi_edge, lb, mb)       # > 0 always
    if f_lo >= 0.0:
        return [], False
    return [_bisect(lb, mb, 0.0, hi_edge, f_lo, f_hi)], False


def _dedupe(xs: list[float], spacing: float = 1e-9) -> list[float]:
    out: list[float] = []
    for x in sorted(xs):
        if not out or x - out[-1] > spacing * max(1.0, abs(x)):
            out.append(x)
    return out


def _mixed_roots(params: ModelParams, tol: float) -> tuple[list[float], bool]:
    """Physical quasi-particle energies solving the pairing equation."""
    if params.lambda_b == 0.0:
        raise ZeroCoupling(
            "lambda_b = 0 forces a vanishing quasi-particle energy; "
            "only the trivial branch exists and it is signalled, not solved"
        )
    beta = params.beta
    if beta == 0.0:
        return [], False  # tanh term vanishes identically: no positive root
    if math.isinf(beta):
        # step-function limit of the tanh factor
        lb, mu = params.lambda_b, params.mu
        if lb > 0.0 and lb > mu:
            return [lb], False
        if lb < 0.0 and -lb < mu:
            return [-lb], False
        return [], False
    red = to_reduced(params)
    xs, tangent = _reduced_pairing_roots(red.lambda_b_bar, red.mu_bar, tol)
    two_t = 2.0 * params.temperature
    # w = 0 is the trivial node (it always solves the equation at mu = 0 but
    # carries no pairing); a root that underflows to it is dropped
    return [two_t * x for x in xs if two_t * x > 0.0], tangent


def pairing_energy_roots(params: ModelParams, tol: float = 1e-10) -> list[float]:
    """All positive quasi-particle energies satisfying the pairing equation.

    Sorted ascending.  For ``lambda_b > 0`` there are 0, 1 (degenerate
    tangency) or 2 of them; for ``lambda_b < 0`` at most one.  Each returned
    ``w`` satisfies ``|w - lambda_b*tanh(beta*(w - mu)/2)| < tol*max(1, |lambda_b|)``,
    except for a tangency root whose defect is only bounded by ``sqrt(tol)``
    in reduced units (the double root is reported rather than silently
    dropped).

    Raises :class:`ZeroCoupling` for ``lambda_b == 0``.
    """
    params = validate(params)
    roots, _ = _mixed_roots(params, tol)
    return roots


def mean_field_gap_given_w(w_bar: float, params: ModelParams) -> float:
    """Mean-field shift on a mixed branch with quasi-particle energy ``w_bar``.

    On any root of the pairing equation the thermal factor equals
    ``w_bar / lambda_b``, which makes the mean-field condition linear with
    the closed form ``lambda_m*(lambda_b - mu)/(lambda_b + lambda_m)`` —
    independent of temperature and of ``w_bar`` itself.  The result is
    checked against the structural bounds ``sign(delta_m) = sign(lambda_m)``
    and ``|delta_m| <= 2*|lambda_m|``; a violation means the inputs are not a
    consistent mixed branch.
    """
    params = validate(params)
    if params.lambda_m == 0.0:
        return 0.0
    denom = params.lambda_b + params.lambda_m
    if denom == 0.0:
        raise SingularDenominator(
            "lambda_b + lambda_m = 0: the mean-field condition degenerates"
        )
    delta_m = params.lambda_m * (params.lambda_b - params.mu) / denom
    if delta_m * params.lambda_m < 0.0:
        raise ConstraintViolation(
            f"delta_m = {delta_m:.6g} has the opposite sign of lambda_m = "
            f"{params.lambda_m:.6g}; no consistent mixed branch here"
        )
    if abs(delta_m) > 2.0 * abs(params.lambda_m) * (1.0 + 1e-12):
        raise ConstraintViolation(
            f"|delta_m| = {abs(delta_m):.6g} exceeds 2*|lambda_m| = "
            f"{2.0 * abs(params.lambda_m):.6g}"
        )
    return delta_m


def recover_delta_b(w_bar: float, delta_m: float, params: ModelParams,
                    tol: float = 1e-10) -> float:
    """Pairing gap from the energy identity, non-negative representative.

    Returns ``sqrt(w_bar**2 - (mu + delta_m)**2)``; both signs solve the
    system, the caller tracks the ambiguity.  Raises :class:`NotAdmissible`
    when the radicand is negative beyond rounding, i.e. the root supports no
    mixed phase.  The test is performed in units of the larger energy so it
    stays meaningful when the squares would underflow.
    """
    eff = params.mu + delta_m
    scale = max(abs(w_bar), abs(eff))
    if scale == 0.0:
        return 0.0
    rw, re = w_bar / scale, eff / scale
    radicand = rw * rw - re * re
    if radicand < -tol * max(1.0, rw * rw):
        raise NotAdmissible(
            f"w_bar = {w_bar:.6g} lies below the effective energy "
            f"|mu + delta_m| = {abs(eff):.6g}: no mixed phase"
        )
    return scale * math.sqrt(max(radicand, 0.0))


def pure_mean_field(params: ModelParams, tol: float = 1e-10) -> float:
    """The mean-field-only gap, the unique root of d*(1 + e^(beta*d)) = 2*lambda_m.

    Exists for every parameter set.  The left side is strictly increasing in
    ``d``, so bisection on ``[-2|lambda_m|, 2|lambda_m|]`` is safe.  The
    chemical potential cancels from this branch entirely.  Exact limits:
    ``lambda_m`` at infinite temperature; ``0`` (from above) for
    ``lambda_m > 0`` and ``2*lambda_m`` for ``lambda_m < 0`` at T = 0.
    """
    params = validate(params)
    lm = params.lambda_m
    if lm == 0.0:
        return 0.0
    beta = params.beta
    if beta == 0.0:
        return lm
    if math.isinf(beta):
        return 0.0 if lm > 0.0 else 2.0 * lm

    def g(d: float) -> float:
        z = min(beta * d, 700.0)
        return d * (1.0 + math.exp(z)) - 2.0 * lm

    lo, hi = -2.0 * abs(lm), 2.0 * abs(lm)
    g_lo, g_hi = g(lo), g(hi)
    # an endpoint defect that rounds to zero IS the root in float arithmetic;
    # letting it into the loop would collapse the bracket to the wrong side
    if g_lo == 0.0:
        return lo
    if g_hi == 0.0:
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo < tol * max(1.0, abs(lm)) * 1e-4 or hi - lo < 5e-16 * abs(lm):
            break
        g_mid = g(mid)
        if g_mid == 0.0:
            return mid
        if (g_lo < 0.0) == (g_mid < 0.0):
            lo, g_lo = mid, g_mid
        else:
            hi, g_hi = mid, g_mid
    return 0.5 * (lo + hi)


def _pure_solution(params: ModelParams, tol: float) -> GapSolution:
    dm = pure_mean_field(params, tol)
    w = params.mu + dm  # signed effective energy on the pairing-free branch
    residual = abs(dm - 2.0 * params.lambda_m * fermi(dm, params.beta))
    residual /= max(1.0, abs(params.lambda_m))
    return GapSolution(
        delta_m=dm,
        delta_b=0.0,
        w_bar=w,
        coeffs=BogoliubovCoefficients(1.0, 0.0, 0.0),
        phase=PhaseLabel.PURE_MEAN_FIELD,
        residual=residual,
        delta_b_sign_ambiguous=False,
    )


def _mixed_residual(w: float, dm: float, db: float, params: ModelParams) -> float:
    from .core_types import tanh_half

    t = tanh_half(w - params.mu, params.beta)
    r1 = abs(w - params.lambda_b * t) / max(1.0, abs(params.lambda_b))
    omega_eff = params.mu + dm
    if w > 0.0:
        r2 = abs(dm - params.lambda_m * (1.0 - t * omega_eff / w))
        r2 /= max(1.0, abs(params.lambda_m))
    else:
        r2 = 0.0
    r3 = abs(w * w - omega_eff * omega_eff - db * db) / max(1.0, w * w)
    return max(r1, r2, r3)


def solve_all(params: ModelParams, tol: float = 1e-10,
              require_nonneg_effective_energy: bool = False) -> SolveReport:
    """Enumerate every self-consistent solution at one parameter point.

    The pure mean-field branch always comes first.  Each root of the pairing
    equation is then lifted to a full mixed solution when admissible; roots
    whose pairing amplitude would be imaginary, or whose mean-field shift
    violates its structural bounds, are dropped with an explanatory note
    rather than an error.  With ``require_nonneg_effective_energy`` the
    optional restriction ``mu + delta_m >= 0`` (equivalently
    ``|c| >= sqrt(2)/2``) is enforced as an additional admissibility filter.
    """
    params = validate(params)
    notes: list[str] = []
    solutions: list[GapSolution] = [_pure_solution(params, tol)]

    try:
        roots, tangent = _mixed_roots(params, tol)
    except ZeroCoupling:
        roots, tangent = [], False
        notes.append("pairing channel inactive (lambda_b = 0): no mixed branch")

    roots = sorted(roots)
    mixed: list[tuple[int, GapSolution]] = []
    for branch, w in enumerate(roots):
        try:
            dm = mean_field_gap_given_w(w, params)
        except (SingularDenominator, ConstraintViolation) as exc:
            notes.append(f"root w_bar = {w:.9g} dropped: {exc}")
            continue
        try:
            db = recover_delta_b(w, dm, params, tol)
        except NotAdmissible as exc:
            notes.append(f"root w_bar = {w:.9g} dropped: {exc}")
            continue
        omega_eff = params.mu + dm
        if require_nonneg_effective_energy and omega_eff < 0.0:
            notes.append(
                f"root w_bar = {w:.9g} dropped: effective energy "
                f"mu + delta_m = {omega_eff:.6g} < 0 (restricted mixing angle)"
            )
            continue
        try:
            coeffs = bogoliubov_from_gaps(omega_eff, db)
        except ZeroEnergy:
            # w_bar so small that its square underflows: no usable scale
            notes.append(
                f"root w_bar = {w:.9g} dropped: degenerate zero-energy scale")
            continue
        mixed.append((branch, GapSolution(
            delta_m=dm,
            delta_b=db,
            w_bar=w,
            coeffs=coeffs,
            phase=PhaseLabel.MIXED_LOWER,  # provisional; relabelled below
            residual=_mixed_residual(w, dm, db, params),
            delta_b_sign_ambiguous=db > 0.0,
        )))

    # Branch labels follow the position among *all* pairing roots, so the
    # survivor of a filtered pair keeps its upper/lower identity.
    labelled: list[GapSolution] = []
    for branch, sol in mixed:
        if tangent:
            phase = PhaseLabel.TANGENT
        elif len(roots) == 2 and branch == 1:
            phase = PhaseLabel.MIXED_UPPER
        else:
            phase = PhaseLabel.MIXED_LOWER
        labelled.append(GapSolution(
            delta_m=sol.delta_m, delta_b=sol.delta_b, w_bar=sol.w_bar,
            coeffs=sol.coeffs, phase=phase, residual=sol.residual,
            delta_b_sign_ambiguous=sol.delta_b_sign_ambiguous,
        ))

    from .phase_diagram import classify_region  # deferred: avoids module cycle

    return SolveReport(
        params=params,
        solutions=tuple(solutions + labelled),
        region=classify_region(params),
        multiplicity=len(labelled),
        notes=tuple(notes),
    )


def equilibrium_mu(lambda_b_bar: float) -> tuple[float, float]:
    """Tangency locus of the reduced pairing equation.

    For ``lb = lambda_b_bar >= 1`` returns ``(mu_e_bar, x_e)`` where
    ``mu_e_bar = lb*tanh(theta) - theta`` with ``theta = arccosh(sqrt(lb))``,
    and ``x_e = lb*tanh(theta)`` is the degenerate root location.  At
    ``mu_bar = mu_e_bar`` the root finder returns exactly the single tangent
    root ``x_e``; two roots exist strictly below the curve, none above.
    """
    lb = float(lambda_b_bar)
    if lb < 1.0:
        raise DomainError(
            f"equilibrium curve needs lambda_b_bar >= 1, got {lb!r}"
        )
    theta = math.acosh(math.sqrt(lb))
    x_e = lb * math.tanh(theta)
    return x_e - theta, x_e


def critical_temperature(params: ModelParams) -> float:
    """Temperature above which the pairing equation has no roots: lambda_b / 2.

    Only defined for ``lambda_b > 0``; the attractive-channel model states no
    critical temperature, so :class:`NotApplicable` is raised there instead
    of guessing one.
    """
    if params.lambda_b <= 0.0:
        raise NotApplicable(
            "no critical-temperature formula for lambda_b <= 0"
        )
    return 0.5 * params.lambda_b
