"""Thermal expectation values of Bogoliubov quasi-particle modes.

Each momentum mode carries a rotation angle ``phi`` mixing particles and
holes; the thermal state then fixes two numbers per mode, the occupation
``{p} = c**2 f + s**2 (1 - f)`` and the pairing amplitude
``[p] = c s tanh(beta (w_bar - mu) / 2)``, with ``f`` the Fermi factor at the
quasi-particle energy.  Under momentum reflection the occupation is even and
the pairing amplitude odd, ``{-p} = {p}``, ``[-p] = -[p]``; a
:class:`ModeTable` stores values on a half-axis grid and applies those parity
rules on lookup.

The quartic (four-operator) expectation reduces, mode by mode, to three Wick
contractions; :func:`quartic_expectation` evaluates them with Kronecker
deltas on the discrete grid.  :func:`smearing_scaling_check` demonstrates the
one-dimensional scaling limit in which the occupation-occupation cross terms
die like ``kappa**(-1/2)`` under Gaussian smearing while the diagonal pairing
combination survives unattenuated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .core_types import (
    BogoliubovCoefficients,
    ModelParams,
    fermi,
    tanh_half,
    validate,
)
from .errors import FitFailed, InvalidParameter, MomentumOffGrid, ZeroEnergy

_IDENTITY = BogoliubovCoefficients(1.0, 0.0, 0.0)


def bogoliubov_from_gaps(omega_eff: float, delta_b: float) -> BogoliubovCoefficients:
    """Rotation diagonalizing one mode: phi = atan2(delta_b, omega_eff) / 2.

    The coefficients satisfy ``c**2 - s**2 = omega_eff / w_bar`` and
    ``2 c s = delta_b / w_bar`` with ``w_bar = hypot(omega_eff, delta_b)``.
    For ``omega_eff >= 0`` (and ``delta_b >= 0``) the angle stays in
    ``[0, pi/4]`` so ``c >= sqrt(2)/2``; a negative effective energy pushes
    ``phi`` past ``pi/4``, which is exactly the restricted-mixing-angle
    violation the admissibility filters watch for.

    Raises :class:`ZeroEnergy` when both arguments vanish (the rotation is
    then undefined along with the quasi-particle energy).
    """
    if omega_eff == 0.0 and delta_b == 0.0:
        raise ZeroEnergy("omega_eff = delta_b = 0: no quasi-particle energy scale")
    phi = 0.5 * math.atan2(delta_b, omega_eff)
    return BogoliubovCoefficients(c=math.cos(phi), s=math.sin(phi), phi=phi)


@dataclass(frozen=True)
class ModeState:
    """One momentum mode after diagonalization.

    ``w_bar`` must equal ``hypot(omega_eff, delta_b)``; use
    :func:`mode_state` to build consistent instances.
    """

    p: float
    omega_eff: float
    delta_b: float
    w_bar: float
    coeffs: BogoliubovCoefficients


def mode_state(p: float, omega_eff: float, delta_b: float) -> ModeState:
    """Consistent ModeState from the two gap values at momentum ``p``."""
    return ModeState(
        p=float(p),
        omega_eff=float(omega_eff),
        delta_b=float(delta_b),
        w_bar=math.hypot(omega_eff, delta_b),
        coeffs=bogoliubov_from_gaps(omega_eff, delta_b),
    )


def occupation(mode: ModeState, params: ModelParams) -> float:
    """Thermal occupation {p} = c**2 f + s**2 (1 - f), always in [0, 1]."""
    f = fermi(mode.w_bar - params.mu, params.beta)
    c, s = mode.coeffs.c, mode.coeffs.s
    return c * c * f + s * s * (1.0 - f)


def pairing_amplitude(mode: ModeState, params: ModelParams) -> float:
    """Anomalous expectation [p] = c s tanh(beta (w_bar - mu) / 2), in [-1/2, 1/2]."""
    t = tanh_half(mode.w_bar - params.mu, params.beta)
    return mode.coeffs.c * mode.coeffs.s * t


@dataclass(frozen=True, eq=False)
class ModeTable:
    """Occupations and pairing amplitudes tabulated on a half-axis grid.

    Lookups accept signed momenta: occupations extend evenly, pairing
    amplitudes oddly.  The grid point at exactly ``p = 0``, when present,
    returns its raw stored pairing value — the odd extension would force it
    to zero, but the stored number is what the gap data actually produced
    there, and callers probing the parity convention should avoid the origin.
    """

    momenta: np.ndarray
    states: tuple[ModeState, ...]
    params: ModelParams
    occupations: np.ndarray
    pairings: np.ndarray

    @classmethod
    def build(cls, momenta: Sequence[float], omega_eff: Sequence[float],
              delta_b: Sequence[float], params: ModelParams) -> "ModeTable":
        """Tabulate modes from gap values sampled on ``momenta`` (p >= 0).

        A mode with ``omega_eff = delta_b = 0`` (e.g. the origin of a free
        dispersion with no pairing there) gets the identity rotation rather
        than tripping :class:`ZeroEnergy`: nothing needs diagonalizing.
        """
        params = validate(params)
        mom = np.asarray(momenta, dtype=float)
        oe = np.asarray(omega_eff, dtype=float)
        db = np.asarray(delta_b, dtype=float)
        if mom.ndim != 1 or mom.size == 0:
            raise InvalidParameter("momentum grid must be a non-empty 1-d array")
        if mom[0] < 0.0 or np.any(np.diff(mom) <= 0.0):
            raise InvalidParameter(
                "momentum grid must be non-negative and strictly increasing"
            )
        if oe.shape != mom.shape or db.shape != mom.shape:
            raise InvalidParameter("gap arrays must match the momentum grid shape")
        states = []
        for p, w, d in zip(mom, oe, db):
            if w == 0.0 and d == 0.0:
                states.append(ModeState(float(p), 0.0, 0.0, 0.0, _IDENTITY))
            else:
                states.append(mode_state(p, w, d))
        occ = np.array([occupation(m, params) for m in states])
        pair = np.array([pairing_amplitude(m, params) for m in states])
        return cls(momenta=mom, states=tuple(states), params=params,
                   occupations=occ, pairings=pair)

    def index(self, p: float) -> int:
        """Grid index of |p|; MomentumOffGrid when |p| is not a grid point."""
        a = abs(float(p))
        i = int(np.searchsorted(self.momenta, a))
        for j in (i - 1, i, i + 1):
            if 0 <= j < self.momenta.size and math.isclose(
                    float(self.momenta[j]), a, rel_tol=1e-9, abs_tol=1e-12):
                return j
        raise MomentumOffGrid(f"momentum {p!r} is not on the half-axis grid")

    def occupation_at(self, p: float) -> float:
        return float(self.occupations[self.index(p)])

    def pairing_at(self, p: float) -> float:
        value = float(self.pairings[self.index(p)])
        if p == 0.0:
            return value  # raw, see class docstring
        return value if p > 0.0 else -value


@dataclass(frozen=True)
class QuarticTerms:
    """The three Wick contractions of a four-operator expectation.

    Fields hold the signed contributions as they enter the sum, so
    ``total = pairing + direct + exchange`` (``direct`` already carries its
    minus sign).
    """

    pairing: float
    direct: float
    exchange: float
    total: float


def _mode_key(table: ModeTable, p: float) -> tuple[int, int]:
    sign = 0 if p == 0.0 else (1 if p > 0.0 else -1)
    return table.index(p), sign


def quartic_expectation(table: ModeTable, q: float, q_prime: float,
                        p: float, p_prime: float) -> QuarticTerms:
    """Four-operator thermal expectation on the discrete momentum grid.

    With ``[.]`` the odd pairing amplitude and ``{.}`` the even occupation:

        [q][p] d(q,-q') d(p,-p')  -  {p}{p'} d(p,q) d(p',q')
                                  +  {p}{p'} d(p,q') d(p',q)

    where ``d`` is the Kronecker delta on (grid index, sign) keys — the
    origin, when present, matches either sign.  The structure is
    antisymmetric under q <-> q' away from the origin: the delta pair in the
    first term is symmetric while ``[q]`` flips sign on its support
    ``q' = -q``, and the last two terms swap.
    """
    kq, kqp = _mode_key(table, q), _mode_key(table, q_prime)
    kp, kpp = _mode_key(table, p), _mode_key(table, p_prime)

    def _neg(key: tuple[int, int]) -> tuple[int, int]:
        return key[0], -key[1]

    pairing = direct = exchange = 0.0
    if kqp == _neg(kq) and kpp == _neg(kp):
        pairing = table.pairing_at(q) * table.pairing_at(p)
    if kp == kq and kpp == kqp:
        direct = -table.occupation_at(p) * table.occupation_at(p_prime)
    if kp == kqp and kpp == kq:
        exchange = table.occupation_at(p) * table.occupation_at(p_prime)
    return QuarticTerms(pairing, direct, exchange,
                        pairing + direct + exchange)


def occupation_profile(table: ModeTable) -> Callable[[np.ndarray], np.ndarray]:
    """Continuous even interpolant of the tabulated occupations.

    Linear interpolation in |p|, clamped to the edge values outside the
    grid; accepts scalars or arrays.
    """
    mom, occ = table.momenta, table.occupations

    def profile(p):
        return np.interp(np.abs(np.asarray(p, dtype=float)), mom, occ)

    return profile


def pairing_profile(table: ModeTable) -> Callable[[np.ndarray], np.ndarray]:
    """Continuous odd interpolant of the tabulated pairing amplitudes.

    Uses the strict odd extension sign(p) * interp(|p|): unlike the raw
    table lookup it vanishes at the origin.
    """
    mom, pair = table.momenta, table.pairings

    def profile(p):
        p = np.asarray(p, dtype=float)
        return np.sign(p) * np.interp(np.abs(p), mom, pair)

    return profile


@dataclass(frozen=True, eq=False)
class SmearingScalingResult:
    """Fitted decay of the smeared cross term: log I vs log kappa slope."""

    slope: float
    kappas: np.ndarray
    intensities: np.ndarray


def _trapezoid_weights(x: np.ndarray) -> np.ndarray:
    w = np.empty_like(x)
    w[1:-1] = 0.5 * (x[2:] - x[:-2])
    w[0] = 0.5 * (x[1] - x[0])
    w[-1] = 0.5 * (x[-1] - x[-2])
    return w


def smearing_scaling_check(profile: Callable, v: Callable,
                           kappas: Iterable[float], *,
                           extent: float = 6.0,
                           points: int = 2001) -> SmearingScalingResult:
    """Decay exponent of I(kappa) = iint exp(-2 kappa (p+p')**2) G(p) G(p') dp dp'.

    ``G = v * profile``.  Substituting u = p + p' turns the double integral
    into ``int exp(-2 kappa u**2) H(u) du`` with H the correlation
    ``int G(p) G(u - p) dp``, computed once; for a continuous H with
    ``H(0) != 0`` the large-kappa behaviour is ``H(0) sqrt(pi / (2 kappa))``,
    i.e. a log-log slope of -1/2 in this one-dimensional setting.

    ``v`` and ``profile`` must accept numpy arrays.  Raises
    :class:`FitFailed` when the kappa list spans less than two decades, or
    the computed intensities are non-positive or fail to decrease — both
    symptoms of an identically-vanishing profile or an under-resolved
    quadrature, from which no exponent should be quoted.
    """
    kap = np.sort(np.asarray(list(kappas), dtype=float))
    if kap.size < 2 or np.any(kap <= 0.0):
        raise FitFailed("need at least two positive smearing widths")
    if kap[-1] / kap[0] < 100.0:
        raise FitFailed(
            f"kappa range [{kap[0]:g}, {kap[-1]:g}] spans < 2 decades"
        )

    p = np.linspace(-extent, extent, points)
    wp = _trapezoid_weights(p)
    g_p = np.asarray(v(p), dtype=float) * np.asarray(profile(p), dtype=float)

    # u-grid: coarse full support plus, for every smearing width, a patch
    # fine enough to resolve exp(-2*kappa*u**2) on its own scale
    patches = [np.linspace(-2.0 * extent, 2.0 * extent, 2401)]
    for k in kap:
        half = min(10.0 / math.sqrt(2.0 * k), 2.0 * extent)
        patches.append(np.linspace(-half, half, 1201))
    u = np.unique(np.concatenate(patches))
    wu = _trapezoid_weights(u)

    weighted = wp * g_p
    corr = np.empty(u.size)
    for lo in range(0, u.size, 256):
        shift = u[lo:lo + 256, None] - p[None, :]
        corr[lo:lo + 256] = (np.asarray(v(shift), dtype=float)
                             * np.asarray(profile(shift), dtype=float)) @ weighted

    intensities = np.exp(-2.0 * kap[:, None] * u[None, :] ** 2) @ (wu * corr)
    if np.any(intensities <= 0.0):
        raise FitFailed("smeared intensity is not positive; nothing to fit")
    if np.any(np.diff(intensities) >= 0.0):
        raise FitFailed("smeared intensity is not decreasing in kappa")

    slope = float(np.polyfit(np.log(kap), np.log(intensities), 1)[0])
    return SmearingScalingResult(slope=slope, kappas=kap, intensities=intensities)


def pairing_diagonal_term(table: ModeTable, v: Callable,
                          kappas: Iterable[float]) -> np.ndarray:
    """The surviving diagonal combination J(kappa) = int v(p) v(-p) [p][-p] dp.

    On the diagonal p' = -p the smeared momentum sum p + p' vanishes
    identically, so the Gaussian weight is exp(0) = 1 for every kappa and
    the returned values are constant up to rounding — that invariance is the
    point.  Quadrature runs on the table's own half-axis grid with the odd
    extension folded in ([p][-p] = -[p]**2 for p > 0).
    """
    mom = table.momenta
    wp = _trapezoid_weights(mom) if mom.size > 1 else np.ones(1)
    v_plus = np.asarray(v(mom), dtype=float)
    v_minus = np.asarray(v(-mom), dtype=float)
    product = np.array([table.pairing_at(p) * table.pairing_at(-p)
                        for p in mom])
    fold = np.where(mom == 0.0, 1.0, 2.0)  # even integrand: fold the half axis
    diag_sq = np.zeros_like(mom)  # (p + p')**2 with p' = -p
    out = np.empty(len(list_kap := np.asarray(list(kappas), dtype=float)))
    for i, k in enumerate(list_kap):
        out[i] = float(np.sum(
            fold * wp * v_plus * v_minus * product * np.exp(-2.0 * k * diag_sq)
        ))
    return out
