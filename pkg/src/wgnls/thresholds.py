"""Conserved quantities, the mass curve Gamma, and initial-data classification.

Everything here is a pure function of a field and the computed constants.
The scattering/global-existence conditions split the mass-energy plane by
the curve Gamma(m) = c^{-8} m^{-1} (2^{1/4} - (pi mass_Q)^{-1/4} m^{1/4})^8;
classification evaluates the three smallness conditions and the weaker
mass-only condition, and the MEI functional orders data for induction.

Extended-real conventions: kappa and the MEI value may be +inf (zero field,
out-of-domain points); quantities that are undefined for an out-of-range
mass are reported as nan. JSON export maps +/-inf to "+inf"/"-inf" strings
and nan to null.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .groundstate import GNConstants
from .spectral import Field3, NormKind, norm, to_spectral

__all__ = [
    "Diagnostics",
    "ThresholdReport",
    "TrapReport",
    "diagnostics",
    "gamma",
    "mei",
    "classify",
    "energy_trap",
    "check_gn_r2t1",
]


def json_real(x: float):
    """Extended real to a JSON-safe value."""
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    return float(x)


@dataclass(frozen=True)
class Diagnostics:
    """Conserved quantities plus the trapping margin for one field."""

    mass: float
    energy: float
    momentum: tuple[float, float, float]
    grad_y_sq: float
    h_star: float
    kappa: float

    def to_dict(self) -> dict:
        return {
            "mass": self.mass,
            "energy": self.energy,
            "momentum": list(self.momentum),
            "grad_y_sq": self.grad_y_sq,
            "h_star": self.h_star,
            "kappa": json_real(self.kappa),
        }


@dataclass(frozen=True)
class ThresholdReport:
    diagnostics: Diagnostics
    gamma: float
    conditions: dict
    classification: str
    mei: float

    def to_dict(self) -> dict:
        return {
            "diagnostics": self.diagnostics.to_dict(),
            "gamma": json_real(self.gamma),
            "conditions": dict(self.conditions),
            "classification": self.classification,
            "mei": json_real(self.mei),
        }


@dataclass(frozen=True)
class TrapReport:
    """Energy-trapping evaluation at one field.

    xi is the coercivity weight evaluated at grad_y_sq; the ratios are
    |grad U|^2 / H and |grad_x U|^2 / H_* (nan when the denominators are
    not positive or the smallness conditions fail).
    """

    mass_ok: bool
    energy_ok: bool
    xi: float
    ratio_grad_energy: float
    ratio_gradx_hstar: float

    @property
    def applicable(self) -> bool:
        return self.mass_ok and self.energy_ok

    def to_dict(self) -> dict:
        return {
            "mass_ok": self.mass_ok,
            "energy_ok": self.energy_ok,
            "xi": self.xi,
            "ratio_grad_energy": json_real(self.ratio_grad_energy),
            "ratio_gradx_hstar": json_real(self.ratio_gradx_hstar),
        }


def _gamma_ext(m: float, consts: GNConstants, c_choice: str) -> float:
    """Gamma with the limit convention Gamma(0+) = +inf; nan above the domain."""
    if m < 0:
        return math.nan
    if m == 0.0:
        return math.inf
    pm = math.pi * consts.mass_q
    ratio = m / pm
    if ratio > 2.0 * (1.0 + 4.0 * np.finfo(float).eps):
        return math.nan
    c = consts.c_for(c_choice)
    base = 2.0**0.25 - ratio**0.25
    if abs(base) <= 8.0 * np.finfo(float).eps:
        base = 0.0
    return c**-8 * base**8 / m


def gamma(m: float, consts: GNConstants, c_choice: str = "upper") -> float:
    """Mass curve Gamma(m) on (0, 2*pi*mass_Q].

    The endpoint value is exactly 0: the vanishing bracket is snapped to
    zero within 8 ulp so the result does not depend on how the caller's
    floating-point product 2*pi*mass_Q was associated.
    """
    value = _gamma_ext(m, consts, c_choice)
    if math.isnan(value) or m <= 0:
        raise DomainError(
            f"gamma is defined on (0, 2*pi*mass_Q] = (0, {2 * math.pi * consts.mass_q}], got {m}"
        )
    return value


def diagnostics(
    u: Field3, consts: GNConstants, c_choice: str = "upper"
) -> Diagnostics:
    """Mass, energy, momentum, y-gradient mass, planar energy, trapping margin.

    energy - h_star = grad_y_sq / 2 holds exactly by construction.
    """
    grid = u.grid
    coef = to_spectral(u)
    power = np.abs(coef) ** 2
    w = grid.weight
    mass = float(w * power.sum())
    gx_sq = float(w * np.sum(grid.xi_sq[:, :, None] * power))
    gy_sq = float(w * np.sum(grid.k1[None, None, :] ** 2 * power))
    p1 = float(w * np.sum(grid.xi1[:, None, None] * power))
    p2 = float(w * np.sum(grid.xi1[None, :, None] * power))
    py = float(w * np.sum(grid.k1[None, None, :] * power))
    l4_4 = norm(u, NormKind.L4) ** 4
    h_star = 0.5 * gx_sq - 0.25 * l4_4
    energy = h_star + 0.5 * gy_sq
    kappa = _gamma_ext(mass, consts, c_choice) - gy_sq if mass >= 0 else math.nan
    return Diagnostics(
        mass=mass,
        energy=energy,
        momentum=(p1, p2, py),
        grad_y_sq=gy_sq,
        h_star=h_star,
        kappa=kappa,
    )


def mei(c: float, h: float, consts: GNConstants, c_choice: str = "upper") -> float:
    """MEI functional on the admissible region, +inf elsewhere.

    Implemented for c >= 0 (physical masses); c = 0 uses the limit
    Gamma(0+) = +inf, killing the last term. Negative c is outside the
    implemented domain and maps to +inf.
    """
    if c < 0 or math.isnan(c) or math.isnan(h):
        return math.inf
    if c == 0.0:
        return h
    pm = math.pi * consts.mass_q
    if c >= pm:
        return math.inf
    half_gamma = 0.5 * _gamma_ext(c, consts, c_choice)
    if not h < half_gamma:
        return math.inf
    return h + c / (pm - c) + h / (half_gamma - h)


def classify(
    u0: Field3, consts: GNConstants, c_choice: str = "upper"
) -> ThresholdReport:
    """Evaluate the smallness conditions and place the datum.

    scattering_regime: mass in (0, pi*mass_Q), energy below Gamma(mass)/2,
    and y-gradient mass below Gamma(mass). gwp_regime: same two smallness
    conditions but mass only in (0, 2*pi*mass_Q). Everything else is
    outside. Above 2*pi*mass_Q the curve is undefined and the two
    Gamma-conditions are reported False.
    """
    d = diagnostics(u0, consts, c_choice)
    pm = math.pi * consts.mass_q
    g = _gamma_ext(d.mass, consts, c_choice)
    mass_small = 0.0 < d.mass < pm
    mass_weak = 0.0 < d.mass < 2.0 * pm
    energy_small = (not math.isnan(g)) and d.energy < 0.5 * g
    grad_y_small = (not math.isnan(g)) and d.grad_y_sq < g
    if mass_small and energy_small and grad_y_small:
        classification = "scattering_regime"
    elif mass_weak and energy_small and grad_y_small:
        classification = "gwp_regime"
    else:
        classification = "outside"
    return ThresholdReport(
        diagnostics=d,
        gamma=g,
        conditions={
            "mass_small": mass_small,
            "energy_small": energy_small,
            "grad_y_small": grad_y_small,
            "mass_weak": mass_weak,
        },
        classification=classification,
        mei=mei(d.mass, d.energy, consts, c_choice),
    )


def _xi_weight(m: float, g: float, consts: GNConstants, c_choice: str) -> float:
    c = consts.c_for(c_choice)
    s = (math.pi * consts.mass_q) ** -0.25 * m**0.25 + c * m**0.125 * g**0.125
    return 2.0 - s**4


def energy_trap(
    u: Field3,
    consts: GNConstants,
    c_choice: str = "upper",
    beta: float = 0.5,
) -> TrapReport:
    """Coercivity of the energy below the trapping thresholds.

    Checks mass <= (1-beta) 2*pi*mass_Q and energy <= (1-beta) Gamma(mass)/2,
    evaluates the weight Xi at grad_y_sq (Gamma(mass) is its root), and
    reports the coercivity ratios when both checks pass.
    """
    if not 0.0 < beta < 1.0:
        raise DomainError(f"beta must lie in (0,1), got {beta}")
    d = diagnostics(u, consts, c_choice)
    pm2 = 2.0 * math.pi * consts.mass_q
    g_curve = _gamma_ext(d.mass, consts, c_choice)
    mass_ok = 0.0 < d.mass <= (1.0 - beta) * pm2
    energy_ok = (not math.isnan(g_curve)) and d.energy <= (1.0 - beta) * 0.5 * g_curve
    xi = _xi_weight(d.mass, d.grad_y_sq, consts, c_choice) if d.mass > 0 else 2.0
    gx_sq = norm(u, NormKind.GradX_L2) ** 2
    grad_sq = gx_sq + d.grad_y_sq
    ratio_h = math.nan
    ratio_hs = math.nan
    if mass_ok and energy_ok:
        if d.energy > 0:
            ratio_h = grad_sq / d.energy
        if d.h_star > 0:
            ratio_hs = gx_sq / d.h_star
    return TrapReport(
        mass_ok=mass_ok,
        energy_ok=energy_ok,
        xi=xi,
        ratio_grad_energy=ratio_h,
        ratio_gradx_hstar=ratio_hs,
    )


def check_gn_r2t1(u: Field3, consts: GNConstants, c_choice: str = "upper") -> float:
    """Slack of the mixed interpolation inequality at this field (RHS - LHS).

    Nonnegative for localized fields when the conservative coefficient is
    selected. Periodic boxes admit non-localized fields (constants) with no
    whole-plane counterpart; callers probing the inequality should sample
    envelope-localized fields.
    """
    l4 = norm(u, NormKind.L4)
    l2 = norm(u, NormKind.L2)
    gx = norm(u, NormKind.GradX_L2)
    gy = norm(u, NormKind.GradY_L2)
    c = consts.c_for(c_choice)
    rhs = math.sqrt(gx) * (
        (math.pi * consts.mass_q) ** -0.25 * math.sqrt(l2)
        + c * l2**0.25 * gy**0.25
    )
    return rhs - l4
