"""Orchestrated studies on top of the solvers.

Three harnesses live here. local_virial and virial_trace track the
localized virial action z_R and test the identity d^2 z_R / dt^2 =
16 H_* + (boundary remainder), with the remainder controlled by how much
of the field sits outside |x| <= R. large_scale_compare runs the full
equation at dilated scales against the reconstructed resonant proxy and
reports the relative L2 gap per scale. threshold_campaign classifies a
list of data, evolves each one, and tabulates classification next to the
observed outcome.

Cutoff convention, fixed once so z_R is reproducible: chi(r) = r^2 for
r <= 1, a quintic Hermite blend on (1, 2) matching value and first two
derivatives at both ends, and 0 for r >= 2.

Proxy reconstruction applies the free torus phase exp(-i k^2 t_physical)
per mode by default; phase_convention="none" switches it off. The
comparison samples 8 geometrically spaced times in (0, t_end].
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .errors import DomainError, WgnlsError
from .groundstate import GNConstants
from .propagate import EvolveControls, RunOutcome, evolve, rescale, step_strang
from .resonant import embed_from_torus, free_y_phase, reconstruct_to_torus, step_rs
from .spectral import Field3, NormKind, norm
from .thresholds import ThresholdReport, classify, diagnostics

__all__ = [
    "VirialTrace",
    "LargeScaleResult",
    "CampaignRow",
    "CampaignRowResult",
    "local_virial",
    "virial_trace",
    "exterior_mass",
    "large_scale_compare",
    "threshold_campaign",
    "campaign_table_csv",
]


def _chi_blend_coef() -> np.ndarray:
    # Quintic p(t) on t in [0,1] (t = r - 1) with p(0)=1, p'(0)=2, p''(0)=2
    # and p(1)=p'(1)=p''(1)=0, so chi stays C^2 across both junctions.
    a = np.zeros((6, 6))
    powers = np.arange(6)
    a[0, 0] = 1.0
    a[1, 1] = 1.0
    a[2, 2] = 2.0
    a[3] = 1.0
    a[4] = powers
    a[5] = powers * (powers - 1)
    return np.linalg.solve(a, np.array([1.0, 2.0, 2.0, 0.0, 0.0, 0.0]))


_CHI_COEF = _chi_blend_coef()
_DCHI_COEF = _CHI_COEF[1:] * np.arange(1, 6)


def _chi(rho: np.ndarray) -> np.ndarray:
    out = np.zeros_like(rho)
    core = rho <= 1.0
    out[core] = rho[core] ** 2
    mid = (rho > 1.0) & (rho < 2.0)
    out[mid] = np.polyval(_CHI_COEF[::-1], rho[mid] - 1.0)
    return out


def _chi_prime(rho: np.ndarray) -> np.ndarray:
    out = np.zeros_like(rho)
    core = rho <= 1.0
    out[core] = 2.0 * rho[core]
    mid = (rho > 1.0) & (rho < 2.0)
    out[mid] = np.polyval(_DCHI_COEF[::-1], rho[mid] - 1.0)
    return out


def _plane_radius(u: Field3) -> np.ndarray:
    x1 = u.grid.x1
    return np.sqrt(x1[:, None] ** 2 + x1[None, :] ** 2)


def local_virial(u: Field3, big_r: float) -> tuple[float, float]:
    """(z_R, dz_R) for the localized virial action.

    z_R integrates R^2 chi(x/R) |U|^2; its time derivative along the flow
    is 2 Im of the integral of R grad chi(x/R) . grad_x U conj(U), which is
    what the second return value evaluates spectrally.
    """
    grid = u.grid
    if big_r <= 0:
        raise DomainError("R must be positive")
    if 2.0 * big_r >= grid.box_length / 2.0:
        raise DomainError(
            f"cutoff support |x| <= {2 * big_r:g} reaches the boundary; "
            f"need 2R < box_length/2 = {grid.box_length / 2:g}"
        )
    x1 = grid.x1
    r = _plane_radius(u)
    rho = r / big_r
    w = grid.weight
    abs2 = (np.abs(u.values) ** 2).sum(axis=2)
    z = float(w * np.sum(big_r**2 * _chi(rho) * abs2))

    # R grad chi(x/R) = (chi'(rho)/rho) x, and chi'(rho)/rho -> 2 at 0.
    s = np.full_like(rho, 2.0)
    pos = rho > 0
    s[pos] = _chi_prime(rho[pos]) / rho[pos]
    coef = sfft.fftn(u.values, axes=(0, 1), norm="ortho")
    xi1 = grid.xi1
    g1 = sfft.ifftn(1j * xi1[:, None, None] * coef, axes=(0, 1), norm="ortho")
    g2 = sfft.ifftn(1j * xi1[None, :, None] * coef, axes=(0, 1), norm="ortho")
    radial = x1[:, None, None] * g1 + x1[None, :, None] * g2
    dz = float(2.0 * w * np.sum(s[:, :, None] * (radial * np.conj(u.values)).imag))
    return z, dz


def exterior_mass(u: Field3, big_r: float) -> float:
    """Mass carried outside the disc |x| <= R."""
    if big_r <= 0:
        raise DomainError("R must be positive")
    abs2 = (np.abs(u.values) ** 2).sum(axis=2)
    return float(u.grid.weight * np.sum(abs2[_plane_radius(u) > big_r]))


@dataclass(frozen=True)
class VirialTrace:
    """Sampled z_R, dz_R, h_star, and the finite-difference identity residual.

    residual[i] = second difference of z_R minus 16 h_star; the first and
    last two samples carry nan since the centered 5-point stencil needs
    two neighbours on each side.
    """

    big_r: float
    times: np.ndarray
    z_r: np.ndarray
    dz_r: np.ndarray
    h_star: np.ndarray
    residual: np.ndarray

    def __post_init__(self):
        n = len(self.times)
        for name in ("z_r", "dz_r", "h_star", "residual"):
            if len(getattr(self, name)) != n:
                raise DomainError(f"{name} length differs from times")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["R", "t", "z_R", "dz_R", "h_star", "residual"])
            for i in range(len(self.times)):
                writer.writerow(
                    [
                        repr(self.big_r),
                        repr(float(self.times[i])),
                        repr(float(self.z_r[i])),
                        repr(float(self.dz_r[i])),
                        repr(float(self.h_star[i])),
                        repr(float(self.residual[i])),
                    ]
                )


def virial_trace(
    u0: Field3,
    big_r: float,
    consts: GNConstants,
    dt: float = 1e-3,
    t_end: float = 0.1,
    sample_every: int = 10,
) -> VirialTrace:
    """Short run sampling the virial action and the identity residual.

    The second time derivative of z_R is formed with the 4th order centered
    5-point stencil on the sample grid, then compared against 16 h_star.
    """
    if dt <= 0 or t_end <= 0 or sample_every < 1:
        raise DomainError("dt, t_end must be positive and sample_every >= 1")
    n_steps = max(1, int(round(t_end / dt)))
    times, zs, dzs, hs = [], [], [], []

    def record(idx: int, f: Field3) -> None:
        z, dz = local_virial(f, big_r)
        times.append(idx * dt)
        zs.append(z)
        dzs.append(dz)
        hs.append(diagnostics(f, consts).h_star)

    u = u0
    record(0, u)
    for step in range(1, n_steps + 1):
        u = step_strang(u, dt)
        if step % sample_every == 0 or step == n_steps:
            record(step, u)

    t_arr = np.asarray(times)
    z_arr = np.asarray(zs)
    h_arr = np.asarray(hs)
    resid = np.full_like(z_arr, np.nan)
    h_t = sample_every * dt
    if len(z_arr) >= 5:
        core = slice(2, len(z_arr) - 2)
        second = (
            -z_arr[:-4] + 16.0 * z_arr[1:-3] - 30.0 * z_arr[2:-2]
            + 16.0 * z_arr[3:-1] - z_arr[4:]
        ) / (12.0 * h_t**2)
        resid[core] = second - 16.0 * h_arr[core]
    return VirialTrace(
        big_r=big_r,
        times=t_arr,
        z_r=z_arr,
        dz_r=np.asarray(dzs),
        h_star=h_arr,
        residual=resid,
    )


@dataclass(frozen=True)
class LargeScaleResult:
    """Per-scale gap between the full run and the resonant reconstruction."""

    lambdas: tuple
    discrepancies: tuple
    phase_convention: str

    def __post_init__(self):
        lams = tuple(float(v) for v in self.lambdas)
        object.__setattr__(self, "lambdas", lams)
        object.__setattr__(
            self, "discrepancies", tuple(float(v) for v in self.discrepancies)
        )
        if len(lams) != len(self.discrepancies):
            raise DomainError("lambdas and discrepancies lengths differ")
        if any(b <= a for a, b in zip(lams, lams[1:])):
            raise DomainError("lambdas must be strictly increasing")
        if any(d < 0 for d in self.discrepancies):
            raise DomainError("discrepancies must be nonnegative")
        if self.phase_convention not in ("free_y_phase", "none"):
            raise DomainError("phase_convention must be free_y_phase or none")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["lambda", "delta"])
            for lam, delta in zip(self.lambdas, self.discrepancies):
                writer.writerow([repr(lam), repr(delta)])


def _sample_steps(n_base_steps: int) -> list[int]:
    # 8 geometric times t_end * 2^{-k}, k = 7..0; n_base_steps must resolve
    # the earliest one with an integer step index.
    return [n_base_steps // 2**k for k in range(7, -1, -1)]


def large_scale_compare(
    u0_profile: Field3,
    lambdas,
    t_end: float,
    n_base_steps: int = 1024,
    phase_convention: str = "free_y_phase",
) -> LargeScaleResult:
    """Gap delta(lambda) between the dilated full flow and the resonant proxy.

    One resonant run from the embedded profile covers all scales; each
    scale then evolves the dilated datum for the dilated horizon with the
    matched step size, and delta is the sup over the 8 sampled times of the
    relative L2 distance to the rescaled reconstruction.
    """
    lams = [float(v) for v in lambdas]
    if not lams or any(b <= a for a, b in zip(lams, lams[1:])):
        raise DomainError("lambdas must be a nonempty strictly increasing list")
    if lams[0] < 1.0:
        raise DomainError("scales below 1 are not supported")
    if t_end <= 0:
        raise DomainError("t_end must be positive")
    if n_base_steps % 128 != 0:
        raise DomainError("n_base_steps must be a multiple of 128")
    if phase_convention not in ("free_y_phase", "none"):
        raise DomainError("phase_convention must be free_y_phase or none")

    n_y = u0_profile.grid.n_y
    d_tau = t_end / n_base_steps
    marks = _sample_steps(n_base_steps)

    psi = embed_from_torus(u0_profile)
    proxies = {}
    for step in range(1, n_base_steps + 1):
        psi = step_rs(psi, d_tau)
        if step in marks:
            proxies[step] = psi

    deltas = []
    for lam in lams:
        datum = rescale(u0_profile, lam)
        dt_full = lam**2 * d_tau
        u = datum
        worst = 0.0
        for step in range(1, n_base_steps + 1):
            u = step_strang(u, dt_full)
            if step not in proxies:
                continue
            tau = step * d_tau
            proxy3 = reconstruct_to_torus(proxies[step], n_y)
            if phase_convention == "free_y_phase":
                proxy3 = free_y_phase(proxy3, lam**2 * tau)
            proxy = rescale(proxy3, lam)
            gap = norm(
                Field3(u.grid, u.values - proxy.values), NormKind.L2
            ) / norm(u, NormKind.L2)
            worst = max(worst, gap)
        deltas.append(worst)

    return LargeScaleResult(
        lambdas=tuple(lams),
        discrepancies=tuple(deltas),
        phase_convention=phase_convention,
    )


@dataclass(frozen=True)
class CampaignRow:
    """One campaign entry: a named datum plus its run controls."""

    name: str
    datum: Field3
    controls: EvolveControls

    def __post_init__(self):
        if not self.name:
            raise DomainError("row name must be nonempty")


@dataclass
class CampaignRowResult:
    name: str
    report: ThresholdReport
    outcome: RunOutcome | None
    error: str | None = None

    TABLE_COLUMNS = (
        "name",
        "classification",
        "status",
        "mass",
        "energy",
        "max_grad",
        "t_final",
        "error",
    )

    def table_row(self) -> list:
        d = self.report.diagnostics
        return [
            self.name,
            self.report.classification,
            self.outcome.status if self.outcome is not None else "",
            repr(d.mass),
            repr(d.energy),
            repr(self.outcome.max_grad) if self.outcome is not None else "",
            repr(self.outcome.t_final) if self.outcome is not None else "",
            self.error or "",
        ]


def threshold_campaign(
    rows, consts: GNConstants, c_choice: str = "upper"
) -> list[CampaignRowResult]:
    """Classify and evolve each row; a failing row is recorded, not fatal."""
    results = []
    for row in rows:
        report = classify(row.datum, consts, c_choice)
        try:
            outcome = evolve(row.datum, row.controls, consts)
            results.append(CampaignRowResult(row.name, report, outcome))
        except WgnlsError as exc:
            results.append(
                CampaignRowResult(row.name, report, None, error=str(exc))
            )
    return results


def campaign_table_csv(results, path) -> None:
    """Write the campaign outcome table; one line per row."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CampaignRowResult.TABLE_COLUMNS)
        for res in results:
            writer.writerow(res.table_row())
