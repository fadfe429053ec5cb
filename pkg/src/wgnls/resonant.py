"""The truncated resonant system: combinatorics, dynamics, and the embedding.

Components u_j, |j| <= J, evolve by coupled planar cubic equations whose
coupling (sum over index triples with k1-k2+k3 = k and k1^2-k2^2+k3^2 = k^2)
collapses to the closed form (2 S - |u_j|^2) u_j with S the total intensity.
The frozen-coefficient nonlinear substep is a pure phase rotation, so every
component modulus — hence M0 and the weighted mass M1 — is conserved exactly
per step.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .errors import DomainError, IntegrationError
from .propagate import EvolveControls
from .spectral import Field2, Field3, Grid3

__all__ = [
    "VecField2",
    "ResonantTriple",
    "RsSeries",
    "RsRunOutcome",
    "GlasseyReport",
    "resonant_triples",
    "nonlinearity_closed",
    "nonlinearity_bruteforce",
    "conserved_rs",
    "weinstein_quotient",
    "step_rs",
    "evolve_rs",
    "glassey_virial",
    "embed_from_torus",
    "reconstruct_to_torus",
    "free_y_phase",
]


@dataclass(frozen=True)
class VecField2:
    """Vector of planar components on one shared grid.

    components has shape (2 j_max + 1, n_x, n_x); index j lives at slot
    j + j_max. Sobolev weights are <j> = (1 + j^2)^{1/2}.
    """

    j_max: int
    box_length: float
    components: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.components, dtype=np.complex128)
        if arr.ndim != 3 or arr.shape[0] != 2 * self.j_max + 1:
            raise DomainError(
                f"components must have shape (2*j_max+1, n, n), got {arr.shape}"
            )
        if arr.shape[1] != arr.shape[2]:
            raise DomainError("component grids must be square")
        if not np.all(np.isfinite(arr)):
            raise DomainError("components contain non-finite entries")
        object.__setattr__(self, "components", arr)

    @property
    def n_x(self) -> int:
        return self.components.shape[1]

    @property
    def h_x(self) -> float:
        return self.box_length / self.n_x

    @property
    def weight(self) -> float:
        return self.h_x**2

    @property
    def js(self) -> np.ndarray:
        return np.arange(-self.j_max, self.j_max + 1)

    @property
    def sobolev_weights(self) -> np.ndarray:
        return np.sqrt(1.0 + self.js.astype(float) ** 2)

    def component(self, j: int) -> Field2:
        if abs(j) > self.j_max:
            raise DomainError(f"|j| must be <= {self.j_max}, got {j}")
        return Field2(self.n_x, self.box_length, self.components[j + self.j_max])

    def with_components(self, arr: np.ndarray) -> "VecField2":
        return VecField2(self.j_max, self.box_length, arr)


@dataclass(frozen=True)
class ResonantTriple:
    k1: int
    k2: int
    k3: int

    def valid_for(self, k: int) -> bool:
        return (
            self.k1 - self.k2 + self.k3 == k
            and self.k1**2 - self.k2**2 + self.k3**2 == k**2
        )


def resonant_triples(k: int, j_max: int) -> set[ResonantTriple]:
    """All index triples with both the sum and the square-sum constraint.

    Enumerated by brute force over |k_i| <= j_max; the constraint factors as
    (k - k1)(k - k3) = 0, so the result is {(k, m, m)} union {(m, m, k)} and
    has 4 j_max + 1 elements for |k| <= j_max.
    """
    if abs(k) > j_max:
        raise DomainError(f"|k| must be <= j_max, got k={k}, j_max={j_max}")
    out = set()
    rng = range(-j_max, j_max + 1)
    for k1 in rng:
        for k2 in rng:
            k3 = k + k2 - k1
            if abs(k3) <= j_max and k1 * k1 - k2 * k2 + k3 * k3 == k * k:
                out.add(ResonantTriple(k1, k2, k3))
    return out


def nonlinearity_closed(u: VecField2, j: int) -> Field2:
    """Coupling (sum_i |u_i|^2 + sum_{i != j} |u_i|^2) u_j = (2S - |u_j|^2) u_j."""
    if abs(j) > u.j_max:
        raise DomainError(f"|j| must be <= {u.j_max}, got {j}")
    abs2 = np.abs(u.components) ** 2
    s = abs2.sum(axis=0)
    uj = u.components[j + u.j_max]
    return Field2(u.n_x, u.box_length, (2.0 * s - abs2[j + u.j_max]) * uj)


def nonlinearity_bruteforce(u: VecField2, j: int) -> Field2:
    """Oracle: direct sum of u_{k1} conj(u_{k2}) u_{k3} over the triples."""
    total = np.zeros((u.n_x, u.n_x), dtype=np.complex128)
    for tr in resonant_triples(j, u.j_max):
        total += (
            u.components[tr.k1 + u.j_max]
            * np.conj(u.components[tr.k2 + u.j_max])
            * u.components[tr.k3 + u.j_max]
        )
    return Field2(u.n_x, u.box_length, total)


def _xi_sq(u: VecField2) -> np.ndarray:
    return Field2(u.n_x, u.box_length, np.zeros((u.n_x, u.n_x))).xi_sq


def step_rs(u: VecField2, dt: float) -> VecField2:
    """One Strang step: half linear flight, frozen-coupling phase, half flight.

    Same substep ordering as the full propagator's step, so y-independent
    data evolve identically under both systems on matching grids.
    """
    if dt <= 0:
        raise DomainError("dt must be positive")
    half = np.exp(-1j * (dt / 2.0) * _xi_sq(u))[None, :, :]
    coef = sfft.fft2(u.components, axes=(1, 2), norm="ortho") * half
    arr = sfft.ifft2(coef, axes=(1, 2), norm="ortho")
    abs2 = np.abs(arr) ** 2
    arr *= np.exp(1j * dt * (2.0 * abs2.sum(axis=0)[None, :, :] - abs2))
    coef = sfft.fft2(arr, axes=(1, 2), norm="ortho") * half
    arr = sfft.ifft2(coef, axes=(1, 2), norm="ortho")
    if not np.all(np.isfinite(arr)):
        raise IntegrationError("non-finite state after one step", 1)
    return u.with_components(arr)


def conserved_rs(u: VecField2) -> tuple[float, float, float]:
    """(M0, M1, E): mass, weighted mass, and the coupled energy."""
    w = u.weight
    abs2 = np.abs(u.components) ** 2
    comp_mass = w * abs2.sum(axis=(1, 2))
    m0 = float(comp_mass.sum())
    m1 = float((u.sobolev_weights**2 * comp_mass).sum())
    coef = sfft.fft2(u.components, axes=(1, 2), norm="ortho")
    grad_sq = float(w * np.sum(_xi_sq(u)[None, :, :] * np.abs(coef) ** 2))
    s = abs2.sum(axis=0)
    quartic = float(w * np.sum(2.0 * s**2 - (abs2**2).sum(axis=0)))
    energy = 0.5 * grad_sq - 0.25 * quartic
    return m0, m1, energy


def weinstein_quotient(u: VecField2) -> float:
    """Mass times gradient mass over the coupled quartic form."""
    w = u.weight
    abs2 = np.abs(u.components) ** 2
    m0 = w * float(abs2.sum())
    coef = sfft.fft2(u.components, axes=(1, 2), norm="ortho")
    grad_sq = w * float(np.sum(_xi_sq(u)[None, :, :] * np.abs(coef) ** 2))
    s = abs2.sum(axis=0)
    quartic = w * float(np.sum(2.0 * s**2 - (abs2**2).sum(axis=0)))
    if quartic <= 0:
        raise DomainError("quartic form vanishes; quotient undefined")
    return m0 * grad_sq / quartic


@dataclass
class RsSeries:
    """Per-sample diagnostics of a resonant run; l4_norm is in-memory only."""

    js: np.ndarray
    t: list = field(default_factory=list)
    m0: list = field(default_factory=list)
    m1: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    v: list = field(default_factory=list)
    dv: list = field(default_factory=list)
    component_mass: list = field(default_factory=list)
    l4_norm: list = field(default_factory=list)
    grad_sq: list = field(default_factory=list)

    def to_csv(self, path) -> None:
        header = ["t", "M0", "M1", "E", "V", "dV"] + [f"mass_{j}" for j in self.js]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i, t in enumerate(self.t):
                row = [t, self.m0[i], self.m1[i], self.energy[i], self.v[i], self.dv[i]]
                row += list(self.component_mass[i])
                writer.writerow([repr(x) for x in row])


@dataclass
class RsRunOutcome:
    status: str
    time_series: RsSeries
    final: VecField2
    max_grad: float
    t_final: float
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class GlasseyReport:
    """Virial data: V and dV are integrated over |x| <= 0.45 box_length
    (hard cutoff); tail_fraction is the mass fraction outside the cutoff."""

    v: float
    dv: float
    ddv_predicted: float
    tail_fraction: float


def _virial_arrays(n_x: int, box_length: float):
    x1 = -0.5 * box_length + (box_length / n_x) * np.arange(n_x)
    xx = x1[:, None]
    yy = x1[None, :]
    r_sq = xx**2 + yy**2
    inside = np.sqrt(r_sq) <= 0.45 * box_length
    return xx, yy, r_sq * inside, inside


def glassey_virial(u: VecField2) -> GlasseyReport:
    """V, its momentum-flux derivative, and the convexity prediction 16 E."""
    w = u.weight
    xx, yy, r_sq_cut, inside = _virial_arrays(u.n_x, u.box_length)
    abs2 = np.abs(u.components) ** 2
    s = abs2.sum(axis=0)
    v = float(w * np.sum(r_sq_cut * s))
    total = float(s.sum())
    tail = float(s[~inside].sum() / total) if total > 0 else 0.0
    tmpl = Field2(u.n_x, u.box_length, np.zeros((u.n_x, u.n_x)))
    xi1 = tmpl.xi1
    coef = sfft.fft2(u.components, axes=(1, 2), norm="ortho")
    d1 = sfft.ifft2(1j * xi1[None, :, None] * coef, axes=(1, 2), norm="ortho")
    d2 = sfft.ifft2(1j * xi1[None, None, :] * coef, axes=(1, 2), norm="ortho")
    radial = xx[None, :, :] * d1 + yy[None, :, :] * d2
    dv = float(
        4.0 * w * np.sum(inside[None, :, :] * np.imag(radial * np.conj(u.components)))
    )
    _, _, energy = conserved_rs(u)
    return GlasseyReport(v=v, dv=dv, ddv_predicted=16.0 * energy, tail_fraction=tail)


def evolve_rs(u0: VecField2, controls: EvolveControls) -> RsRunOutcome:
    """Strang integration of the truncated system.

    The nonlinear substep freezes the coupling at the substep start, so each
    component is multiplied by a unimodular phase; all moduli, hence M0 and
    M1, are exact per step up to rounding. A non-finite state at a sample is
    classified blowup_detected when the gradient had already grown past
    twice its initial value, and raises an integration error otherwise.
    """
    dt = controls.dt
    n_steps = max(1, int(round(controls.t_end / dt)))
    if controls.sponge is not None and controls.sponge.inner_radius >= u0.box_length / 2:
        raise DomainError("sponge inner_radius must be below half the box length")
    rot0 = dt * 2.0 * float((np.abs(u0.components) ** 2).sum(axis=0).max())
    if rot0 > controls.cfl_safety * math.pi / 2.0:
        raise DomainError(
            f"initial nonlinear rotation per step {rot0:.3e} exceeds "
            f"cfl_safety*pi/2; reduce dt"
        )
    tmpl = Field2(u0.n_x, u0.box_length, np.zeros((u0.n_x, u0.n_x)))
    xi_sq = tmpl.xi_sq
    w = u0.weight
    half = np.exp(-1j * (dt / 2.0) * xi_sq)[None, :, :]
    damp = None
    if controls.sponge is not None:
        x1 = -0.5 * u0.box_length + u0.h_x * np.arange(u0.n_x)
        r = np.sqrt(x1[:, None] ** 2 + x1[None, :] ** 2)
        edge = u0.box_length / 2.0
        sp = controls.sponge
        sfrac = np.clip((r - sp.inner_radius) / (edge - sp.inner_radius), 0.0, 1.0)
        ramp = sfrac**3 * (10.0 + sfrac * (-15.0 + 6.0 * sfrac))
        damp = np.exp(-dt * sp.strength * ramp)[None, :, :]
    mask = None
    if controls.dealias:
        xi_max = np.abs(tmpl.xi1).max()
        mask = (np.sqrt(xi_sq) <= (2.0 / 3.0) * xi_max)[None, :, :]

    series = RsSeries(js=u0.js)
    max_grad = 0.0
    initial_grad = None

    def record(step_idx: int, arr: np.ndarray) -> float:
        nonlocal max_grad, initial_grad
        vec = VecField2(u0.j_max, u0.box_length, arr)
        m0, m1, energy = conserved_rs(vec)
        rep = glassey_virial(vec)
        abs2 = np.abs(arr) ** 2
        comp_mass = w * abs2.sum(axis=(1, 2))
        s = abs2.sum(axis=0)
        l4 = float((w * np.sum(s**2)) ** 0.25)
        coef = sfft.fft2(arr, axes=(1, 2), norm="ortho")
        grad_sq = float(w * np.sum(xi_sq[None, :, :] * np.abs(coef) ** 2))
        series.t.append(step_idx * dt)
        series.m0.append(m0)
        series.m1.append(m1)
        series.energy.append(energy)
        series.v.append(rep.v)
        series.dv.append(rep.dv)
        series.component_mass.append(comp_mass.copy())
        series.l4_norm.append(l4)
        series.grad_sq.append(grad_sq)
        grad_norm = math.sqrt(grad_sq)
        if initial_grad is None:
            initial_grad = grad_norm
        max_grad = max(max_grad, grad_norm)
        return grad_norm

    arr = u0.components.copy()
    record(0, arr)
    status = None
    step_done = 0
    for step in range(1, n_steps + 1):
        coef = sfft.fft2(arr, axes=(1, 2), norm="ortho")
        coef *= half
        arr = sfft.ifft2(coef, axes=(1, 2), norm="ortho")
        abs2 = np.abs(arr) ** 2
        arr *= np.exp(1j * dt * (2.0 * abs2.sum(axis=0)[None, :, :] - abs2))
        if damp is not None:
            arr *= damp
        coef = sfft.fft2(arr, axes=(1, 2), norm="ortho")
        if mask is not None:
            coef *= mask
        coef *= half
        arr = sfft.ifft2(coef, axes=(1, 2), norm="ortho")
        step_done = step
        if step % controls.sample_every == 0 or step == n_steps:
            if not np.all(np.isfinite(arr)):
                if max_grad >= 2.0 * max(initial_grad, 1e-300):
                    status = "blowup_detected"
                    break
                raise IntegrationError("non-finite state without gradient growth", step)
            grad_norm = record(step, arr)
            if grad_norm >= controls.blowup_factor * max(initial_grad, 1e-300):
                status = "blowup_detected"
                break
    if status is None:
        status = "completed"
    final_arr = arr if np.all(np.isfinite(arr)) else np.nan_to_num(arr)
    return RsRunOutcome(
        status=status,
        time_series=series,
        final=VecField2(u0.j_max, u0.box_length, final_arr),
        max_grad=max_grad,
        t_final=step_done * dt,
        meta={"dt": dt, "n_steps": n_steps, "sponge_active": controls.sponge is not None},
    )


def embed_from_torus(u: Field3) -> VecField2:
    """Vector of y-Fourier profiles u_k(x) = n_y^{-1} sum_m U(x, y_m) e^{-i k y_m}.

    The vector keeps |k| <= n_y/2 - 1; the unpaired highest mode is dropped,
    so the mass identity M0 = mass / (2 pi) is exact precisely when the field
    carries no y-Nyquist content. The mode's plane-wave factor e^{iky} is
    bookkeeping handled by the reconstruction, not stored in the component.
    """
    grid = u.grid
    j_max = grid.n_y // 2 - 1
    coef = np.fft.fft(u.values, axis=2, norm="forward")
    comps = np.empty((2 * j_max + 1, grid.n_x, grid.n_x), dtype=np.complex128)
    for j in range(-j_max, j_max + 1):
        comps[j + j_max] = coef[:, :, j % grid.n_y]
    return VecField2(j_max, grid.box_length, comps)


def reconstruct_to_torus(u: VecField2, n_y: int) -> Field3:
    """Sum of components times their plane waves, sampled on the y-grid."""
    if n_y < 2 * u.j_max + 2:
        raise DomainError(f"n_y must be at least {2 * u.j_max + 2}")
    spec = np.zeros((u.n_x, u.n_x, n_y), dtype=np.complex128)
    for j in range(-u.j_max, u.j_max + 1):
        spec[:, :, j % n_y] = u.components[j + u.j_max]
    values = np.fft.ifft(spec, axis=2, norm="forward")
    grid = Grid3(n_x=u.n_x, box_length=u.box_length, n_y=n_y)
    return Field3(grid, values)


def free_y_phase(u: Field3, t: float) -> Field3:
    """Apply the free circle evolution: y-mode k gains the phase e^{-i k^2 t}."""
    coef = np.fft.fft(u.values, axis=2, norm="forward")
    k1 = u.grid.k1
    coef *= np.exp(-1j * t * k1**2)[None, None, :]
    values = np.fft.ifft(coef, axis=2, norm="forward")
    return u.with_values(values)
