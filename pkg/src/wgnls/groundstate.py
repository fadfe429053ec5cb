"""Ground-state profile solvers and the variational constants.

Two independent routes to the positive radial ground state Q of
-ΔQ + Q = Q^3 on the plane: a spectral renormalization fixed point on the 2D
grid, and a radial shooting oracle (RK4 + bisection on the launch amplitude).
On top of these sit the quotient evaluators and the estimated constants that
feed every threshold: the cubic/sextic Gagliardo-Nirenberg quotients, the
mean-zero circle constant, and the mixed-inequality coefficient bracket.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import fft as sfft

from .errors import ConvergenceError, DomainError
from .spectral import Field2, Field3, Grid3, NormKind, norm, random_field3

__all__ = [
    "RadialProfile",
    "GNConstants",
    "solve_townes_spectral",
    "solve_townes_shooting",
    "pohozaev_check",
    "gn_quotient_cubic",
    "gn_constant_sextic_estimate",
    "torus_constant_estimate",
    "c_star_bounds",
    "compute_constants",
]


@dataclass(frozen=True)
class RadialProfile:
    """Radial profile sampled on a uniform grid r = 0, dr, ..., r_max."""

    r: np.ndarray
    values: np.ndarray
    dr: float
    r_max: float

    def mass(self) -> float:
        """2*pi * integral of Q(r)^2 r dr by the trapezoid rule."""
        return float(2.0 * np.pi * np.trapezoid(self.values**2 * self.r, dx=self.dr))


@dataclass(frozen=True)
class GNConstants:
    """Variational constants calibrating every threshold.

    mass_q       mass of the planar ground state
    c_gn_2d      cubic Gagliardo-Nirenberg quotient at the ground state
    c_gn_rs      vector-system constant, c_gn_2d / 2 by definition
    g_hat        sextic quotient infimum estimate
    c_torus      mean-zero circle constant estimate (ascent lower bound)
    c_star_upper closed-form upper bound for the mixed-inequality coefficient
    c_star_emp   empirical lower estimate (max required coefficient sampled)
    """

    mass_q: float
    c_gn_2d: float
    c_gn_rs: float
    g_hat: float
    c_torus: float
    c_star_upper: float
    c_star_emp: float
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if abs(self.c_gn_2d - self.mass_q / 2.0) > 1e-3 * self.c_gn_2d:
            raise DomainError(
                "cubic quotient and half the ground-state mass disagree beyond 1e-3"
            )
        if self.c_gn_rs != self.c_gn_2d / 2.0:
            raise DomainError("vector constant must be exactly half the cubic quotient")
        if self.c_star_emp > self.c_star_upper + 1e-6:
            raise DomainError("empirical coefficient exceeds the closed-form upper bound")
        if self.c_torus < 3.0 / (4.0 * np.pi) - 1e-9:
            raise DomainError("circle constant fell below the single-mode witness value")

    def c_for(self, c_choice: str) -> float:
        if c_choice == "upper":
            return self.c_star_upper
        if c_choice == "empirical":
            return self.c_star_emp
        raise DomainError(f"c_choice must be 'upper' or 'empirical', got {c_choice!r}")

    def to_dict(self) -> dict:
        return {
            "mass_Q": self.mass_q,
            "c_gn_2d": self.c_gn_2d,
            "c_gn_rs": self.c_gn_rs,
            "g_hat": self.g_hat,
            "c_torus": self.c_torus,
            "c_star_upper": self.c_star_upper,
            "c_star_emp": self.c_star_emp,
            "solver_metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GNConstants":
        return cls(
            mass_q=float(d["mass_Q"]),
            c_gn_2d=float(d["c_gn_2d"]),
            c_gn_rs=float(d["c_gn_rs"]),
            g_hat=float(d["g_hat"]),
            c_torus=float(d["c_torus"]),
            c_star_upper=float(d["c_star_upper"]),
            c_star_emp=float(d["c_star_emp"]),
            metadata=dict(d.get("solver_metadata", {})),
        )


def solve_townes_spectral(
    n_x: int = 256,
    box_length: float = 32.0,
    tol: float = 1e-12,
    max_iter: int = 800,
    initial: Field2 | None = None,
    residual_log: list | None = None,
) -> Field2:
    """Ground state by spectral renormalization.

    Fixed point of Q -> F^{-1}[(|xi|^2+1)^{-1} F[Q^3]] with the degree-3/2
    power renormalization each sweep. The iterate stays strictly positive
    (the inverse operator has a positive kernel); a signed iterate means the
    iteration left the basin and is reported as divergence.
    """
    if not (1e-12 <= tol <= 1e-4):
        raise DomainError(f"tol must lie in [1e-12, 1e-4], got {tol}")
    if initial is None:
        x = -0.5 * box_length + (box_length / n_x) * np.arange(n_x)
        r_sq = x[:, None] ** 2 + x[None, :] ** 2
        q = 2.2 * np.exp(-r_sq / 2.0)
    else:
        if initial.n_x != n_x or initial.box_length != box_length:
            raise DomainError("initial guess lives on a different grid")
        q = initial.values.real.copy()

    template = Field2(n_x, box_length, np.zeros((n_x, n_x)))
    lin = template.xi_sq + 1.0
    weight = template.weight

    def residual_of(qv: np.ndarray) -> float:
        qhat = sfft.fft2(qv, norm="ortho")
        nhat = sfft.fft2(qv**3, norm="ortho")
        res = np.sqrt(weight * np.sum(np.abs(lin * qhat - nhat) ** 2))
        return float(res / np.sqrt(weight * np.sum(qv**2)))

    last = math.inf
    for _ in range(max_iter):
        qhat = sfft.fft2(q, norm="ortho")
        nhat = sfft.fft2(q**3, norm="ortho")
        num = float(np.real(np.sum(lin * np.abs(qhat) ** 2)))
        den = float(np.real(np.sum(np.conj(qhat) * nhat)))
        if den <= 0:
            raise ConvergenceError("renormalization factor lost positivity", last)
        s = num / den
        q = sfft.ifft2(s**1.5 * nhat / lin, norm="ortho").real
        # the discrete kernel has tiny negative truncation lobes on coarse
        # grids; only a sign loss at profile scale means basin escape
        if q.min() < -1e-3 * q.max():
            raise ConvergenceError("iterate developed negative values", last)
        last = residual_of(q)
        if residual_log is not None:
            residual_log.append(last)
        if last <= tol:
            return Field2(n_x, box_length, q)
    raise ConvergenceError(
        f"no convergence to {tol} within {max_iter} iterations", last
    )


@njit(cache=True)
def _shoot(a: float, dr: float, n_steps: int, out: np.ndarray) -> int:
    """RK4 on q' = p, p' = q - q^3 - p/r from the series launch at r = dr.

    Fills out[0..n_steps] with q at r = 0, dr, ..., n_steps*dr when out is
    full-sized (len n_steps+1); pass a length-1 array to skip storage.
    Returns the first sample index where q <= 0, or -1 if q stays positive.
    """
    store = out.shape[0] == n_steps + 1
    if store:
        out[0] = a
    q = a + (a - a**3) * dr * dr / 4.0
    p = (a - a**3) * dr / 2.0
    r = dr
    if store:
        out[1] = q
    if q <= 0.0:
        return 1
    for i in range(2, n_steps + 1):
        k1q = p
        k1p = q - q**3 - p / r
        q2 = q + 0.5 * dr * k1q
        p2 = p + 0.5 * dr * k1p
        rh = r + 0.5 * dr
        k2q = p2
        k2p = q2 - q2**3 - p2 / rh
        q3 = q + 0.5 * dr * k2q
        p3 = p + 0.5 * dr * k2p
        k3q = p3
        k3p = q3 - q3**3 - p3 / rh
        q4 = q + dr * k3q
        p4 = p + dr * k3p
        rf = r + dr
        k4q = p4
        k4p = q4 - q4**3 - p4 / rf
        q = q + dr * (k1q + 2.0 * k2q + 2.0 * k3q + k4q) / 6.0
        p = p + dr * (k1p + 2.0 * k2p + 2.0 * k3p + k4p) / 6.0
        r = rf
        if store:
            out[i] = q
        if q <= 0.0:
            return i
    return -1


def _crosses(a: float, dr: float, n_steps: int) -> bool:
    scratch = np.empty(1)
    return _shoot(a, dr, n_steps, scratch) >= 0


def solve_townes_shooting(
    tol: float = 0.0, dr: float = 1e-4, r_max: float = 15.0
) -> RadialProfile:
    """Ground state by bisection on the launch amplitude Q(0).

    Trajectories launched above the separatrix amplitude cross zero; those
    launched below stay positive (eventually relaxing back toward the
    constant state 1). Bisection pins the amplitude whose crossing sits at
    r_max and returns the last positive-side trajectory, which is strictly
    decreasing with an arbitrarily small terminal value. tol = 0 runs the
    bisection to floating-point exhaustion.
    """
    n_steps = int(round(r_max / dr))
    lo, hi = 0.1, 10.0
    if _crosses(lo, dr, n_steps) or not _crosses(hi, dr, n_steps):
        raise ConvergenceError("no bisection bracket found in [0.1, 10]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _crosses(mid, dr, n_steps):
            hi = mid
        else:
            lo = mid
    values = np.empty(n_steps + 1)
    _shoot(lo, dr, n_steps, values)
    r = dr * np.arange(n_steps + 1)
    return RadialProfile(r=r, values=values, dr=dr, r_max=r_max)


@dataclass(frozen=True)
class PohozaevReport:
    r1: float
    r2: float


def pohozaev_check(q: Field2) -> PohozaevReport:
    """Stationary-state integral identities as ratios (both 1 for the ground state).

    r1 = |grad Q|^2 / |Q|^2, r2 = |Q|_4^4 / (2 |Q|_2^2).
    """
    l2_sq = norm(q, NormKind.L2) ** 2
    grad_sq = norm(q, NormKind.GradX_L2) ** 2
    l4_4 = norm(q, NormKind.L4) ** 4
    return PohozaevReport(r1=grad_sq / l2_sq, r2=l4_4 / (2.0 * l2_sq))


def gn_quotient_cubic(u: Field2) -> float:
    """|u|_2^2 |grad u|_2^2 / |u|_4^4."""
    l4 = norm(u, NormKind.L4)
    if l4 == 0.0:
        raise DomainError("quotient undefined for a field with zero L4 norm")
    l2_sq = norm(u, NormKind.L2) ** 2
    grad_sq = norm(u, NormKind.GradX_L2) ** 2
    return l2_sq * grad_sq / l4**4


def _sextic_quotient_and_grad(
    q: np.ndarray, xi_sq: np.ndarray, weight: float
) -> tuple[float, np.ndarray]:
    qhat = sfft.fft2(q, norm="ortho")
    a = weight * float(np.sum(q**2))
    b = weight * float(np.sum(xi_sq * np.abs(qhat) ** 2))
    c = weight * float(np.sum(q**6))
    val = a * b**2 / c
    lap = sfft.ifft2(-xi_sq * qhat, norm="ortho").real
    grad = (2.0 * b**2 / c) * q - (4.0 * a * b / c) * lap - (6.0 * a * b**2 / c**2) * q**5
    return val, grad


def gn_constant_sextic_estimate(
    gtol: float = 1e-4,
    n_x: int = 256,
    box_length: float = 24.0,
    max_iter: int = 6000,
    initial: np.ndarray | None = None,
) -> float:
    """Sextic quotient infimum over localized trial fields.

    Gradient descent on the quotient |u|_2^2 |grad u|_2^4 / |u|_6^6 with
    Barzilai-Borwein steps, amplitude fixed by renormalizing |u|_2 = 1 each
    sweep, terminated on the weighted gradient norm. The step is capped so a
    single sweep cannot tunnel between basins: the discretization breaks the
    dilation invariance of the quotient and coarse grids own a spurious
    grid-scale critical point well below the true infimum. A scale monitor
    (|grad u|^2 / |u|^2 is 2 at the minimizer) aborts if the iterate leaves
    the resolved regime. Pass initial to warm-start, e.g. an upsampled
    coarse-grid result for a grid-refinement check.
    """
    template = Field2(n_x, box_length, np.zeros((n_x, n_x)))
    xi_sq, weight = template.xi_sq, template.weight
    if initial is None:
        x = -0.5 * box_length + (box_length / n_x) * np.arange(n_x)
        r_sq = x[:, None] ** 2 + x[None, :] ** 2
        q = np.exp(-r_sq / 2.0)
    else:
        if initial.shape != (n_x, n_x):
            raise DomainError("initial guess shape does not match the grid")
        q = np.asarray(initial, dtype=float).copy()
    q /= math.sqrt(weight * float(np.sum(q**2)))
    val, grad = _sextic_quotient_and_grad(q, xi_sq, weight)
    step = 1e-3 / max(1.0, float(np.max(np.abs(grad))))
    prev_q, prev_grad = None, None
    for _ in range(max_iter):
        gnorm = math.sqrt(weight * float(np.sum(grad**2)))
        if gnorm <= gtol:
            return val
        if prev_q is not None:
            s = q - prev_q
            yv = grad - prev_grad
            denom = float(np.sum(s * yv))
            if denom > 0:
                step = float(np.sum(s * s)) / denom
            else:
                step = max(step * 0.5, 1e-12)
        grad_l2 = math.sqrt(float(np.sum(grad**2)))
        step = min(step, 0.05 / grad_l2)
        prev_q, prev_grad = q, grad
        q = q - step * grad
        q /= math.sqrt(weight * float(np.sum(q**2)))
        val, grad = _sextic_quotient_and_grad(q, xi_sq, weight)
        qhat = sfft.fft2(q, norm="ortho")
        scale = float(np.sum(xi_sq * np.abs(qhat) ** 2) / np.sum(np.abs(qhat) ** 2))
        if scale > 25.0:
            raise ConvergenceError(
                "iterate collapsed toward the grid-scale artifact", val
            )
    raise ConvergenceError(f"sextic descent did not settle within {max_iter} sweeps", val)


def _torus_ratio_and_grad(
    theta: np.ndarray, basis: np.ndarray, dbasis: np.ndarray, h: float
) -> tuple[float, np.ndarray]:
    u = theta @ basis
    du = theta @ dbasis
    p4 = h * float(np.sum(u**4))
    p2 = h * float(np.sum(u**2))
    d2 = h * float(np.sum(du**2))
    ratio = p4 / (p2**1.5 * math.sqrt(d2))
    # gradient of log ratio
    g = (
        (4.0 * h) * (basis @ u**3) / p4
        - (3.0 * h) * (basis @ u) / p2
        - h * (dbasis @ du) / d2
    )
    return ratio, g * ratio


def _torus_ascend(
    theta: np.ndarray,
    basis: np.ndarray,
    dbasis: np.ndarray,
    h: float,
    tol: float,
    max_iter: int = 4000,
) -> tuple[float, np.ndarray]:
    val, grad = _torus_ratio_and_grad(theta, basis, dbasis, h)
    step = 1e-2 / max(1.0, float(np.max(np.abs(grad))))
    prev_t, prev_g = None, None
    stable = 0
    for _ in range(max_iter):
        if prev_t is not None:
            s = theta - prev_t
            yv = grad - prev_g
            denom = abs(float(np.sum(s * yv)))
            if denom > 0:
                step = abs(float(np.sum(s * s))) / denom
        prev_t, prev_g = theta, grad
        theta = theta + step * grad
        nrm = float(np.linalg.norm(theta))
        if nrm > 0:
            theta = theta / nrm
        new_val, grad = _torus_ratio_and_grad(theta, basis, dbasis, h)
        if new_val < val:
            step *= 0.5
        if abs(new_val - val) <= tol * abs(val):
            stable += 1
            if stable >= 10:
                return new_val, theta
        else:
            stable = 0
        val = new_val
    return val, theta


def torus_constant_estimate(
    n_modes: int = 16, tol: float = 1e-10, rng: np.random.Generator | None = None
) -> float:
    """Best constant of |u|_4^4 <= C |u|_2^3 |u'|_2 over mean-zero circle fields.

    Projected gradient ascent over real trigonometric polynomials with up to
    n_modes modes, multi-start (single mode, two-mode seed, random seeds, and
    the padded optimum at n_modes/2 so the estimate is nondecreasing in
    n_modes). Local search: the reported value is the best local maximum
    reached from these starts, a certified lower bound for the constant.
    """
    if n_modes < 2:
        raise DomainError(f"n_modes must be >= 2, got {n_modes}")
    if rng is None:
        rng = np.random.default_rng(20260816)
    n_y = 8 * n_modes
    y = (2.0 * np.pi / n_y) * np.arange(n_y)
    h = 2.0 * np.pi / n_y
    ks = np.arange(1, n_modes + 1)
    basis = np.concatenate([np.cos(np.outer(ks, y)), np.sin(np.outer(ks, y))], axis=0)
    dbasis = np.concatenate(
        [-ks[:, None] * np.sin(np.outer(ks, y)), ks[:, None] * np.cos(np.outer(ks, y))],
        axis=0,
    )

    starts = []
    e1 = np.zeros(2 * n_modes)
    e1[0] = 1.0
    starts.append(e1)
    if n_modes >= 2:
        e12 = np.zeros(2 * n_modes)
        e12[0], e12[1] = 1.0, 0.35
        starts.append(e12)
    for _ in range(4):
        t = rng.standard_normal(2 * n_modes) * np.exp(
            -np.concatenate([ks, ks]) / max(2.0, n_modes / 3.0)
        )
        starts.append(t / np.linalg.norm(t))
    if n_modes >= 4:
        sub = _torus_best_theta(n_modes // 2, tol, rng)
        padded = np.zeros(2 * n_modes)
        padded[: n_modes // 2] = sub[: n_modes // 2]
        padded[n_modes : n_modes + n_modes // 2] = sub[n_modes // 2 :]
        starts.append(padded)

    best = -math.inf
    for theta in starts:
        val, _ = _torus_ascend(theta.copy(), basis, dbasis, h, tol)
        best = max(best, val)
    return best


def _torus_best_theta(
    n_modes: int, tol: float, rng: np.random.Generator
) -> np.ndarray:
    n_y = 8 * n_modes
    y = (2.0 * np.pi / n_y) * np.arange(n_y)
    h = 2.0 * np.pi / n_y
    ks = np.arange(1, n_modes + 1)
    basis = np.concatenate([np.cos(np.outer(ks, y)), np.sin(np.outer(ks, y))], axis=0)
    dbasis = np.concatenate(
        [-ks[:, None] * np.sin(np.outer(ks, y)), ks[:, None] * np.cos(np.outer(ks, y))],
        axis=0,
    )
    theta = np.zeros(2 * n_modes)
    theta[0] = 1.0
    best_val, best_theta = _torus_ascend(theta, basis, dbasis, h, tol)
    e12 = np.zeros(2 * n_modes)
    e12[0], e12[1] = 1.0, 0.35
    val, th = _torus_ascend(e12, basis, dbasis, h, tol)
    if val > best_val:
        best_val, best_theta = val, th
    return best_theta


def required_c(u: Field3, mass_q: float) -> float:
    """Smallest coefficient making the mixed inequality hold for this field.

    Zero when the planar term alone suffices; +inf for a y-independent field
    that even violates the planar term (impossible for decaying fields).
    """
    l4 = norm(u, NormKind.L4)
    l2 = norm(u, NormKind.L2)
    gx = norm(u, NormKind.GradX_L2)
    gy = norm(u, NormKind.GradY_L2)
    first = math.sqrt(gx) * (math.pi * mass_q) ** -0.25 * math.sqrt(l2)
    short = l4 - first
    if short <= 0.0:
        return 0.0
    denom = math.sqrt(gx) * l2**0.25 * gy**0.25
    if denom == 0.0:
        return math.inf
    return short / denom


def c_star_bounds(
    mass_q: float,
    g_hat: float,
    c_torus: float,
    n_samples: int = 200,
    rng: np.random.Generator | None = None,
    probe: Field2 | None = None,
) -> tuple[float, float]:
    """(closed-form upper bound, empirical lower estimate) for the coefficient.

    The upper bound is c_torus^{1/4} g_hat^{-1/8} (1+(2*pi)^{-1/2})^{3/4}.
    The empirical estimate maximizes required_c over a sample of localized
    random band-limited fields mixed with ground-state-modulated probes
    Q(x)(1 + a cos(y+phi)) near the sharp regime; purely random fields almost
    always need coefficient zero, so the probe family keeps the estimate away
    from the degenerate value.
    """
    c_upper = c_torus**0.25 * g_hat**-0.125 * (1.0 + (2.0 * np.pi) ** -0.5) ** 0.75
    if rng is None:
        rng = np.random.default_rng(20260816)
    grid = Grid3(n_x=64, box_length=32.0, n_y=8)
    if probe is None:
        probe = solve_townes_spectral(n_x=64, box_length=32.0, tol=1e-10)
    elif probe.n_x != grid.n_x:
        stride = probe.n_x // grid.n_x
        probe = Field2(grid.n_x, probe.box_length, probe.values[::stride, ::stride])
    y = grid.y[None, None, :]
    c_emp = 0.0
    for i in range(n_samples):
        if i % 2 == 0:
            alpha = rng.uniform(0.2, 2.0)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            vals = probe.values[:, :, None] * (1.0 + alpha * np.cos(y + phase))
            u = Field3(grid, vals)
        else:
            u = random_field3(
                grid, rng, band=0.4, envelope_sigma=grid.box_length / 6.0
            )
        c_emp = max(c_emp, required_c(u, mass_q))
    if c_emp > c_upper + 1e-6:
        raise ConvergenceError(
            f"sampled coefficient {c_emp} exceeds the closed-form bound {c_upper}"
        )
    return c_upper, c_emp


def compute_constants(
    tol_spectral: float = 1e-12,
    n_samples: int = 200,
    rng: np.random.Generator | None = None,
) -> GNConstants:
    """Solve both ground-state routes and assemble the full constants record."""
    residuals: list = []
    q = solve_townes_spectral(tol=tol_spectral, residual_log=residuals)
    mass_spec = norm(q, NormKind.L2) ** 2
    prof = solve_townes_shooting()
    mass_shoot = prof.mass()
    c_gn = gn_quotient_cubic(q)
    g_hat = gn_constant_sextic_estimate()
    c_torus = torus_constant_estimate(n_modes=16)
    probe = Field2(64, q.box_length, q.values[:: q.n_x // 64, :: q.n_x // 64])
    c_upper, c_emp = c_star_bounds(
        mass_spec, g_hat, c_torus, n_samples=n_samples, rng=rng, probe=probe
    )
    return GNConstants(
        mass_q=mass_spec,
        c_gn_2d=c_gn,
        c_gn_rs=c_gn / 2.0,
        g_hat=g_hat,
        c_torus=c_torus,
        c_star_upper=c_upper,
        c_star_emp=c_emp,
        metadata={
            "mass_shooting": mass_shoot,
            "peak_spectral": float(q.values.real.max()),
            "peak_shooting": float(prof.values[0]),
            "spectral_iterations": len(residuals),
            "spectral_residual": residuals[-1] if residuals else None,
            "n_samples": n_samples,
        },
    )
