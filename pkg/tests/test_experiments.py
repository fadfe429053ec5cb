"""Virial action, large-scale comparison, and the campaign driver."""

import csv
import math

import numpy as np
import pytest

from wgnls.errors import DomainError
from wgnls.experiments import (
    CampaignRow,
    LargeScaleResult,
    VirialTrace,
    _chi,
    _chi_prime,
    campaign_table_csv,
    exterior_mass,
    large_scale_compare,
    local_virial,
    threshold_campaign,
    virial_trace,
)
from wgnls.groundstate import solve_townes_spectral
from wgnls.propagate import EvolveControls, step_strang
from wgnls.spectral import Field3, Grid3, NormKind, norm

GRID = Grid3(n_x=64, box_length=32.0, n_y=8)


def gaussian3(grid=GRID, amp=1.0, sigma=1.0, chirp=0.0) -> Field3:
    x1, x2 = grid.meshgrid_x()
    r_sq = x1**2 + x2**2
    prof = amp * np.exp(-r_sq / (2.0 * sigma**2) + 1j * chirp * r_sq)
    return Field3(grid, np.repeat(prof[:, :, None], grid.n_y, axis=2))


# ---------------------------------------------------------------- cutoff


def test_chi_inner_parabola():
    rho = np.array([0.0, 0.3, 0.7, 1.0])
    assert np.allclose(_chi(rho), rho**2, atol=1e-14)
    assert np.allclose(_chi_prime(rho), 2.0 * rho, atol=1e-14)


def test_chi_outer_zero():
    rho = np.array([2.0, 2.5, 10.0])
    assert np.allclose(_chi(rho), 0.0, atol=1e-14)
    assert np.allclose(_chi_prime(rho), 0.0, atol=1e-14)


def test_chi_junctions_smooth():
    # value and slope agree across both junctions up to O(eps) drift
    eps = 1e-9
    for a in (1.0, 2.0):
        left = _chi(np.array([a - eps]))[0]
        right = _chi(np.array([a + eps]))[0]
        assert abs(left - right) <= 1e-8
        dl = _chi_prime(np.array([a - eps]))[0]
        dr = _chi_prime(np.array([a + eps]))[0]
        assert abs(dl - dr) <= 1e-7


def test_chi_prime_is_derivative():
    rho = np.linspace(0.05, 2.5, 40)
    h = 1e-6
    fd = (_chi(rho + h) - _chi(rho - h)) / (2.0 * h)
    assert np.max(np.abs(fd - _chi_prime(rho))) <= 1e-7


# ---------------------------------------------------------------- local virial


def test_local_virial_domain():
    u = gaussian3()
    with pytest.raises(DomainError):
        local_virial(u, 0.0)
    with pytest.raises(DomainError):
        local_virial(u, 8.0)  # 2R = L/2 reaches the boundary


def test_local_virial_real_field_static():
    z, dz = local_virial(gaussian3(), 7.0)
    assert dz == pytest.approx(0.0, abs=1e-12)
    assert z > 0.0


def test_local_virial_is_moment_for_interior_data():
    # for data supported in |x| <= R the cutoff is exactly r^2
    u = gaussian3()
    z, _ = local_virial(u, 7.0)
    x1, x2 = GRID.meshgrid_x()
    moment = GRID.weight * np.sum((x1**2 + x2**2)[:, :, None] * np.abs(u.values) ** 2)
    assert z == pytest.approx(moment, rel=1e-10)
    # and the continuum value for exp(-r^2/2) is 2 pi * pi
    assert z == pytest.approx(2.0 * np.pi**2, rel=1e-9)


def test_local_virial_derivative_matches_flow():
    # dz from the momentum flux equals the time derivative of z along the flow
    u = gaussian3(amp=0.8, chirp=0.1)
    big_r = 7.0
    _, dz = local_virial(u, big_r)
    h = 5e-4
    z_plus, _ = local_virial(step_strang(u, h), big_r)
    u_minus = u.with_values(np.conj(u.values))
    z_minus, _ = local_virial(step_strang(u_minus, h), big_r)
    fd = (z_plus - z_minus) / (2.0 * h)
    assert dz == pytest.approx(fd, rel=1e-4)


def test_exterior_mass_limits():
    u = gaussian3()
    total = norm(u, NormKind.L2) ** 2
    # R below the grid spacing excludes exactly the origin sample
    mid = GRID.n_x // 2
    origin = GRID.weight * float(np.sum(np.abs(u.values[mid, mid, :]) ** 2))
    assert exterior_mass(u, 0.1) == pytest.approx(total - origin, rel=1e-12)
    assert exterior_mass(u, 6.0) <= 1e-12
    assert exterior_mass(u, 2.0) > exterior_mass(u, 3.0)
    with pytest.raises(DomainError):
        exterior_mass(u, -1.0)


# ---------------------------------------------------------------- virial trace


@pytest.fixture(scope="module")
def townes_on_grid():
    q = solve_townes_spectral(n_x=256, box_length=32.0, tol=1e-12)
    vals = q.values.real[::4, ::4]
    return Field3(GRID, np.broadcast_to(vals[:, :, None], (64, 64, 8)).copy())


def test_virial_trace_identity_on_interior_data(consts):
    # for data supported inside |x| <= R the boundary remainder is absent
    # and the second difference of z_R tracks 16 h_star to stencil error
    u = gaussian3(amp=0.5)
    trace = virial_trace(u, 7.0, consts, dt=1e-3, t_end=0.06, sample_every=3)
    assert np.all(np.diff(trace.times) > 0)
    assert np.all(np.isnan(trace.residual[:2]))
    assert np.all(np.isnan(trace.residual[-2:]))
    assert trace.h_star[0] == pytest.approx(15.0 * np.pi**2 / 64.0, rel=1e-7)
    assert np.max(np.abs(trace.residual[2:-2])) <= 1e-4


def test_virial_trace_stationary_state(consts, townes_on_grid):
    trace = virial_trace(townes_on_grid, 7.0, consts, dt=1e-3, t_end=0.05, sample_every=5)
    # the ground state keeps its action frozen and carries no radial current
    z0 = trace.z_r[0]
    assert np.max(np.abs(trace.z_r - z0)) <= 1e-4 * z0
    assert np.max(np.abs(trace.dz_r)) <= 5e-3 * z0


def test_virial_trace_csv(tmp_path, consts):
    trace = virial_trace(gaussian3(amp=0.5), 7.0, consts, dt=2e-3, t_end=0.02, sample_every=2)
    path = tmp_path / "virial.csv"
    trace.to_csv(path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["R", "t", "z_R", "dz_R", "h_star", "residual"]
    assert len(rows) == len(trace.times) + 1


def test_virial_trace_length_check():
    with pytest.raises(DomainError):
        VirialTrace(
            big_r=1.0,
            times=np.arange(3.0),
            z_r=np.zeros(3),
            dz_r=np.zeros(2),
            h_star=np.zeros(3),
            residual=np.zeros(3),
        )


# ---------------------------------------------------------------- large scale


def small_profile(two_mode=False):
    grid = Grid3(n_x=32, box_length=16.0, n_y=8)
    x1, x2 = grid.meshgrid_x()
    prof = 0.4 * np.exp(-(x1**2 + x2**2) / 2.0)
    vals = np.repeat(prof[:, :, None], grid.n_y, axis=2)
    if two_mode:
        vals = vals * (1.0 + 0.6 * np.cos(grid.y))[None, None, :]
    return Field3(grid, vals)


def test_large_scale_flat_profile_commutes():
    # y-independent data follow the resonant system exactly at every scale
    res = large_scale_compare(small_profile(), (1.0, 2.0, 4.0), t_end=0.25, n_base_steps=128)
    assert res.lambdas == (1.0, 2.0, 4.0)
    assert all(d <= 1e-10 for d in res.discrepancies)


def test_large_scale_validation():
    u = small_profile()
    with pytest.raises(DomainError):
        large_scale_compare(u, (), t_end=0.1)
    with pytest.raises(DomainError):
        large_scale_compare(u, (2.0, 1.0), t_end=0.1)
    with pytest.raises(DomainError):
        large_scale_compare(u, (0.5, 1.0), t_end=0.1)
    with pytest.raises(DomainError):
        large_scale_compare(u, (1.0,), t_end=-0.1)
    with pytest.raises(DomainError):
        large_scale_compare(u, (1.0,), t_end=0.1, n_base_steps=100)
    with pytest.raises(DomainError):
        large_scale_compare(u, (1.0,), t_end=0.1, phase_convention="drop")


def test_large_scale_phase_convention_matters():
    # without undoing the circle dispersion the proxy misses the fast phase
    u = small_profile(two_mode=True)
    with_phase = large_scale_compare(u, (4.0,), t_end=0.25, n_base_steps=128)
    without = large_scale_compare(u, (4.0,), t_end=0.25, n_base_steps=128, phase_convention="none")
    assert with_phase.discrepancies[0] < 0.1 * without.discrepancies[0]


def test_large_scale_result_validation_and_csv(tmp_path):
    with pytest.raises(DomainError):
        LargeScaleResult((2.0, 1.0), (0.1, 0.1), "none")
    with pytest.raises(DomainError):
        LargeScaleResult((1.0, 2.0), (0.1, -0.1), "none")
    with pytest.raises(DomainError):
        LargeScaleResult((1.0,), (0.1,), "partial")
    res = LargeScaleResult((1.0, 2.0), (0.5, 0.25), "free_y_phase")
    path = tmp_path / "sweep.csv"
    res.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["lambda", "delta"]
    assert float(rows[2][1]) == 0.25


# ---------------------------------------------------------------- campaign


def test_campaign_row_requires_name():
    with pytest.raises(DomainError):
        CampaignRow("", small_profile(), EvolveControls(dt=1e-3, t_end=0.1))


def test_campaign_collects_rows_and_errors(tmp_path, consts):
    grid = Grid3(n_x=32, box_length=16.0, n_y=8)
    x1, x2 = grid.meshgrid_x()
    prof = np.exp(-(x1**2 + x2**2) / 2.0)
    tiny = Field3(grid, np.repeat(0.05 * prof[:, :, None], 8, axis=2))
    hot = Field3(grid, np.repeat(2.0 * prof[:, :, None], 8, axis=2))
    rows = [
        CampaignRow("tiny", tiny, EvolveControls(dt=5e-3, t_end=0.2, sample_every=10)),
        # dt * |u|^2 = 4 > pi/2: the run aborts but the campaign records it
        CampaignRow("hot", hot, EvolveControls(dt=1.0, t_end=2.0)),
    ]
    results = threshold_campaign(rows, consts)
    assert [r.name for r in results] == ["tiny", "hot"]
    assert results[0].report.classification == "scattering_regime"
    assert results[0].outcome is not None
    assert results[0].error is None
    assert results[1].outcome is None
    assert "rotation" in results[1].error
    path = tmp_path / "campaign.csv"
    campaign_table_csv(results, path)
    rows_out = list(csv.reader(open(path)))
    assert rows_out[0][0] == "name"
    assert len(rows_out) == 3
    assert rows_out[2][0] == "hot"
    assert rows_out[2][2] == ""  # no run status for the failed row
