"""INI run configuration: parsing, validation, and datum construction.

Flat sections with key=value pairs. The common sections are [run], [grid],
[controls], and [datum]; command-specific sections ([large_scale], [virial],
[weinstein], [gn_test], [campaign]) carry that command's knobs. Campaign
rows live in [datum:NAME] and optional [controls:NAME] sections, one pair
per name listed under [campaign] rows.

Validation is eager and complete: every unknown section or key, bad value,
or broken invariant is collected and reported together, with a close-match
suggestion for misspelled keys.
"""

from __future__ import annotations

import configparser
import difflib
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = ["RunConfig", "parse_config", "build_datum", "build_controls"]


def _as_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _as_float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _as_str_list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _as_mode_map(text: str) -> dict[int, float]:
    # "0:1.0,1:0.4,-1:0.4" -> {0: 1.0, 1: 0.4, -1: 0.4}
    out = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        mode, _, coef = part.partition(":")
        out[int(mode)] = float(coef)
    if not out:
        raise ValueError(f"empty mode map: {text!r}")
    return out


_RUN_KEYS = {
    "constants_source": str,
    "c_choice": str,
    "seed": int,
    "output_dir": str,
    "workers": int,
}
_GRID_KEYS = {"n_x": int, "n_y": int, "box_length": float}
_CONTROL_KEYS = {
    "dt": float,
    "t_end": float,
    "cfl_safety": float,
    "dealias": _as_bool,
    "sponge_inner_radius": float,
    "sponge_strength": float,
    "sample_every": int,
    "snapshot_every": int,
    "blowup_factor": float,
    "scatter_s": float,
}
_DATUM_KEYS = {
    "kind": str,
    "amplitude": float,
    "sigma": float,
    "y_modes": _as_mode_map,
    "kx_phase": float,
    "scale": float,
    "path": str,
    "shell_mass": float,
    "shell_radius": float,
    "shell_width": float,
}
_LARGE_SCALE_KEYS = {
    "lambdas": _as_float_list,
    "t_end": float,
    "n_base_steps": int,
    "phase_convention": str,
}
_VIRIAL_KEYS = {"radius": float, "dt": float, "t_end": float, "sample_every": int}
_WEINSTEIN_KEYS = {"n_max": int, "n_x": int, "box_length": float}
_GN_TEST_KEYS = {"n_samples": int, "band": float}
_CAMPAIGN_KEYS = {"rows": _as_str_list}

_SECTION_SCHEMAS = {
    "run": _RUN_KEYS,
    "grid": _GRID_KEYS,
    "controls": _CONTROL_KEYS,
    "datum": _DATUM_KEYS,
    "large_scale": _LARGE_SCALE_KEYS,
    "virial": _VIRIAL_KEYS,
    "weinstein": _WEINSTEIN_KEYS,
    "gn_test": _GN_TEST_KEYS,
    "campaign": _CAMPAIGN_KEYS,
}

_DATUM_KINDS = ("gaussian", "townes", "snapshot")


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; section contents as plain dicts."""

    source_path: str
    raw_text: str
    constants_source: str = "compute"
    c_choice: str = "upper"
    seed: int = 0
    output_dir: str = "wgnls-out"
    workers: int = 0
    grid: dict = field(default_factory=lambda: {"n_x": 64, "n_y": 8, "box_length": 32.0})
    controls: dict = field(default_factory=dict)
    datum: dict | None = None
    large_scale: dict = field(default_factory=dict)
    virial: dict = field(default_factory=dict)
    weinstein: dict = field(default_factory=dict)
    gn_test: dict = field(default_factory=dict)
    campaign: dict = field(default_factory=dict)
    rows: dict = field(default_factory=dict)


def _check_section(
    name: str, items: dict, schema: dict, violations: list[str]
) -> dict:
    parsed = {}
    for key, text in items.items():
        if key not in schema:
            hint = difflib.get_close_matches(key, schema, n=1)
            extra = f"; did you mean {hint[0]!r}?" if hint else ""
            violations.append(f"[{name}] unknown key {key!r}{extra}")
            continue
        try:
            parsed[key] = schema[key](text)
        except ValueError as exc:
            violations.append(f"[{name}] {key}: {exc}")
    return parsed


def _validate_grid(name: str, grid: dict, violations: list[str]) -> None:
    for key in ("n_x", "n_y"):
        n = grid.get(key)
        if n is not None and (n < 8 or n & (n - 1) != 0):
            violations.append(f"[{name}] {key} must be a power of two >= 8, got {n}")
    box = grid.get("box_length")
    if box is not None and box <= 0:
        violations.append(f"[{name}] box_length must be positive, got {box}")


def _validate_datum(name: str, datum: dict, violations: list[str]) -> None:
    kind = datum.get("kind")
    if kind is None:
        violations.append(f"[{name}] missing required key 'kind'")
        return
    if kind not in _DATUM_KINDS:
        violations.append(
            f"[{name}] kind must be one of {', '.join(_DATUM_KINDS)}, got {kind!r}"
        )
        return
    if kind == "snapshot" and "path" not in datum:
        violations.append(f"[{name}] kind=snapshot needs 'path'")
    if kind == "gaussian" and "amplitude" not in datum:
        violations.append(f"[{name}] kind=gaussian needs 'amplitude'")
    shell_keys = [k for k in datum if k.startswith("shell_")]
    if shell_keys and len(shell_keys) != 3:
        violations.append(
            f"[{name}] shell needs all of shell_mass, shell_radius, shell_width"
        )


def parse_config(path) -> RunConfig:
    """Read and validate one INI file; raises ConfigError with every violation."""
    with open(path) as fh:
        raw_text = fh.read()
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(raw_text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError([f"INI syntax: {exc}"]) from exc

    violations: list[str] = []
    sections: dict[str, dict] = {}
    rows: dict[str, dict] = {}
    for section in parser.sections():
        items = dict(parser.items(section))
        if ":" in section:
            base, _, row_name = section.partition(":")
            if base not in ("datum", "controls") or not row_name:
                violations.append(f"unknown section [{section}]")
                continue
            parsed = _check_section(section, items, _SECTION_SCHEMAS[base], violations)
            rows.setdefault(row_name, {})[base] = parsed
            if base == "datum":
                _validate_datum(section, parsed, violations)
            continue
        if section not in _SECTION_SCHEMAS:
            hint = difflib.get_close_matches(section, _SECTION_SCHEMAS, n=1)
            extra = f"; did you mean [{hint[0]}]?" if hint else ""
            violations.append(f"unknown section [{section}]{extra}")
            continue
        sections[section] = _check_section(
            section, items, _SECTION_SCHEMAS[section], violations
        )

    run = sections.get("run", {})
    c_choice = run.get("c_choice", "upper")
    if c_choice not in ("upper", "empirical"):
        violations.append(f"[run] c_choice must be upper or empirical, got {c_choice!r}")
    constants_source = run.get("constants_source", "compute")
    if constants_source != "compute" and not os.path.exists(constants_source):
        violations.append(f"[run] constants_source file not found: {constants_source}")
    workers = run.get("workers", 0)
    if workers < 0:
        violations.append(f"[run] workers must be >= 0, got {workers}")

    grid = {"n_x": 64, "n_y": 8, "box_length": 32.0}
    grid.update(sections.get("grid", {}))
    _validate_grid("grid", grid, violations)

    if "datum" in sections:
        _validate_datum("datum", sections["datum"], violations)

    campaign = sections.get("campaign", {})
    for row_name in campaign.get("rows", []):
        if row_name not in rows or "datum" not in rows[row_name]:
            violations.append(f"[campaign] row {row_name!r} has no [datum:{row_name}]")
    for row_name in rows:
        if row_name not in campaign.get("rows", []):
            violations.append(
                f"section for row {row_name!r} not listed under [campaign] rows"
            )

    ls = sections.get("large_scale", {})
    if "phase_convention" in ls and ls["phase_convention"] not in (
        "free_y_phase",
        "none",
    ):
        violations.append(
            "[large_scale] phase_convention must be free_y_phase or none"
        )

    if violations:
        raise ConfigError(violations)

    return RunConfig(
        source_path=str(path),
        raw_text=raw_text,
        constants_source=constants_source,
        c_choice=c_choice,
        seed=run.get("seed", 0),
        output_dir=run.get("output_dir", "wgnls-out"),
        workers=workers,
        grid=grid,
        controls=sections.get("controls", {}),
        datum=sections.get("datum"),
        large_scale=ls,
        virial=sections.get("virial", {}),
        weinstein=sections.get("weinstein", {}),
        gn_test=sections.get("gn_test", {}),
        campaign=campaign,
        rows=rows,
    )


def build_controls(controls: dict):
    """EvolveControls from a parsed [controls] section."""
    from .propagate import EvolveControls, SpongeSpec

    kw = dict(controls)
    inner = kw.pop("sponge_inner_radius", None)
    strength = kw.pop("sponge_strength", None)
    sponge = None
    if inner is not None:
        sponge = SpongeSpec(inner_radius=inner, strength=strength or 0.0)
    elif strength is not None:
        raise ConfigError(
            ["[controls] sponge_strength given without sponge_inner_radius"]
        )
    kw.setdefault("dt", 1e-3)
    kw.setdefault("t_end", 1.0)
    return EvolveControls(sponge=sponge, **kw)


def _townes_values(grid_nx: int, box_length: float):
    from .groundstate import solve_townes_spectral

    q = solve_townes_spectral()
    if q.box_length == box_length and q.n_x % grid_nx == 0:
        stride = q.n_x // grid_nx
        return q.values[::stride, ::stride]
    # Resample through the grid the profile was solved on: nearest lattice
    # points of the solve grid; the solve box must cover the target points.
    x_t = -0.5 * box_length + (box_length / grid_nx) * np.arange(grid_nx)
    vals = np.zeros((grid_nx, grid_nx))
    hq = q.box_length / q.n_x
    xq0 = -0.5 * q.box_length
    ii = np.round((x_t - xq0) / hq).astype(int)
    ok = (ii >= 0) & (ii < q.n_x) & (np.abs(x_t) <= 0.5 * q.box_length - hq)
    sel = np.ix_(ok, ok)
    vals[sel] = np.real(q.values[np.ix_(ii[ok], ii[ok])])
    return vals


def build_datum(datum: dict, grid_cfg: dict):
    """Field3 from a parsed [datum] section and grid settings."""
    from .snapshots import read_snapshot
    from .spectral import Field3, Grid3

    kind = datum["kind"]
    if kind == "snapshot":
        field3, _ = read_snapshot(datum["path"])
        return field3

    grid = Grid3(
        n_x=grid_cfg["n_x"],
        box_length=grid_cfg["box_length"],
        n_y=grid_cfg["n_y"],
    )
    x1 = grid.x1
    r_sq = x1[:, None] ** 2 + x1[None, :] ** 2
    if kind == "gaussian":
        sigma = datum.get("sigma", 1.0)
        plane = datum["amplitude"] * np.exp(-r_sq / (2.0 * sigma**2))
    else:
        plane = datum.get("scale", 1.0) * _townes_values(grid.n_x, grid.box_length)
    plane = plane.astype(np.complex128)
    kx = datum.get("kx_phase", 0.0)
    if kx:
        plane = plane * np.exp(1j * kx * x1)[:, None]

    y_modes = datum.get("y_modes", {0: 1.0})
    y = grid.y
    profile = np.zeros(grid.n_y, dtype=np.complex128)
    for mode, coef in y_modes.items():
        profile += coef * np.exp(1j * mode * y)
    values = plane[:, :, None] * profile[None, None, :]

    if "shell_mass" in datum:
        r = np.sqrt(r_sq)
        ring = np.exp(-((r - datum["shell_radius"]) / datum["shell_width"]) ** 2)
        ring_mass = grid.weight * grid.n_y * np.sum(ring**2)
        values = values + np.sqrt(datum["shell_mass"] / ring_mass) * ring[:, :, None]
    return Field3(grid, values)
