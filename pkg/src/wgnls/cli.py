"""Command line entry point: one subcommand per study, INI-configured.

Every command reads a config file, runs, writes its outputs into the
configured output directory, and finishes by atomically writing a
manifest.json that lists every file produced together with the config and
constants hashes. Exit status: 0 on success (a detected blow-up is a
result, not a failure), 1 on domain or data errors, 2 on usage or config
errors. Errors go to stderr as one JSON object.

The constants pipeline honours WGNLS_CONSTANTS_CACHE: when set, computed
constants are cached at that path and reused on later runs.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .config import RunConfig, build_controls, build_datum, parse_config
from .errors import ConfigError, SnapshotFormatError, WgnlsError
from .experiments import (
    CampaignRow,
    campaign_table_csv,
    exterior_mass,
    large_scale_compare,
    threshold_campaign,
    virial_trace,
)
from .groundstate import GNConstants, compute_constants, solve_townes_spectral
from .propagate import evolve
from .resonant import VecField2, embed_from_torus, evolve_rs, weinstein_quotient
from .snapshots import read_snapshot, write_snapshot
from .spectral import Grid3, random_field3
from .thresholds import classify, check_gn_r2t1, gamma, json_real

__all__ = ["main", "dispatch"]

_COMMANDS = (
    "constants",
    "classify",
    "evolve",
    "resonant-evolve",
    "weinstein",
    "large-scale",
    "virial",
    "campaign",
    "gn-test",
)


def _utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _constants_payload(consts: GNConstants) -> str:
    return json.dumps(consts.to_dict(), indent=2, sort_keys=True)


def _load_constants(cfg: RunConfig) -> GNConstants:
    if cfg.constants_source != "compute":
        with open(cfg.constants_source) as fh:
            return GNConstants.from_dict(json.load(fh))
    cache = os.environ.get("WGNLS_CONSTANTS_CACHE")
    if cache and os.path.exists(cache):
        with open(cache) as fh:
            return GNConstants.from_dict(json.load(fh))
    consts = compute_constants()
    if cache:
        _atomic_write(cache, _constants_payload(consts))
    return consts


def _atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


class _RunDir:
    """Collects output files so the manifest can list every one of them."""

    def __init__(self, cfg: RunConfig, command: str):
        self.cfg = cfg
        self.command = command
        self.root = cfg.output_dir
        os.makedirs(self.root, exist_ok=True)
        self.started = _utc_now()
        self.t0 = time.monotonic()
        self.files: list[str] = []

    def path(self, name: str) -> str:
        self.files.append(name)
        return os.path.join(self.root, name)

    def finish(self, consts: GNConstants | None, summary: dict) -> None:
        inventory = [
            {
                "name": name,
                "bytes": os.path.getsize(os.path.join(self.root, name)),
                "sha256": _sha256_file(os.path.join(self.root, name)),
            }
            for name in self.files
        ]
        manifest = {
            "command": self.command,
            "code_version": __version__,
            "config_hash": _sha256_text(self.cfg.raw_text),
            "constants_hash": (
                _sha256_text(_constants_payload(consts)) if consts else None
            ),
            "started": self.started,
            "ended": _utc_now(),
            "walltime_s": round(time.monotonic() - self.t0, 3),
            "summary": summary,
            "files": inventory,
        }
        _atomic_write(
            os.path.join(self.root, "manifest.json"), json.dumps(manifest, indent=2)
        )


def _cmd_constants(cfg: RunConfig, args) -> int:
    run = _RunDir(cfg, "constants")
    consts = _load_constants(cfg)
    _atomic_write(run.path("constants.json"), _constants_payload(consts))
    run.finish(consts, {"mass_q": consts.mass_q, "c_choice": cfg.c_choice})
    return 0


def _cmd_classify(cfg: RunConfig, args) -> int:
    run = _RunDir(cfg, "classify")
    consts = _load_constants(cfg)
    if getattr(args, "input", None):
        u, _ = read_snapshot(args.input)
    else:
        if cfg.datum is None:
            raise ConfigError(["classify needs a [datum] section or --input"])
        u = build_datum(cfg.datum, cfg.grid)
    report = classify(u, consts, cfg.c_choice)
    payload = report.to_dict()
    payload["c_choice"] = cfg.c_choice
    payload["pi_mass_q"] = float(np.pi * consts.mass_q)
    payload["two_pi_mass_q"] = float(2.0 * np.pi * consts.mass_q)
    _atomic_write(run.path("report.json"), json.dumps(payload, indent=2))

    top = 2.0 * np.pi * consts.mass_q
    ms = np.linspace(top / 400.0, top, 200)
    lines = ["m,gamma"]
    for m in ms:
        lines.append(f"{float(m)!r},{gamma(float(m), consts, cfg.c_choice)!r}")
    _atomic_write(run.path("gamma_curve.csv"), "\n".join(lines) + "\n")
    run.finish(consts, {"classification": report.classification})
    return 0


def _cmd_evolve(cfg: RunConfig, args) -> int:
    run = _RunDir(cfg, "evolve")
    consts = _load_constants(cfg)
    if cfg.datum is None:
        raise ConfigError(["evolve needs a [datum] section"])
    u0 = build_datum(cfg.datum, cfg.grid)
    controls = build_controls(cfg.controls)
    outcome = evolve(u0, controls, consts)
    outcome.time_series.to_csv(run.path("time_series.csv"))
    write_snapshot(run.path("final.wgnls"), outcome.final, outcome.t_final)
    for t_snap, field3 in outcome.meta.get("snapshots", []):
        write_snapshot(run.path(f"snap_{t_snap:012.6f}.wgnls"), field3, t_snap)
    run.finish(
        consts,
        {
            "status": outcome.status,
            "t_final": outcome.t_final,
            "max_grad": outcome.max_grad,
            "scatter_accum": outcome.scatter_accum,
            "window_ratios": outcome.meta.get("window_ratios"),
            "sponge_active": outcome.meta.get("sponge_active"),
        },
    )
    return 0


def _cmd_resonant_evolve(cfg: RunConfig, args) -> int:
    run = _RunDir(cfg, "resonant-evolve")
    consts = _load_constants(cfg)
    if cfg.datum is None:
        raise ConfigError(["resonant-evolve needs a [datum] section"])
    u0 = embed_from_torus(build_datum(cfg.datum, cfg.grid))
    controls = build_controls(cfg.controls)
    outcome = evolve_rs(u0, controls)
    series = outcome.time_series
    series.to_csv(run.path("rs_series.csv"))
    m0_start, m1_start, e_start = series.m0[0], series.m1[0], series.energy[0]
    run.finish(
        consts,
        {
            "status": outcome.status,
            "t_final": outcome.t_final,
            "m0_drift": abs(series.m0[-1] - m0_start) / max(abs(m0_start), 1e-300),
            "m1_drift": abs(series.m1[-1] - m1_start) / max(abs(m1_start), 1e-300),
            "energy_drift": abs(series.energy[-1] - e_start)
            / max(abs(e_start), 1e-300),
        },
    )
    return 0


def _cmd_weinstein(cfg: RunConfig, args) -> int:
    run = _RunDir(cfg, "weinstein")
    consts = _load_constants(cfg)
    n_max = cfg.weinstein.get("n_max", 5)
    n_x = cfg.weinstein.get("n_x", 256)
    box = cfg.weinstein.get("box_length", 32.0)
    q = solve_townes_spectral(n_x=n_x, box_length=box)
    plane = np.asarray(np.real(q.values), dtype=np.complex128)
    lines = ["n,quotient,reference,rel_err"]
    worst = 0.0
    for n in range(1, n_max + 1):
        comps = np.broadcast_to(plane, (2 * n + 1, n_x, n_x)).copy()
        quot = weinstein_quotient(VecField2(n, box, comps))
        ref = consts.c_gn_2d * (2 * n + 1) / (4 * n + 1)
        rel = abs(quot - ref) / ref
        worst = max(worst, rel)
        lines.append(f"{n},{quot!r},{ref!r},{rel!r}")
    _atomic_write(run.path("weinstein.csv"), "\n".join(lines) + "\n")
    run.finish(consts, {"n_max": n_max, "worst_rel_err": worst})
    return 0


def _cmd_large_scale(cfg: RunConfig, args) -> int:
    run = _RunDir(cfg, "large-scale")
    consts = _load_constants(cfg)
    if cfg.datum is None:
        raise ConfigError(["large-scale needs a [datum] section"])
    u0 = build_datum(cfg.datum, cfg.grid)
    ls = cfg.large_scale
    result = large_scale_compare(
        u0,
        ls.get("lambdas", [1.0, 2.0, 4.0]),
        ls.get("t_end", 0.5),
        n_base_steps=ls.get("n_base_steps", 1024),
        phase_convention=ls.get("phase_convention", "free_y_phase"),
    )
    result.to_csv(run.path("lambda_sweep.csv"))
    run.finish(
        consts,
        {
            "lambdas": list(result.lambdas),
            "deltas": list(result.discrepancies),
            "phase_convention": result.phase_convention,
        },
    )
    return 0


def _cmd_virial(cfg: RunConfig, args) -> int:
    run = _RunDir(cfg, "virial")
    consts = _load_constants(cfg)
    if cfg.datum is None:
        raise ConfigError(["virial needs a [datum] section"])
    u0 = build_datum(cfg.datum, cfg.grid)
    vr = cfg.virial
    if "radius" not in vr:
        raise ConfigError(["[virial] needs 'radius'"])
    trace = virial_trace(
        u0,
        vr["radius"],
        consts,
        dt=vr.get("dt", 1e-3),
        t_end=vr.get("t_end", 0.1),
        sample_every=vr.get("sample_every", 10),
    )
    trace.to_csv(run.path("virial.csv"))
    finite = np.isfinite(trace.residual)
    run.finish(
        consts,
        {
            "radius": vr["radius"],
            "exterior_mass": exterior_mass(u0, vr["radius"]),
            "max_abs_residual": (
                float(np.max(np.abs(trace.residual[finite]))) if finite.any() else None
            ),
        },
    )
    return 0


def _cmd_campaign(cfg: RunConfig, args) -> int:
    run = _RunDir(cfg, "campaign")
    consts = _load_constants(cfg)
    names = cfg.campaign.get("rows", [])
    if not names:
        raise ConfigError(["[campaign] needs a nonempty 'rows' list"])
    rows = []
    for name in names:
        row_cfg = cfg.rows[name]
        datum = build_datum(row_cfg["datum"], cfg.grid)
        controls = build_controls(row_cfg.get("controls", cfg.controls))
        rows.append(CampaignRow(name, datum, controls))
    workers = cfg.workers or min(len(rows), os.cpu_count() or 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(
                    lambda row: threshold_campaign([row], consts, cfg.c_choice)[0],
                    rows,
                )
            )
    else:
        results = threshold_campaign(rows, consts, cfg.c_choice)
    campaign_table_csv(results, run.path("campaign.csv"))
    run.finish(
        consts,
        {
            "rows": {
                res.name: {
                    "classification": res.report.classification,
                    "status": res.outcome.status if res.outcome else None,
                    "error": res.error,
                }
                for res in results
            }
        },
    )
    return 0


def _cmd_gn_test(cfg: RunConfig, args) -> int:
    run = _RunDir(cfg, "gn-test")
    consts = _load_constants(cfg)
    n_samples = cfg.gn_test.get("n_samples", 1000)
    band = cfg.gn_test.get("band", 0.5)
    grid = Grid3(
        n_x=cfg.grid["n_x"],
        box_length=cfg.grid["box_length"],
        n_y=cfg.grid["n_y"],
    )
    rng = np.random.default_rng(cfg.seed)
    worst = np.inf
    failures = 0
    for _ in range(n_samples):
        u = random_field3(grid, rng, band=band)
        resid = check_gn_r2t1(u, consts, cfg.c_choice)
        worst = min(worst, resid)
        if resid < -1e-10:
            failures += 1
    payload = {
        "n_samples": n_samples,
        "band": band,
        "seed": cfg.seed,
        "c_choice": cfg.c_choice,
        "min_residual": json_real(worst),
        "failures": failures,
    }
    _atomic_write(run.path("gn_test.json"), json.dumps(payload, indent=2))
    run.finish(consts, {"min_residual": json_real(worst), "failures": failures})
    return 0


_HANDLERS = {
    "constants": _cmd_constants,
    "classify": _cmd_classify,
    "evolve": _cmd_evolve,
    "resonant-evolve": _cmd_resonant_evolve,
    "weinstein": _cmd_weinstein,
    "large-scale": _cmd_large_scale,
    "virial": _cmd_virial,
    "campaign": _cmd_campaign,
    "gn-test": _cmd_gn_test,
}


def dispatch(command: str, cfg: RunConfig, args=None) -> int:
    """Route one parsed config to its command handler."""
    return _HANDLERS[command](cfg, args)


def _error_json(kind: str, message: str, **extra) -> None:
    payload = {"error": kind, "message": message}
    payload.update(extra)
    print(json.dumps(payload), file=sys.stderr)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wgnls", description="Waveguide cubic NLS studies."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="INI run configuration")
        if name == "classify":
            cmd.add_argument(
                "--input", help="classify this snapshot instead of [datum]"
            )
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config)
        return dispatch(args.command, cfg, args)
    except ConfigError as exc:
        _error_json("ConfigError", str(exc), violations=exc.violations)
        return 2
    except SnapshotFormatError as exc:
        _error_json("SnapshotFormatError", f"bad snapshot header: {exc}")
        return 1
    except FileNotFoundError as exc:
        _error_json("FileNotFoundError", str(exc))
        return 1
    except WgnlsError as exc:
        _error_json(type(exc).__name__, str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
