"""INI parsing, datum construction, and the command line driver."""

import hashlib
import json
import os

import numpy as np
import pytest

from wgnls.cli import main
from wgnls.config import build_controls, build_datum, parse_config
from wgnls.errors import ConfigError
from wgnls.snapshots import write_snapshot
from wgnls.spectral import Field3, Grid3, NormKind, norm


def write_ini(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


@pytest.fixture()
def consts_json(tmp_path, consts):
    path = tmp_path / "consts.json"
    path.write_text(json.dumps(consts.to_dict()))
    return str(path)


# ---------------------------------------------------------------- parsing


def test_parse_minimal_defaults(tmp_path):
    cfg = parse_config(write_ini(tmp_path, "[datum]\nkind = gaussian\namplitude = 0.1\n"))
    assert cfg.grid == {"n_x": 64, "n_y": 8, "box_length": 32.0}
    assert cfg.c_choice == "upper"
    assert cfg.seed == 0
    assert cfg.output_dir == "wgnls-out"
    assert cfg.datum == {"kind": "gaussian", "amplitude": 0.1}


def test_parse_suggests_close_key(tmp_path):
    with pytest.raises(ConfigError) as err:
        parse_config(write_ini(tmp_path, "[grid]\nboxlen = 16\n"))
    assert any("did you mean 'box_length'" in v for v in err.value.violations)


def test_parse_suggests_close_section(tmp_path):
    with pytest.raises(ConfigError) as err:
        parse_config(write_ini(tmp_path, "[griid]\nn_x = 32\n"))
    assert any("did you mean [grid]" in v for v in err.value.violations)


def test_parse_collects_every_violation(tmp_path):
    text = "\n".join(
        [
            "[run]",
            "c_choice = tight",
            "[grid]",
            "n_x = 100",
            "box_length = -4",
            "[controls]",
            "dt = fast",
            "[datum]",
            "kind = gaussian",
        ]
    )
    with pytest.raises(ConfigError) as err:
        parse_config(write_ini(tmp_path, text))
    joined = "\n".join(err.value.violations)
    assert len(err.value.violations) == 5
    assert "c_choice" in joined
    assert "power of two" in joined
    assert "box_length must be positive" in joined
    assert "[controls] dt" in joined
    assert "kind=gaussian needs 'amplitude'" in joined


def test_parse_campaign_row_cross_checks(tmp_path):
    text = "\n".join(
        [
            "[campaign]",
            "rows = a",
            "[datum:b]",
            "kind = gaussian",
            "amplitude = 0.1",
        ]
    )
    with pytest.raises(ConfigError) as err:
        parse_config(write_ini(tmp_path, text))
    joined = "\n".join(err.value.violations)
    assert "row 'a' has no [datum:a]" in joined
    assert "row 'b' not listed" in joined


def test_parse_rejects_bad_phase_convention(tmp_path):
    text = "[large_scale]\nphase_convention = drop\n"
    with pytest.raises(ConfigError, match="phase_convention"):
        parse_config(write_ini(tmp_path, text))


def test_parse_rejects_missing_constants_file(tmp_path):
    text = "[run]\nconstants_source = /no/such/file.json\n"
    with pytest.raises(ConfigError, match="not found"):
        parse_config(write_ini(tmp_path, text))


def test_parse_rejects_broken_ini(tmp_path):
    with pytest.raises(ConfigError, match="INI syntax"):
        parse_config(write_ini(tmp_path, "just some words\n"))


# ---------------------------------------------------------------- controls


def test_build_controls_defaults_and_sponge():
    controls = build_controls(
        {"dt": 2e-3, "t_end": 0.5, "sponge_inner_radius": 8.0, "sponge_strength": 1.5}
    )
    assert controls.dt == 2e-3
    assert controls.sponge.inner_radius == 8.0
    assert controls.sponge.strength == 1.5
    bare = build_controls({})
    assert bare.dt == 1e-3
    assert bare.t_end == 1.0
    assert bare.sponge is None


def test_build_controls_rejects_orphan_strength():
    with pytest.raises(ConfigError, match="sponge_strength"):
        build_controls({"sponge_strength": 1.0})


# ---------------------------------------------------------------- datum


GRID_CFG = {"n_x": 32, "n_y": 8, "box_length": 16.0}


def test_build_datum_gaussian():
    u = build_datum({"kind": "gaussian", "amplitude": 0.7, "sigma": 2.0}, GRID_CFG)
    assert u.grid.n_x == 32
    mid = u.grid.n_x // 2
    assert u.values[mid, mid, 0] == pytest.approx(0.7)
    # default y_modes is the flat mode
    assert np.allclose(u.values[:, :, 0], u.values[:, :, 3])


def test_build_datum_y_modes_and_kx():
    datum = {
        "kind": "gaussian",
        "amplitude": 0.5,
        "y_modes": {1: 0.4},
        "kx_phase": 1.0,
    }
    u = build_datum(datum, GRID_CFG)
    grid = u.grid
    x1, _ = grid.meshgrid_x()
    ax = grid.x1
    expected = (
        0.5
        * np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / 2.0)[:, :, None]
        * (0.4 * np.exp(1j * grid.y))[None, None, :]
        * np.exp(1j * ax)[:, None, None]
    )
    assert np.max(np.abs(u.values - expected)) <= 1e-12


def test_build_datum_townes_paths():
    # stride path: same box, coarser lattice
    u = build_datum({"kind": "townes", "scale": 2.0}, {"n_x": 64, "n_y": 8, "box_length": 32.0})
    mid = 32
    assert u.values[mid, mid, 0].real == pytest.approx(2.0 * 2.2062008646, rel=1e-6)
    # resample path: different box, nearest lattice points of the solve grid
    v = build_datum({"kind": "townes"}, GRID_CFG)
    assert v.values[16, 16, 0].real == pytest.approx(2.2062008646, rel=1e-6)
    assert abs(v.values[0, 0, 0]) <= 1e-3


def test_build_datum_snapshot_round_trip(tmp_path):
    grid = Grid3(n_x=16, box_length=8.0, n_y=8)
    rng = np.random.default_rng(7)
    u = Field3(grid, rng.normal(size=(16, 16, 8)) + 1j * rng.normal(size=(16, 16, 8)))
    path = tmp_path / "seed.wgnls"
    write_snapshot(path, u, 0.25)
    v = build_datum({"kind": "snapshot", "path": str(path)}, GRID_CFG)
    assert v.grid == grid
    assert np.array_equal(v.values, u.values)


def test_build_datum_shell_mass_is_exact():
    datum = {
        "kind": "gaussian",
        "amplitude": 0.0,
        "shell_mass": 3.5,
        "shell_radius": 4.0,
        "shell_width": 1.0,
    }
    u = build_datum(datum, GRID_CFG)
    assert norm(u, NormKind.L2) ** 2 == pytest.approx(3.5, rel=1e-12)


# ---------------------------------------------------------------- cli


def base_ini(consts_json, outdir, extra=""):
    return "\n".join(
        [
            "[run]",
            f"constants_source = {consts_json}",
            f"output_dir = {outdir}",
            "[grid]",
            "n_x = 32",
            "n_y = 8",
            "box_length = 16.0",
            extra,
        ]
    )


def read_manifest(outdir):
    with open(os.path.join(outdir, "manifest.json")) as fh:
        return json.load(fh)


def check_inventory(outdir):
    manifest = read_manifest(outdir)
    on_disk = sorted(set(os.listdir(outdir)) - {"manifest.json"})
    listed = sorted(entry["name"] for entry in manifest["files"])
    assert listed == on_disk
    for entry in manifest["files"]:
        path = os.path.join(outdir, entry["name"])
        assert entry["bytes"] == os.path.getsize(path)
        with open(path, "rb") as fh:
            assert entry["sha256"] == hashlib.sha256(fh.read()).hexdigest()
    return manifest


def test_cli_constants(tmp_path, consts_json, consts):
    outdir = str(tmp_path / "out")
    ini = write_ini(tmp_path, base_ini(consts_json, outdir))
    assert main(["constants", "--config", ini]) == 0
    manifest = check_inventory(outdir)
    assert manifest["command"] == "constants"
    assert manifest["config_hash"] == hashlib.sha256(open(ini, "rb").read()).hexdigest()
    with open(os.path.join(outdir, "constants.json")) as fh:
        assert json.load(fh)["mass_Q"] == consts.mass_q
    assert manifest["summary"]["mass_q"] == consts.mass_q


def test_cli_classify(tmp_path, consts_json):
    outdir = str(tmp_path / "out")
    extra = "[datum]\nkind = gaussian\namplitude = 0.05\n"
    ini = write_ini(tmp_path, base_ini(consts_json, outdir, extra))
    assert main(["classify", "--config", ini]) == 0
    manifest = check_inventory(outdir)
    assert manifest["summary"]["classification"] == "scattering_regime"
    with open(os.path.join(outdir, "report.json")) as fh:
        report = json.load(fh)
    assert report["classification"] == "scattering_regime"
    assert report["c_choice"] == "upper"
    with open(os.path.join(outdir, "gamma_curve.csv")) as fh:
        lines = fh.read().strip().splitlines()
    assert lines[0] == "m,gamma"
    assert len(lines) == 201
    # every cell must be a bare number, and the curve ends at gamma(2*pi*M) = 0
    rows = [tuple(float(cell) for cell in line.split(",")) for line in lines[1:]]
    assert rows[-1][0] == pytest.approx(report["two_pi_mass_q"], rel=1e-15)
    assert rows[-1][1] == 0.0


def evolve_ini(consts_json, outdir):
    extra = "\n".join(
        [
            "[controls]",
            "dt = 5e-3",
            "t_end = 0.05",
            "sample_every = 2",
            "snapshot_every = 5",
            "[datum]",
            "kind = gaussian",
            "amplitude = 0.3",
        ]
    )
    return base_ini(consts_json, outdir, extra)


def test_cli_evolve_outputs(tmp_path, consts_json):
    outdir = str(tmp_path / "out")
    ini = write_ini(tmp_path, evolve_ini(consts_json, outdir))
    assert main(["evolve", "--config", ini]) == 0
    manifest = check_inventory(outdir)
    names = [entry["name"] for entry in manifest["files"]]
    assert "time_series.csv" in names
    assert "final.wgnls" in names
    assert sum(name.startswith("snap_") for name in names) == 2
    # ten steps cannot fill the decay windows, so the verdict stays open
    assert manifest["summary"]["status"] == "inconclusive"


def test_cli_evolve_deterministic(tmp_path, consts_json):
    payloads = []
    for tag in ("one", "two"):
        outdir = str(tmp_path / tag)
        ini = write_ini(tmp_path, evolve_ini(consts_json, outdir), name=f"{tag}.ini")
        assert main(["evolve", "--config", ini]) == 0
        with open(os.path.join(outdir, "time_series.csv"), "rb") as fh:
            series = fh.read()
        with open(os.path.join(outdir, "final.wgnls"), "rb") as fh:
            final = fh.read()
        payloads.append((series, final))
    assert payloads[0] == payloads[1]


def test_cli_resonant_evolve(tmp_path, consts_json):
    outdir = str(tmp_path / "out")
    extra = "\n".join(
        [
            "[controls]",
            "dt = 5e-3",
            "t_end = 0.1",
            "sample_every = 5",
            "[datum]",
            "kind = gaussian",
            "amplitude = 0.4",
            "y_modes = 0:1.0,1:0.3,-1:0.3",
        ]
    )
    ini = write_ini(tmp_path, base_ini(consts_json, outdir, extra))
    assert main(["resonant-evolve", "--config", ini]) == 0
    manifest = check_inventory(outdir)
    assert manifest["summary"]["status"] == "completed"
    assert manifest["summary"]["m0_drift"] <= 1e-10
    assert manifest["summary"]["m1_drift"] <= 1e-10


def test_cli_weinstein(tmp_path, consts_json):
    outdir = str(tmp_path / "out")
    extra = "[weinstein]\nn_max = 1\nn_x = 64\nbox_length = 32.0\n"
    ini = write_ini(tmp_path, base_ini(consts_json, outdir, extra))
    assert main(["weinstein", "--config", ini]) == 0
    manifest = check_inventory(outdir)
    assert manifest["summary"]["worst_rel_err"] <= 0.05
    with open(os.path.join(outdir, "weinstein.csv")) as fh:
        lines = fh.read().strip().splitlines()
    assert lines[0] == "n,quotient,reference,rel_err"
    assert len(lines) == 2


def test_cli_large_scale(tmp_path, consts_json):
    outdir = str(tmp_path / "out")
    extra = "\n".join(
        [
            "[large_scale]",
            "lambdas = 1.0, 2.0",
            "t_end = 0.25",
            "n_base_steps = 128",
            "[datum]",
            "kind = gaussian",
            "amplitude = 0.4",
        ]
    )
    ini = write_ini(tmp_path, base_ini(consts_json, outdir, extra))
    assert main(["large-scale", "--config", ini]) == 0
    manifest = check_inventory(outdir)
    assert manifest["summary"]["lambdas"] == [1.0, 2.0]
    assert all(d <= 1e-9 for d in manifest["summary"]["deltas"])


def test_cli_virial(tmp_path, consts_json):
    outdir = str(tmp_path / "out")
    extra = "\n".join(
        [
            "[virial]",
            "radius = 3.0",
            "dt = 2e-3",
            "t_end = 0.04",
            "sample_every = 2",
            "[datum]",
            "kind = gaussian",
            "amplitude = 0.5",
        ]
    )
    ini = write_ini(tmp_path, base_ini(consts_json, outdir, extra))
    assert main(["virial", "--config", ini]) == 0
    manifest = check_inventory(outdir)
    assert manifest["summary"]["radius"] == 3.0
    assert manifest["summary"]["max_abs_residual"] is not None
    with open(os.path.join(outdir, "virial.csv")) as fh:
        assert fh.readline().strip() == "R,t,z_R,dz_R,h_star,residual"


def test_cli_virial_needs_radius(tmp_path, consts_json, capsys):
    outdir = str(tmp_path / "out")
    extra = "[datum]\nkind = gaussian\namplitude = 0.5\n"
    ini = write_ini(tmp_path, base_ini(consts_json, outdir, extra))
    assert main(["virial", "--config", ini]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ConfigError"


def test_cli_campaign_parallel(tmp_path, consts_json):
    outdir = str(tmp_path / "out")
    extra = "\n".join(
        [
            "[controls]",
            "dt = 5e-3",
            "t_end = 0.05",
            "sample_every = 5",
            "[campaign]",
            "rows = a, b",
            "[datum:a]",
            "kind = gaussian",
            "amplitude = 0.05",
            "[datum:b]",
            "kind = gaussian",
            "amplitude = 0.1",
            "[controls:b]",
            "dt = 2e-3",
            "t_end = 0.04",
        ]
    )
    ini = write_ini(tmp_path, base_ini(consts_json, outdir, extra) + "\n")
    # exercise the worker pool path
    ini_text = open(ini).read().replace("[grid]", "workers = 2\n[grid]")
    with open(ini, "w") as fh:
        fh.write(ini_text)
    assert main(["campaign", "--config", ini]) == 0
    manifest = check_inventory(outdir)
    rows = manifest["summary"]["rows"]
    assert set(rows) == {"a", "b"}
    assert rows["a"]["classification"] == "scattering_regime"
    assert rows["a"]["error"] is None
    with open(os.path.join(outdir, "campaign.csv")) as fh:
        lines = fh.read().strip().splitlines()
    assert len(lines) == 3


def test_cli_gn_test(tmp_path, consts_json):
    outdir = str(tmp_path / "out")
    extra = "[gn_test]\nn_samples = 5\nband = 0.4\n"
    ini = write_ini(tmp_path, base_ini(consts_json, outdir, extra))
    assert main(["gn-test", "--config", ini]) == 0
    with open(os.path.join(outdir, "gn_test.json")) as fh:
        payload = json.load(fh)
    assert payload["n_samples"] == 5
    assert payload["failures"] == 0
    assert payload["min_residual"] >= -1e-10


def test_cli_config_violations_exit_2(tmp_path, capsys):
    ini = write_ini(tmp_path, "[grid]\nn_x = 100\nboxlen = 16\n")
    assert main(["classify", "--config", ini]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ConfigError"
    assert len(err["violations"]) == 2


def test_cli_bad_snapshot_exit_1(tmp_path, consts_json, capsys):
    bad = tmp_path / "bad.wgnls"
    bad.write_bytes(b"JUNK" * 16)
    ini = write_ini(tmp_path, base_ini(consts_json, str(tmp_path / "out")))
    assert main(["classify", "--config", ini, "--input", str(bad)]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "SnapshotFormatError"
    assert "bad snapshot header" in err["message"]


def test_cli_missing_input_exit_1(tmp_path, consts_json, capsys):
    ini = write_ini(tmp_path, base_ini(consts_json, str(tmp_path / "out")))
    missing = str(tmp_path / "nope.wgnls")
    assert main(["classify", "--config", ini, "--input", missing]) == 1
    assert json.loads(capsys.readouterr().err)["error"] == "FileNotFoundError"


def test_cli_domain_error_exit_1(tmp_path, consts_json, capsys):
    outdir = str(tmp_path / "out")
    extra = "\n".join(
        [
            "[controls]",
            "dt = 1.0",
            "t_end = 2.0",
            "[datum]",
            "kind = gaussian",
            "amplitude = 2.0",
        ]
    )
    ini = write_ini(tmp_path, base_ini(consts_json, outdir, extra))
    assert main(["evolve", "--config", ini]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "DomainError"
    assert "rotation" in err["message"]


def test_cli_requires_command():
    with pytest.raises(SystemExit):
        main([])
