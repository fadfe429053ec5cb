"""Figure construction from recorded run outputs.

The files under data/ were produced by wgnls CLI runs and committed;
tests treat them as read-only ground truth and restate the expected
annotation values independently from the raw files.
"""

import csv
import json
import os

import numpy as np
import pytest

from plotkit import FigureSpec, PlotError, SchemaError, render

DATA = os.path.join(os.path.dirname(__file__), "data")

FIXTURES = {
    "conservation": ("conservation_series.csv",),
    "gamma_curve": ("gamma_curve.csv", "gamma_report.json"),
    "lambda_sweep": ("lambda_sweep.csv",),
    "blowup": ("blowup_series.csv",),
    "virial": ("virial.csv",),
}


def dpath(name):
    return os.path.join(DATA, name)


def spec_for(kind, out_path, **kw):
    inputs = tuple(dpath(n) for n in FIXTURES[kind])
    return FigureSpec(kind=kind, inputs=inputs, output=str(out_path), **kw)


def fmt(x):
    return f"{float(x):.6g}"


def read_column(name, column):
    with open(dpath(name), newline="") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([float(r[column]) for r in rows])


# ---------------------------------------------------------------- spec


def test_spec_rejects_unknown_kind(tmp_path):
    with pytest.raises(PlotError, match="unknown figure kind"):
        FigureSpec(kind="heatmap", inputs=(dpath("virial.csv"),),
                   output=str(tmp_path / "x.png"))


def test_spec_requires_existing_inputs(tmp_path):
    with pytest.raises(FileNotFoundError):
        FigureSpec(kind="virial", inputs=(str(tmp_path / "nope.csv"),),
                   output=str(tmp_path / "x.png"))


def test_spec_input_count(tmp_path):
    with pytest.raises(PlotError, match="takes 2 input"):
        FigureSpec(kind="gamma_curve", inputs=(dpath("gamma_curve.csv"),),
                   output=str(tmp_path / "x.png"))
    with pytest.raises(PlotError, match="takes 1 input"):
        FigureSpec(kind="blowup",
                   inputs=(dpath("blowup_series.csv"), dpath("virial.csv")),
                   output=str(tmp_path / "x.png"))


def test_spec_normalizes_single_path(tmp_path):
    spec = FigureSpec(kind="blowup", inputs=dpath("blowup_series.csv"),
                      output=str(tmp_path / "x.png"))
    assert spec.inputs == (dpath("blowup_series.csv"),)


def test_spec_output_suffix(tmp_path):
    with pytest.raises(PlotError, match="png or .svg"):
        spec_for("virial", tmp_path / "x.pdf")


def test_spec_dpi_positive(tmp_path):
    with pytest.raises(PlotError, match="dpi"):
        spec_for("virial", tmp_path / "x.png", dpi=0)


# ------------------------------------------------------- schema errors


def test_missing_column_is_named(tmp_path):
    bad = tmp_path / "sweep.csv"
    bad.write_text("lam,delta\n1.0,0.5\n")
    spec = FigureSpec(kind="lambda_sweep", inputs=(str(bad),),
                      output=str(tmp_path / "x.png"))
    with pytest.raises(SchemaError) as err:
        render(spec)
    assert "missing column 'lambda'" in str(err.value)
    assert str(bad) in str(err.value)


def test_bad_cell_is_named(tmp_path):
    bad = tmp_path / "sweep.csv"
    bad.write_text("lambda,delta\n1.0,abc\n")
    spec = FigureSpec(kind="lambda_sweep", inputs=(str(bad),),
                      output=str(tmp_path / "x.png"))
    with pytest.raises(SchemaError, match="column 'delta' row 1 is not a number: 'abc'"):
        render(spec)


def test_short_row_is_named(tmp_path):
    bad = tmp_path / "sweep.csv"
    bad.write_text("lambda,delta\n1.0\n")
    spec = FigureSpec(kind="lambda_sweep", inputs=(str(bad),),
                      output=str(tmp_path / "x.png"))
    with pytest.raises(SchemaError, match="column 'delta'"):
        render(spec)


def test_empty_inputs_rejected(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    spec = FigureSpec(kind="virial", inputs=(str(empty),),
                      output=str(tmp_path / "x.png"))
    with pytest.raises(SchemaError, match="empty file"):
        render(spec)
    headers_only = tmp_path / "h.csv"
    headers_only.write_text("R,t,z_R,dz_R,h_star,residual\n")
    spec = FigureSpec(kind="virial", inputs=(str(headers_only),),
                      output=str(tmp_path / "x.png"))
    with pytest.raises(SchemaError, match="no data rows"):
        render(spec)


def test_report_missing_key_is_named(tmp_path):
    with open(dpath("gamma_report.json")) as fh:
        payload = json.load(fh)
    del payload["two_pi_mass_q"]
    bad = tmp_path / "report.json"
    bad.write_text(json.dumps(payload))
    spec = FigureSpec(kind="gamma_curve",
                      inputs=(dpath("gamma_curve.csv"), str(bad)),
                      output=str(tmp_path / "x.png"))
    with pytest.raises(SchemaError, match="missing key 'two_pi_mass_q'"):
        render(spec)


def test_report_missing_nested_mass(tmp_path):
    with open(dpath("gamma_report.json")) as fh:
        payload = json.load(fh)
    del payload["diagnostics"]["mass"]
    bad = tmp_path / "report.json"
    bad.write_text(json.dumps(payload))
    spec = FigureSpec(kind="gamma_curve",
                      inputs=(dpath("gamma_curve.csv"), str(bad)),
                      output=str(tmp_path / "x.png"))
    with pytest.raises(SchemaError, match="missing key 'diagnostics.mass'"):
        render(spec)


def test_report_invalid_json(tmp_path):
    bad = tmp_path / "report.json"
    bad.write_text("{not json")
    spec = FigureSpec(kind="gamma_curve",
                      inputs=(dpath("gamma_curve.csv"), str(bad)),
                      output=str(tmp_path / "x.png"))
    with pytest.raises(SchemaError, match="not valid JSON"):
        render(spec)


# ------------------------------------------------------------- renders


def test_conservation_y_range_covers_max_drift(tmp_path):
    worst = 0.0
    for col in ("mass", "energy", "momentum_x", "momentum_y", "momentum_k"):
        q = read_column("conservation_series.csv", col)
        worst = max(worst, float(np.max(np.abs(q - q[0]))))
    info = render(spec_for("conservation", tmp_path / "cons.png"))
    assert os.path.getsize(info.output) > 0
    assert info.y_range[1] >= worst
    assert fmt(worst) in info.annotations[0]


def test_gamma_curve_annotations_from_sources(tmp_path):
    with open(dpath("gamma_report.json")) as fh:
        report = json.load(fh)
    g_end = read_column("gamma_curve.csv", "gamma")[-1]
    m_end = read_column("gamma_curve.csv", "m")[-1]
    info = render(spec_for("gamma_curve", tmp_path / "gamma.svg"))
    joined = " | ".join(info.annotations)
    assert f"m = {fmt(report['pi_mass_q'])}" in joined
    assert f"m = {fmt(report['two_pi_mass_q'])}" in joined
    assert f"gamma({fmt(m_end)}) = {fmt(g_end)}" in joined
    assert report["classification"] in joined
    assert fmt(report["diagnostics"]["mass"]) in joined
    assert fmt(report["gamma"]) in joined
    # svg text survives verbatim, so the figure shows the same numbers
    with open(info.output) as fh:
        svg = fh.read()
    for note in info.annotations:
        assert note in svg


def test_lambda_sweep_decreasing_on_log_axes(tmp_path):
    deltas = read_column("lambda_sweep.csv", "delta")
    lams = read_column("lambda_sweep.csv", "lambda")
    assert np.all(np.diff(deltas) < 0.0)
    assert np.all(deltas > 0.0)
    info = render(spec_for("lambda_sweep", tmp_path / "sweep.svg"))
    assert f"delta({fmt(lams[-1])}) = {fmt(deltas[-1])}" in info.annotations[0]
    # log y-axis keeps the window positive
    assert info.y_range[0] > 0.0


def test_blowup_peak_annotation(tmp_path):
    grad = read_column("blowup_series.csv", "grad_xy_sq")
    t = read_column("blowup_series.csv", "t")
    i = int(np.argmax(grad))
    info = render(spec_for("blowup", tmp_path / "blow.png"))
    assert f"peak grad = {fmt(grad[i])} at t = {fmt(t[i])}" in info.annotations[0]


def test_virial_residual_annotation_skips_nan(tmp_path):
    res = read_column("virial.csv", "residual")
    assert np.isnan(res).any()
    finite = res[np.isfinite(res)]
    info = render(spec_for("virial", tmp_path / "virial.svg"))
    joined = " | ".join(info.annotations)
    assert f"max |residual| = {fmt(np.max(np.abs(finite)))}" in joined
    assert f"R = {fmt(read_column('virial.csv', 'R')[0])}" in joined
    assert f"h* = {fmt(read_column('virial.csv', 'h_star')[0])}" in joined


def test_title_is_drawn(tmp_path):
    info = render(spec_for("gamma_curve", tmp_path / "t.svg", title="threshold curve"))
    with open(info.output) as fh:
        assert "threshold curve" in fh.read()


def test_render_is_deterministic(tmp_path):
    for kind, ext in (("gamma_curve", ".svg"), ("conservation", ".png")):
        a = render(spec_for(kind, tmp_path / f"a{ext}"))
        b = render(spec_for(kind, tmp_path / f"b{ext}"))
        with open(a.output, "rb") as fa, open(b.output, "rb") as fb:
            assert fa.read() == fb.read()


def test_render_does_not_mutate_inputs(tmp_path):
    paths = [dpath(n) for n in FIXTURES["gamma_curve"]]
    before = [open(p, "rb").read() for p in paths]
    render(spec_for("gamma_curve", tmp_path / "x.png"))
    after = [open(p, "rb").read() for p in paths]
    assert before == after
