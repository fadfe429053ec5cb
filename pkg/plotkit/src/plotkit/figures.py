"""Static figures from recorded wgnls run outputs.

Five figure kinds, each reading files a finished run left behind.  Every
number printed on a figure is read from those inputs; nothing is
recomputed from model formulas, so a figure can never disagree with the
run it depicts.

Input schemas (CSV headers are exact; extra columns are ignored):

  conservation  time_series.csv   t, mass, energy, momentum_x,
                                  momentum_y, momentum_k
  blowup        time_series.csv   t, grad_xy_sq
  gamma_curve   gamma_curve.csv   m, gamma
                report.json       gamma, classification, pi_mass_q,
                                  two_pi_mass_q, diagnostics.mass
  lambda_sweep  lambda_sweep.csv  lambda, delta
  virial        virial.csv        R, t, z_R, dz_R, h_star, residual

Rendering never mutates inputs, and a second render of the same spec is
byte-identical: the Agg backend is forced, SVG ids are salted with a
fixed string, fonts stay as text, and date metadata is suppressed.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg", force=True)
matplotlib.rcParams["svg.hashsalt"] = "plotkit"
matplotlib.rcParams["svg.fonttype"] = "none"

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("conservation", "gamma_curve", "lambda_sweep", "blowup", "virial")

_FORMATS = (".png", ".svg")

# columns each kind needs from its CSV input
_CSV_COLUMNS = {
    "conservation": ("t", "mass", "energy", "momentum_x", "momentum_y", "momentum_k"),
    "gamma_curve": ("m", "gamma"),
    "lambda_sweep": ("lambda", "delta"),
    "blowup": ("t", "grad_xy_sq"),
    "virial": ("R", "t", "z_R", "dz_R", "h_star", "residual"),
}

_REPORT_KEYS = ("gamma", "classification", "pi_mass_q", "two_pi_mass_q", "diagnostics")


class PlotError(Exception):
    """Invalid figure request."""


class SchemaError(PlotError):
    """Input file does not match its documented schema."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure request: what to draw, from which files, to where.

    gamma_curve takes two inputs (curve CSV, then report JSON); every
    other kind takes exactly one CSV.
    """

    kind: str
    inputs: tuple
    output: str
    dpi: int = 144
    title: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PlotError(f"unknown figure kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if isinstance(self.inputs, (str, os.PathLike)):
            object.__setattr__(self, "inputs", (os.fspath(self.inputs),))
        else:
            object.__setattr__(self, "inputs", tuple(os.fspath(p) for p in self.inputs))
        want = 2 if self.kind == "gamma_curve" else 1
        if len(self.inputs) != want:
            raise PlotError(f"{self.kind} takes {want} input file(s), got {len(self.inputs)}")
        for path in self.inputs:
            if not os.path.isfile(path):
                raise FileNotFoundError(path)
        root, ext = os.path.splitext(self.output)
        if not root or ext.lower() not in _FORMATS:
            raise PlotError(f"output must end in .png or .svg, got {self.output!r}")
        if self.dpi <= 0:
            raise PlotError("dpi must be positive")


@dataclass(frozen=True)
class RenderInfo:
    """What a render produced: the file, the axis window of the main
    panel, and every annotation string drawn on the figure."""

    output: str
    y_range: tuple
    annotations: tuple


def _fmt(x) -> str:
    return f"{float(x):.6g}"


def _read_csv(path: str, columns) -> dict:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        rows = [row for row in reader if row]
    for name in columns:
        if name not in header:
            raise SchemaError(f"{path}: missing column {name!r}")
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    data = {}
    for name in columns:
        j = header.index(name)
        out = np.empty(len(rows))
        for i, row in enumerate(rows):
            try:
                out[i] = float(row[j])
            except (ValueError, IndexError):
                cell = row[j] if j < len(row) else "<missing>"
                raise SchemaError(
                    f"{path}: column {name!r} row {i + 1} is not a number: {cell!r}"
                ) from None
        data[name] = out
    return data


def _read_report(path: str) -> dict:
    with open(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    for key in _REPORT_KEYS:
        if key not in payload:
            raise SchemaError(f"{path}: missing key {key!r}")
    if "mass" not in payload["diagnostics"]:
        raise SchemaError(f"{path}: missing key 'diagnostics.mass'")
    return payload


def _conservation(spec: FigureSpec):
    data = _read_csv(spec.inputs[0], _CSV_COLUMNS["conservation"])
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    worst, worst_name = -1.0, ""
    for name in ("mass", "energy", "momentum_x", "momentum_y", "momentum_k"):
        drift = np.abs(data[name] - data[name][0])
        ax.plot(data["t"], drift, label=name)
        peak = float(drift.max())
        if peak > worst:
            worst, worst_name = peak, name
    note = f"max drift = {_fmt(worst)} ({worst_name})"
    ax.annotate(note, xy=(0.02, 0.95), xycoords="axes fraction", va="top", fontsize=9)
    ax.set_xlabel("t")
    ax.set_ylabel("absolute drift from t = 0")
    ax.legend(loc="center right", fontsize=8)
    return fig, ax, (note,)


def _gamma_curve(spec: FigureSpec):
    data = _read_csv(spec.inputs[0], _CSV_COLUMNS["gamma_curve"])
    report = _read_report(spec.inputs[1])
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(data["m"], data["gamma"], color="tab:blue")
    annotations = []
    for key, style in (("pi_mass_q", ":"), ("two_pi_mass_q", "--")):
        m_mark = float(report[key])
        note = f"m = {_fmt(m_mark)}"
        ax.axvline(m_mark, linestyle=style, color="gray")
        ax.annotate(note, xy=(m_mark, 0.55 if key == "pi_mass_q" else 0.75),
                    xycoords=("data", "axes fraction"), rotation=90,
                    va="center", ha="right", fontsize=8)
        annotations.append(note)
    # the curve's right endpoint, as recorded
    end_note = f"gamma({_fmt(data['m'][-1])}) = {_fmt(data['gamma'][-1])}"
    ax.plot(data["m"][-1], data["gamma"][-1], "ks", markersize=5)
    ax.annotate(end_note, xy=(0.98, 0.05), xycoords="axes fraction",
                ha="right", fontsize=9)
    annotations.append(end_note)
    # where the classified datum sits
    mass = float(report["diagnostics"]["mass"])
    g_datum = float(report["gamma"])
    datum_note = f"datum: {report['classification']} (m = {_fmt(mass)}, gamma = {_fmt(g_datum)})"
    ax.plot(mass, g_datum, "o", color="tab:red")
    ax.annotate(datum_note, xy=(0.02, 0.95), xycoords="axes fraction",
                va="top", fontsize=9)
    annotations.append(datum_note)
    ax.set_xlabel("m")
    ax.set_ylabel("gamma(m)")
    return fig, ax, tuple(annotations)


def _lambda_sweep(spec: FigureSpec):
    data = _read_csv(spec.inputs[0], _CSV_COLUMNS["lambda_sweep"])
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(data["lambda"], data["delta"], "o-", color="tab:blue")
    ax.set_xscale("log", base=2)
    if np.all(data["delta"] > 0.0):
        ax.set_yscale("log")
    note = f"delta({_fmt(data['lambda'][-1])}) = {_fmt(data['delta'][-1])}"
    ax.annotate(note, xy=(0.02, 0.05), xycoords="axes fraction", fontsize=9)
    ax.set_xlabel("lambda")
    ax.set_ylabel("delta(lambda)")
    return fig, ax, (note,)


def _blowup(spec: FigureSpec):
    data = _read_csv(spec.inputs[0], _CSV_COLUMNS["blowup"])
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    grad = data["grad_xy_sq"]
    ax.plot(data["t"], grad, color="tab:red")
    if np.all(grad > 0.0):
        ax.set_yscale("log")
    i_peak = int(np.argmax(grad))
    note = f"peak grad = {_fmt(grad[i_peak])} at t = {_fmt(data['t'][i_peak])}"
    ax.plot(data["t"][i_peak], grad[i_peak], "kv", markersize=6)
    ax.annotate(note, xy=(0.02, 0.95), xycoords="axes fraction", va="top", fontsize=9)
    ax.set_xlabel("t")
    ax.set_ylabel("gradient norm squared")
    return fig, ax, (note,)


def _virial(spec: FigureSpec):
    data = _read_csv(spec.inputs[0], _CSV_COLUMNS["virial"])
    fig, (ax_z, ax_r) = plt.subplots(2, 1, figsize=(6.4, 5.6), sharex=True)
    ax_z.plot(data["t"], data["z_R"], color="tab:blue", label="z_R")
    ax_z.plot(data["t"], data["dz_R"], color="tab:orange", label="dz_R")
    head = f"R = {_fmt(data['R'][0])}, h* = {_fmt(data['h_star'][0])}"
    ax_z.annotate(head, xy=(0.02, 0.95), xycoords="axes fraction", va="top", fontsize=9)
    ax_z.legend(loc="center right", fontsize=8)
    ax_z.set_ylabel("localized moment")
    res = data["residual"]
    finite = np.isfinite(res)
    ax_r.plot(data["t"][finite], res[finite], "o-", color="tab:green", markersize=3)
    ax_r.axhline(0.0, linestyle=":", color="gray")
    if finite.any():
        note = f"max |residual| = {_fmt(np.max(np.abs(res[finite])))}"
    else:
        note = "residual undefined (too few samples)"
    ax_r.annotate(note, xy=(0.02, 0.95), xycoords="axes fraction", va="top", fontsize=9)
    ax_r.set_xlabel("t")
    ax_r.set_ylabel("second-difference residual")
    return fig, ax_z, (head, note)


_BUILDERS = {
    "conservation": _conservation,
    "gamma_curve": _gamma_curve,
    "lambda_sweep": _lambda_sweep,
    "blowup": _blowup,
    "virial": _virial,
}


def render(spec: FigureSpec) -> RenderInfo:
    """Draw the figure and write it to spec.output.

    Returns what was drawn: the output path, the y-window of the main
    panel, and every annotation string, so callers can check the figure
    against the inputs without parsing the image back.
    """
    fig, ax, annotations = _BUILDERS[spec.kind](spec)
    if spec.title is not None:
        fig.suptitle(spec.title)
    y_range = tuple(float(v) for v in ax.get_ylim())
    ext = os.path.splitext(spec.output)[1].lower()
    # fixed metadata keeps the bytes independent of the wall clock
    metadata = {"Date": None} if ext == ".svg" else {"Software": "plotkit"}
    try:
        fig.savefig(spec.output, dpi=spec.dpi, metadata=metadata)
    finally:
        plt.close(fig)
    return RenderInfo(output=spec.output, y_range=y_range, annotations=annotations)
