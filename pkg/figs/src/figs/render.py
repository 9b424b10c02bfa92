"""Render panel series of cell outline plus myosin density heat maps.

Input is the CSV interface of the motility CLI: a shape file with columns
phi,rho,x,y tracing the boundary and a myosin file with columns x,y,m of
scattered samples.  Each panel is drawn with equal x and y scales (the
shapes are near-circles; unequal scales would fake asymmetry), the myosin
field is interpolated from the scattered samples onto a regular grid
clipped to the boundary polygon, and higher myosin renders darker blue.
A common color scale is shared across the whole panel series.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import matplotlib.tri as mtri
import numpy as np
from matplotlib.path import Path as MplPath


class RenderError(Exception):
    pass


@dataclass(frozen=True)
class Panel:
    shape_csv: str
    myosin_csv: str
    label: str


@dataclass(frozen=True)
class PanelSpec:
    panels: tuple
    out: str


def _read_csv(path: str, columns: tuple) -> dict:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise RenderError(f"{path}: empty CSV")
            for col in columns:
                if col not in header:
                    raise RenderError(f"{path}: missing column {col}")
            idx = [header.index(c) for c in columns]
            rows = [[float(row[i]) for i in idx] for row in reader]
    except OSError as exc:
        raise RenderError(f"cannot read {path}: {exc}")
    if not rows:
        raise RenderError(f"{path}: no data rows")
    data = np.array(rows)
    return {c: data[:, k] for k, c in enumerate(columns)}


def load_spec(path: str, out_override: str | None = None) -> PanelSpec:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise RenderError(f"cannot read spec {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise RenderError(f"invalid JSON in {path}: {exc}")
    if "panels" not in raw or not raw["panels"]:
        raise RenderError(f"{path}: spec needs a non-empty 'panels' list")
    panels = []
    for entry in raw["panels"]:
        for key in ("shape", "myosin", "label"):
            if key not in entry:
                raise RenderError(f"{path}: panel entry missing '{key}'")
        panels.append(Panel(shape_csv=entry["shape"], myosin_csv=entry["myosin"],
                            label=str(entry["label"])))
    out = out_override or raw.get("out")
    if not out:
        raise RenderError(f"{path}: no output path (spec 'out' or --out)")
    return PanelSpec(panels=tuple(panels), out=out)


def _interpolate_clipped(shape: dict, myo: dict, n_grid: int = 200):
    """Myosin samples onto a regular grid, masked outside the boundary."""
    bx, by = shape["x"], shape["y"]
    tri = mtri.Triangulation(myo["x"], myo["y"])
    interp = mtri.LinearTriInterpolator(tri, myo["m"])
    pad = 0.02 * (bx.max() - bx.min())
    gx = np.linspace(bx.min() - pad, bx.max() + pad, n_grid)
    gy = np.linspace(by.min() - pad, by.max() + pad, n_grid)
    GX, GY = np.meshgrid(gx, gy)
    Z = interp(GX, GY)
    poly = MplPath(np.column_stack([bx, by]))
    inside = poly.contains_points(np.column_stack([GX.ravel(), GY.ravel()]))
    Z = np.ma.masked_where(~inside.reshape(GX.shape), Z)
    return GX, GY, Z


def render_panels(spec: PanelSpec) -> list:
    """Draw the panel series and write SVG and PNG files.

    Returns the list of written paths; the output path's extension picks the
    primary format and the sibling format is written alongside.
    """
    loaded = []
    for panel in spec.panels:
        shape = _read_csv(panel.shape_csv, ("phi", "rho", "x", "y"))
        myo = _read_csv(panel.myosin_csv, ("x", "y", "m"))
        loaded.append((panel, shape, myo))

    vmin = min(float(m["m"].min()) for _, _, m in loaded)
    vmax = max(float(m["m"].max()) for _, _, m in loaded)
    if vmax <= vmin:
        vmax = vmin + 1.0  # uniform field: keep the normalization valid

    n = len(loaded)
    fig, axes = plt.subplots(1, n, figsize=(3.2 * n, 3.6), squeeze=False)
    mesh = None
    for ax, (panel, shape, myo) in zip(axes[0], loaded):
        GX, GY, Z = _interpolate_clipped(shape, myo)
        # "Blues" maps higher values to darker blue
        mesh = ax.pcolormesh(GX, GY, Z, cmap="Blues", vmin=vmin, vmax=vmax,
                             shading="auto", rasterized=True)
        bx = np.append(shape["x"], shape["x"][0])
        by = np.append(shape["y"], shape["y"][0])
        ax.plot(bx, by, color="black", linewidth=1.2)
        ax.set_aspect("equal")
        ax.set_title(panel.label)
        ax.set_xlabel("x")
    axes[0][0].set_ylabel("y")
    fig.colorbar(mesh, ax=axes[0], shrink=0.85, label="myosin density")

    written = []
    stem, dot, ext = spec.out.rpartition(".")
    if not dot:
        stem, ext = spec.out, "svg"
    formats = [ext] + [f for f in ("svg", "png") if f != ext]
    for fmt in formats:
        path = f"{stem}.{fmt}"
        fig.savefig(path, format=fmt, dpi=150)
        written.append(path)
    plt.close(fig)
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render_figs",
        description="Render cell outline + myosin heat-map panels from CSVs",
    )
    parser.add_argument("--spec", required=True, help="panel spec JSON")
    parser.add_argument("--out", help="output image path (overrides spec)")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        spec = load_spec(args.spec, args.out)
        written = render_panels(spec)
    except RenderError as exc:
        print(f"render_figs: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
