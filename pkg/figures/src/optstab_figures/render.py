"""Render sweep-region and trajectory CSVs to image files.

The region renderer writes one upscaled pixel block per grid cell using the
exact eight classification colors plus a single background color for the
border, so the output's color histogram is testable exactly. Axis/legend
annotations go to a matplotlib sidecar file (``<out>.legend.png``) to keep
the region image free of antialiased colors.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass

import numpy as np

#: exact RGB for each classification color (single source of truth: the
#: ``color`` CSV column; the renderer trusts it)
COLOR_RGB: dict[str, tuple[int, int, int]] = {
    "green": (0, 128, 0),
    "blue": (0, 0, 255),
    "yellow": (255, 255, 0),
    "white": (255, 255, 255),
    "black": (0, 0, 0),
    "cyan": (0, 255, 255),
    "magenta": (255, 0, 255),
    "red": (255, 0, 0),
}

BACKGROUND_RGB = (200, 200, 200)

SWEEP_HEADER = ["param1", "param2", "kingma", "ours", "converged", "color"]


class SchemaError(Exception):
    """The input CSV does not match the expected contract."""


@dataclass(frozen=True)
class SweepTable:
    param1: np.ndarray  # distinct values of the first (row) axis, in order
    param2: np.ndarray  # distinct values of the second (column) axis
    colors: np.ndarray  # (len(param1), len(param2)) array of color names


def read_sweep_csv(path: str) -> SweepTable:
    """Parse a row-major sweep CSV and reshape it into a grid."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if header != SWEEP_HEADER:
            raise SchemaError(
                f"{path}: expected header {','.join(SWEEP_HEADER)}, "
                f"got {','.join(header)}"
            )
        p1, p2, colors = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 6:
                raise SchemaError(f"{path}:{lineno}: expected 6 fields")
            if row[5] not in COLOR_RGB:
                raise SchemaError(f"{path}:{lineno}: unknown color {row[5]!r}")
            try:
                p1.append(float(row[0]))
                p2.append(float(row[1]))
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: bad number: {exc}") from None
            colors.append(row[5])
    if not colors:
        raise SchemaError(f"{path}: no data rows")

    values1 = list(dict.fromkeys(p1))
    values2 = list(dict.fromkeys(p2))
    rows, cols = len(values1), len(values2)
    if rows * cols != len(colors):
        raise SchemaError(
            f"{path}: {len(colors)} rows do not form a "
            f"{rows}x{cols} row-major grid"
        )
    expect1 = np.repeat(values1, cols)
    expect2 = np.tile(values2, rows)
    if not (np.array_equal(expect1, p1) and np.array_equal(expect2, p2)):
        raise SchemaError(f"{path}: cells are not in row-major axis order")
    grid = np.array(colors, dtype=object).reshape(rows, cols)
    return SweepTable(param1=np.array(values1), param2=np.array(values2),
                      colors=grid)


def render_region(csv_path: str, out_path: str, scale: int = 6,
                  border: int = 2, legend: bool = True) -> str:
    """Write the region image; returns the output path.

    One ``scale`` x ``scale`` pixel block per cell, param1 on the x axis
    (increasing right), param2 on the y axis (increasing up), and a
    ``border``-pixel background frame.
    """
    from PIL import Image

    if scale < 1 or border < 0:
        raise SchemaError("scale must be >= 1 and border >= 0")
    table = read_sweep_csv(csv_path)
    rows, cols = table.colors.shape
    rgb = np.zeros((cols, rows, 3), dtype=np.uint8)
    for i in range(rows):
        for j in range(cols):
            # param1 indexes image columns, param2 image rows (origin bottom-left)
            rgb[cols - 1 - j, i] = COLOR_RGB[str(table.colors[i, j])]
    rgb = np.kron(rgb, np.ones((scale, scale, 1), dtype=np.uint8))
    if border:
        rgb = np.pad(rgb, ((border, border), (border, border), (0, 0)),
                     constant_values=0)
        rgb[:border, :] = BACKGROUND_RGB
        rgb[-border:, :] = BACKGROUND_RGB
        rgb[:, :border] = BACKGROUND_RGB
        rgb[:, -border:] = BACKGROUND_RGB
    Image.fromarray(rgb, mode="RGB").save(out_path)
    if legend:
        _write_legend(table, out_path + ".legend.png")
    return out_path


def _write_legend(table: SweepTable, path: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.patches import Patch

    fig, ax = plt.subplots(figsize=(5, 3))
    handles = [Patch(facecolor=np.array(c) / 255.0, edgecolor="black", label=name)
               for name, c in COLOR_RGB.items()]
    ax.legend(handles=handles, loc="center", ncol=2, frameon=False)
    ax.set_axis_off()
    ax.set_title(
        f"param1 in [{table.param1.min():g}, {table.param1.max():g}]  "
        f"param2 in [{table.param2.min():g}, {table.param2.max():g}]"
    )
    fig.savefig(path, dpi=100)
    plt.close(fig)


@dataclass(frozen=True)
class TrajectoryData:
    t: np.ndarray
    dist: np.ndarray
    envelope: np.ndarray  # running maximum of the remaining distances


def read_trajectory_csv(path: str) -> TrajectoryData:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if (len(header) < 3 or header[0] != "t" or header[1] != "w_0"
                or header[-1] != "dist_to_min"):
            raise SchemaError(
                f"{path}: expected header t,w_0,...,dist_to_min, "
                f"got {','.join(header)}"
            )
        width = len(header)
        ts, dists = [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != width:
                raise SchemaError(f"{path}:{lineno}: expected {width} fields")
            try:
                ts.append(int(row[0]))
                dists.append(float(row[-1]))
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: bad number: {exc}") from None
    if not ts:
        raise SchemaError(f"{path}: no data rows")
    dist = np.array(dists)
    envelope = np.maximum.accumulate(dist[::-1])[::-1]
    return TrajectoryData(t=np.array(ts), dist=dist, envelope=envelope)


def render_trajectory(csv_path: str, out_path: str) -> TrajectoryData:
    """Plot distance-to-minimum over iterations on a log scale.

    Draws the raw distance and its monotone (non-increasing) envelope;
    returns the parsed data so callers can inspect the envelope.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    data = read_trajectory_csv(csv_path)
    fig, ax = plt.subplots(figsize=(6, 4))
    positive = data.dist > 0
    floor = float(np.min(data.dist[positive])) if np.any(positive) else 1e-300
    dist = np.maximum(data.dist, floor * 1e-3)
    env = np.maximum(data.envelope, floor * 1e-3)
    ax.semilogy(data.t, dist, lw=0.8, label="distance to minimum")
    ax.semilogy(data.t, env, lw=1.5, ls="--", label="envelope")
    ax.set_xlabel("iteration")
    ax.set_ylabel("distance to minimum")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=100)
    plt.close(fig)
    return data


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="optstab-render",
        description="Render sweep-region or trajectory CSVs to images.",
    )
    parser.add_argument("--kind", required=True, choices=("region", "trajectory"))
    parser.add_argument("--in", dest="input", required=True, metavar="CSV")
    parser.add_argument("--out", dest="output", required=True, metavar="IMAGE")
    parser.add_argument("--scale", type=int, default=6,
                        help="pixels per cell for region images (default 6)")
    parser.add_argument("--no-legend", action="store_true",
                        help="skip the legend sidecar for region images")
    args = parser.parse_args(argv)
    try:
        if args.kind == "region":
            render_region(args.input, args.output, scale=args.scale,
                          legend=not args.no_legend)
        else:
            render_trajectory(args.input, args.output)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
