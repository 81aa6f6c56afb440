"""Result serialization: CSV tables, JSON mirrors, minimal SVG charts.

Float cells use ``repr`` (shortest round-trip form), so identical inputs
always produce byte-identical files. The SVG renderer is deliberately
small: polyline charts for trajectories and colored-cell rasters for
sweep grids, intended as verification aids rather than publication
figures.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .analysis import EquilibriumReport, MultiEquilibrium, NullclineSet, VectorFieldGrid
from .dynamics import Trajectory
from .errors import PlasticellError
from .experiments import CapacityMapResult, OppositionSurfaceResult, SweepGrid
from .model import ValidationReport
from .servo import ServoTrajectory

__all__ = [
    "write_csv",
    "write_json",
    "trajectory_rows",
    "trajectory_csv",
    "servo_csv",
    "grid_csv",
    "vector_field_csv",
    "nullclines_csv",
    "opposition_csv",
    "capacity_csv",
    "equilibrium_json",
    "svg_line_chart",
    "svg_heatmap",
]


def _cell(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return "nan" if math.isnan(v) else repr(v)
    if isinstance(x, (np.integer, int)):
        return repr(int(x))
    return str(x)


def write_csv(path: str | Path, header: list[str], rows) -> Path:
    path = Path(path)
    try:
        with path.open("w", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_cell(x) for x in row) + "\n")
    except OSError as exc:
        raise PlasticellError(f"cannot write {path}: {exc}") from exc
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if (math.isnan(v) or math.isinf(v)) else v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path: str | Path, payload: dict) -> Path:
    path = Path(path)
    try:
        path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise PlasticellError(f"cannot write {path}: {exc}") from exc
    return path


def trajectory_rows(traj: Trajectory):
    n = traj.factory.shape[1]
    header = (
        ["t"]
        + [f"F_{i + 1}" for i in range(n)]
        + [f"P_{i + 1}" for i in range(n)]
        + [f"C_{i + 1}" for i in range(n)]
        + [f"PR_{i + 1}" for i in range(n)]
    )
    rows = [
        [traj.times[s], *traj.factory[s], *traj.product[s], *traj.stimulus[s], *traj.net_production[s]]
        for s in range(len(traj.times))
    ]
    return header, rows


def trajectory_csv(path, traj: Trajectory) -> Path:
    header, rows = trajectory_rows(traj)
    return write_csv(path, header, rows)


def trajectory_json(path, traj: Trajectory) -> Path:
    return write_json(
        path,
        {
            "times": traj.times,
            "factory": traj.factory,
            "product": traj.product,
            "stimulus": traj.stimulus,
            "net_production": traj.net_production,
        },
    )


def servo_csv(path, traj: ServoTrajectory) -> Path:
    header = ["t", "angle", "velocity", "F", "P", "torque_applied", "torque_perturbation", "C"]
    rows = [
        [
            traj.times[s], traj.angle[s], traj.velocity[s], traj.gain[s], traj.product[s],
            traj.torque_applied[s], traj.torque_perturbation[s], traj.consumption[s],
        ]
        for s in range(len(traj.times))
    ]
    return write_csv(path, header, rows)


def grid_csv(path, grid: SweepGrid, *, field: str | None = None) -> Path:
    """Axis header rows, then the cell matrix (markers where values are absent)."""
    values = grid.values if field is None else grid.extras[field]
    xv = grid.x.values()
    yv = grid.y.values()
    path = Path(path)
    lines = [
        f"# metric,{grid.metric if field is None else field}",
        f"# x,{grid.x.name},{_cell(grid.x.lo)},{_cell(grid.x.hi)},{grid.x.count}",
        f"# y,{grid.y.name},{_cell(grid.y.lo)},{_cell(grid.y.hi)},{grid.y.count}",
        f"{grid.y.name}\\{grid.x.name}," + ",".join(_cell(v) for v in xv),
    ]
    for iy in range(len(yv)):
        cells = []
        for ix in range(len(xv)):
            marker = grid.markers[iy, ix]
            cells.append(marker if marker else _cell(values[iy, ix]))
        lines.append(_cell(yv[iy]) + "," + ",".join(cells))
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise PlasticellError(f"cannot write {path}: {exc}") from exc
    return path


def vector_field_csv(path, vf: VectorFieldGrid) -> Path:
    rows = [
        [vf.f_values[i], vf.p_values[j], vf.df[i, j], vf.dp[i, j]]
        for i in range(len(vf.f_values))
        for j in range(len(vf.p_values))
    ]
    return write_csv(path, ["F", "P", "dF", "dP"], rows)


def nullclines_csv(path, nc: NullclineSet) -> Path:
    rows = [[p, f, nc.factory_level] for p, f in zip(nc.product_p, nc.product_f)]
    return write_csv(path, ["P", "F_product_nullcline", "P_factory_nullcline"], rows)


def opposition_csv(path, res: OppositionSurfaceResult) -> Path:
    c1v, c2v = res.c1_axis.values(), res.c2_axis.values()
    rows = [
        [c1v[ix], c2v[iy], res.f1[iy, ix], res.f2[iy, ix], res.p1[iy, ix], res.p2[iy, ix],
         "ok" if res.ok[iy, ix] else "failed"]
        for iy in range(len(c2v))
        for ix in range(len(c1v))
    ]
    return write_csv(path, ["C_1", "C_2", "F_1", "F_2", "P_1", "P_2", "status"], rows)


def capacity_csv(path, res: CapacityMapResult) -> Path:
    c1v, c2v = res.c1_axis.values(), res.c2_axis.values()
    rows = [
        [c1v[ix], c2v[iy], res.f1[iy, ix], res.f2[iy, ix], res.total[iy, ix],
         res.totcon[iy, ix], "ok" if res.ok[iy, ix] else "failed"]
        for iy in range(len(c2v))
        for ix in range(len(c1v))
    ]
    return write_csv(path, ["C_1", "C_2", "F_1", "F_2", "total_capacity", "totcon", "status"], rows)


def equilibrium_json(path, report: EquilibriumReport | MultiEquilibrium, extra: dict | None = None) -> Path:
    if isinstance(report, EquilibriumReport):
        payload = report.to_dict()
    else:
        payload = {
            "f_star": report.f_star,
            "p_star": report.p_star,
            "iterations": report.record.iterations,
            "residual": report.record.residual,
            "used_fallback": report.record.used_fallback,
            "extinguished": list(report.record.extinguished),
        }
    if extra:
        payload.update(extra)
    return write_json(path, payload)


def validation_json(path, report: ValidationReport, extra: dict | None = None) -> Path:
    payload = report.to_dict()
    if extra:
        payload.update(extra)
    return write_json(path, payload)


# ---------------------------------------------------------------------------
# minimal SVG rendering

_PALETTE = [
    (68, 1, 84),
    (59, 82, 139),
    (33, 145, 140),
    (94, 201, 98),
    (253, 231, 37),
]

_SERIES_COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"]


def _fmt(x: float) -> str:
    return format(float(x), ".6g")


def _color(frac: float) -> str:
    frac = min(max(frac, 0.0), 1.0)
    pos = frac * (len(_PALETTE) - 1)
    lo = int(pos)
    hi = min(lo + 1, len(_PALETTE) - 1)
    w = pos - lo
    rgb = tuple(round((1 - w) * a + w * b) for a, b in zip(_PALETTE[lo], _PALETTE[hi]))
    return f"rgb({rgb[0]},{rgb[1]},{rgb[2]})"


def svg_line_chart(path, x, series: dict[str, np.ndarray], *, title="", x_label="t", y_label="") -> Path:
    """Polyline chart of one or more named series against a shared x axis."""
    width, height = 840, 520
    ml, mr, mt, mb = 70, 160, 40, 50
    pw, ph = width - ml - mr, height - mt - mb
    x = np.asarray(x, dtype=float)
    ys = {k: np.asarray(v, dtype=float) for k, v in series.items()}
    finite = [v[np.isfinite(v)] for v in ys.values() if np.isfinite(v).any()]
    y_lo = min((v.min() for v in finite), default=0.0)
    y_hi = max((v.max() for v in finite), default=1.0)
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    x_lo, x_hi = float(x.min()), float(x.max())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0

    def sx(v):
        return ml + (v - x_lo) / (x_hi - x_lo) * pw

    def sy(v):
        return mt + ph - (v - y_lo) / (y_hi - y_lo) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width // 2}" y="24" text-anchor="middle" font-size="16">{title}</text>',
    ]
    for k in range(5):
        xv = x_lo + k * (x_hi - x_lo) / 4
        yv = y_lo + k * (y_hi - y_lo) / 4
        parts.append(
            f'<line x1="{_fmt(sx(xv))}" y1="{mt + ph}" x2="{_fmt(sx(xv))}" y2="{mt + ph + 5}" stroke="black"/>'
            f'<text x="{_fmt(sx(xv))}" y="{mt + ph + 20}" text-anchor="middle" font-size="11">{_fmt(xv)}</text>'
            f'<line x1="{ml - 5}" y1="{_fmt(sy(yv))}" x2="{ml}" y2="{_fmt(sy(yv))}" stroke="black"/>'
            f'<text x="{ml - 8}" y="{_fmt(sy(yv) + 4)}" text-anchor="end" font-size="11">{_fmt(yv)}</text>'
        )
    parts.append(
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>'
        f'<text x="{ml + pw // 2}" y="{height - 12}" text-anchor="middle" font-size="13">{x_label}</text>'
        f'<text x="18" y="{mt + ph // 2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 18 {mt + ph // 2})">{y_label}</text>'
    )
    for idx, (name, y) in enumerate(ys.items()):
        color = _SERIES_COLORS[idx % len(_SERIES_COLORS)]
        pts = " ".join(
            f"{_fmt(sx(xv))},{_fmt(sy(yv))}" for xv, yv in zip(x, y) if math.isfinite(yv)
        )
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = mt + 16 + 18 * idx
        parts.append(
            f'<line x1="{width - mr + 10}" y1="{ly - 4}" x2="{width - mr + 34}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
            f'<text x="{width - mr + 40}" y="{ly}" font-size="12">{name}</text>'
        )
    parts.append("</svg>")
    return _write_svg(path, parts)


def svg_heatmap(path, grid: SweepGrid, *, field: str | None = None, log_scale=False, title="") -> Path:
    """Colored-cell raster of a sweep grid; markers render as flat grays."""
    values = grid.values if field is None else grid.extras[field]
    xv, yv = grid.x.values(), grid.y.values()
    nx, ny = len(xv), len(yv)
    cell = max(4, min(14, 600 // max(nx, ny)))
    ml, mt = 70, 40
    width = ml + nx * cell + 120
    height = mt + ny * cell + 60
    finite = values[np.isfinite(values) & (grid.markers == "")]
    if log_scale:
        finite = finite[finite > 0]
        lo, hi = (np.log10(finite.min()), np.log10(finite.max())) if finite.size else (0.0, 1.0)
    else:
        lo, hi = (finite.min(), finite.max()) if finite.size else (0.0, 1.0)
    if hi == lo:
        hi = lo + 1.0
    marker_fill = {"invalid": "#d9d9d9", "oscillatory": "#ffffff", "failed": "#555555"}
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width // 2}" y="22" text-anchor="middle" font-size="15">{title}</text>',
    ]
    for iy in range(ny):
        for ix in range(nx):
            marker = grid.markers[iy, ix]
            if marker:
                fill = marker_fill.get(marker, "#888888")
            else:
                v = values[iy, ix]
                if not math.isfinite(v) or (log_scale and v <= 0):
                    fill = "#555555"
                else:
                    vv = math.log10(v) if log_scale else v
                    fill = _color((vv - lo) / (hi - lo))
            # row 0 at the bottom: y axis increases upward
            px = ml + ix * cell
            py = mt + (ny - 1 - iy) * cell
            parts.append(f'<rect x="{px}" y="{py}" width="{cell}" height="{cell}" fill="{fill}"/>')
    for k in range(5):
        fx = k / 4
        parts.append(
            f'<text x="{_fmt(ml + fx * nx * cell)}" y="{mt + ny * cell + 16}" text-anchor="middle" '
            f'font-size="11">{_fmt(xv[0] + fx * (xv[-1] - xv[0]))}</text>'
            f'<text x="{ml - 8}" y="{_fmt(mt + (1 - fx) * ny * cell + 4)}" text-anchor="end" '
            f'font-size="11">{_fmt(yv[0] + fx * (yv[-1] - yv[0]))}</text>'
        )
    parts.append(
        f'<text x="{ml + nx * cell // 2}" y="{height - 14}" text-anchor="middle" font-size="13">{grid.x.name}</text>'
        f'<text x="16" y="{mt + ny * cell // 2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 16 {mt + ny * cell // 2})">{grid.y.name}</text>'
    )
    bar_x = ml + nx * cell + 24
    for k in range(41):
        frac = k / 40
        by = mt + (1 - frac) * ny * cell
        parts.append(
            f'<rect x="{bar_x}" y="{_fmt(by - ny * cell / 40)}" width="16" '
            f'height="{_fmt(ny * cell / 40 + 0.5)}" fill="{_color(frac)}"/>'
        )
    scale_name = "log10" if log_scale else "linear"
    parts.append(
        f'<text x="{bar_x + 22}" y="{mt + 8}" font-size="11">{_fmt(hi)}</text>'
        f'<text x="{bar_x + 22}" y="{mt + ny * cell}" font-size="11">{_fmt(lo)}</text>'
        f'<text x="{bar_x}" y="{mt - 8}" font-size="11">{scale_name}</text>'
        "</svg>"
    )
    return _write_svg(path, parts)


def _write_svg(path, parts: list[str]) -> Path:
    path = Path(path)
    try:
        path.write_text("\n".join(parts) + "\n")
    except OSError as exc:
        raise PlasticellError(f"cannot write {path}: {exc}") from exc
    return path
