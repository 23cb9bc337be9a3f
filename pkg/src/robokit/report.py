"""Report emission: versioned CSV files, hand-rolled SVG path plots, and
plain-text summary tables with "mean ± std" cells.

Floats are written with repr (shortest round-trip form), so re-parsing a CSV
reproduces the aggregates bit-for-bit, and the output bytes are a pure
function of the report contents (no timestamps, no library version strings).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .benchmark import (BenchReport, RepeatabilityResult, TrackingReport)

CSV_SCHEMA_VERSION = 1


def format_cell(mean: float, std: float, unit: str) -> str:
    """Table-style cell: millimeters rounded to integers, degrees to 2 decimals."""
    if unit == "mm":
        return f"{mean:.0f} ± {std:.0f}"
    return f"{mean:.2f} ± {std:.2f}"


def _write_csv(path: Path, name: str, header: list[str], rows: list[list]) -> None:
    lines = [f"# robokit-csv {name} v{CSV_SCHEMA_VERSION}", ",".join(header)]
    for row in rows:
        lines.append(",".join(repr(float(v)) if isinstance(v, float) else str(v)
                              for v in row))
    path.write_text("\n".join(lines) + "\n")


def read_csv(path) -> tuple[str, list[str], list[list[str]]]:
    """Parse a robokit CSV back into (schema line, header, string rows)."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# robokit-csv"):
        raise ValueError(f"{path}: missing robokit-csv schema line")
    header = lines[1].split(",")
    rows = [line.split(",") for line in lines[2:] if line]
    return lines[0], header, rows


# --- SVG ---------------------------------------------------------------------


class SvgCanvas:
    """Minimal deterministic SVG writer with a true-aspect world-to-pixel mapping."""

    def __init__(self, x_range, y_range, size: int = 480, margin: int = 30):
        self.size = size
        self.margin = margin
        span = max(x_range[1] - x_range[0], y_range[1] - y_range[0], 1e-9)
        self.scale = (size - 2 * margin) / span
        self.x0 = 0.5 * (x_range[0] + x_range[1]) - 0.5 * span
        self.y1 = 0.5 * (y_range[0] + y_range[1]) + 0.5 * span
        self.elements: list[str] = []

    def to_px(self, x: float, y: float) -> tuple[float, float]:
        return (self.margin + (x - self.x0) * self.scale,
                self.margin + (self.y1 - y) * self.scale)

    def polyline(self, points, color: str, width: float = 1.5, dashed: bool = False) -> None:
        if len(points) == 0:
            return
        px = " ".join(f"{u:.2f},{v:.2f}" for u, v in (self.to_px(x, y) for x, y in points))
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        self.elements.append(
            f'<polyline points="{px}" fill="none" stroke="{color}" '
            f'stroke-width="{width}"{dash}/>')

    def circle(self, x: float, y: float, r_px: float, color: str, fill: str = "none") -> None:
        u, v = self.to_px(x, y)
        self.elements.append(
            f'<circle cx="{u:.2f}" cy="{v:.2f}" r="{r_px:.2f}" stroke="{color}" fill="{fill}"/>')

    def rect_world(self, x0, y0, x1, y1, color: str) -> None:
        u0, v1 = self.to_px(x0, y0)
        u1, v0 = self.to_px(x1, y1)
        self.elements.append(
            f'<rect x="{u0:.2f}" y="{v0:.2f}" width="{u1 - u0:.2f}" height="{v1 - v0:.2f}" '
            f'stroke="none" fill="{color}"/>')

    def text(self, px: float, py: float, s: str, color: str = "#333") -> None:
        self.elements.append(
            f'<text x="{px:.1f}" y="{py:.1f}" font-family="monospace" font-size="12" '
            f'fill="{color}">{s}</text>')

    def render(self) -> str:
        body = "\n".join(self.elements)
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.size}" '
                f'height="{self.size}" viewBox="0 0 {self.size} {self.size}">\n'
                f'<rect width="100%" height="100%" fill="white"/>\n{body}\n</svg>\n')

    def save(self, path) -> None:
        Path(path).write_text(self.render())


def path_svg(reference_xy, actual_xy, *, labels=("reference", "actual")) -> str:
    """Reference in red, actual in black, equal aspect."""
    pts = np.vstack([p for p in (reference_xy, actual_xy) if len(p)])
    xr = (float(pts[:, 0].min()), float(pts[:, 0].max()))
    yr = (float(pts[:, 1].min()), float(pts[:, 1].max()))
    canvas = SvgCanvas(xr, yr)
    canvas.polyline(reference_xy, "red", 1.5)
    canvas.polyline(actual_xy, "black", 1.2)
    canvas.text(10, 16, f"{labels[0]}: red   {labels[1]}: black")
    return canvas.render()


# --- report writers -------------------------------------------------------------


def write_base_report(report: BenchReport, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []

    trials_csv = out / "trials.csv"
    _write_csv(trials_csv, "base-trials",
               ["controller", "motion_class", "target_x", "target_y", "target_theta",
                "trial", "seed", "reached", "elapsed_s",
                "err_trans_true_mm", "err_rot_true_deg",
                "err_trans_odom_mm", "err_rot_odom_deg"],
               [[t.controller, t.motion_class, t.target.x, t.target.y, t.target.theta,
                 t.trial, t.seed, int(t.reached), t.elapsed,
                 t.err_trans_true_mm, t.err_rot_true_deg,
                 t.err_trans_odom_mm, t.err_rot_odom_deg] for t in report.trials])
    files.append(trials_csv)

    agg_csv = out / "aggregates.csv"
    _write_csv(agg_csv, "base-aggregates",
               ["controller", "motion_class", "reference", "metric", "unit",
                "mean", "std", "n", "failures"],
               [[r.controller, r.motion_class, r.reference, r.metric, r.unit,
                 r.mean, r.std, r.n, r.failures] for r in report.aggregates()])
    files.append(agg_csv)

    files.append(_write_base_summary(report, out / "summary.txt"))
    return files


def _write_base_summary(report: BenchReport, path: Path) -> Path:
    rows = report.aggregates()
    lines = [f"base position control accuracy — robot {report.robot}, "
             f"master seed {report.master_seed}", ""]
    width = max((len(c) for c in report.controllers), default=8) + 2
    for reference in ("truth", "odometry"):
        lines.append(f"[error vs {'motion capture' if reference == 'truth' else 'odometry'}]")
        header = f"{'':24s}" + "".join(f"{c:>{width + 10}s}" for c in report.controllers)
        lines.append(header)
        for mclass in ("linear", "rotation", "combined"):
            for metric, unit in (("translation", "mm"), ("rotation", "deg")):
                cells = []
                for controller in report.controllers:
                    sel = [r for r in rows if r.controller == controller
                           and r.motion_class == mclass and r.reference == reference
                           and r.metric == metric]
                    cells.append(format_cell(sel[0].mean, sel[0].std, unit) if sel else "-")
                label = f"{mclass} {metric} ({unit})"
                lines.append(f"{label:24s}" + "".join(f"{c:>{width + 10}s}" for c in cells))
        lines.append("")
    path.write_text("\n".join(lines) + "\n")
    return path


def write_repeatability_report(result: RepeatabilityResult, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv = out / "repeatability.csv"
    _write_csv(csv, "arm-repeatability",
               ["pose", "target_x", "target_y", "target_z",
                "std_x_mm", "std_y_mm", "std_z_mm", "rp_mm", "reps", "skipped"],
               [[p.name, float(p.target[0]), float(p.target[1]), float(p.target[2]),
                 p.axis_std_mm[0], p.axis_std_mm[1], p.axis_std_mm[2],
                 p.rp_mm, result.reps, int(p.skipped)] for p in result.poses])
    summary = out / "summary.txt"
    lines = [f"arm pose repeatability — robot {result.robot}, master seed "
             f"{result.master_seed}, {result.reps} repetitions per pose", ""]
    lines.append(f"{'':16s}" + "".join(f"{p.name:>10s}" for p in result.poses))
    for axis, idx in (("x", 0), ("y", 1), ("z", 2)):
        cells = "".join(f"{p.axis_std_mm[idx]:>10.2f}" for p in result.poses)
        lines.append(f"std {axis} (mm)    " + cells)
    lines.append(f"{'RP (mm)':16s}" + "".join(f"{p.rp_mm:>10.2f}" for p in result.poses))
    if result.skipped:
        lines.append(f"skipped poses: {', '.join(result.skipped)}")
    summary.write_text("\n".join(lines) + "\n")
    return [csv, summary]


def write_tracking_report(report: TrackingReport, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv = out / "tracking.csv"
    _write_csv(csv, "tracking",
               ["step", "ref_x", "ref_y", "ref_theta", "odom_x", "odom_y", "odom_theta",
                "true_x", "true_y", "true_theta", "cmd_v", "cmd_omega"],
               [[i, e.reference.x, e.reference.y, e.reference.theta,
                 e.odom.x, e.odom.y, e.odom.theta,
                 e.true.x, e.true.y, e.true.theta,
                 e.command.v, e.command.omega] for i, e in enumerate(report.log)])
    svg = out / "tracking.svg"
    ref_xy = report.reference.states[:, :2]
    act_xy = np.array([[e.true.x, e.true.y] for e in report.log]).reshape(-1, 2)
    svg.write_text(path_svg(ref_xy, act_xy))
    summary = out / "summary.txt"
    summary.write_text(
        f"trajectory tracking — robot {report.robot}, controller {report.controller}, "
        f"master seed {report.master_seed}\n"
        f"RMS cross-track error: {report.rms_mm!r} mm\n"
        f"max cross-track error: {report.max_mm!r} mm\n"
        f"steps: {len(report.log)}\n")
    return [csv, svg, summary]
