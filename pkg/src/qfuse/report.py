"""Self-contained SVG line charts of power curves (one series per table/value)."""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from xml.sax.saxutils import escape

from .errors import DataError

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 60, 170, 40, 50
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#17becf"]


@dataclass
class Series:
    name: str
    points: dict[int, tuple[float, float]]  # sample size -> (rate, stderr)


def read_series(path, metric: str = "power") -> list[Series]:
    """Parse a curve table. Long-format sweep tables yield one series per value."""
    err_col = "stderr" if metric == "power" else f"{metric}_stderr"
    stem = os.path.splitext(os.path.basename(path))[0]
    with open(path, newline="", encoding="utf-8") as fh:
        sample = fh.read(4096)
        fh.seek(0)
        first = sample.splitlines()[0] if sample else ""
        delimiter = "\t" if "\t" in first else ","
        reader = csv.DictReader(fh, delimiter=delimiter)
        fields = reader.fieldnames or []
        for col in ("sample_size", metric, err_col):
            if col not in fields:
                raise DataError(f"{path}: missing column {col!r}")
        grouped: dict[str, dict[int, tuple[float, float]]] = {}
        for line, row in enumerate(reader, start=2):
            key = f"{row['parameter']}={row['value']}" if "value" in fields and "parameter" in fields else stem
            try:
                n = int(row["sample_size"])
                grouped.setdefault(key, {})[n] = (float(row[metric]), float(row[err_col]))
            except (TypeError, ValueError):
                raise DataError(f"{path}: malformed numbers on line {line}") from None
    if not grouped:
        raise DataError(f"{path}: table has no rows")
    return [Series(name, pts) for name, pts in grouped.items()]


def render_svg(series: list[Series], title: str = "", ylabel: str = "power") -> str:
    xs = sorted({n for s in series for n in s.points})
    if not xs:
        raise DataError("nothing to plot")
    plot_w = WIDTH - LEFT - RIGHT
    plot_h = HEIGHT - TOP - BOTTOM
    lo, hi = xs[0], xs[-1]
    span = (hi - lo) or 1

    def px(n):
        return LEFT + (0.5 if hi == lo else (n - lo) / span) * plot_w

    def py(v):
        return TOP + (1.0 - min(max(v, 0.0), 1.0)) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2:.2f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    out.append(f'<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>')
    for k in range(6):
        v = k / 5
        y = py(v)
        out.append(f'<line x1="{LEFT - 4}" y1="{y:.2f}" x2="{LEFT + plot_w}" y2="{y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{LEFT - 8}" y="{y + 4:.2f}" text-anchor="end">{v:.1f}</text>')
    for n in xs:
        x = px(n)
        out.append(f'<line x1="{x:.2f}" y1="{TOP + plot_h}" x2="{x:.2f}" y2="{TOP + plot_h + 4}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{TOP + plot_h + 18}" text-anchor="middle">{n}</text>')
    out.append(f'<text x="{LEFT + plot_w / 2:.2f}" y="{HEIGHT - 10}" text-anchor="middle">sample size</text>')
    out.append(
        f'<text x="16" y="{TOP + plot_h / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {TOP + plot_h / 2:.2f})">{escape(ylabel)}</text>'
    )
    for i, s in enumerate(series):
        color = COLORS[i % len(COLORS)]
        # connect only neighbours on the shared x grid; missing sizes leave gaps
        run: list[str] = []
        for n in xs + [None]:
            if n is not None and n in s.points:
                run.append(f"{px(n):.2f},{py(s.points[n][0]):.2f}")
                continue
            if len(run) > 1:
                out.append(f'<polyline points="{" ".join(run)}" fill="none" stroke="{color}" stroke-width="2"/>')
            run = []
        for n, (rate, se) in sorted(s.points.items()):
            x, y = px(n), py(rate)
            out.append(
                f'<line x1="{x:.2f}" y1="{py(rate - se):.2f}" x2="{x:.2f}" y2="{py(rate + se):.2f}" stroke="{color}"/>'
            )
            out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="{color}"/>')
        ly = TOP + 12 + 18 * i
        lx = WIDTH - RIGHT + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}">{escape(s.name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
