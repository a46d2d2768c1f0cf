import logging
import os
from dataclasses import asdict, dataclass
from typing import Dict, List, Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np
import pandas as pd

from src.core.errors import ValidationError
from src.harness.svg_templates import AXES, LEGEND_ENTRY, POLYLINE, SERIES_COLORS, SVG_DOCUMENT, X_TICK, Y_TICK

RESULT_COLUMNS = ["method", "p", "m", "delta", "sigma", "mean_add", "stderr", "false_alarm_rate", "seed_count"]

WIDTH, HEIGHT = 800, 500
LEFT, RIGHT, TOP, BOTTOM = 70, 640, 50, 440
TICKS = 5


@dataclass(frozen=True)
class ResultRow:
    method: str
    p: int
    m: int
    delta: float
    sigma: float
    mean_add: float
    stderr: float
    false_alarm_rate: float
    seed_count: int


def write_results_csv(rows: Sequence[ResultRow], path: str) -> None:
    """One row per (method, setting); floats written with full precision."""
    if not rows:
        raise ValidationError("No results to report")
    frame = pd.DataFrame([asdict(r) for r in rows], columns=RESULT_COLUMNS)
    try:
        frame.to_csv(path, index=False, float_format="%.17g")
    except OSError as e:
        raise ValidationError(f"Cannot write results {path}: {e}")
    logging.info(f"Wrote {len(rows)} result rows to {path}")


def read_results_csv(path: str) -> List[ResultRow]:
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ValidationError(f"Cannot read results {path}: {e}")
    missing = [c for c in RESULT_COLUMNS if c not in frame.columns]
    if missing:
        raise ValidationError(f"Results file {path} lacks columns {missing}")
    return [ResultRow(method=str(r.method), p=int(r.p), m=int(r.m), delta=float(r.delta), sigma=float(r.sigma),
                      mean_add=float(r.mean_add), stderr=float(r.stderr), false_alarm_rate=float(r.false_alarm_rate),
                      seed_count=int(r.seed_count))
            for r in frame.itertuples(index=False)]


def write_curves_csv(curves: Mapping[str, Sequence[float]], path: str) -> None:
    """Long format: series, episode, reward."""
    records = [{"series": name, "episode": episode, "reward": value}
               for name, values in curves.items() for episode, value in enumerate(values)]
    try:
        pd.DataFrame(records, columns=["series", "episode", "reward"]).to_csv(path, index=False, float_format="%.17g")
    except OSError as e:
        raise ValidationError(f"Cannot write reward curves {path}: {e}")
    logging.info(f"Wrote reward curves of {len(curves)} series to {path}")


def read_curves_csv(path: str) -> Dict[str, List[float]]:
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ValidationError(f"Cannot read reward curves {path}: {e}")
    curves: Dict[str, List[float]] = {}
    for name, group in frame.groupby("series", sort=False):
        curves[str(name)] = group.sort_values("episode")["reward"].astype(float).tolist()
    return curves


def _ticks(low: float, high: float) -> np.ndarray:
    return np.linspace(low, high, TICKS)


def _format_tick(value: float) -> str:
    return f"{value:.4g}"


def render_curves_svg(curves: Mapping[str, Sequence[float]], title: str = "Cumulative reward per episode",
                      x_label: str = "Episode", y_label: str = "Cumulative reward") -> str:
    """A line chart with one polyline per series on a fixed 800 x 500 canvas."""
    series = {name: np.asarray(values, dtype=float) for name, values in curves.items() if len(values)}
    if not series:
        raise ValidationError("No reward curves to plot")
    longest = max(v.size for v in series.values())
    x_high = max(longest - 1, 1)
    y_low = min(float(v.min()) for v in series.values())
    y_high = max(float(v.max()) for v in series.values())
    if y_high == y_low:
        y_low, y_high = y_low - 1.0, y_high + 1.0

    def sx(x):
        return LEFT + (RIGHT - LEFT) * x / x_high

    def sy(y):
        return BOTTOM - (BOTTOM - TOP) * (y - y_low) / (y_high - y_low)

    parts = [AXES.format(left=LEFT, right=RIGHT, top=TOP, bottom=BOTTOM, x_label_x=(LEFT + RIGHT) / 2,
                         x_label_y=BOTTOM + 40, x_label=escape(x_label), y_label_y=(TOP + BOTTOM) / 2,
                         y_label=escape(y_label))]
    for x in _ticks(0, x_high):
        parts.append(X_TICK.format(x=f"{sx(x):.2f}", bottom=BOTTOM, tick_end=BOTTOM + 5, label_y=BOTTOM + 18,
                                   label=_format_tick(x)))
    for y in _ticks(y_low, y_high):
        parts.append(Y_TICK.format(y=f"{sy(y):.2f}", left=LEFT, tick_start=LEFT - 5, label_x=LEFT - 8,
                                   label=_format_tick(y)))
    for index, (name, values) in enumerate(series.items()):
        color = SERIES_COLORS[index % len(SERIES_COLORS)]
        points = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in enumerate(values))
        parts.append(POLYLINE.format(color=color, points=points))
        legend_y = TOP + 10 + 18 * index
        parts.append(LEGEND_ENTRY.format(x=RIGHT + 15, y=legend_y, line_end=RIGHT + 40, text_x=RIGHT + 46,
                                         color=color, name=escape(name)))
    return SVG_DOCUMENT.format(width=WIDTH, height=HEIGHT, title_x=WIDTH / 2, title=escape(title),
                               body="\n".join(parts))


def write_curves_svg(curves: Mapping[str, Sequence[float]], path: str, title: str = "Cumulative reward per episode") -> None:
    svg = render_curves_svg(curves, title)
    try:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(svg)
    except OSError as e:
        raise ValidationError(f"Cannot write chart {path}: {e}")
    logging.info(f"Wrote reward chart to {path}")


def report(rows: Sequence[ResultRow], curves: Mapping[str, Sequence[float]], output_dir: str,
           prefix: str = "results") -> List[str]:
    """Write the results CSV plus, when curves are given, the curve CSV and SVG. Returns the paths written."""
    try:
        os.makedirs(output_dir, exist_ok=True)
    except OSError as e:
        raise ValidationError(f"Cannot create output directory {output_dir}: {e}")
    paths = [os.path.join(output_dir, f"{prefix}.csv")]
    write_results_csv(rows, paths[0])
    if curves:
        paths.append(os.path.join(output_dir, f"{prefix}_curves.csv"))
        write_curves_csv(curves, paths[-1])
        paths.append(os.path.join(output_dir, f"{prefix}_curves.svg"))
        write_curves_svg(curves, paths[-1])
    return paths
