SVG_DOCUMENT = """<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">
  <rect x="0" y="0" width="{width}" height="{height}" fill="white"/>
  <text x="{title_x}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{title}</text>
{body}
</svg>
"""

AXES = """  <line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>
  <line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>
  <text x="{x_label_x}" y="{x_label_y}" font-family="sans-serif" font-size="12" text-anchor="middle">{x_label}</text>
  <text x="16" y="{y_label_y}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {y_label_y})">{y_label}</text>"""

X_TICK = """  <line x1="{x}" y1="{bottom}" x2="{x}" y2="{tick_end}" stroke="black"/>
  <text x="{x}" y="{label_y}" font-family="sans-serif" font-size="10" text-anchor="middle">{label}</text>"""

Y_TICK = """  <line x1="{tick_start}" y1="{y}" x2="{left}" y2="{y}" stroke="black"/>
  <text x="{label_x}" y="{y}" font-family="sans-serif" font-size="10" text-anchor="end" dominant-baseline="middle">{label}</text>"""

POLYLINE = """  <polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>"""

LEGEND_ENTRY = """  <line x1="{x}" y1="{y}" x2="{line_end}" y2="{y}" stroke="{color}" stroke-width="2"/>
  <text x="{text_x}" y="{y}" font-family="sans-serif" font-size="11" dominant-baseline="middle">{name}</text>"""

SERIES_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]
