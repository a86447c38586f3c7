"""SVG rendering of an episode: regions, executed trace and plans."""

from __future__ import annotations

from typing import Iterable, Optional
from xml.sax.saxutils import escape

from .engine import EpisodeResult
from .scenario import Scenario

SCALE = 6.0
KNOWN = "#1f5fbf"
UNKNOWN = "#d62728"
TARGET = "#2ca02c"


def render_trace(result: Optional[EpisodeResult], scenario: Scenario,
                 plans: Optional[Iterable] = None, title: str = "") -> str:
    """Unknown CRs are red; known and discovered CRs are blue."""
    m = scenario.true_map
    ws = m.workspace
    w, h = ws.width * SCALE, ws.height * SCALE

    def X(x):
        return f"{(x - ws.x0) * SCALE:.2f}"

    def Y(y):
        # SVG y grows downwards
        return f"{(ws.y1 - y) * SCALE:.2f}"

    def circle(c, r, cls, stroke, fill, extra=""):
        return (f'<circle class="{cls}" cx="{X(c[0])}" cy="{Y(c[1])}" r="{r * SCALE:.2f}" '
                f'stroke="{stroke}" fill="{fill}"{extra}/>')

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" height="{h:.0f}" '
           f'viewBox="0 0 {w:.0f} {h:.0f}">']
    if title:
        out.append(f"<title>{escape(title)}</title>")
    out.append(f'<rect class="workspace" x="0" y="0" width="{w:.0f}" height="{h:.0f}" '
               f'fill="#fbf7ef" stroke="#444"/>')
    crs = []
    for r, known in zip(m.crs, scenario.known or (False,) * len(m.crs)):
        crs.append((r, "cr cr-known" if known else "cr cr-unknown", KNOWN if known else UNKNOWN))
    if result is not None and result.model_map is not None:
        n_known = sum(1 for k in scenario.known if k)
        for r in result.model_map.crs[n_known:]:
            crs.append((r, "cr cr-discovered", KNOWN))
    dash = ' stroke-dasharray="4 3" stroke-width="1"'
    for r, _, color in crs:
        out.append(circle(r.center, r.radius + m.dr_width, "dr", color, "none", dash))
    for r, cls, color in crs:
        out.append(circle(r.center, r.radius, cls, color, color, ' fill-opacity="0.35"'))
    if m.tr is not None:
        out.append(circle(m.tr.center, m.tr.radius, "tr", TARGET, TARGET, ' fill-opacity="0.3"'))
    for p in plans or ():
        pts = " ".join(f"{X(q.x)},{Y(q.y)}" for q in p.poses)
        out.append(f'<polyline class="plan" points="{pts}" fill="none" stroke="#999" '
                   f'stroke-width="1" stroke-opacity="0.6"/>')
    if result is not None:
        pts = " ".join(f"{X(x)},{Y(y)}" for x, y in result.final_trace.points())
        out.append(f'<polyline class="trace" points="{pts}" fill="none" stroke="#111" stroke-width="2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
