"""Render a laid-out scene as a standalone SVG document.

The output is deterministic text: fixed float formatting, fixed attribute
order, no timestamps. Draw order is lines, buses, nodes, text, so bus rails
visually terminate the stubs that meet them and node rectangles sit on top
of their incoming connections.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

from .layout import Scene

PALETTES = {
    "mono": {
        "bg": "#ffffff",
        "node_fill": "#f4f4f4",
        "node_stroke": "#1a1a1a",
        "line": "#1a1a1a",
        "bus": "#1a1a1a",
        "text": "#111111",
        "label": "#333333",
    },
    "blueprint": {
        "bg": "#f6f9fc",
        "node_fill": "#dbe9f6",
        "node_stroke": "#225588",
        "line": "#2a5d8f",
        "bus": "#1d4568",
        "text": "#10263b",
        "label": "#34618c",
    },
    "warm": {
        "bg": "#fdfaf5",
        "node_fill": "#f7e8d0",
        "node_stroke": "#8a5a2b",
        "line": "#7a4a1f",
        "bus": "#5f3a17",
        "text": "#3c2512",
        "label": "#8a5a2b",
    },
}


def _f(v: float) -> str:
    return f"{v:.2f}"


def render_svg(scene: Scene) -> str:
    pal = PALETTES[scene.style.palette]
    w, h = _f(scene.width), _f(scene.height)
    font = "Helvetica, Arial, sans-serif"
    parts: list[str] = []
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{w}" height="{h}" viewBox="0 0 {w} {h}">'
    )
    parts.append(f"  <title>{escape(scene.diagram_id)}</title>")
    parts.append("  <defs>")
    parts.append(
        '    <marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" '
        'markerWidth="7" markerHeight="7" orient="auto-start-reverse">'
        f'<path d="M 0 1 L 9 5 L 0 9 z" fill="{pal["line"]}"/></marker>'
    )
    parts.append("  </defs>")
    parts.append(f'  <rect x="0" y="0" width="{w}" height="{h}" fill="{pal["bg"]}"/>')

    for ln in scene.lines:
        if ln.path[0] == "poly":
            (x0, y0), (x1, y1) = ln.path[1]
            d = f"M {_f(x0)} {_f(y0)} L {_f(x1)} {_f(y1)}"
        else:
            (x0, y0), (cx, cy), (x1, y1) = ln.path[1]
            d = f"M {_f(x0)} {_f(y0)} Q {_f(cx)} {_f(cy)} {_f(x1)} {_f(y1)}"
        marker = ' marker-end="url(#arrow)"' if ln.arrow else ""
        parts.append(
            f'  <path d="{d}" fill="none" stroke="{pal["line"]}" '
            f'stroke-width="2"{marker}/>'
        )

    for bus in scene.buses:
        (x0, y0), (x1, y1) = bus.p0, bus.p1
        parts.append(
            f'  <path d="M {_f(x0)} {_f(y0)} L {_f(x1)} {_f(y1)}" fill="none" '
            f'stroke="{pal["bus"]}" stroke-width="4" stroke-linecap="round"/>'
        )

    for nd in scene.nodes:
        b = nd.box
        x, y = b.cx - b.w / 2.0, b.cy - b.h / 2.0
        parts.append(
            f'  <rect x="{_f(x)}" y="{_f(y)}" width="{_f(b.w)}" height="{_f(b.h)}" '
            f'rx="3" fill="{pal["node_fill"]}" stroke="{pal["node_stroke"]}" '
            'stroke-width="1.5"/>'
        )
    for nd in scene.nodes:
        for content, box in nd.blocks:
            parts.append(
                f'  <text x="{_f(box.cx)}" y="{_f(box.cy + 4.0)}" '
                f'text-anchor="middle" font-family="{font}" font-size="12" '
                f'fill="{pal["text"]}">{escape(content)}</text>'
            )

    for lb in scene.labels:
        parts.append(
            f'  <text x="{_f(lb.box.cx)}" y="{_f(lb.box.cy + 3.5)}" '
            f'text-anchor="middle" font-family="{font}" font-size="11" '
            f'fill="{pal["label"]}">{escape(lb.content)}</text>'
        )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
