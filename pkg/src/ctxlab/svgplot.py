"""Minimal standalone SVG output for histograms and scatter plots."""

from __future__ import annotations

from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=20, top=30, bottom=55)


class _Frame:
    def __init__(self, xlim, ylim):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        self.pw = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def x(self, v):
        return MARGIN["left"] + (v - self.x0) / (self.x1 - self.x0) * self.pw

    def y(self, v):
        return MARGIN["top"] + (1 - (v - self.y0) / (self.y1 - self.y0)) * self.ph


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _axes(fr: _Frame, title: str, xlabel: str, ylabel: str, nticks: int = 5) -> list[str]:
    left, top = MARGIN["left"], MARGIN["top"]
    bottom = top + fr.ph
    out = [
        f'<rect x="{left}" y="{top}" width="{fr.pw}" height="{fr.ph}" fill="none" stroke="black"/>',
        f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle" font-size="13">{escape(xlabel)}</text>',
        f'<text x="16" y="{top + fr.ph / 2:.1f}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 16 {top + fr.ph / 2:.1f})">{escape(ylabel)}</text>',
    ]
    for k in range(nticks + 1):
        xv = fr.x0 + k * (fr.x1 - fr.x0) / nticks
        yv = fr.y0 + k * (fr.y1 - fr.y0) / nticks
        out.append(f'<line x1="{fr.x(xv):.2f}" y1="{bottom}" x2="{fr.x(xv):.2f}" y2="{bottom + 5}" stroke="black"/>')
        out.append(f'<text x="{fr.x(xv):.2f}" y="{bottom + 18}" text-anchor="middle" font-size="11">{_fmt(xv)}</text>')
        out.append(f'<line x1="{left - 5}" y1="{fr.y(yv):.2f}" x2="{left}" y2="{fr.y(yv):.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{fr.y(yv) + 4:.2f}" text-anchor="end" font-size="11">{_fmt(yv)}</text>')
    return out


def _vline(fr: _Frame, x: float, label: str) -> str:
    return (f'<line class="guide" data-x="{x!r}" x1="{fr.x(x):.2f}" y1="{MARGIN["top"]}" x2="{fr.x(x):.2f}" '
            f'y2="{MARGIN["top"] + fr.ph}" stroke="black" stroke-dasharray="6,4"><title>{escape(label)}</title></line>')


def _hline(fr: _Frame, y: float, label: str) -> str:
    return (f'<line class="guide" data-y="{y!r}" x1="{MARGIN["left"]}" y1="{fr.y(y):.2f}" x2="{MARGIN["left"] + fr.pw}" '
            f'y2="{fr.y(y):.2f}" stroke="black" stroke-dasharray="6,4"><title>{escape(label)}</title></line>')


def _document(body: list[str]) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">')
    return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>', *body, "</svg>"]) + "\n"


def histogram_svg(edges, density, guides, title: str, xlabel: str) -> str:
    """Bar chart of a normalized histogram with dashed vertical guides."""
    ymax = max(float(max(density)), 1e-12) * 1.05
    xlim = (float(min(edges[0], *guides)), float(max(edges[-1], *guides)))
    fr = _Frame(xlim, (0.0, ymax))
    body = _axes(fr, title, xlabel, "probability density")
    for k, d in enumerate(density):
        x0, x1 = fr.x(edges[k]), fr.x(edges[k + 1])
        y = fr.y(d)
        body.append(f'<rect x="{x0:.2f}" y="{y:.2f}" width="{max(x1 - x0, 0.0):.2f}" '
                    f'height="{fr.y(0) - y:.2f}" fill="#4c72b0" stroke="none"/>')
    for g in guides:
        body.append(_vline(fr, g, f"x = {g:g}"))
    return _document(body)


def scatter_svg(xs, ys, xguides, yguides, xlim, ylim, title: str, xlabel: str, ylabel: str) -> str:
    """Point cloud with dashed vertical and horizontal guides."""
    fr = _Frame(xlim, ylim)
    body = _axes(fr, title, xlabel, ylabel)
    for x, y in zip(xs, ys):
        body.append(f'<circle cx="{fr.x(x):.2f}" cy="{fr.y(y):.2f}" r="1.5" fill="#4c72b0"/>')
    for g in xguides:
        body.append(_vline(fr, g, f"x = {g:g}"))
    for g in yguides:
        body.append(_hline(fr, g, f"y = {g:g}"))
    return _document(body)
