"""
Log-log SVG plots of benchmark results, drawn with reportlab graphics.
"""

import math
from collections import defaultdict

from reportlab.graphics import renderSVG
from reportlab.graphics.shapes import Circle, Drawing, Line, Polygon, PolyLine, String
from reportlab.lib import colors

from .exceptions import InsufficientData
from .harness import summarize


WIDTH = 480
HEIGHT = 360
MARGIN = 56

PALETTE = [
    colors.HexColor('#0b6b57'),
    colors.HexColor('#d1495b'),
    colors.HexColor('#2e86ab'),
    colors.HexColor('#edae49'),
    colors.HexColor('#6a4c93'),
    colors.HexColor('#24364b'),
]
AXIS = colors.HexColor('#24364b')
GRID = colors.HexColor('#d9dee4')


class LogAxes:
    """Maps positive data values to drawing coordinates on log scales."""

    def __init__(self, xs, ys):
        self.x_low, self.x_high = self._decades(xs)
        self.y_low, self.y_high = self._decades(ys)

    @staticmethod
    def _decades(values):
        logs = [math.log10(v) for v in values if v > 0]
        if not logs:
            raise InsufficientData('Nothing positive to plot on a log scale.')
        low, high = math.floor(min(logs)), math.ceil(max(logs))
        return low, max(high, low + 1)

    def x(self, value: float) -> float:
        span = self.x_high - self.x_low
        return MARGIN + (math.log10(value) - self.x_low) / span * (WIDTH - 2 * MARGIN)

    def y(self, value: float) -> float:
        span = self.y_high - self.y_low
        clipped = min(max(math.log10(value), self.y_low), self.y_high)
        return MARGIN + (clipped - self.y_low) / span * (HEIGHT - 2 * MARGIN)

    def draw(self, drawing: Drawing, x_label: str, y_label: str) -> None:
        left, right = MARGIN, WIDTH - MARGIN
        bottom, top = MARGIN, HEIGHT - MARGIN
        for k in range(self.x_low, self.x_high + 1):
            x = self.x(10.0 ** k)
            drawing.add(Line(x, bottom, x, top, strokeColor=GRID, strokeWidth=0.5))
            drawing.add(String(x, bottom - 14, f'1e{k}', fontSize=8, textAnchor='middle', fillColor=AXIS))
        for k in range(self.y_low, self.y_high + 1):
            y = self.y(10.0 ** k)
            drawing.add(Line(left, y, right, y, strokeColor=GRID, strokeWidth=0.5))
            drawing.add(String(left - 4, y - 3, f'1e{k}', fontSize=8, textAnchor='end', fillColor=AXIS))
        drawing.add(Line(left, bottom, right, bottom, strokeColor=AXIS))
        drawing.add(Line(left, bottom, left, top, strokeColor=AXIS))
        drawing.add(String(WIDTH / 2, 12, x_label, fontSize=10, textAnchor='middle', fillColor=AXIS))
        drawing.add(String(8, HEIGHT - 20, y_label, fontSize=10, fillColor=AXIS))


def _curves(points):
    curves = defaultdict(list)
    for point in points:
        curves[(point.family, point.d)].append(point)
    return {key: sorted(group, key=lambda pt: pt.p) for key, group in sorted(curves.items())}


def error_rate_drawing(rows, title: str = 'Logical error rate per round') -> Drawing:
    """
    One curve per (family, d) of per-round error rate against noise strength,
    with the likelihood band shaded behind it. Rates of zero are left off.
    """
    points = [pt for pt in summarize(rows) if pt.p > 0]
    axes = LogAxes([pt.p for pt in points], [v for pt in points for v in (pt.rate, pt.high)])

    drawing = Drawing(WIDTH, HEIGHT)
    axes.draw(drawing, 'physical error rate', title)
    for index, ((family, d), curve) in enumerate(_curves(points).items()):
        color = PALETTE[index % len(PALETTE)]
        band = [pt for pt in curve if pt.high > 0]
        if len(band) > 1:
            upper = [(axes.x(pt.p), axes.y(pt.high)) for pt in band]
            lower = [(axes.x(pt.p), axes.y(max(pt.low, 10.0 ** axes.y_low))) for pt in reversed(band)]
            drawing.add(Polygon(
                [c for xy in upper + lower for c in xy],
                fillColor=color, fillOpacity=0.2, strokeColor=None,
            ))
        line = [(axes.x(pt.p), axes.y(pt.rate)) for pt in curve if pt.rate > 0]
        if len(line) > 1:
            drawing.add(PolyLine([c for xy in line for c in xy], strokeColor=color, strokeWidth=1.5))
        for x, y in line:
            drawing.add(Circle(x, y, 2.5, fillColor=color, strokeColor=None))
        drawing.add(String(
            WIDTH - MARGIN + 4, HEIGHT - MARGIN - 12 * index, f'{family} d={d}',
            fontSize=8, fillColor=color,
        ))
    return drawing


def timing_drawing(rows, title: str = 'Decoding time per detection event (us)') -> Drawing:
    """Microseconds of decoding per detection event against noise strength."""
    per_curve = defaultdict(lambda: [0.0, 0])
    for row in rows:
        if row.p > 0 and row.detections:
            totals = per_curve[(row.family, row.d, row.p)]
            totals[0] += row.seconds
            totals[1] += row.detections
    samples = [
        (family, d, p, seconds / detections * 1e6)
        for (family, d, p), (seconds, detections) in sorted(per_curve.items())
    ]
    axes = LogAxes([s[2] for s in samples], [s[3] for s in samples])

    drawing = Drawing(WIDTH, HEIGHT)
    axes.draw(drawing, 'physical error rate', title)
    curves = defaultdict(list)
    for family, d, p, micros in samples:
        curves[(family, d)].append((axes.x(p), axes.y(micros)))
    for index, ((family, d), line) in enumerate(sorted(curves.items())):
        color = PALETTE[index % len(PALETTE)]
        if len(line) > 1:
            drawing.add(PolyLine([c for xy in line for c in xy], strokeColor=color, strokeWidth=1.5))
        for x, y in line:
            drawing.add(Circle(x, y, 2.5, fillColor=color, strokeColor=None))
        drawing.add(String(
            WIDTH - MARGIN + 4, HEIGHT - MARGIN - 12 * index, f'{family} d={d}',
            fontSize=8, fillColor=color,
        ))
    return drawing


def save_svg(drawing: Drawing, path) -> None:
    renderSVG.drawToFile(drawing, str(path))
