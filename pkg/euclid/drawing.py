from reportlab.graphics import renderSVG
from reportlab.graphics.shapes import Circle, Drawing, Line
from reportlab.lib import colors

from .problem import EuclidInstance, EuclidSolution


SIZE = 400
PADDING = 24

COLOR_FILLS = {
    1: colors.HexColor('#d1495b'),
    2: colors.HexColor('#11b67a'),
    3: colors.HexColor('#2e86ab'),
}
NEUTRAL = colors.HexColor('#9aa5b1')


def solution_drawing(instance: EuclidInstance, solution: EuclidSolution) -> Drawing:
    """Input points as colored dots, neutral points gray, edges in their color."""
    positions = [p.position for p in instance.points] + list(solution.neutral_points)
    drawing = Drawing(SIZE, SIZE)
    if not positions:
        return drawing

    xs = [x for x, _ in positions]
    ys = [y for _, y in positions]
    span = max(max(xs) - min(xs), max(ys) - min(ys)) or 1.0
    scale = (SIZE - 2 * PADDING) / span

    def place(position):
        return PADDING + (position[0] - min(xs)) * scale, PADDING + (position[1] - min(ys)) * scale

    for edge in solution.edges:
        (x1, y1), (x2, y2) = place(edge.start), place(edge.end)
        drawing.add(Line(x1, y1, x2, y2, strokeColor=COLOR_FILLS[edge.color], strokeWidth=2))
    for position in solution.neutral_points:
        drawing.add(Circle(*place(position), 4, fillColor=NEUTRAL, strokeColor=None))
    for point in instance.points:
        drawing.add(Circle(*place(point.position), 5, fillColor=COLOR_FILLS[point.color], strokeColor=colors.black))
    return drawing


def save_svg(drawing: Drawing, path) -> None:
    renderSVG.drawToFile(drawing, str(path))
