import logging
import os
from dataclasses import dataclass
from typing import List, Optional, Tuple

import drawsvg as draw

from tanglegram.errors import TanglegramError
from tanglegram.tangle import Layout, crossings, positions
from tanglegram.tree import Tree

logger = logging.getLogger(__name__)

MARGIN = 16
CAPTION_SPACE = 28
# share of the inner width taken by each tree
TREE_SHARE = 0.3

Point = Tuple[float, float]


@dataclass(frozen=True)
class RenderSpec:
    width: int = 640
    height: Optional[int] = None
    leaf_gap: int = 24
    show_crossing_count: bool = True

    def __post_init__(self):
        if self.width < 4 * MARGIN:
            raise TanglegramError(f"width must be at least {4 * MARGIN} pixels, not {self.width}")
        if self.leaf_gap <= 0:
            raise TanglegramError(f"leaf gap must be positive, not {self.leaf_gap}")
        if self.height is not None and self.height <= 0:
            raise TanglegramError(f"height must be positive, not {self.height}")

    def required_height(self, n: int) -> int:
        caption = CAPTION_SPACE if self.show_crossing_count else 0
        return 2 * MARGIN + (n - 1) * self.leaf_gap + caption

    def canvas_height(self, n: int) -> int:
        needed = self.required_height(n)
        if self.height is None:
            return needed
        if self.height < needed:
            raise TanglegramError(f"{n} leaves at gap {self.leaf_gap} need height {needed}, got {self.height}")
        return self.height


@dataclass(frozen=True)
class Segment:
    start: Point
    end: Point
    kind: str


class SvgBuilder:
    """
    Strip drawing of a layout: left tree opening to the left of the left leaf
    line, right tree to the right of the right leaf line, y growing downwards,
    matching edges as straight segments between the two lines.
    """

    def __init__(self, spec: Optional[RenderSpec] = None):
        self.spec = spec or RenderSpec()
        self.height = 0
        self.segments: List[Segment] = []
        self.captions: List[Tuple[Point, str]] = []

    def add_segment(self, start: Point, end: Point, kind: str):
        self.segments.append(Segment(_rounded(start), _rounded(end), kind))

    def add_caption(self, at: Point, text: str):
        self.captions.append((_rounded(at), text))

    def matching_segments(self) -> List[Segment]:
        return [s for s in self.segments if s.kind == "matching"]

    def add_layout(self, d: Layout):
        spec = self.spec
        t = d.tanglegram
        self.height = spec.canvas_height(t.n)
        tree_width = (spec.width - 2 * MARGIN) * TREE_SHARE
        x_left = MARGIN + tree_width
        x_right = spec.width - MARGIN - tree_width

        def row(position: int) -> float:
            return MARGIN + position * spec.leaf_gap

        pos_left = positions(d, "left")
        pos_right = positions(d, "right")
        self._add_tree(t.left, [row(p) for p in pos_left], x_left, -tree_width)
        self._add_tree(t.right, [row(p) for p in pos_right], x_right, tree_width)
        for l, r in enumerate(t.sigma):
            self.add_segment((x_left, row(pos_left[l])), (x_right, row(pos_right[r])), "matching")

        if spec.show_crossing_count:
            self.add_caption((spec.width / 2, self.height - MARGIN), f"crossings {crossings(d)}")

    def _add_tree(self, tree: Tree, leaf_rows: List[float], leaf_x: float, reach: float):
        """Straight-line tree with leaves on x = leaf_x and the root at leaf_x + reach."""
        height = max(tree.depth) or 1
        xy = {}
        for v in reversed(tree.preorder):
            x = leaf_x + reach * (1 - tree.depth[v] / height)
            kids = tree.children[v]
            if kids is None:
                xy[v] = (leaf_x, leaf_rows[tree.leaf_labels[v]])
            else:
                xy[v] = (x, (xy[kids[0]][1] + xy[kids[1]][1]) / 2)
        for v in tree.internal:
            for c in tree.children[v]:
                self.add_segment(xy[v], xy[c], "tree")

    def to_svg(self) -> str:
        drawing = draw.Drawing(self.spec.width, self.height)
        drawing.append(draw.Rectangle(0, 0, self.spec.width, self.height, fill="white"))
        for s in self.segments:
            color = "#555555" if s.kind == "matching" else "black"
            drawing.append(draw.Line(*s.start, *s.end, stroke=color, stroke_width=1.5, class_=s.kind))
        for (x, y), text in self.captions:
            drawing.append(
                draw.Text(text, 14, x, y, text_anchor="middle", font_family="monospace", class_="caption")
            )
        return drawing.as_svg()

    def save(self, output_path: str):
        if not self.segments:
            logger.warning("nothing to draw")
            return
        directory = os.path.dirname(output_path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(output_path, "w", newline="\n") as f:
            f.write(self.to_svg())
        logger.info("saved %d segments to %s", len(self.segments), output_path)


def _rounded(p: Point) -> Point:
    return (round(float(p[0]), 2), round(float(p[1]), 2))


def segments_cross(a: Segment, b: Segment) -> bool:
    """Proper intersection of two segments (shared endpoints do not count)."""
    def orient(p: Point, q: Point, r: Point) -> float:
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    d1 = orient(a.start, a.end, b.start)
    d2 = orient(a.start, a.end, b.end)
    d3 = orient(b.start, b.end, a.start)
    d4 = orient(b.start, b.end, a.end)
    return d1 * d2 < 0 and d3 * d4 < 0


def geometric_crossings(builder: SvgBuilder) -> int:
    """Intersecting pairs among the drawn matching segments."""
    matching = builder.matching_segments()
    return sum(
        segments_cross(matching[i], matching[j])
        for i in range(len(matching))
        for j in range(i + 1, len(matching))
    )
