import itertools
import os
import re
import sys

import pytest

# src/ holds main.py, svg_builder.py and the tanglegram package
sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "src"))

from tanglegram.construct import FamilyFactory  # noqa: E402
from tanglegram.tangle import Layout, Tanglegram  # noqa: E402
from tanglegram.tree import format_tree, parse_tree  # noqa: E402


def quadratic_crossings(d) -> int:
    """Crossings straight from the definition: pairs whose order differs on the two sides."""
    t = d.tanglegram
    total = 0
    for e in range(t.n):
        for f in range(e + 1, t.n):
            dl = d.left_positions[e] - d.left_positions[f]
            dr = d.right_positions[t.sigma[e]] - d.right_positions[t.sigma[f]]
            total += int(dl * dr < 0)
    return total


def drawing(d) -> tuple:
    """Unlabelled picture of a layout: both plane shapes and the matching by position."""
    t = d.tanglegram
    left = re.sub(r"\d+", "*", format_tree(t.left, d.orient_left))
    right = re.sub(r"\d+", "*", format_tree(t.right, d.orient_right))
    return left, right, d.pi


def all_drawings(t) -> set:
    """Pictures of every layout of t; isomorphic tanglegrams have the same set."""
    out = set()
    for bits_left in itertools.product((0, 1), repeat=len(t.left.internal)):
        for bits_right in itertools.product((0, 1), repeat=len(t.right.internal)):
            out.add(drawing(Layout(t, bits_left, bits_right)))
    return out


@pytest.fixture
def fig4():
    return FamilyFactory.fig4_tanglegram()


@pytest.fixture
def d_star3():
    return FamilyFactory.d_star(3)


@pytest.fixture
def crossed_cherries():
    """Size 2 with the two matching edges crossing."""
    tree = parse_tree("(0,1)")
    return Tanglegram(tree, tree, (1, 0)).default_layout()
