"""
Tanglegrams, layouts and switches.

Crossing status convention: chi(e, f) = +1 when the matching edges e and f
cross and -1 otherwise. With this sign cr(D) = sum over pairs of (1 + chi)/2
holds as written, and at a crossing-optimal layout every special row sum of the
decomposition matrix is negative.
"""
import logging
import math
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from .errors import FormatError, TanglegramError, UnknownLeafError, UnknownVertexError
from .tree import (
    Tree,
    automorphisms,
    format_tree,
    lca_matrix,
    leaf_order,
    parse_tree,
    random_plane_tree,
    relabel,
    shape_key,
    shape_order,
)

logger = logging.getLogger(__name__)

CANONICAL_LIMIT = 10
TGL_HEADER = "TGL 1"

SIDES = ("left", "right")
Seed = Union[None, int, np.random.SeedSequence, np.random.Generator]


def make_rng(seed: Seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def spawn_seeds(seed: Seed, count: int) -> List[np.random.SeedSequence]:
    """Independent child seeds; the same int or SeedSequence parent always yields the same children."""
    if isinstance(seed, np.random.Generator):
        seed = np.random.SeedSequence(seed.integers(0, 2 ** 63))
    parent = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return parent.spawn(count)


def pair_count(n: int) -> int:
    return n * (n - 1) // 2


@dataclass(frozen=True, eq=False)
class Tanglegram:
    """Left tree, right tree and sigma[left label] = right label."""
    left: Tree
    right: Tree
    sigma: Tuple[int, ...]

    def __post_init__(self):
        if self.left.n != self.right.n:
            raise TanglegramError(f"left tree has {self.left.n} leaves, right tree has {self.right.n}")
        if sorted(self.sigma) != list(range(self.left.n)) or len(self.sigma) != self.left.n:
            raise TanglegramError("sigma is not a bijection between the leaf sets")

    @property
    def n(self) -> int:
        return self.left.n

    @cached_property
    def sigma_inverse(self) -> Tuple[int, ...]:
        inv = [0] * self.n
        for l, r in enumerate(self.sigma):
            inv[r] = l
        return tuple(inv)

    @cached_property
    def pair_cells(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """
        (iu, ju, rows, cols): every left-label pair e < f with the row of
        lca_R(sigma e, sigma f) in right.internal and the column of lca_L(e, f)
        in left.internal.
        """
        left, right = self.left, self.right
        sigma = np.asarray(self.sigma, dtype=np.int64)
        iu, ju = np.triu_indices(self.n, 1)
        row_of = np.full(len(right.children), -1, dtype=np.int64)
        row_of[list(right.internal)] = np.arange(len(right.internal))
        col_of = np.full(len(left.children), -1, dtype=np.int64)
        col_of[list(left.internal)] = np.arange(len(left.internal))
        rows = row_of[lca_matrix(right)[sigma[iu], sigma[ju]]]
        cols = col_of[lca_matrix(left)[iu, ju]]
        return iu, ju, rows, cols

    def tree(self, side: str) -> Tree:
        return self.left if _check_side(side) == "left" else self.right

    def default_layout(self) -> "Layout":
        return Layout(self, self.left.zero_orientation(), self.right.zero_orientation())


@dataclass(frozen=True, eq=False)
class Layout:
    """A tanglegram with one orientation bit per internal vertex on each side."""
    tanglegram: Tanglegram
    orient_left: Tuple[int, ...]
    orient_right: Tuple[int, ...]

    def __post_init__(self):
        t = self.tanglegram
        for side, tree, bits in (("left", t.left, self.orient_left), ("right", t.right, self.orient_right)):
            if len(bits) != len(tree.internal):
                raise TanglegramError(
                    f"{side} orientation has {len(bits)} bits for {len(tree.internal)} internal vertices"
                )
            if any(b not in (0, 1) for b in bits):
                raise TanglegramError(f"{side} orientation bits must be 0 or 1")

    @property
    def n(self) -> int:
        return self.tanglegram.n

    def orientation(self, side: str) -> Tuple[int, ...]:
        return self.orient_left if _check_side(side) == "left" else self.orient_right

    @cached_property
    def left_sequence(self) -> Tuple[int, ...]:
        return leaf_order(self.tanglegram.left, self.orient_left)

    @cached_property
    def right_sequence(self) -> Tuple[int, ...]:
        return leaf_order(self.tanglegram.right, self.orient_right)

    @cached_property
    def left_positions(self) -> np.ndarray:
        """Position of each left label, indexed by label."""
        return _inverse_positions(self.left_sequence)

    @cached_property
    def right_positions(self) -> np.ndarray:
        return _inverse_positions(self.right_sequence)

    @cached_property
    def pi(self) -> Tuple[int, ...]:
        """pi[i] = right position of the partner of the i-th left leaf."""
        sigma = self.tanglegram.sigma
        pos = self.right_positions
        return tuple(int(pos[sigma[l]]) for l in self.left_sequence)


def _inverse_positions(sequence: Sequence[int]) -> np.ndarray:
    pos = np.empty(len(sequence), dtype=np.int64)
    pos[np.asarray(sequence, dtype=np.int64)] = np.arange(len(sequence))
    return pos


def _check_side(side: str) -> str:
    if side not in SIDES:
        raise TanglegramError(f"side must be 'left' or 'right', not {side!r}")
    return side


def leaf_sequences(d: Layout) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """Left and right leaf labels, top to bottom."""
    return d.left_sequence, d.right_sequence


def positions(d: Layout, side: str) -> Tuple[int, ...]:
    """positions(d, side)[label] is the row of that leaf, 0 at the top."""
    pos = d.left_positions if _check_side(side) == "left" else d.right_positions
    return tuple(int(p) for p in pos)


@dataclass(frozen=True)
class SwitchVector:
    """
    alpha over int(R), beta over int(L), aligned with Tree.internal;
    +1 keeps a vertex, -1 switches it.
    """
    alpha: Tuple[int, ...]
    beta: Tuple[int, ...]

    def __post_init__(self):
        if any(a not in (1, -1) for a in self.alpha) or any(b not in (1, -1) for b in self.beta):
            raise TanglegramError("switch vector entries must be +1 or -1")

    @classmethod
    def identity(cls, t: Tanglegram) -> "SwitchVector":
        return cls((1,) * len(t.right.internal), (1,) * len(t.left.internal))


@dataclass(frozen=True, eq=False)
class DecompositionMatrix:
    """
    entries[i, j] = a_xu for x = right.internal[i], u = left.internal[j]:
    the sum of chi at the base layout over pairs {e, f} with lca_R = x and lca_L = u.
    """
    base: Layout
    entries: np.ndarray

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def row_vertices(self) -> Tuple[int, ...]:
        return self.base.tanglegram.right.internal

    @property
    def col_vertices(self) -> Tuple[int, ...]:
        return self.base.tanglegram.left.internal

    def entry(self, x: int, u: int) -> int:
        right, left = self.base.tanglegram.right, self.base.tanglegram.left
        if x not in right.internal_index:
            raise UnknownVertexError(f"{x} is not an internal vertex of the right tree")
        if u not in left.internal_index:
            raise UnknownVertexError(f"{u} is not an internal vertex of the left tree")
        return int(self.entries[right.internal_index[x], left.internal_index[u]])

    def row_sum(self, x: int) -> int:
        right = self.base.tanglegram.right
        if x not in right.internal_index:
            raise UnknownVertexError(f"{x} is not an internal vertex of the right tree")
        return int(self.entries[right.internal_index[x]].sum())

    def col_sum(self, u: int) -> int:
        left = self.base.tanglegram.left
        if u not in left.internal_index:
            raise UnknownVertexError(f"{u} is not an internal vertex of the left tree")
        return int(self.entries[:, left.internal_index[u]].sum())


# --- .tgl codec ----------------------------------------------------------

def parse_tanglegram(text: str) -> Layout:
    """Parse a .tgl document; the written child orders become the layout."""
    lines = [line.strip() for line in text.strip().splitlines()]
    if len(lines) != 5:
        raise FormatError(f"expected 5 lines in a .tgl document, found {len(lines)}")
    if lines[0] != TGL_HEADER:
        raise FormatError(f"bad header {lines[0]!r}, expected {TGL_HEADER!r}")

    fields = {}
    for line, key in zip(lines[1:], ("n", "L", "R", "M")):
        head, _, rest = line.partition(" ")
        if head != key:
            raise FormatError(f"expected a line starting with {key!r}, found {line!r}")
        fields[key] = rest.strip()

    try:
        n = int(fields["n"])
    except ValueError as e:
        raise FormatError(f"bad size {fields['n']!r}") from e
    left = parse_tree(fields["L"])
    right = parse_tree(fields["R"])
    if left.n != n or right.n != n:
        raise FormatError(f"declared size {n}, trees have {left.n} and {right.n} leaves")

    sigma = [-1] * n
    pairs = fields["M"].split()
    if len(pairs) != n:
        raise FormatError(f"expected {n} matching pairs, found {len(pairs)}")
    for pair in pairs:
        try:
            l, r = (int(p) for p in pair.split("-"))
        except ValueError as e:
            raise FormatError(f"bad matching pair {pair!r}") from e
        if not (0 <= l < n and 0 <= r < n) or sigma[l] != -1:
            raise FormatError(f"matching pair {pair!r} is out of range or repeats a left leaf")
        sigma[l] = r
    if sorted(sigma) != list(range(n)):
        raise FormatError("matching is not a bijection")

    return Tanglegram(left, right, tuple(sigma)).default_layout()


def serialize_layout(d: Layout) -> str:
    t = d.tanglegram
    pairs = " ".join(f"{l}-{r}" for l, r in enumerate(t.sigma))
    return (
        f"{TGL_HEADER}\n"
        f"n {t.n}\n"
        f"L {format_tree(t.left, d.orient_left)}\n"
        f"R {format_tree(t.right, d.orient_right)}\n"
        f"M {pairs}\n"
    )


def read_tgl(path: str) -> Layout:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except UnicodeDecodeError as e:
        raise FormatError(f"{path} is not UTF-8 text: {e}") from e
    return parse_tanglegram(text)


def write_tgl(path: str, d: Layout):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(serialize_layout(d))


# --- switches ----------------------------------------------------------

def _internal_slot(tree: Tree, side: str, v: int) -> int:
    if v not in tree.internal_index:
        raise UnknownVertexError(f"vertex {v} is not an internal vertex of the {side} tree")
    return tree.internal_index[v]


def flip_set(d: Layout, side: str, vertices: Iterable[int]) -> Layout:
    """Switch at every vertex of the set on one side."""
    tree = d.tanglegram.tree(side)
    bits = list(d.orientation(side))
    for v in set(vertices):
        slot = _internal_slot(tree, side, v)
        bits[slot] ^= 1
    if side == "left":
        return Layout(d.tanglegram, tuple(bits), d.orient_right)
    return Layout(d.tanglegram, d.orient_left, tuple(bits))


def switch(d: Layout, side: str, v: int) -> Layout:
    return flip_set(d, side, (v,))


def flip_all(d: Layout, side: str) -> Layout:
    """Switch every internal vertex of one side; reverses that side's leaf sequence."""
    return flip_set(d, side, d.tanglegram.tree(side).internal)


def apply_switches(d: Layout, s: SwitchVector) -> Layout:
    t = d.tanglegram
    if len(s.alpha) != len(t.right.internal) or len(s.beta) != len(t.left.internal):
        raise TanglegramError("incomplete switch vector")
    left = tuple(b ^ (x == -1) for b, x in zip(d.orient_left, s.beta))
    right = tuple(b ^ (x == -1) for b, x in zip(d.orient_right, s.alpha))
    return Layout(t, left, right)


def random_switch_vector(t: Tanglegram, seed: Seed = None) -> SwitchVector:
    rng = make_rng(seed)
    alpha = tuple(int(v) for v in rng.choice((1, -1), size=len(t.right.internal)))
    beta = tuple(int(v) for v in rng.choice((1, -1), size=len(t.left.internal)))
    return SwitchVector(alpha, beta)


# --- crossings ---------------------------------------------------------

class FenwickTree:
    """Prefix counts over 0..size-1 with logarithmic updates."""

    __slots__ = ("tree",)

    def __init__(self, size: int):
        self.tree = [0] * (size + 1)

    def add(self, i: int, delta: int = 1):
        i += 1
        while i < len(self.tree):
            self.tree[i] += delta
            i += i & -i

    def prefix_sum(self, i: int) -> int:
        """Sum over positions 0..i-1."""
        total = 0
        while i > 0:
            total += self.tree[i]
            i -= i & -i
        return total


def count_inversions(perm: Sequence[int]) -> int:
    fenwick = FenwickTree(len(perm))
    inversions = 0
    for seen, p in enumerate(perm):
        inversions += seen - fenwick.prefix_sum(p + 1)
        fenwick.add(p)
    return inversions


def crossings(d: Layout) -> int:
    """Number of crossing pairs of matching edges = inversions of pi."""
    return count_inversions(d.pi)


def chi(d: Layout, e: int, f: int) -> int:
    """+1 if the matching edges at left leaves e and f cross in d, else -1."""
    n = d.n
    for edge in (e, f):
        if not isinstance(edge, (int, np.integer)) or not 0 <= edge < n:
            raise UnknownLeafError(f"unknown matching edge {edge}")
    if e == f:
        raise TanglegramError("crossing status needs two distinct edges")
    sigma = d.tanglegram.sigma
    dl = d.left_positions[e] - d.left_positions[f]
    dr = d.right_positions[sigma[e]] - d.right_positions[sigma[f]]
    return 1 if dl * dr < 0 else -1


def position_weights(tree: Tree) -> Tuple[np.ndarray, np.ndarray]:
    """
    (base, W) with positions = base + bits @ W for any orientation bits
    aligned with tree.internal. base[label] is the position under the zero
    orientation.
    """
    n = tree.n
    base = _inverse_positions(leaf_order(tree, tree.zero_orientation()))
    weights = np.zeros((len(tree.internal), n), dtype=np.int64)
    for k, v in enumerate(tree.internal):
        a, b = tree.children[v]
        weights[k, list(tree.leaves_below[a])] = tree.leaf_count[b]
        weights[k, list(tree.leaves_below[b])] = -tree.leaf_count[a]
    return base, weights


def orientation_bits(codes: np.ndarray, width: int) -> np.ndarray:
    """Rows of bits for integer orientation codes; bit 0 of the row is the most significant."""
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    return ((codes[:, None] >> shifts[None, :]) & 1).astype(np.int64)


def batch_crossings(t: Tanglegram, left_bits: np.ndarray, right_bits: np.ndarray) -> np.ndarray:
    """Crossings of the layouts given row by row as orientation-bit matrices."""
    n = t.n
    if n < 2:
        return np.zeros(len(left_bits), dtype=np.int64)
    base_l, w_l = position_weights(t.left)
    base_r, w_r = position_weights(t.right)
    pos_l = base_l + left_bits @ w_l
    pos_r = (base_r + right_bits @ w_r)[:, list(t.sigma)]
    iu, ju = np.triu_indices(n, 1)
    crossed = (pos_l[:, iu] - pos_l[:, ju]) * (pos_r[:, iu] - pos_r[:, ju]) < 0
    return crossed.sum(axis=1)


def mean_random_crossings(t: Tanglegram, samples: int, seed: Seed = None) -> Tuple[float, float]:
    """Sample mean and standard error of crossings over uniform orientation vectors."""
    rng = make_rng(seed)
    left_bits = rng.integers(0, 2, size=(samples, len(t.left.internal)), dtype=np.int64)
    right_bits = rng.integers(0, 2, size=(samples, len(t.right.internal)), dtype=np.int64)
    values = batch_crossings(t, left_bits, right_bits).astype(float)
    if samples < 2:
        return float(values.mean()), float("nan")
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(samples))


# --- decomposition -----------------------------------------------------

def decomposition(d0: Layout) -> DecompositionMatrix:
    """a_xu relative to the base layout d0, rows int(R), columns int(L)."""
    t = d0.tanglegram
    n = t.n
    left, right = t.left, t.right
    entries = np.zeros((len(right.internal), len(left.internal)), dtype=np.int64)
    if n < 2:
        return DecompositionMatrix(d0, entries)

    sigma = np.asarray(t.sigma, dtype=np.int64)
    iu, ju, rows, cols = t.pair_cells
    crossed = (d0.left_positions[iu] - d0.left_positions[ju]) * (
        d0.right_positions[sigma[iu]] - d0.right_positions[sigma[ju]]
    ) < 0
    status = np.where(crossed, 1, -1)
    np.add.at(entries, (rows, cols), status)
    return DecompositionMatrix(d0, entries)


def cr_via_decomposition(m: DecompositionMatrix, s: SwitchVector) -> int:
    """1/2 C(n,2) + 1/2 sum_x sum_u alpha(x) beta(u) a_xu, in exact integers."""
    rows, cols = m.entries.shape
    if len(s.alpha) != rows or len(s.beta) != cols:
        raise TanglegramError("incomplete switch vector")
    total = pair_count(m.n)
    if rows:
        total += int(np.asarray(s.alpha, dtype=np.int64) @ m.entries @ np.asarray(s.beta, dtype=np.int64))
    if total % 2:
        raise TanglegramError("decomposition matrix is inconsistent with its base layout")
    return total // 2


# --- random instances --------------------------------------------------

def random_instance(n: int, seed: Seed = None) -> Layout:
    """Uniform plane trees on both sides, uniform sigma, fair-coin orientation bits."""
    if n < 1:
        raise TanglegramError("leaf count must be positive")
    rng = make_rng(seed)
    left = random_plane_tree(n, rng)
    right = random_plane_tree(n, rng)
    sigma = tuple(int(r) for r in rng.permutation(n))
    t = Tanglegram(left, right, sigma)
    orient_left = tuple(int(b) for b in rng.integers(0, 2, size=len(left.internal)))
    orient_right = tuple(int(b) for b in rng.integers(0, 2, size=len(right.internal)))
    return Layout(t, orient_left, orient_right)


# --- isomorphism -------------------------------------------------------

def _canonical_parts(t: Tanglegram) -> Tuple[Tree, Tree, Tuple[int, ...]]:
    if t.n > CANONICAL_LIMIT:
        logger.warning("canonical form of a size %d tanglegram enumerates large automorphism groups", t.n)
    pos_l = _inverse_positions(shape_order(t.left))
    pos_r = _inverse_positions(shape_order(t.right))
    left_c = relabel(t.left, pos_l)
    right_c = relabel(t.right, pos_r)

    sigma_c = np.empty(t.n, dtype=np.int64)
    for l, r in enumerate(t.sigma):
        sigma_c[pos_l[l]] = pos_r[r]

    auts_l = np.array(automorphisms(left_c), dtype=np.int64)
    auts_r = np.array(automorphisms(right_c), dtype=np.int64)
    # b o sigma o a^-1 over the whole group; a^-1 ranges over the group as a does
    candidates = auts_r[:, sigma_c[auts_l]].reshape(-1, t.n)
    best = candidates[np.lexsort(candidates.T[::-1])[0]]
    return left_c, right_c, tuple(int(v) for v in best)


def canonical_tanglegram(t: Tanglegram) -> Tanglegram:
    """The isomorphic tanglegram whose sigma is the orbit minimum on canonically labelled trees."""
    left_c, right_c, sigma = _canonical_parts(t)
    return Tanglegram(left_c, right_c, sigma)


def format_canonical(left: Tree, right: Tree, sigma: Sequence[int]) -> bytes:
    return f"{shape_key(left)}|{shape_key(right)}|{','.join(str(s) for s in sigma)}".encode("ascii")


def canonical_form(t: Tanglegram) -> bytes:
    left_c, right_c, sigma = _canonical_parts(t)
    return format_canonical(left_c, right_c, sigma)


def is_isomorphic(t1: Tanglegram, t2: Tanglegram) -> bool:
    if t1.n != t2.n:
        return False
    if shape_key(t1.left) != shape_key(t2.left) or shape_key(t1.right) != shape_key(t2.right):
        return False
    return canonical_form(t1) == canonical_form(t2)
