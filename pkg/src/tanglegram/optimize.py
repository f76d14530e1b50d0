"""
Crossing minimization: the exact solver, a brute-force oracle, single-switch
local search and the switching chain with its upper-bound guarantee.

With the left orientation fixed, the crossings between the two child subtrees
of a right internal vertex only depend on that vertex's own bit, so the best
right orientation is a sum of independent per-vertex minima. The exact solver
enumerates left orientations in blocks and vectorizes that minimum.
"""
import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from .errors import SizeLimitError, TanglegramError
from .parallel import run_tasks
from .tangle import (
    Layout,
    Seed,
    Tanglegram,
    apply_switches,
    chi,
    crossings,
    decomposition,
    flip_all,
    flip_set,
    orientation_bits,
    pair_count,
    position_weights,
    random_switch_vector,
    spawn_seeds,
)
from .tree import Tree, h_formula, special_report

logger = logging.getLogger(__name__)

EXACT_LIMIT = 24
BRUTE_LIMIT = 10
# left orientation codes per exact-solver task
BLOCK_SIZE = 1 << 12

METHODS = ("exact", "bruteforce", "heuristic")


@dataclass(frozen=True)
class ChainStep:
    """One run of the chain: flip the whole opposite side, then the special set of `side`."""
    side: str
    special: FrozenSet[int]
    special_sums: Dict[int, int]
    cr_d1: int
    cr_d2: int


@dataclass(frozen=True)
class ChainReport:
    n: int
    cr_d0: int
    chains: Tuple[ChainStep, ...]
    best_value: int
    guarantee: int
    formula_guarantee: int
    strong_bound_held: bool

    @property
    def special_count(self) -> int:
        return max(len(step.special) for step in self.chains)


@dataclass(frozen=True)
class CrtResult:
    value: int
    witness: Layout
    method: str
    nodes_explored: int
    chain: Optional[ChainReport] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise TanglegramError(f"unknown method {self.method!r}")


# --- exact solver --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class _SegmentTable:
    """
    Matching-edge pairs grouped by their lca in the right tree. For segment k
    (right.internal[k]) the pairs are (upper[p], lower[p]) for p in
    starts[k]..starts[k+1]-1: left labels of the partners of a leaf in the
    first and second child subtree.
    """
    upper: np.ndarray
    lower: np.ndarray
    starts: np.ndarray
    sizes: np.ndarray


def pair_segments(tree: Tree) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    (first, second, starts, sizes): all leaf-label pairs of tree grouped by
    lca, one segment per internal vertex in tree.internal order. first[p] lies
    under the first child of the lca, second[p] under the second one.
    """
    firsts: List[np.ndarray] = []
    seconds: List[np.ndarray] = []
    starts, sizes = [], []
    offset = 0
    for v in tree.internal:
        a, b = tree.children[v]
        first = np.asarray(tree.leaves_below[a], dtype=np.int64)
        second = np.asarray(tree.leaves_below[b], dtype=np.int64)
        firsts.append(np.repeat(first, len(second)))
        seconds.append(np.tile(second, len(first)))
        starts.append(offset)
        sizes.append(len(first) * len(second))
        offset += len(first) * len(second)
    return (
        np.concatenate(firsts),
        np.concatenate(seconds),
        np.asarray(starts, dtype=np.int64),
        np.asarray(sizes, dtype=np.int64),
    )


def _segment_table(t: Tanglegram) -> _SegmentTable:
    sigma_inv = np.asarray(t.sigma_inverse, dtype=np.int64)
    first, second, starts, sizes = pair_segments(t.right)
    return _SegmentTable(upper=sigma_inv[first], lower=sigma_inv[second], starts=starts, sizes=sizes)


def _segment_counts(table: _SegmentTable, pos_left: np.ndarray) -> np.ndarray:
    """c[k, v]: pairs of segment v whose first-subtree edge sits lower on the left, per row of positions."""
    inverted = (pos_left[:, table.upper] > pos_left[:, table.lower]).astype(np.int64)
    return np.add.reduceat(inverted, table.starts, axis=1)


def _left_positions(t: Tanglegram, left_orientation: Sequence[int]) -> np.ndarray:
    if len(left_orientation) != len(t.left.internal):
        raise TanglegramError(
            f"left orientation has {len(left_orientation)} bits for {len(t.left.internal)} internal vertices"
        )
    base, weights = position_weights(t.left)
    return base + np.asarray(left_orientation, dtype=np.int64) @ weights


def best_right_given_left(t: Tanglegram, left_orientation: Sequence[int]) -> Tuple[int, Tuple[int, ...]]:
    """
    Minimum crossings over all right orientations for a fixed left one, and
    the lexicographically first right orientation attaining it.
    """
    pos = _left_positions(t, left_orientation)
    if t.n < 2:
        return 0, ()
    table = _segment_table(t)
    counts = _segment_counts(table, pos[None, :])[0]
    flipped = table.sizes - counts
    bits = tuple(int(b) for b in flipped < counts)
    return int(np.minimum(counts, flipped).sum()), bits


def _solve_block(task) -> Tuple[int, int]:
    table, base, weights, width, start, stop = task
    codes = np.arange(start, stop, dtype=np.int64)
    pos = base + orientation_bits(codes, width) @ weights
    counts = _segment_counts(table, pos)
    cost = np.minimum(counts, table.sizes - counts).sum(axis=1)
    k = int(np.argmin(cost))
    return int(cost[k]), int(codes[k])


def crt_exact(t: Tanglegram, jobs: Optional[int] = None) -> CrtResult:
    """
    Tanglegram crossing number. Mirroring both sides keeps every crossing, so
    the first left bit is fixed to 0 and 2**(n-2) left orientations are tried.
    Blocks merge by (value, code), so the witness does not depend on jobs.
    """
    n = t.n
    if n > EXACT_LIMIT:
        raise SizeLimitError("exact crossing number", n, EXACT_LIMIT)
    if n < 2:
        return CrtResult(0, t.default_layout(), "exact", 1)

    table = _segment_table(t)
    base, weights = position_weights(t.left)
    width = len(t.left.internal)
    total = 1 << (width - 1)
    tasks = [
        (table, base, weights, width, start, min(start + BLOCK_SIZE, total))
        for start in range(0, total, BLOCK_SIZE)
    ]
    logger.debug("exact solver: n=%d, %d left orientations in %d blocks", n, total, len(tasks))
    value, code = min(run_tasks(_solve_block, tasks, jobs))

    left_bits = tuple(int(b) for b in orientation_bits(np.array([code], dtype=np.int64), width)[0])
    best, right_bits = best_right_given_left(t, left_bits)
    if best != value:
        raise TanglegramError("exact solver blocks disagree with the single-orientation solver")
    return CrtResult(value, Layout(t, left_bits, right_bits), "exact", total)


def crt_bruteforce(t: Tanglegram) -> CrtResult:
    """Minimum over every (left, right) orientation pair; first optimum in lexicographic order."""
    n = t.n
    if n > BRUTE_LIMIT:
        raise SizeLimitError("brute-force crossing number", n, BRUTE_LIMIT)
    if n < 2:
        return CrtResult(0, t.default_layout(), "bruteforce", 1)

    width_l, width_r = len(t.left.internal), len(t.right.internal)
    base_l, w_l = position_weights(t.left)
    base_r, w_r = position_weights(t.right)
    pos_l = base_l + orientation_bits(np.arange(1 << width_l, dtype=np.int64), width_l) @ w_l
    pos_r = base_r + orientation_bits(np.arange(1 << width_r, dtype=np.int64), width_r) @ w_r
    pos_r = pos_r[:, list(t.sigma)]

    iu, ju = np.triu_indices(n, 1)
    sign_l = np.sign(pos_l[:, iu] - pos_l[:, ju])
    sign_r = np.sign(pos_r[:, iu] - pos_r[:, ju])
    # a pair crosses iff its two signs differ
    cost = (len(iu) - sign_l @ sign_r.T) // 2
    k, j = np.unravel_index(int(np.argmin(cost)), cost.shape)

    left_bits = tuple(int(b) for b in orientation_bits(np.array([k], dtype=np.int64), width_l)[0])
    right_bits = tuple(int(b) for b in orientation_bits(np.array([j], dtype=np.int64), width_r)[0])
    return CrtResult(int(cost[k, j]), Layout(t, left_bits, right_bits), "bruteforce", cost.size)


# --- local search --------------------------------------------------------

def _descend(d: Layout) -> Tuple[Layout, int]:
    """
    Steepest descent over single switches. Switching left vertex u changes the
    crossings by -col_sum(u), switching right vertex x by -row_sum(x), both
    relative to the current layout.
    """
    t = d.tanglegram
    steps = 0
    if t.n < 2:
        return d, steps
    width_l = len(t.left.internal)
    while True:
        entries = decomposition(d).entries
        gains = np.concatenate([entries.sum(axis=0), entries.sum(axis=1)])
        k = int(np.argmax(gains))
        if gains[k] <= 0:
            return d, steps
        if k < width_l:
            d = flip_set(d, "left", (t.left.internal[k],))
        else:
            d = flip_set(d, "right", (t.right.internal[k - width_l],))
        steps += 1


def local_search(d: Layout, seed: Seed = None, restarts: int = 1) -> Layout:
    """
    Single-switch locally optimal layout reached from d. Restarts beyond the
    first begin at d with a random switch vector applied; the first layout
    with the fewest crossings wins.
    """
    if restarts < 1:
        raise TanglegramError("restarts must be at least 1")
    best, steps = _descend(d)
    best_value = crossings(best)
    for child in spawn_seeds(seed, restarts - 1):
        start = apply_switches(d, random_switch_vector(d.tanglegram, child))
        candidate, more = _descend(start)
        steps += more
        value = crossings(candidate)
        if value < best_value:
            best, best_value = candidate, value
    logger.debug("local search: %d switches over %d restarts, %d crossings", steps, restarts, best_value)
    return best


# --- switching chain -----------------------------------------------------

def switching_chain(
    t: Tanglegram,
    both_sides: bool = False,
    seed: Seed = None,
    restarts: int = 1,
) -> Tuple[Layout, ChainReport]:
    """
    D0 = local_search(default layout); D1 = D0 with every left vertex
    switched; D2 = D1 with every special vertex of the right tree switched.
    Returns the better of D0 and D2. With both_sides the mirrored chain
    (flip the right side, then the left special set) also competes.
    """
    n = t.n
    if n < 2:
        raise TanglegramError("the switching chain needs at least 2 leaves")

    d0 = local_search(t.default_layout(), seed=seed, restarts=restarts)
    cr0 = crossings(d0)
    a = decomposition(d0)

    runs = [("right", "left", a.row_sum)]
    if both_sides:
        runs.append(("left", "right", a.col_sum))

    candidates = [(cr0, d0)]
    chains = []
    for side, opposite, special_sum in runs:
        special = special_report(t.tree(side)).special
        d1 = flip_all(d0, opposite)
        d2 = flip_set(d1, side, special)
        sums = {v: special_sum(v) for v in sorted(special)}
        step = ChainStep(side=side, special=special, special_sums=sums, cr_d1=crossings(d1), cr_d2=crossings(d2))
        chains.append(step)
        candidates.append((step.cr_d2, d2))

    best_value, best = min(candidates, key=lambda c: c[0])
    total = pair_count(n)
    special_count = max(len(step.special) for step in chains)
    # floor((C(n,2) - |S|) / 2): equals C(n,2)/2 - ceil(|S|/2) when C(n,2) is even,
    # and sits 1/2 above that bound when C(n,2) and |S| are both odd
    report = ChainReport(
        n=n,
        cr_d0=cr0,
        chains=tuple(chains),
        best_value=best_value,
        guarantee=(total - special_count) // 2,
        formula_guarantee=(total - h_formula(n)) // 2,
        strong_bound_held=2 * best_value <= total - 2 * special_count,
    )
    logger.debug(
        "switching chain n=%d: D0 %d, D2 %s, guarantee %d",
        n, cr0, [step.cr_d2 for step in chains], report.guarantee,
    )
    return best, report


def crt_heuristic(t: Tanglegram, seed: Seed = None, restarts: int = 1, both_sides: bool = False) -> CrtResult:
    """Upper bound on crt from the switching chain; sizes below 2 are planar."""
    if t.n < 2:
        return CrtResult(0, t.default_layout(), "heuristic", 0)
    best, report = switching_chain(t, both_sides=both_sides, seed=seed, restarts=restarts)
    return CrtResult(report.best_value, best, "heuristic", 1 + len(report.chains), chain=report)


def has_crossing_cherry(d: Layout) -> bool:
    """True if the two matching edges at some cherry, on either side, cross."""
    t = d.tanglegram
    for v in t.left.internal:
        a, b = t.left.children[v]
        if t.left.is_leaf(a) and t.left.is_leaf(b):
            if chi(d, t.left.leaf_labels[a], t.left.leaf_labels[b]) == 1:
                return True
    sigma_inv = t.sigma_inverse
    for x in t.right.internal:
        a, b = t.right.children[x]
        if t.right.is_leaf(a) and t.right.is_leaf(b):
            e = sigma_inv[t.right.leaf_labels[a]]
            f = sigma_inv[t.right.leaf_labels[b]]
            if chi(d, e, f) == 1:
                return True
    return False
