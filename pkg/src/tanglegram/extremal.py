"""
Exhaustive search for the largest crossing number among size-n tanglegrams.

Classes are enumerated per ordered pair of canonical tree shapes: a matching
sigma is kept iff it is the lexicographic minimum of its orbit under
sigma -> b o sigma o a^-1 for automorphisms a of the left and b of the right
tree. Orbits are found by min-label propagation over all n! matchings, and
the crossing numbers of all kept matchings of one shape pair are computed in
one vectorized pass over the left orientations.
"""
import itertools
import logging
import math
import os
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .construct import FamilyFactory
from .errors import FormatError, SizeLimitError, TanglegramError
from .optimize import pair_segments
from .parallel import run_tasks
from .tangle import Tanglegram, format_canonical, orientation_bits, pair_count, position_weights
from .tree import Tree, automorphism_generators, enumerate_shapes, h_formula

logger = logging.getLogger(__name__)

EXTREMAL_LIMIT = 8
# matchings per vectorized crossing-number batch
BATCH_SIZE = 1024

# Maxima reported in the literature; every other value is derived here.
PUBLISHED_MAXIMA = {8: 9}


@dataclass(frozen=True)
class ExtremalReport:
    n: int
    tanglegram_count: int
    max_value: int
    witnesses: Tuple[bytes, ...]
    histogram: Dict[int, int]
    wall_time: Optional[float] = field(default=None, compare=False)

    @property
    def source(self) -> str:
        return "published" if PUBLISHED_MAXIMA.get(self.n) == self.max_value else "derived"


@dataclass(frozen=True)
class BoundVerdicts:
    n: int
    max_value: int
    strict_upper: bool
    claimed_upper: bool
    provable_upper: bool
    family_lower: Optional[int]
    family_lower_held: Optional[bool]
    earlier_lower: Optional[float]


def _check_size(n: int):
    if n < 1:
        raise TanglegramError("leaf count must be positive")
    if n > EXTREMAL_LIMIT:
        raise SizeLimitError("extremal search", n, EXTREMAL_LIMIT)


# --- orbit enumeration ----------------------------------------------------

@lru_cache(maxsize=None)
def _shape_list(n: int) -> Tuple[Tree, ...]:
    return tuple(enumerate_shapes(n))


@lru_cache(maxsize=None)
def _permutations(n: int) -> np.ndarray:
    """All permutations of 0..n-1 in lexicographic order; the row index is the rank."""
    return np.array(list(itertools.permutations(range(n))), dtype=np.int64).reshape(-1, n)


def lex_rank(perms: np.ndarray) -> np.ndarray:
    """Lexicographic rank of each row, via the Lehmer code."""
    n = perms.shape[1]
    rank = np.zeros(len(perms), dtype=np.int64)
    for i in range(n):
        smaller = (perms[:, i + 1:] < perms[:, i:i + 1]).sum(axis=1)
        rank = rank * (n - i) + smaller
    return rank


@lru_cache(maxsize=None)
def _left_moves(n: int, i: int) -> Tuple[np.ndarray, ...]:
    # sigma -> sigma o a
    perms = _permutations(n)
    return tuple(lex_rank(perms[:, list(a)]) for a in automorphism_generators(_shape_list(n)[i]))


@lru_cache(maxsize=None)
def _right_moves(n: int, j: int) -> Tuple[np.ndarray, ...]:
    # sigma -> b o sigma
    perms = _permutations(n)
    return tuple(lex_rank(np.asarray(b, dtype=np.int64)[perms]) for b in automorphism_generators(_shape_list(n)[j]))


def orbit_minima(n: int, i: int, j: int) -> np.ndarray:
    """Ranks of the matchings that are the minimum of their orbit for shape pair (i, j)."""
    moves = _left_moves(n, i) + _right_moves(n, j)
    labels = np.arange(math.factorial(n), dtype=np.int64)
    if not moves:
        return labels
    while True:
        new = labels
        # generators are involutions, so every move is an undirected edge
        for move in moves:
            new = np.minimum(new, labels[move])
        new = new[new]
        if np.array_equal(new, labels):
            break
        labels = new
    return np.flatnonzero(labels == np.arange(len(labels)))


def enumerate_tanglegrams(n: int) -> Iterator[Tanglegram]:
    """One representative per isomorphism class, in shape-pair then matching order."""
    _check_size(n)
    return _classes(n)


def _classes(n: int) -> Iterator[Tanglegram]:
    shapes = _shape_list(n)
    perms = _permutations(n)
    for i, left in enumerate(shapes):
        for j, right in enumerate(shapes):
            for rank in orbit_minima(n, i, j):
                yield Tanglegram(left, right, tuple(int(s) for s in perms[rank]))


# --- batched crossing numbers ---------------------------------------------

def batch_crt(left: Tree, right: Tree, sigmas: np.ndarray) -> np.ndarray:
    """crt of (left, right, sigma) for every row of sigmas."""
    n = left.n
    if n < 2:
        return np.zeros(len(sigmas), dtype=np.int64)
    base, weights = position_weights(left)
    width = len(left.internal)
    # the first left bit is fixed to 0, mirroring both sides keeps crossings
    codes = np.arange(1 << (width - 1), dtype=np.int64)
    pos_left = base + orientation_bits(codes, width) @ weights
    first, second, starts, sizes = pair_segments(right)

    out = np.empty(len(sigmas), dtype=np.int64)
    for start in range(0, len(sigmas), BATCH_SIZE):
        chunk = sigmas[start:start + BATCH_SIZE]
        inverse = np.argsort(chunk, axis=1)
        inverted = pos_left[:, inverse[:, first]] > pos_left[:, inverse[:, second]]
        counts = np.add.reduceat(inverted.astype(np.int64), starts, axis=2)
        cost = np.minimum(counts, sizes - counts).sum(axis=2)
        out[start:start + len(chunk)] = cost.min(axis=0)
    return out


def _shape_pair_task(task) -> Tuple[int, Dict[int, int], int, List[bytes]]:
    n, i, j = task
    shapes = _shape_list(n)
    left, right = shapes[i], shapes[j]
    sigmas = _permutations(n)[orbit_minima(n, i, j)]
    values = batch_crt(left, right, sigmas)
    support, counts = np.unique(values, return_counts=True)
    histogram = {int(v): int(c) for v, c in zip(support, counts)}
    best = int(values.max())
    witnesses = [format_canonical(left, right, sigmas[k]) for k in np.flatnonzero(values == best)]
    return len(sigmas), histogram, best, witnesses


def max_crt(n: int, jobs: Optional[int] = None) -> ExtremalReport:
    """M_n over every class of size n; the report does not depend on jobs."""
    _check_size(n)
    started = time.perf_counter()
    shape_total = len(_shape_list(n))
    tasks = [(n, i, j) for i in range(shape_total) for j in range(shape_total)]
    logger.info("extremal search n=%d: %d shape pairs", n, len(tasks))

    count, best = 0, -1
    histogram: Dict[int, int] = {}
    witnesses: List[bytes] = []
    # merged in task order
    for classes, pair_hist, pair_best, pair_witnesses in run_tasks(_shape_pair_task, tasks, jobs):
        count += classes
        for value, c in pair_hist.items():
            histogram[value] = histogram.get(value, 0) + c
        if pair_best > best:
            best, witnesses = pair_best, list(pair_witnesses)
        elif pair_best == best:
            witnesses.extend(pair_witnesses)

    wall = time.perf_counter() - started
    logger.info("extremal search n=%d: %d classes, max %d, %.1fs", n, count, best, wall)
    return ExtremalReport(
        n=n,
        tanglegram_count=count,
        max_value=best,
        witnesses=tuple(witnesses),
        histogram=dict(sorted(histogram.items())),
        wall_time=wall,
    )


# --- bounds -------------------------------------------------------------

def _power_of_two_level(n: int) -> Optional[int]:
    return n.bit_length() - 1 if n & (n - 1) == 0 else None


def bound_check(report: ExtremalReport) -> BoundVerdicts:
    n, m = report.n, report.max_value
    total = pair_count(n)
    level = _power_of_two_level(n)
    family = FamilyFactory.crt_formula(level) if level is not None else None
    return BoundVerdicts(
        n=n,
        max_value=m,
        strict_upper=2 * m < total,
        claimed_upper=4 * m <= 2 * total - n,
        provable_upper=m <= (total - h_formula(n)) // 2,
        family_lower=family,
        family_lower_held=None if family is None else m >= family,
        earlier_lower=FamilyFactory.earlier_lower_bound(level) if level is not None else None,
    )


def monotonicity(reports: Sequence[ExtremalReport]) -> Dict[int, bool]:
    """For each n with a report for n-1 too: whether M_n >= M_(n-1)."""
    by_n = {r.n: r.max_value for r in reports}
    return {n: by_n[n] >= by_n[n - 1] for n in sorted(by_n) if n - 1 in by_n}


# --- text artifact --------------------------------------------------------

def format_report(report: ExtremalReport) -> str:
    """Key-value lines; the wall time is left out so reruns diff cleanly."""
    lines = [
        f"n {report.n}",
        f"classes {report.tanglegram_count}",
        f"max {report.max_value}",
        f"source {report.source}",
    ]
    lines += [f"histogram {value} {count}" for value, count in report.histogram.items()]
    lines += [f"witness {w.decode('ascii')}" for w in report.witnesses]
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> ExtremalReport:
    fields: Dict[str, int] = {}
    histogram: Dict[int, int] = {}
    witnesses: List[bytes] = []
    for line in text.strip().splitlines():
        key, _, rest = line.strip().partition(" ")
        try:
            if key in ("n", "classes", "max"):
                fields[key] = int(rest)
            elif key == "histogram":
                value, count = rest.split()
                histogram[int(value)] = int(count)
            elif key == "witness":
                witnesses.append(rest.encode("ascii"))
            elif key != "source":
                raise FormatError(f"unknown report key {key!r}")
        except ValueError as e:
            raise FormatError(f"bad report line {line!r}") from e
    missing = {"n", "classes", "max"} - fields.keys()
    if missing:
        raise FormatError(f"report is missing {', '.join(sorted(missing))}")
    if sum(histogram.values()) != fields["classes"]:
        raise FormatError("histogram does not add up to the class count")
    return ExtremalReport(
        n=fields["n"],
        tanglegram_count=fields["classes"],
        max_value=fields["max"],
        witnesses=tuple(witnesses),
        histogram=histogram,
    )


def save_report(path: str, report: ExtremalReport):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="\n") as f:
        f.write(format_report(report))


def load_report(path: str) -> ExtremalReport:
    with open(path, "r") as f:
        return parse_report(f.read())
