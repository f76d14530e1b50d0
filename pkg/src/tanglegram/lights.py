"""
The unbalancing-lights game: given a square +-1 matrix a, choose sign vectors
x and y maximizing sum_ij a_ij x_i y_j. For a fixed y the best x takes the
sign of each row's inner product with y, so only y has to be searched.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import FormatError, SizeLimitError, TanglegramError
from .parallel import run_tasks
from .tangle import DecompositionMatrix, Seed, make_rng, orientation_bits, spawn_seeds
from .tree import special_report

logger = logging.getLogger(__name__)

GB_EXACT_LIMIT = 22
GB_BRUTE_LIMIT = 8
# y vectors per exact-solver chunk
GB_CHUNK = 1 << 14


@dataclass(frozen=True, eq=False)
class SignMatrix:
    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise TanglegramError(f"sign matrix must be square, got shape {entries.shape}")
        if not np.isin(entries, (1, -1)).all():
            raise TanglegramError("sign matrix entries must be +1 or -1")
        object.__setattr__(self, "entries", entries.astype(np.int64))

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class GameResult:
    value: int
    x: Tuple[int, ...]
    y: Tuple[int, ...]


def _signs(values: np.ndarray) -> np.ndarray:
    # zero inner products resolve to +1
    return np.where(values >= 0, 1, -1)


def _as_signs(vector: Sequence[int], n: int, name: str) -> np.ndarray:
    arr = np.asarray(vector, dtype=np.int64)
    if arr.shape != (n,) or not np.isin(arr, (1, -1)).all():
        raise TanglegramError(f"{name} must be a vector of {n} signs")
    return arr


def game_value(m: SignMatrix, x: Sequence[int], y: Sequence[int]) -> int:
    return int(_as_signs(x, m.n, "x") @ m.entries @ _as_signs(y, m.n, "y"))


def gb_exact(m: SignMatrix) -> GameResult:
    """
    Maximum over all sign vectors. Negating x and y together keeps the value,
    so y[0] is fixed to +1 and the first maximizing y in code order is kept.
    """
    n = m.n
    if n > GB_EXACT_LIMIT:
        raise SizeLimitError("exact unbalancing lights", n, GB_EXACT_LIMIT)
    if n == 0:
        return GameResult(0, (), ())

    total = 1 << (n - 1)
    best_value, best_code = -1, 0
    for start in range(0, total, GB_CHUNK):
        codes = np.arange(start, min(start + GB_CHUNK, total), dtype=np.int64)
        ys = 1 - 2 * orientation_bits(codes, n)
        values = np.abs(ys @ m.entries.T).sum(axis=1)
        k = int(np.argmax(values))
        if values[k] > best_value:
            best_value, best_code = int(values[k]), int(codes[k])

    y = 1 - 2 * orientation_bits(np.array([best_code], dtype=np.int64), n)[0]
    x = _signs(m.entries @ y)
    logger.debug("gb_exact n=%d: %d y vectors, value %d", n, total, best_value)
    return GameResult(best_value, tuple(int(v) for v in x), tuple(int(v) for v in y))


def gb_bruteforce(m: SignMatrix) -> GameResult:
    """Every (x, y) pair; first maximizer in (x, y) code order."""
    n = m.n
    if n > GB_BRUTE_LIMIT:
        raise SizeLimitError("brute-force unbalancing lights", n, GB_BRUTE_LIMIT)
    if n == 0:
        return GameResult(0, (), ())
    vectors = 1 - 2 * orientation_bits(np.arange(1 << n, dtype=np.int64), n)
    values = vectors @ m.entries @ vectors.T
    i, j = np.unravel_index(int(np.argmax(values)), values.shape)
    return GameResult(
        int(values[i, j]),
        tuple(int(v) for v in vectors[i]),
        tuple(int(v) for v in vectors[j]),
    )


def gb_greedy(m: SignMatrix, seed: Seed = None) -> GameResult:
    """Uniform random y, then x_i = sign(row_i . y)."""
    rng = make_rng(seed)
    y = rng.choice(np.array([1, -1], dtype=np.int64), size=m.n)
    inner = m.entries @ y
    x = _signs(inner)
    return GameResult(int(np.abs(inner).sum()), tuple(int(v) for v in x), tuple(int(v) for v in y))


def _greedy_trial(task) -> int:
    entries, seed = task
    return gb_greedy(SignMatrix(entries), seed).value


def greedy_monte_carlo(
    m: SignMatrix,
    trials: int,
    seed: Seed = None,
    jobs: Optional[int] = None,
) -> Tuple[float, float]:
    """Sample mean and standard error of gb_greedy over independent per-trial seeds."""
    if trials < 1:
        raise TanglegramError("trials must be positive")
    tasks = [(m.entries, child) for child in spawn_seeds(seed, trials)]
    values = np.asarray(run_tasks(_greedy_trial, tasks, jobs), dtype=float)
    if trials < 2:
        return float(values.mean()), float("nan")
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(trials))


def greedy_reference(n: int) -> float:
    """sqrt(2/pi) n^(3/2), the leading term of the greedy expectation."""
    return math.sqrt(2 / math.pi) * n ** 1.5


def negate_columns(m: SignMatrix, y: Sequence[int]) -> SignMatrix:
    """a'_ij = a_ij y_j"""
    return SignMatrix(m.entries * _as_signs(y, m.n, "y")[None, :])


def random_sign_matrix(n: int, seed: Seed = None) -> SignMatrix:
    if n < 1:
        raise TanglegramError("matrix size must be positive")
    rng = make_rng(seed)
    return SignMatrix(rng.choice(np.array([1, -1], dtype=np.int64), size=(n, n)))


def parse_sign_matrix(text: str) -> SignMatrix:
    """Whitespace-separated rows of +1 / -1 (a bare 1 is read as +1)."""
    rows = []
    for line_no, line in enumerate(text.strip().splitlines(), 1):
        tokens = line.split()
        if not tokens:
            continue
        try:
            row = [int(tok) for tok in tokens]
        except ValueError as e:
            raise FormatError(f"line {line_no}: entries must be +1 or -1") from e
        if any(v not in (1, -1) for v in row):
            raise FormatError(f"line {line_no}: entries must be +1 or -1")
        rows.append(row)
    if not rows or any(len(row) != len(rows) for row in rows):
        raise FormatError("sign matrix must be square and non-empty")
    return SignMatrix(np.array(rows, dtype=np.int64))


def format_sign_matrix(m: SignMatrix) -> str:
    return "".join(" ".join(f"{v:+d}" for v in row) + "\n" for row in m.entries)


# --- bridge to the decomposition matrix ----------------------------------

@dataclass(frozen=True, eq=False)
class BridgeReport:
    """
    The integer matrix a_xu of a layout with its vertex labels. Unlike a sign
    matrix most cells are 0, which is why the +-1 game bounds do not carry
    over directly.
    """
    matrix: np.ndarray
    row_vertices: Tuple[int, ...]
    col_vertices: Tuple[int, ...]
    zero_fraction: float
    special_row_sums: Dict[int, int]
    total: int


def from_decomposition(m: DecompositionMatrix) -> BridgeReport:
    entries = m.entries.copy()
    right = m.base.tanglegram.right
    special = sorted(special_report(right).special)
    zero_fraction = float((entries == 0).mean()) if entries.size else 0.0
    return BridgeReport(
        matrix=entries,
        row_vertices=m.row_vertices,
        col_vertices=m.col_vertices,
        zero_fraction=zero_fraction,
        special_row_sums={x: m.row_sum(x) for x in special},
        total=int(entries.sum()),
    )
