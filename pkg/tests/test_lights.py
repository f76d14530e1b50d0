import math

import numpy as np
import pytest

from tanglegram.errors import FormatError, SizeLimitError, TanglegramError
from tanglegram.lights import (
    GB_EXACT_LIMIT,
    SignMatrix,
    from_decomposition,
    format_sign_matrix,
    game_value,
    gb_bruteforce,
    gb_exact,
    gb_greedy,
    greedy_monte_carlo,
    greedy_reference,
    negate_columns,
    parse_sign_matrix,
    random_sign_matrix,
)
from tanglegram.tangle import crossings, decomposition, pair_count, parse_tanglegram, random_instance

CHECKER = SignMatrix(np.array([[1, -1], [-1, 1]]))


def _expected_greedy(n):
    """n E|S_n| for a sum S_n of n fair signs, n even."""
    return n * n * math.comb(n, n // 2) / 2 ** n


# --- matrices --------------------------------------------------------------

def test_sign_matrix_validation():
    with pytest.raises(TanglegramError):
        SignMatrix(np.array([[1, 0], [1, 1]]))
    with pytest.raises(TanglegramError):
        SignMatrix(np.ones((2, 3)))


def test_parse_and_format():
    m = parse_sign_matrix("+1 -1\n-1 1\n")
    assert np.array_equal(m.entries, CHECKER.entries)
    assert format_sign_matrix(m) == "+1 -1\n-1 +1\n"


@pytest.mark.parametrize("text", ["", "1 2\n1 1", "1 1\n1", "+1 x\n1 1"])
def test_parse_rejects(text):
    with pytest.raises(FormatError):
        parse_sign_matrix(text)


def test_random_sign_matrix_is_seeded():
    a = random_sign_matrix(7, seed=1)
    assert a.n == 7
    assert np.array_equal(a.entries, random_sign_matrix(7, seed=1).entries)
    assert set(np.unique(a.entries)) <= {-1, 1}


# --- exact -----------------------------------------------------------------

def test_gb_exact_examples():
    assert gb_exact(SignMatrix(np.ones((3, 3), dtype=int))).value == 9
    result = gb_exact(CHECKER)
    assert result.value == 4
    assert result.x == (1, -1)
    assert result.y == (1, -1)
    single = gb_exact(SignMatrix(np.array([[-1]])))
    assert single.value == 1
    assert game_value(SignMatrix(np.array([[-1]])), single.x, single.y) == 1


def test_gb_bruteforce_checker():
    result = gb_bruteforce(CHECKER)
    assert (result.value, result.x, result.y) == (4, (1, -1), (1, -1))


def test_gb_exact_matches_bruteforce():
    for k in range(100):
        m = random_sign_matrix(1 + k % 6, seed=k)
        exact = gb_exact(m)
        assert exact.value == gb_bruteforce(m).value
        assert game_value(m, exact.x, exact.y) == exact.value


def test_gb_exact_dominates_grand_sum():
    for k in range(30):
        m = random_sign_matrix(8, seed=100 + k)
        assert gb_exact(m).value >= abs(int(m.entries.sum()))


def test_gb_exact_invariant_under_row_and_column_negation():
    m = random_sign_matrix(7, seed=3)
    value = gb_exact(m).value
    for i in range(7):
        rows = m.entries.copy()
        rows[i] *= -1
        cols = m.entries.copy()
        cols[:, i] *= -1
        assert gb_exact(SignMatrix(rows)).value == value
        assert gb_exact(SignMatrix(cols)).value == value


def test_limits():
    with pytest.raises(SizeLimitError):
        gb_exact(SignMatrix(np.ones((GB_EXACT_LIMIT + 1, GB_EXACT_LIMIT + 1), dtype=int)))
    with pytest.raises(SizeLimitError):
        gb_bruteforce(random_sign_matrix(9, seed=0))


# --- negation --------------------------------------------------------------

def test_negate_columns():
    m = random_sign_matrix(6, seed=2)
    assert np.array_equal(negate_columns(m, (1,) * 6).entries, m.entries)
    y = (1, -1, 1, -1, -1, 1)
    flipped = negate_columns(m, y)
    assert np.array_equal(flipped.entries[:, 1], -m.entries[:, 1])
    with pytest.raises(TanglegramError):
        negate_columns(m, (1, 0, 1, 1, 1, 1))


def test_negate_columns_keeps_value():
    for k in range(100):
        m = random_sign_matrix(5, seed=k)
        y = np.random.default_rng(k).choice((1, -1), size=5)
        assert gb_exact(negate_columns(m, y)).value == gb_exact(m).value


def test_maximum_is_minus_minimum():
    m = random_sign_matrix(5, seed=9)
    # the minimum over sign vectors is the negated maximum with x replaced by -x
    vectors = [np.array(v) for v in np.ndindex(*(2,) * 5)]
    signs = [1 - 2 * v for v in vectors]
    values = [int(x @ m.entries @ y) for x in signs for y in signs]
    assert max(values) == -min(values) == gb_exact(m).value


# --- greedy ----------------------------------------------------------------

def test_gb_greedy_on_all_ones():
    m = SignMatrix(np.ones((5, 5), dtype=int))
    for seed in range(10):
        result = gb_greedy(m, seed)
        assert result.value == 5 * abs(sum(result.y)) >= 0


def test_gb_greedy_below_exact():
    for k in range(100):
        m = random_sign_matrix(2 + k % 11, seed=k)
        greedy = gb_greedy(m, seed=k)
        assert 0 <= greedy.value <= gb_exact(m).value
        assert game_value(m, greedy.x, greedy.y) == greedy.value


def test_majority_rows_are_optimal_for_fixed_y():
    for k in range(50):
        n = 1 + k % 10
        m = random_sign_matrix(n, seed=k)
        result = gb_greedy(m, seed=k)
        for i in range(n):
            x = list(result.x)
            x[i] = -x[i]
            assert game_value(m, x, result.y) <= result.value


def test_greedy_monte_carlo_n30():
    m = random_sign_matrix(30, seed=30)
    mean, stderr = greedy_monte_carlo(m, 200, seed=1)
    assert mean >= 0.7 * greedy_reference(30)
    assert stderr > 0


@pytest.mark.parametrize("n", [40, 60])
def test_greedy_monte_carlo_band(n):
    m = random_sign_matrix(n, seed=n)
    mean, stderr = greedy_monte_carlo(m, 500, seed=n)
    ratio = mean / greedy_reference(n)
    assert 0.6 <= ratio
    # the finite-n expectation sits just under the asymptotic constant
    assert _expected_greedy(n) < greedy_reference(n)
    assert abs(mean - _expected_greedy(n)) <= 4 * stderr


def test_greedy_monte_carlo_is_seeded():
    m = random_sign_matrix(10, seed=0)
    assert greedy_monte_carlo(m, 20, seed=5) == greedy_monte_carlo(m, 20, seed=5)
    with pytest.raises(TanglegramError):
        greedy_monte_carlo(m, 0)


# --- decomposition bridge --------------------------------------------------

def test_bridge_size_two():
    d = parse_tanglegram("TGL 1\nn 2\nL (0,1)\nR (0,1)\nM 0-1 1-0\n")
    report = from_decomposition(decomposition(d))
    assert report.matrix.shape == (1, 1)
    assert report.total == 2 * crossings(d) - 1 == 1
    assert report.special_row_sums == {d.tanglegram.right.root: 1}


def test_bridge_reports():
    for k in range(50):
        d = random_instance(4 + k % 20, seed=k)
        report = from_decomposition(decomposition(d))
        n = d.n
        assert report.matrix.shape == (n - 1, n - 1)
        assert report.row_vertices == d.tanglegram.right.internal
        assert report.col_vertices == d.tanglegram.left.internal
        assert report.total == 2 * crossings(d) - pair_count(n)
        assert 0.0 <= report.zero_fraction <= 1.0
        for value in report.special_row_sums.values():
            assert value % 2 == 1
