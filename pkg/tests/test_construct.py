import pytest

from tanglegram.construct import FIG4_SIGMA, MAX_FAMILY_LEVEL, BinaryWord, FamilyFactory
from tanglegram.errors import SizeLimitError, TanglegramError
from tanglegram.tangle import count_inversions, crossings, pair_count

FAMILY_VALUES = [0, 0, 1, 8, 44]


def test_binary_word():
    w = BinaryWord.from_int(3, 3)
    assert w.bits == (0, 1, 1)
    assert str(w) == "011"
    assert w.reversal().value == 6
    assert w.length == 3
    assert str(BinaryWord(())) == "ε"
    with pytest.raises(TanglegramError):
        BinaryWord.from_int(8, 3)
    with pytest.raises(TanglegramError):
        BinaryWord((0, 2))


def test_bit_reversal():
    assert FamilyFactory.bit_reversal(0) == (0,)
    assert FamilyFactory.bit_reversal(2) == (0, 2, 1, 3)
    assert FamilyFactory.bit_reversal(3) == (0, 4, 2, 6, 1, 5, 3, 7)


def test_bit_reversal_is_an_involution():
    perm = FamilyFactory.bit_reversal(6)
    assert sorted(perm) == list(range(64))
    assert all(perm[perm[x]] == x for x in range(64))


def test_t_family_shape():
    t = FamilyFactory.t_family(3)
    assert t.n == 8
    assert t.sigma == FamilyFactory.bit_reversal(3)
    assert t.left == t.right


def test_d_star_is_the_bit_reversal_drawing():
    d = FamilyFactory.d_star(3)
    assert d.left_sequence == tuple(range(8))
    assert d.pi == FamilyFactory.bit_reversal(3)


@pytest.mark.parametrize("i, value", list(enumerate(FAMILY_VALUES)))
def test_d_star_crossings(i, value):
    assert crossings(FamilyFactory.d_star(i)) == value


def test_crt_formula():
    assert [FamilyFactory.crt_formula(i) for i in range(5)] == FAMILY_VALUES
    for i in range(2, 12):
        n = 1 << i
        # 1/2 C(n,2) - n log2(n) / 4
        assert 4 * FamilyFactory.crt_formula(i) == 2 * pair_count(n) - n * i


def test_omega_recursion_matches_formula():
    for i in range(MAX_FAMILY_LEVEL + 1):
        assert FamilyFactory.omega_recursion(i) == FamilyFactory.crt_formula(i)


def test_bit_reversal_inversions_match_formula():
    for i in range(9):
        assert count_inversions(FamilyFactory.bit_reversal(i)) == FamilyFactory.crt_formula(i)


def test_earlier_lower_bound_is_weaker():
    for i in range(2, 12):
        assert FamilyFactory.earlier_lower_bound(i) <= FamilyFactory.crt_formula(i)


def test_level_limits():
    with pytest.raises(SizeLimitError):
        FamilyFactory.t_family(MAX_FAMILY_LEVEL + 1)
    with pytest.raises(TanglegramError):
        FamilyFactory.t_family(-1)
    with pytest.raises(TanglegramError):
        FamilyFactory.crt_formula(-1)


def test_fig4_layout(fig4):
    assert fig4.n == 8
    assert fig4.tanglegram.sigma == FIG4_SIGMA
    assert fig4.pi == FIG4_SIGMA
    assert crossings(fig4) == 9
