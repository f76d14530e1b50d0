import itertools

import numpy as np
import pytest

from conftest import all_drawings, drawing, quadratic_crossings
from tanglegram.errors import FormatError, TanglegramError, UnknownLeafError, UnknownVertexError
from tanglegram.tangle import (
    FenwickTree,
    Layout,
    SwitchVector,
    Tanglegram,
    apply_switches,
    batch_crossings,
    canonical_form,
    canonical_tanglegram,
    chi,
    count_inversions,
    cr_via_decomposition,
    crossings,
    decomposition,
    flip_all,
    flip_set,
    is_isomorphic,
    leaf_sequences,
    mean_random_crossings,
    pair_count,
    parse_tanglegram,
    positions,
    random_instance,
    random_switch_vector,
    read_tgl,
    serialize_layout,
    spawn_seeds,
    switch,
    write_tgl,
)
from tanglegram.tree import caterpillar, complete_tree, format_tree, lca, parse_tree, relabel

T2_TEXT = """TGL 1
n 4
L ((0,1),(2,3))
R ((0,1),(2,3))
M 0-0 1-2 2-1 3-3
"""


def _random_layouts(count, sizes, seed):
    rng = np.random.default_rng(seed)
    for child in spawn_seeds(seed, count):
        yield random_instance(int(rng.choice(sizes)), child)


# --- .tgl ------------------------------------------------------------------

def test_parse_tanglegram():
    d = parse_tanglegram(T2_TEXT)
    assert d.n == 4
    assert d.tanglegram.sigma == (0, 2, 1, 3)
    assert d.left_sequence == (0, 1, 2, 3)
    assert d.pi == (0, 2, 1, 3)
    assert crossings(d) == 1


def test_written_child_order_is_the_layout():
    text = T2_TEXT.replace("L ((0,1),(2,3))", "L ((2,3),(1,0))")
    d = parse_tanglegram(text)
    assert d.left_sequence == (2, 3, 1, 0)
    assert serialize_layout(d) == text


def test_tgl_file_roundtrip(tmp_path):
    d = random_instance(9, seed=4)
    path = str(tmp_path / "sub" / "x.tgl")
    write_tgl(path, d)
    back = read_tgl(path)
    assert back.left_sequence == d.left_sequence
    assert back.right_sequence == d.right_sequence
    assert back.tanglegram.sigma == d.tanglegram.sigma


def test_tgl_roundtrip_deep_trees(tmp_path):
    tree = caterpillar(300)
    t = Tanglegram(tree, tree, tuple(range(299, -1, -1)))
    d = Layout(t, (1,) * 299, tree.zero_orientation())
    path = str(tmp_path / "deep.tgl")
    write_tgl(path, d)
    back = read_tgl(path)
    assert serialize_layout(back) == serialize_layout(d)
    assert crossings(back) == 0


def test_read_tgl_rejects_non_utf8(tmp_path):
    path = tmp_path / "bad.tgl"
    path.write_bytes(T2_TEXT.encode("ascii").replace(b"M 0-0", b"M \xff\xfe0-0"))
    with pytest.raises(FormatError):
        read_tgl(str(path))


@pytest.mark.parametrize("text", [
    T2_TEXT.replace("TGL 1", "TGL 2"),
    T2_TEXT.replace("n 4", "n 5"),
    T2_TEXT.replace("n 4", "n four"),
    T2_TEXT.replace("M 0-0 1-2 2-1 3-3", "M 0-0 1-2 2-1"),
    T2_TEXT.replace("M 0-0 1-2 2-1 3-3", "M 0-0 1-2 2-2 3-3"),
    T2_TEXT.replace("M 0-0 1-2 2-1 3-3", "M 0-0 1-2 1-1 3-3"),
    T2_TEXT.replace("M 0-0 1-2 2-1 3-3", "M 0-0 1:2 2-1 3-3"),
    T2_TEXT.replace("R ((0,1),(2,3))", "R ((0,1),(2,3)"),
    T2_TEXT.replace("L ", "X "),
    "TGL 1\nn 1\n",
])
def test_parse_tanglegram_rejects(text):
    with pytest.raises(FormatError):
        parse_tanglegram(text)


def test_tanglegram_validation():
    t = complete_tree(1)
    with pytest.raises(TanglegramError):
        Tanglegram(t, complete_tree(2), (0, 1))
    with pytest.raises(TanglegramError):
        Tanglegram(t, t, (0, 0))
    with pytest.raises(TanglegramError):
        Layout(Tanglegram(t, t, (0, 1)), (0, 0), (0,))
    with pytest.raises(TanglegramError):
        Layout(Tanglegram(t, t, (0, 1)), (2,), (0,))


# --- crossings -------------------------------------------------------------

def test_fenwick_prefix_sums():
    fenwick = FenwickTree(8)
    for i in (1, 3, 3, 7):
        fenwick.add(i)
    assert [fenwick.prefix_sum(i) for i in range(9)] == [0, 0, 1, 1, 3, 3, 3, 3, 4]


def test_count_inversions_against_pairs():
    rng = np.random.default_rng(0)
    for n in (0, 1, 2, 5, 17, 40):
        perm = [int(p) for p in rng.permutation(n)]
        naive = sum(perm[i] > perm[j] for i, j in itertools.combinations(range(n), 2))
        assert count_inversions(perm) == naive


def test_crossings_against_definition():
    for d in _random_layouts(200, (1, 2, 3, 8, 15, 24), seed=1):
        value = crossings(d)
        assert value == quadratic_crossings(d)
        assert 0 <= value <= pair_count(d.n)


def test_batch_crossings_matches_layouts():
    d = random_instance(12, seed=8)
    t = d.tanglegram
    rng = np.random.default_rng(8)
    left = rng.integers(0, 2, size=(30, len(t.left.internal)))
    right = rng.integers(0, 2, size=(30, len(t.right.internal)))
    values = batch_crossings(t, left, right)
    for k in range(30):
        layout = Layout(t, tuple(int(b) for b in left[k]), tuple(int(b) for b in right[k]))
        assert values[k] == crossings(layout)


def test_chi(crossed_cherries):
    assert chi(crossed_cherries, 0, 1) == 1
    assert chi(switch(crossed_cherries, "left", 0), 0, 1) == -1
    with pytest.raises(TanglegramError):
        chi(crossed_cherries, 1, 1)
    with pytest.raises(UnknownLeafError):
        chi(crossed_cherries, 0, 5)


def test_crossings_sum_chi():
    d = random_instance(10, seed=12)
    total = sum((1 + chi(d, e, f)) // 2 for e, f in itertools.combinations(range(d.n), 2))
    assert total == crossings(d)


def test_chi_follows_switch_vectors():
    for seed in range(100):
        d0 = random_instance(9, seed=seed)
        t = d0.tanglegram
        s = random_switch_vector(t, seed=seed + 1000)
        d = apply_switches(d0, s)
        for e, f in itertools.combinations(range(t.n), 2):
            x = t.right.internal_index[lca(t.right, t.sigma[e], t.sigma[f])]
            u = t.left.internal_index[lca(t.left, e, f)]
            assert chi(d, e, f) == s.alpha[x] * s.beta[u] * chi(d0, e, f)


def test_leaf_sequences_and_positions():
    d = parse_tanglegram(T2_TEXT.replace("R ((0,1),(2,3))", "R ((3,2),(0,1))"))
    assert leaf_sequences(d) == ((0, 1, 2, 3), (3, 2, 0, 1))
    assert positions(d, "right") == (2, 3, 1, 0)
    with pytest.raises(TanglegramError):
        positions(d, "middle")


# --- switches --------------------------------------------------------------

def test_switch_is_an_involution():
    d = random_instance(10, seed=2)
    for side in ("left", "right"):
        for v in d.tanglegram.tree(side).internal:
            once = switch(d, side, v)
            assert once.orientation(side) != d.orientation(side)
            assert switch(once, side, v).orientation(side) == d.orientation(side)


def test_switch_rejects_leaves():
    d = random_instance(5, seed=2)
    leaf = d.tanglegram.left.leaf_vertex[0]
    with pytest.raises(UnknownVertexError):
        switch(d, "left", leaf)


def test_flip_set_composes_switches():
    d = random_instance(12, seed=6)
    chosen = d.tanglegram.right.internal[::3]
    step = d
    for v in chosen:
        step = switch(step, "right", v)
    assert flip_set(d, "right", chosen).orient_right == step.orient_right


def test_flip_all_reverses_left_sequence():
    d = random_instance(14, seed=9)
    assert flip_all(d, "left").left_sequence == d.left_sequence[::-1]
    assert flip_all(d, "left").right_sequence == d.right_sequence


def test_flip_identity():
    for d in _random_layouts(1000, (2, 5, 9, 16, 32), seed=21):
        assert crossings(flip_all(d, "left")) == pair_count(d.n) - crossings(d)


# --- decomposition ---------------------------------------------------------

def test_decomposition_shape_and_lookup():
    d = parse_tanglegram(T2_TEXT)
    m = decomposition(d)
    assert m.entries.shape == (3, 3)
    right, left = d.tanglegram.right, d.tanglegram.left
    # pairs (0, 3) and (1, 2) have both lcas at the roots; only (1, 2) crosses
    assert m.entry(right.root, left.root) == 0
    assert m.row_sum(right.root) + m.row_sum(1) + m.row_sum(4) == int(m.entries.sum())
    with pytest.raises(UnknownVertexError):
        m.entry(2, left.root)
    with pytest.raises(UnknownVertexError):
        m.col_sum(5)


def test_decomposition_total():
    for d in _random_layouts(100, (2, 7, 20), seed=5):
        m = decomposition(d)
        assert int(m.entries.sum()) == 2 * crossings(d) - pair_count(d.n)


def test_decomposition_identity():
    for k, d in enumerate(_random_layouts(1000, (2, 3, 6, 11, 20, 32), seed=33)):
        s = random_switch_vector(d.tanglegram, seed=k)
        m = decomposition(d)
        assert cr_via_decomposition(m, s) == crossings(apply_switches(d, s))


def test_identity_switch_vector_keeps_crossings():
    d = random_instance(17, seed=3)
    s = SwitchVector.identity(d.tanglegram)
    assert cr_via_decomposition(decomposition(d), s) == crossings(d)
    assert apply_switches(d, s).orient_left == d.orient_left


def test_switch_vector_validation():
    d = random_instance(6, seed=3)
    with pytest.raises(TanglegramError):
        SwitchVector((1, 0), (1,))
    with pytest.raises(TanglegramError):
        cr_via_decomposition(decomposition(d), SwitchVector((1,), (1,)))
    with pytest.raises(TanglegramError):
        apply_switches(d, SwitchVector((1,), (1,)))


# --- random instances ------------------------------------------------------

def test_random_instance_is_seeded():
    a = random_instance(16, seed=7)
    b = random_instance(16, seed=7)
    assert serialize_layout(a) == serialize_layout(b)
    assert serialize_layout(a) != serialize_layout(random_instance(16, seed=8))
    with pytest.raises(TanglegramError):
        random_instance(0)


def test_random_instance_large():
    d = random_instance(600, seed=1)
    assert d.n == 600
    assert sorted(d.left_sequence) == list(range(600))
    assert parse_tanglegram(serialize_layout(d)).pi == d.pi


def test_random_layout_expectation():
    t = random_instance(16, seed=2024).tanglegram
    mean, stderr = mean_random_crossings(t, 10_000, seed=99)
    assert abs(mean - pair_count(16) / 2) <= 3 * stderr


# --- isomorphism -----------------------------------------------------------

def _relabelled_copy(t, seed):
    """Same tanglegram with both leaf sets renamed and the trees rewritten in another child order."""
    rng = np.random.default_rng(seed)
    p = [int(v) for v in rng.permutation(t.n)]
    q = [int(v) for v in rng.permutation(t.n)]
    left = relabel(t.left, p)
    right = relabel(t.right, q)
    sigma = [0] * t.n
    for l, r in enumerate(t.sigma):
        sigma[p[l]] = q[r]
    left = parse_tree(_shuffled_text(left, rng))
    right = parse_tree(_shuffled_text(right, rng))
    return Tanglegram(left, right, tuple(sigma))


def _shuffled_text(tree, rng):
    return format_tree(tree, tuple(int(b) for b in rng.integers(0, 2, size=len(tree.internal))))


def test_isomorphic_copies():
    for seed in range(30):
        t = random_instance(7, seed=seed).tanglegram
        copy = _relabelled_copy(t, seed + 100)
        assert is_isomorphic(t, copy)
        assert canonical_form(t) == canonical_form(copy)


def test_non_isomorphic():
    tree = complete_tree(2)
    planar = Tanglegram(tree, tree, (0, 1, 2, 3))
    crossed = Tanglegram(tree, tree, (0, 2, 1, 3))
    assert not is_isomorphic(planar, crossed)
    assert not is_isomorphic(planar, Tanglegram(parse_tree("(((0,1),2),3)"), tree, (0, 1, 2, 3)))
    assert not is_isomorphic(planar, random_instance(5, seed=1).tanglegram)


def test_canonical_tanglegram_is_a_fixed_point():
    for seed in range(20):
        t = random_instance(6, seed=seed).tanglegram
        c = canonical_tanglegram(t)
        assert is_isomorphic(t, c)
        assert canonical_form(c) == canonical_form(t)
        assert canonical_tanglegram(c).sigma == c.sigma


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_is_isomorphic_matches_layout_search(n):
    pool = [random_instance(n, seed=seed).tanglegram for seed in range(12)]
    pool += [_relabelled_copy(t, seed + 500) for seed, t in enumerate(pool[:6])]
    pictures = [all_drawings(t) for t in pool]
    for t1, own in zip(pool, pictures):
        picture = drawing(t1.default_layout())
        assert picture in own
        for t2, other in zip(pool, pictures):
            assert is_isomorphic(t1, t2) == (picture in other)
