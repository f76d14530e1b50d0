import logging
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import pyparsing as pp

from .errors import FormatError, SizeLimitError, TanglegramError, UnknownLeafError, UnknownVertexError

logger = logging.getLogger(__name__)

# A nested tree is a leaf label or a pair of nested trees.
Nested = Union[int, Tuple["Nested", "Nested"]]
Children = Optional[Tuple[int, int]]

LEAF_SHAPE = "*"
# 2179 shapes at 14 leaves
H_EXACT_LIMIT = 14


@dataclass(frozen=True, eq=False)
class Tree:
    """
    Rooted binary tree with leaves labelled 0..n-1.

    Vertices are integers 0..len(children)-1. ``children[v]`` is None for a
    leaf and the pair (first, second) otherwise. That pair is only a reference
    order: a Tree is unordered, and the top-to-bottom order of a drawing comes
    from a Layout's orientation bits. Equality and hashing go through the
    canonical (sorted) text, so two Trees differing only in child order are equal.
    """
    children: Tuple[Children, ...]
    leaf_labels: Tuple[int, ...]
    root: int = 0

    def __post_init__(self):
        size = len(self.children)
        if size == 0 or len(self.leaf_labels) != size:
            raise TanglegramError("tree needs one label slot per vertex")
        if not 0 <= self.root < size:
            raise TanglegramError(f"root {self.root} is not a vertex")

        seen = [False] * size
        stack = [self.root]
        while stack:
            v = stack.pop()
            if seen[v]:
                raise TanglegramError(f"vertex {v} is reachable twice")
            seen[v] = True
            kids = self.children[v]
            if kids is None:
                if self.leaf_labels[v] < 0:
                    raise TanglegramError(f"leaf vertex {v} has no label")
                continue
            if len(kids) != 2:
                raise TanglegramError(f"vertex {v} has {len(kids)} children")
            if self.leaf_labels[v] != -1:
                raise TanglegramError(f"internal vertex {v} carries a leaf label")
            for c in kids:
                if not 0 <= c < size:
                    raise TanglegramError(f"child {c} of vertex {v} is not a vertex")
                stack.append(c)
        if not all(seen):
            raise TanglegramError("tree is not connected")

        labels = sorted(l for l in self.leaf_labels if l >= 0)
        if labels != list(range(len(labels))):
            raise TanglegramError("leaf labels must be exactly 0..n-1")

    # --- structure -----------------------------------------------------

    @property
    def n(self) -> int:
        """Number of leaves."""
        return len(self.leaf_vertex)

    def is_leaf(self, v: int) -> bool:
        self._check_vertex(v)
        return self.children[v] is None

    @cached_property
    def preorder(self) -> Tuple[int, ...]:
        order = []
        stack = [self.root]
        while stack:
            v = stack.pop()
            order.append(v)
            kids = self.children[v]
            if kids is not None:
                stack.append(kids[1])
                stack.append(kids[0])
        return tuple(order)

    @cached_property
    def parent(self) -> Tuple[int, ...]:
        par = [-1] * len(self.children)
        for v, kids in enumerate(self.children):
            if kids is not None:
                par[kids[0]] = v
                par[kids[1]] = v
        return tuple(par)

    @cached_property
    def depth(self) -> Tuple[int, ...]:
        dep = [0] * len(self.children)
        for v in self.preorder:
            if v != self.root:
                dep[v] = dep[self.parent[v]] + 1
        return tuple(dep)

    @cached_property
    def leaf_vertex(self) -> Tuple[int, ...]:
        """leaf_vertex[label] is the vertex carrying that label."""
        by_label = {l: v for v, l in enumerate(self.leaf_labels) if l >= 0}
        return tuple(by_label[l] for l in range(len(by_label)))

    @cached_property
    def internal(self) -> Tuple[int, ...]:
        """Internal vertices in preorder; orientation bits are aligned with this tuple."""
        return tuple(v for v in self.preorder if self.children[v] is not None)

    @cached_property
    def internal_index(self) -> Dict[int, int]:
        return {v: i for i, v in enumerate(self.internal)}

    @cached_property
    def leaves_below(self) -> Tuple[Tuple[int, ...], ...]:
        """Leaf labels under each vertex, in reference order."""
        below: List[Tuple[int, ...]] = [()] * len(self.children)
        for v in reversed(self.preorder):
            kids = self.children[v]
            if kids is None:
                below[v] = (self.leaf_labels[v],)
            else:
                below[v] = below[kids[0]] + below[kids[1]]
        return tuple(below)

    @cached_property
    def leaf_count(self) -> Tuple[int, ...]:
        return tuple(len(b) for b in self.leaves_below)

    @cached_property
    def shape_keys(self) -> Tuple[str, ...]:
        """Canonical unlabelled serialization of the subtree at each vertex."""
        keys: List[str] = [""] * len(self.children)
        for v in reversed(self.preorder):
            kids = self.children[v]
            if kids is None:
                keys[v] = LEAF_SHAPE
            else:
                a, b = sorted((keys[kids[0]], keys[kids[1]]))
                keys[v] = f"({a},{b})"
        return tuple(keys)

    @cached_property
    def labelled_keys(self) -> Tuple[str, ...]:
        """Canonical labelled serialization: children sorted by (shape, labelled text)."""
        keys: List[str] = [""] * len(self.children)
        for v in reversed(self.preorder):
            kids = self.children[v]
            if kids is None:
                keys[v] = str(self.leaf_labels[v])
            else:
                first, second = self._sorted_children(v, keys)
                keys[v] = f"({keys[first]},{keys[second]})"
        return tuple(keys)

    def _sorted_children(self, v: int, labelled: Sequence[str]) -> Tuple[int, int]:
        a, b = self.children[v]
        ka = (self.shape_keys[a], labelled[a])
        kb = (self.shape_keys[b], labelled[b])
        return (a, b) if ka <= kb else (b, a)

    def _check_vertex(self, v: int):
        if not isinstance(v, (int, np.integer)) or not 0 <= v < len(self.children):
            raise UnknownVertexError(f"unknown vertex {v}")

    def __eq__(self, other):
        if not isinstance(other, Tree):
            return NotImplemented
        return canonical_text(self) == canonical_text(other)

    def __hash__(self):
        return hash(canonical_text(self))

    def __repr__(self):
        return f"Tree({format_tree(self, self.zero_orientation())!r})"

    def zero_orientation(self) -> Tuple[int, ...]:
        return (0,) * len(self.internal)


# --- construction ------------------------------------------------------

def tree_from_nested(nested: Nested) -> Tree:
    """Build a Tree from nested pairs; the nesting order becomes the reference order."""
    slots: List[Optional[List[int]]] = []
    labels: List[int] = []
    # (node, parent vertex, child slot), popped in preorder
    stack: List[Tuple[Nested, int, int]] = [(nested, -1, 0)]
    while stack:
        node, parent, slot = stack.pop()
        v = len(slots)
        if parent >= 0:
            slots[parent][slot] = v
        if isinstance(node, tuple):
            if len(node) != 2:
                raise TanglegramError(f"vertex with {len(node)} children")
            slots.append([-1, -1])
            labels.append(-1)
            stack.append((node[1], v, 1))
            stack.append((node[0], v, 0))
        else:
            slots.append(None)
            labels.append(int(node))
    return Tree(tuple(None if s is None else (s[0], s[1]) for s in slots), tuple(labels), 0)


def caterpillar(n: int) -> Tree:
    """((..((0,1),2)..),n-1)"""
    if n < 1:
        raise TanglegramError("leaf count must be positive")
    nested: Nested = 0
    for label in range(1, n):
        nested = (nested, label)
    return tree_from_nested(nested)


def complete_tree(height: int) -> Tree:
    """Complete binary tree with 2**height leaves labelled 0.. top to bottom."""
    level: List[Nested] = list(range(2 ** height))
    while len(level) > 1:
        level = [(level[i], level[i + 1]) for i in range(0, len(level), 2)]
    return tree_from_nested(level[0])


@lru_cache(maxsize=None)
def _catalan(k: int) -> int:
    return math.comb(2 * k, k) // (k + 1)


def random_plane_tree(n: int, rng: np.random.Generator) -> Tree:
    """
    Uniformly random plane binary tree with n leaves, labelled in leaf order.
    The first child receives k leaves with probability C(k-1)C(n-k-1)/C(n-1).
    """
    if n < 1:
        raise TanglegramError("leaf count must be positive")
    slots: List[Optional[List[int]]] = []
    labels: List[int] = []
    next_label = 0
    # (leaves, parent vertex, child slot); first children are grown before second ones
    stack: List[Tuple[int, int, int]] = [(n, -1, 0)]
    while stack:
        m, parent, slot = stack.pop()
        v = len(slots)
        if parent >= 0:
            slots[parent][slot] = v
        if m == 1:
            slots.append(None)
            labels.append(next_label)
            next_label += 1
            continue
        # exact int division: the Catalan numbers themselves overflow float
        total = _catalan(m - 1)
        p = np.array([_catalan(k - 1) * _catalan(m - k - 1) / total for k in range(1, m)])
        k = int(rng.choice(m - 1, p=p / p.sum())) + 1
        slots.append([-1, -1])
        labels.append(-1)
        stack.append((m - k, v, 1))
        stack.append((k, v, 0))
    return Tree(tuple(None if s is None else (s[0], s[1]) for s in slots), tuple(labels), 0)


# --- text format -------------------------------------------------------

# Tokens only; nesting is tracked with an explicit stack so depth is unbounded.
_TREE_TOKEN = pp.Word(pp.nums) | pp.Char("(,)")


def _tree_tokens(text: str) -> Iterator[Tuple[str, int]]:
    """Yield (token, column); anything between tokens other than whitespace is an error."""
    end = 0
    for toks, start, stop in _TREE_TOKEN.scan_string(text):
        if text[end:start].strip():
            raise FormatError(f"malformed tree expression {text!r} at column {pp.col(end, text)}")
        yield toks[0], pp.col(start, text)
        end = stop
    if text[end:].strip():
        raise FormatError(f"malformed tree expression {text!r} at column {pp.col(end, text)}")


def _nested_from_text(text: str) -> Nested:
    open_groups: List[List[Nested]] = []
    result: Optional[Nested] = None
    prev = None

    def place(node: Nested, col: int):
        nonlocal result
        if open_groups:
            open_groups[-1].append(node)
        elif result is None:
            result = node
        else:
            raise FormatError(f"malformed tree expression {text!r} at column {col}")

    for tok, col in _tree_tokens(text):
        if tok == "(" or tok.isdigit():
            ok = prev in (None, "(", ",")
        else:
            ok = prev in ("leaf", ")") and bool(open_groups)
        if not ok:
            raise FormatError(f"malformed tree expression {text!r} at column {col}")
        if tok == "(":
            open_groups.append([])
        elif tok == ")":
            items = open_groups.pop()
            if len(items) != 2:
                raise FormatError(f"vertex with {len(items)} children")
            place((items[0], items[1]), col)
        elif tok != ",":
            place(int(tok), col)
        prev = "leaf" if tok.isdigit() else tok
    if open_groups or result is None:
        raise FormatError(f"malformed tree expression {text!r} at column {len(text) + 1}")
    return result


def parse_tree(text: str) -> Tree:
    """
    Parse "((0,1),(2,3))"-style expressions. The written child order becomes the
    reference order, so the all-zero orientation reproduces the text.
    """
    nested = _nested_from_text(text)

    flat: List[int] = []
    stack = [nested]
    while stack:
        node = stack.pop()
        if isinstance(node, tuple):
            stack.extend(node)
        else:
            flat.append(node)
    if len(set(flat)) != len(flat):
        raise FormatError(f"duplicate leaf labels in {text!r}")
    if sorted(flat) != list(range(len(flat))):
        raise FormatError(f"leaf labels in {text!r} are not 0..{len(flat) - 1}")
    return tree_from_nested(nested)


def format_tree(t: Tree, orientation: Optional[Sequence[int]] = None) -> str:
    """
    Serialize t. Without an orientation the canonical sorted form is written;
    with one, children are written in the drawn order (bit 1 swaps).
    """
    if orientation is None:
        return t.labelled_keys[t.root]
    _check_orientation(t, orientation)

    parts: List[str] = []
    # ints are vertices still to write, strs are punctuation
    stack: List[Union[int, str]] = [t.root]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            parts.append(item)
            continue
        kids = t.children[item]
        if kids is None:
            parts.append(str(t.leaf_labels[item]))
            continue
        a, b = kids
        if orientation[t.internal_index[item]]:
            a, b = b, a
        parts.append("(")
        stack.extend((")", b, ",", a))
    return "".join(parts)


def canonical_text(t: Tree) -> str:
    return t.labelled_keys[t.root]


def shape_key(t: Tree) -> str:
    return t.shape_keys[t.root]


def _check_orientation(t: Tree, orientation: Sequence[int]):
    if len(orientation) != len(t.internal):
        raise TanglegramError(
            f"orientation has {len(orientation)} bits, tree has {len(t.internal)} internal vertices"
        )


def leaf_order(t: Tree, orientation: Sequence[int]) -> Tuple[int, ...]:
    """Leaf labels top to bottom under the given orientation bits."""
    _check_orientation(t, orientation)
    order = []
    stack = [t.root]
    while stack:
        v = stack.pop()
        kids = t.children[v]
        if kids is None:
            order.append(t.leaf_labels[v])
            continue
        a, b = kids
        if orientation[t.internal_index[v]]:
            a, b = b, a
        stack.append(b)
        stack.append(a)
    return tuple(order)


def shape_order(t: Tree) -> Tuple[int, ...]:
    """
    Leaf labels in the order of the canonical plane embedding (children sorted
    by shape key, ties kept in reference order). Isomorphic trees get matching
    sequences under some isomorphism.
    """
    keys = t.shape_keys
    order = []
    stack = [t.root]
    while stack:
        v = stack.pop()
        kids = t.children[v]
        if kids is None:
            order.append(t.leaf_labels[v])
            continue
        a, b = kids
        if keys[b] < keys[a]:
            a, b = b, a
        stack.append(b)
        stack.append(a)
    return tuple(order)


def relabel(t: Tree, mapping: Sequence[int]) -> Tree:
    """Same tree with leaf label l replaced by mapping[l]."""
    labels = tuple(mapping[l] if l >= 0 else -1 for l in t.leaf_labels)
    return Tree(t.children, labels, t.root)


# --- shapes ------------------------------------------------------------

@lru_cache(maxsize=None)
def _shapes(n: int) -> Tuple[Tuple[str, object], ...]:
    # (shape key, nested shape with None leaves), canonical child order
    if n == 1:
        return ((LEAF_SHAPE, None),)
    out = []
    for k in range(1, n // 2 + 1):
        small, large = _shapes(k), _shapes(n - k)
        for i, a in enumerate(small):
            for j, b in enumerate(large):
                if k == n - k and j < i:
                    continue
                first, second = sorted((a, b), key=lambda s: s[0])
                out.append((f"({first[0]},{second[0]})", (first[1], second[1])))
    return tuple(out)


def _label_in_order(shape) -> Nested:
    counter = iter(range(1 << 30))

    def walk(node):
        if node is None:
            return next(counter)
        first = walk(node[0])
        return (first, walk(node[1]))

    return walk(shape)


def enumerate_shapes(n: int) -> Iterator[Tree]:
    """One canonical representative per unordered shape with n leaves, leaves labelled top to bottom."""
    if n < 1:
        raise TanglegramError("leaf count must be positive")
    for _, shape in _shapes(n):
        yield tree_from_nested(_label_in_order(shape))


@lru_cache(maxsize=None)
def shape_count(n: int) -> int:
    """Wedderburn-Etherington number: s(n) = sum_{k<n/2} s(k)s(n-k) + [n even] s(n/2)(s(n/2)+1)/2."""
    if n < 1:
        raise TanglegramError("leaf count must be positive")
    if n == 1:
        return 1
    total = sum(shape_count(k) * shape_count(n - k) for k in range(1, (n + 1) // 2))
    if n % 2 == 0:
        half = shape_count(n // 2)
        total += half * (half + 1) // 2
    return total


# --- lca and counts ----------------------------------------------------

def _leaf_vertex_of(t: Tree, label: int) -> int:
    if not isinstance(label, (int, np.integer)) or not 0 <= label < t.n:
        raise UnknownLeafError(f"unknown leaf label {label}")
    return t.leaf_vertex[label]


def lca(t: Tree, a: int, b: int) -> int:
    """Deepest common ancestor of the leaves labelled a and b."""
    u = _leaf_vertex_of(t, a)
    v = _leaf_vertex_of(t, b)
    depth, parent = t.depth, t.parent
    while depth[u] > depth[v]:
        u = parent[u]
    while depth[v] > depth[u]:
        v = parent[v]
    while u != v:
        u, v = parent[u], parent[v]
    return u


def lca_matrix(t: Tree) -> np.ndarray:
    """n x n array of lca vertex ids indexed by leaf labels."""
    n = t.n
    m = np.empty((n, n), dtype=np.int64)
    for v in t.internal:
        a, b = t.children[v]
        first = np.array(t.leaves_below[a])
        second = np.array(t.leaves_below[b])
        m[np.ix_(first, second)] = v
        m[np.ix_(second, first)] = v
    m[np.arange(n), np.arange(n)] = t.leaf_vertex
    return m


def leaf_descendant_count(t: Tree, v: int) -> int:
    t._check_vertex(v)
    return t.leaf_count[v]


# --- special vertices and h(n) -----------------------------------------

@dataclass(frozen=True)
class SpecialVertexReport:
    special: FrozenSet[int]
    psi_per_vertex: Dict[int, int]
    psi_total: int


def leaf_neighbor_vertices(t: Tree) -> FrozenSet[int]:
    """Internal vertices with at least one leaf child."""
    return frozenset(
        v for v in t.internal
        if any(t.children[c] is None for c in t.children[v])
    )


def special_report(t: Tree) -> SpecialVertexReport:
    """
    psi(x) = 1 for internal x with a leaf child and an even number of leaf
    descendants. psi is taken as 0 everywhere else, so the total may be summed
    over all vertices.
    """
    with_leaf = leaf_neighbor_vertices(t)
    psi = {v: int(v in with_leaf and t.leaf_count[v] % 2 == 0) for v in range(len(t.children))}
    special = frozenset(v for v, bit in psi.items() if bit)
    return SpecialVertexReport(special=special, psi_per_vertex=psi, psi_total=len(special))


def h_formula(n: int) -> int:
    if n < 1:
        raise TanglegramError("leaf count must be positive")
    return 0 if n == 1 else n // 4 + 1


def h_exact(n: int) -> Tuple[int, Tree]:
    """Minimum psi total over all shapes with n leaves, and the first shape attaining it."""
    if n < 1:
        raise TanglegramError("leaf count must be positive")
    if n > H_EXACT_LIMIT:
        raise SizeLimitError("exhaustive h(n)", n, H_EXACT_LIMIT)
    best: Optional[Tuple[int, Tree]] = None
    for t in enumerate_shapes(n):
        value = special_report(t).psi_total
        if best is None or value < best[0]:
            best = (value, t)
    logger.debug("h_exact(%d) = %d over %d shapes", n, best[0], shape_count(n))
    return best


def realizer(n: int) -> Tree:
    """
    A tree with n leaves whose psi total equals h_formula(n), built recursively:
    a leaf beside a realizer of n-1 leaves, except for n = 4q+2 (q >= 1) where a
    3-leaf tree sits beside a realizer of n-3 leaves.
    """
    if n < 1:
        raise TanglegramError("leaf count must be positive")
    # iterative to keep deep caterpillar-like realizers off the call stack
    parts: List[int] = []
    m = n
    while m > 2:
        if m % 4 == 2:
            parts.append(3)
            m -= 3
        else:
            parts.append(1)
            m -= 1
    counter = iter(range(n))
    nested: Nested = next(counter) if m == 1 else (next(counter), next(counter))
    for size in reversed(parts):
        if size == 1:
            side: Nested = next(counter)
        else:
            side = ((next(counter), next(counter)), next(counter))
        nested = (side, nested)
    return tree_from_nested(nested)


# --- automorphisms -----------------------------------------------------

def symmetric_vertices(t: Tree) -> Tuple[int, ...]:
    """Internal vertices whose two child subtrees are isomorphic."""
    keys = t.shape_keys
    return tuple(v for v in t.internal if keys[t.children[v][0]] == keys[t.children[v][1]])


def automorphism_generators(t: Tree) -> List[Tuple[int, ...]]:
    """One involution per symmetric vertex, swapping its two subtrees."""
    keys = t.shape_keys
    gens = []
    for v in symmetric_vertices(t):
        a, b = t.children[v]
        perm = list(range(t.n))
        for x, y in zip(_subtree_shape_order(t, a, keys), _subtree_shape_order(t, b, keys)):
            perm[x] = y
            perm[y] = x
        gens.append(tuple(perm))
    return gens


def _subtree_shape_order(t: Tree, v: int, keys: Sequence[str]) -> List[int]:
    order = []
    stack = [v]
    while stack:
        u = stack.pop()
        kids = t.children[u]
        if kids is None:
            order.append(t.leaf_labels[u])
            continue
        a, b = kids
        if keys[b] < keys[a]:
            a, b = b, a
        stack.append(b)
        stack.append(a)
    return order


def compose(p: Sequence[int], q: Sequence[int]) -> Tuple[int, ...]:
    """(p o q)[i] = p[q[i]]"""
    return tuple(p[i] for i in q)


def automorphisms(t: Tree) -> List[Tuple[int, ...]]:
    """
    All leaf permutations induced by automorphisms of t; perm[label] is the image.
    The group has 2**k elements for k symmetric vertices. Meant for small trees.
    """
    identity = tuple(range(t.n))
    group = {identity}
    frontier = [identity]
    gens = automorphism_generators(t)
    while frontier:
        nxt = []
        for p in frontier:
            for g in gens:
                q = compose(g, p)
                if q not in group:
                    group.add(q)
                    nxt.append(q)
        frontier = nxt
    return sorted(group)
