from dataclasses import dataclass
from typing import Tuple

from .errors import SizeLimitError, TanglegramError
from .tangle import Layout, Tanglegram, pair_count
from .tree import complete_tree

# n = 2**i and its pair count stay inside 64-bit positions
MAX_FAMILY_LEVEL = 24

# Size-8 witness with crossing number 9, both trees complete of height 3,
# leaves numbered top to bottom. Edges as drawn, left leaf -> right leaf:
FIG4_SIGMA = (
    0,  # 000 - 000
    4,  # 001 - 100
    2,  # 010 - 010
    6,  # 011 - 110
    3,  # 100 - 011
    5,  # 101 - 101
    1,  # 110 - 001
    7,  # 111 - 111
)


@dataclass(frozen=True)
class BinaryWord:
    """Word over {0, 1}; bits[0] is the most significant digit."""
    bits: Tuple[int, ...]

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise TanglegramError("binary words use the digits 0 and 1")

    @classmethod
    def from_int(cls, value: int, length: int) -> "BinaryWord":
        if not 0 <= value < (1 << length):
            raise TanglegramError(f"{value} does not fit in {length} bits")
        return cls(tuple((value >> (length - 1 - k)) & 1 for k in range(length)))

    @property
    def length(self) -> int:
        return len(self.bits)

    @property
    def value(self) -> int:
        out = 0
        for b in self.bits:
            out = (out << 1) | b
        return out

    def reversal(self) -> "BinaryWord":
        return BinaryWord(self.bits[::-1])

    def __str__(self):
        return "".join(str(b) for b in self.bits) or "ε"


def _check_level(i: int):
    if i < 0:
        raise TanglegramError("family level must be non-negative")
    if i > MAX_FAMILY_LEVEL:
        raise SizeLimitError("family level", i, MAX_FAMILY_LEVEL)


class FamilyFactory:
    """
    The extremal family T_i: complete binary trees of height i on both sides,
    leaf labels equal to the integer value of the leaf's word, and the leaf
    with word x matched to the leaf with the reversed word.
    """

    @staticmethod
    def bit_reversal(i: int) -> Tuple[int, ...]:
        return tuple(BinaryWord.from_int(x, i).reversal().value for x in range(1 << i))

    @staticmethod
    def t_family(i: int) -> Tanglegram:
        _check_level(i)
        return Tanglegram(complete_tree(i), complete_tree(i), FamilyFactory.bit_reversal(i))

    @staticmethod
    def d_star(i: int) -> Layout:
        """Both leaf sequences in integer order; pi is the bit-reversal permutation."""
        return FamilyFactory.t_family(i).default_layout()

    @staticmethod
    def crt_formula(i: int) -> int:
        """1/2 C(2^i, 2) - i 2^(i-2) = 2^(i-2) (2^i - 1 - i), and 0 for i < 2."""
        if i < 0:
            raise TanglegramError("family level must be non-negative")
        if i < 2:
            return 0
        return ((1 << i) - 1 - i) << (i - 2)

    @staticmethod
    def omega_recursion(i: int) -> int:
        """omega_i = 2 omega_(i-1) + C(2^(i-1), 2), omega_0 = 0."""
        if i < 0:
            raise TanglegramError("family level must be non-negative")
        omega = 0
        for level in range(1, i + 1):
            omega = 2 * omega + pair_count(1 << (level - 1))
        return omega

    @staticmethod
    def earlier_lower_bound(i: int) -> float:
        """The older family bound 1/2 C(n,2) - (n^(3/2) - n)/2 for n = 2^i."""
        n = 1 << i
        return pair_count(n) / 2 - (n ** 1.5 - n) / 2

    @staticmethod
    def fig4_tanglegram() -> Layout:
        t = Tanglegram(complete_tree(3), complete_tree(3), FIG4_SIGMA)
        return t.default_layout()
