"""Group structures, coalition bit-sets and exact Shapley/Owen weights.

Coalitions are plain ``int`` bit-sets over 0-based feature indices: bit ``k``
set means feature ``k`` is present.  Weights are ``fractions.Fraction`` so
that sums over a full context are exactly one.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Iterable, Iterator, Sequence

MAX_PLAYERS = 25
MAX_GROUPS = 20


class PartitionError(ValueError):
    """Base class for invalid group structures."""


class OverlapError(PartitionError):
    pass


class GapError(PartitionError):
    pass


class EmptyBlockError(PartitionError):
    pass


class IndexRangeError(PartitionError):
    pass


class EnumerationBoundError(ValueError):
    """Raised when exact enumeration would exceed the player bound."""


def mask_of(indices: Iterable[int]) -> int:
    mask = 0
    for i in indices:
        if i < 0:
            raise IndexRangeError(f"negative index {i}")
        mask |= 1 << i
    return mask


def members(mask: int) -> tuple[int, ...]:
    """Indices present in ``mask``, ascending."""
    out = []
    k = 0
    while mask:
        if mask & 1:
            out.append(k)
        mask >>= 1
        k += 1
    return tuple(out)


@dataclass(frozen=True)
class GroupStructure:
    """A validated partition of ``range(m)`` into ordered, non-empty blocks.

    Block order is part of the identity: group ``i`` always names
    ``blocks[i]``.  Indices are 0-based; use :meth:`from_one_based` and
    :meth:`to_one_based` at I/O boundaries.
    """

    blocks: tuple[tuple[int, ...], ...]
    m: int

    @property
    def l(self) -> int:
        return len(self.blocks)

    @property
    def masks(self) -> tuple[int, ...]:
        return tuple(mask_of(b) for b in self.blocks)

    def group_of(self, feature: int) -> int:
        for g, block in enumerate(self.blocks):
            if feature in block:
                return g
        raise IndexRangeError(f"feature {feature} outside 0..{self.m - 1}")

    @classmethod
    def singletons(cls, m: int) -> "GroupStructure":
        return validate([[i] for i in range(m)], m)

    @classmethod
    def from_one_based(cls, blocks: Sequence[Sequence[int]], m: int) -> "GroupStructure":
        return validate([[int(i) - 1 for i in b] for b in blocks], m)

    def to_one_based(self) -> list[list[int]]:
        return [[i + 1 for i in b] for b in self.blocks]


def validate(blocks: Sequence[Sequence[int]], m: int) -> GroupStructure:
    """Check that ``blocks`` partition ``range(m)`` and freeze them.

    Each failure mode raises its own :class:`PartitionError` subclass.
    """
    if m < 1:
        raise PartitionError(f"feature count must be positive, got {m}")
    seen: dict[int, int] = {}
    frozen = []
    for g, block in enumerate(blocks):
        block = tuple(int(i) for i in block)
        if not block:
            raise EmptyBlockError(f"block {g} is empty")
        for i in block:
            if not 0 <= i < m:
                raise IndexRangeError(f"index {i} in block {g} outside 0..{m - 1}")
            if i in seen:
                raise OverlapError(f"index {i} appears in blocks {seen[i]} and {g}")
            seen[i] = g
        frozen.append(tuple(sorted(block)))
    missing = sorted(set(range(m)) - set(seen))
    if missing:
        raise GapError(f"indices {missing} are not covered by any block")
    return GroupStructure(tuple(frozen), m)


def expand(groups: Iterable[int], structure: GroupStructure) -> int:
    """Union of the blocks named by ``groups``, as a feature bit-set."""
    mask = 0
    masks = structure.masks
    for g in groups:
        if not 0 <= g < structure.l:
            raise IndexRangeError(f"group {g} outside 0..{structure.l - 1}")
        mask |= masks[g]
    return mask


def expand_mask(group_mask: int, structure: GroupStructure) -> int:
    return expand(members(group_mask), structure)


@lru_cache(maxsize=None)
def shapley_weight(s: int, n: int) -> Fraction:
    """|S|!(n-|S|-1)!/n! for a coalition of size ``s`` among ``n`` players."""
    if n > MAX_PLAYERS:
        raise EnumerationBoundError(
            f"{n} players exceeds the exact bound of {MAX_PLAYERS}; use sampled mode"
        )
    if not 0 <= s <= n - 1:
        raise ValueError(f"coalition size {s} outside 0..{n - 1}")
    return Fraction(factorial(s) * factorial(n - s - 1), factorial(n))


def owen_weight(t: int, l: int, s: int, b: int) -> Fraction:
    """Product of the across-group and within-block Shapley weights."""
    return shapley_weight(t, l) * shapley_weight(s, b)


def enumerate_subsets(indices: Sequence[int]) -> Iterator[int]:
    """Yield every subset of ``indices`` as a bit-set, exactly once.

    Order is binary counting over the positions of ``indices`` (so the empty
    set comes first and the full set last).
    """
    indices = list(indices)
    if len(indices) > MAX_PLAYERS:
        raise EnumerationBoundError(
            f"{len(indices)} indices exceeds the enumeration bound of {MAX_PLAYERS}"
        )
    bits = [1 << i for i in indices]
    for code in range(1 << len(bits)):
        mask = 0
        k = 0
        while code:
            if code & 1:
                mask |= bits[k]
            code >>= 1
            k += 1
        yield mask


def gshap_coefficients(structure: GroupStructure) -> list[dict[tuple[int, int], Fraction]]:
    """Per group, the weight on each (with, without) feature-coalition pair.

    Useful for checking the induced-game formula symbolically.
    """
    l = structure.l
    tables = []
    for i in range(l):
        others = [g for g in range(l) if g != i]
        table: dict[tuple[int, int], Fraction] = {}
        for tmask in enumerate_subsets(others):
            t = bin(tmask).count("1")
            q = expand_mask(tmask, structure)
            key = (q | structure.masks[i], q)
            table[key] = table.get(key, Fraction(0)) + shapley_weight(t, l)
        tables.append(table)
    return tables


def owen_coefficients(structure: GroupStructure) -> list[dict[tuple[int, int], Fraction]]:
    """Per feature, the weight on each (with, without) coalition pair."""
    l = structure.l
    tables: list[dict[tuple[int, int], Fraction]] = [dict() for _ in range(structure.m)]
    for i, block in enumerate(structure.blocks):
        others = [g for g in range(l) if g != i]
        for j in block:
            inner = [k for k in block if k != j]
            table = tables[j]
            for tmask in enumerate_subsets(others):
                t = bin(tmask).count("1")
                q = expand_mask(tmask, structure)
                for smask in enumerate_subsets(inner):
                    s = bin(smask).count("1")
                    key = (q | smask | (1 << j), q | smask)
                    table[key] = table.get(key, Fraction(0)) + owen_weight(t, l, s, len(block))
    return tables
