"""Set partitions via restricted growth strings.

A restricted growth string (RGS) ``a`` of length n satisfies ``a[0] == 0``
and ``a[j] <= 1 + max(a[:j])``.  RGSs are in bijection with the set
partitions of an n-element set; element j goes to block ``a[j]``.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterator, Sequence

from .errors import GuardExceeded

#: Default cap on partitions enumerated for a single signal set.
PARTITION_GUARD = 10**6


@lru_cache(maxsize=None)
def bell(n: int) -> int:
    """Bell number via the Bell triangle."""
    if n == 0:
        return 1
    row = [1]
    for _ in range(n - 1):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[-1]


def restricted_growth_strings(n: int) -> Iterator[tuple[int, ...]]:
    """Yield all RGSs of length n in lexicographic order."""
    if n == 0:
        yield ()
        return
    a = [0] * n
    m = [0] * n  # m[j] = max(a[:j+1])
    while True:
        yield tuple(a)
        j = n - 1
        while j > 0 and a[j] == m[j - 1] + 1:
            j -= 1
        if j == 0:
            return
        a[j] += 1
        m[j] = max(m[j - 1], a[j])
        for k in range(j + 1, n):
            a[k] = 0
            m[k] = m[j]


def rgs_to_blocks(rgs: Sequence[int], items: Sequence) -> tuple[tuple, ...]:
    blocks: list[list] = [[] for _ in range(max(rgs, default=-1) + 1)]
    for label, item in zip(rgs, items):
        blocks[label].append(item)
    return tuple(tuple(b) for b in blocks)


def set_partitions(items: Sequence, guard: int = PARTITION_GUARD) -> Iterator[tuple[tuple, ...]]:
    """Yield every partition of ``items`` as a tuple of blocks.

    Blocks preserve the order of ``items`` and are ordered by their first
    element, so output is canonical.
    """
    items = tuple(items)
    if bell(len(items)) > guard:
        raise GuardExceeded(
            f"Bell({len(items)}) = {bell(len(items))} partitions exceed the guard {guard}"
        )
    for rgs in restricted_growth_strings(len(items)):
        yield rgs_to_blocks(rgs, items)


def two_block_splits(items: Sequence) -> list[tuple[tuple, tuple]]:
    """All unordered splits of ``items`` into two nonempty blocks."""
    items = tuple(items)
    out = []
    for rgs in restricted_growth_strings(len(items)):
        if max(rgs, default=0) == 1:
            a, b = rgs_to_blocks(rgs, items)
            out.append((a, b))
    return out
