"""Partitions of Bob's parties and their Young-diagram (width, height) classes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

MAX_ENUMERATION = 12


def _label_key(label: str):
    # numeric labels sort numerically, the rest lexicographically after them
    return (0, int(label), "") if label.isdigit() else (1, 0, label)


@dataclass(frozen=True)
class Partition:
    """Disjoint cover of a party set, stored in canonical order.

    Canonical order: members sorted within each block; blocks by descending
    size, ties broken by the smallest member.
    """

    blocks: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        blocks = [tuple(sorted({str(m) for m in b}, key=_label_key)) for b in self.blocks]
        if not blocks:
            raise ValueError("a partition needs at least one block")
        if any(not b for b in blocks):
            raise ValueError("empty block in partition")
        seen: set[str] = set()
        for b in blocks:
            overlap = seen.intersection(b)
            if overlap:
                raise ValueError(f"blocks overlap on {sorted(overlap)}")
            seen.update(b)
        blocks.sort(key=lambda b: (-len(b), _label_key(b[0])))
        object.__setattr__(self, "blocks", tuple(blocks))

    @property
    def parties(self) -> tuple[str, ...]:
        return tuple(sorted((m for b in self.blocks for m in b), key=_label_key))

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.blocks)

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self) -> Iterator[tuple[str, ...]]:
        return iter(self.blocks)

    def covers(self, labels: Iterable[str]) -> bool:
        return set(self.parties) == {str(x) for x in labels}

    def __str__(self) -> str:
        return "|".join(",".join(b) for b in self.blocks)


@dataclass(frozen=True)
class YoungClass:
    width: int
    height: int
    n: int

    def __post_init__(self):
        if not (1 <= self.width <= self.n and 1 <= self.height <= self.n):
            raise ValueError(f"invalid Young class (w={self.width}, h={self.height}) for N={self.n}")
        if self.width + self.height > self.n + 1:
            raise ValueError(f"w + h = {self.width + self.height} exceeds N + 1 = {self.n + 1}")


def parse_partition(text: str) -> Partition:
    """Parse ``"1,2|3,4"``: blocks separated by ``|``, members by ``,``."""
    blocks = []
    for chunk in text.split("|"):
        members = [m.strip() for m in chunk.split(",") if m.strip()]
        if not members:
            raise ValueError(f"empty block in partition text {text!r}")
        blocks.append(members)
    if sum(len(b) for b in blocks) != len({m for b in blocks for m in b}):
        raise ValueError(f"repeated member in partition text {text!r}")
    return Partition(tuple(tuple(b) for b in blocks))


def trivial_partition(labels: Sequence[str]) -> Partition:
    return Partition((tuple(labels),))


def finest_partition(labels: Sequence[str]) -> Partition:
    return Partition(tuple((lab,) for lab in labels))


def equal_blocks(labels: Sequence[str], k: int) -> Partition:
    """``k`` consecutive blocks of equal size ``len(labels) / k``."""
    n = len(labels)
    if k < 1 or n % k:
        raise ValueError(f"block count k={k} does not divide N={n}")
    size = n // k
    return Partition(tuple(tuple(labels[i * size : (i + 1) * size]) for i in range(k)))


def _set_partitions(items: list[str]) -> Iterator[list[list[str]]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for sub in _set_partitions(rest):
        yield [[first]] + sub
        for i in range(len(sub)):
            yield sub[:i] + [[first] + sub[i]] + sub[i + 1 :]


def enumerate_partitions(labels: Sequence[str]) -> list[Partition]:
    labels = [str(x) for x in labels]
    if not 1 <= len(labels) <= MAX_ENUMERATION:
        raise ValueError(f"can enumerate partitions of 1..{MAX_ENUMERATION} parties, got {len(labels)}")
    if len(set(labels)) != len(labels):
        raise ValueError("duplicate labels")
    return [Partition(tuple(tuple(b) for b in p)) for p in _set_partitions(labels)]


def young_class(p: Partition) -> YoungClass:
    return YoungClass(max(len(b) for b in p.blocks), len(p.blocks), p.n)


def fmax_wh(n: int, w: int, h: int) -> float:
    """Largest J_z Fisher information of a (w, h)-separable N-qubit state: ``w (N - h) + N``."""
    if n < 1 or not (1 <= w <= n and 1 <= h <= n):
        raise ValueError(f"need 1 <= w, h <= N, got N={n}, w={w}, h={h}")
    return float(w * (n - h) + n)
