"""Canonical command sets: up-links, verification, ordering, collapsing.

A canonical set has no null commands, at most one command per node, and
commands on comparable nodes joined by chains of the execution-order
relation.  Such a set applies to some filesystem in any order honoring
that relation, and all those orders have the same effect, so the
unordered set is a faithful description of a change.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .command import Command, must_precede, sort_key
from .errors import BrokenSequence, NotCanonical
from .fsmodel import Path


def path_up_links(paths: Sequence[Path]) -> tuple[list[int | None], int]:
    """Nearest strict-ancestor links over a path-sorted list.

    Returns one link per position (None when nothing above is present)
    plus the number of link-walk comparisons, which stays below twice the
    list length: every link is followed past at most once.
    """
    up: list[int | None] = []
    steps = 0
    for i, p in enumerate(paths):
        j = i - 1 if i else None
        while j is not None:
            steps += 1
            if paths[j].is_ancestor_of(p):
                break
            j = up[j]
        up.append(j)
    return up, steps


@dataclass
class UpIndex:
    """Commands sorted by path plus nearest-ancestor entry links."""

    commands: list[Command]
    up: list[int | None]
    steps: int


def build_up_index(commands: Sequence[Command]) -> UpIndex:
    commands = list(commands)
    paths = [c.node for c in commands]
    if any(paths[i].parts > paths[i + 1].parts for i in range(len(paths) - 1)):
        raise ValueError("commands must be sorted by path")
    up, steps = path_up_links(paths)
    return UpIndex(commands, up, steps)


def canonical_violation(commands: Iterable[Command]) -> str | None:
    """Explain why a command collection is not canonical, or None.

    Checked on the path-sorted list: no nulls, one command per node, and
    each command's nearest in-set ancestor sits at the parent node and
    forms an ordered pair with it in one direction.
    """
    cmds = sorted(set(commands), key=sort_key)
    for i, c in enumerate(cmds):
        if c.is_null:
            return f"null command at {c.node}"
        if i and cmds[i - 1].node == c.node:
            return f"multiple commands at {c.node}"
    index = build_up_index(cmds)
    for i, j in enumerate(index.up):
        if j is None:
            continue
        c, above = cmds[i], cmds[j]
        if above.node != c.node.parent():
            return f"commands at {above.node} and {c.node} are not chain-connected"
        if not (must_precede(above, c) or must_precede(c, above)):
            return f"commands at {above.node} and {c.node} are not order-related"
    return None


def is_canonical(commands: Iterable[Command]) -> bool:
    return canonical_violation(commands) is None


class CanonicalSet:
    """A validated canonical set, stored sorted by path.

    Pass ``check=False`` only when canonicity is already established;
    the flag exists for the lenient collapsing mode.
    """

    __slots__ = ("commands", "_set")

    def __init__(self, commands: Iterable[Command] = (), *, check: bool = True):
        cmds = tuple(sorted(set(commands), key=sort_key))
        if check:
            message = canonical_violation(cmds)
            if message is not None:
                raise NotCanonical(message)
        self.commands = cmds
        self._set = frozenset(cmds)

    def __iter__(self) -> Iterator[Command]:
        return iter(self.commands)

    def __len__(self) -> int:
        return len(self.commands)

    def __contains__(self, command: Command) -> bool:
        return command in self._set

    def __eq__(self, other) -> bool:
        if isinstance(other, CanonicalSet):
            return self._set == other._set
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._set)

    def __repr__(self) -> str:
        return f"CanonicalSet({list(self.commands)!r})"

    def as_frozenset(self) -> frozenset[Command]:
        return self._set

    def difference(self, other: Iterable[Command]) -> "CanonicalSet":
        drop = set(other)
        return CanonicalSet(c for c in self.commands if c not in drop)

    def intersection(self, other: Iterable[Command]) -> "CanonicalSet":
        keep = set(other)
        return CanonicalSet(c for c in self.commands if c in keep)


def order_canonical(cset: CanonicalSet | Iterable[Command]) -> list[Command]:
    """Arrange a canonical set into an executable sequence: constructors
    top-down first, then everything else (destructors and edits) bottom-up.
    """
    if not isinstance(cset, CanonicalSet):
        cset = CanonicalSet(cset)
    ordered = [c for c in cset.commands if c.is_constructor]
    ordered.extend(c for c in reversed(cset.commands) if not c.is_constructor)
    return ordered


def canonize(commands: Sequence[Command], *, strict: bool = True) -> CanonicalSet:
    """Collapse a command sequence into the canonical set extending it.

    Commands are stable-sorted by node; each same-node run becomes one
    command taking the run's first input and last output, nulls dropped.
    In strict mode a run whose adjacent output/input values disagree, or
    a collapsed set that fails the canonical check, raises BrokenSequence:
    both prove the original sequence breaks every filesystem.
    """
    ordered = sorted(commands, key=lambda c: c.node.parts)
    collapsed: list[Command] = []
    i = 0
    while i < len(ordered):
        j = i
        while j + 1 < len(ordered) and ordered[j + 1].node == ordered[i].node:
            if strict and ordered[j].output != ordered[j + 1].input:
                raise BrokenSequence(
                    f"discontinuous run at {ordered[i].node}: "
                    f"{ordered[j].output!r} then {ordered[j + 1].input!r}"
                )
            j += 1
        replacement = Command(ordered[i].node, ordered[i].input, ordered[j].output)
        if not replacement.is_null:
            collapsed.append(replacement)
        i = j + 1
    if strict:
        try:
            return CanonicalSet(collapsed)
        except NotCanonical as exc:
            raise BrokenSequence(f"collapsed set is not canonical: {exc}") from exc
    return CanonicalSet(collapsed, check=False)


def is_initial_segment(part: CanonicalSet, whole: CanonicalSet) -> bool:
    """True iff ``part`` can run first without changing ``whole``'s effect.

    Structurally: part is a subset and no remaining command is forced to
    execute before a member of part.  Ordering constraints only link
    commands on parent-child nodes, so parent lookups cover all of them.
    """
    inside = part.as_frozenset()
    if not inside <= whole.as_frozenset():
        return False
    by_node = {c.node: c for c in whole}
    for c in whole:
        parent = c.node.parent()
        above = by_node.get(parent) if parent is not None else None
        if above is None:
            continue
        if must_precede(above, c) and above not in inside and c in inside:
            return False
        if must_precede(c, above) and c not in inside and above in inside:
            return False
    return True
