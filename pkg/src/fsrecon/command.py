"""Single-node filesystem commands and their algebra.

A command records the node it acts on, the value required there before
execution, and the value left behind.  Commands classify as null,
constructor (raising the value rank), destructor (lowering it) or edit
(file-to-different-file).  Between commands on parent-child nodes an
execution-order relation constrains valid orderings: children are
emptied before their directory goes away, and a directory appears before
anything is created beneath it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import CommandRejected, FormatError
from .fsmodel import (
    DIR_RANK,
    EMPTY_RANK,
    FILE_RANK,
    Filesystem,
    Path,
    Value,
    dump_value,
    parse_value,
)


@dataclass(frozen=True, slots=True)
class Command:
    """The triple (node, input value, output value).

    ``origin`` records which replica supplied the command; it is metadata
    only and takes no part in equality or hashing, so identical commands
    from different replicas collapse when collected into sets.
    """

    node: Path
    input: Value
    output: Value
    origin: int | None = field(default=None, compare=False)

    @property
    def is_null(self) -> bool:
        return self.input == self.output

    @property
    def is_constructor(self) -> bool:
        return self.input.rank < self.output.rank

    @property
    def is_destructor(self) -> bool:
        return self.input.rank > self.output.rank

    @property
    def is_edit(self) -> bool:
        return (
            self.input.rank == FILE_RANK
            and self.output.rank == FILE_RANK
            and self.input != self.output
        )

    def inverse(self) -> "Command":
        return Command(self.node, self.output, self.input, self.origin)

    def __repr__(self) -> str:
        return f"<{self.node},{self.input!r},{self.output!r}>"


CommandSequence = Sequence[Command]


def must_precede(first: Command, second: Command) -> bool:
    """Execution-order constraint between commands on parent-child nodes.

    True when ``first`` empties a node whose parent's directory ``second``
    removes or downgrades, or ``first`` creates a directory under which
    ``second`` creates content.
    """
    a, b = first, second
    parent = a.node.parent()
    if (
        parent is not None
        and parent == b.node
        and a.input.rank != EMPTY_RANK
        and a.output.rank == EMPTY_RANK
        and b.input.rank == DIR_RANK
        and b.output.rank != DIR_RANK
    ):
        return True
    parent = b.node.parent()
    if (
        parent is not None
        and parent == a.node
        and a.input.rank != DIR_RANK
        and a.output.rank == DIR_RANK
        and b.input.rank == EMPTY_RANK
        and b.output.rank != EMPTY_RANK
    ):
        return True
    return False


def in_conflict(a: Command, b: Command) -> bool:
    """Commands that can never share a merger: different commands on one
    node, or an upper command creating a non-directory over a lower one
    creating non-empty content."""
    if a.node == b.node:
        return a != b
    if a.node.is_ancestor_of(b.node):
        upper, lower = a, b
    elif b.node.is_ancestor_of(a.node):
        upper, lower = b, a
    else:
        return False
    return upper.output.rank != DIR_RANK and lower.output.rank != EMPTY_RANK


def invert_sequence(commands: CommandSequence) -> list[Command]:
    """Inverse sequence: inverses of the commands in reverse order."""
    return [c.inverse() for c in reversed(commands)]


def semantically_equal_on(
    a: CommandSequence, b: CommandSequence, samples: Iterable[Filesystem]
) -> bool:
    """Sampled equivalence check: on every sample both sequences break, or
    both succeed with the same result."""
    for fs in samples:
        try:
            ra = fs.apply_sequence(a)
        except CommandRejected:
            ra = None
        try:
            rb = fs.apply_sequence(b)
        except CommandRejected:
            rb = None
        if (ra is None) != (rb is None):
            return False
        if ra is not None and ra != rb:
            return False
    return True


def sort_key(command: Command):
    """Total processing order: path, then origin, then output shape.

    Stable keys confine any nondeterminism of merger generation to the
    explicit decision points.
    """
    origin = command.origin if command.origin is not None else -1
    return (command.node.parts, origin, command.output.rank, command.output.content)


def dump_command(command: Command, with_origin: bool = True) -> str:
    fields = [str(command.node), dump_value(command.input), dump_value(command.output)]
    if with_origin and command.origin is not None:
        fields.append(str(command.origin))
    return "\t".join(fields)


def parse_command(line: str) -> Command:
    fields = line.split("\t")
    if len(fields) not in (3, 4):
        raise FormatError(f"expected 3 or 4 tab-separated fields: {line!r}")
    origin = None
    if len(fields) == 4:
        try:
            origin = int(fields[3])
        except ValueError as exc:
            raise FormatError(f"bad origin {fields[3]!r}") from exc
    return Command(
        Path.from_string(fields[0]),
        parse_value(fields[1]),
        parse_value(fields[2]),
        origin,
    )


def load_commands(text: str) -> list[Command]:
    """Parse one command per line; blank lines and ``#`` comments skipped."""
    commands = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            commands.append(parse_command(line))
        except FormatError as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
    return commands


def dump_command_set(commands: Iterable[Command], with_origin: bool = True) -> str:
    """Unordered collection rendered in path order so text equality is set
    equality."""
    ordered = sorted(commands, key=sort_key)
    return "".join(dump_command(c, with_origin) + "\n" for c in ordered)


def dump_command_seq(commands: CommandSequence, with_origin: bool = True) -> str:
    """Ordered rendering: line order is execution order."""
    return "".join(dump_command(c, with_origin) + "\n" for c in commands)
