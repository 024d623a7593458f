"""Filesystem model: slash-separated paths, node values, and snapshots.

A filesystem maps paths to values, where a value is a directory, a file
with opaque byte content, or empty (absent).  Only non-empty values are
stored, so the all-empty filesystem is the empty mapping.  Valid
filesystems keep the tree shape: along any branch there are directories,
then at most one file, then only empty nodes.  First-level paths act as
forest roots and need nothing above them.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from .errors import FormatError, PreconditionFailed, TreeBroken

EMPTY_RANK = 0
FILE_RANK = 1
DIR_RANK = 2

SEPARATOR = "/"


@dataclass(frozen=True, slots=True)
class Value:
    """Content at a node.  Ranks order the value types: empty < file < directory.

    ``content`` is meaningful only for files and is compared byte for byte.
    """

    rank: int
    content: bytes = b""

    @property
    def is_empty(self) -> bool:
        return self.rank == EMPTY_RANK

    @property
    def is_file(self) -> bool:
        return self.rank == FILE_RANK

    @property
    def is_directory(self) -> bool:
        return self.rank == DIR_RANK

    def __repr__(self) -> str:
        if self.rank == EMPTY_RANK:
            return "E"
        if self.rank == DIR_RANK:
            return "D"
        return f"F({self.content!r})"


EMPTY = Value(EMPTY_RANK)
DIRECTORY = Value(DIR_RANK)


def file_value(content: bytes | str) -> Value:
    if isinstance(content, str):
        content = content.encode()
    return Value(FILE_RANK, content)


class Path:
    """A node identifier: a tuple of non-empty name segments.

    The empty tuple is the root ``/``.  Ordering compares segment tuples,
    which puts every path after all of its ancestors.
    """

    __slots__ = ("parts", "_hash")

    def __init__(self, parts: Iterable[str] = ()):
        parts = tuple(parts)
        for seg in parts:
            if not seg or SEPARATOR in seg:
                raise FormatError(f"bad path segment {seg!r}")
        self.parts = parts
        self._hash = hash(parts)

    @classmethod
    def from_string(cls, text: str) -> "Path":
        if not text.startswith(SEPARATOR):
            raise FormatError(f"path must start with {SEPARATOR!r}: {text!r}")
        if text == SEPARATOR:
            return cls(())
        return cls(text[1:].split(SEPARATOR))

    @property
    def is_root(self) -> bool:
        return not self.parts

    def parent(self) -> "Path | None":
        if not self.parts:
            return None
        return Path(self.parts[:-1])

    def ancestors(self) -> Iterator["Path"]:
        """Strict ancestors from parent upward, excluding the root."""
        for i in range(len(self.parts) - 1, 0, -1):
            yield Path(self.parts[:i])

    def is_ancestor_of(self, other: "Path") -> bool:
        """True iff self is strictly above other."""
        return (
            len(self.parts) < len(other.parts)
            and other.parts[: len(self.parts)] == self.parts
        )

    def child(self, segment: str) -> "Path":
        return Path(self.parts + (segment,))

    def __eq__(self, other) -> bool:
        return isinstance(other, Path) and self.parts == other.parts

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "Path") -> bool:
        return self.parts < other.parts

    def __le__(self, other: "Path") -> bool:
        return self.parts <= other.parts

    def __str__(self) -> str:
        return SEPARATOR + SEPARATOR.join(self.parts)

    def __repr__(self) -> str:
        return f"Path({str(self)!r})"


class Filesystem:
    """Immutable mapping from paths to non-empty values.

    Reads of unmapped paths return the empty value.  A parallel count of
    stored direct children supports constant-time subtree-emptiness checks
    during command application.
    """

    __slots__ = ("entries", "_child_count")

    def __init__(self, entries: Mapping[Path, Value] | Iterable[tuple[Path, Value]] = ()):
        stored = {p: v for p, v in dict(entries).items() if not v.is_empty}
        counts: dict[Path, int] = {}
        for p in stored:
            q = p.parent()
            if q is not None:
                counts[q] = counts.get(q, 0) + 1
        self.entries = stored
        self._child_count = counts

    def read(self, path: Path) -> Value:
        return self.entries.get(path, EMPTY)

    def is_valid(self) -> bool:
        """Check the tree shape: stored content at depth >= 2 needs a
        directory at its parent.  First-level entries are forest roots."""
        for p in self.entries:
            if len(p.parts) >= 2 and self.entries.get(p.parent()) != DIRECTORY:
                return False
        return True

    def apply_command(self, command) -> "Filesystem":
        """Apply one command, returning the updated filesystem.

        Raises PreconditionFailed when the stored value differs from the
        command's input, TreeBroken when the result would lose the tree
        shape.  Only the command's node changes.
        """
        entries = dict(self.entries)
        counts = dict(self._child_count)
        _apply_into(entries, counts, command)
        fs = Filesystem.__new__(Filesystem)
        fs.entries = entries
        fs._child_count = counts
        return fs

    def apply_sequence(self, commands) -> "Filesystem":
        """Apply commands left to right; errors carry the failing position."""
        entries = dict(self.entries)
        counts = dict(self._child_count)
        for i, command in enumerate(commands):
            try:
                _apply_into(entries, counts, command)
            except (PreconditionFailed, TreeBroken) as err:
                err.index = i
                err.args = (f"{err.args[0]} (sequence position {i})",)
                raise
        fs = Filesystem.__new__(Filesystem)
        fs.entries = entries
        fs._child_count = counts
        return fs

    def __eq__(self, other) -> bool:
        return isinstance(other, Filesystem) and self.entries == other.entries

    def __len__(self) -> int:
        return len(self.entries)

    def __repr__(self) -> str:
        inner = ", ".join(f"{p}:{v!r}" for p, v in sorted(self.entries.items()))
        return f"Filesystem({{{inner}}})"


def _apply_into(entries: dict, counts: dict, command) -> None:
    node = command.node
    current = entries.get(node, EMPTY)
    if current != command.input:
        raise PreconditionFailed(
            f"stored value {current!r} differs from required {command.input!r} at {node}",
            command=command,
        )
    out = command.output
    if not out.is_empty and len(node.parts) >= 2:
        if entries.get(node.parent(), EMPTY) != DIRECTORY:
            raise TreeBroken(f"no directory above {node}", command=command)
    if not out.is_directory and counts.get(node, 0) > 0:
        raise TreeBroken(f"non-empty entries below {node}", command=command)
    parent = node.parent()
    if current.is_empty and not out.is_empty:
        entries[node] = out
        if parent is not None:
            counts[parent] = counts.get(parent, 0) + 1
    elif not current.is_empty and out.is_empty:
        del entries[node]
        if parent is not None:
            counts[parent] -= 1
    elif not out.is_empty:
        entries[node] = out


def dump_value(value: Value) -> str:
    if value.is_empty:
        return "E"
    if value.is_directory:
        return "D"
    return "F:" + base64.b64encode(value.content).decode()


def parse_value(token: str) -> Value:
    if token == "E":
        return EMPTY
    if token == "D":
        return DIRECTORY
    if token.startswith("F:"):
        try:
            return Value(FILE_RANK, base64.b64decode(token[2:], validate=True))
        except Exception as exc:
            raise FormatError(f"bad file content encoding in {token!r}") from exc
    raise FormatError(f"unknown value token {token!r}")


def dump_snapshot(fs: Filesystem) -> str:
    """One entry per line, sorted by path: ``<path>\\t<value>``.  Empty
    entries are omitted, so equal filesystems serialize identically."""
    lines = [f"{p}\t{dump_value(v)}" for p, v in sorted(fs.entries.items())]
    return "".join(line + "\n" for line in lines)


def load_snapshot(text: str) -> Filesystem:
    entries = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise FormatError(f"snapshot line {lineno}: expected 2 fields, got {len(fields)}")
        path = Path.from_string(fields[0])
        value = parse_value(fields[1])
        if value.is_empty:
            raise FormatError(f"snapshot line {lineno}: empty entries are implicit")
        entries[path] = value
    return Filesystem(entries)
