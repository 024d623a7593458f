"""Shared fixtures, random generators and independent oracles."""

from __future__ import annotations

import random
from dataclasses import dataclass

import pytest

from fsrecon.canonical import CanonicalSet, order_canonical
from fsrecon.command import Command
from fsrecon.errors import CommandRejected
from fsrecon.fsmodel import (
    DIR_RANK,
    DIRECTORY,
    EMPTY,
    EMPTY_RANK,
    Filesystem,
    Path,
    Value,
    file_value,
)
from fsrecon.merge import generate_merger, union_of
from fsrecon.reconcile import diff
from fsrecon.refluence import witness_filesystem

NAMES = ("a", "b", "c")
CONTENTS = (b"one", b"two", b"three")


def p(text: str) -> Path:
    return Path.from_string(text)


def apply_set(fs: Filesystem, cset) -> Filesystem:
    return fs.apply_sequence(order_canonical(cset))


def applies(fs: Filesystem, cset) -> bool:
    try:
        apply_set(fs, cset)
        return True
    except CommandRejected:
        return False


@dataclass
class Scenario:
    """Three replicas editing a shared directory with one file.

    Replica 0 empties the whole tree, replica 1 creates a file, replica 2
    creates the same file with different content plus a second one higher
    up.  Exactly four mergers exist.
    """

    fs0: Filesystem
    sets: list[CanonicalSet]
    s1: Command
    s2: Command
    s3: Command
    tau: Command
    r1: Command
    r2: Command

    @property
    def mergers(self) -> list[CanonicalSet]:
        return [
            CanonicalSet([self.s1, self.s2, self.s3]),
            CanonicalSet([self.s1, self.s2, self.r1]),
            CanonicalSet([self.s1, self.tau, self.r1]),
            CanonicalSet([self.s1, self.r1, self.r2]),
        ]


def make_scenario() -> Scenario:
    fo, fz, fu = file_value(b"orig"), file_value(b"zeta"), file_value(b"ours")
    s1 = Command(p("/a/b/c"), fo, EMPTY, 0)
    s2 = Command(p("/a/b"), DIRECTORY, EMPTY, 0)
    s3 = Command(p("/a"), DIRECTORY, EMPTY, 0)
    tau = Command(p("/a/b/z"), EMPTY, fz, 1)
    r1 = Command(p("/a/z"), EMPTY, fu, 2)
    r2 = Command(p("/a/b/z"), EMPTY, fu, 2)
    fs0 = Filesystem({p("/a"): DIRECTORY, p("/a/b"): DIRECTORY, p("/a/b/c"): fo})
    return Scenario(
        fs0,
        [CanonicalSet([s1, s2, s3]), CanonicalSet([tau]), CanonicalSet([r1, r2])],
        s1, s2, s3, tau, r1, r2,
    )


@pytest.fixture
def scenario() -> Scenario:
    return make_scenario()


# --- random structure generators -------------------------------------------


def random_fs(rng: random.Random, *, names=NAMES, max_depth=3, p_dir=0.45, p_file=0.3) -> Filesystem:
    entries = {}

    def grow(prefix: tuple, depth: int):
        for name in names:
            node = Path(prefix + (name,))
            roll = rng.random()
            if roll < p_dir:
                entries[node] = DIRECTORY
                if depth < max_depth:
                    grow(prefix + (name,), depth + 1)
            elif roll < p_dir + p_file:
                entries[node] = file_value(rng.choice(CONTENTS))

    grow((), 1)
    return Filesystem(entries)


def candidate_nodes(fs: Filesystem, names=NAMES) -> list[Path]:
    """Stored nodes, children of stored directories, and first-level slots."""
    nodes = set(fs.entries)
    for node, value in fs.entries.items():
        if value.is_directory and len(node.parts) < 4:
            for name in names:
                nodes.add(node.child(name))
    for name in names:
        nodes.add(Path((name,)))
    return sorted(nodes, key=lambda n: n.parts)


def random_step(rng: random.Random, fs: Filesystem, names=NAMES) -> Command | None:
    """One random command applicable to fs, or None if stuck."""
    nodes = candidate_nodes(fs, names)
    rng.shuffle(nodes)
    for node in nodes:
        value = fs.read(node)
        outputs: list[Value] = []
        parent = node.parent()
        parent_ok = parent is None or parent.is_root or fs.read(parent).is_directory
        if value.is_empty and parent_ok and not node.is_root:
            outputs = [file_value(rng.choice(CONTENTS)), DIRECTORY]
        elif value.is_file:
            others = [c for c in CONTENTS if c != value.content]
            outputs = [EMPTY, DIRECTORY, file_value(rng.choice(others))]
        elif value.is_directory and not any(
            node.is_ancestor_of(q) for q in fs.entries
        ):
            outputs = [EMPTY, file_value(rng.choice(CONTENTS))]
        if outputs:
            return Command(node, value, rng.choice(outputs))
    return None


def random_walk(rng: random.Random, fs: Filesystem, steps: int) -> tuple[list[Command], Filesystem]:
    """A random applicable command sequence and where it leads."""
    seq = []
    current = fs
    for _ in range(steps):
        cmd = random_step(rng, current)
        if cmd is None:
            break
        seq.append(cmd)
        current = current.apply_command(cmd)
    return seq, current


def random_canonical(rng: random.Random, fs0: Filesystem, steps: int, origin=None) -> CanonicalSet:
    """A canonical set applicable to fs0, obtained by diffing a mutation."""
    _, mutated = random_walk(rng, fs0, steps)
    changes = diff(fs0, mutated)
    return CanonicalSet(Command(c.node, c.input, c.output, origin) for c in changes)


def refluent_family(
    rng: random.Random, *, max_replicas=4, max_commands=12, min_replicas=1
) -> tuple[Filesystem, list[CanonicalSet]]:
    """Random jointly refluent family: independent mutations of one base."""
    while True:
        fs0 = random_fs(rng)
        k = rng.randint(min_replicas, max_replicas)
        sets = []
        for i in range(k):
            cset = random_canonical(rng, fs0, rng.randint(1, 7), origin=i)
            if len(cset) > max_commands:
                break
            sets.append(cset)
        if len(sets) == k:
            return fs0, sets


def sample_filesystems(rng: random.Random, sets=(), fs0=None, extra=2) -> list[Filesystem]:
    """Sample space for semantic checks: empty, the family's base and
    witness when available, plus unrelated random filesystems."""
    samples = [Filesystem()]
    if fs0 is not None:
        samples.append(fs0)
    if sets:
        try:
            samples.append(witness_filesystem(list(sets)))
        except Exception:
            pass
    samples.extend(random_fs(rng) for _ in range(extra))
    return samples


# --- independent oracles -----------------------------------------------------


def conflict_oracle(a: Command, b: Command) -> bool:
    """Literal restatement of the conflict rule, kept separate from the
    library predicate."""
    if a.node == b.node:
        return (a.input, a.output) != (b.input, b.output)
    for upper, lower in ((a, b), (b, a)):
        above = len(upper.node.parts) < len(lower.node.parts) and (
            lower.node.parts[: len(upper.node.parts)] == upper.node.parts
        )
        if above and upper.output.rank != DIR_RANK and lower.output.rank != EMPTY_RANK:
            return True
    return False


def nx_merger_sets(sets) -> set[frozenset[Command]]:
    """Maximal conflict-free subsets via networkx clique enumeration on
    the complement graph."""
    import networkx as nx

    union = union_of(sets)
    cmds = union.commands
    if not cmds:
        return {frozenset()}
    graph = nx.Graph()
    graph.add_nodes_from(range(len(cmds)))
    graph.add_edges_from(
        (i, j)
        for i in range(len(cmds))
        for j in range(i + 1, len(cmds))
        if conflict_oracle(cmds[i], cmds[j])
    )
    complement = nx.complement(graph)
    return {
        frozenset(cmds[v] for v in clique) for clique in nx.find_cliques(complement)
    }


class TrackingOracle:
    """Replays a script prefix, then picks 0, recording branch factors."""

    def __init__(self, prefix):
        self.prefix = list(prefix)
        self.taken: list[int] = []
        self.counts: list[int] = []

    def choose(self, count: int) -> int:
        i = len(self.taken)
        pick = self.prefix[i] if i < len(self.prefix) else 0
        self.taken.append(pick)
        self.counts.append(count)
        return pick

    def finish(self) -> None:
        pass


def all_scripted_mergers(sets) -> set[frozenset[Command]]:
    """Outputs of the staged generator over every possible script."""
    union = union_of(sets)
    results: set[frozenset[Command]] = set()
    stack: list[list[int]] = [[]]
    while stack:
        prefix = stack.pop()
        oracle = TrackingOracle(prefix)
        merger = generate_merger(union, oracle)
        results.add(merger.commands.as_frozenset())
        for i in range(len(prefix), len(oracle.counts)):
            for alt in range(1, oracle.counts[i]):
                stack.append(oracle.taken[:i] + [alt])
    return results


def exhaustive_witness_exists(sets, *, node_cap=7) -> bool | None:
    """Search every small filesystem over the mentioned-node closure for
    one on which all sets apply.  None when the closure is too large."""
    from itertools import product

    mentioned: set[Path] = set()
    values: set[Value] = {EMPTY, DIRECTORY}
    for cset in sets:
        for c in cset:
            mentioned.add(c.node)
            values.add(c.input)
            for a in c.node.ancestors():
                mentioned.add(a)
    nodes = sorted(mentioned, key=lambda n: n.parts)
    if len(nodes) > node_cap:
        return None
    pool = sorted(values, key=lambda v: (v.rank, v.content))
    for assignment in product(pool, repeat=len(nodes)):
        fs = Filesystem(
            {n: v for n, v in zip(nodes, assignment) if not v.is_empty}
        )
        if not fs.is_valid():
            continue
        if all(applies(fs, cset) for cset in sets):
            return True
    return False


def random_order_honoring(rng: random.Random, cset: CanonicalSet) -> list[Command]:
    """A random execution order consistent with the precedence relation."""
    from fsrecon.command import must_precede

    cmds = list(cset)
    pending = set(range(len(cmds)))
    preds = {
        j: {i for i in range(len(cmds)) if i != j and must_precede(cmds[i], cmds[j])}
        for j in range(len(cmds))
    }
    out = []
    placed: set[int] = set()
    while pending:
        ready = [j for j in pending if preds[j] <= placed]
        pick = rng.choice(ready)
        pending.remove(pick)
        placed.add(pick)
        out.append(cmds[pick])
    return out
