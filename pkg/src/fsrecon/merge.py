"""Merger generation over jointly refluent canonical sets.

A merger is a maximal canonical subset of everything the replicas
submitted; equivalently a maximal subset free of conflicts, where two
commands conflict when they differ on one node, or an upper command
creates a non-directory while a lower one creates non-empty content.
This module provides the single-pass greedy generator, the variant that
extends a pre-chosen canonical subset, a four-pass generator that can
reach every merger through explicit decision points, and a brute-force
enumerator used as the small-instance oracle.

All generators run in linear time after the initial sort: conflicts are
resolved through per-node flags percolated along nearest-ancestor links
instead of pairwise scans.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .canonical import CanonicalSet, path_up_links
from .command import Command, dump_command, in_conflict
from .errors import (
    NotCanonical,
    NotCanonicalSubset,
    NotRefluent,
    ScriptExhausted,
    ScriptOutOfRange,
)
from .fsmodel import DIR_RANK, EMPTY_RANK, FILE_RANK, Path, Value
from .refluence import require_canonical


@dataclass
class OpCounters:
    """Instrumentation for the linear-work guarantees."""

    up_steps: int = 0
    flag_writes: int = 0
    deletions: int = 0
    decisions: int = 0


class DecisionOracle:
    """Resolves the generator's choices between rival commands.

    Modes: first-wins picks the lowest sort key, seeded-random draws from
    a private generator, scripted replays recorded zero-based indices and
    must supply exactly one in-range choice per decision point.
    """

    def __init__(self, mode: str, *, seed: int | None = None, choices: Sequence[int] | None = None):
        self.mode = mode
        self._rng = random.Random(seed) if mode == "seeded" else None
        self._choices = list(choices) if choices is not None else None
        self._cursor = 0

    @classmethod
    def first_wins(cls) -> "DecisionOracle":
        return cls("first")

    @classmethod
    def seeded(cls, seed: int) -> "DecisionOracle":
        return cls("seeded", seed=seed)

    @classmethod
    def scripted(cls, choices: Sequence[int]) -> "DecisionOracle":
        return cls("scripted", choices=choices)

    def choose(self, count: int) -> int:
        if self.mode == "first":
            return 0
        if self.mode == "seeded":
            return self._rng.randrange(count)
        if self._cursor >= len(self._choices):
            raise ScriptExhausted(
                f"script supplies {len(self._choices)} choices but more decisions remain"
            )
        pick = self._choices[self._cursor]
        self._cursor += 1
        if not 0 <= pick < count:
            raise ScriptOutOfRange(
                f"choice {pick} at decision {self._cursor - 1} not in 0..{count - 1}"
            )
        return pick

    def finish(self) -> None:
        """Scripted runs must consume the whole script."""
        if self.mode == "scripted" and self._cursor != len(self._choices):
            raise ScriptExhausted(
                f"script supplies {len(self._choices)} choices but only "
                f"{self._cursor} decisions occurred"
            )


@dataclass
class DecisionRecord:
    """One decision point: what was competing and what won."""

    kind: str
    node: Path
    candidates: list[str]
    chosen: int


@dataclass
class SortedUnion:
    """Deduplicated union of the replicas' commands in processing order.

    ``provenance`` holds a bitmask of contributing replica indices per
    command; byte-identical commands from different replicas share one
    entry, so a repeated command is never its own conflict.
    """

    commands: list[Command]
    provenance: list[int]
    replica_count: int


def union_of(sets: Sequence) -> SortedUnion:
    sets = require_canonical(sets)
    masks: dict[Command, int] = {}
    for i, cset in enumerate(sets):
        for c in cset:
            masks[c] = masks.get(c, 0) | (1 << i)
    items = sorted(
        masks.items(),
        key=lambda kv: (
            kv[0].node.parts,
            _lowest_bit(kv[1]),
            kv[0].output.rank,
            kv[0].output.content,
        ),
    )
    return SortedUnion(
        [c for c, _ in items], [m for _, m in items], len(sets)
    )


def _lowest_bit(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


def _mask_to_set(mask: int) -> frozenset[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return frozenset(out)


@dataclass(eq=False)
class Merger:
    """A maximal canonical subset of the union, with per-command
    provenance.  Equality compares the command sets only."""

    commands: CanonicalSet
    provenance: dict[Command, frozenset[int]] = field(default_factory=dict)

    def __iter__(self):
        return iter(self.commands)

    def __len__(self) -> int:
        return len(self.commands)

    def __eq__(self, other) -> bool:
        if isinstance(other, Merger):
            return self.commands == other.commands
        if isinstance(other, CanonicalSet):
            return self.commands == other
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.commands)

    def __repr__(self) -> str:
        return f"Merger({list(self.commands)!r})"


class _Workspace:
    """Sorted union regrouped per node, with ancestor links and the flag
    arrays the generators mutate.  Validates joint refluence on build."""

    def __init__(self, union: SortedUnion, counters: OpCounters):
        self.union = union
        self.counters = counters
        cmds = union.commands
        # contiguous same-node groups over the sorted entries
        self.nodes: list[Path] = []
        self.x: list[Value] = []
        self.mask: list[int] = []
        self.groups: list[list[int]] = []
        self.node_of: list[int] = [0] * len(cmds)
        for e, c in enumerate(cmds):
            if not self.nodes or self.nodes[-1] != c.node:
                self.nodes.append(c.node)
                self.x.append(c.input)
                self.mask.append(0)
                self.groups.append([])
            elif self.x[-1] != c.input:
                raise NotRefluent(f"differing input values at {c.node}")
            self.mask[-1] |= union.provenance[e]
            self.groups[-1].append(e)
            self.node_of[e] = len(self.nodes) - 1
        self.node_up, steps = path_up_links(self.nodes)
        counters.up_steps += steps
        # refluence: profiled nodes may not skip levels, and index sets
        # must nest according to the input values
        for ni, up in enumerate(self.node_up):
            if up is None:
                continue
            if self.nodes[up] != self.nodes[ni].parent():
                raise NotRefluent(
                    f"gap between {self.nodes[up]} and {self.nodes[ni]}"
                )
            if self.x[up].rank != DIR_RANK and self.mask[ni] & ~self.mask[up]:
                raise NotRefluent(
                    f"replica touches {self.nodes[ni]} but not its "
                    f"non-directory parent"
                )
            if self.x[ni].rank != EMPTY_RANK and self.mask[up] & ~self.mask[ni]:
                raise NotRefluent(
                    f"replica touches {self.nodes[up]} but not its "
                    f"non-empty child {self.nodes[ni]}"
                )
        self.empty_children: list[list[int]] = [[] for _ in self.nodes]
        for ni, up in enumerate(self.node_up):
            if up is not None and self.x[ni].rank == EMPTY_RANK:
                self.empty_children[up].append(ni)
        self.alive = [True] * len(cmds)
        self.pending_down = [False] * len(self.nodes)
        self.up_done = [False] * len(self.nodes)

    def kill(self, entry: int) -> None:
        if self.alive[entry]:
            self.alive[entry] = False
            self.counters.deletions += 1

    def alive_entries(self, ni: int) -> list[int]:
        return [e for e in self.groups[ni] if self.alive[e]]

    def set_pending_down(self, ni: int) -> None:
        if not self.pending_down[ni]:
            self.pending_down[ni] = True
            self.counters.flag_writes += 1

    def sweep_up(self, ni: int) -> None:
        """Delete every live command creating a non-directory strictly
        above the node.  Aborts at nodes already swept, which keeps total
        upward work linear."""
        a = self.node_up[ni]
        while a is not None:
            self.counters.up_steps += 1
            if self.up_done[a]:
                break
            self.up_done[a] = True
            self.counters.flag_writes += 1
            for e in self.groups[a]:
                if self.alive[e] and self.union.commands[e].output.rank != DIR_RANK:
                    self.kill(e)
            a = self.node_up[a]

    def apply_pending(self, ni: int) -> None:
        """Inherit a pending downward deletion from the nearest profiled
        ancestor and delete live non-empty creators here."""
        up = self.node_up[ni]
        if up is None or not self.pending_down[up]:
            return
        self.set_pending_down(ni)
        for e in self.groups[ni]:
            if self.alive[e] and self.union.commands[e].output.rank != EMPTY_RANK:
                self.kill(e)

    def survivors(self) -> tuple[list[Command], dict[Command, frozenset[int]]]:
        kept = []
        prov = {}
        for e, c in enumerate(self.union.commands):
            if self.alive[e]:
                kept.append(c)
                prov[c] = _mask_to_set(self.union.provenance[e])
        return kept, prov


def _as_union(sets) -> SortedUnion:
    return sets if isinstance(sets, SortedUnion) else union_of(sets)


def greedy_merger(sets, *, counters: OpCounters | None = None) -> Merger:
    """Single top-down pass: keep the first live command per node, flag
    nodes whose kept command creates a non-directory, and under a flagged
    ancestor drop every command creating non-empty content."""
    counters = counters if counters is not None else OpCounters()
    ws = _Workspace(_as_union(sets), counters)
    _greedy_pass(ws)
    kept, prov = ws.survivors()
    return Merger(CanonicalSet(kept), prov)


def _greedy_pass(ws: _Workspace) -> None:
    del_down = [False] * len(ws.nodes)
    for ni in range(len(ws.nodes)):
        up = ws.node_up[ni]
        if up is not None and del_down[up]:
            del_down[ni] = True
            ws.counters.flag_writes += 1
        kept = None
        for e in ws.groups[ni]:
            if not ws.alive[e]:
                continue
            if kept is not None:
                ws.kill(e)
                continue
            if del_down[ni] and ws.union.commands[e].output.rank != EMPTY_RANK:
                ws.kill(e)
                continue
            kept = e
            if ws.union.commands[e].output.rank != DIR_RANK and not del_down[ni]:
                del_down[ni] = True
                ws.counters.flag_writes += 1


def merger_extending(sets, include, *, counters: OpCounters | None = None) -> Merger:
    """Build a merger containing ``include``.

    First scan: delete everything in conflict with a member of
    ``include``: same-node rivals immediately, non-directory creators
    above through an aborting upward walk, non-empty creators below
    through pending flags resolved in one top-down sweep.  Second scan:
    greedy over the survivors; the forced commands are then alone on
    their nodes and win automatically.
    """
    counters = counters if counters is not None else OpCounters()
    union = _as_union(sets)
    if not isinstance(include, CanonicalSet):
        try:
            include = CanonicalSet(include)
        except NotCanonical as exc:
            raise NotCanonicalSubset(str(exc)) from exc
    ws = _Workspace(union, counters)
    entry_of = {c: e for e, c in enumerate(union.commands)}
    forced = []
    for c in include:
        e = entry_of.get(c)
        if e is None:
            raise NotCanonicalSubset(f"{c!r} is not among the submitted commands")
        forced.append(e)
    for e in forced:
        ni = ws.node_of[e]
        for rival in ws.groups[ni]:
            if rival != e:
                ws.kill(rival)
        c = ws.union.commands[e]
        if c.output.rank != EMPTY_RANK:
            ws.sweep_up(ni)
        if c.output.rank != DIR_RANK:
            ws.set_pending_down(ni)
    for ni in range(len(ws.nodes)):
        ws.apply_pending(ni)
    for e in forced:
        assert ws.alive[e], "a forced command was deleted; the subset is not conflict-free"
    _greedy_pass(ws)
    kept, prov = ws.survivors()
    merger = Merger(CanonicalSet(kept), prov)
    assert include.as_frozenset() <= merger.commands.as_frozenset()
    return merger


# Decision kinds for the four generation passes.
KIND_FILE_NODE = "same-node-file-input"
KIND_DESTRUCTORS_VS_CONSTRUCTORS = "destructors-vs-constructors"
KIND_EMPTY_NODE = "same-node-empty-input"
KIND_DIR_NODE = "same-node-directory-input"


def generate_merger(
    sets,
    oracle: DecisionOracle | None = None,
    *,
    counters: OpCounters | None = None,
    trace: list[DecisionRecord] | None = None,
) -> Merger:
    """Four alternating passes that can reach every merger.

    1. File-input nodes (pairwise uncomparable) get a same-node winner;
       a non-directory-creating winner flags its subtree for deletion of
       non-empty creators, a non-empty-creating winner deletes
       non-directory creators above it.
    2. Bottom-up, each directory node holding destructors with a
       constructor on an empty child resolves either way as a class:
       keep the destructors (flag the subtree) or keep the constructors
       (delete non-directory creators at and above the node).
    3. Top-down over empty-input nodes: pending subtree deletions are
       applied on the way, then a winner is chosen; a file-creating
       winner flags its subtree.
    4. Bottom-up over directory-input nodes: a file-creating winner
       deletes non-directory creators above it.

    A final top-down sweep applies any remaining pending deletions.
    Every choice goes through the oracle; the survivors form a merger.
    """
    counters = counters if counters is not None else OpCounters()
    oracle = oracle if oracle is not None else DecisionOracle.first_wins()
    ws = _Workspace(_as_union(sets), counters)
    cmds = ws.union.commands

    def decide(kind: str, ni: int, candidates: list[int]) -> int:
        counters.decisions += 1
        pick = oracle.choose(len(candidates))
        if trace is not None:
            trace.append(
                DecisionRecord(
                    kind,
                    ws.nodes[ni],
                    [dump_command(cmds[e], with_origin=False) for e in candidates],
                    pick,
                )
            )
        return pick

    # pass 1: file-input nodes
    for ni in range(len(ws.nodes)):
        if ws.x[ni].rank != FILE_RANK:
            continue
        live = ws.alive_entries(ni)
        if not live:
            continue
        winner = live[0]
        if len(live) > 1:
            winner = live[decide(KIND_FILE_NODE, ni, live)]
        for e in live:
            if e != winner:
                ws.kill(e)
        if cmds[winner].output.rank != DIR_RANK:
            ws.set_pending_down(ni)
        if cmds[winner].output.rank != EMPTY_RANK:
            ws.sweep_up(ni)

    # pass 2: directory destructors against constructors on empty children
    for ni in range(len(ws.nodes) - 1, -1, -1):
        if ws.x[ni].rank != DIR_RANK:
            continue
        destructors = ws.alive_entries(ni)
        if not destructors:
            continue
        if not any(ws.alive_entries(c) for c in ws.empty_children[ni]):
            continue
        pick = oracle.choose(2)
        counters.decisions += 1
        if trace is not None:
            trace.append(
                DecisionRecord(
                    KIND_DESTRUCTORS_VS_CONSTRUCTORS,
                    ws.nodes[ni],
                    ["keep-destructors", "keep-constructors"],
                    pick,
                )
            )
        if pick == 0:
            ws.set_pending_down(ni)
        else:
            for e in destructors:
                ws.kill(e)
            ws.sweep_up(ni)

    # pass 3: top-down; apply pending deletions, choose empty-input winners
    for ni in range(len(ws.nodes)):
        ws.apply_pending(ni)
        if ws.x[ni].rank != EMPTY_RANK:
            continue
        live = ws.alive_entries(ni)
        if not live:
            continue
        winner = live[0]
        if len(live) > 1:
            winner = live[decide(KIND_EMPTY_NODE, ni, live)]
        for e in live:
            if e != winner:
                ws.kill(e)
        if cmds[winner].output.rank == FILE_RANK:
            ws.set_pending_down(ni)

    # pass 4: bottom-up directory-input winners
    for ni in range(len(ws.nodes) - 1, -1, -1):
        if ws.x[ni].rank != DIR_RANK:
            continue
        live = ws.alive_entries(ni)
        if not live:
            continue
        winner = live[0]
        if len(live) > 1:
            winner = live[decide(KIND_DIR_NODE, ni, live)]
        for e in live:
            if e != winner:
                ws.kill(e)
        if cmds[winner].output.rank == FILE_RANK:
            ws.sweep_up(ni)

    # residual pending deletions from the bottom-up passes
    for ni in range(len(ws.nodes)):
        ws.apply_pending(ni)

    oracle.finish()
    kept, prov = ws.survivors()
    return Merger(CanonicalSet(kept), prov)


@dataclass
class ConflictGraph:
    """Commands as vertices, conflicting pairs as undirected edges."""

    commands: list[Command]
    edges: list[tuple[int, int]]
    provenance: list[int]


def conflict_graph(sets) -> ConflictGraph:
    union = _as_union(sets)
    edges = [
        (i, j)
        for i in range(len(union.commands))
        for j in range(i + 1, len(union.commands))
        if in_conflict(union.commands[i], union.commands[j])
    ]
    return ConflictGraph(list(union.commands), edges, list(union.provenance))


def enumerate_mergers(sets, limit: int | None = None) -> list[Merger]:
    """All mergers by brute force: maximal independent sets of the
    conflict graph, found as maximal cliques of its complement.  Meant as
    the correctness oracle on small instances; quadratic in the union.
    """
    union = _as_union(sets)
    _Workspace(union, OpCounters())  # validates joint refluence
    graph = conflict_graph(union)
    n = len(graph.commands)
    if n == 0:
        return [Merger(CanonicalSet(()), {})]
    full = (1 << n) - 1
    comp = [full & ~(1 << v) for v in range(n)]
    for i, j in graph.edges:
        comp[i] &= ~(1 << j)
        comp[j] &= ~(1 << i)
    found: list[int] = []

    def expand(r: int, p: int, x: int) -> bool:
        if limit is not None and len(found) >= limit:
            return False
        if not p and not x:
            found.append(r)
            return limit is None or len(found) < limit
        pool = p | x
        pivot = max(_bits(pool), key=lambda v: (p & comp[v]).bit_count())
        for v in _bits(p & ~comp[pivot]):
            bit = 1 << v
            if not expand(r | bit, p & comp[v], x & comp[v]):
                return False
            p &= ~bit
            x |= bit
        return True

    expand(0, full, 0)
    mergers = []
    for mask in found:
        cmds = [graph.commands[v] for v in _bits(mask)]
        prov = {
            graph.commands[v]: _mask_to_set(graph.provenance[v]) for v in _bits(mask)
        }
        mergers.append(Merger(CanonicalSet(cmds), prov))
    mergers.sort(
        key=lambda m: [
            (c.node.parts, c.output.rank, c.output.content) for c in m.commands
        ]
    )
    return mergers


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low
