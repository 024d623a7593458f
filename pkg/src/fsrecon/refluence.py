"""Deciding whether canonical sets share a filesystem they all apply to.

Canonical sets are jointly refluent when one filesystem exists on which
every set applies without breaking.  Replica change sets always have this
property since they were applied to identical copies.  The decision runs
in linear time after sorting: commands on one node must agree on their
input value, the mentioned nodes may not skip levels, and the replica
index sets must nest along parent-child edges depending on the inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .canonical import CanonicalSet, path_up_links
from .command import Command
from .errors import NotCanonical, NotCanonicalInput, NotRefluent
from .fsmodel import DIR_RANK, DIRECTORY, EMPTY_RANK, Filesystem, Path, Value


def require_canonical(sets: Iterable) -> list[CanonicalSet]:
    """Coerce inputs to validated canonical sets."""
    out = []
    for s in sets:
        if isinstance(s, CanonicalSet):
            out.append(s)
        else:
            try:
                out.append(CanonicalSet(s))
            except NotCanonical as exc:
                raise NotCanonicalInput(str(exc)) from exc
    return out


@dataclass
class NodeProfile:
    """Per-node summary of a family of canonical sets: which replicas
    touch the node, their shared input value, and the nearest profiled
    ancestor."""

    node: Path
    index_set: int
    common_input: Value
    up: int | None


def node_profiles(sets: Sequence[CanonicalSet]) -> list[NodeProfile] | None:
    """Profiles sorted by path, or None when two commands on one node
    disagree on their input value."""
    inputs: dict[Path, Value] = {}
    masks: dict[Path, int] = {}
    for i, cset in enumerate(sets):
        for c in cset:
            known = inputs.get(c.node)
            if known is None:
                inputs[c.node] = c.input
                masks[c.node] = 0
            elif known != c.input:
                return None
            masks[c.node] |= 1 << i
    nodes = sorted(inputs, key=lambda p: p.parts)
    up, _ = path_up_links(nodes)
    return [
        NodeProfile(n, masks[n], inputs[n], up[i]) for i, n in enumerate(nodes)
    ]


def check_jointly_refluent(sets: Sequence) -> bool:
    """Linear check that all sets apply to one common filesystem.

    Conditions over the profiled nodes: (a) equal inputs per node; (b) the
    nearest profiled ancestor is the parent; (c) replicas touching a node
    whose parent's input is not a directory also touch the parent; (d)
    replicas touching the parent of a node with non-empty input also touch
    that node.
    """
    sets = require_canonical(sets)
    profiles = node_profiles(sets)
    if profiles is None:
        return False
    for p in profiles:
        if p.up is None:
            continue
        above = profiles[p.up]
        if above.node != p.node.parent():
            return False
        if above.common_input.rank != DIR_RANK and p.index_set & ~above.index_set:
            return False
        if p.common_input.rank != EMPTY_RANK and above.index_set & ~p.index_set:
            return False
    return True


def check_pairwise_refluent(a: CanonicalSet, b: CanonicalSet) -> bool:
    """Two-set refluence, checked directly on the definition's conditions:
    shared inputs per node, no gaps between comparable mentioned nodes, and
    directory-above / empty-below inputs where only one set reaches."""
    a, b = require_canonical([a, b])
    inputs: dict[Path, Value] = {}
    member: dict[Path, int] = {}
    for bit, cset in ((1, a), (2, b)):
        for c in cset:
            known = inputs.get(c.node)
            if known is None:
                inputs[c.node] = c.input
                member[c.node] = 0
            elif known != c.input:
                return False
            member[c.node] |= bit
    nodes = sorted(inputs, key=lambda p: p.parts)
    up, _ = path_up_links(nodes)
    for i, n in enumerate(nodes):
        if up[i] is None:
            continue
        parent = nodes[up[i]]
        if parent != n.parent():
            return False
        for bit in (1, 2):
            has_child = member[n] & bit
            has_parent = member[parent] & bit
            if has_child and not has_parent and inputs[parent].rank != DIR_RANK:
                return False
            if has_parent and not has_child and inputs[n].rank != EMPTY_RANK:
                return False
    return True


def witness_filesystem(sets: Sequence) -> Filesystem:
    """Construct a filesystem on which every input set applies.

    Inputs are placed at the mentioned nodes, directories fill every
    unmentioned path above non-empty content and above constructor nodes,
    and everything else stays empty.  Raises NotRefluent when no witness
    exists.
    """
    sets = require_canonical(sets)
    if not check_jointly_refluent(sets):
        raise NotRefluent("the sets share no common filesystem")
    inputs: dict[Path, Value] = {}
    for cset in sets:
        for c in cset:
            inputs[c.node] = c.input
    entries = {n: v for n, v in inputs.items() if not v.is_empty}
    need_dir: set[Path] = set()
    for n, v in inputs.items():
        if not v.is_empty:
            for a in n.ancestors():
                if a not in inputs:
                    need_dir.add(a)
    for cset in sets:
        for c in cset:
            if c.is_constructor:
                for a in c.node.ancestors():
                    if a not in inputs:
                        need_dir.add(a)
    for a in need_dir:
        entries[a] = DIRECTORY
    return Filesystem(entries)


def check_applicable(cset: CanonicalSet, fs: Filesystem) -> bool:
    """Direct applicability conditions for a canonical set on a filesystem.

    Every input value must match; below each destructor only empty
    unmentioned nodes may remain; above each constructor every unmentioned
    node must hold a directory.  Agrees with simulating the ordered set.
    """
    (cset,) = require_canonical([cset])
    mentioned = {c.node for c in cset}
    for c in cset:
        if fs.read(c.node) != c.input:
            return False
    destructor_nodes = [c.node for c in cset if c.is_destructor]
    if destructor_nodes:
        for stored in fs.entries:
            if stored in mentioned:
                continue
            for n in destructor_nodes:
                if n.is_ancestor_of(stored):
                    return False
    for c in cset:
        if c.is_constructor:
            for a in c.node.ancestors():
                if a not in mentioned and fs.read(a) != DIRECTORY:
                    return False
    return True
