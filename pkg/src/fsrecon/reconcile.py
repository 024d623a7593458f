"""End-to-end synchronization: update detection, per-replica plans,
asynchronous merge-in for unlocked replicas and latecomers.

Given a chosen merger M, replica i reaches the synchronized state by
rolling back its discarded local commands and applying the commands the
other replicas contributed: the sequence (A_i minus M) inverted, then
(M minus A_i) ordered.  The rolled-back commands can never be re-applied
to the synchronized state; they are reported so a user can reintroduce
the intent in another form.
"""

from __future__ import annotations

from dataclasses import dataclass

from .canonical import CanonicalSet, order_canonical
from .command import Command, invert_sequence
from .errors import CommandRejected, NotAMerger, NotRefluent
from .fsmodel import DIR_RANK, EMPTY_RANK, Filesystem
from .merge import Merger, OpCounters, _Workspace, merger_extending, union_of
from .refluence import check_jointly_refluent, require_canonical


def diff(fs_from: Filesystem, fs_to: Filesystem) -> CanonicalSet:
    """State-based update detection: one command per node whose value
    differs.  The result is canonical and maps ``fs_from`` to ``fs_to``."""
    changed = []
    for node in fs_from.entries.keys() | fs_to.entries.keys():
        before = fs_from.read(node)
        after = fs_to.read(node)
        if before != after:
            changed.append(Command(node, before, after))
    return CanonicalSet(changed)


@dataclass
class ReplicaPlan:
    """Instructions for one replica: roll back, then apply."""

    rollback: list[Command]
    apply: list[Command]
    discarded: CanonicalSet


@dataclass
class SyncPlan:
    merger: Merger
    replicas: list[ReplicaPlan]


@dataclass
class AsyncOutcome:
    """Result of merging a delivered merger into a diverged replica.

    ``instructions`` updates the replica's current state; applying them
    leaves the synchronized state plus ``carried_forward``, the local
    surplus that enters the next round.  ``discarded`` holds local
    commands that lost against the merger.
    """

    instructions: list[Command]
    carried_forward: CanonicalSet
    discarded: CanonicalSet


def _as_canonical(merger: Merger | CanonicalSet) -> CanonicalSet:
    return merger.commands if isinstance(merger, Merger) else merger


def validate_merger(sets, merger: Merger | CanonicalSet) -> None:
    """Raise NotAMerger unless ``merger`` is a maximal canonical subset of
    the union of ``sets``.

    Maximality is probed in linear time: a left-out command must conflict
    with a member, which reduces to a same-node rival or flags carried
    along nearest-ancestor links (a member creating a non-directory above,
    or one creating non-empty content below).
    """
    mset = _as_canonical(merger)
    union = union_of(sets)
    inside = {c: c in mset.as_frozenset() for c in union.commands}
    if len(mset) != sum(inside.values()):
        raise NotAMerger("merger contains commands no replica submitted")
    ws = _Workspace(union, OpCounters())
    member_at: list[Command | None] = [None] * len(ws.nodes)
    for ni in range(len(ws.nodes)):
        for e in ws.groups[ni]:
            c = ws.union.commands[e]
            if inside[c]:
                member_at[ni] = c
    above_non_dir = [False] * len(ws.nodes)
    for ni in range(len(ws.nodes)):
        up = ws.node_up[ni]
        if up is None:
            continue
        above_non_dir[ni] = above_non_dir[up] or (
            member_at[up] is not None and member_at[up].output.rank != DIR_RANK
        )
    below_non_empty = [False] * len(ws.nodes)
    for ni in range(len(ws.nodes) - 1, -1, -1):
        up = ws.node_up[ni]
        val = below_non_empty[ni] or (
            member_at[ni] is not None and member_at[ni].output.rank != EMPTY_RANK
        )
        if up is not None and val:
            below_non_empty[up] = True
    for ni in range(len(ws.nodes)):
        for e in ws.groups[ni]:
            c = ws.union.commands[e]
            if inside[c]:
                continue
            rivaled = member_at[ni] is not None
            shadowed = above_non_dir[ni] and c.output.rank != EMPTY_RANK
            undercut = below_non_empty[ni] and c.output.rank != DIR_RANK
            if not (rivaled or shadowed or undercut):
                raise NotAMerger(f"{c!r} could still be added")


def make_plan(sets, merger: Merger | CanonicalSet) -> SyncPlan:
    """Per-replica rollback/apply sequences for an agreed merger."""
    sets = require_canonical(sets)
    validate_merger(sets, merger)
    mset = _as_canonical(merger)
    if not isinstance(merger, Merger):
        merger = Merger(mset)
    replicas = []
    for cset in sets:
        local_only = cset.difference(mset)
        incoming = mset.difference(cset)
        replicas.append(
            ReplicaPlan(
                rollback=invert_sequence(order_canonical(local_only)),
                apply=order_canonical(incoming),
                discarded=local_only,
            )
        )
    return SyncPlan(merger, replicas)


def async_merge(
    current: CanonicalSet, merger: Merger | CanonicalSet, sets_context=None
) -> AsyncOutcome:
    """Fold a delivered merger into a replica that kept editing.

    ``current`` must describe the replica's present state against the
    same filesystem the merger was computed for; both therefore apply to
    it and must be jointly refluent.  A replica that skipped the round
    entirely passes its divergence, a latecomer passes the empty set.
    """
    (current,) = require_canonical([current])
    mset = _as_canonical(merger)
    if sets_context is not None:
        validate_merger(sets_context, mset)
    if not check_jointly_refluent([current, mset]):
        raise NotRefluent(
            "the local changes and the merger do not share a base filesystem"
        )
    extended = merger_extending([current, mset], mset)
    star = extended.commands
    local_only = current.difference(star)
    incoming = star.difference(current)
    return AsyncOutcome(
        instructions=invert_sequence(order_canonical(local_only))
        + order_canonical(incoming),
        carried_forward=star.difference(mset),
        discarded=local_only,
    )


def verify_convergence(fs0: Filesystem, sets, plan: SyncPlan) -> bool:
    """Replay the whole cycle: every replica's rollback+apply path must
    land on the merger's filesystem."""
    sets = require_canonical(sets)
    target = fs0.apply_sequence(order_canonical(plan.merger.commands))
    for cset, replica in zip(sets, plan.replicas):
        diverged = fs0.apply_sequence(order_canonical(cset))
        try:
            synced = diverged.apply_sequence(list(replica.rollback) + list(replica.apply))
        except CommandRejected:
            return False
        if synced != target:
            return False
    return True
