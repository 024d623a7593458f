"""Synthetic multi-replica workload and timing harness.

The initial filesystem is controlled by a modulus S and a distance bound
T: directories at /i and /i/j, files at /i/j/k, where consecutive index
pairs lie within circular distance T of each other modulo S.  Each user
u deletes everything under the /i/u directories, converts the files in a
three-wide index window around u into directories, and fills each new
directory with S fresh files.  The resulting change sets conflict
heavily while sharing large non-conflicting regions, and they are all
edits of the same base, so they are jointly refluent by construction.

The harness times the sorting phase and the post-sort merge phase
separately; the merge phase is expected to scale linearly with the total
number of distinct commands and to be insensitive to the replica count.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from typing import IO, Iterable

from .canonical import CanonicalSet
from .command import Command
from .fsmodel import DIRECTORY, EMPTY, Filesystem, Path, file_value
from .merge import DecisionOracle, OpCounters, generate_merger, union_of

PAPER_SWEEP_MAX_S = 14  # the published sweep stops here; larger S scales further


@dataclass
class BenchConfig:
    """Workload parameters.  ``users`` replicas each run their edit
    script; every run is repeated ``repeats`` times for stable timings."""

    s: int
    t: int
    users: int
    repeats: int = 1

    def __post_init__(self):
        if self.s < 5:
            raise ValueError("modulus s must be at least 5")
        if not 1 <= self.t <= (self.s - 1) // 2:
            raise ValueError("distance bound t must lie in 1..(s-1)//2")
        if not 2 <= self.users <= self.s - 1:
            raise ValueError("users must lie in 2..s-1")
        if self.repeats < 1:
            raise ValueError("repeats must be positive")


@dataclass
class BenchRecord:
    s: int
    t: int
    users: int
    total_commands: int
    phase: str
    run: int
    elapsed: float


def circular_distance(a: int, b: int, s: int) -> int:
    d = abs(a - b) % s
    return min(d, s - d)


def _initial_content(i: int, j: int, k: int) -> bytes:
    return f"seed {i} {j} {k}".encode()


def _fresh_content(u: int, i: int, j: int, x: int, l: int) -> bytes:
    return f"user {u} {i} {j} {x} {l}".encode()


def gen_initial_fs(s: int, t: int) -> Filesystem:
    """Directories on the top two levels, files on the third, windowed by
    the circular distance bound."""
    entries = {}
    for i in range(s):
        entries[Path((str(i),))] = DIRECTORY
        for j in range(s):
            if circular_distance(i, j, s) > t:
                continue
            entries[Path((str(i), str(j)))] = DIRECTORY
            for k in range(s):
                if circular_distance(j, k, s) > t:
                    continue
                entries[Path((str(i), str(j), str(k)))] = file_value(
                    _initial_content(i, j, k)
                )
    return Filesystem(entries)


def gen_user_changes(s: int, t: int, u: int) -> CanonicalSet:
    """User u's edit script as a canonical set against gen_initial_fs."""
    if not 0 <= u < s:
        raise ValueError("user index must lie in 0..s-1")
    cmds: list[Command] = []
    # clear out and remove the /i/u directories
    for i in range(s):
        if circular_distance(i, u, s) > t:
            continue
        for k in range(s):
            if circular_distance(u, k, s) > t:
                continue
            cmds.append(
                Command(
                    Path((str(i), str(u), str(k))),
                    file_value(_initial_content(i, u, k)),
                    EMPTY,
                    origin=u,
                )
            )
        cmds.append(Command(Path((str(i), str(u))), DIRECTORY, EMPTY, origin=u))
    # convert the files around u into directories and fill them
    window = sorted({(u - 1) % s, u % s, (u + 1) % s})
    for x in window:
        for i in range(s):
            for j in range(s):
                if j == u:
                    continue
                if circular_distance(i, j, s) > t or circular_distance(j, x, s) > t:
                    continue
                node = Path((str(i), str(j), str(x)))
                cmds.append(
                    Command(node, file_value(_initial_content(i, j, x)), DIRECTORY, origin=u)
                )
                for l in range(s):
                    cmds.append(
                        Command(
                            node.child(str(l)),
                            EMPTY,
                            file_value(_fresh_content(u, i, j, x, l)),
                            origin=u,
                        )
                    )
    return CanonicalSet(cmds)


def workload(cfg: BenchConfig) -> list[CanonicalSet]:
    return [gen_user_changes(cfg.s, cfg.t, u) for u in range(cfg.users)]


def run_bench(
    cfg: BenchConfig, counters: OpCounters | None = None
) -> list[BenchRecord]:
    """Time the sort phase and the post-sort merge phase per repeat."""
    sets = workload(cfg)
    records = []
    for run in range(cfg.repeats):
        t0 = time.perf_counter()
        union = union_of(sets)
        t1 = time.perf_counter()
        generate_merger(union, DecisionOracle.first_wins(), counters=counters)
        t2 = time.perf_counter()
        total = len(union.commands)
        records.append(BenchRecord(cfg.s, cfg.t, cfg.users, total, "sort", run, t1 - t0))
        records.append(BenchRecord(cfg.s, cfg.t, cfg.users, total, "merge", run, t2 - t1))
        records.append(BenchRecord(cfg.s, cfg.t, cfg.users, total, "total", run, t2 - t0))
    return records


def write_csv(records: Iterable[BenchRecord], stream: IO[str]) -> None:
    writer = csv.writer(stream)
    writer.writerow(["s", "t", "users", "total_commands", "phase", "run", "elapsed_seconds"])
    for r in records:
        writer.writerow([r.s, r.t, r.users, r.total_commands, r.phase, r.run, f"{r.elapsed:.6f}"])
