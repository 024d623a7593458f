"""Command-line front end binding the library to line-oriented files.

File formats: filesystem snapshots hold ``<path>\\t<value>`` lines,
command files hold ``<path>\\t<input>\\t<output>[\\t<origin>]`` lines,
with values written ``D``, ``E`` or ``F:<base64>``.  Command-set files
are unordered, sequence files are ordered.  All outputs are sorted where
order carries no meaning, so text comparison doubles as set equality.

Exit status: 0 on success, 1 on a domain error (its name goes to
stderr), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import bench as bench_mod
from .canonical import CanonicalSet, canonical_violation, canonize, order_canonical
from .command import (
    dump_command,
    dump_command_seq,
    dump_command_set,
    load_commands,
)
from .errors import FormatError, SyncError
from .fsmodel import dump_snapshot, load_snapshot
from .merge import (
    DecisionOracle,
    enumerate_mergers,
    generate_merger,
    merger_extending,
)
from .reconcile import async_merge, make_plan
from .refluence import check_jointly_refluent, require_canonical


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write_output(text: str, target: str | None) -> None:
    if target is None or target == "-":
        sys.stdout.write(text)
    else:
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load_sets(paths: list[str]) -> list[CanonicalSet]:
    return require_canonical([load_commands(_read(p)) for p in paths])


def _load_script(path: str) -> list[int]:
    choices = []
    for lineno, line in enumerate(_read(path).splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            choices.append(int(line))
        except ValueError as exc:
            raise FormatError(f"script line {lineno}: expected an index") from exc
    return choices


def _oracle_from(args) -> DecisionOracle:
    if getattr(args, "script", None):
        return DecisionOracle.scripted(_load_script(args.script))
    seed = getattr(args, "seed", None)
    if seed is None and os.environ.get("SYNC_SEED"):
        seed = int(os.environ["SYNC_SEED"])
    if seed is not None:
        return DecisionOracle.seeded(seed)
    return DecisionOracle.first_wins()


def cmd_canonize(args) -> int:
    cset = canonize(load_commands(_read(args.sequence)))
    _write_output(dump_command_set(cset), args.output)
    return 0


def cmd_check_canonical(args) -> int:
    message = canonical_violation(load_commands(_read(args.set)))
    if message is None:
        print("canonical")
        return 0
    print(f"NotCanonical: {message}", file=sys.stderr)
    return 1


def cmd_order(args) -> int:
    (cset,) = require_canonical([load_commands(_read(args.set))])
    _write_output(dump_command_seq(order_canonical(cset)), args.output)
    return 0


def cmd_refluent(args) -> int:
    if check_jointly_refluent(_load_sets(args.sets)):
        print("refluent")
        return 0
    print("not refluent")
    return 1


def cmd_merge(args) -> int:
    sets = _load_sets(args.sets)
    if args.extend is not None:
        include = CanonicalSet(load_commands(_read(args.extend)))
        merger = merger_extending(sets, include)
    else:
        trace: list = []
        merger = generate_merger(sets, _oracle_from(args), trace=trace)
        for i, rec in enumerate(trace):
            options = ", ".join(f"{j}={c}" for j, c in enumerate(rec.candidates))
            print(
                f"# decision {i}: {rec.kind} at {rec.node}: {options} -> {rec.chosen}",
                file=sys.stderr,
            )
    _write_output(dump_command_set(merger.commands, with_origin=False), args.output)
    return 0


def cmd_enumerate(args) -> int:
    mergers = enumerate_mergers(_load_sets(args.sets), limit=args.limit)
    blocks = []
    for i, m in enumerate(mergers):
        blocks.append(f"[merger {i}]\n" + dump_command_set(m.commands, with_origin=False))
    _write_output("\n".join(blocks), args.output)
    return 0


def cmd_diff(args) -> int:
    from .reconcile import diff

    changes = diff(load_snapshot(_read(args.fs_from)), load_snapshot(_read(args.fs_to)))
    _write_output(dump_command_set(changes), args.output)
    return 0


def cmd_apply(args) -> int:
    fs = load_snapshot(_read(args.fs))
    commands = load_commands(_read(args.commands))
    if not args.sequence:
        (cset,) = require_canonical([commands])
        commands = order_canonical(cset)
    result = fs.apply_sequence(commands)
    _write_output(dump_snapshot(result), args.output)
    return 0


def cmd_plan(args) -> int:
    merger = CanonicalSet(load_commands(_read(args.merger)))
    sets = _load_sets(args.sets)
    plan = make_plan(sets, merger)
    lines = []
    for i, rp in enumerate(plan.replicas):
        lines.append(f"[rollback {i}]")
        lines.extend(dump_command(c) for c in rp.rollback)
        lines.append(f"[apply {i}]")
        lines.extend(dump_command(c) for c in rp.apply)
        lines.append(f"[discarded {i}]")
        lines.extend(dump_command(c) for c in rp.discarded)
    _write_output("".join(line + "\n" for line in lines), args.output)
    return 0


def cmd_async_merge(args) -> int:
    current = CanonicalSet(load_commands(_read(args.current)))
    merger = CanonicalSet(load_commands(_read(args.merger)))
    outcome = async_merge(current, merger)
    lines = ["[instructions]"]
    lines.extend(dump_command(c) for c in outcome.instructions)
    lines.append("[carried-forward]")
    lines.extend(dump_command(c) for c in outcome.carried_forward)
    lines.append("[discarded]")
    lines.extend(dump_command(c) for c in outcome.discarded)
    _write_output("".join(line + "\n" for line in lines), args.output)
    return 0


def cmd_bench(args) -> int:
    cfg = bench_mod.BenchConfig(s=args.s, t=args.t, users=args.users, repeats=args.repeats)
    records = bench_mod.run_bench(cfg)
    if args.csv is None or args.csv == "-":
        bench_mod.write_csv(records, sys.stdout)
    else:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            bench_mod.write_csv(records, fh)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fsrecon",
        description="Reconcile diverged filesystem replicas via canonical command sets.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("-o", "--output", default=None, help="output file (default stdout)")
        return p

    p = add("canonize", cmd_canonize, "collapse a command sequence into a canonical set")
    p.add_argument("sequence")

    p = sub.add_parser("check-canonical", help="verify a command set is canonical")
    p.set_defaults(func=cmd_check_canonical)
    p.add_argument("set")

    p = add("order", cmd_order, "arrange a canonical set into an executable sequence")
    p.add_argument("set")

    p = sub.add_parser("refluent", help="do the sets share a common base filesystem?")
    p.set_defaults(func=cmd_refluent)
    p.add_argument("sets", nargs="+")

    p = add("merge", cmd_merge, "generate one merger of the replica sets")
    p.add_argument("sets", nargs="+")
    p.add_argument("--policy", choices=["first"], default=None, help="winner policy")
    p.add_argument("--seed", type=int, default=None, help="seeded random decisions")
    p.add_argument("--script", default=None, help="file of decision indices")
    p.add_argument("--extend", default=None, help="canonical subset the merger must contain")

    p = add("enumerate", cmd_enumerate, "list every merger (small instances)")
    p.add_argument("sets", nargs="+")
    p.add_argument("--limit", type=int, default=None)

    p = add("diff", cmd_diff, "canonical set transforming one snapshot into another")
    p.add_argument("fs_from")
    p.add_argument("fs_to")

    p = add("apply", cmd_apply, "apply a command set or sequence to a snapshot")
    p.add_argument("fs")
    p.add_argument("commands")
    p.add_argument("--sequence", action="store_true", help="apply in file order")

    p = add("plan", cmd_plan, "per-replica rollback/apply instructions for a merger")
    p.add_argument("merger")
    p.add_argument("sets", nargs="+")

    p = add("async-merge", cmd_async_merge, "fold a delivered merger into local changes")
    p.add_argument("current")
    p.add_argument("merger")

    p = sub.add_parser("bench", help="run the synthetic workload and emit CSV timings")
    p.set_defaults(func=cmd_bench)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--users", type=int, required=True)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--csv", default=None, help="CSV output file (default stdout)")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SyncError as err:
        print(f"{type(err).__name__}: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"{type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
