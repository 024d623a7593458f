"""Filesystem model: reads, validity, command application, snapshots."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import p, random_fs, random_walk
from fsrecon.command import Command, invert_sequence
from fsrecon.errors import FormatError, PreconditionFailed, TreeBroken
from fsrecon.fsmodel import (
    DIRECTORY,
    EMPTY,
    Filesystem,
    Path,
    dump_snapshot,
    file_value,
    load_snapshot,
)

FO = file_value(b"orig")


def base_fs() -> Filesystem:
    return Filesystem({p("/a"): DIRECTORY, p("/a/b"): DIRECTORY, p("/a/b/c"): FO})


class TestPath:
    def test_round_trip(self):
        for text in ["/", "/a", "/a/b/cc/d"]:
            assert str(Path.from_string(text)) == text

    def test_rejects_bad_segments(self):
        with pytest.raises(FormatError):
            Path(("a", ""))
        with pytest.raises(FormatError):
            Path(("a/b",))
        with pytest.raises(FormatError):
            Path.from_string("a/b")

    def test_parent_and_ancestors(self):
        node = p("/a/b/c")
        assert node.parent() == p("/a/b")
        assert p("/a").parent() == Path(())
        assert Path(()).parent() is None
        assert list(node.ancestors()) == [p("/a/b"), p("/a")]

    def test_ancestors_sort_first(self):
        assert p("/a") < p("/a/b") < p("/a/b/c") < p("/a/bb")
        # whole-string comparison would put /a/bb before /a/b/c
        assert sorted([p("/a/bb"), p("/a/b/c")]) == [p("/a/b/c"), p("/a/bb")]

    @given(st.lists(st.sampled_from("ab"), max_size=3), st.lists(st.sampled_from("ab"), max_size=3))
    def test_order_consistent_with_ancestry(self, xs, ys):
        a, b = Path(xs), Path(ys)
        if a.is_ancestor_of(b):
            assert a < b


class TestRead:
    def test_stored_file(self):
        assert base_fs().read(p("/a/b/c")) == FO

    def test_unmapped_is_empty(self):
        assert base_fs().read(p("/a/z")) == EMPTY

    def test_empty_fs_root(self):
        assert Filesystem().read(Path(())) == EMPTY


class TestIsValid:
    def test_file_under_directory(self):
        assert Filesystem({p("/a"): DIRECTORY, p("/a/b"): file_value(b"f")}).is_valid()

    def test_file_under_nothing(self):
        assert not Filesystem({p("/a/b"): file_value(b"f")}).is_valid()

    def test_all_empty(self):
        assert Filesystem().is_valid()

    def test_file_under_file(self):
        fs = Filesystem({p("/a"): file_value(b"f"), p("/a/b"): file_value(b"g")})
        assert not fs.is_valid()


class TestApplyCommand:
    def test_delete_file(self):
        fs = base_fs().apply_command(Command(p("/a/b/c"), FO, EMPTY))
        assert fs == Filesystem({p("/a"): DIRECTORY, p("/a/b"): DIRECTORY})

    def test_delete_nonempty_directory_breaks(self):
        with pytest.raises(TreeBroken):
            base_fs().apply_command(Command(p("/a"), DIRECTORY, EMPTY))

    def test_wrong_input_value(self):
        with pytest.raises(PreconditionFailed):
            base_fs().apply_command(Command(p("/a/b/c"), EMPTY, file_value(b"f")))

    def test_create_without_parent_breaks(self):
        with pytest.raises(TreeBroken):
            Filesystem().apply_command(Command(p("/a/b"), EMPTY, DIRECTORY))

    def test_first_level_needs_no_parent(self):
        fs = Filesystem().apply_command(Command(p("/a"), EMPTY, DIRECTORY))
        assert fs.read(p("/a")) == DIRECTORY
        assert fs.is_valid()

    def test_touches_only_its_node(self):
        rng = random.Random(7)
        for _ in range(50):
            fs = random_fs(rng)
            seq, _ = random_walk(rng, fs, 1)
            if not seq:
                continue
            cmd = seq[0]
            after = fs.apply_command(cmd)
            for node in fs.entries.keys() | after.entries.keys():
                if node != cmd.node:
                    assert fs.read(node) == after.read(node)


class TestApplySequence:
    def test_empties_the_tree(self):
        seq = [
            Command(p("/a/b/c"), FO, EMPTY),
            Command(p("/a/b"), DIRECTORY, EMPTY),
            Command(p("/a"), DIRECTORY, EMPTY),
        ]
        assert base_fs().apply_sequence(seq) == Filesystem()

    def test_empty_sequence(self):
        fs = base_fs()
        assert fs.apply_sequence([]) == fs

    def test_create_then_delete_is_identity(self):
        fs = base_fs()
        f = file_value(b"tmp")
        seq = [Command(p("/a/b/n"), EMPTY, f), Command(p("/a/b/n"), f, EMPTY)]
        assert fs.apply_sequence(seq) == fs

    def test_error_carries_position(self):
        seq = [
            Command(p("/a/b/c"), FO, EMPTY),
            Command(p("/a"), DIRECTORY, EMPTY),
        ]
        with pytest.raises(TreeBroken) as err:
            base_fs().apply_sequence(seq)
        assert err.value.index == 1

    def test_rollback_restores_origin(self):
        rng = random.Random(21)
        for _ in range(60):
            fs = random_fs(rng)
            seq, mutated = random_walk(rng, fs, rng.randint(1, 6))
            assert fs.apply_sequence(seq) == mutated
            assert mutated.apply_sequence(invert_sequence(seq)) == fs

    def test_validity_preserved(self):
        rng = random.Random(3)
        for _ in range(40):
            fs = random_fs(rng)
            assert fs.is_valid()
            _, mutated = random_walk(rng, fs, 5)
            assert mutated.is_valid()


class TestSnapshotFormat:
    def test_round_trip(self):
        rng = random.Random(11)
        for _ in range(25):
            fs = random_fs(rng)
            assert load_snapshot(dump_snapshot(fs)) == fs

    def test_sorted_and_tab_separated(self):
        text = dump_snapshot(base_fs())
        assert text.splitlines() == ["/a\tD", "/a/b\tD", "/a/b/c\tF:b3JpZw=="]

    def test_rejects_empty_entries(self):
        with pytest.raises(FormatError):
            load_snapshot("/a\tE\n")

    @settings(max_examples=60)
    @given(st.binary(max_size=12))
    def test_content_survives_encoding(self, blob):
        fs = Filesystem({p("/x"): file_value(blob)})
        assert load_snapshot(dump_snapshot(fs)) == fs
