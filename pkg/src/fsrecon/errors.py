"""Domain error hierarchy shared by all modules."""


class SyncError(Exception):
    """Base class for every domain-level failure."""


class FormatError(SyncError):
    """Malformed serialized path, value, command, snapshot or script."""


class CommandRejected(SyncError):
    """A command cannot be applied to a filesystem.

    Carries the offending command and, when raised from a sequence, the
    zero-based position of the command inside that sequence.
    """

    def __init__(self, message, command=None, index=None):
        super().__init__(message)
        self.command = command
        self.index = index


class PreconditionFailed(CommandRejected):
    """The stored value at the command's node differs from its input value."""


class TreeBroken(CommandRejected):
    """Applying the command would leave content without a directory above it,
    or non-empty content below a non-directory."""


class NotCanonical(SyncError):
    """A command set violates the canonical-set conditions."""


class NotCanonicalInput(NotCanonical):
    """An input that must be a canonical set is not."""


class BrokenSequence(SyncError):
    """A command sequence was detected as breaking during collapsing."""


class NotRefluent(SyncError):
    """No single filesystem exists on which all given canonical sets apply."""


class NotCanonicalSubset(SyncError):
    """The set to be extended is not a canonical subset of the command union."""


class NotAMerger(SyncError):
    """A claimed merger is not a maximal canonical subset of the union."""


class ScriptExhausted(SyncError):
    """A scripted decision oracle ran out of choices."""


class ScriptOutOfRange(SyncError):
    """A scripted choice index does not address any candidate."""
