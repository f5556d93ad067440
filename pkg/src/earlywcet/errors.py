"""Exception types shared across the toolkit.

Every error raised on a data or I/O path derives from :class:`EarlyWcetError`
so callers (notably the CLI) can map failures to exit codes in one place.
"""

from __future__ import annotations


class EarlyWcetError(Exception):
    """Base class for all toolkit errors."""


# --- VMIR parsing -----------------------------------------------------------


class VmirError(EarlyWcetError):
    """Parse-level error in a VMIR program; carries the source path if known."""

    def __init__(self, message: str, path: str | None = None):
        super().__init__(message)
        self.path = path

    def __str__(self) -> str:
        base = super().__str__()
        return f"{self.path}: {base}" if self.path else base


class UnknownMnemonicError(VmirError):
    def __init__(self, mnemonic: str, line_number: int, path: str | None = None):
        super().__init__(f"line {line_number}: unknown mnemonic {mnemonic!r}", path)
        self.mnemonic = mnemonic
        self.line_number = line_number


class UnresolvedLabelError(VmirError):
    def __init__(self, name: str, line_number: int, path: str | None = None):
        super().__init__(
            f"line {line_number}: jump target {name!r} is not a declared label", path
        )
        self.name = name
        self.line_number = line_number


class EmptyProgramError(VmirError):
    def __init__(self, path: str | None = None):
        super().__init__("program contains no instructions", path)


# --- dataset ----------------------------------------------------------------


class IoFailure(EarlyWcetError):
    def __init__(self, path, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = str(path)


class SchemaMismatchError(EarlyWcetError):
    def __init__(self, column: str, detail: str = ""):
        message = f"column {column!r} {detail}" if detail else f"bad column {column!r}"
        super().__init__(message)
        self.column = column


class NonPositiveLabelError(EarlyWcetError):
    def __init__(self, row: int, value: float):
        super().__init__(f"row {row}: cycle count {value!r} is not positive")
        self.row = row
        self.value = value


class DuplicateNameError(EarlyWcetError):
    def __init__(self, name: str):
        super().__init__(f"duplicate sample name {name!r}")
        self.name = name


class EmptyDatasetError(EarlyWcetError):
    def __init__(self):
        super().__init__("dataset contains no samples")


class BadFoldCountError(EarlyWcetError):
    def __init__(self, k: int, n: int):
        super().__init__(f"fold count {k} invalid for {n} samples (need 1 < k <= n)")
        self.k = k
        self.n = n


# --- neural network ---------------------------------------------------------


class BadShapeError(EarlyWcetError):
    """Invalid network topology in a configuration."""


class ShapeMismatchError(EarlyWcetError):
    """Array shapes do not chain with the model's layer structure."""


class LengthMismatchError(EarlyWcetError):
    def __init__(self, n_predictions: int, n_targets: int):
        super().__init__(
            f"{n_predictions} predictions vs {n_targets} targets"
        )


class EmptyInputError(EarlyWcetError):
    def __init__(self, what: str = "input"):
        super().__init__(f"{what} is empty")


class StaleCacheError(EarlyWcetError):
    def __init__(self):
        super().__init__("forward cache was produced by different parameters")


class MissingNormStatsError(EarlyWcetError):
    def __init__(self):
        super().__init__("model carries no normalization statistics; train first")


class CorruptModelError(EarlyWcetError):
    def __init__(self, detail: str):
        super().__init__(f"corrupt model file: {detail}")
        self.detail = detail


class NonFiniteLossError(EarlyWcetError):
    def __init__(self, epoch: int):
        super().__init__(f"training loss became non-finite at epoch {epoch}")
        self.epoch = epoch


# --- experiment -------------------------------------------------------------


class EmptyReportsError(EarlyWcetError):
    def __init__(self):
        super().__init__("no run reports to select from")
