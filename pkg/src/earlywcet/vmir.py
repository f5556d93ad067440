"""VMIR: a line-based virtual instruction format and its static features.

A VMIR file is UTF-8 text, one construct per line:

    name:               declares a jump target (a label alone on its line)
    mnemonic op1 op2    an instruction; operands are uninterpreted tokens
    # comment           `#` starts a comment running to end of line

Blank lines are skipped, mnemonics are case-insensitive, and commas between
operands are treated as whitespace. The mnemonic table groups instructions
into twelve categories:

    add | sub | mul | div      arithmetic (one category each)
    and, or, xor, not          logic
    shl, shr                   shift
    call | ret                 high-level control
    jmp, br                    jump (last operand is the target label)
    load | store | cmp         memory and comparison

The per-category static occurrence counts form the 12-entry feature vector
used as the regression input throughout the package. Counting is purely
static: an instruction inside a loop body counts once.
"""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    EmptyProgramError,
    IoFailure,
    UnknownMnemonicError,
    UnresolvedLabelError,
    VmirError,
)
from .fileio import atomic_write_text


class Category(enum.IntEnum):
    """Instruction categories in canonical feature order."""

    ADD = 0
    SUB = 1
    MUL = 2
    DIV = 3
    LOGIC = 4
    SHIFT = 5
    CALL = 6
    RETURN = 7
    JUMP = 8
    LOAD = 9
    STORE = 10
    COMPARE = 11


#: Column names of the feature CSV, index-aligned with `Category`.
FEATURE_NAMES: tuple[str, ...] = (
    "add", "sub", "mul", "div", "logic", "shift",
    "call", "ret", "jump", "load", "store", "cmp",
)

N_FEATURES = len(FEATURE_NAMES)

MNEMONIC_TABLE: dict[str, Category] = {
    "add": Category.ADD,
    "sub": Category.SUB,
    "mul": Category.MUL,
    "div": Category.DIV,
    "and": Category.LOGIC,
    "or": Category.LOGIC,
    "xor": Category.LOGIC,
    "not": Category.LOGIC,
    "shl": Category.SHIFT,
    "shr": Category.SHIFT,
    "call": Category.CALL,
    "ret": Category.RETURN,
    "jmp": Category.JUMP,
    "br": Category.JUMP,
    "load": Category.LOAD,
    "store": Category.STORE,
    "cmp": Category.COMPARE,
}

#: Mnemonic used when rendering an instruction that was built without one.
CANONICAL_MNEMONIC: dict[Category, str] = {
    Category.ADD: "add",
    Category.SUB: "sub",
    Category.MUL: "mul",
    Category.DIV: "div",
    Category.LOGIC: "and",
    Category.SHIFT: "shl",
    Category.CALL: "call",
    Category.RETURN: "ret",
    Category.JUMP: "jmp",
    Category.LOAD: "load",
    Category.STORE: "store",
    Category.COMPARE: "cmp",
}


@dataclass(frozen=True)
class Instruction:
    category: Category
    operands: tuple[str, ...]
    source_line: int
    mnemonic: str = ""

    def __post_init__(self):
        if self.source_line < 1:
            raise ValueError(f"source_line must be >= 1, got {self.source_line}")
        if not self.mnemonic:
            object.__setattr__(self, "mnemonic", CANONICAL_MNEMONIC[self.category])
        elif MNEMONIC_TABLE.get(self.mnemonic) is not self.category:
            raise ValueError(
                f"mnemonic {self.mnemonic!r} does not belong to category {self.category.name}"
            )

    @property
    def jump_target(self) -> str | None:
        """Target label of a jump instruction (its last operand), else None."""
        if self.category is Category.JUMP and self.operands:
            return self.operands[-1]
        return None


@dataclass(frozen=True)
class VmirProgram:
    """A parsed program: ordered instructions plus label declarations.

    `label_positions` maps each label to the index of the instruction it
    precedes; `len(instructions)` marks a label at the very end.
    """

    name: str
    instructions: tuple[Instruction, ...]
    label_positions: Mapping[str, int] = field(default_factory=dict)

    @property
    def labels(self) -> frozenset[str]:
        return frozenset(self.label_positions)

    def validate(self, path: str | None = None) -> "VmirProgram":
        """Check the program invariants, raising a VmirError on violation."""
        if not self.instructions:
            raise EmptyProgramError(path)
        previous = 0
        for instr in self.instructions:
            if instr.source_line <= previous:
                raise VmirError(
                    f"source lines not strictly increasing at line {instr.source_line}",
                    path,
                )
            previous = instr.source_line
        for instr in self.instructions:
            if instr.category is Category.JUMP:
                target = instr.jump_target
                if target is None or target not in self.label_positions:
                    raise UnresolvedLabelError(
                        target or "<missing>", instr.source_line, path
                    )
        return self


@dataclass(frozen=True)
class FeatureVector:
    """Fixed 12 non-negative static counts in canonical category order."""

    counts: tuple[int, ...]

    def __post_init__(self):
        coerced = tuple(int(c) for c in self.counts)
        if len(coerced) != N_FEATURES:
            raise ValueError(f"expected {N_FEATURES} counts, got {len(coerced)}")
        if any(c < 0 for c in coerced):
            raise ValueError(f"negative count in {coerced}")
        object.__setattr__(self, "counts", coerced)

    def __add__(self, other: "FeatureVector") -> "FeatureVector":
        return FeatureVector(tuple(a + b for a, b in zip(self.counts, other.counts)))

    def __getitem__(self, category: Category) -> int:
        return self.counts[int(category)]

    @property
    def total(self) -> int:
        return sum(self.counts)

    def to_array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.float64)

    def as_dict(self) -> dict[str, int]:
        return dict(zip(FEATURE_NAMES, self.counts))


def parse_vmir(text: str, name: str = "<string>", path: str | None = None) -> VmirProgram:
    """Parse VMIR source text into a validated program."""
    instructions: list[Instruction] = []
    label_positions: dict[str, int] = {}
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.replace(",", " ").split()
        if len(tokens) == 1 and tokens[0].endswith(":") and len(tokens[0]) > 1:
            label_positions[tokens[0][:-1]] = len(instructions)
            continue
        mnemonic = tokens[0].lower()
        category = MNEMONIC_TABLE.get(mnemonic)
        if category is None:
            raise UnknownMnemonicError(tokens[0], line_number, path)
        instructions.append(
            Instruction(category, tuple(tokens[1:]), line_number, mnemonic)
        )
    program = VmirProgram(name, tuple(instructions), label_positions)
    return program.validate(path)


def parse_vmir_file(path) -> VmirProgram:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(path, exc.strerror or str(exc)) from exc
    return parse_vmir(text, name=Path(path).stem, path=str(path))


def render_vmir(program: VmirProgram) -> str:
    """Serialize a program back to VMIR text.

    Labels are emitted at their recorded positions; reparsing the result
    reproduces the instruction category sequence exactly.
    """
    labels_at: dict[int, list[str]] = defaultdict(list)
    for label, position in program.label_positions.items():
        labels_at[position].append(label)
    lines: list[str] = []
    for index, instr in enumerate(program.instructions):
        for label in labels_at.get(index, ()):
            lines.append(f"{label}:")
        lines.append(" ".join((instr.mnemonic, *instr.operands)))
    for label in labels_at.get(len(program.instructions), ()):
        lines.append(f"{label}:")
    return "\n".join(lines) + "\n"


def extract_features(program: VmirProgram) -> FeatureVector:
    """Static occurrence count of each instruction category."""
    counts = [0] * N_FEATURES
    for instr in program.instructions:
        counts[int(instr.category)] += 1
    return FeatureVector(tuple(counts))


def extract_features_batch(paths: Sequence) -> list[tuple[str, FeatureVector]]:
    """Extract features for several files, preserving order.

    All files are parsed before anything is returned, so a failure on any
    input (reported with its path) yields no partial result.
    """
    rows: list[tuple[str, FeatureVector]] = []
    for path in paths:
        program = parse_vmir_file(path)
        rows.append((program.name, extract_features(program)))
    return rows


def feature_csv_text(rows: Iterable[tuple[str, FeatureVector]]) -> str:
    lines = ["name," + ",".join(FEATURE_NAMES)]
    for name, vector in rows:
        lines.append(name + "," + ",".join(str(c) for c in vector.counts))
    return "\n".join(lines) + "\n"


def write_feature_csv(path, rows: Iterable[tuple[str, FeatureVector]]) -> None:
    atomic_write_text(path, feature_csv_text(rows))
