"""Six-dot Braille encoding with the 2x3 cell convention.

Cells 1,2,3 run down the left column, cells 4,5,6 down the right column.
Digits are represented as the bare patterns of letters a-j (no number
sign), which is how single Braille digits are presented on the haptic
display.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

VALID_CELLS = frozenset({1, 2, 3, 4, 5, 6})


class UnknownCharacter(ValueError):
    """Raised when a character has no entry in the translation table."""


@dataclass(frozen=True)
class DotPattern:
    """An immutable set of raised cells, each in 1..6.

    The empty pattern is valid and represents the space character.
    """

    cells: frozenset[int]

    def __post_init__(self) -> None:
        cells = frozenset(self.cells)
        bad = cells - VALID_CELLS
        if bad:
            raise ValueError(f"cell indices out of range 1..6: {sorted(bad)}")
        object.__setattr__(self, "cells", cells)

    @classmethod
    def of(cls, *cells: int) -> "DotPattern":
        return cls(frozenset(cells))

    @classmethod
    def from_cells(cls, cells: Iterable[int]) -> "DotPattern":
        return cls(frozenset(cells))

    @classmethod
    def from_text(cls, text: str) -> "DotPattern":
        """Parse the serialized form: sorted cell digits, e.g. "1245"."""
        if text == "":
            return cls(frozenset())
        if not text.isdigit():
            raise ValueError(f"not a cell-digit string: {text!r}")
        return cls(frozenset(int(ch) for ch in text))

    def as_text(self) -> str:
        """Serialize as sorted cell digits ("1245"); empty string for space."""
        return "".join(str(c) for c in sorted(self.cells))

    def __iter__(self):
        return iter(sorted(self.cells))

    def __len__(self) -> int:
        return len(self.cells)

    def __contains__(self, cell: int) -> bool:
        return cell in self.cells

    def __bool__(self) -> bool:
        return bool(self.cells)


class Alphabet(enum.Enum):
    """Lookup domain for inverse translation."""

    DIGITS = "digits"
    FULL = "full"


# Standard (Grade 1) 6-dot letter patterns.
_LETTER_CELLS: dict[str, frozenset[int]] = {
    "a": frozenset({1}),
    "b": frozenset({1, 2}),
    "c": frozenset({1, 4}),
    "d": frozenset({1, 4, 5}),
    "e": frozenset({1, 5}),
    "f": frozenset({1, 2, 4}),
    "g": frozenset({1, 2, 4, 5}),
    "h": frozenset({1, 2, 5}),
    "i": frozenset({2, 4}),
    "j": frozenset({2, 4, 5}),
    "k": frozenset({1, 3}),
    "l": frozenset({1, 2, 3}),
    "m": frozenset({1, 3, 4}),
    "n": frozenset({1, 3, 4, 5}),
    "o": frozenset({1, 3, 5}),
    "p": frozenset({1, 2, 3, 4}),
    "q": frozenset({1, 2, 3, 4, 5}),
    "r": frozenset({1, 2, 3, 5}),
    "s": frozenset({2, 3, 4}),
    "t": frozenset({2, 3, 4, 5}),
    "u": frozenset({1, 3, 6}),
    "v": frozenset({1, 2, 3, 6}),
    "w": frozenset({2, 4, 5, 6}),
    "x": frozenset({1, 3, 4, 6}),
    "y": frozenset({1, 3, 4, 5, 6}),
    "z": frozenset({1, 3, 5, 6}),
}

# Digits 1-9,0 reuse the patterns of a-j.
_DIGIT_CELLS: dict[str, frozenset[int]] = {
    digit: _LETTER_CELLS[letter]
    for digit, letter in zip("1234567890", "abcdefghij")
}

CHARACTER_TABLE: dict[str, frozenset[int]] = {
    **_LETTER_CELLS,
    **_DIGIT_CELLS,
    " ": frozenset(),
}

DIGITS = "1234567890"

_DIGIT_BY_CELLS = {cells: ch for ch, cells in _DIGIT_CELLS.items()}
# Letters plus space; digit patterns read as their letter equivalents here.
_FULL_BY_CELLS = {cells: ch for ch, cells in _LETTER_CELLS.items()}
_FULL_BY_CELLS[frozenset()] = " "


def encode_char(c: str) -> DotPattern:
    """Translate one character (digit, lowercase letter or space) to dots."""
    try:
        cells = CHARACTER_TABLE[c]
    except KeyError:
        raise UnknownCharacter(f"no Braille pattern for {c!r}") from None
    return DotPattern(cells)


def decode_pattern(p: DotPattern, alphabet: Alphabet = Alphabet.DIGITS) -> str | None:
    """Inverse lookup within the chosen alphabet; None when absent.

    DIGITS resolves against the ten digit patterns only.  FULL resolves
    against letters and space; patterns shared with digits (a-j) come
    back as letters.
    """
    table = _DIGIT_BY_CELLS if alphabet is Alphabet.DIGITS else _FULL_BY_CELLS
    return table.get(p.cells)


def pattern_diff(truth: DotPattern, response: DotPattern) -> tuple[frozenset[int], frozenset[int]]:
    """Cells missing from and extra in the response, as (missing, extra)."""
    missing = truth.cells - response.cells
    extra = response.cells - truth.cells
    return missing, extra
