"""Statement windows and the "mental images" rendered from them.

A mental image is the numeric grid the perceptrons see. Character mode lays
``S.P(O);`` statements into a 10x80 console; pixel mode draws the same text as
an 8x8-font bitmap of 256x256 pixels.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .triplet import Triplet

CHAR_ROWS, CHAR_COLS = 10, 80
PIXEL_SIZE = 256
GLYPH = 8

# Printable ASCII 0x20..0x7e, eight rows per glyph, MSB is the leftmost pixel.
_GLYPH_HEX = (
    "0000000000000000", "0030303030003000", "0028282800000000", "28287c28287c2828", "3c64783c0c6c7810", "705478103c541c00",
    "003860307c587c00", "1810200000000000", "0810303030301008", "2010181818181020", "1078304800000000", "0010107c10100000",
    "0000000000001810", "0000007c00000000", "0000000000003000", "0404080810102020", "386c6c6c6c6c3800", "1878181818187e00",
    "386c0c18306c7c00", "386c0c380c6c3800", "0c1c2c6c7e0c0c00", "7c60786c0c4c7800", "386c60786c6c3800", "7c6c0c1818303000",
    "386c6c386c6c3800", "386c6c3c0c6c3800", "0000003000003000", "0000003000003020", "0018306030180000", "0000780078000000",
    "0030180c18300000", "00384c1830003000", "38644c54544e6038", "007838287c6c6e00", "00786c786c6c7800", "003c6c60606c3800",
    "00786c6c6c6c7800", "007c6078606c7c00", "007c607860607000", "00386c607c6c3c00", "006e6c7c6c6c6e00", "0078303030307800",
    "003c181858587000", "006c6870786c7600", "00706060606c7c00", "00446c6c7c545400", "006e74746c6c6400", "00386c6c6c6c3800",
    "00786c6c78607000", "00386c6c6c6c380c", "00786c6c786c7600", "003c64781c4c7800", "007c343030307800", "006e6c6c6c6c3800",
    "006e6c2838381000", "005654547c382800", "00663c18183c6600", "0066663c18183c00", "007c6c18306c7c00", "3830303030303038",
    "4040202010100808", "3818181818181838", "10386c0000000000", "000000000000007e", "3010080000000000", "0000386c3c6c7e00",
    "6060786c6c6c7800", "0000386c606c3800", "1c0c3c6c6c6c3e00", "0000386c7c603c00", "1c307c3030307c00", "0000366c6c6c3c0c",
    "6060786c6c6c6c00", "1800781818187e00", "1800781818181818", "60606c7870786e00", "7818181818187e00", "0000787c54545400",
    "0000586c6c6c6c00", "0000386c6c6c3800", "0000786c6c6c7860", "0000366c6c6c3c0c", "00006e3a30307800", "00003c703c0e7c00",
    "30307c3030361c00", "00006c6c6c6c3e00", "00006c6c38381000", "000056547c3c2800", "0000763c183c6e00", "00006e6c6c283830",
    "00007c58306c7c00", "0c1818301818180c", "0010101010101010", "6030301830303060", "0000345800000000",
)
_GLYPHS = np.array(
    [[[(int(h[2 * r : 2 * r + 2], 16) >> (7 - c)) & 1 for c in range(GLYPH)] for r in range(GLYPH)] for h in _GLYPH_HEX],
    dtype=np.float64,
)


@dataclass(frozen=True)
class StatementWindow:
    """The most recent statements, oldest first, at most ``capacity`` long."""

    capacity: int = 10
    statements: tuple[Triplet, ...] = ()

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("window capacity must be >= 1")
        object.__setattr__(self, "statements", tuple(self.statements)[-self.capacity :])

    def push(self, t: Triplet) -> StatementWindow:
        return StatementWindow(self.capacity, self.statements + (t,))

    def __len__(self):
        return len(self.statements)


def push_statement(w: StatementWindow, t: Triplet) -> StatementWindow:
    return w.push(t)


@dataclass(frozen=True, eq=False)
class MentalImage:
    rows: int
    cols: int
    cells: np.ndarray = field(repr=False)

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.float64).reshape(self.rows, self.cols)
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> MentalImage:
        return cls(rows, cols, np.zeros((rows, cols)))

    @property
    def size(self) -> int:
        return self.rows * self.cols

    def flat(self) -> np.ndarray:
        return self.cells.reshape(-1)

    def key(self) -> str:
        """64-bit digest of the cells, used to index tables by state."""
        h = hashlib.blake2b(digest_size=8)
        h.update(f"{self.rows}x{self.cols}".encode())
        h.update(np.ascontiguousarray(self.cells).tobytes())
        return h.hexdigest()

    def __eq__(self, other):
        if not isinstance(other, MentalImage):
            return NotImplemented
        return self.rows == other.rows and self.cols == other.cols and np.array_equal(self.cells, other.cells)

    __hash__ = None


def _split_long(text: str, width: int) -> list[str]:
    return [text[i : i + width] for i in range(0, len(text), width)] or [""]


def _justify(pieces: list[str], width: int) -> str:
    if len(pieces) == 1:
        return pieces[0]
    gaps = len(pieces) - 1
    spare = width - sum(len(p) for p in pieces)
    base, extra = divmod(spare, gaps)
    out = pieces[0]
    for i, piece in enumerate(pieces[1:]):
        out += " " * (base + (1 if i < extra else 0)) + piece
    return out


def _layout_justified(texts: list[str], width: int) -> list[str]:
    rows: list[list[str]] = []
    current: list[str] = []
    used = 0
    for text in texts:
        for chunk in _split_long(text, width):
            need = len(chunk) + (1 if current else 0)
            if current and used + need > width:
                rows.append(current)
                current, used = [], 0
                need = len(chunk)
            current.append(chunk)
            used += need
    if current:
        rows.append(current)
    # every row but the last is stretched to the full width
    return [_justify(r, width) if i < len(rows) - 1 else " ".join(r) for i, r in enumerate(rows)]


def _layout_pyramid(texts: list[str], width: int) -> list[str]:
    rows: list[str] = []
    current: list[str] = []
    for text in texts:
        for chunk in _split_long(text, width):
            candidate = " ".join(current + [chunk])
            if current and (len(current) > len(rows) or len(candidate) > width):
                rows.append(" ".join(current))
                current = []
            current.append(chunk)
    if current:
        rows.append(" ".join(current))
    return [r.center(width).rstrip() for r in rows]


_LAYOUTS = {"justified": _layout_justified, "pyramid": _layout_pyramid}


def layout_text(statements, rows: int, cols: int, arrangement: str = "justified") -> list[str]:
    """Lay statements into at most ``rows`` lines of ``cols`` characters.

    The oldest statements are dropped until the rest fit.
    """
    try:
        layout = _LAYOUTS[arrangement]
    except KeyError:
        raise ValueError(f"unknown arrangement {arrangement!r}") from None
    texts = [t.statement() for t in statements]
    while texts:
        lines = layout(texts, cols)
        if len(lines) <= rows:
            return lines
        texts = texts[1:]
    return []


def encode_text(lines: list[str], rows: int = CHAR_ROWS, cols: int = CHAR_COLS) -> MentalImage:
    cells = np.zeros((rows, cols))
    for i, line in enumerate(lines[:rows]):
        for j, ch in enumerate(line[:cols]):
            if ch != " ":
                cells[i, j] = min(ord(ch), 255) / 255.0
    return MentalImage(rows, cols, cells)


def render_char(w: StatementWindow, arrangement: str = "justified") -> MentalImage:
    return encode_text(layout_text(w.statements, CHAR_ROWS, CHAR_COLS, arrangement))


def render_pixel(w: StatementWindow, arrangement: str = "justified") -> MentalImage:
    n = PIXEL_SIZE // GLYPH
    cells = np.zeros((PIXEL_SIZE, PIXEL_SIZE))
    for i, line in enumerate(layout_text(w.statements, n, n, arrangement)):
        for j, ch in enumerate(line):
            code = ord(ch)
            if not 0x20 <= code <= 0x7E:
                code = ord("?")
            cells[i * GLYPH : (i + 1) * GLYPH, j * GLYPH : (j + 1) * GLYPH] = _GLYPHS[code - 0x20]
    return MentalImage(PIXEL_SIZE, PIXEL_SIZE, cells)


def ca_step(img: MentalImage) -> MentalImage:
    """One smoothing step: interior cells become the mean of their four neighbours."""
    if img.rows < 3 or img.cols < 3:
        raise ValueError(f"cellular automaton step needs at least 3x3 cells, got {img.rows}x{img.cols}")
    c = img.cells
    out = c.copy()
    out[1:-1, 1:-1] = (c[:-2, 1:-1] + c[1:-1, :-2] + c[2:, 1:-1] + c[1:-1, 2:]) / 4.0
    return MentalImage(img.rows, img.cols, out)


def decode_text(img: MentalImage) -> list[str]:
    """Character grid of a char-mode image; zero cells read as blanks."""
    codes = np.rint(img.cells * 255).astype(int)
    return ["".join(chr(c) if c > 0 else " " for c in row) for row in codes]


def dump_text(img: MentalImage) -> str:
    if img.rows == PIXEL_SIZE and img.cols == PIXEL_SIZE:
        return "\n".join(["P1", f"{img.cols} {img.rows}"] + [" ".join("1" if v >= 0.5 else "0" for v in row) for row in img.cells]) + "\n"
    return "\n".join(decode_text(img)) + "\n"


@dataclass(frozen=True)
class Imagery:
    """How the engine turns its statement window into a state image."""

    mode: str = "char"
    arrangement: str = "justified"
    ca_steps: int = 1

    def __post_init__(self):
        if self.mode not in ("char", "pixel"):
            raise ValueError(f"imagery mode must be 'char' or 'pixel', got {self.mode!r}")
        if self.arrangement not in _LAYOUTS:
            raise ValueError(f"unknown arrangement {self.arrangement!r}")
        if self.ca_steps < 0:
            raise ValueError("ca_steps must be >= 0")

    @property
    def input_size(self) -> int:
        return CHAR_ROWS * CHAR_COLS if self.mode == "char" else PIXEL_SIZE * PIXEL_SIZE

    def render(self, w: StatementWindow) -> MentalImage:
        if self.mode == "char":
            img = render_char(w, self.arrangement)
        else:
            img = render_pixel(w, self.arrangement)
        for _ in range(self.ca_steps):
            img = ca_step(img)
        return img
