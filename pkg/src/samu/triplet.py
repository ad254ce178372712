"""SPO triplets, the reward policies built on them, and corpus loading."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional

from .errors import LoadError, ParseError


@dataclass(frozen=True, eq=False)
class Triplet:
    """A (subject, predicate, object) word triple.

    Tokens keep their original spelling for display, but equality, hashing and
    ordering use the lowercased form so that ``Hezron`` and ``hezron`` are the
    same action.
    """

    s: str
    p: str
    o: str

    def __post_init__(self):
        for name in ("s", "p", "o"):
            value = getattr(self, name)
            if not isinstance(value, str):
                raise TypeError(f"triplet member {name} must be str, got {type(value).__name__}")
            value = value.strip()
            if not value:
                raise ValueError(f"triplet member {name} is empty")
            object.__setattr__(self, name, value)

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.s.lower(), self.p.lower(), self.o.lower())

    def __eq__(self, other):
        if not isinstance(other, Triplet):
            return NotImplemented
        return self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __lt__(self, other: Triplet) -> bool:
        return self.key < other.key

    def __iter__(self):
        return iter((self.s, self.p, self.o))

    def __str__(self):
        return f"{self.s} {self.p} {self.o}"

    def statement(self) -> str:
        """The ``S.P(O);`` statement written into the mental image."""
        return f"{self.s}.{self.p}({self.o});"

    def cmp(self, other: Triplet) -> float:
        return cmp(self, other)


def cmp(a: Triplet, b: Triplet) -> float:
    """Fraction of positionally matching members: 0, 1/3, 2/3 or 1."""
    return sum(x == y for x, y in zip(a.key, b.key)) / 3.0


def reward_partial(actual: Triplet, predicted: Optional[Triplet]) -> float:
    # a third of a point per correct member, centred on zero
    if predicted is None:
        return -1.5
    return 3.0 * cmp(actual, predicted) - 1.5


def reward_strict(actual: Triplet, predicted: Optional[Triplet]) -> float:
    if predicted is None:
        return -2.0
    return 1.0 if actual == predicted else -2.0


@dataclass(frozen=True)
class RewardPolicy:
    name: str
    fn: Callable[[Triplet, Optional[Triplet]], float]
    best: float
    worst: float

    def __call__(self, actual, predicted):
        return self.fn(actual, predicted)


PARTIAL = RewardPolicy("partial", reward_partial, 1.5, -1.5)
STRICT = RewardPolicy("strict", reward_strict, 1.0, -2.0)
REWARD_POLICIES = {p.name: p for p in (PARTIAL, STRICT)}


@dataclass
class Corpus:
    name: str
    sentences: list[str] = field(default_factory=list)
    triplets: list[Triplet] = field(default_factory=list)

    def __len__(self):
        return len(self.triplets)


_SENTENCE_BREAKS = re.compile(r"[.:;]")
_DIGITS = re.compile(r"[0-9]")


def preprocess_raw(text: str) -> list[str]:
    """Split raw text into sentence lines.

    '.', ':' and ';' become line breaks, decimal digits are deleted, lines are
    trimmed and empty lines dropped.
    """
    text = _DIGITS.sub("", _SENTENCE_BREAKS.sub("\n", text))
    return [line.strip() for line in text.splitlines() if line.strip()]


def read_triplet_cache(path) -> list[Triplet]:
    path = Path(path)
    triplets = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ParseError(f"expected 'S P O', got {line.rstrip()!r}", path, lineno)
            triplets.append(Triplet(*parts))
    return triplets


def write_triplet_cache(path, triplets: Iterable[Triplet]) -> None:
    lines = []
    for t in triplets:
        for token in t:
            if any(ch.isspace() for ch in token):
                raise ValueError(f"token {token!r} contains whitespace; cannot cache {t!r}")
        lines.append(f"{t.s} {t.p} {t.o}\n")
    Path(path).write_text("".join(lines), encoding="utf-8")


def read_sentences(path, preprocess: bool = True) -> list[str]:
    """Read a sentence file, skipping ``#`` comment lines."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise LoadError(f"sentence file not found: {path}") from exc
    body = "\n".join(line for line in text.splitlines() if not line.lstrip().startswith("#"))
    if preprocess:
        return preprocess_raw(body)
    return [line.strip() for line in body.splitlines() if line.strip()]


def load_corpus(
    sentence_file,
    triplet_cache=None,
    extractor: Callable[[str], list[Triplet]] | None = None,
    preprocess: bool = True,
) -> Corpus:
    """Load a corpus of sentences and their triplets.

    An existing ``triplet_cache`` short-circuits extraction. Otherwise every
    sentence goes through ``extractor`` (the bundled linkage lookup by default)
    and the result is written to ``triplet_cache`` when a path was given.
    """
    sentence_file = Path(sentence_file)
    sentences = read_sentences(sentence_file, preprocess=preprocess)
    name = sentence_file.stem

    if triplet_cache is not None and Path(triplet_cache).exists():
        return Corpus(name, sentences, read_triplet_cache(triplet_cache))

    if extractor is None:
        from .nlp import default_extractor

        extractor = default_extractor()
    triplets = [t for sentence in sentences for t in extractor(sentence)]
    if triplet_cache is not None:
        write_triplet_cache(triplet_cache, triplets)
    return Corpus(name, sentences, triplets)
