"""Triplet extraction from parser linkages.

The engine never talks to a grammar parser directly. Parses arrive in a small
text interchange format, one record per sentence::

    #S <sentence>
    #L <word0> <word1> ...
    <label> <left> <right> <link_word>
    ...
    <blank line>

A record may hold several ``#L`` linkages. When a ``#L`` line carries no
words, the sentence's whitespace tokens are used.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable

from .errors import ParseError
from .triplet import Triplet


@dataclass(frozen=True)
class Link:
    label: str
    left: int
    right: int
    link_word: str

    def __post_init__(self):
        if self.left >= self.right:
            raise ValueError(f"link {self.label}: left index {self.left} must be < right {self.right}")


@dataclass(frozen=True)
class Linkage:
    words: tuple[str, ...]
    links: tuple[Link, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        object.__setattr__(self, "links", tuple(self.links))
        n = len(self.words)
        for link in self.links:
            if not (0 <= link.left < n and 0 <= link.right < n):
                raise ValueError(f"link {link} indexes outside {n} words")


def extract_triplets(linkage: Linkage) -> list[Triplet]:
    """Walk the links in order, pairing subject links with object links.

    A link whose label starts with ``S`` proposes the subject (its left word)
    and two predicate candidates: the link's own word and its right word. A
    link starting with ``O`` supplies the object and emits a triplet when its
    left word is one of the predicate candidates, preferring the first.
    """
    words = linkage.words
    s = p = alter_p = None
    triplets = []
    for link in linkage.links:
        if link.label.startswith("S"):
            p = link.link_word
            alter_p = words[link.right]
            s = words[link.left]
        if link.label.startswith("O"):
            o = words[link.right]
            head = words[link.left]
            if p is not None and p == head:
                triplets.append(Triplet(s, p, o))
            elif alter_p is not None and alter_p == head:
                p = alter_p
                triplets.append(Triplet(s, p, o))
    return triplets


def sentence_triplets(linkages: Iterable[Linkage]) -> list[Triplet]:
    """Triplets of every linkage of one sentence, first occurrence kept."""
    seen = {}
    for linkage in linkages:
        for t in extract_triplets(linkage):
            seen.setdefault(t, t)
    return list(seen)


LinkageRecord = tuple[str, list[Linkage]]


def parse_linkages(text: str, path=None) -> list[LinkageRecord]:
    records: list[LinkageRecord] = []
    sentence = None
    linkages: list[Linkage] = []
    words = None
    links: list[Link] = []
    lineno = 0

    def close_linkage():
        nonlocal words, links
        if words is not None:
            try:
                linkages.append(Linkage(words, links))
            except ValueError as exc:
                raise ParseError(str(exc), path, lineno) from None
        words, links = None, []

    def close_record():
        nonlocal sentence, linkages
        close_linkage()
        if sentence is not None:
            records.append((sentence, linkages))
        sentence, linkages = None, []

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\n")
        if not line.strip():
            close_record()
        elif line.startswith("#S"):
            close_record()
            sentence = line[2:].strip()
        elif line.startswith("#L"):
            if sentence is None:
                raise ParseError("'#L' outside a '#S' record", path, lineno)
            close_linkage()
            given = line[2:].split()
            words = given if given else sentence.split()
        else:
            if words is None:
                raise ParseError(f"link line outside a linkage: {line!r}", path, lineno)
            parts = line.split()
            if len(parts) != 4:
                raise ParseError(f"expected '<label> <left> <right> <link_word>', got {line!r}", path, lineno)
            label, left, right, link_word = parts
            try:
                left_i, right_i = int(left), int(right)
                links.append(Link(label, left_i, right_i, link_word))
            except ValueError as exc:
                raise ParseError(str(exc), path, lineno) from None
            if not (0 <= left_i < len(words) and 0 <= right_i < len(words)):
                raise ParseError(f"link index out of range for {len(words)} words", path, lineno)
    close_record()
    return records


def read_linkage_file(path) -> list[LinkageRecord]:
    path = Path(path)
    return parse_linkages(path.read_text(encoding="utf-8"), path)


def format_linkages(records: Iterable[LinkageRecord]) -> str:
    out = []
    for sentence, linkages in records:
        out.append(f"#S {sentence}")
        for linkage in linkages:
            out.append("#L " + " ".join(linkage.words))
            for link in linkage.links:
                out.append(f"{link.label} {link.left} {link.right} {link.link_word}")
        out.append("")
    return "\n".join(out) + ("\n" if out else "")


def write_linkage_file(path, records: Iterable[LinkageRecord]) -> None:
    Path(path).write_text(format_linkages(records), encoding="utf-8")


_PUNCT_TAIL = re.compile(r"[\s.!?;:,]+$")
_ARTICLES = {"a", "an", "the"}


def normalize_sentence(sentence: str) -> str:
    return " ".join(_PUNCT_TAIL.sub("", sentence).split()).casefold()


def naive_triplets(sentence: str) -> list[Triplet]:
    """Fallback for unparsed input: a sentence of exactly three content words.

    Articles are ignored, so "I am a robot" gives (I, am, robot).
    """
    words = [w.strip(".,!?;:\"'") for w in sentence.split()]
    words = [w for w in words if w and w.casefold() not in _ARTICLES]
    if len(words) == 3:
        return [Triplet(*words)]
    return []


class LinkageLookup:
    """Sentence -> triplets through a table of pre-parsed linkages."""

    def __init__(self, records: Iterable[LinkageRecord] = (), fallback: Callable[[str], list[Triplet]] | None = None):
        self.table: dict[str, list[Linkage]] = {}
        self.fallback = fallback
        self.add(records)

    def add(self, records: Iterable[LinkageRecord]) -> None:
        for sentence, linkages in records:
            self.table.setdefault(normalize_sentence(sentence), []).extend(linkages)

    def add_file(self, path) -> None:
        self.add(read_linkage_file(path))

    def __contains__(self, sentence: str) -> bool:
        return normalize_sentence(sentence) in self.table

    def __call__(self, sentence: str) -> list[Triplet]:
        linkages = self.table.get(normalize_sentence(sentence))
        if linkages is not None:
            return sentence_triplets(linkages)
        if self.fallback is not None:
            return self.fallback(sentence)
        return []


def bundled_linkage_files() -> list[Path]:
    root = resources.files("samu") / "data"
    return sorted(Path(str(p)) for p in root.iterdir() if p.name.endswith(".linkages"))


def default_extractor(extra_files: Iterable = (), naive_fallback: bool = True) -> LinkageLookup:
    lookup = LinkageLookup(fallback=naive_triplets if naive_fallback else None)
    for path in bundled_linkage_files():
        lookup.add_file(path)
    for path in extra_files:
        lookup.add_file(path)
    return lookup


# Universal Dependencies relation names mapped onto subject / object links.
_SUBJECT_RELS = {"nsubj", "nsubj:pass", "csubj"}
_OBJECT_RELS = {"obj", "dobj", "iobj", "attr", "xcomp"}


def conllu_to_linkages(text: str) -> list[LinkageRecord]:
    """Convert CoNLL-U dependency parses into linkage records.

    Subject dependents left of their head become ``Ss`` links whose link word
    is the head; object dependents right of their head become ``Os`` links.
    Subject links are listed before object links.
    """
    records = []
    sentence = None
    rows: list[list[str]] = []

    def flush():
        nonlocal sentence, rows
        if rows:
            words = [r[1] for r in rows]
            subj, obj = [], []
            for r in rows:
                dep = int(r[0]) - 1
                head = int(r[6]) - 1
                rel = r[7]
                if head < 0:
                    continue
                if rel in _SUBJECT_RELS and dep < head:
                    subj.append(Link("Ss", dep, head, words[head]))
                elif rel in _OBJECT_RELS and head < dep:
                    obj.append(Link("Os", head, dep, words[dep]))
            records.append((sentence or " ".join(words), [Linkage(words, subj + obj)]))
        sentence, rows = None, []

    for line in text.splitlines():
        if not line.strip():
            flush()
        elif line.startswith("# text"):
            sentence = line.split("=", 1)[1].strip()
        elif line.startswith("#"):
            continue
        else:
            cols = line.split("\t")
            if len(cols) < 8 or not cols[0].isdigit():
                # multiword ranges and empty nodes
                continue
            rows.append(cols)
    flush()
    return records


def main(argv=None) -> int:
    """``samu-linkage``: convert CoNLL-U parses to linkage records, or list extracted triplets."""
    import argparse
    import sys

    p = argparse.ArgumentParser(prog="samu-linkage", description=main.__doc__)
    p.add_argument("input", help="a .conllu file, or a .linkages file with --triplets")
    p.add_argument("--out", default="-")
    p.add_argument("--triplets", action="store_true", help="print the triplets each record yields")
    args = p.parse_args(argv)
    try:
        text = Path(args.input).read_text(encoding="utf-8")
        records = parse_linkages(text, args.input) if args.input.endswith(".linkages") else conllu_to_linkages(text)
    except (OSError, ParseError, ValueError) as exc:
        print(f"samu-linkage: {exc}", file=sys.stderr)
        return 2
    if args.triplets:
        out = "".join(f"{t.s} {t.p} {t.o}\n" for _, linkages in records for t in sentence_triplets(linkages))
    else:
        out = format_linkages(records)
    if args.out == "-":
        sys.stdout.write(out)
    else:
        Path(args.out).write_text(out, encoding="utf-8")
    return 0
