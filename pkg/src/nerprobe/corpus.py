"""Corpus data model, CoNLL/BIO I/O, outermost projection and dictionary coverage."""

from __future__ import annotations

import io
import os
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Mapping, Sequence, Union

__all__ = [
    "ColumnConfig",
    "ConllEncodingError",
    "ConllParseError",
    "CoverageStats",
    "Corpus",
    "Dictionary",
    "Mention",
    "Sentence",
    "StructureError",
    "bio_decode",
    "bio_encode",
    "build_dictionary",
    "coverage",
    "parse_conll",
    "project_outermost",
    "read_conll",
    "write_conll",
    "write_conll_file",
]


class ConllParseError(ValueError):
    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class ConllEncodingError(ValueError):
    """Raised for input that is not valid UTF-8, or a corpus that flat BIO cannot express."""


class StructureError(ValueError):
    pass


def _check_token(text: str) -> str:
    if not isinstance(text, str) or not text or any(ch.isspace() for ch in text):
        raise ValueError(f"invalid token {text!r}: tokens must be non-empty and whitespace-free")
    return text


@dataclass(frozen=True, order=True)
class Mention:
    start: int
    end: int
    entity_type: str

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValueError(f"bad span [{self.start}, {self.end})")
        if not self.entity_type:
            raise ValueError("empty entity type")

    @property
    def length(self) -> int:
        return self.end - self.start

    def contains(self, other: "Mention") -> bool:
        return self.start <= other.start and other.end <= self.end

    def overlaps(self, other: "Mention") -> bool:
        return self.start < other.end and other.start < self.end


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[str, ...]
    mentions: tuple[Mention, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(_check_token(t) for t in self.tokens))
        if not self.tokens:
            raise ValueError("empty sentence")
        mentions = tuple(sorted(self.mentions))
        for m in mentions:
            if m.end > len(self.tokens):
                raise ValueError(f"mention {m} exceeds sentence length {len(self.tokens)}")
        object.__setattr__(self, "mentions", mentions)

    def __len__(self) -> int:
        return len(self.tokens)

    def surface(self, mention: Mention) -> str:
        return " ".join(self.tokens[mention.start:mention.end])

    def surfaces(self) -> list[tuple[str, str]]:
        """(surface, entity_type) for every mention, in span order."""
        return [(self.surface(m), m.entity_type) for m in self.mentions]

    def is_flat(self) -> bool:
        return all(a.end <= b.start for a, b in zip(self.mentions, self.mentions[1:]))

    def blanked(self) -> tuple[str, ...]:
        """Token sequence with every mention collapsed to a typed slot marker."""
        out: list[str] = []
        pos = 0
        for m in self.mentions:
            out.extend(self.tokens[pos:m.start])
            out.append(f"[{m.entity_type}]")
            pos = m.end
        out.extend(self.tokens[pos:])
        return tuple(out)


@dataclass(frozen=True)
class Corpus:
    sentences: tuple[Sentence, ...] = ()
    split_name: str = "other"

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[Sentence]:
        return iter(self.sentences)

    def n_mentions(self) -> int:
        return sum(len(s.mentions) for s in self.sentences)

    def entity_types(self) -> list[str]:
        return sorted({m.entity_type for s in self.sentences for m in s.mentions})

    def replace(self, sentences: Iterable[Sentence]) -> "Corpus":
        return Corpus(tuple(sentences), self.split_name)


@dataclass(frozen=True)
class ColumnConfig:
    """Column layout of a CoNLL file; negative indices count from the right."""

    token_col: int = 0
    tag_col: int = -1
    docstart: str = "-DOCSTART-"


DEFAULT_COLUMNS = ColumnConfig()


def _split_tag(tag: str) -> tuple[str, str]:
    if tag == "O":
        return "O", ""
    prefix, sep, etype = tag.partition("-")
    if not sep or prefix not in ("B", "I") or not etype:
        raise ValueError(f"invalid BIO tag {tag!r}")
    return prefix, etype


def bio_decode(tags: Sequence[str]) -> list[Mention]:
    """Decode BIO tags into spans.

    An ``I-X`` that does not continue an open ``X`` span starts a new mention,
    following conlleval.
    """
    mentions = []
    start, etype = None, None
    for i, tag in enumerate(tags):
        prefix, t = _split_tag(tag)
        if prefix == "I" and etype == t:
            continue
        if start is not None:
            mentions.append(Mention(start, i, etype))
            start, etype = None, None
        if prefix in ("B", "I"):
            start, etype = i, t
    if start is not None:
        mentions.append(Mention(start, len(tags), etype))
    return mentions


def bio_encode(sentence: Sentence) -> list[str]:
    if not sentence.is_flat():
        raise ConllEncodingError("overlapping mentions cannot be written as flat BIO")
    tags = ["O"] * len(sentence)
    for m in sentence.mentions:
        tags[m.start] = f"B-{m.entity_type}"
        for i in range(m.start + 1, m.end):
            tags[i] = f"I-{m.entity_type}"
    return tags


Source = Union[str, bytes, IO[str], IO[bytes], Iterable[str]]


def _lines(source: Source) -> Iterator[str]:
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConllEncodingError(f"input is not valid UTF-8: {exc}") from exc
    if isinstance(source, str):
        yield from io.StringIO(source)
        return
    for line in source:
        if isinstance(line, bytes):
            try:
                line = line.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise ConllEncodingError(f"input is not valid UTF-8: {exc}") from exc
        yield line


def parse_conll(source: Source, columns: ColumnConfig = DEFAULT_COLUMNS,
                split_name: str = "other") -> Corpus:
    """Parse CoNLL column text into a :class:`Corpus`.

    ``source`` may be text, UTF-8 bytes, or any iterable of lines (text or
    binary file objects included). Blank lines separate sentences and
    ``-DOCSTART-`` lines are skipped.
    """
    sentences = []
    tokens: list[str] = []
    tags: list[str] = []
    n_cols = None

    def flush():
        if tokens:
            sentences.append(Sentence(tuple(tokens), tuple(bio_decode(tags))))
            tokens.clear()
            tags.clear()

    for line_no, line in enumerate(_lines(source), start=1):
        fields = line.split()
        if not fields:
            flush()
            continue
        if n_cols is None:
            n_cols = len(fields)
        elif len(fields) != n_cols:
            raise ConllParseError(f"expected {n_cols} columns, found {len(fields)}", line_no)
        try:
            token, tag = fields[columns.token_col], fields[columns.tag_col]
        except IndexError:
            raise ConllParseError(f"column index out of range for {len(fields)} columns",
                                  line_no) from None
        if token == columns.docstart:
            flush()
            continue
        try:
            _split_tag(tag)
        except ValueError as exc:
            raise ConllParseError(str(exc), line_no) from None
        tokens.append(token)
        tags.append(tag)
    flush()
    return Corpus(tuple(sentences), split_name)


def read_conll(path: str | os.PathLike, columns: ColumnConfig = DEFAULT_COLUMNS,
               split_name: str | None = None) -> Corpus:
    with open(path, "rb") as fh:
        data = fh.read()
    if split_name is None:
        split_name = os.path.splitext(os.path.basename(os.fspath(path)))[0]
    return parse_conll(data, columns, split_name)


def write_conll(corpus: Corpus, columns: ColumnConfig = DEFAULT_COLUMNS) -> str:
    """Two-column ``token tag`` output; only the default layout is written."""
    chunks = []
    for sentence in corpus.sentences:
        tags = bio_encode(sentence)
        chunks.append("".join(f"{tok} {tag}\n" for tok, tag in zip(sentence.tokens, tags)))
    return "\n".join(chunks)


def write_conll_file(corpus: Corpus, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(write_conll(corpus))


def project_outermost(corpus: Corpus) -> Corpus:
    """Keep only mentions not strictly contained in another mention.

    Duplicate spans of the same type collapse to one; identical spans with
    different types, like crossing spans, raise :class:`StructureError`.
    """
    out = []
    for idx, sentence in enumerate(corpus.sentences):
        # sort by start asc, then longer first, so containers precede contents
        ordered = sorted(set(sentence.mentions), key=lambda m: (m.start, -m.end, m.entity_type))
        kept: list[Mention] = []
        for m in ordered:
            if kept and kept[-1].start == m.start and kept[-1].end == m.end:
                raise StructureError(
                    f"sentence {idx}: span [{m.start}, {m.end}) labelled both "
                    f"{kept[-1].entity_type} and {m.entity_type}")
            if kept and kept[-1].contains(m):
                continue
            if kept and kept[-1].overlaps(m):
                raise StructureError(
                    f"sentence {idx}: crossing mentions [{kept[-1].start}, {kept[-1].end}) "
                    f"and [{m.start}, {m.end})")
            kept.append(m)
        out.append(Sentence(sentence.tokens, tuple(kept)))
    return corpus.replace(out)


class Dictionary:
    """Surface form -> entity type -> occurrence count.

    Immutable once built. With ``casefold`` the keys are case-folded, both at
    construction and on lookup.
    """

    def __init__(self, entries: Mapping[str, Mapping[str, int]] | None = None,
                 casefold: bool = False):
        self.casefold = casefold
        table: dict[str, dict[str, int]] = {}
        for surface, by_type in (entries or {}).items():
            key = self.normalize(surface)
            slot = table.setdefault(key, {})
            for etype, count in by_type.items():
                if count < 1:
                    raise ValueError(f"non-positive count for {surface!r}/{etype}")
                slot[etype] = slot.get(etype, 0) + count
        self._entries = {k: dict(sorted(v.items())) for k, v in sorted(table.items())}
        self._max_tokens = max((len(k.split(" ")) for k in self._entries), default=0)

    def normalize(self, surface: str) -> str:
        return surface.casefold() if self.casefold else surface

    @property
    def entries(self) -> dict[str, dict[str, int]]:
        return {k: dict(v) for k, v in self._entries.items()}

    @property
    def max_tokens(self) -> int:
        return self._max_tokens

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, surface: str) -> bool:
        return self.normalize(surface) in self._entries

    def __eq__(self, other):
        if not isinstance(other, Dictionary):
            return NotImplemented
        return self.casefold == other.casefold and self._entries == other._entries

    def contains(self, surface: str, entity_type: str | None = None) -> bool:
        by_type = self._entries.get(self.normalize(surface))
        if by_type is None:
            return False
        return entity_type is None or entity_type in by_type

    def counts(self, surface: str) -> dict[str, int]:
        return dict(self._entries.get(self.normalize(surface), {}))

    def total(self) -> int:
        return sum(sum(v.values()) for v in self._entries.values())

    def majority_type(self, surface: str) -> str | None:
        """Most frequent type for ``surface``; ties go to the lexicographically first."""
        by_type = self._entries.get(self.normalize(surface))
        if not by_type:
            return None
        return min(by_type.items(), key=lambda kv: (-kv[1], kv[0]))[0]

    def surfaces(self) -> list[str]:
        return list(self._entries)


def build_dictionary(corpus: Corpus, casefold: bool = False) -> Dictionary:
    counts: dict[str, Counter] = defaultdict(Counter)
    for sentence in corpus.sentences:
        for surface, etype in sentence.surfaces():
            counts[surface][etype] += 1
    return Dictionary(counts, casefold=casefold)


@dataclass(frozen=True)
class TypeCoverage:
    covered: int
    total: int

    @property
    def ratio(self) -> float:
        return self.covered / self.total if self.total else 0.0

    @property
    def undefined(self) -> bool:
        return self.total == 0


@dataclass(frozen=True)
class CoverageStats:
    covered: int
    total: int
    per_type: dict[str, TypeCoverage] = field(default_factory=dict)
    level: str = "occurrence"
    typed: bool = False

    @property
    def ratio(self) -> float:
        return self.covered / self.total if self.total else 0.0

    @property
    def undefined(self) -> bool:
        """True when the test side has no mentions (ratio reported as 0)."""
        return self.total == 0

    def to_dict(self) -> dict:
        return {
            "covered": self.covered,
            "total": self.total,
            "ratio": self.ratio,
            "undefined": self.undefined,
            "level": self.level,
            "typed": self.typed,
            "per_type": {
                t: {"covered": c.covered, "total": c.total, "ratio": c.ratio,
                    "undefined": c.undefined}
                for t, c in sorted(self.per_type.items())
            },
        }


def coverage(train_dict: Dictionary, test_corpus: Corpus, typed: bool = False,
             level: str = "occurrence") -> CoverageStats:
    """Fraction of test mentions whose surface appears in ``train_dict``.

    ``level="occurrence"`` counts every test mention; ``level="surface"``
    counts each distinct (surface, type) pair once. Membership ignores the
    entity type unless ``typed`` is set.
    """
    if level not in ("occurrence", "surface"):
        raise ValueError(f"unknown coverage level {level!r}")
    items: Iterable[tuple[str, str]] = (
        pair for s in test_corpus.sentences for pair in s.surfaces())
    if level == "surface":
        items = sorted(set(items))
    covered: Counter = Counter()
    total: Counter = Counter()
    for surface, etype in items:
        total[etype] += 1
        if train_dict.contains(surface, etype if typed else None):
            covered[etype] += 1
    per_type = {t: TypeCoverage(covered[t], total[t]) for t in sorted(total)}
    return CoverageStats(sum(covered.values()), sum(total.values()), per_type, level, typed)
