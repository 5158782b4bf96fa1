"""Synthetic NER corpora with separately tunable name regularity, mention
coverage and context diversity.

Every sentence is one single-slot context template filled with one typed
surface. Regular surfaces are pseudo-word names ending in a type marker
token. Irregular ones are random 1-3 word strings over the words used in
context templates, so they look like ordinary context text. Surfaces are
drawn from a per-type Zipf distribution; the skew controls how much of the
test set the training set covers.
"""

from __future__ import annotations

import json
import random
from bisect import bisect_right
from dataclasses import asdict, dataclass, field
from itertools import accumulate
from typing import Mapping

from .corpus import Corpus, Mention, Sentence

__all__ = ["GenerationError", "SyntheticSpec", "SyntheticData", "generate", "zipf_weights"]

SPLITS = ("train", "dev", "test")

DEFAULT_MARKERS = {
    "PER": "jr", "ORG": "corp", "LOC": "street", "GPE": "land",
    "FAC": "hall", "VEH": "mk", "WEA": "gun", "MISC": "cup",
}

_ONSETS = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z",
           "br", "dr", "gr", "kl", "pl", "st", "tr", "sh", "ch"]
_VOWELS = ["a", "e", "i", "o", "u", "ai", "ou"]
_CODAS = ["", "", "", "n", "r", "s", "l", "m"]


class GenerationError(ValueError):
    pass


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator knobs. Per-type knobs take a single value or a type -> value map.

    ``ambiguity`` is the fraction of each type's templates drawn from a pool
    shared by all types; in those contexts only the name reveals the type.
    """

    types: tuple[str, ...] = ("PER", "ORG", "LOC", "GPE")
    regularity: float | Mapping[str, float] = 1.0
    n_contexts: int | Mapping[str, int] = 8
    n_sentences: int = 2000
    mention_vocab: int | Mapping[str, int] = 200
    zipf_s: float = 1.2
    seed: int = 0
    ambiguity: float = 0.0
    split_fractions: tuple[float, float, float] = (0.7, 0.1, 0.2)
    filler_vocab: int = 400
    context_len: tuple[int, int] = (4, 8)
    name_len: tuple[int, int] = (1, 2)

    def __post_init__(self):
        object.__setattr__(self, "types", tuple(self.types))
        if not self.types or len(set(self.types)) != len(self.types):
            raise ValueError("types must be a non-empty list of distinct names")
        for t in self.types:
            if not 0.0 <= self.per_type(self.regularity, t) <= 1.0:
                raise ValueError(f"regularity for {t} must lie in [0, 1]")
            if self.per_type(self.n_contexts, t) < 1:
                raise ValueError(f"n_contexts for {t} must be >= 1")
            if self.per_type(self.mention_vocab, t) < 1:
                raise ValueError(f"mention_vocab for {t} must be >= 1")
        if self.n_sentences < 3:
            raise ValueError("n_sentences must be >= 3 (one per split)")
        if not 0.0 <= self.ambiguity <= 1.0:
            raise ValueError("ambiguity must lie in [0, 1]")
        if self.zipf_s < 0:
            raise ValueError("zipf_s must be >= 0")
        if len(self.split_fractions) != 3 or any(f <= 0 for f in self.split_fractions):
            raise ValueError("split_fractions needs three positive values")

    def per_type(self, knob, etype: str):
        return knob[etype] if isinstance(knob, Mapping) else knob

    def to_dict(self) -> dict:
        d = asdict(self)
        d["types"] = list(self.types)
        for key in ("regularity", "n_contexts", "mention_vocab"):
            value = getattr(self, key)
            d[key] = dict(value) if isinstance(value, Mapping) else value
        d["split_fractions"] = list(self.split_fractions)
        d["context_len"] = list(self.context_len)
        d["name_len"] = list(self.name_len)
        return d

    @classmethod
    def from_dict(cls, data: Mapping) -> "SyntheticSpec":
        data = dict(data)
        for key in ("types", "split_fractions", "context_len", "name_len"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)


@dataclass
class SyntheticData:
    splits: dict[str, Corpus]
    metadata: dict = field(default_factory=dict)

    def __getitem__(self, split: str) -> Corpus:
        return self.splits[split]

    def metadata_json(self) -> str:
        return json.dumps(self.metadata, sort_keys=True, indent=1) + "\n"


def zipf_weights(n: int, s: float) -> list[float]:
    raw = [1.0 / (rank ** s) for rank in range(1, n + 1)]
    total = sum(raw)
    return [w / total for w in raw]


class _WordFactory:
    """Distinct lowercase pseudo-words; never repeats across calls."""

    def __init__(self, rng: random.Random, reserved=()):
        self.rng = rng
        self.used = set(reserved)

    def word(self, min_syl: int = 1, max_syl: int = 3) -> str:
        for _ in range(10000):
            n = self.rng.randint(min_syl, max_syl)
            w = "".join(self.rng.choice(_ONSETS) + self.rng.choice(_VOWELS) for _ in range(n))
            w += self.rng.choice(_CODAS)
            if w not in self.used:
                self.used.add(w)
                return w
        raise GenerationError("pseudo-word space exhausted")


def generate(spec: SyntheticSpec) -> SyntheticData:
    """Build train/dev/test corpora and per-sentence ground-truth metadata.

    Each distinct (template, surface) instance is assigned to one split, so
    no sentence occurs in two splits.
    """
    rng = random.Random(spec.seed)
    markers = {t: DEFAULT_MARKERS.get(t) for t in spec.types}
    words = _WordFactory(rng, reserved={m for m in markers.values() if m})
    for t in spec.types:
        if markers[t] is None:
            markers[t] = words.word(2, 2)

    fillers = [words.word(1, 2) for _ in range(spec.filler_vocab)]

    def make_template() -> tuple[tuple[str, ...], int]:
        length = rng.randint(*spec.context_len)
        toks = tuple(rng.choice(fillers) for _ in range(length))
        return toks, rng.randint(0, length)

    counts = {t: spec.per_type(spec.n_contexts, t) for t in spec.types}
    n_shared = {t: round(spec.ambiguity * counts[t]) for t in spec.types}
    shared = [make_template() for _ in range(max(n_shared.values(), default=0))]
    templates: dict[str, list[tuple[int, tuple[str, ...], int]]] = {}
    template_table = []
    for i, (toks, slot) in enumerate(shared):
        template_table.append({"id": i, "tokens": list(toks), "slot": slot, "shared": True})
    for t in spec.types:
        own = []
        for _ in range(counts[t] - n_shared[t]):
            toks, slot = make_template()
            tid = len(template_table)
            template_table.append({"id": tid, "tokens": list(toks), "slot": slot,
                                   "shared": False, "type": t})
            own.append((tid, toks, slot))
        templates[t] = [(i, *shared[i]) for i in range(n_shared[t])] + own

    context_words = sorted({w for tpl in template_table for w in tpl["tokens"]})
    vocab: dict[str, list[tuple[tuple[str, ...], bool]]] = {}
    taken: set[tuple[str, ...]] = set()
    for t in spec.types:
        reg = spec.per_type(spec.regularity, t)
        entries = []
        for _ in range(spec.per_type(spec.mention_vocab, t)):
            if rng.random() < reg:
                base = tuple(words.word(2, 3) for _ in range(rng.randint(*spec.name_len)))
                entries.append((base + (markers[t],), True))
                continue
            for _ in range(1000):
                surface = tuple(rng.choice(context_words) for _ in range(rng.randint(1, 3)))
                if surface not in taken:
                    break
            else:
                raise GenerationError("context vocabulary too small for the irregular surfaces")
            entries.append((surface, False))
            taken.add(surface)
        vocab[t] = entries

    capacity = sum(len(templates[t]) * len(vocab[t]) for t in spec.types)
    if capacity < len(SPLITS):
        raise GenerationError(f"only {capacity} distinct sentences possible; "
                              "enlarge the vocabulary or the template count")

    cum = {t: list(accumulate(zipf_weights(len(vocab[t]), spec.zipf_s))) for t in spec.types}
    split_cum = list(accumulate(f / sum(spec.split_fractions) for f in spec.split_fractions))
    assigned: dict[tuple[str, int, int], str] = {}
    rows: dict[str, list] = {s: [] for s in SPLITS}
    for _ in range(spec.n_sentences):
        t = rng.choice(spec.types)
        tid, toks, slot = rng.choice(templates[t])
        sid = min(bisect_right(cum[t], rng.random()), len(vocab[t]) - 1)
        key = (t, tid, sid)
        split = assigned.get(key)
        if split is None:
            split = SPLITS[min(bisect_right(split_cum, rng.random()), 2)]
            assigned[key] = split
        surface, marked = vocab[t][sid]
        tokens = toks[:slot] + surface + toks[slot:]
        sentence = Sentence(tokens, (Mention(slot, slot + len(surface), t),))
        rows[split].append((sentence, {"template": tid, "type": t, "surface_id": sid,
                                       "surface": " ".join(surface), "marked": marked}))

    empty = [s for s in SPLITS if not rows[s]]
    if empty:
        raise GenerationError(f"split(s) {empty} received no sentences; vocabulary too small "
                              "for the requested number of distinct sentences")
    splits = {s: Corpus(tuple(r[0] for r in rows[s]), s) for s in SPLITS}
    metadata = {
        "spec": spec.to_dict(),
        "markers": markers,
        "templates": template_table,
        "sentences": {s: [r[1] for r in rows[s]] for s in SPLITS},
    }
    return SyntheticData(splits, metadata)
