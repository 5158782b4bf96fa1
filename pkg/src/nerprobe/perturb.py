"""Randomization-test transforms over span-annotated corpora.

Every transform is a pure function of its inputs and seed. Name and mention
permutation rewrite all splits; the three reduction transforms only touch
the training split.
"""

from __future__ import annotations

import logging
import math
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .corpus import Corpus, Mention, Sentence
from .seeding import make_rng

log = logging.getLogger(__name__)

__all__ = [
    "KINDS",
    "NgramPool",
    "PoolExhaustedError",
    "ReplacementMap",
    "TransformError",
    "TransformSpec",
    "apply_transform",
    "build_pool",
    "canonical_kind",
    "context_reduction",
    "keep_count",
    "mention_permutation",
    "mention_reduction",
    "name_permutation",
    "non_mention_vocabulary",
    "required_pool_size",
    "sentence_reduction",
    "takes_ratio",
    "topped_up_pool",
    "wordlist_pool",
]


class TransformError(ValueError):
    pass


class PoolExhaustedError(TransformError):
    pass


# short code -> long name
KINDS = {
    "NP": "NamePermutation",
    "MP": "MentionPermutation",
    "CR": "ContextReduction",
    "MR": "MentionReduction",
    "SR": "SentenceReduction",
}
_RATIO_KINDS = {"CR", "MR", "SR"}
_LONG_TO_SHORT = {v: k for k, v in KINDS.items()}


def keep_count(ratio: float, n: int, minimum: int = 0) -> int:
    """ceil(ratio * n), immune to float noise such as 0.3 * 10 = 3.0000000000000004."""
    return max(minimum, min(n, math.ceil(round(ratio * n, 9))))


def canonical_kind(kind: str) -> str:
    """Short code for a transform kind given as code or long name."""
    code = _LONG_TO_SHORT.get(kind, kind)
    if code not in KINDS:
        raise ValueError(f"unknown transform kind {kind!r}")
    return code


def takes_ratio(kind: str) -> bool:
    return canonical_kind(kind) in _RATIO_KINDS


@dataclass(frozen=True)
class TransformSpec:
    kind: str
    ratio: float | None = None
    seed: int = 0
    apply_to: frozenset[str] | None = None

    def __post_init__(self):
        kind = canonical_kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind in _RATIO_KINDS:
            if self.ratio is None or not (0.0 < self.ratio <= 1.0):
                raise ValueError(f"{kind} needs a ratio in (0, 1], got {self.ratio!r}")
        elif self.ratio is not None:
            raise ValueError(f"{kind} takes no ratio")
        apply_to = self.apply_to
        if apply_to is None:
            apply_to = {"train"} if kind in _RATIO_KINDS else {"train", "dev", "test"}
        object.__setattr__(self, "apply_to", frozenset(apply_to))

    @property
    def name(self) -> str:
        return KINDS[self.kind]

    @property
    def label(self) -> str:
        return self.kind if self.ratio is None else f"{self.kind}-{self.ratio:g}"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "ratio": self.ratio, "seed": self.seed,
                "apply_to": sorted(self.apply_to)}


# ---------------------------------------------------------------------------
# replacement strings


@dataclass(frozen=True)
class NgramPool:
    """Candidate replacement n-grams, with every forbidden surface removed."""

    source: tuple[tuple[str, ...], ...]
    forbidden: frozenset[str] = frozenset()
    rng_seed: int = 0

    def __post_init__(self):
        seen = set()
        clean = []
        for gram in self.source:
            gram = tuple(gram)
            surface = " ".join(gram)
            if gram and surface not in self.forbidden and gram not in seen:
                seen.add(gram)
                clean.append(gram)
        object.__setattr__(self, "source", tuple(clean))

    def __len__(self) -> int:
        return len(self.source)

    def surfaces(self) -> set[str]:
        return {" ".join(g) for g in self.source}

    def merged(self, other: "NgramPool") -> "NgramPool":
        return NgramPool(self.source + other.source, self.forbidden | other.forbidden,
                         self.rng_seed)

    def sampler(self, seed: int | None = None, unique: bool = True) -> "_Sampler":
        return _Sampler(self, self.rng_seed if seed is None else seed, unique)


class _Sampler:
    """Draws n-grams: length uniform over the lengths still available, then a
    uniformly chosen n-gram of that length. ``unique`` draws never repeat."""

    def __init__(self, pool: NgramPool, seed: int, unique: bool):
        self.pool = pool
        self.unique = unique
        self.rng = random.Random(seed)
        by_len: dict[int, list[tuple[str, ...]]] = defaultdict(list)
        for gram in pool.source:
            by_len[len(gram)].append(gram)
        self.lengths = sorted(by_len)
        self.buckets = {n: by_len[n] for n in self.lengths}
        if unique:
            for n in self.lengths:
                self.rng.shuffle(self.buckets[n])
        self.emitted = 0

    def remaining(self) -> int:
        return sum(len(b) for b in self.buckets.values())

    def draw(self) -> tuple[str, ...]:
        lengths = [n for n in self.lengths if self.buckets[n]]
        if not lengths:
            raise PoolExhaustedError(
                f"n-gram pool exhausted after {self.emitted} draws "
                f"(pool size {len(self.pool)}); widen the n range or add a word list")
        n = self.rng.choice(lengths)
        if self.unique:
            gram = self.buckets[n].pop()
        else:
            gram = self.rng.choice(self.buckets[n])
        self.emitted += 1
        return gram


def _all_surfaces(corpora: Iterable[Corpus]) -> frozenset[str]:
    return frozenset(surface for c in corpora for s in c.sentences for surface, _ in s.surfaces())


def _as_corpus_list(corpora) -> list[Corpus]:
    if isinstance(corpora, Corpus):
        return [corpora]
    if isinstance(corpora, Mapping):
        return list(corpora.values())
    return list(corpora)


def _non_mention_runs(sentence: Sentence) -> list[tuple[str, ...]]:
    runs, pos = [], 0
    for m in sentence.mentions:
        if m.start > pos:
            runs.append(sentence.tokens[pos:m.start])
        pos = max(pos, m.end)
    if pos < len(sentence):
        runs.append(sentence.tokens[pos:])
    return runs


def build_pool(corpora, n_min: int = 1, n_max: int = 3, seed: int = 0) -> NgramPool:
    """Every n-gram (``n_min <= n <= n_max``) inside maximal non-mention token
    runs, minus all mention surfaces of ``corpora``.

    ``corpora`` is a corpus, a list of corpora or a split -> corpus mapping.
    The n-grams are kept in first-seen order.
    """
    if not 1 <= n_min <= n_max:
        raise ValueError(f"need 1 <= n_min <= n_max, got {n_min}, {n_max}")
    corpora = _as_corpus_list(corpora)
    if not any(len(c) for c in corpora):
        raise TransformError("cannot build an n-gram pool from an empty corpus")
    forbidden = _all_surfaces(corpora)
    grams = {}
    for c in corpora:
        for sentence in c.sentences:
            for run in _non_mention_runs(sentence):
                for n in range(n_min, n_max + 1):
                    for i in range(len(run) - n + 1):
                        grams.setdefault(run[i:i + n], None)
    pool = NgramPool(tuple(grams), forbidden, seed)
    if not len(pool):
        raise TransformError(
            "n-gram pool is empty after removing mention surfaces; "
            "use a wider n range or an external word list")
    return pool


def wordlist_pool(words: Sequence[str], size: int, n_min: int = 1, n_max: int = 3,
                  seed: int = 0, forbidden: Iterable[str] = ()) -> NgramPool:
    """``size`` distinct random n-grams composed from ``words``.

    Used when a corpus has too little non-mention text for a permutation.
    """
    words = sorted(set(words))
    if not words:
        raise TransformError("empty word list")
    forbidden = frozenset(forbidden)
    capacity = sum(len(words) ** n for n in range(n_min, n_max + 1))
    if size > capacity:
        raise TransformError(f"word list can produce at most {capacity} n-grams, {size} requested")
    rng = random.Random(seed)
    grams: dict[tuple[str, ...], None] = {}
    attempts = 0
    while len(grams) < size:
        attempts += 1
        if attempts > 50 * size + 1000:
            raise TransformError("could not sample enough distinct n-grams from the word list")
        n = rng.randint(n_min, n_max)
        gram = tuple(rng.choice(words) for _ in range(n))
        if " ".join(gram) not in forbidden:
            grams.setdefault(gram, None)
    return NgramPool(tuple(grams), forbidden, seed)


def non_mention_vocabulary(corpora) -> list[str]:
    """Sorted tokens that occur at least once outside a mention span."""
    corpora = _as_corpus_list(corpora)
    return sorted({t for c in corpora for s in c.sentences for run in _non_mention_runs(s)
                   for t in run})


def required_pool_size(kind: str, corpora: Mapping[str, Corpus], typed: bool = False) -> int:
    """Distinct draws a permutation of ``corpora`` will make."""
    if kind == "MP":
        return sum(c.n_mentions() for c in corpora.values())
    keys = {(surf, t) if typed else surf
            for c in corpora.values() for s in c.sentences for surf, t in s.surfaces()}
    return len(keys)


def topped_up_pool(pool: NgramPool, corpora, size: int, n_min: int = 1, n_max: int = 3,
                   seed: int = 0) -> NgramPool:
    """``pool`` extended with random n-grams over the corpus's non-mention
    vocabulary until it holds at least ``size`` entries."""
    if len(pool) >= size:
        return pool
    words = non_mention_vocabulary(corpora)
    extra = wordlist_pool(words, size - len(pool), n_min, n_max, seed,
                          forbidden=pool.forbidden | pool.surfaces())
    log.info("n-gram pool topped up from %d to %d with word-list n-grams", len(pool), size)
    return NgramPool(pool.source + extra.source, pool.forbidden, pool.rng_seed)


@dataclass
class ReplacementMap:
    """Vanilla surface (or (surface, type) in typed mode) -> replacement tokens."""

    mapping: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.mapping[key]

    def __len__(self) -> int:
        return len(self.mapping)

    def is_injective(self) -> bool:
        values = [" ".join(v) for v in self.mapping.values()]
        return len(values) == len(set(values))

    def to_tsv(self) -> str:
        lines = []
        for key, value in self.mapping.items():
            key_cols = "\t".join(key) if isinstance(key, tuple) else key
            lines.append(f"{key_cols}\t{' '.join(value)}\n")
        return "".join(lines)


# ---------------------------------------------------------------------------
# helpers


def _rewrite(sentence: Sentence, replacements: Sequence[tuple[str, ...] | None]) -> Sentence:
    """Replace mention i's tokens with ``replacements[i]`` (None keeps it)."""
    tokens: list[str] = []
    mentions = []
    pos = 0
    for m, new in zip(sentence.mentions, replacements):
        if new is None:
            new = sentence.tokens[m.start:m.end]
        tokens.extend(sentence.tokens[pos:m.start])
        start = len(tokens)
        tokens.extend(new)
        mentions.append(Mention(start, len(tokens), m.entity_type))
        pos = m.end
    tokens.extend(sentence.tokens[pos:])
    return Sentence(tuple(tokens), tuple(mentions))


def _check_flat(corpora: Iterable[Corpus]):
    for c in corpora:
        for i, s in enumerate(c.sentences):
            if not s.is_flat():
                raise TransformError(f"{c.split_name} sentence {i} has overlapping mentions; "
                                     "project to outermost mentions first")


# ---------------------------------------------------------------------------
# permutations


def name_permutation(corpora: Mapping[str, Corpus], pool: NgramPool, seed: int,
                     typed: bool = False) -> tuple[dict[str, Corpus], ReplacementMap]:
    """Rename every distinct surface to one random n-gram, consistently across splits.

    The map is built over the union of all splits, so a test mention whose
    surface occurs in train gets the same replacement there.
    """
    _check_flat(corpora.values())
    keys: dict = {}
    for corpus in corpora.values():
        for sentence in corpus.sentences:
            for surface, etype in sentence.surfaces():
                keys.setdefault((surface, etype) if typed else surface, None)
    forbidden = _all_surfaces(corpora.values())
    sampler = pool.sampler(seed)
    mapping = {}
    for key in keys:
        gram = sampler.draw()
        while " ".join(gram) in forbidden:
            gram = sampler.draw()
        mapping[key] = gram
    rmap = ReplacementMap(mapping)
    out = {}
    for split, corpus in corpora.items():
        out[split] = corpus.replace(
            _rewrite(s, [mapping[(surf, t) if typed else surf] for surf, t in s.surfaces()])
            for s in corpus.sentences)
    return out, rmap


def mention_permutation(corpora: Mapping[str, Corpus], pool: NgramPool, seed: int,
                        allow_repeats: bool = False) -> dict[str, Corpus]:
    """Give every mention occurrence its own random n-gram.

    Draws are without repetition over the whole run, so no test surface can
    occur in train afterwards. ``allow_repeats`` samples with replacement
    instead and lets a little coverage leak back in.
    """
    _check_flat(corpora.values())
    forbidden = _all_surfaces(corpora.values())
    sampler = pool.sampler(seed, unique=not allow_repeats)
    out = {}
    for split, corpus in corpora.items():
        sentences = []
        for s in corpus.sentences:
            new = []
            for _ in s.mentions:
                gram = sampler.draw()
                while " ".join(gram) in forbidden:
                    gram = sampler.draw()
                new.append(gram)
            sentences.append(_rewrite(s, new))
        out[split] = corpus.replace(sentences)
    return out


# ---------------------------------------------------------------------------
# reductions (train split only)


def sentence_reduction(train: Corpus, ratio: float, seed: int) -> Corpus:
    """Uniform subsample of ceil(ratio * N) sentences, original order kept."""
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"ratio must be in (0, 1], got {ratio}")
    n = len(train)
    k = keep_count(ratio, n)
    if k == n:
        return train
    keep = sorted(random.Random(seed).sample(range(n), k))
    return train.replace(train.sentences[i] for i in keep)


def _type_multisets(sentences: Iterable[Sentence]) -> dict[str, Counter]:
    out: dict[str, Counter] = defaultdict(Counter)
    for s in sentences:
        for surface, etype in s.surfaces():
            out[etype][surface] += 1
    return out


def context_reduction(train: Corpus, ratio: float, seed: int, max_retries: int = 100,
                      max_copies: int | None = None) -> Corpus:
    """Keep ceil(ratio * N) sentences, then duplicate them and refill their
    mention slots until each type's surface multiset matches the original.

    Kept sentences retain their own mentions. Duplicates are made round-robin
    over kept sentences whose slot types still have a deficit, preferring
    sentences where every slot can take a pending surface. A slot whose type
    has no pending surface left (only possible with multi-slot sentences) is
    filled by a uniform draw from that type's original multiset and reported
    as surplus.
    """
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"ratio must be in (0, 1], got {ratio}")
    _check_flat([train])
    n = len(train)
    k = keep_count(ratio, n)
    if k == n:
        return train
    rng = random.Random(seed)
    vanilla = _type_multisets(train.sentences)
    types = set(vanilla)

    for _ in range(max_retries):
        keep = sorted(rng.sample(range(n), k))
        kept = [train.sentences[i] for i in keep]
        if types <= {m.entity_type for s in kept for m in s.mentions}:
            break
    else:
        missing = types - {m.entity_type for s in kept for m in s.mentions}
        raise TransformError(
            f"no sample of {k} sentences covering every type after {max_retries} tries "
            f"(missing {sorted(missing)}); raise the ratio")

    pending: dict[str, list[str]] = {}
    kept_counts = _type_multisets(kept)
    for etype in sorted(vanilla):
        deficit = vanilla[etype] - kept_counts.get(etype, Counter())
        bag = sorted(deficit.elements())
        rng.shuffle(bag)
        pending[etype] = bag
    population = {t: sorted(vanilla[t].elements()) for t in vanilla}

    hosts = [s for s in kept if s.mentions]
    copies = []
    surplus: Counter = Counter()
    limit = max_copies if max_copies is not None else sum(len(b) for b in pending.values())
    order = {id(s): i for i, s in enumerate(hosts)}
    cursor = 0
    while any(pending.values()):
        if len(copies) >= limit:
            stuck = sorted(t for t, b in pending.items() if b)
            raise TransformError(f"duplication limit {limit} reached with unplaced "
                                 f"mentions of type(s) {stuck}")
        full = [s for s in hosts if all(pending[m.entity_type] for m in s.mentions)]
        candidates = full or [s for s in hosts if any(pending[m.entity_type] for m in s.mentions)]
        # round-robin: next candidate at or after the cursor in kept order
        host = min(candidates, key=lambda s: (order[id(s)] - cursor) % len(hosts))
        cursor = (order[id(host)] + 1) % len(hosts)
        new = []
        for m in host.mentions:
            bag = pending[m.entity_type]
            if bag:
                new.append(tuple(bag.pop().split(" ")))
            else:
                surplus[m.entity_type] += 1
                new.append(tuple(rng.choice(population[m.entity_type]).split(" ")))
        copies.append(_rewrite(host, new))
    if surplus:
        log.warning("context reduction filled %d surplus slot(s) with replacement draws: %s",
                    sum(surplus.values()), dict(sorted(surplus.items())))
    return train.replace(kept + copies)


def mention_reduction(train: Corpus, ratio: float, seed: int) -> Corpus:
    """Keep ceil(ratio * U_t) seed surfaces per type and replace every other
    mention with a seed of its type drawn uniformly."""
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"ratio must be in (0, 1], got {ratio}")
    _check_flat([train])
    rng = random.Random(seed)
    seeds: dict[str, list[str]] = {}
    reduced = False
    for etype, bag in sorted(_type_multisets(train.sentences).items()):
        unique = sorted(bag)
        k = keep_count(ratio, len(unique), minimum=1)
        reduced = reduced or k < len(unique)
        seeds[etype] = sorted(rng.sample(unique, k))
    if not reduced:
        return train
    seed_sets = {t: set(v) for t, v in seeds.items()}
    sentences = []
    for s in train.sentences:
        new = []
        for surface, etype in s.surfaces():
            if surface in seed_sets[etype]:
                new.append(None)
            else:
                new.append(tuple(rng.choice(seeds[etype]).split(" ")))
        sentences.append(_rewrite(s, new))
    return train.replace(sentences)


# ---------------------------------------------------------------------------
# dispatch


def apply_transform(spec: TransformSpec, corpora: Mapping[str, Corpus],
                    pool: NgramPool | None = None, **options) -> tuple[dict[str, Corpus], dict]:
    """Apply ``spec`` to a split -> corpus mapping.

    Returns the transformed mapping (untouched splits passed through) and a
    dict of artifacts, currently ``{"replacement_map": ...}`` for NP.
    """
    corpora = dict(corpora)
    artifacts: dict = {}
    targets = {k: v for k, v in corpora.items() if k in spec.apply_to}
    if spec.kind in ("NP", "MP"):
        if pool is None:
            n_min, n_max = options.get("n_min", 1), options.get("n_max", 3)
            pool = build_pool(corpora, n_min, n_max, seed=spec.seed)
            # NP and MP share one pool size so both draw from the same string distribution
            need = max(required_pool_size("MP", targets),
                       required_pool_size("NP", targets, options.get("typed", False)))
            pool = topped_up_pool(pool, corpora, need, n_min, n_max, seed=spec.seed)
        if spec.kind == "NP":
            done, rmap = name_permutation(targets, pool, spec.seed,
                                          typed=options.get("typed", False))
            artifacts["replacement_map"] = rmap
        else:
            done = mention_permutation(targets, pool, spec.seed,
                                       allow_repeats=options.get("allow_repeats", False))
        corpora.update(done)
        return corpora, artifacts
    fn = {"CR": context_reduction, "MR": mention_reduction, "SR": sentence_reduction}[spec.kind]
    for split, corpus in targets.items():
        # distinct stream per split in case reductions are applied beyond train
        split_seed = spec.seed if split == "train" else make_rng(spec.seed, split).getrandbits(64)
        corpora[split] = fn(corpus, spec.ratio, split_seed)
    return corpora, artifacts
