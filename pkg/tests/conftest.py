import random

import pytest
from hypothesis import strategies as st

from nerprobe.corpus import Corpus, Mention, Sentence

WORDS = ["putin", "blair", "bush", "spoke", "to", "on", "april", "the", "united", "talks",
         "New", "York", "x", "y", "z", "a-b", "é", "3"]
TYPES = ["PER", "ORG", "GPE", "LOC", "FAC"]


def sent(text: str, *spans) -> Sentence:
    """sent("Blair spoke to Bush", (0, 1, "PER"), (3, 4, "PER"))"""
    return Sentence(tuple(text.split()), tuple(Mention(*s) for s in spans))


@st.composite
def flat_sentences(draw, max_len=10, types=TYPES):
    n = draw(st.integers(1, max_len))
    tokens = tuple(draw(st.lists(st.sampled_from(WORDS), min_size=n, max_size=n)))
    mentions = []
    pos = 0
    while pos < n:
        if draw(st.booleans()):
            end = draw(st.integers(pos + 1, min(n, pos + 3)))
            mentions.append(Mention(pos, end, draw(st.sampled_from(types))))
            pos = end + draw(st.integers(0, 2))
        else:
            pos += 1
    return Sentence(tokens, tuple(mentions))


@st.composite
def flat_corpora(draw, max_sentences=20, types=TYPES):
    return Corpus(tuple(draw(st.lists(flat_sentences(types=types), max_size=max_sentences))))


def random_flat_corpus(rng: random.Random, n_sentences: int, n_types: int,
                       max_len: int = 8, vocab=WORDS) -> Corpus:
    types = TYPES[:n_types]
    sentences = []
    for _ in range(n_sentences):
        n = rng.randint(1, max_len)
        tokens = tuple(rng.choice(vocab) for _ in range(n))
        mentions, pos = [], 0
        while pos < n:
            if rng.random() < 0.4:
                end = rng.randint(pos + 1, min(n, pos + 3))
                mentions.append(Mention(pos, end, rng.choice(types)))
                pos = end + rng.randint(0, 1)
            else:
                pos += 1
        sentences.append(Sentence(tokens, tuple(mentions)))
    return Corpus(tuple(sentences))


@pytest.fixture
def blair_corpus():
    return Corpus((
        sent("Putin concluded his two days of talks", (0, 1, "PER")),
        sent("Blair spoke to Bush on April 5", (0, 1, "PER"), (3, 4, "PER")),
        sent("Microsoft bought Blair Ltd", (0, 1, "ORG"), (2, 4, "ORG")),
    ), "train")
