"""Baseline taggers: a dictionary memorizer and an averaged perceptron."""

from __future__ import annotations

from ..corpus import Corpus, Mention
from . import dictionary, perceptron
from .dictionary import DictTaggerModel, dict_tag, dict_train
from .perceptron import (FeatureConfig, PerceptronModel, perceptron_tag, perceptron_train,
                         viterbi)

__all__ = [
    "DictTaggerModel",
    "FeatureConfig",
    "PerceptronModel",
    "dict_tag",
    "dict_train",
    "load_model",
    "perceptron_tag",
    "perceptron_train",
    "tag_corpus",
    "viterbi",
]


def tag_corpus(model, corpus: Corpus) -> list[list[Mention]]:
    return [model.tag(s) for s in corpus.sentences]


def load_model(text: str):
    """Load either model format from its serialized text."""
    first = text.split("\n", 1)[0]
    if first == dictionary.FORMAT_HEADER:
        return DictTaggerModel.loads(text)
    if first == perceptron.FORMAT_HEADER:
        return PerceptronModel.loads(text)
    raise ValueError(f"unrecognized model header {first!r}")
