"""Averaged-perceptron token classifier with BIO-constrained Viterbi decoding."""

from __future__ import annotations

import json
import math
import random
import re
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Sequence

from ..corpus import Corpus, Mention, Sentence, bio_decode, bio_encode

FORMAT_HEADER = "# nerprobe perceptron v1"
NEG_INF = -math.inf


@dataclass(frozen=True)
class FeatureConfig:
    """``word_identity=False`` drops the current token's identity and affixes,
    leaving a context + shape tagger."""

    window: int = 2
    word_identity: bool = True
    shape: bool = True
    affixes: bool = True
    affix_max: int = 3
    position: bool = True


_SHAPE_SUBS = [(re.compile(r"[A-Z]"), "X"), (re.compile(r"[a-z]"), "x"),
               (re.compile(r"[0-9]"), "d")]


def word_shape(word: str) -> str:
    shape = word
    for pattern, repl in _SHAPE_SUBS:
        shape = pattern.sub(repl, shape)
    # collapse runs: "Xxxxx" -> "Xx"
    return re.sub(r"(.)\1+", r"\1", shape)


def token_features(tokens: Sequence[str], i: int, cfg: FeatureConfig) -> list[str]:
    w = tokens[i]
    feats = ["bias"]
    if cfg.word_identity:
        feats.append("w0=" + w.lower())
        if cfg.affixes:
            for k in range(1, min(cfg.affix_max, len(w)) + 1):
                feats.append(f"pre{k}={w[:k].lower()}")
                feats.append(f"suf{k}={w[-k:].lower()}")
    if cfg.shape:
        feats.append("shape0=" + word_shape(w))
    for off in range(1, cfg.window + 1):
        for sign, j in (("-", i - off), ("+", i + off)):
            if 0 <= j < len(tokens):
                feats.append(f"w{sign}{off}=" + tokens[j].lower())
                if cfg.shape:
                    feats.append(f"shape{sign}{off}=" + word_shape(tokens[j]))
            else:
                feats.append(f"w{sign}{off}=<pad>")
    if cfg.position:
        if i == 0:
            feats.append("first")
        if i == len(tokens) - 1:
            feats.append("last")
    return feats


def label_set(types: Sequence[str]) -> list[str]:
    labels = ["O"]
    for t in sorted(types):
        labels += [f"B-{t}", f"I-{t}"]
    return labels


def allowed_transitions(labels: Sequence[str]) -> tuple[list[bool], list[list[bool]]]:
    """(start_ok[k], trans_ok[j][k]) under BIO: I-X only after B-X or I-X."""
    def ok(prev: str | None, cur: str) -> bool:
        if not cur.startswith("I-"):
            return True
        return prev is not None and prev != "O" and prev[2:] == cur[2:]
    start = [ok(None, c) for c in labels]
    trans = [[ok(p, c) for c in labels] for p in labels]
    return start, trans


def viterbi(scores: Sequence[Sequence[float]], labels: Sequence[str],
            transitions: Sequence[Sequence[float]] | None = None) -> tuple[list[int], float]:
    """Best BIO-valid label path for per-token ``scores[t][k]``.

    Optional ``transitions[j][k]`` are added between consecutive labels.
    Ties resolve towards lower label indices (``O`` first).
    """
    n = len(scores)
    if n == 0:
        return [], 0.0
    n_labels = len(labels)
    start_ok, trans_ok = allowed_transitions(labels)
    delta = [scores[0][k] if start_ok[k] else NEG_INF for k in range(n_labels)]
    back = []
    for t in range(1, n):
        new, ptr = [], []
        for k in range(n_labels):
            best, arg = NEG_INF, -1
            for j in range(n_labels):
                if not trans_ok[j][k] or delta[j] == NEG_INF:
                    continue
                v = delta[j] + (transitions[j][k] if transitions is not None else 0.0)
                if v > best:
                    best, arg = v, j
            new.append(best + scores[t][k] if arg >= 0 else NEG_INF)
            ptr.append(arg)
        delta = new
        back.append(ptr)
    last = max(range(n_labels), key=lambda k: (delta[k], -k))
    path = [last]
    for ptr in reversed(back):
        path.append(ptr[path[-1]])
    path.reverse()
    return path, delta[last]


@dataclass
class PerceptronModel:
    labels: list[str]
    feature_config: FeatureConfig = field(default_factory=FeatureConfig)
    weights: dict[str, dict[str, float]] = field(default_factory=dict)
    finalized: bool = False
    # averaging state, dropped by finalize()
    _totals: dict = field(default_factory=lambda: defaultdict(lambda: defaultdict(float)),
                          repr=False)
    _tstamps: dict = field(default_factory=lambda: defaultdict(lambda: defaultdict(int)),
                           repr=False)
    _clock: int = 0

    def scores(self, feats: Sequence[str]) -> dict[str, float]:
        out = dict.fromkeys(self.labels, 0.0)
        for f in feats:
            row = self.weights.get(f)
            if row:
                for label, w in row.items():
                    out[label] += w
        return out

    def predict_label(self, feats: Sequence[str]) -> str:
        s = self.scores(feats)
        return max(self.labels, key=lambda lab: s[lab])  # first label wins ties

    def update(self, truth: str, guess: str, feats: Sequence[str]) -> None:
        self._clock += 1
        if truth == guess:
            return
        for f in feats:
            row = self.weights.setdefault(f, {})
            for label, delta in ((truth, 1.0), (guess, -1.0)):
                w = row.get(label, 0.0)
                self._totals[f][label] += (self._clock - self._tstamps[f][label]) * w
                self._tstamps[f][label] = self._clock
                row[label] = w + delta

    def finalize(self) -> None:
        if self.finalized:
            return
        clock = max(self._clock, 1)
        averaged = {}
        for f, row in self.weights.items():
            new_row = {}
            for label, w in row.items():
                total = self._totals[f][label] + (self._clock - self._tstamps[f][label]) * w
                avg = total / clock
                if avg:
                    new_row[label] = avg
            if new_row:
                averaged[f] = new_row
        self.weights = averaged
        self.finalized = True
        self._totals.clear()
        self._tstamps.clear()

    def tag(self, sentence: Sentence) -> list[Mention]:
        return perceptron_tag(self, sentence)

    def dumps(self) -> str:
        lines = [FORMAT_HEADER,
                 "# labels=" + " ".join(self.labels),
                 "# features=" + json.dumps(asdict(self.feature_config), sort_keys=True)]
        rows = sorted((f, lab, w) for f, row in self.weights.items() for lab, w in row.items())
        lines += [f"{f}\t{lab}\t{w!r}" for f, lab, w in rows]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "PerceptronModel":
        lines = text.splitlines()
        if not lines or lines[0] != FORMAT_HEADER:
            raise ValueError("not a perceptron model file")
        labels, cfg, weights = None, FeatureConfig(), {}
        for line in lines[1:]:
            if line.startswith("# labels="):
                labels = line[len("# labels="):].split(" ")
            elif line.startswith("# features="):
                cfg = FeatureConfig(**json.loads(line[len("# features="):]))
            elif line:
                f, lab, w = line.split("\t")
                weights.setdefault(f, {})[lab] = float(w)
        if labels is None:
            raise ValueError("model file has no label line")
        return cls(labels, cfg, weights, finalized=True)


def sentence_features(sentence: Sentence, cfg: FeatureConfig) -> list[list[str]]:
    return [token_features(sentence.tokens, i, cfg) for i in range(len(sentence))]


def perceptron_train(train: Corpus, epochs: int = 10, seed: int = 0,
                     feature_config: FeatureConfig | None = None) -> PerceptronModel:
    """Averaged perceptron over per-token BIO decisions; sentence order is
    reshuffled every epoch from ``seed``."""
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    if not len(train):
        raise ValueError("cannot train on an empty corpus")
    cfg = feature_config or FeatureConfig()
    model = PerceptronModel(label_set(train.entity_types()), cfg)
    data = [(sentence_features(s, cfg), bio_encode(s)) for s in train.sentences]
    rng = random.Random(seed)
    order = list(range(len(data)))
    for _ in range(epochs):
        rng.shuffle(order)
        for idx in order:
            feats, tags = data[idx]
            for f, gold in zip(feats, tags):
                model.update(gold, model.predict_label(f), f)
    model.finalize()
    return model


def perceptron_tag(model: PerceptronModel, sentence: Sentence) -> list[Mention]:
    if not model.finalized:
        raise ValueError("model must be finalized before tagging")
    feats = sentence_features(sentence, model.feature_config)
    score_rows = []
    for f in feats:
        s = model.scores(f)
        score_rows.append([s[lab] for lab in model.labels])
    path, _ = viterbi(score_rows, model.labels)
    return bio_decode([model.labels[k] for k in path])


def token_accuracy(model: PerceptronModel, corpus: Corpus) -> float:
    correct = total = 0
    for s in corpus.sentences:
        pred = bio_encode(Sentence(s.tokens, tuple(perceptron_tag(model, s))))
        gold = bio_encode(s)
        correct += sum(p == g for p, g in zip(pred, gold))
        total += len(gold)
    return correct / total if total else 0.0
