import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nerprobe.corpus import Corpus, Mention, build_dictionary
from nerprobe.evaluation import score
from nerprobe.perturb import TransformSpec, apply_transform
from nerprobe.synthgen import SyntheticSpec, generate
from nerprobe.taggers import (DictTaggerModel, FeatureConfig, PerceptronModel, dict_train,
                              load_model, perceptron_train, tag_corpus, viterbi)
from nerprobe.taggers.perceptron import (allowed_transitions, label_set, token_accuracy,
                                         token_features, word_shape)

from conftest import sent


@pytest.fixture(scope="module")
def synth():
    return generate(SyntheticSpec(n_sentences=1200, seed=11))


# --- dictionary tagger -------------------------------------------------------------

def test_dict_tagger_longest_match():
    train = Corpus((sent("in New York today", (1, 3, "GPE")), sent("York Minster", (0, 1, "LOC"))))
    model = dict_train(train)
    assert model.tag(sent("to New York again")) == [Mention(1, 3, "GPE")]
    assert model.tag(sent("old York")) == [Mention(1, 2, "LOC")]
    assert model.tag(sent("nothing known")) == []


def test_dict_tagger_majority_type_with_lexicographic_tie():
    train = Corpus((
        sent("Washington said", (0, 1, "PER")),
        sent("in Washington", (1, 2, "GPE")),
        sent("Jordan said", (0, 1, "PER")),
        sent("in Jordan", (1, 2, "GPE")),
        sent("to Jordan", (1, 2, "GPE")),
    ))
    model = dict_train(train)
    assert model.tag(sent("Washington"))[0].entity_type == "GPE"  # tie: GPE < PER
    assert model.tag(sent("Jordan"))[0].entity_type == "GPE"


def test_dict_tagger_casefold():
    train = Corpus((sent("met Blair", (1, 2, "PER")),))
    assert dict_train(train).tag(sent("met blair")) == []
    assert dict_train(train, casefold=True).tag(sent("met blair")) == [Mention(1, 2, "PER")]


def test_dict_tagger_recall_zero_outdict_after_mp(synth):
    out, _ = apply_transform(TransformSpec("MP", seed=1), synth.splits)
    model = dict_train(out["train"])
    report = score(out["test"], tag_corpus(model, out["test"]), build_dictionary(out["train"]))
    assert report.all.outdict.recall == 0.0
    assert report.all.outdict.tp == 0
    assert report.all.indict.tp + report.all.indict.fn == 0


def test_dict_tagger_serialization_round_trip(blair_corpus):
    model = dict_train(blair_corpus, casefold=True)
    again = DictTaggerModel.loads(model.dumps())
    assert again.dictionary == model.dictionary
    assert isinstance(load_model(model.dumps()), DictTaggerModel)
    with pytest.raises(ValueError):
        load_model("garbage\n")


# --- features and viterbi -------------------------------------------------------------

def test_word_shape():
    assert word_shape("Blair") == "Xx"
    assert word_shape("NATO") == "X"
    assert word_shape("2004") == "d"
    assert word_shape("a-b") == "x-x"


def test_context_only_features_hide_the_word():
    cfg = FeatureConfig(word_identity=False)
    feats = token_features(("met", "Blair", "today"), 1, cfg)
    assert not any("blair" in f for f in feats)
    assert "w-1=met" in feats and "w+1=today" in feats
    full = token_features(("met", "Blair", "today"), 1, FeatureConfig())
    assert "w0=blair" in full and "suf3=air" in full


def _brute_force(scores, labels):
    start_ok, trans_ok = allowed_transitions(labels)
    best, best_path = None, None
    for path in itertools.product(range(len(labels)), repeat=len(scores)):
        if not start_ok[path[0]]:
            continue
        if any(not trans_ok[a][b] for a, b in zip(path, path[1:])):
            continue
        total = sum(scores[t][k] for t, k in enumerate(path))
        if best is None or total > best:
            best, best_path = total, list(path)
    return best_path, best


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 5), st.integers(1, 2), st.integers(0, 2**32))
def test_viterbi_matches_exhaustive_search(n, n_types, seed):
    rng = random.Random(seed)
    labels = label_set(["PER", "ORG"][:n_types])
    scores = [[rng.uniform(-3, 3) for _ in labels] for _ in range(n)]
    path, total = viterbi(scores, labels)
    _, best = _brute_force(scores, labels)
    assert total == pytest.approx(best)
    assert sum(scores[t][k] for t, k in enumerate(path)) == pytest.approx(best)


def test_viterbi_never_starts_with_inside_tag():
    labels = label_set(["PER"])
    path, _ = viterbi([[0.0, 0.0, 10.0], [0.0, 0.0, 10.0]], labels)
    assert [labels[k] for k in path] == ["B-PER", "I-PER"]


def test_viterbi_ties_prefer_outside():
    labels = label_set(["PER", "ORG"])
    path, _ = viterbi([[0.0] * len(labels)] * 3, labels)
    assert path == [0, 0, 0]


# --- perceptron -------------------------------------------------------------------------

def test_zero_weights_predict_nothing():
    model = PerceptronModel(label_set(["PER"]), finalized=True)
    assert model.tag(sent("Blair spoke")) == []


def test_hand_set_weight_tags_person():
    model = PerceptronModel(label_set(["PER"]), weights={"w0=blair": {"B-PER": 1.0}},
                            finalized=True)
    assert model.tag(sent("then Blair spoke")) == [Mention(1, 2, "PER")]


def test_single_sentence_memorized():
    s = sent("Blair spoke to Bush on April 5", (0, 1, "PER"), (3, 4, "PER"))
    model = perceptron_train(Corpus((s,)), epochs=5, seed=0)
    assert model.tag(s) == list(s.mentions)
    assert token_accuracy(model, Corpus((s,))) == 1.0


def test_training_is_deterministic(synth):
    train = Corpus(synth["train"].sentences[:300])
    a = perceptron_train(train, epochs=3, seed=4)
    b = perceptron_train(train, epochs=3, seed=4)
    assert a.dumps() == b.dumps()


def test_training_input_validation():
    with pytest.raises(ValueError):
        perceptron_train(Corpus(()))
    with pytest.raises(ValueError):
        perceptron_train(Corpus((sent("a", (0, 1, "X")),)), epochs=0)
    unfinished = PerceptronModel(label_set(["X"]))
    with pytest.raises(ValueError):
        unfinished.tag(sent("a"))


def test_heldout_f1_on_synthetic(synth):
    model = perceptron_train(synth["train"], epochs=10, seed=0)
    report = score(synth["test"], tag_corpus(model, synth["test"]),
                   build_dictionary(synth["train"]))
    assert report.all.all.f1 >= 0.90


def test_perceptron_serialization_round_trip(synth):
    train = Corpus(synth["train"].sentences[:200])
    model = perceptron_train(train, epochs=2, seed=1,
                             feature_config=FeatureConfig(word_identity=False, window=1))
    text = model.dumps()
    again = load_model(text)
    assert isinstance(again, PerceptronModel)
    assert again.feature_config == model.feature_config
    assert again.dumps() == text
    test = synth["test"]
    assert tag_corpus(again, test) == tag_corpus(model, test)
