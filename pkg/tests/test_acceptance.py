"""Acceptance criteria, one printed PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v``; the lines are printed even
when output capture is on.
"""

import itertools
import math
import random
import time
from collections import Counter
from functools import lru_cache
from statistics import mean

import pytest

from nerprobe.corpus import Mention, build_dictionary, coverage, parse_conll, write_conll
from nerprobe.evaluation import diff_percent, drop_percent, reference_score, score
from nerprobe.experiment import ExperimentConfig, run
from nerprobe.perturb import TransformSpec, apply_transform, keep_count
from nerprobe.synthgen import GenerationError, SyntheticSpec, generate
from nerprobe.taggers import FeatureConfig, dict_train, perceptron_train, tag_corpus, viterbi
from nerprobe.taggers.perceptron import allowed_transitions

from conftest import random_flat_corpus

SWEEP = (0.05, 0.1, 0.3, 0.5, 1.0)
FULL = FeatureConfig()
CONTEXT_ONLY = FeatureConfig(word_identity=False)


@pytest.fixture
def emit(capsys):
    def _emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'} - {detail}")
    return _emit


def strata_f1(splits, seed, cfg, train=None):
    train = train if train is not None else splits["train"]
    model = perceptron_train(train, 10, seed, cfg)
    r = score(splits["test"], tag_corpus(model, splits["test"]), build_dictionary(train))
    return r.all.all.f1 * 100, r.all.indict.f1 * 100, r.all.outdict.f1 * 100


@lru_cache(maxsize=None)
def permutation_results(seed):
    """(vanilla, NP, MP) F1 triples for the full perceptron on a regular corpus."""
    data = generate(SyntheticSpec(regularity=1.0, seed=seed))
    out = {"vanilla": strata_f1(data.splits, seed, FULL)}
    for kind in ("NP", "MP"):
        splits, _ = apply_transform(TransformSpec(kind, seed=seed), data.splits)
        out[kind] = strata_f1(splits, seed, FULL)
    return out


# 1 -------------------------------------------------------------------------------

def test_criterion_1_round_trip(emit):
    rng = random.Random(1)
    start = time.perf_counter()
    done = failures = 0
    seed = 0
    while done < 1000:
        seed += 1
        types = rng.sample(["PER", "ORG", "LOC", "GPE", "FAC", "VEH"], rng.randint(1, 5))
        spec = SyntheticSpec(types=tuple(types), n_sentences=rng.randint(20, 80),
                             regularity=rng.random(), n_contexts=rng.randint(2, 6),
                             mention_vocab=rng.randint(10, 60), zipf_s=rng.uniform(0, 2),
                             filler_vocab=rng.randint(20, 120), seed=seed)
        try:
            data = generate(spec)
        except GenerationError:
            continue
        done += 1
        for split, corpus in data.splits.items():
            if parse_conll(write_conll(corpus), split_name=split) != corpus:
                failures += 1
    elapsed = time.perf_counter() - start
    ok = failures == 0 and elapsed < 30
    emit(1, ok, f"{done} corpora, {failures} round-trip mismatches, {elapsed:.1f}s (< 30s)")
    assert ok


# 2 -------------------------------------------------------------------------------

def test_criterion_2_evaluator_oracle_and_percentages(emit):
    rng = random.Random(2)
    mismatches = 0
    for _ in range(1000):
        n_types = rng.randint(1, 5)
        train = random_flat_corpus(rng, rng.randint(1, 50), n_types)
        gold = random_flat_corpus(rng, rng.randint(1, 50), n_types)
        preds = []
        for s in gold.sentences:
            row = [m for m in s.mentions if rng.random() < 0.7]
            for _ in range(rng.randint(0, 2)):
                a = rng.randrange(len(s))
                row.append(Mention(a, rng.randint(a + 1, len(s)),
                                   rng.choice(["PER", "ORG", "GPE", "LOC", "FAC"])))
            preds.append(row)
        typed = rng.random() < 0.5
        d = build_dictionary(train)
        a, b = score(gold, preds, d, typed), reference_score(gold, preds, d, typed)
        if a.to_dict() != b.to_dict():
            mismatches += 1
    arithmetic = {
        "(81.76, 62.28)": (drop_percent(81.76, 62.28), 24),
        "(81.76, 51.58)": (drop_percent(81.76, 51.58), 34),
        "(88.03, 75.40)": (diff_percent(88.03, 75.40), 14),
    }
    wrong = {k: v for k, v in arithmetic.items() if v[0] != v[1]}
    ok = mismatches == 0 and not wrong
    detail = f"{mismatches}/1000 oracle mismatches; percent checks " + ", ".join(
        f"{k}->{got}% (expected {want}%)" for k, (got, want) in arithmetic.items())
    emit(2, ok, detail)
    assert mismatches == 0
    assert not wrong, f"percent arithmetic disagrees: {wrong}"


# 3 -------------------------------------------------------------------------------

def _multisets(corpus):
    out = {}
    for s in corpus.sentences:
        for surface, etype in s.surfaces():
            out.setdefault(etype, Counter())[surface] += 1
    return out


def test_criterion_3_transform_invariants(emit):
    bad = Counter()
    for run_id in range(200):
        rng = random.Random(run_id)
        data = generate(SyntheticSpec(n_sentences=rng.randint(200, 300), seed=run_id,
                                      regularity=rng.random(), mention_vocab=rng.randint(20, 80),
                                      filler_vocab=100))
        splits = data.splits
        vanilla_cov = coverage(build_dictionary(splits["train"]), splits["test"])
        # 5% of a ~150-sentence train split cannot host all four types
        ratio = rng.choice(SWEEP[1:-1])
        specs = {"NP": TransformSpec("NP", seed=run_id), "MP": TransformSpec("MP", seed=run_id),
                 "CR": TransformSpec("CR", ratio, run_id), "MR": TransformSpec("MR", ratio, run_id),
                 "SR": TransformSpec("SR", ratio, run_id)}
        outs = {}
        for kind, spec in specs.items():
            first, _ = apply_transform(spec, splits)
            again, _ = apply_transform(spec, splits)
            if any(write_conll(first[s]) != write_conll(again[s]) for s in first):
                bad[f"{kind} determinism"] += 1
            outs[kind] = first
        np_cov = coverage(build_dictionary(outs["NP"]["train"]), outs["NP"]["test"])
        if (np_cov.covered, np_cov.total) != (vanilla_cov.covered, vanilla_cov.total):
            bad["NP coverage"] += 1
        if coverage(build_dictionary(outs["MP"]["train"]), outs["MP"]["test"]).covered != 0:
            bad["MP coverage"] += 1
        if _multisets(outs["CR"]["train"]) != _multisets(splits["train"]):
            bad["CR multiset"] += 1
        vanilla_ms, mr_ms = _multisets(splits["train"]), _multisets(outs["MR"]["train"])
        if any(len(mr_ms.get(t, ())) > keep_count(ratio, len(v), 1) for t, v in vanilla_ms.items()):
            bad["MR bound"] += 1
        if [s.blanked() for s in outs["MR"]["train"]] != [s.blanked() for s in splits["train"]]:
            bad["MR slots"] += 1
    ok = not bad
    emit(3, ok, "200 runs x 5 transforms, violations: " + (
        ", ".join(f"{k}={v}" for k, v in sorted(bad.items())) or "none"))
    assert ok


# 4 -------------------------------------------------------------------------------

def test_criterion_4_regularity_drives_unseen_generalization(emit):
    start = time.perf_counter()
    permutation_results.cache_clear()
    res = permutation_results(0)
    elapsed = time.perf_counter() - start
    van, np_ = res["vanilla"], res["NP"]
    out_drop = van[2] - np_[2]
    in_change = abs(van[1] - np_[1])
    ok = out_drop >= 15 and in_change < 10 and elapsed < 120
    emit(4, ok, f"OutDict F1 {van[2]:.2f} -> {np_[2]:.2f} (drop {out_drop:.2f} >= 15), "
                f"InDict F1 {van[1]:.2f} -> {np_[1]:.2f} (change {in_change:.2f} < 10), "
                f"{elapsed:.1f}s (< 120s)")
    assert ok


# 5 -------------------------------------------------------------------------------

def test_criterion_5_coverage_harms_context_learning(emit):
    mp = [permutation_results(seed)["MP"][2] for seed in range(5)]
    np_ = [permutation_results(seed)["NP"][2] for seed in range(5)]
    margin = mean(mp) - mean(np_)
    ok = margin >= 5
    emit(5, ok, f"mean OutDict F1 over 5 seeds: MP {mean(mp):.2f} vs NP {mean(np_):.2f} "
                f"(margin {margin:.2f} >= 5)")
    assert ok


# 6 -------------------------------------------------------------------------------

def test_criterion_6_context_plateau(emit):
    from nerprobe.perturb import context_reduction, sentence_reduction
    cr = {r: [] for r in SWEEP}
    sr = {r: [] for r in SWEEP}
    for seed in range(5):
        data = generate(SyntheticSpec(seed=seed))
        for r in SWEEP:
            cr[r].append(strata_f1(data.splits, seed, CONTEXT_ONLY,
                                   context_reduction(data["train"], r, seed))[0])
            sr[r].append(strata_f1(data.splits, seed, CONTEXT_ONLY,
                                   sentence_reduction(data["train"], r, seed))[0])
    cr_mean = [mean(cr[r]) for r in SWEEP]
    sr_mean = [mean(sr[r]) for r in SWEEP]
    plateau = cr_mean[SWEEP.index(0.3)] >= cr_mean[-1] - 3
    monotone = all(b >= a - 2 for a, b in zip(sr_mean, sr_mean[1:]))
    ok = plateau and monotone
    fmt = lambda xs: " ".join(f"{r:g}:{x:.2f}" for r, x in zip(SWEEP, xs))  # noqa: E731
    emit(6, ok, f"CR F1 {fmt(cr_mean)} (0.3 within 3 of 1.0: {plateau}); "
                f"SR F1 {fmt(sr_mean)} (non-decreasing within 2: {monotone})")
    assert ok


# 7 -------------------------------------------------------------------------------

def test_criterion_7_dictionary_tagger_never_predicts_unseen(emit):
    worst_recall = 0.0
    out_preds = 0
    corpora = 0
    for seed in range(3):
        for reg in (1.0, 0.0):
            data = generate(SyntheticSpec(n_sentences=800, regularity=reg, seed=seed))
            settings = [data.splits]
            for spec in (TransformSpec("NP", seed=seed), TransformSpec("MP", seed=seed),
                         TransformSpec("CR", 0.3, seed), TransformSpec("MR", 0.3, seed),
                         TransformSpec("SR", 0.3, seed)):
                settings.append(apply_transform(spec, data.splits)[0])
            for splits in settings:
                model = dict_train(splits["train"])
                r = score(splits["test"], tag_corpus(model, splits["test"]),
                          build_dictionary(splits["train"]))
                worst_recall = max(worst_recall, r.all.outdict.recall)
                out_preds += r.all.outdict.tp + r.all.outdict.fp
                corpora += 1
    ok = worst_recall == 0 and out_preds == 0
    emit(7, ok, f"{corpora} corpora: max OutDict recall {worst_recall}, "
                f"OutDict predictions {out_preds}")
    assert ok


# 8 -------------------------------------------------------------------------------

def test_criterion_8_viterbi_exhaustive(emit):
    rng = random.Random(8)
    label_pool = ["O", "B-PER", "I-PER", "B-ORG", "I-ORG"]
    mismatches = 0
    for _ in range(500):
        labels = ["O"] + rng.sample(label_pool[1:], rng.randint(0, 3))
        n = rng.randint(1, 6)
        scores = [[rng.uniform(-5, 5) for _ in labels] for _ in range(n)]
        start_ok, trans_ok = allowed_transitions(labels)
        best = -math.inf
        for path in itertools.product(range(len(labels)), repeat=n):
            if start_ok[path[0]] and all(trans_ok[a][b] for a, b in zip(path, path[1:])):
                best = max(best, sum(scores[t][k] for t, k in enumerate(path)))
        _, got = viterbi(scores, labels)
        if got != best:
            mismatches += 1
    emit(8, mismatches == 0, f"500 sentences, {mismatches} inexact path scores")
    assert mismatches == 0


# 9 -------------------------------------------------------------------------------

def test_criterion_9_end_to_end_determinism(emit, tmp_path):
    def go(sub):
        cfg = ExperimentConfig.from_dict({
            "input": {"synthetic": {"n_sentences": 600, "seed": 3}},
            "transforms": [{"kind": "NP"}, {"kind": "MP"}, {"kind": "CR", "ratios": [0.3, 1.0]},
                           {"kind": "MR", "ratios": [0.3]}, {"kind": "SR", "ratios": [0.3]}],
            "taggers": [{"kind": "dict"}, {"kind": "perceptron", "epochs": 3}],
            "master_seed": 12345, "output_dir": str(tmp_path / sub)})
        result = run(cfg)
        return {c["id"]: (tmp_path / sub / c["report"]).read_bytes()
                for c in result.manifest["cells"] if c["status"] == "ok"}
    a, b = go("a"), go("b")
    differing = sorted(k for k in a if a[k] != b.get(k))
    ok = len(a) == 14 and a.keys() == b.keys() and not differing
    emit(9, ok, f"{len(a)} cells, byte-identical report JSONs: {not differing}")
    assert ok
