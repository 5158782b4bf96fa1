"""Span-level micro P/R/F1 with in-dictionary / out-of-dictionary strata."""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence

from .corpus import Corpus, CoverageStats, Dictionary, Mention, coverage

__all__ = [
    "AlignmentError",
    "EvalReport",
    "Metric",
    "STRATA",
    "StrataScores",
    "diff_percent",
    "drop_percent",
    "reference_score",
    "score",
]

STRATA = ("ALL", "InDict", "OutDict")


class AlignmentError(ValueError):
    pass


@dataclass(frozen=True)
class Metric:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other: "Metric") -> "Metric":
        return Metric(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    @property
    def precision(self) -> float:
        d = self.tp + self.fp
        return self.tp / d if d else 0.0

    @property
    def recall(self) -> float:
        d = self.tp + self.fn
        return self.tp / d if d else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    @property
    def precision_undefined(self) -> bool:
        return self.tp + self.fp == 0

    @property
    def recall_undefined(self) -> bool:
        return self.tp + self.fn == 0

    @property
    def f1_undefined(self) -> bool:
        return self.precision + self.recall == 0

    def to_dict(self) -> dict:
        return {
            "tp": self.tp, "fp": self.fp, "fn": self.fn,
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
            "precision_undefined": self.precision_undefined,
            "recall_undefined": self.recall_undefined,
            "f1_undefined": self.f1_undefined,
        }


@dataclass(frozen=True)
class StrataScores:
    all: Metric = Metric()
    indict: Metric = Metric()
    outdict: Metric = Metric()

    def __getitem__(self, stratum: str) -> Metric:
        return {"ALL": self.all, "InDict": self.indict, "OutDict": self.outdict}[stratum]

    def __add__(self, other: "StrataScores") -> "StrataScores":
        return StrataScores(self.all + other.all, self.indict + other.indict,
                            self.outdict + other.outdict)

    def to_dict(self) -> dict:
        return {s: self[s].to_dict() for s in STRATA}


@dataclass(frozen=True)
class EvalReport:
    per_type: dict[str, StrataScores]
    all: StrataScores
    coverage: CoverageStats | None = None
    config_echo: dict = field(default_factory=dict)

    def types(self) -> list[str]:
        return sorted(self.per_type)

    def row(self, etype: str) -> StrataScores:
        return self.all if etype == "ALL" else self.per_type[etype]

    def scores_equal(self, other: "EvalReport") -> bool:
        """Equality of the scored content, ignoring the config echo."""
        return (self.per_type == other.per_type and self.all == other.all
                and (self.coverage.to_dict() if self.coverage else None)
                == (other.coverage.to_dict() if other.coverage else None))

    def to_dict(self) -> dict:
        return {
            "all": self.all.to_dict(),
            "per_type": {t: self.per_type[t].to_dict() for t in self.types()},
            "coverage": self.coverage.to_dict() if self.coverage else None,
            "config": self.config_echo,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        from .corpus import TypeCoverage

        def strata(d):
            return StrataScores(*(Metric(d[s]["tp"], d[s]["fp"], d[s]["fn"]) for s in STRATA))

        cov = data.get("coverage")
        if cov is not None:
            cov = CoverageStats(
                cov["covered"], cov["total"],
                {t: TypeCoverage(v["covered"], v["total"]) for t, v in cov["per_type"].items()},
                cov.get("level", "occurrence"), cov.get("typed", False))
        return cls({t: strata(v) for t, v in data["per_type"].items()}, strata(data["all"]),
                   cov, data.get("config", {}))

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        return cls.from_dict(json.loads(text))

    def to_tsv(self) -> str:
        """Type x strata table: InDict/OutDict/Diff for precision, recall and F1."""
        header = ["type"]
        for metric in ("P", "R", "F1"):
            header += [f"{metric}_InDict", f"{metric}_OutDict", f"{metric}_Diff"]
        lines = ["\t".join(header)]
        for etype in self.types() + ["ALL"]:
            row = self.row(etype)
            cells = [etype]
            for attr in ("precision", "recall", "f1"):
                ind = getattr(row.indict, attr) * 100
                outd = getattr(row.outdict, attr) * 100
                cells += [f"{ind:.2f}", f"{outd:.2f}", _fmt_percent(diff_percent(ind, outd))]
            lines.append("\t".join(cells))
        return "\n".join(lines) + "\n"


def _fmt_percent(value: int | None) -> str:
    return "n/a" if value is None else f"{value}%"


def _relative_percent(base: float, other: float) -> int | None:
    if base <= 0:
        return None
    ratio = (Decimal(str(base)) - Decimal(str(other))) / Decimal(str(base)) * 100
    return int(ratio.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def diff_percent(indict: float, outdict: float) -> int | None:
    """Relative InDict-to-OutDict gap in whole percent; None when InDict is 0."""
    return _relative_percent(indict, outdict)


def drop_percent(baseline: float, transformed: float) -> int | None:
    """Relative drop from ``baseline`` in whole percent; None when baseline is 0."""
    return _relative_percent(baseline, transformed)


def _in_dict(d: Dictionary, surface: str, etype: str, typed: bool) -> bool:
    return d.contains(surface, etype if typed else None)


def _check_alignment(gold: Corpus, predictions: Sequence[Sequence[Mention]]):
    if len(gold) != len(predictions):
        raise AlignmentError(f"{len(predictions)} prediction rows for {len(gold)} gold sentences")


def _build_report(counts: dict[str, dict[str, Counter]], gold, train_dict, typed,
                  config_echo) -> EvalReport:
    per_type = {}
    for etype in sorted(counts):
        c = counts[etype]
        strata = {}
        for s in ("InDict", "OutDict"):
            strata[s] = Metric(c[s]["tp"], c[s]["fp"], c[s]["fn"])
        per_type[etype] = StrataScores(strata["InDict"] + strata["OutDict"],
                                       strata["InDict"], strata["OutDict"])
    total = StrataScores()
    for row in per_type.values():
        total = total + row
    cov = coverage(train_dict, gold, typed=typed)
    return EvalReport(per_type, total, cov, dict(config_echo or {}))


def score(gold: Corpus, predictions: Sequence[Sequence[Mention]], train_dict: Dictionary,
          typed: bool = False, config_echo: dict | None = None) -> EvalReport:
    """Exact-match span scoring, stratified by training-dictionary membership.

    Predictions are split into strata by their own surface, gold mentions by
    theirs. Matching is one-to-one on (sentence, start, end, type).
    """
    _check_alignment(gold, predictions)
    counts: dict[str, dict[str, Counter]] = defaultdict(lambda: defaultdict(Counter))
    for sentence, preds in zip(gold.sentences, predictions):
        remaining = Counter(sentence.mentions)
        for m in preds:
            stratum = "InDict" if _in_dict(train_dict, sentence.surface(m), m.entity_type,
                                           typed) else "OutDict"
            if remaining[m] > 0:
                remaining[m] -= 1
                counts[m.entity_type][stratum]["tp"] += 1
            else:
                counts[m.entity_type][stratum]["fp"] += 1
        for m, left in remaining.items():
            if left:
                stratum = "InDict" if _in_dict(train_dict, sentence.surface(m), m.entity_type,
                                               typed) else "OutDict"
                counts[m.entity_type][stratum]["fn"] += left
    return _build_report(counts, gold, train_dict, typed, config_echo)


def reference_score(gold: Corpus, predictions: Sequence[Sequence[Mention]],
                    train_dict: Dictionary, typed: bool = False,
                    config_echo: dict | None = None) -> EvalReport:
    """Brute-force twin of :func:`score` for testing: nested loops, no hashing."""
    _check_alignment(gold, predictions)
    counts: dict[str, dict[str, Counter]] = defaultdict(lambda: defaultdict(Counter))
    for si in range(len(gold.sentences)):
        sentence = gold.sentences[si]
        gold_list = list(sentence.mentions)
        pred_list = list(predictions[si])
        gold_used = [False] * len(gold_list)
        pred_hit = [False] * len(pred_list)
        for pi in range(len(pred_list)):
            p = pred_list[pi]
            for gi in range(len(gold_list)):
                g = gold_list[gi]
                if (not gold_used[gi] and g.start == p.start and g.end == p.end
                        and g.entity_type == p.entity_type):
                    gold_used[gi] = True
                    pred_hit[pi] = True
                    break
        for pi in range(len(pred_list)):
            p = pred_list[pi]
            surface = " ".join(sentence.tokens[p.start:p.end])
            inside = train_dict.contains(surface, p.entity_type if typed else None)
            key = "tp" if pred_hit[pi] else "fp"
            counts[p.entity_type]["InDict" if inside else "OutDict"][key] += 1
        for gi in range(len(gold_list)):
            if gold_used[gi]:
                continue
            g = gold_list[gi]
            surface = " ".join(sentence.tokens[g.start:g.end])
            inside = train_dict.contains(surface, g.entity_type if typed else None)
            counts[g.entity_type]["InDict" if inside else "OutDict"]["fn"] += 1
    return _build_report(counts, gold, train_dict, typed, config_echo)
