"""Experiment runner: load or generate -> transform -> train -> tag -> score -> report."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from .corpus import Corpus, build_dictionary, read_conll, write_conll
from .evaluation import EvalReport, drop_percent, score
from .perturb import TransformSpec, apply_transform, canonical_kind, takes_ratio
from .seeding import derive_seed
from .synthgen import SyntheticSpec, generate
from .taggers import FeatureConfig, dict_train, perceptron_train, tag_corpus

log = logging.getLogger(__name__)

DEFAULT_SWEEP = (0.05, 0.1, 0.3, 0.5, 1.0)
SPLITS = ("train", "dev", "test")


class ConfigError(ValueError):
    pass


class RenderError(ValueError):
    pass


@dataclass(frozen=True)
class TaggerConfig:
    kind: str = "perceptron"
    name: str | None = None
    epochs: int = 10
    word_identity: bool = True
    window: int = 2
    casefold: bool = False

    def __post_init__(self):
        if self.kind not in ("dict", "perceptron"):
            raise ConfigError(f"unknown tagger kind {self.kind!r}")
        if self.name is None:
            name = self.kind if self.kind == "dict" or self.word_identity else "perceptron-ctx"
            object.__setattr__(self, "name", name)

    def train(self, corpus: Corpus, seed: int):
        if self.kind == "dict":
            return dict_train(corpus, casefold=self.casefold)
        cfg = FeatureConfig(window=self.window, word_identity=self.word_identity)
        return perceptron_train(corpus, self.epochs, seed, cfg)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TransformPoint:
    kind: str | None  # None is the vanilla baseline
    ratio: float | None = None

    @property
    def label(self) -> str:
        if self.kind is None:
            return "vanilla"
        return self.kind if self.ratio is None else f"{self.kind}-{self.ratio:g}"


VANILLA = TransformPoint(None)


@dataclass
class ExperimentConfig:
    """One experiment, fully described by JSON.

    ``input`` is ``{"synthetic": {...SyntheticSpec fields}}`` or
    ``{"train": path, "dev": path, "test": path}``. Each ``transforms`` entry
    is ``{"kind": "NP"}`` or ``{"kind": "CR", "ratios": [...]}``; a reduction
    kind without ratios sweeps the default 5%-100% grid.
    """

    input: dict
    transforms: list[dict] = field(default_factory=list)
    taggers: list[TaggerConfig] = field(default_factory=lambda: [TaggerConfig()])
    output_dir: str = "runs/out"
    master_seed: int = 0
    typed: bool = False
    n_min: int = 1
    n_max: int = 3
    eval_split: str = "test"

    def __post_init__(self):
        if "synthetic" not in self.input and not {"train", "test"} <= set(self.input):
            raise ConfigError("input needs a 'synthetic' spec or 'train'/'test' paths")
        self.taggers = [t if isinstance(t, TaggerConfig) else TaggerConfig(**t)
                        for t in self.taggers]
        names = [t.name for t in self.taggers]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate tagger names {names}")
        for t in self.transforms:
            self._points_of(t)

    @staticmethod
    def _points_of(entry: dict) -> list[TransformPoint]:
        try:
            kind = canonical_kind(entry["kind"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad transform entry {entry!r}: {exc}") from None
        if not takes_ratio(kind):
            return [TransformPoint(kind)]
        ratios = entry.get("ratios")
        if ratios is None:
            ratios = [entry["ratio"]] if "ratio" in entry else list(DEFAULT_SWEEP)
        for r in ratios:
            if not 0.0 < float(r) <= 1.0:
                raise ConfigError(f"{kind} ratio {r!r} outside (0, 1]")
        return [TransformPoint(kind, float(r)) for r in sorted(ratios)]

    def points(self) -> list[TransformPoint]:
        out = [VANILLA]
        for entry in self.transforms:
            for p in self._points_of(entry):
                if p not in out:
                    out.append(p)
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["taggers"] = [t.to_dict() for t in self.taggers]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        shorthand = data.pop("tagger", None)
        if shorthand is not None:
            kinds = {"dict": ["dict"], "perceptron": ["perceptron"],
                     "both": ["dict", "perceptron"]}.get(shorthand)
            if kinds is None:
                raise ConfigError(f"tagger must be dict, perceptron or both, not {shorthand!r}")
            data["taggers"] = [{"kind": k} for k in kinds]
        if "transform" in data:
            data.setdefault("transforms", []).append(data.pop("transform"))
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def load_input(config: ExperimentConfig) -> tuple[dict[str, Corpus], dict]:
    if "synthetic" in config.input:
        spec = SyntheticSpec.from_dict(config.input["synthetic"])
        data = generate(spec)
        return dict(data.splits), data.metadata
    corpora = {}
    for split in SPLITS:
        if split in config.input:
            corpora[split] = read_conll(config.input[split], split_name=split)
    return corpora, {}


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _write(path: Path, text: str) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return _sha256(text)


@dataclass
class RunResult:
    reports: dict[str, EvalReport]
    manifest: dict

    @property
    def ok(self) -> bool:
        return all(c["status"] == "ok" for c in self.manifest["cells"])


def run(config: ExperimentConfig, write: bool = True) -> RunResult:
    """Execute every (transform point x tagger) cell, vanilla included.

    A failing stage marks its cells as failed in the manifest; the remaining
    cells still run.
    """
    out = Path(config.output_dir)
    hashes: dict[str, str] = {}
    cells = []
    reports: dict[str, EvalReport] = {}
    corpora, metadata = load_input(config)
    if config.eval_split not in corpora:
        raise ConfigError(f"no {config.eval_split!r} split in the input")
    if write and metadata:
        hashes["input/metadata.json"] = _write(
            out / "input" / "metadata.json", json.dumps(metadata, sort_keys=True) + "\n")

    for point in config.points():
        transform_seed = derive_seed(config.master_seed, "transform", point.label)
        spec = None
        try:
            if point.kind is None:
                current, artifacts = corpora, {}
            else:
                spec = TransformSpec(point.kind, point.ratio, transform_seed)
                current, artifacts = apply_transform(spec, corpora, typed=config.typed,
                                                     n_min=config.n_min, n_max=config.n_max)
            transform_error = None
        except Exception as exc:  # noqa: BLE001 - recorded per cell
            log.exception("transform %s failed", point.label)
            current, artifacts, transform_error = None, {}, f"{type(exc).__name__}: {exc}"

        if write and current is not None:
            for split, corpus in current.items():
                rel = f"corpora/{point.label}/{split}.conll"
                hashes[rel] = _write(out / rel, write_conll(corpus))
            if "replacement_map" in artifacts:
                rel = f"corpora/{point.label}/replacement_map.tsv"
                hashes[rel] = _write(out / rel, artifacts["replacement_map"].to_tsv())

        for tagger in config.taggers:
            cell_id = f"{point.label}__{tagger.name}"
            train_seed = derive_seed(config.master_seed, "tagger", tagger.name)
            entry = {"id": cell_id, "setting": point.label, "tagger": tagger.name,
                     "status": "ok", "error": None}
            if transform_error is not None:
                entry.update(status="failed", error=transform_error)
                cells.append(entry)
                continue
            try:
                model = tagger.train(current["train"], train_seed)
                gold = current[config.eval_split]
                echo = {
                    "cell": cell_id,
                    "setting": point.label,
                    "transform": spec.to_dict() if spec else None,
                    "ratio": point.ratio,
                    "tagger": tagger.to_dict(),
                    "seeds": {"master": config.master_seed, "transform": transform_seed,
                              "train": train_seed},
                    "eval_split": config.eval_split,
                }
                report = score(gold, tag_corpus(model, gold), build_dictionary(current["train"]),
                               typed=config.typed, config_echo=echo)
                reports[cell_id] = report
                if write:
                    rel = f"cells/{cell_id}/report.json"
                    hashes[rel] = _write(out / rel, report.to_json())
                    entry["report"] = rel
            except Exception as exc:  # noqa: BLE001 - recorded per cell
                log.exception("cell %s failed", cell_id)
                entry.update(status="failed", error=f"{type(exc).__name__}: {exc}")
            cells.append(entry)

    if write and reports:
        for name, text in report_render(list(reports.values()), per_tagger=True).items():
            hashes[name] = _write(out / name, text)

    manifest = {
        "config": config.to_dict(),
        "cells": cells,
        "files": dict(sorted(hashes.items())),
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    if write:
        _write(out / "manifest.json", json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return RunResult(reports, manifest)


# ---------------------------------------------------------------------------
# rendering


def _check_types(reports: Sequence[EvalReport]) -> list[str]:
    sets = [set(r.types()) for r in reports]
    union = set().union(*sets)
    common = set.intersection(*sets) if sets else set()
    if union != common:
        raise RenderError(f"reports disagree on entity types: {sorted(union - common)}")
    return sorted(common)


def _setting(report: EvalReport) -> str:
    return report.config_echo.get("setting", "vanilla")


def render_table2(reports: Sequence[EvalReport]) -> str:
    """Settings x types F1 (x100), with relative drop against the vanilla row."""
    if not reports:
        raise RenderError("nothing to render")
    types = _check_types(reports)
    base = next((r for r in reports if _setting(r) == "vanilla"), reports[0])
    cols = types + ["ALL"]
    lines = ["\t".join(["setting"] + cols + [f"{c}_drop" for c in cols])]
    for r in reports:
        f1 = [r.row(c).all.f1 * 100 for c in cols]
        drops = []
        for c, value in zip(cols, f1):
            d = drop_percent(base.row(c).all.f1 * 100, value)
            drops.append("n/a" if d is None else f"{d}%")
        lines.append("\t".join([_setting(r)] + [f"{v:.2f}" for v in f1] + drops))
    return "\n".join(lines) + "\n"


def render_table3(report: EvalReport) -> str:
    return report.to_tsv()


def render_sweep(reports: Sequence[EvalReport]) -> str:
    """Ratio vs F1 (x100) per type, one row per report, sorted by (transform, ratio)."""
    types = _check_types(reports)
    cols = types + ["ALL"]
    rows = []
    for r in reports:
        ratio = r.config_echo.get("ratio")
        setting = _setting(r)
        kind = (r.config_echo.get("transform") or {}).get("kind", setting)
        rows.append((kind, 1.0 if ratio is None else ratio, setting, r))
    rows.sort(key=lambda x: (x[0], x[1]))
    lines = ["\t".join(["transform", "ratio"] + cols)]
    for kind, ratio, _, r in rows:
        lines.append("\t".join([kind, f"{ratio:g}"] + [f"{r.row(c).all.f1 * 100:.2f}"
                                                      for c in cols]))
    return "\n".join(lines) + "\n"


def report_render(reports: Sequence[EvalReport], per_tagger: bool = False) -> dict[str, str]:
    """Table-2 style, sweep and per-report Table-3 style TSVs, keyed by file name.

    With ``per_tagger`` the tables are split by the tagger recorded in each
    report's config echo.
    """
    if not reports:
        raise RenderError("nothing to render")
    _check_types(reports)
    groups: dict[str, list[EvalReport]] = {}
    for r in reports:
        key = (r.config_echo.get("tagger") or {}).get("name", "") if per_tagger else ""
        groups.setdefault(key, []).append(r)
    out = {}
    for tagger, group in groups.items():
        suffix = f"_{tagger}" if tagger else ""
        out[f"table2{suffix}.tsv"] = render_table2(group)
        ratio_reports = [r for r in group if r.config_echo.get("ratio") is not None
                         or _setting(r) == "vanilla"]
        if len(ratio_reports) > 1:
            out[f"sweep{suffix}.tsv"] = render_sweep(ratio_reports)
        for r in group:
            out[f"table3{suffix}_{_setting(r)}.tsv"] = render_table3(r)
    return out
