"""Gazetteer-style tagger that can only ever predict surfaces it has seen."""

from __future__ import annotations

from dataclasses import dataclass

from ..corpus import Corpus, Dictionary, Mention, Sentence, build_dictionary

FORMAT_HEADER = "# nerprobe dict-tagger v1"


@dataclass(frozen=True)
class DictTaggerModel:
    dictionary: Dictionary
    type_policy: str = "majority-then-lexicographic"

    def tag(self, sentence: Sentence) -> list[Mention]:
        return dict_tag(self, sentence)

    def dumps(self) -> str:
        lines = [FORMAT_HEADER, f"# casefold={int(self.dictionary.casefold)}",
                 f"# type_policy={self.type_policy}"]
        for surface, by_type in self.dictionary.entries.items():
            for etype, count in by_type.items():
                lines.append(f"{surface}\t{etype}\t{count}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "DictTaggerModel":
        lines = text.splitlines()
        if not lines or lines[0] != FORMAT_HEADER:
            raise ValueError("not a dict-tagger model file")
        meta, entries = {}, {}
        for line in lines[1:]:
            if line.startswith("# "):
                key, _, value = line[2:].partition("=")
                meta[key] = value
            elif line:
                surface, etype, count = line.split("\t")
                entries.setdefault(surface, {})[etype] = int(count)
        dictionary = Dictionary(entries, casefold=meta.get("casefold") == "1")
        return cls(dictionary, meta.get("type_policy", cls.type_policy))


def dict_train(train: Corpus, casefold: bool = False) -> DictTaggerModel:
    return DictTaggerModel(build_dictionary(train, casefold=casefold))


def dict_tag(model: DictTaggerModel, sentence: Sentence) -> list[Mention]:
    """Greedy left-to-right longest match against the dictionary.

    Each match is labelled with its majority type; unmatched tokens are skipped.
    """
    d = model.dictionary
    tokens = sentence.tokens
    out = []
    i = 0
    while i < len(tokens):
        for n in range(min(d.max_tokens, len(tokens) - i), 0, -1):
            etype = d.majority_type(" ".join(tokens[i:i + n]))
            if etype is not None:
                out.append(Mention(i, i + n, etype))
                i += n
                break
        else:
            i += 1
    return out
