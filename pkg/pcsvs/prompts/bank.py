"""
Keyword bank and sentence templates, loaded from versioned asset files.

Assets (pcsvs/prompts/assets/):
- keywords.yaml        attribute -> category -> list of keywords
- templates.jsonl      training templates, one JSON record per line:
                       {"id", "text", "covered_attributes", "category_specific"}
- eval_templates.jsonl held-out evaluation templates, same format; never drawn
                       during training or encoder fine-tuning

Every invariant is checked at load time so a broken asset fails fast with a
ConfigError naming the offending record.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Sequence

import yaml

from pcsvs.errors import ConfigError
from pcsvs.prompts.labels import ATTRIBUTES, CATEGORIES, PLACEHOLDERS
from pcsvs.utils.io import read_jsonl

_PLACEHOLDER_RE = re.compile(r"\[(gender|volume|pitch)\]")
_TOKEN_TO_ATTR = {v: k for k, v in PLACEHOLDERS.items()}
MIN_KEYWORDS = 4


def asset_path(name: str) -> Path:
    return Path(str(resources.files("pcsvs.prompts").joinpath("assets", name)))


@dataclass(frozen=True)
class KeywordBank:
    keywords: Mapping[str, Mapping[str, tuple[str, ...]]]

    def __post_init__(self) -> None:
        for attr in ATTRIBUTES:
            for cat in CATEGORIES[attr]:
                words = self.keywords.get(attr, {}).get(cat, ())
                if len(words) < MIN_KEYWORDS:
                    raise ConfigError(
                        f"keyword bank: {attr}/{cat} has {len(words)} keywords, need >= {MIN_KEYWORDS}"
                    )

    def words(self, attr: str, category: str) -> tuple[str, ...]:
        return self.keywords[attr][category]


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    text: str
    covered_attributes: frozenset[str]
    category_specific: tuple[str, str] | None = None  # (attribute, category)

    @property
    def placeholders(self) -> tuple[str, ...]:
        """Attributes with a placeholder in the text, in ATTRIBUTES order."""
        found = {_TOKEN_TO_ATTR[m.group(0)] for m in _PLACEHOLDER_RE.finditer(self.text)}
        return tuple(a for a in ATTRIBUTES if a in found)

    def matches(self, present: frozenset[str], categories: Mapping[str, str]) -> bool:
        if self.covered_attributes != present:
            return False
        if self.category_specific is None:
            return True
        attr, cat = self.category_specific
        return categories.get(attr) == cat

    def validate(self, bank: KeywordBank) -> None:
        if not 1 <= len(self.covered_attributes) <= 3:
            raise ConfigError(f"template {self.id}: covers {len(self.covered_attributes)} attributes")
        unknown = self.covered_attributes - set(ATTRIBUTES)
        if unknown:
            raise ConfigError(f"template {self.id}: unknown attributes {sorted(unknown)}")
        if "vocal_range" in self.covered_attributes and "gender" not in self.covered_attributes:
            raise ConfigError(f"template {self.id}: vocal_range without gender")
        expected = set(self.covered_attributes)
        if self.category_specific is not None:
            attr, cat = self.category_specific
            if attr not in self.covered_attributes or cat not in CATEGORIES[attr]:
                raise ConfigError(f"template {self.id}: bad category binding {attr}/{cat}")
            expected.discard(attr)
            lowered = self.text.lower()
            if not any(re.search(rf"\b{re.escape(w)}\b", lowered) for w in bank.words(attr, cat)):
                raise ConfigError(
                    f"template {self.id}: category-specific text contains no {attr}/{cat} keyword"
                )
        if set(self.placeholders) != expected:
            raise ConfigError(
                f"template {self.id}: placeholders {sorted(self.placeholders)} != expected {sorted(expected)}"
            )
        stray = re.sub(_PLACEHOLDER_RE, "", self.text)
        if "[" in stray or "]" in stray:
            raise ConfigError(f"template {self.id}: unknown bracket token in {self.text!r}")


def _template_from_row(row: Mapping[str, Any]) -> PromptTemplate:
    try:
        binding = row.get("category_specific")
        return PromptTemplate(
            id=str(row["id"]),
            text=str(row["text"]),
            covered_attributes=frozenset(row["covered_attributes"]),
            category_specific=(binding["attribute"], binding["category"]) if binding else None,
        )
    except (KeyError, TypeError) as e:
        raise ConfigError(f"malformed template record {row!r}: {e}") from e


def load_keyword_bank(path: str | Path | None = None) -> KeywordBank:
    path = Path(path) if path is not None else asset_path("keywords.yaml")
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, Mapping):
        raise ConfigError(f"{path}: keyword bank must be a mapping")
    keywords = {
        attr: {cat: tuple(str(w).lower() for w in words) for cat, words in cats.items()}
        for attr, cats in raw.items()
    }
    return KeywordBank(keywords)


def load_templates(
    path: str | Path | None = None, *, bank: KeywordBank | None = None, eval_set: bool = False
) -> list[PromptTemplate]:
    if path is None:
        path = asset_path("eval_templates.jsonl" if eval_set else "templates.jsonl")
    bank = bank or load_keyword_bank()
    templates = [_template_from_row(row) for row in read_jsonl(path)]
    seen: set[str] = set()
    for t in templates:
        if t.id in seen:
            raise ConfigError(f"{path}: duplicate template id {t.id}")
        seen.add(t.id)
        t.validate(bank)
    if not templates:
        raise ConfigError(f"{path}: no templates")
    return templates


def check_disjoint(train: Sequence[PromptTemplate], held_out: Sequence[PromptTemplate]) -> None:
    """Evaluation templates must never appear in the training pool."""
    overlap = {t.text for t in train} & {t.text for t in held_out}
    if overlap:
        raise ConfigError(f"evaluation templates leak into training: {sorted(overlap)[:3]}")
