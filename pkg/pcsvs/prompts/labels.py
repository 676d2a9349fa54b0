"""Attribute label space: gender, volume and vocal range."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal, Mapping

from pcsvs.errors import InvalidInputError

ABSENT = "absent"

Attribute = Literal["gender", "volume", "vocal_range"]
ATTRIBUTES: tuple[Attribute, ...] = ("gender", "volume", "vocal_range")

CATEGORIES: dict[str, tuple[str, ...]] = {
    "gender": ("female", "male"),
    "volume": ("low", "medium", "high"),
    "vocal_range": ("low", "high"),
}

# Template placeholder token per attribute
PLACEHOLDERS: dict[str, str] = {
    "gender": "[gender]",
    "volume": "[volume]",
    "vocal_range": "[pitch]",
}


@dataclass(frozen=True)
class AttributeLabels:
    gender: str = ABSENT
    volume: str = ABSENT
    vocal_range: str = ABSENT

    def __post_init__(self) -> None:
        for attr in ATTRIBUTES:
            value = getattr(self, attr)
            if value != ABSENT and value not in CATEGORIES[attr]:
                raise InvalidInputError(
                    f"unknown {attr} category {value!r}; expected one of {CATEGORIES[attr]} or {ABSENT!r}"
                )
        if self.vocal_range != ABSENT and self.gender == ABSENT:
            raise InvalidInputError("vocal_range cannot be labeled without gender")

    def present(self) -> frozenset[str]:
        return frozenset(a for a in ATTRIBUTES if getattr(self, a) != ABSENT)

    def category(self, attr: str) -> str:
        return getattr(self, attr)

    def without(self, attr: str) -> "AttributeLabels":
        """Drop one attribute; dropping gender also drops vocal_range."""
        if attr == "gender":
            return replace(self, gender=ABSENT, vocal_range=ABSENT)
        return replace(self, **{attr: ABSENT})

    def to_dict(self) -> dict[str, str]:
        return {a: getattr(self, a) for a in ATTRIBUTES}

    @classmethod
    def from_mapping(cls, data: Mapping[str, str | None]) -> "AttributeLabels":
        return cls(**{a: (data.get(a) or ABSENT) for a in ATTRIBUTES})

    def describe(self) -> str:
        present = [f"{a}={getattr(self, a)}" for a in ATTRIBUTES if getattr(self, a) != ABSENT]
        return ",".join(present) or "none"
