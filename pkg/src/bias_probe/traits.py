from __future__ import annotations

from enum import Enum

from .errors import ParseError


class TraitDimension(str, Enum):
    """The six judged traits. Values are the stable names used in files."""

    ATTRACTIVE = "Attractive"
    COMPETENT = "Competent"
    DOMINANT = "Dominant"
    EXTROVERTED = "Extroverted"
    LIKEABLE = "Likeable"
    TRUSTWORTHY = "Trustworthy"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, name: str | TraitDimension) -> TraitDimension:
        if isinstance(name, TraitDimension):
            return name
        key = str(name).strip().lower()
        for trait in cls:
            if trait.value.lower() == key or trait.name.lower() == key:
                return trait
        raise ParseError(f"unknown trait {name!r}; expected one of "
                         f"{[t.value for t in cls]}")


ALL_TRAITS: tuple[TraitDimension, ...] = tuple(TraitDimension)


class Label(str, Enum):
    """Binary trait class. Declaration order is the class index order, so
    vote ties resolve toward NEGATIVE."""

    NEGATIVE = "Negative"
    POSITIVE = "Positive"

    def __str__(self) -> str:
        return self.value
