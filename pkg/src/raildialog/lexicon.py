"""Word classes and the place-name gazetteer.

Every value token in the system belongs to exactly one word class.  The
classes double as the recognizer-facing prediction alphabet: expectation
sets are compiled down to a set of word classes and handed to the error
channel, which uses them to suppress out-of-class substitutions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .frames import Slot


class WordClass(enum.Enum):
    PLACE_NAME = "place_name"
    DATE_EXPR = "date_expr"
    TIME_EXPR = "time_expr"
    YES_NO_ADVERB = "yes_no_adverb"

    def __repr__(self) -> str:
        return self.value


DATE_TOKENS: tuple[str, ...] = ("TODAY", "TOMORROW", "SUNDAY")
TIME_TOKENS: tuple[str, ...] = (
    "MORNING", "AFTERNOON", "EVENING", "NIGHT",
    "SEVEN", "EIGHT", "NINE", "TEN",
)
YES_NO_TOKENS: tuple[str, ...] = ("YES", "NO")

SLOT_CLASSES: dict[Slot, WordClass] = {
    Slot.DEPARTURE_CITY: WordClass.PLACE_NAME,
    Slot.DEPARTURE_STATION: WordClass.PLACE_NAME,
    Slot.ARRIVAL_CITY: WordClass.PLACE_NAME,
    Slot.DATE: WordClass.DATE_EXPR,
    Slot.DEPARTURE_TIME: WordClass.TIME_EXPR,
    Slot.HOUR: WordClass.TIME_EXPR,
    Slot.CONFIRMATION: WordClass.YES_NO_ADVERB,
}


@dataclass(frozen=True)
class Lexicon:
    """Closed token inventory: gazetteer place names plus fixed token sets."""

    place_names: tuple[str, ...]

    def word_class(self, value: str) -> WordClass | None:
        if value in self._place_set:
            return WordClass.PLACE_NAME
        if value in DATE_TOKENS:
            return WordClass.DATE_EXPR
        if value in TIME_TOKENS:
            return WordClass.TIME_EXPR
        if value in YES_NO_TOKENS:
            return WordClass.YES_NO_ADVERB
        return None

    def knows_place(self, value: str) -> bool:
        return value in self._place_set

    @property
    def _place_set(self) -> frozenset[str]:
        return frozenset(self.place_names)


def load_gazetteer(path: str | Path) -> tuple[str, ...]:
    """Read one place name per line, UTF-8, preserving file order."""
    names: list[str] = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        name = raw.strip()
        if not name:
            continue
        if name != name.upper():
            raise ValueError(f"gazetteer names are uppercase tokens, got {name!r}")
        names.append(name)
    if not names:
        raise ValueError(f"gazetteer at {path} is empty")
    return tuple(names)


def data_path(filename: str) -> Path:
    """Absolute path of a packaged data file."""
    return Path(resources.files("raildialog.data") / filename)


@lru_cache(maxsize=None)
def default_lexicon() -> Lexicon:
    return Lexicon(place_names=load_gazetteer(data_path("gazetteer.txt")))
