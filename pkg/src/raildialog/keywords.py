"""Keyword-template parsing of typed utterances into semantic frames.

This is the stand-in for a linguistic processor: a deliberately rigid
keyword grammar whose whole rule inventory lives in a data fixture, so
the terminal client, the browser client, and the tests all template text
the same way, bit for bit.  Place names bind through "from"/"to" markers
or, when bare, through the slot the pending system act asked about; a
correction marker ("I said Roma") flips the resolution order toward the
slot under confirmation instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

from .acts import SystemAct
from .frames import SemanticFrame, Slot
from .lexicon import Lexicon, data_path, default_lexicon

CITY_SLOTS = (Slot.DEPARTURE_CITY, Slot.ARRIVAL_CITY)


class GrammarError(Exception):
    """The grammar fixture is malformed."""


class UnparseableInput(Exception):
    """No grammar rule matched anything in the utterance."""


@dataclass(frozen=True)
class KeywordGrammar:
    strip_characters: str
    compound_join: str
    max_compound_tokens: int
    place_markers: dict[str, Slot]
    correction_markers: frozenset[str]
    confirmation_tokens: dict[str, str]
    date_tokens: dict[str, str]
    time_tokens: dict[str, str]
    hour_tokens: dict[str, str]
    station_tokens: frozenset[str]
    resolution_answer: tuple[str, ...]
    resolution_correction: tuple[str, ...]

    @classmethod
    def from_dict(cls, raw: dict, lexicon: Lexicon | None = None) -> "KeywordGrammar":
        lexicon = lexicon or default_lexicon()
        if raw.get("schema_version") != 1:
            raise GrammarError("grammar fixture must declare schema_version 1")
        markers: dict[str, Slot] = {}
        for word, slot_name in raw["place_markers"].items():
            slot = Slot(slot_name)
            if slot not in CITY_SLOTS:
                raise GrammarError(f"place marker {word!r} must bind a city slot")
            markers[word] = slot
        stations = frozenset(raw["station_tokens"])
        for name in stations:
            if not lexicon.knows_place(name):
                raise GrammarError(f"station token {name!r} is not in the gazetteer")
        resolution = raw["place_resolution"]
        for order in (resolution["answer"], resolution["correction"]):
            for step in order:
                if step not in ("requested", "focused") and step not in (
                        s.value for s in CITY_SLOTS):
                    raise GrammarError(f"unknown resolution step {step!r}")
        return cls(
            strip_characters=raw["strip_characters"],
            compound_join=raw["compound_join"],
            max_compound_tokens=int(raw["max_compound_tokens"]),
            place_markers=markers,
            correction_markers=frozenset(raw["correction_markers"]),
            confirmation_tokens=dict(raw["confirmation_tokens"]),
            date_tokens=dict(raw["date_tokens"]),
            time_tokens=dict(raw["time_tokens"]),
            hour_tokens=dict(raw["hour_tokens"]),
            station_tokens=stations,
            resolution_answer=tuple(resolution["answer"]),
            resolution_correction=tuple(resolution["correction"]),
        )

    @classmethod
    def load(cls, path: str | Path | None = None) -> "KeywordGrammar":
        source = Path(path) if path else data_path("keyword_grammar.json")
        return cls.from_dict(json.loads(source.read_text("utf-8")))


@lru_cache(maxsize=None)
def default_grammar() -> KeywordGrammar:
    return KeywordGrammar.load()


@dataclass(frozen=True)
class ParseContext:
    """What the pending system act asked about; resolves bare place names."""

    requested: Slot | None = None
    focused: tuple[Slot, ...] = ()

    @classmethod
    def for_act(cls, act: SystemAct | None) -> "ParseContext":
        if act is None:
            return cls()
        return cls(requested=act.requested, focused=act.focused_slots())


def _tokenize(text: str, grammar: KeywordGrammar) -> list[str]:
    table = str.maketrans("", "", grammar.strip_characters)
    return text.lower().translate(table).split()


def _join_places(tokens: list[str], grammar: KeywordGrammar,
                 lexicon: Lexicon) -> list[str]:
    """Greedily fuse token runs that spell a gazetteer name (longest first)."""
    out: list[str] = []
    i = 0
    while i < len(tokens):
        fused = None
        for width in range(min(grammar.max_compound_tokens, len(tokens) - i), 1, -1):
            candidate = grammar.compound_join.join(tokens[i:i + width]).upper()
            if lexicon.knows_place(candidate):
                fused = candidate, width
                break
        if fused:
            out.append(fused[0])
            i += fused[1]
        else:
            out.append(tokens[i])
            i += 1
    return out


def _resolve_city(order: tuple[str, ...], context: ParseContext) -> Slot:
    for step in order:
        if step == "requested":
            if context.requested in CITY_SLOTS:
                return context.requested
        elif step == "focused":
            for slot in context.focused:
                if slot in CITY_SLOTS:
                    return slot
        else:
            return Slot(step)
    raise GrammarError("place resolution order has no terminal slot")


def parse_utterance(
    text: str,
    context: ParseContext | None = None,
    grammar: KeywordGrammar | None = None,
    lexicon: Lexicon | None = None,
) -> SemanticFrame:
    grammar = grammar or default_grammar()
    lexicon = lexicon or default_lexicon()
    context = context or ParseContext()
    out: dict[Slot, str] = {}
    pending_marker: Slot | None = None
    last_city: Slot | None = None
    correcting = False
    for token in _join_places(_tokenize(text, grammar), grammar, lexicon):
        if token in grammar.place_markers:
            pending_marker = grammar.place_markers[token]
        elif token in grammar.correction_markers:
            correcting = True
        elif token in grammar.confirmation_tokens:
            out[Slot.CONFIRMATION] = grammar.confirmation_tokens[token]
        elif token in grammar.date_tokens:
            out[Slot.DATE] = grammar.date_tokens[token]
        elif token in grammar.time_tokens:
            out[Slot.DEPARTURE_TIME] = grammar.time_tokens[token]
        elif token in grammar.hour_tokens:
            out[Slot.HOUR] = grammar.hour_tokens[token]
        elif lexicon.knows_place(token.upper()):
            name = token.upper()
            if name in grammar.station_tokens:
                # stations only qualify departures; one tied to an arrival
                # ("to Roma Termini") is dropped as noise
                if last_city is not Slot.ARRIVAL_CITY and \
                        pending_marker is not Slot.ARRIVAL_CITY:
                    out[Slot.DEPARTURE_STATION] = name
                pending_marker = None
            else:
                if pending_marker is not None:
                    slot = pending_marker
                elif correcting:
                    slot = _resolve_city(grammar.resolution_correction, context)
                else:
                    slot = _resolve_city(grammar.resolution_answer, context)
                out[slot] = name
                last_city = slot
                pending_marker = None
    if not out:
        raise UnparseableInput(text)
    return SemanticFrame(out)
