"""System speech acts, dialogue events, and the English surface templates.

Acts carry their semantic payload (echoed value pairs, the requested slot)
so tests and clients can check behaviour without string matching; the
rendered text is attached for display only.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .expectations import MatchResult
from .frames import Slot
from .timetable import TrainSolution


class ActKind(enum.Enum):
    OPEN_PROMPT = "open_prompt"
    CONFIRM_PLUS_INITIATIVE = "confirm_plus_initiative"
    YES_NO_CONFIRM = "yes_no_confirm"
    REQUEST_PARAM = "request_param"
    NON_UNDERSTANDING_REQUEST = "non_understanding_request"
    PRESENT_INFO = "present_info"
    CLOSING = "closing"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SystemAct:
    kind: ActKind
    # values the act puts under confirmation, in slot order
    focused: tuple[tuple[Slot, str], ...] = ()
    requested: Slot | None = None
    isolated: bool = False  # directive mode: caller must answer with a single word
    solutions: tuple[TrainSolution, ...] = ()
    query: tuple[tuple[str, str], ...] = ()
    failed: bool = False
    # for a repeat-after-non-understanding: the kind of the act being retried
    retry_kind: "ActKind | None" = None
    template_id: str = ""
    text: str = ""

    def focused_slots(self) -> tuple[Slot, ...]:
        return tuple(s for s, _ in self.focused)


class EventKind(enum.Enum):
    NON_UNDERSTANDING = "non_understanding"
    CONFIRMATION = "confirmation"
    DENIAL = "denial"
    NEW_INFO = "new_info"
    IMPLICATURE_REPAIR = "implicature_repair"
    DEVIATION_CLARIFY = "deviation_clarify"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class DialogueEvent:
    kind: EventKind
    match: MatchResult | None = None
    # slots rewritten by an implicature repair, companions included
    corrected: tuple[Slot, ...] = ()
    # cycle whose focus node the repair resolved to
    target_cycle: int | None = None
    resolved_node: int | None = None


# --- surface rendering ------------------------------------------------------

def pretty_place(token: str) -> str:
    return " ".join(part.capitalize() for part in token.split("-"))


_TEMPORAL_PHRASES = {
    "TODAY": "today",
    "TOMORROW": "tomorrow",
    "SUNDAY": "on Sunday",
    "MORNING": "in the morning",
    "AFTERNOON": "in the afternoon",
    "EVENING": "in the evening",
    "NIGHT": "at night",
    "SEVEN": "around seven",
    "EIGHT": "around eight",
    "NINE": "around nine",
    "TEN": "around ten",
}


def _temporal_phrase(value: str) -> str:
    return _TEMPORAL_PHRASES.get(value, value.lower())


_REQUESTS = {
    Slot.DEPARTURE_CITY: "What is your point of departure?",
    Slot.ARRIVAL_CITY: "Where are you going to?",
    Slot.DATE: "On which day do you want to travel?",
    Slot.DEPARTURE_TIME: "At what time do you want to leave?",
    Slot.HOUR: "At what time do you want to leave?",
}

_ISOLATED_REQUESTS = {
    Slot.DEPARTURE_CITY: "Please say only the name of your departure city.",
    Slot.ARRIVAL_CITY: "Please say only the name of your destination city.",
}


def request_clause(slot: Slot, isolated: bool = False) -> str:
    if isolated:
        return _ISOLATED_REQUESTS.get(slot, _REQUESTS[slot])
    return _REQUESTS[slot]


def _echo_clauses(focused: tuple[tuple[Slot, str], ...]) -> list[str]:
    values = dict(focused)
    clauses: list[str] = []
    if Slot.DEPARTURE_CITY in values:
        clause = f"from {pretty_place(values[Slot.DEPARTURE_CITY])}"
        if Slot.DEPARTURE_STATION in values:
            clause += f" {pretty_place(values[Slot.DEPARTURE_STATION])}"
        clauses.append(clause)
    elif Slot.DEPARTURE_STATION in values:
        clauses.append(f"from {pretty_place(values[Slot.DEPARTURE_STATION])}")
    if Slot.ARRIVAL_CITY in values:
        clauses.append(f"to {pretty_place(values[Slot.ARRIVAL_CITY])}")
    if Slot.DATE in values:
        clauses.append(f"leaving {_temporal_phrase(values[Slot.DATE])}")
    if Slot.DEPARTURE_TIME in values:
        clauses.append(f"leaving {_temporal_phrase(values[Slot.DEPARTURE_TIME])}")
    if Slot.HOUR in values:
        clauses.append(_temporal_phrase(values[Slot.HOUR]))
    return clauses


OPEN_PROMPT_TEXT = (
    "Automatic Railway Information System. Please speak after the tone. "
    "Please give your point of departure and your destination."
)


def make_open_prompt() -> SystemAct:
    return SystemAct(
        kind=ActKind.OPEN_PROMPT,
        requested=Slot.DEPARTURE_CITY,
        template_id="open_prompt",
        text=OPEN_PROMPT_TEXT,
    )


def _sentence_case(clause: str) -> str:
    return clause[0].upper() + clause[1:]


def make_confirm_plus_initiative(
    focused: tuple[tuple[Slot, str], ...], requested: Slot
) -> SystemAct:
    echo = " ".join(_sentence_case(c) + "." for c in _echo_clauses(focused))
    text = f"{echo} {request_clause(requested)}"
    return SystemAct(
        kind=ActKind.CONFIRM_PLUS_INITIATIVE,
        focused=focused,
        requested=requested,
        template_id="confirm_plus_initiative",
        text=text,
    )


def make_yes_no_confirm(focused: tuple[tuple[Slot, str], ...]) -> SystemAct:
    values = dict(focused)
    slots = set(values)
    if slots == {Slot.ARRIVAL_CITY}:
        text = f"Do you want to arrive in {pretty_place(values[Slot.ARRIVAL_CITY])}?"
        template = "yes_no_confirm_arrival"
    elif slots <= {Slot.DEPARTURE_CITY, Slot.DEPARTURE_STATION}:
        clause = _echo_clauses(focused)[0]
        text = _sentence_case(clause) + "?"
        template = "yes_no_confirm_departure"
    else:
        text = "Do you want to travel " + " ".join(_echo_clauses(focused)) + "?"
        template = "yes_no_confirm_trip"
    return SystemAct(
        kind=ActKind.YES_NO_CONFIRM,
        focused=focused,
        template_id=template,
        text=text,
    )


def make_request_param(slot: Slot, isolated: bool = False) -> SystemAct:
    return SystemAct(
        kind=ActKind.REQUEST_PARAM,
        requested=slot,
        isolated=isolated,
        template_id="request_param_isolated" if isolated else "request_param",
        text=request_clause(slot, isolated),
    )


def make_non_understanding(retry: SystemAct) -> SystemAct:
    """Signal the failure, then restate the retried act's request or question."""
    text = "Sorry, I did not understand. " + (
        "Please give your point of departure and your destination."
        if retry.kind is ActKind.OPEN_PROMPT
        else retry.text
    )
    return SystemAct(
        kind=ActKind.NON_UNDERSTANDING_REQUEST,
        focused=retry.focused,
        requested=retry.requested,
        isolated=retry.isolated,
        retry_kind=retry.retry_kind or retry.kind,
        template_id="non_understanding",
        text=text,
    )


def _solution_sentence(s: TrainSolution) -> str:
    dep = pretty_place(s.departure_city)
    if s.departure_station:
        dep += f" {pretty_place(s.departure_station)}"
    arr = pretty_place(s.arrival_city)
    if s.arrival_station:
        arr += f" {pretty_place(s.arrival_station)}"
    return (
        f"{s.train_class} {s.train_id} leaves from {dep} at {s.departure_time}; "
        f"it arrives at {arr} at {s.arrival_time}."
    )


def make_present_info(
    solutions: tuple[TrainSolution, ...], query: tuple[tuple[str, str], ...]
) -> SystemAct:
    if solutions:
        text = " ".join(_solution_sentence(s) for s in solutions[:2])
        template = "present_info"
    else:
        text = "I am sorry, there is no connection matching your request."
        template = "present_info_empty"
    return SystemAct(
        kind=ActKind.PRESENT_INFO,
        solutions=solutions,
        query=query,
        template_id=template,
        text=text,
    )


def make_closing(failed: bool = False) -> SystemAct:
    if failed:
        text = "I am sorry, I cannot complete your request. Please call again. Goodbye."
    else:
        text = "Thank you for calling. Goodbye."
    return SystemAct(
        kind=ActKind.CLOSING,
        failed=failed,
        template_id="closing_failed" if failed else "closing",
        text=text,
    )
