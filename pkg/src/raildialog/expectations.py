"""Pragmatic expectations about the next user turn.

After every system act the engine compiles the set of dialogue moves a
cooperative caller could make next.  Each expectation is one such move;
an incoming frame is matched against the set in a fixed priority order
and the first satisfied expectation wins.  Two of the kinds read an
affirmative re-statement of a slot as a disconfirmation of what the
system understood (the conversational-implicature readings); they are
what makes third-turn repair possible without an explicit "no".

The set also compiles down to the word classes the recognizer should
expect next; the error channel consumes those as predictions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .frames import Slot, SemanticFrame, SlotStore, NO, YES, frame_conflicts
from .lexicon import SLOT_CLASSES, WordClass


class Kind(enum.Enum):
    BARE_YES = "bare_yes"
    BARE_NO = "bare_no"
    EXPLICIT_CONFIRM_FOCUSED = "explicit_confirm_focused"
    EXPLICIT_DENY_FOCUSED_WITH_REQUEST = "explicit_deny_focused_with_request"
    EXPLICIT_DENY_FOCUSED = "explicit_deny_focused"
    CORRECT_FOCUSED_PLUS_PROVIDE_REQUESTED = "correct_focused_plus_provide_requested"
    CORRECT_FOCUSED = "correct_focused"
    REPEAT_AS_CONFIRM = "repeat_as_confirm"
    PROVIDE_REQUESTED_PLUS_EXTRAS = "provide_requested_plus_extras"
    PROVIDE_REQUESTED = "provide_requested"

    def __repr__(self) -> str:
        return self.value


# Matching walks the set in this order; first satisfied pattern wins.
PRIORITY: tuple[Kind, ...] = (
    Kind.BARE_YES,
    Kind.BARE_NO,
    Kind.EXPLICIT_CONFIRM_FOCUSED,
    Kind.EXPLICIT_DENY_FOCUSED_WITH_REQUEST,
    Kind.EXPLICIT_DENY_FOCUSED,
    Kind.CORRECT_FOCUSED_PLUS_PROVIDE_REQUESTED,
    Kind.CORRECT_FOCUSED,
    Kind.REPEAT_AS_CONFIRM,
    Kind.PROVIDE_REQUESTED_PLUS_EXTRAS,
    Kind.PROVIDE_REQUESTED,
)

IMPLICATURE_KINDS = frozenset(
    {Kind.CORRECT_FOCUSED, Kind.CORRECT_FOCUSED_PLUS_PROVIDE_REQUESTED}
)

CONFIRMATION_CONSUMING_KINDS = frozenset({
    Kind.BARE_YES,
    Kind.BARE_NO,
    Kind.EXPLICIT_CONFIRM_FOCUSED,
    Kind.EXPLICIT_DENY_FOCUSED_WITH_REQUEST,
    Kind.EXPLICIT_DENY_FOCUSED,
})


@dataclass(frozen=True)
class Expectation:
    kind: Kind
    # Focused slots with the values the system echoed for them.
    focused: tuple[tuple[Slot, str], ...] = ()
    requested: Slot | None = None

    @property
    def implicature(self) -> bool:
        return self.kind in IMPLICATURE_KINDS

    def __repr__(self) -> str:
        parts = [self.kind.value]
        if self.focused:
            parts.append("focus=" + ",".join(f"{s.value}:{v}" for s, v in self.focused))
        if self.requested:
            parts.append(f"req={self.requested.value}")
        return f"<exp {' '.join(parts)}>"


ExpectationSet = tuple[Expectation, ...]


def open_prompt_set() -> ExpectationSet:
    """Greeting or re-greeting: both journey endpoints are requested."""
    return (
        Expectation(Kind.PROVIDE_REQUESTED_PLUS_EXTRAS),
        Expectation(Kind.PROVIDE_REQUESTED, requested=Slot.DEPARTURE_CITY),
        Expectation(Kind.PROVIDE_REQUESTED, requested=Slot.ARRIVAL_CITY),
    )


def confirm_plus_initiative_set(
    focused: tuple[tuple[Slot, str], ...], requested: Slot
) -> ExpectationSet:
    """Confirmation of one slot combined with the request for another."""
    return (
        Expectation(Kind.BARE_YES, focused=focused),
        Expectation(Kind.BARE_NO, focused=focused),
        Expectation(Kind.EXPLICIT_CONFIRM_FOCUSED, focused=focused),
        Expectation(Kind.EXPLICIT_DENY_FOCUSED_WITH_REQUEST, focused=focused, requested=requested),
        Expectation(Kind.EXPLICIT_DENY_FOCUSED, focused=focused),
        Expectation(Kind.CORRECT_FOCUSED_PLUS_PROVIDE_REQUESTED, focused=focused, requested=requested),
        Expectation(Kind.CORRECT_FOCUSED, focused=focused),
        Expectation(Kind.REPEAT_AS_CONFIRM, focused=focused),
        Expectation(Kind.PROVIDE_REQUESTED_PLUS_EXTRAS, focused=focused, requested=requested),
        Expectation(Kind.PROVIDE_REQUESTED, focused=focused, requested=requested),
    )


def yes_no_confirm_set(focused: tuple[tuple[Slot, str], ...]) -> ExpectationSet:
    """Pure confirmation question over one or more focused slots."""
    return (
        Expectation(Kind.BARE_YES, focused=focused),
        Expectation(Kind.BARE_NO, focused=focused),
        Expectation(Kind.EXPLICIT_CONFIRM_FOCUSED, focused=focused),
        Expectation(Kind.EXPLICIT_DENY_FOCUSED, focused=focused),
        Expectation(Kind.CORRECT_FOCUSED_PLUS_PROVIDE_REQUESTED, focused=focused),
        Expectation(Kind.CORRECT_FOCUSED, focused=focused),
        Expectation(Kind.REPEAT_AS_CONFIRM, focused=focused),
    )


def request_param_set(slot: Slot) -> ExpectationSet:
    """Single-parameter request; in isolated-word mode this is the whole set."""
    return (Expectation(Kind.PROVIDE_REQUESTED, requested=slot),)


@dataclass(frozen=True)
class MatchResult:
    expectation: Expectation | None
    conflicting_slots: tuple[Slot, ...] = ()
    roles: tuple[tuple[Slot, str], ...] = ()
    ignored_confirmation: bool = False

    @property
    def deviation(self) -> bool:
        return self.expectation is None

    @property
    def kind(self) -> Kind | None:
        return self.expectation.kind if self.expectation else None

    @property
    def implicature(self) -> bool:
        return bool(self.expectation and self.expectation.implicature)


def _focus_rebinds(
    frame: SemanticFrame, focused: tuple[tuple[Slot, str], ...]
) -> tuple[list[Slot], list[Slot]]:
    """Focused slots the frame re-binds, split into (same value, new value)."""
    same: list[Slot] = []
    new: list[Slot] = []
    for slot, echoed in focused:
        got = frame.get(slot)
        if got is None:
            continue
        (same if got == echoed else new).append(slot)
    return same, new


def _satisfies(
    exp: Expectation,
    frame: SemanticFrame,
    store: SlotStore,
    confirmation: str | None,
) -> bool:
    content = frame.content_items()
    conflicts = frame_conflicts(store, frame)
    same, new = _focus_rebinds(frame, exp.focused)
    kind = exp.kind

    if kind is Kind.BARE_YES:
        return confirmation == YES and not content
    if kind is Kind.BARE_NO:
        return confirmation == NO and not content
    if kind is Kind.EXPLICIT_CONFIRM_FOCUSED:
        return confirmation == YES and not conflicts
    if kind is Kind.EXPLICIT_DENY_FOCUSED_WITH_REQUEST:
        return (
            confirmation == NO
            and not new
            and exp.requested is not None
            and exp.requested in frame
        )
    if kind is Kind.EXPLICIT_DENY_FOCUSED:
        return (
            confirmation == NO
            and not new
            and (exp.requested is None or exp.requested not in frame)
        )
    if kind is Kind.CORRECT_FOCUSED_PLUS_PROVIDE_REQUESTED:
        return (
            bool(new)
            and exp.requested is not None
            and exp.requested in frame
            and exp.requested not in conflicts
        )
    if kind is Kind.CORRECT_FOCUSED:
        return bool(new)
    if kind is Kind.REPEAT_AS_CONFIRM:
        return confirmation is None and bool(same) and not new and not conflicts
    if kind is Kind.PROVIDE_REQUESTED_PLUS_EXTRAS:
        if confirmation is not None or conflicts:
            return False
        if exp.requested is not None:
            return exp.requested in frame and len(content) >= 2
        bound_required = [s for s, _ in content if s in (Slot.DEPARTURE_CITY, Slot.ARRIVAL_CITY)]
        return bool(bound_required) and len(content) >= 2
    if kind is Kind.PROVIDE_REQUESTED:
        if confirmation is not None or conflicts:
            return False
        if exp.requested is not None:
            return exp.requested in frame
        return any(s in (Slot.DEPARTURE_CITY, Slot.ARRIVAL_CITY) for s, _ in content)
    raise AssertionError(f"unhandled kind {kind}")


def _classify_roles(
    exp: Expectation,
    frame: SemanticFrame,
    store: SlotStore,
    conflicts: tuple[Slot, ...],
) -> tuple[tuple[Slot, str], ...]:
    focused_slots = {s for s, _ in exp.focused}
    roles: list[tuple[Slot, str]] = []
    for slot, value in frame.content_items():
        if slot in conflicts:
            roles.append((slot, "corrects"))
        elif slot in focused_slots and store.value(slot) == value:
            roles.append((slot, "confirms"))
        elif exp.requested is not None and slot is exp.requested:
            roles.append((slot, "provides"))
        else:
            roles.append((slot, "extra"))
    return tuple(roles)


def match(
    expectation_set: ExpectationSet, frame: SemanticFrame, store: SlotStore
) -> MatchResult:
    """Return the first satisfied expectation in priority order, else a deviation.

    A Confirmation binding is ignored (and flagged) when no expectation
    in force consumes one, e.g. a stray "no" at an open prompt.
    """
    confirmation = frame.confirmation
    ignored = False
    if confirmation is not None and not any(
        e.kind in CONFIRMATION_CONSUMING_KINDS for e in expectation_set
    ):
        confirmation = None
        ignored = True

    conflicts = tuple(frame_conflicts(store, frame))
    for exp in expectation_set:
        if _satisfies(exp, frame, store, confirmation):
            return MatchResult(
                expectation=exp,
                conflicting_slots=conflicts,
                roles=_classify_roles(exp, frame, store, conflicts),
                ignored_confirmation=ignored,
            )
    return MatchResult(
        expectation=None, conflicting_slots=conflicts, ignored_confirmation=ignored
    )


# Word classes contributed by each expectation, used as recognizer predictions.

_EXTRA_CLASSES = frozenset(
    {WordClass.PLACE_NAME, WordClass.DATE_EXPR, WordClass.TIME_EXPR}
)


def _classes_of(slots) -> set[WordClass]:
    return {SLOT_CLASSES[s] for s in slots}


def lexical_predictions(expectation_set: ExpectationSet) -> frozenset[WordClass]:
    """Union of the word classes the expectation set makes possible next."""
    out: set[WordClass] = set()
    for exp in expectation_set:
        kind = exp.kind
        focused_slots = [s for s, _ in exp.focused]
        if kind in CONFIRMATION_CONSUMING_KINDS:
            out.add(WordClass.YES_NO_ADVERB)
        if kind is Kind.EXPLICIT_CONFIRM_FOCUSED:
            out |= _classes_of(focused_slots)
        if kind is Kind.EXPLICIT_DENY_FOCUSED_WITH_REQUEST and exp.requested:
            out.add(SLOT_CLASSES[exp.requested])
        if kind in (
            Kind.CORRECT_FOCUSED,
            Kind.CORRECT_FOCUSED_PLUS_PROVIDE_REQUESTED,
            Kind.REPEAT_AS_CONFIRM,
        ):
            out |= _classes_of(focused_slots)
        if kind is Kind.CORRECT_FOCUSED_PLUS_PROVIDE_REQUESTED and exp.requested:
            out.add(SLOT_CLASSES[exp.requested])
        if kind is Kind.PROVIDE_REQUESTED:
            if exp.requested:
                out.add(SLOT_CLASSES[exp.requested])
            else:
                out.add(WordClass.PLACE_NAME)
        if kind is Kind.PROVIDE_REQUESTED_PLUS_EXTRAS:
            # "plus extras" admits the other task parameters as well.
            out |= _EXTRA_CLASSES
            if exp.requested:
                out.add(SLOT_CLASSES[exp.requested])
    return frozenset(out)
