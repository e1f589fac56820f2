"""Semantic frames and the per-slot confirmation store.

A recognizer turn is either a recognition failure (no frame at all) or a
:class:`SemanticFrame`, a flat map from slots to uppercase value tokens.
The dialogue-side belief about each slot lives in a :class:`SlotStore`,
which only ever moves along the legal confirmation lattice:

    Unknown -> Hypothesized -> Confirmed
    Hypothesized -> Hypothesized'   (correction)
    Hypothesized -> Denied -> Hypothesized'
    Confirmed -> Hypothesized'      (user-initiated repair only)

Stores are immutable; merges return a new store plus the change list.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class Slot(enum.Enum):
    DEPARTURE_CITY = "departure_city"
    DEPARTURE_STATION = "departure_station"
    ARRIVAL_CITY = "arrival_city"
    DATE = "date"
    DEPARTURE_TIME = "departure_time"
    HOUR = "hour"
    CONFIRMATION = "confirmation"

    def __repr__(self) -> str:  # keeps traces and test diffs readable
        return self.value


# Canonical iteration order for every slot-wise loop in the package.
SLOT_ORDER: tuple[Slot, ...] = (
    Slot.DEPARTURE_CITY,
    Slot.DEPARTURE_STATION,
    Slot.ARRIVAL_CITY,
    Slot.DATE,
    Slot.DEPARTURE_TIME,
    Slot.HOUR,
    Slot.CONFIRMATION,
)

# Task parameters; CONFIRMATION is classification input, never stored.
CONTENT_SLOTS: tuple[Slot, ...] = tuple(s for s in SLOT_ORDER if s is not Slot.CONFIRMATION)

# Slots the system itself takes the initiative to request.  Temporal slots
# are volunteered by callers and echoed back, never requested outright.
REQUIRED_SLOTS: tuple[Slot, ...] = (Slot.DEPARTURE_CITY, Slot.ARRIVAL_CITY)

CITY_SLOTS: tuple[Slot, ...] = (Slot.DEPARTURE_CITY, Slot.ARRIVAL_CITY)
TEMPORAL_SLOTS: tuple[Slot, ...] = (Slot.DATE, Slot.DEPARTURE_TIME, Slot.HOUR)

# A station only refines a departure city; it is assessed with that city.
COMPANION_CITY: dict[Slot, Slot] = {Slot.DEPARTURE_STATION: Slot.DEPARTURE_CITY}

YES = "YES"
NO = "NO"


class SemanticFrame:
    """Immutable slot-to-value map produced by the recognition front end.

    An empty frame is a legal recognition result and is distinct from a
    recognition failure, which is represented by ``None`` at call sites.
    """

    __slots__ = ("_bindings",)

    def __init__(self, bindings: dict[Slot, str] | None = None):
        items = dict(bindings or {})
        for slot, value in items.items():
            if not isinstance(slot, Slot):
                raise TypeError(f"frame keys must be Slot, got {slot!r}")
            if not value or value != value.upper():
                raise ValueError(f"frame values are uppercase tokens, got {value!r}")
        self._bindings = {s: items[s] for s in SLOT_ORDER if s in items}

    def get(self, slot: Slot) -> str | None:
        return self._bindings.get(slot)

    def __contains__(self, slot: Slot) -> bool:
        return slot in self._bindings

    def __len__(self) -> int:
        return len(self._bindings)

    def items(self) -> tuple[tuple[Slot, str], ...]:
        return tuple(self._bindings.items())

    def content_items(self) -> tuple[tuple[Slot, str], ...]:
        """Bindings excluding the CONFIRMATION pseudo-slot."""
        return tuple((s, v) for s, v in self._bindings.items() if s is not Slot.CONFIRMATION)

    def content_slots(self) -> tuple[Slot, ...]:
        return tuple(s for s, _ in self.content_items())

    @property
    def confirmation(self) -> str | None:
        return self._bindings.get(Slot.CONFIRMATION)

    def is_empty(self) -> bool:
        return not self._bindings

    def without(self, *slots: Slot) -> "SemanticFrame":
        return SemanticFrame({s: v for s, v in self._bindings.items() if s not in slots})

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SemanticFrame) and self._bindings == other._bindings

    def __hash__(self) -> int:
        return hash(tuple(self._bindings.items()))

    def __repr__(self) -> str:
        inner = ", ".join(f"{s.value}={v}" for s, v in self._bindings.items())
        return f"<frame {inner}>" if inner else "<frame empty>"


class Status(enum.Enum):
    UNKNOWN = "unknown"
    HYPOTHESIZED = "hypothesized"
    CONFIRMED = "confirmed"
    DENIED = "denied"

    def __repr__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SlotState:
    status: Status
    value: str | None = None

    def __post_init__(self) -> None:
        has_value = self.value is not None
        needs_value = self.status in (Status.HYPOTHESIZED, Status.CONFIRMED)
        if has_value != needs_value:
            raise ValueError(f"{self.status} incompatible with value {self.value!r}")


UNKNOWN_STATE = SlotState(Status.UNKNOWN)
DENIED_STATE = SlotState(Status.DENIED)


class MergeMode(enum.Enum):
    NEW_INFO = "new_info"
    CONFIRMATION = "confirmation"
    CORRECTION = "correction"


@dataclass(frozen=True)
class SlotChange:
    slot: Slot
    old: SlotState
    new: SlotState


class IllegalTransition(Exception):
    """A merge asked for a lattice move the mode does not license.

    This signals an engine classification bug, not a user error: the
    engine must route conflicting values through correction events.
    """


class SlotStore:
    """Immutable per-slot confirmation state over the content slots."""

    __slots__ = ("_states",)

    def __init__(self, states: dict[Slot, SlotState] | None = None):
        base = {s: UNKNOWN_STATE for s in CONTENT_SLOTS}
        for slot, state in (states or {}).items():
            if slot not in base:
                raise ValueError(f"store tracks content slots only, got {slot!r}")
            base[slot] = state
        self._states = base

    def state(self, slot: Slot) -> SlotState:
        return self._states[slot]

    def status(self, slot: Slot) -> Status:
        return self._states[slot].status

    def value(self, slot: Slot) -> str | None:
        return self._states[slot].value

    def items(self) -> tuple[tuple[Slot, SlotState], ...]:
        return tuple(self._states.items())

    def bound_slots(self) -> tuple[Slot, ...]:
        return tuple(
            s for s in CONTENT_SLOTS
            if self._states[s].status in (Status.HYPOTHESIZED, Status.CONFIRMED)
        )

    def hypothesized_slots(self) -> tuple[Slot, ...]:
        return tuple(s for s in CONTENT_SLOTS if self._states[s].status is Status.HYPOTHESIZED)

    def is_complete(self) -> bool:
        """True once every required slot has been explicitly confirmed."""
        return all(self._states[s].status is Status.CONFIRMED for s in REQUIRED_SLOTS)

    def next_unknown_required(self) -> Slot | None:
        for slot in REQUIRED_SLOTS:
            if self._states[slot].status in (Status.UNKNOWN, Status.DENIED):
                return slot
        return None

    def replace(self, slot: Slot, state: SlotState) -> "SlotStore":
        states = dict(self._states)
        states[slot] = state
        return SlotStore(states)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SlotStore) and self._states == other._states

    def __repr__(self) -> str:
        bound = ", ".join(
            f"{s.value}={st.status.value}({st.value})" if st.value else f"{s.value}={st.status.value}"
            for s, st in self._states.items()
            if st.status is not Status.UNKNOWN
        )
        return f"<store {bound}>" if bound else "<store empty>"


def empty_store() -> SlotStore:
    return SlotStore()


def _merge_one(state: SlotState, value: str, mode: MergeMode, slot: Slot) -> SlotState:
    status = state.status
    if status in (Status.UNKNOWN, Status.DENIED):
        return SlotState(Status.HYPOTHESIZED, value)
    if status is Status.HYPOTHESIZED:
        if state.value == value:
            if mode is MergeMode.NEW_INFO:
                return state
            # Re-stating the value under discussion counts as confirming it.
            return SlotState(Status.CONFIRMED, value)
        if mode is MergeMode.CORRECTION:
            return SlotState(Status.HYPOTHESIZED, value)
        raise IllegalTransition(
            f"{slot.value}: hypothesized {state.value!r} vs {value!r} outside correction"
        )
    # status is CONFIRMED
    if state.value == value:
        return state
    if mode is MergeMode.CORRECTION:
        # User-initiated repair is the only way back out of Confirmed.
        return SlotState(Status.HYPOTHESIZED, value)
    raise IllegalTransition(
        f"{slot.value}: confirmed {state.value!r} vs {value!r} outside correction"
    )


def merge_frame(
    store: SlotStore, frame: SemanticFrame, mode: MergeMode
) -> tuple[SlotStore, list[SlotChange]]:
    """Fold a frame's content bindings into the store under one merge mode.

    Returns the updated store and the list of actual state changes, in
    canonical slot order.  Raises :class:`IllegalTransition` when the
    mode/status pair is outside the lattice, and when a station binding
    would leave the store without its companion city.
    """
    changes: list[SlotChange] = []
    result = store
    for slot, value in frame.content_items():
        old = result.state(slot)
        new = _merge_one(old, value, mode, slot)
        if new != old:
            result = result.replace(slot, new)
            changes.append(SlotChange(slot, old, new))
    for station, city in COMPANION_CITY.items():
        if station in frame and result.status(city) not in (Status.HYPOTHESIZED, Status.CONFIRMED):
            raise IllegalTransition(f"{station.value} bound without a {city.value} value")
    return result, changes


def frame_conflicts(store: SlotStore, frame: SemanticFrame) -> list[Slot]:
    """Slots where the frame's value differs from a Hypothesized or Confirmed one."""
    out: list[Slot] = []
    for slot, value in frame.content_items():
        state = store.state(slot)
        if state.status in (Status.HYPOTHESIZED, Status.CONFIRMED) and state.value != value:
            out.append(slot)
    return out
