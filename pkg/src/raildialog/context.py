"""Linguistic history and the hierarchy of interpretation contexts.

Each user turn is recorded as a cycle structure.  Contentful turns also
grow a tree of focus nodes: providing new parameters opens a shift node,
a repair opens a restriction node under the context being repaired, and
a system request for a missing parameter opens a shift node of its own.
Confirmation questions annotate the node that owns the questioned value.

When an utterance does not fit the active focus, interpretation climbs
from the active node toward the root and settles on the first node
consistent with the frame; the root is consistent with anything.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator

from .expectations import ExpectationSet, MatchResult
from .frames import COMPANION_CITY, SemanticFrame, Slot, SlotStore


@dataclass(frozen=True)
class CycleStructure:
    cycle_id: int
    turn_index: int
    frame: SemanticFrame | None  # None records a recognition failure
    preceding_act_kind: str
    expectations: ExpectationSet
    match: MatchResult | None
    context_node: int


class LinguisticHistory:
    """Append-only record of interpretation cycles with monotone ids."""

    def __init__(self) -> None:
        self._cycles: list[CycleStructure] = []

    def record_cycle(
        self,
        turn_index: int,
        frame: SemanticFrame | None,
        preceding_act_kind: str,
        expectations: ExpectationSet,
        match: MatchResult | None,
        context_node: int,
    ) -> CycleStructure:
        cycle = CycleStructure(
            cycle_id=len(self._cycles),
            turn_index=turn_index,
            frame=frame,
            preceding_act_kind=preceding_act_kind,
            expectations=expectations,
            match=match,
            context_node=context_node,
        )
        self._cycles.append(cycle)
        return cycle

    def cycles(self) -> tuple[CycleStructure, ...]:
        return tuple(self._cycles)

    def cycle(self, cycle_id: int) -> CycleStructure:
        return self._cycles[cycle_id]

    def last(self) -> CycleStructure | None:
        return self._cycles[-1] if self._cycles else None

    def __len__(self) -> int:
        return len(self._cycles)


class FocusMode(enum.Enum):
    SHIFT = "shift"
    RESTRICTION = "restriction"

    def __repr__(self) -> str:
        return self.value


@dataclass
class FocusNode:
    node_id: int
    parent_id: int | None
    mode: FocusMode
    # Slot values this node put under discussion.
    slots: dict[Slot, str] = field(default_factory=dict)
    # Slots requested from the user while this node was active.
    requested: set[Slot] = field(default_factory=set)
    # Slots whose value this node placed under confirmation.
    under_confirmation: set[Slot] = field(default_factory=set)
    origin_cycle: int | None = None
    is_open: bool = True

    @property
    def is_root(self) -> bool:
        return self.parent_id is None


class ContextHierarchy:
    """Focus tree with one root; nodes are added, annotated, never removed."""

    def __init__(self) -> None:
        root = FocusNode(node_id=0, parent_id=None, mode=FocusMode.SHIFT)
        self._nodes: dict[int, FocusNode] = {0: root}
        self._active_id = 0

    @property
    def root(self) -> FocusNode:
        return self._nodes[0]

    @property
    def active(self) -> FocusNode:
        return self._nodes[self._active_id]

    def node(self, node_id: int) -> FocusNode:
        return self._nodes[node_id]

    def nodes(self) -> tuple[FocusNode, ...]:
        return tuple(self._nodes.values())

    def set_active(self, node_id: int) -> None:
        if node_id not in self._nodes:
            raise KeyError(node_id)
        self._active_id = node_id

    def open_focus(
        self,
        mode: FocusMode,
        slots: dict[Slot, str],
        origin_cycle: int | None,
        parent_id: int | None = None,
    ) -> FocusNode:
        """Create a child focus node and make it the active focus."""
        parent = self._active_id if parent_id is None else parent_id
        if parent not in self._nodes:
            raise KeyError(parent)
        node = FocusNode(
            node_id=len(self._nodes),
            parent_id=parent,
            mode=mode,
            slots=dict(slots),
            origin_cycle=origin_cycle,
        )
        self._nodes[node.node_id] = node
        self._active_id = node.node_id
        return node

    def close_focus(self, node_id: int) -> None:
        self._nodes[node_id].is_open = False

    def annotate_request(self, node_id: int, slot: Slot) -> None:
        self._nodes[node_id].requested.add(slot)

    def owner_of(self, slot: Slot) -> int:
        """Nearest node on the active path that introduced the slot's value."""
        for node in self.path_from_active():
            if slot in node.slots:
                return node.node_id
        return self._active_id

    def annotate_confirmation(self, slots) -> None:
        for slot in slots:
            self._nodes[self.owner_of(slot)].under_confirmation.add(slot)

    def path_from_active(self) -> Iterator[FocusNode]:
        node: FocusNode | None = self.active
        while node is not None:
            yield node
            node = self._nodes[node.parent_id] if node.parent_id is not None else None

    def _binding_fits(self, node: FocusNode, slot: Slot, value: str, store: SlotStore) -> bool:
        if slot in node.requested or slot in node.under_confirmation or slot in node.slots:
            return True
        if slot is not Slot.CONFIRMATION and store.value(slot) == value:
            return True
        companion = COMPANION_CITY.get(slot)
        if companion is not None:
            # A station travels with its city: fine wherever the city is live.
            return (
                companion in node.requested
                or companion in node.under_confirmation
                or companion in node.slots
            )
        return False

    def consistent(self, node: FocusNode, frame: SemanticFrame, store: SlotStore) -> bool:
        """Root is consistent with anything; elsewhere every binding must fit."""
        if node.is_root:
            return True
        return all(
            self._binding_fits(node, slot, value, store)
            for slot, value in frame.content_items()
        )

    def resolve(self, frame: SemanticFrame, store: SlotStore, climb: bool = True) -> FocusNode:
        """First consistent node from the active focus toward the root.

        With climbing disabled the active focus is returned as-is and the
        caller decides what to make of an inconsistent interpretation.
        """
        if not climb:
            return self.active
        for node in self.path_from_active():
            if self.consistent(node, frame, store):
                return node
        return self.root  # unreachable: the root always consists

    def owns_any(self, node: FocusNode, slots) -> bool:
        """Whether any given slot (or its companion city) is live at the node."""
        live = node.slots.keys() | node.under_confirmation
        for slot in slots:
            if slot in live or COMPANION_CITY.get(slot) in live:
                return True
        return False

    def snapshot(self) -> dict:
        """JSON-ready dump of the tree for state inspection."""
        return {
            "active": self._active_id,
            "nodes": [
                {
                    "id": n.node_id,
                    "parent": n.parent_id,
                    "mode": n.mode.value,
                    "slots": {s.value: v for s, v in n.slots.items()},
                    "requested": sorted(s.value for s in n.requested),
                    "under_confirmation": sorted(s.value for s in n.under_confirmation),
                    "origin_cycle": n.origin_cycle,
                    "open": n.is_open,
                }
                for n in self._nodes.values()
            ],
        }
