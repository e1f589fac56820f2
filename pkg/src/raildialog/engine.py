"""Dialogue engine: event classification and the transition network.

One call to :meth:`Engine.observe` runs a full interaction cycle: the
incoming frame is matched against the expectations published with the
previous system act, classified into a dialogue event, folded into the
slot store and the focus hierarchy, and answered with the next system
act chosen by the transition network.

Miscommunication handling lives in :meth:`Engine._classify`: corrections
carry an implicature (whatever was not objected to is accepted), and a
correction that does not fit the active focus is re-interpreted against
an ancestor focus before it is allowed to rewrite earlier hypotheses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .acts import (
    ActKind,
    DialogueEvent,
    EventKind,
    SystemAct,
    make_closing,
    make_confirm_plus_initiative,
    make_non_understanding,
    make_open_prompt,
    make_present_info,
    make_request_param,
    make_yes_no_confirm,
)
from .context import ContextHierarchy, FocusMode, LinguisticHistory
from .expectations import (
    ExpectationSet,
    Kind,
    MatchResult,
    confirm_plus_initiative_set,
    lexical_predictions,
    match,
    open_prompt_set,
    request_param_set,
    yes_no_confirm_set,
)
from .frames import (
    CITY_SLOTS,
    COMPANION_CITY,
    DENIED_STATE,
    MergeMode,
    REQUIRED_SLOTS,
    SemanticFrame,
    Slot,
    SlotStore,
    Status,
    UNKNOWN_STATE,
    empty_store,
    frame_conflicts,
    merge_frame,
)
from .lexicon import data_path
from .timetable import Timetable, default_timetable


class TransitionNetworkError(Exception):
    """The network description is malformed."""


_DENIAL_KINDS = frozenset({Kind.BARE_NO, Kind.EXPLICIT_DENY_FOCUSED,
                           Kind.EXPLICIT_DENY_FOCUSED_WITH_REQUEST})
_CONFIRM_KINDS = frozenset({Kind.BARE_YES, Kind.EXPLICIT_CONFIRM_FOCUSED,
                            Kind.REPEAT_AS_CONFIRM})

_CONDITIONS = ("aborted", "non_understanding_directive", "non_understanding",
               "pending_confirmation", "complete")
_ACTIONS = ("open_prompt", "request_parameter", "request_parameter_isolated",
            "confirm_pending", "repeat_request", "announce_solutions",
            "farewell", "farewell_failed")


@dataclass(frozen=True)
class Arc:
    target: str
    condition: str | None = None  # None on the default arc
    auto: bool = False


@dataclass(frozen=True)
class TnNode:
    name: str
    action: str
    arcs: tuple[Arc, ...]
    terminal: bool = False


class TransitionNetwork:
    def __init__(self, start: str, nodes: dict[str, TnNode]):
        self.start = start
        self.nodes = nodes
        self._validate()

    @classmethod
    def load(cls, path: str | Path | None = None) -> "TransitionNetwork":
        raw = yaml.safe_load(Path(path or data_path("tn.yaml")).read_text("utf-8"))
        if raw.get("schema_version") != 1:
            raise TransitionNetworkError(f"unsupported schema_version {raw.get('schema_version')!r}")
        nodes: dict[str, TnNode] = {}
        for name, body in raw["nodes"].items():
            arcs = tuple(
                Arc(target=a["to"], condition=a.get("when"), auto=bool(a.get("auto")))
                for a in body.get("arcs", ())
            )
            nodes[name] = TnNode(
                name=name,
                action=body["action"],
                arcs=arcs,
                terminal=bool(body.get("terminal")),
            )
        return cls(raw["start"], nodes)

    def _validate(self) -> None:
        if self.start not in self.nodes:
            raise TransitionNetworkError(f"start node {self.start!r} does not exist")
        for node in self.nodes.values():
            if node.action not in _ACTIONS:
                raise TransitionNetworkError(f"{node.name}: unknown action {node.action!r}")
            for arc in node.arcs:
                if arc.target not in self.nodes:
                    raise TransitionNetworkError(
                        f"{node.name}: arc target {arc.target!r} does not exist")
                if arc.condition is not None and arc.condition not in _CONDITIONS:
                    raise TransitionNetworkError(
                        f"{node.name}: unknown condition {arc.condition!r}")
            if node.terminal:
                if node.arcs:
                    raise TransitionNetworkError(f"{node.name}: terminal node has arcs")
                continue
            defaults = [a for a in node.arcs if a.condition is None]
            if len(defaults) != 1:
                raise TransitionNetworkError(
                    f"{node.name}: expected exactly one default arc, found {len(defaults)}")
            if node.arcs[-1].condition is not None:
                raise TransitionNetworkError(f"{node.name}: default arc must come last")
            if any(a.auto for a in node.arcs) and len(node.arcs) != 1:
                raise TransitionNetworkError(
                    f"{node.name}: an auto arc must be the node's only arc")


@dataclass(frozen=True)
class EngineConfig:
    implicature: bool = True  # corrections may rewrite earlier hypotheses
    climb: bool = True        # inconsistent input may resolve to an ancestor focus
    max_turns: int = 30
    non_understanding_threshold: int = 2


@dataclass(frozen=True)
class TurnTrace:
    turn_index: int
    frame: SemanticFrame | None
    event: DialogueEvent | None
    act: SystemAct
    node: str
    cycle_id: int | None
    expectations: ExpectationSet


@dataclass
class _State:
    store: SlotStore = field(default_factory=empty_store)
    pending: list[tuple[Slot, str]] = field(default_factory=list)
    nonunderstanding_run: int = 0
    turns: int = 0
    aborted: bool = False


class Engine:
    def __init__(
        self,
        timetable: Timetable | None = None,
        network: TransitionNetwork | None = None,
        config: EngineConfig | None = None,
    ):
        self.config = config or EngineConfig()
        self._timetable = timetable or default_timetable()
        self._tn = network or TransitionNetwork.load()
        self._state = _State()
        self.history = LinguisticHistory()
        self.hierarchy = ContextHierarchy()
        self._node = self._tn.nodes[self._tn.start]
        self._retry_target: SystemAct | None = None
        self.current_act: SystemAct | None = None
        self.current_expectations: ExpectationSet = ()
        self.last_event: DialogueEvent | None = None
        self.last_query: dict[str, str] | None = None
        self.closed = False
        self.failed = False
        self.acts: list[SystemAct] = []

    # --- public surface -----------------------------------------------------

    @property
    def store(self) -> SlotStore:
        return self._state.store

    @property
    def turns_taken(self) -> int:
        return self._state.turns

    def predictions(self):
        return lexical_predictions(self.current_expectations)

    def start(self) -> SystemAct:
        """Produce the greeting and arm its expectations."""
        if self.current_act is not None:
            raise RuntimeError("dialogue already started")
        act = self._perform(self._node)
        return act

    def observe(self, frame: SemanticFrame | None) -> TurnTrace:
        """Run one interaction cycle over a parsed caller turn."""
        if self.closed:
            raise RuntimeError("dialogue is closed")
        if self.current_act is None:
            raise RuntimeError("dialogue not started")
        state = self._state
        state.turns += 1
        if state.turns > self.config.max_turns:
            state.aborted = True

        event: DialogueEvent | None = None
        cycle_id: int | None = None
        if frame is not None:
            frame = self._drop_orphan_stations(frame)
        if not state.aborted:
            event = self._classify(frame)
            cycle_id = self._apply(event, frame)
            self.last_event = event

        node = self._route(event)
        act = self._perform(node)
        return TurnTrace(
            turn_index=state.turns,
            frame=frame,
            event=event,
            act=act,
            node=self._node.name,
            cycle_id=cycle_id,
            expectations=self.current_expectations,
        )

    def snapshot(self) -> dict:
        state = self._state
        return {
            "slot_store": {
                s.value: {"status": st.status.value, "value": st.value}
                for s, st in state.store.items()
            },
            "pending": [[s.value, v] for s, v in state.pending],
            "focus_tree": self.hierarchy.snapshot(),
            "turns": state.turns,
            "closed": self.closed,
            "failed": self.failed,
            "node": self._node.name,
            "last_event": None if self.last_event is None else {
                "kind": self.last_event.kind.value,
                "corrected": [s.value for s in self.last_event.corrected],
                "target_cycle": self.last_event.target_cycle,
            },
            "last_query": self.last_query,
        }

    # --- classification -----------------------------------------------------

    def _classify(self, frame: SemanticFrame | None) -> DialogueEvent:
        if frame is None or frame.is_empty():
            return DialogueEvent(kind=EventKind.NON_UNDERSTANDING)
        result = match(self.current_expectations, frame, self._state.store)
        if result.deviation:
            if self._content_frame(frame).is_empty():
                # a stray yes/no with nothing else to work with
                return DialogueEvent(kind=EventKind.NON_UNDERSTANDING, match=result)
            return self._classify_deviation(frame, result)
        if result.kind in _DENIAL_KINDS:
            return DialogueEvent(kind=EventKind.DENIAL, match=result)
        if result.implicature:
            return self._repair_or_clarify(frame, result)
        if frame_conflicts(self._state.store, frame):
            # an in-expectation answer that contradicts a held value is
            # still a correction attempt, not new information
            return self._repair_or_clarify(frame, result)
        if result.kind in _CONFIRM_KINDS:
            return DialogueEvent(kind=EventKind.CONFIRMATION, match=result)
        return DialogueEvent(kind=EventKind.NEW_INFO, match=result)

    def _classify_deviation(self, frame: SemanticFrame, result: MatchResult) -> DialogueEvent:
        conflicts = frame_conflicts(self._state.store, frame)
        if conflicts:
            return self._repair_or_clarify(frame, result)
        # conflict-free off-expectation input is reinterpreted as volunteered info
        return DialogueEvent(kind=EventKind.NEW_INFO, match=result)

    def _repair_or_clarify(self, frame: SemanticFrame, result: MatchResult) -> DialogueEvent:
        """Admit a correction only where some focus actually owns the conflict."""
        if not self.config.implicature:
            return DialogueEvent(kind=EventKind.DEVIATION_CLARIFY, match=result)
        conflicts = frame_conflicts(self._state.store, frame)
        node = self.hierarchy.resolve(frame, self._state.store, climb=self.config.climb)
        if not self.hierarchy.owns_any(node, conflicts):
            return DialogueEvent(kind=EventKind.DEVIATION_CLARIFY, match=result)
        corrected = list(conflicts)
        for station, city in COMPANION_CITY.items():
            if city in corrected and frame.get(station) is not None and station not in corrected:
                corrected.append(station)
        return DialogueEvent(
            kind=EventKind.IMPLICATURE_REPAIR,
            match=result,
            corrected=tuple(sorted(corrected, key=lambda s: s.value)),
            target_cycle=node.origin_cycle,
            resolved_node=node.node_id,
        )

    # --- event application --------------------------------------------------

    def _apply(self, event: DialogueEvent, frame: SemanticFrame | None) -> int:
        state = self._state
        handler = {
            EventKind.NON_UNDERSTANDING: self._apply_non_understanding,
            EventKind.CONFIRMATION: self._apply_confirmation,
            EventKind.DENIAL: self._apply_denial,
            EventKind.NEW_INFO: self._apply_new_info,
            EventKind.IMPLICATURE_REPAIR: self._apply_repair,
            EventKind.DEVIATION_CLARIFY: self._apply_clarify,
        }[event.kind]
        context_node = handler(event, frame)
        if event.kind is EventKind.NON_UNDERSTANDING:
            state.nonunderstanding_run += 1
        else:
            state.nonunderstanding_run = 0
        cycle = self.history.record_cycle(
            turn_index=state.turns,
            frame=frame,
            preceding_act_kind=self.current_act.kind.value,
            expectations=self.current_expectations,
            match=event.match,
            context_node=context_node,
        )
        return cycle.cycle_id

    def _apply_non_understanding(self, event: DialogueEvent, frame) -> int:
        return self.hierarchy.active.node_id

    def _content_frame(self, frame: SemanticFrame) -> SemanticFrame:
        return frame.without(Slot.CONFIRMATION)

    def _drop_orphan_stations(self, frame: SemanticFrame) -> SemanticFrame:
        """Discard station bindings whose companion city is nowhere live."""
        for station, city in COMPANION_CITY.items():
            if frame.get(station) is None or frame.get(city) is not None:
                continue
            if self._state.store.status(city) not in (Status.HYPOTHESIZED, Status.CONFIRMED):
                frame = frame.without(station)
        return frame

    def _new_unit(self, bindings: list[tuple[Slot, str]]) -> list[tuple[Slot, str]]:
        """The newest city unit in a batch, or the whole batch when none."""
        cities = [(s, v) for s, v in bindings if s in CITY_SLOTS]
        if not cities:
            return list(bindings)
        city, value = cities[-1]
        unit = [(city, value)]
        for station, owner in COMPANION_CITY.items():
            if owner is city:
                unit.extend((s, v) for s, v in bindings if s is station)
        return unit

    def _set_pending(self, carried: list[tuple[Slot, str]], batch: list[tuple[Slot, str]]) -> None:
        seen: dict[Slot, str] = {}
        for slot, value in carried + batch:
            seen[slot] = value
        self._state.pending = [(s, v) for s, v in seen.items()]

    def _apply_new_info(self, event: DialogueEvent, frame: SemanticFrame) -> int:
        state = self._state
        content = self._content_frame(frame)
        if content.is_empty():
            return self.hierarchy.active.node_id
        target = self.hierarchy.resolve(content, state.store, climb=self.config.climb)
        state.store, _ = merge_frame(state.store, content, MergeMode.NEW_INFO)
        batch = list(content.content_items())
        # unconfirmed material stays due: both the focus of this act and any
        # older pending bindings the acquisition detour left unconfirmed
        kept: dict[Slot, str] = dict(state.pending)
        kept.update(dict(self.current_act.focused or ()))
        carried = [
            (s, v) for s, v in kept.items()
            if state.store.status(s) is Status.HYPOTHESIZED and state.store.value(s) == v
            and s not in content.content_slots()
        ]
        self._set_pending(carried, batch)
        node = self.hierarchy.open_focus(
            FocusMode.SHIFT,
            slots=dict(batch),
            origin_cycle=len(self.history),
            parent_id=target.node_id,
        )
        return node.node_id

    def _apply_confirmation(self, event: DialogueEvent, frame: SemanticFrame) -> int:
        state = self._state
        focused = self.current_act.focused or ()
        kind = event.match.kind if event.match else None
        if kind is Kind.REPEAT_AS_CONFIRM:
            confirmed = [(s, v) for s, v in focused if frame.get(s) == v]
        else:
            confirmed = [(s, v) for s, v in focused if state.store.value(s) == v]
        if confirmed:
            state.store, _ = merge_frame(
                state.store, SemanticFrame(dict(confirmed)), MergeMode.CONFIRMATION)
        remaining = [
            (s, v) for s, v in focused
            if state.store.status(s) is Status.HYPOTHESIZED and state.store.value(s) == v
        ]
        extras = [
            (s, frame.get(s)) for s in frame.content_slots()
            if frame.get(s) != state.store.value(s) or state.store.status(s) is Status.UNKNOWN
        ]
        extra_frame = SemanticFrame({s: v for s, v in extras})
        if extras:
            state.store, _ = merge_frame(state.store, extra_frame, MergeMode.NEW_INFO)
        city_extras = [(s, v) for s, v in extras if s in CITY_SLOTS or s in COMPANION_CITY]
        self._set_pending(remaining, city_extras)
        context_node = self.hierarchy.active.node_id
        if city_extras:
            node = self.hierarchy.open_focus(
                FocusMode.SHIFT,
                slots=dict(city_extras),
                origin_cycle=len(self.history),
            )
            context_node = node.node_id
        self._sweep_closed_foci()
        return context_node

    def _apply_denial(self, event: DialogueEvent, frame: SemanticFrame) -> int:
        state = self._state
        for slot, value in self.current_act.focused or ():
            if state.store.value(slot) == value:
                state.store = state.store.replace(slot, DENIED_STATE)
        content = self._content_frame(frame)
        for station, city in COMPANION_CITY.items():
            # denying the city strands any station that rode along without it
            if content.get(station) is not None and content.get(city) is None \
                    and state.store.status(city) not in (Status.HYPOTHESIZED, Status.CONFIRMED):
                content = content.without(station)
        batch: list[tuple[Slot, str]] = []
        if not content.is_empty():
            state.store, _ = merge_frame(state.store, content, MergeMode.NEW_INFO)
            batch = [(s, content.get(s)) for s in content.content_slots()]
        self._set_pending([], batch)
        if batch:
            node = self.hierarchy.open_focus(
                FocusMode.SHIFT, slots=dict(batch), origin_cycle=len(self.history))
            return node.node_id
        return self.hierarchy.active.node_id

    def _apply_repair(self, event: DialogueEvent, frame: SemanticFrame) -> int:
        state = self._state
        content = self._content_frame(frame)
        state.store, _ = merge_frame(state.store, content, MergeMode.CORRECTION)
        # whatever was under confirmation and not objected to is accepted
        tacit = [
            (s, v) for s, v in self.current_act.focused or ()
            if s not in content.content_slots() and s not in event.corrected
            and state.store.status(s) is Status.HYPOTHESIZED and state.store.value(s) == v
        ]
        if tacit:
            state.store, _ = merge_frame(
                state.store, SemanticFrame(dict(tacit)), MergeMode.CONFIRMATION)
        for station, city in COMPANION_CITY.items():
            if city in event.corrected and frame.get(station) is None \
                    and state.store.value(station) is not None:
                state.store = state.store.replace(station, UNKNOWN_STATE)
        pending = [(s, state.store.value(s)) for s in event.corrected]
        pending += [
            (s, content.get(s)) for s in content.content_slots()
            if s not in event.corrected
            and state.store.status(s) is Status.HYPOTHESIZED
        ]
        self._set_pending([], pending)
        node = self.hierarchy.open_focus(
            FocusMode.RESTRICTION,
            slots={s: state.store.value(s) for s in event.corrected},
            origin_cycle=len(self.history),
            parent_id=event.resolved_node,
        )
        return node.node_id

    def _apply_clarify(self, event: DialogueEvent, frame) -> int:
        return self.hierarchy.active.node_id

    def _sweep_closed_foci(self) -> None:
        store = self._state.store
        for node in self.hierarchy.path_from_active():
            if node.is_root or not node.is_open:
                continue
            watched = set(node.slots) | node.under_confirmation
            if watched and all(store.status(s) is Status.CONFIRMED for s in watched):
                self.hierarchy.close_focus(node.node_id)

    # --- routing and actions --------------------------------------------------

    def _condition(self, name: str, event: DialogueEvent | None) -> bool:
        state = self._state
        if name == "aborted":
            return state.aborted
        if event is not None and event.kind is EventKind.NON_UNDERSTANDING:
            run = state.nonunderstanding_run
            if name == "non_understanding_directive":
                return (run >= self.config.non_understanding_threshold
                        and state.store.next_unknown_required() is not None)
            if name == "non_understanding":
                return True
        if name == "pending_confirmation":
            return bool(state.pending)
        if name == "complete":
            return state.store.is_complete() and not state.pending
        return False

    def _route(self, event: DialogueEvent | None) -> TnNode:
        for arc in self._node.arcs:
            if arc.condition is None or self._condition(arc.condition, event):
                return self._tn.nodes[arc.target]
        raise TransitionNetworkError(f"{self._node.name}: no arc matched")

    def _perform(self, node: TnNode) -> SystemAct:
        act = getattr(self, "_act_" + node.action)()
        self._node = node
        if node.action not in ("repeat_request",):
            self._retry_target = act
        self.current_act = act
        self.current_expectations = self._expectations_for(act)
        self.acts.append(act)
        if node.terminal:
            self.closed = True
            self.failed = act.failed
            return act
        auto = [a for a in node.arcs if a.auto]
        if auto:
            return self._perform(self._tn.nodes[auto[0].target])
        return act

    def _expectations_for(self, act: SystemAct) -> ExpectationSet:
        if act.kind is ActKind.OPEN_PROMPT:
            return open_prompt_set()
        if act.kind is ActKind.CONFIRM_PLUS_INITIATIVE:
            return confirm_plus_initiative_set(act.focused, act.requested)
        if act.kind is ActKind.YES_NO_CONFIRM:
            return yes_no_confirm_set(act.focused)
        if act.kind is ActKind.REQUEST_PARAM:
            return request_param_set(act.requested)
        if act.kind is ActKind.NON_UNDERSTANDING_REQUEST:
            # mirror the retried act's expectations
            if act.retry_kind is ActKind.OPEN_PROMPT:
                return open_prompt_set()
            if act.retry_kind is ActKind.CONFIRM_PLUS_INITIATIVE:
                return confirm_plus_initiative_set(act.focused, act.requested)
            if act.retry_kind is ActKind.YES_NO_CONFIRM:
                return yes_no_confirm_set(act.focused)
            if act.retry_kind is ActKind.REQUEST_PARAM:
                return request_param_set(act.requested)
        return ()

    def _ordered_pending(self) -> tuple[tuple[Slot, str], ...]:
        order = {s: i for i, s in enumerate(
            (Slot.DEPARTURE_CITY, Slot.DEPARTURE_STATION, Slot.ARRIVAL_CITY,
             Slot.DATE, Slot.DEPARTURE_TIME, Slot.HOUR))}
        return tuple(sorted(self._state.pending, key=lambda p: order[p[0]]))

    def _act_open_prompt(self) -> SystemAct:
        for slot in REQUIRED_SLOTS:
            self.hierarchy.annotate_request(self.hierarchy.root.node_id, slot)
        return make_open_prompt()

    def _act_request_parameter(self, isolated: bool = False) -> SystemAct:
        slot = self._state.store.next_unknown_required()
        if slot is None:
            # nothing strictly unknown: re-ask the first unconfirmed one
            slot = next(
                (s for s in REQUIRED_SLOTS
                 if self._state.store.status(s) is not Status.CONFIRMED),
                Slot.DEPARTURE_CITY,
            )
        self.hierarchy.annotate_request(self.hierarchy.active.node_id, slot)
        return make_request_param(slot, isolated=isolated)

    def _act_request_parameter_isolated(self) -> SystemAct:
        return self._act_request_parameter(isolated=True)

    def _act_confirm_pending(self) -> SystemAct:
        state = self._state
        repair = self.last_event is not None \
            and self.last_event.kind is EventKind.IMPLICATURE_REPAIR
        next_required = state.store.next_unknown_required()
        if not repair and next_required is not None:
            # confirm only the newest unit and keep the initiative; volunteered
            # temporals are accepted silently and ride along unconfirmed
            state.pending = self._new_unit(state.pending)
            focused = self._ordered_pending()
            self.hierarchy.annotate_confirmation([s for s, _ in focused])
            node = self.hierarchy.open_focus(
                FocusMode.SHIFT, slots={}, origin_cycle=len(self.history))
            self.hierarchy.annotate_request(node.node_id, next_required)
            return make_confirm_plus_initiative(focused, next_required)
        pending = self._ordered_pending()
        state.pending = list(pending)
        self.hierarchy.annotate_confirmation([s for s, _ in pending])
        return make_yes_no_confirm(pending)

    def _act_repeat_request(self) -> SystemAct:
        target = self._retry_target or make_open_prompt()
        return make_non_understanding(target)

    def _act_announce_solutions(self) -> SystemAct:
        store = self._state.store
        times = tuple(
            v for v in (store.value(Slot.DEPARTURE_TIME), store.value(Slot.HOUR)) if v
        )
        query: dict[str, str] = {
            "departure_city": store.value(Slot.DEPARTURE_CITY) or "",
            "arrival_city": store.value(Slot.ARRIVAL_CITY) or "",
        }
        if store.value(Slot.DEPARTURE_STATION):
            query["departure_station"] = store.value(Slot.DEPARTURE_STATION)
        if store.value(Slot.DATE):
            query["date"] = store.value(Slot.DATE)
        if times:
            query["times"] = "|".join(times)
        solutions = self._timetable.query(
            departure_city=query["departure_city"],
            arrival_city=query["arrival_city"],
            departure_station=store.value(Slot.DEPARTURE_STATION),
            date=store.value(Slot.DATE),
            times=times,
        )
        self.last_query = query
        return make_present_info(tuple(solutions), tuple(query.items()))

    def _act_farewell(self) -> SystemAct:
        return make_closing(failed=False)

    def _act_farewell_failed(self) -> SystemAct:
        return make_closing(failed=True)
