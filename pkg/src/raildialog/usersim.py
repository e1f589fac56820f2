"""Scripted caller personas and the batch trial harness.

The simulated caller is cooperative but fallible only through the channel:
it answers what was asked, corrects what was echoed wrongly, volunteers
constraints according to its persona, and never re-states something it
believes the system already heard.  That last trait is what turns silent
deletions of volunteered constraints into end-to-end task failures.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from random import Random

from .acts import ActKind, EventKind, SystemAct
from .channel import ChannelConfig, NoisyChannel
from .engine import Engine, EngineConfig, TransitionNetwork
from .frames import COMPANION_CITY, NO, SemanticFrame, Slot, TEMPORAL_SLOTS, YES
from .lexicon import default_lexicon
from .timetable import Timetable, default_timetable


class ScenarioError(Exception):
    """A scenario description is malformed."""


@dataclass(frozen=True)
class Persona:
    verbosity: int = 2                 # journey endpoints given at the greeting
    p_volunteer: float = 0.7           # chance to attach each untold constraint
    p_overinform: float = 0.6          # answer the initiative when correcting
    p_repeat_without_no: float = 0.7   # correct by restating instead of denying


@dataclass(frozen=True)
class Scenario:
    name: str
    goal: dict[Slot, str]
    persona: Persona

    @property
    def goal_slots(self) -> tuple[Slot, ...]:
        return tuple(self.goal)


def load_scenarios(path: str | Path) -> tuple[Scenario, ...]:
    lexicon = default_lexicon()
    out: list[Scenario] = []
    names: set[str] = set()
    for line_no, line in enumerate(Path(path).read_text("utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        raw = json.loads(line)
        where = f"{path}:{line_no}"
        name = raw["name"]
        if name in names:
            raise ScenarioError(f"{where}: duplicate scenario name {name!r}")
        names.add(name)
        try:
            goal = {Slot(k): v for k, v in raw["goal"].items()}
        except ValueError as exc:
            raise ScenarioError(f"{where}: {exc}") from None
        for slot in (Slot.DEPARTURE_CITY, Slot.ARRIVAL_CITY):
            if slot not in goal:
                raise ScenarioError(f"{where}: goal is missing {slot.value}")
        for slot, value in goal.items():
            if slot is Slot.CONFIRMATION:
                raise ScenarioError(f"{where}: confirmation cannot be a goal")
            if lexicon.word_class(value) is None:
                raise ScenarioError(f"{where}: unknown token {value!r}")
        p = raw.get("persona", {})
        persona = Persona(
            verbosity=int(p.get("verbosity", 2)),
            p_volunteer=float(p.get("p_volunteer", 0.7)),
            p_overinform=float(p.get("p_overinform", 0.6)),
            p_repeat_without_no=float(p.get("p_repeat_without_no", 0.7)),
        )
        if persona.verbosity not in (1, 2):
            raise ScenarioError(f"{where}: verbosity must be 1 or 2")
        for field_name in ("p_volunteer", "p_overinform", "p_repeat_without_no"):
            if not 0.0 <= getattr(persona, field_name) <= 1.0:
                raise ScenarioError(f"{where}: {field_name} outside [0, 1]")
        out.append(Scenario(name=name, goal=goal, persona=persona))
    if not out:
        raise ScenarioError(f"{path}: no scenarios")
    return tuple(out)


def default_scenarios() -> tuple[Scenario, ...]:
    from .lexicon import data_path
    return load_scenarios(data_path("scenarios.jsonl"))


class SimulatedCaller:
    def __init__(self, scenario: Scenario, rng: Random):
        self.goal = dict(scenario.goal)
        self.persona = scenario.persona
        self.rng = rng
        self.said: set[Slot] = set()
        self.last_uttered: set[Slot] = set()

    def respond(self, act: SystemAct) -> SemanticFrame:
        kind = act.retry_kind if act.kind is ActKind.NON_UNDERSTANDING_REQUEST else act.kind
        if act.kind is ActKind.NON_UNDERSTANDING_REQUEST:
            # the whole previous utterance went unheard, so say it all again
            self.said -= self.last_uttered
        if kind is ActKind.OPEN_PROMPT:
            frame = self._open_statement()
        elif kind is ActKind.REQUEST_PARAM:
            frame = self._answer(act.requested, act.isolated)
        elif kind is ActKind.CONFIRM_PLUS_INITIATIVE:
            frame = self._react_to_echo(act, requested=act.requested)
        elif kind is ActKind.YES_NO_CONFIRM:
            frame = self._react_to_echo(act, requested=None)
        else:
            raise ValueError(f"caller cannot answer a {kind} act")
        self.last_uttered = set(frame.content_slots())
        self.said |= self.last_uttered
        return frame

    # --- composition policies -------------------------------------------------

    def _untold(self, slots) -> list[Slot]:
        return [s for s in slots if s in self.goal and s not in self.said]

    def _with_station(self, out: dict[Slot, str], city: Slot) -> None:
        for station, owner in COMPANION_CITY.items():
            if owner is city and station in self.goal:
                out[station] = self.goal[station]

    def _volunteer_temporals(self, out: dict[Slot, str]) -> None:
        for slot in self._untold(TEMPORAL_SLOTS):
            if self.rng.random() < self.persona.p_volunteer:
                out[slot] = self.goal[slot]

    def _open_statement(self) -> SemanticFrame:
        out: dict[Slot, str] = {}
        endpoints = (
            (Slot.DEPARTURE_CITY, Slot.ARRIVAL_CITY)
            if self.persona.verbosity >= 2 else (Slot.ARRIVAL_CITY,)
        )
        for slot in endpoints:
            out[slot] = self.goal[slot]
            self._with_station(out, slot)
        self._volunteer_temporals(out)
        return SemanticFrame(out)

    def _answer(self, slot: Slot, isolated: bool) -> SemanticFrame:
        out = {slot: self.goal[slot]}
        if not isolated:
            self._with_station(out, slot)
            self._volunteer_temporals(out)
        return SemanticFrame(out)

    def _react_to_echo(self, act: SystemAct, requested: Slot | None) -> SemanticFrame:
        for slot, _ in act.focused:
            # a cooperative dialogue never echoes something outside the task
            assert slot in self.goal, f"system echoed non-goal slot {slot}"
        echoed = dict(act.focused)
        mismatched = [s for s, v in act.focused if self.goal[s] != v]
        dropped_station = [
            station for station, city in COMPANION_CITY.items()
            if station in self.goal and station in self.said
            and city in echoed and station not in echoed
        ]
        if not mismatched and dropped_station:
            # the station qualifier went missing: restate the place in full
            out = dict(echoed)
            for station in dropped_station:
                out[station] = self.goal[station]
            return SemanticFrame(out)
        if not mismatched:
            if requested is not None:
                return self._answer(requested, isolated=False)
            out = {Slot.CONFIRMATION: YES}
            for slot in self._untold(self.goal):
                out[slot] = self.goal[slot]
            # a full readback that omits a constraint already given means it
            # was lost along the way: say it again alongside the yes
            for slot in TEMPORAL_SLOTS:
                if slot in self.goal and slot in self.said and slot not in echoed:
                    out[slot] = self.goal[slot]
            return SemanticFrame(out)
        if self.rng.random() < self.persona.p_repeat_without_no:
            out = {s: self.goal[s] for s, _ in act.focused}
        else:
            out = {Slot.CONFIRMATION: NO}
            out.update({s: self.goal[s] for s in mismatched})
        for slot in list(out):
            if slot in COMPANION_CITY.values():
                self._with_station(out, slot)
        for station, city in COMPANION_CITY.items():
            if station in out and city not in out:
                out[city] = self.goal[city]
        if requested is not None and self.rng.random() < self.persona.p_overinform:
            out[requested] = self.goal[requested]
            self._with_station(out, requested)
        return SemanticFrame(out)


# --- trial harness ------------------------------------------------------------

ABLATIONS = ("implicature", "climb", "predictions")


@dataclass(frozen=True)
class DialogueOutcome:
    index: int
    scenario: str
    success: bool
    reason: str  # "ok", "aborted", "wrong_solution", "empty_result"
    user_turns: int
    continuous_turns: int
    isolated_turns: int
    events: tuple[tuple[str, int], ...]  # event kind -> count

    def row(self) -> str:
        counts = dict(self.events)
        return ":".join([
            self.scenario, str(int(self.success)), self.reason,
            str(self.user_turns), str(self.isolated_turns),
            str(counts.get("implicature_repair", 0)),
            str(counts.get("deviation_clarify", 0)),
        ])


def goal_satisfied(goal: dict[Slot, str], solutions) -> bool:
    """Transaction success: some retrieved train serves the goal endpoints."""
    return any(
        sol.departure_city == goal[Slot.DEPARTURE_CITY]
        and sol.arrival_city == goal[Slot.ARRIVAL_CITY]
        for sol in solutions
    )


def run_dialogue(
    scenario: Scenario,
    channel: NoisyChannel,
    base_seed: int,
    index: int,
    engine_config: EngineConfig,
    constrain: bool,
    timetable: Timetable,
    network: TransitionNetwork,
    transcript: list[str] | None = None,
) -> DialogueOutcome:
    engine = Engine(timetable=timetable, network=network, config=engine_config)
    caller = SimulatedCaller(scenario, Random(f"{base_seed}-{index}-user"))
    channel_rng = Random(f"{base_seed}-{index}-ch")
    act = engine.start()
    isolated_turns = 0
    event_counts: dict[str, int] = {}
    if transcript is not None:
        transcript.append(f"SYS  {act.text}")
    while not engine.closed:
        intended = caller.respond(act)
        was_isolated = act.isolated
        received, log = channel.transmit(
            intended,
            channel_rng,
            predictions=engine.predictions() if constrain else None,
            isolated=was_isolated,
        )
        acts_before = len(engine.acts)
        trace = engine.observe(received)
        if trace.event is not None:
            key = trace.event.kind.value
            event_counts[key] = event_counts.get(key, 0) + 1
        if was_isolated:
            isolated_turns += 1
        if transcript is not None:
            heard = "<lost>" if received is None else \
                " ".join(f"{s.value}={v}" for s, v in received.items()) or "<empty>"
            said = " ".join(f"{s.value}={v}" for s, v in intended.items())
            transcript.append(f"USER {said}")
            if heard != said:
                transcript.append(f"     (heard: {heard})")
            for system_act in engine.acts[acts_before:]:
                transcript.append(f"SYS  {system_act.text}")
        act = engine.current_act
    presented: tuple = ()
    for system_act in engine.acts:
        if system_act.kind is ActKind.PRESENT_INFO:
            presented = system_act.solutions
    if engine.failed:
        success, reason = False, "aborted"
    elif goal_satisfied(scenario.goal, presented):
        success, reason = True, "ok"
    elif presented:
        success, reason = False, "wrong_solution"
    else:
        success, reason = False, "empty_result"
    turns = engine.turns_taken
    return DialogueOutcome(
        index=index,
        scenario=scenario.name,
        success=success,
        reason=reason,
        user_turns=turns,
        continuous_turns=turns - isolated_turns,
        isolated_turns=isolated_turns,
        events=tuple(sorted(event_counts.items())),
    )


@dataclass(frozen=True)
class MetricsReport:
    n_dialogues: int
    base_seed: int
    ablation: str  # "none" or one of ABLATIONS
    success_rate: float
    mean_continuous_utterances: float
    isolated_utterances: int
    failure_reasons: tuple[tuple[str, int], ...]
    event_totals: tuple[tuple[str, int], ...]
    per_scenario: tuple[tuple[str, int, int], ...]  # name, dialogues, successes
    reproducibility_hash: str

    def to_dict(self) -> dict:
        return {
            "n_dialogues": self.n_dialogues,
            "base_seed": self.base_seed,
            "ablation": self.ablation,
            "success_rate": round(self.success_rate, 6),
            "mean_continuous_utterances": round(self.mean_continuous_utterances, 6),
            "isolated_utterances": self.isolated_utterances,
            "failure_reasons": {k: v for k, v in self.failure_reasons},
            "event_totals": {k: v for k, v in self.event_totals},
            "per_scenario": {
                name: {"dialogues": n, "successes": s}
                for name, n, s in self.per_scenario
            },
            "reproducibility_hash": self.reproducibility_hash,
        }

    def to_json(self) -> str:
        """Canonical serialization; equal runs serialize byte-identically."""
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def summarize(outcomes: list[DialogueOutcome], base_seed: int, ablation: str) -> MetricsReport:
    n = len(outcomes)
    events: dict[str, int] = {}
    reasons: dict[str, int] = {}
    per_scenario: dict[str, list[int]] = {}
    for o in outcomes:
        for kind, count in o.events:
            events[kind] = events.get(kind, 0) + count
        if not o.success:
            reasons[o.reason] = reasons.get(o.reason, 0) + 1
        bucket = per_scenario.setdefault(o.scenario, [0, 0])
        bucket[0] += 1
        bucket[1] += int(o.success)
    digest = hashlib.sha256(
        "|".join(o.row() for o in outcomes).encode()).hexdigest()
    return MetricsReport(
        n_dialogues=n,
        base_seed=base_seed,
        ablation=ablation,
        success_rate=sum(o.success for o in outcomes) / n,
        mean_continuous_utterances=sum(o.continuous_turns for o in outcomes) / n,
        isolated_utterances=sum(o.isolated_turns for o in outcomes),
        failure_reasons=tuple(sorted(reasons.items())),
        event_totals=tuple(sorted(events.items())),
        per_scenario=tuple(
            (name, n_k, s_k) for name, (n_k, s_k) in sorted(per_scenario.items())
        ),
        reproducibility_hash=digest,
    )


def run_trial(
    n: int,
    base_seed: int,
    channel_config: ChannelConfig,
    scenarios: tuple[Scenario, ...] | None = None,
    ablate: str | None = None,
    transcripts_dir: str | Path | None = None,
) -> tuple[MetricsReport, list[DialogueOutcome]]:
    """Run n dialogues round-robin over the scenarios with paired seeds.

    The per-dialogue random streams depend only on (base_seed, index), so
    runs that differ in an ablation flag stay seed-paired dialogue by
    dialogue.
    """
    if ablate is not None and ablate not in ABLATIONS:
        raise ValueError(f"unknown ablation {ablate!r}")
    scenarios = scenarios or default_scenarios()
    engine_config = EngineConfig(
        implicature=ablate != "implicature",
        climb=ablate != "climb",
    )
    constrain = ablate != "predictions"
    channel = NoisyChannel(channel_config)
    timetable = default_timetable()
    network = TransitionNetwork.load()
    out_dir = Path(transcripts_dir) if transcripts_dir else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    outcomes: list[DialogueOutcome] = []
    for i in range(n):
        scenario = scenarios[i % len(scenarios)]
        lines: list[str] | None = [] if out_dir is not None else None
        outcome = run_dialogue(
            scenario, channel, base_seed, i, engine_config, constrain,
            timetable, network, transcript=lines,
        )
        outcomes.append(outcome)
        if out_dir is not None and lines is not None:
            lines.append(
                f"== {outcome.scenario}: "
                f"{'success' if outcome.success else outcome.reason} "
                f"in {outcome.user_turns} caller turns")
            (out_dir / f"dialogue-{i:05d}.txt").write_text(
                "\n".join(lines) + "\n", "utf-8")
    return summarize(outcomes, base_seed, ablate or "none"), outcomes
