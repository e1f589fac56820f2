"""Engine-level replays of the four reference dialogues, plus network checks.

The replays feed post-recognition frames directly into the engine and
assert the act sequence by kind and slot payload, not by surface text.
"""

import pytest

from raildialog.acts import ActKind, EventKind
from raildialog.engine import (
    Engine,
    EngineConfig,
    TransitionNetwork,
    TransitionNetworkError,
    TnNode,
    Arc,
)
from raildialog.frames import SemanticFrame, Slot, Status

DEP = Slot.DEPARTURE_CITY
ST = Slot.DEPARTURE_STATION
ARR = Slot.ARRIVAL_CITY
DATE = Slot.DATE
DTIME = Slot.DEPARTURE_TIME
HOUR = Slot.HOUR
C = Slot.CONFIRMATION


def drive(engine: Engine, frames) -> list:
    engine.start()
    return [engine.observe(f) for f in frames]


def frame(**kw) -> SemanticFrame:
    names = {
        "dep": DEP, "st": ST, "arr": ARR,
        "date": DATE, "dtime": DTIME, "hour": HOUR, "c": C,
    }
    return SemanticFrame({names[k]: v for k, v in kw.items()})


class TestEveningTrainDialogue:
    """Total recognition failure, then a batch answer with a stray 'no',
    then a yes carrying an extra hour constraint."""

    def run(self) -> Engine:
        eng = Engine()
        drive(eng, [
            None,
            frame(c="NO", dep="MILANO", arr="ROMA", dtime="EVENING"),
            frame(c="YES", hour="EIGHT"),
        ])
        return eng

    def test_act_sequence(self):
        eng = self.run()
        kinds = [a.kind for a in eng.acts]
        assert kinds == [
            ActKind.OPEN_PROMPT,
            ActKind.NON_UNDERSTANDING_REQUEST,
            ActKind.YES_NO_CONFIRM,
            ActKind.PRESENT_INFO,
            ActKind.CLOSING,
        ]

    def test_confirmation_covers_whole_batch(self):
        eng = self.run()
        ync = eng.acts[2]
        assert ync.focused == (
            (DEP, "MILANO"), (ARR, "ROMA"), (DTIME, "EVENING"))
        assert ync.text == (
            "Do you want to travel from Milano to Roma leaving in the evening?")

    def test_stray_no_is_ignored_not_a_denial(self):
        eng = self.run()
        cycle = eng.history.cycle(1)
        assert cycle.match is not None and cycle.match.ignored_confirmation
        assert eng.store.value(DEP) == "MILANO"

    def test_result_and_query(self):
        eng = self.run()
        present = eng.acts[3]
        assert dict(present.query)["times"] == "EVENING|EIGHT"
        assert present.solutions[0].train_id == "243"
        assert present.solutions[0].train_class == "Intercity"
        assert eng.closed and not eng.failed

    def test_extra_hour_rides_along_unconfirmed(self):
        eng = self.run()
        assert eng.store.status(HOUR) is Status.HYPOTHESIZED
        assert eng.store.value(HOUR) == "EIGHT"
        for slot in (DEP, ARR, DTIME):
            assert eng.store.status(slot) is Status.CONFIRMED


class TestMisrecognizedDestinationDialogue:
    """One endpoint misheard as a similar-sounding city; the correction
    arrives while the system is already asking for the other endpoint."""

    def run(self) -> Engine:
        eng = Engine()
        drive(eng, [
            frame(arr="ARONA"),          # caller actually said Roma
            frame(arr="ROMA"),
            frame(c="YES"),
            frame(dep="MILANO"),
            frame(c="YES"),
        ])
        return eng

    def test_act_sequence(self):
        eng = self.run()
        kinds = [a.kind for a in eng.acts]
        assert kinds == [
            ActKind.OPEN_PROMPT,
            ActKind.CONFIRM_PLUS_INITIATIVE,
            ActKind.YES_NO_CONFIRM,
            ActKind.REQUEST_PARAM,
            ActKind.YES_NO_CONFIRM,
            ActKind.PRESENT_INFO,
            ActKind.CLOSING,
        ]

    def test_confirm_plus_initiative_payload(self):
        eng = self.run()
        cpi = eng.acts[1]
        assert cpi.focused == ((ARR, "ARONA"),)
        assert cpi.requested is DEP
        assert cpi.text == "To Arona. What is your point of departure?"

    def test_correction_is_an_implicature_repair_on_the_earlier_cycle(self):
        eng = Engine()
        eng.start()
        traces = [eng.observe(f) for f in [
            frame(arr="ARONA"), frame(arr="ROMA"), frame(c="YES"),
            frame(dep="MILANO"), frame(c="YES"),
        ]]
        assert eng.acts[2].focused == ((ARR, "ROMA"),)
        repair = [
            t.event for t in traces
            if t.event is not None and t.event.kind is EventKind.IMPLICATURE_REPAIR
        ]
        assert len(repair) == 1
        assert repair[0].corrected == (ARR,)
        assert repair[0].target_cycle == 0

    def test_final_query_uses_corrected_city(self):
        eng = self.run()
        present = eng.acts[5]
        q = dict(present.query)
        assert q["departure_city"] == "MILANO"
        assert q["arrival_city"] == "ROMA"


class TestCorrectionWithTacitConfirmationDialogue:
    """Both endpoints given, one misheard; the caller repeats the right one
    and corrects the wrong one in a single utterance."""

    def run(self):
        eng = Engine()
        traces = drive(eng, [
            frame(dep="MILANO", arr="ARONA"),   # caller said Roma
            frame(dep="MILANO", arr="ROMA"),
            frame(c="YES"),
        ])
        return eng, traces

    def test_act_sequence(self):
        eng, _ = self.run()
        kinds = [a.kind for a in eng.acts]
        assert kinds == [
            ActKind.OPEN_PROMPT,
            ActKind.YES_NO_CONFIRM,
            ActKind.YES_NO_CONFIRM,
            ActKind.PRESENT_INFO,
            ActKind.CLOSING,
        ]

    def test_repeated_city_is_tacitly_confirmed(self):
        eng, traces = self.run()
        event = traces[1].event
        assert event.kind is EventKind.IMPLICATURE_REPAIR
        assert event.corrected == (ARR,)
        assert event.target_cycle == 0
        # after the correction the departure no longer needs confirming
        assert eng.acts[2].focused == ((ARR, "ROMA"),)
        assert eng.store.status(DEP) is Status.CONFIRMED

    def test_store_never_silently_overwritten(self):
        _, traces = self.run()
        # the rewrite happened through a repair event, not a plain merge
        assert traces[1].event.kind is EventKind.IMPLICATURE_REPAIR


class TestAirportStationDialogue:
    """A fused misrecognition (city heard as its airport station) corrected
    late, after an unrelated answer, with the correction also settling the
    still-pending destination."""

    def run(self):
        eng = Engine()
        traces = drive(eng, [
            frame(dep="PISA-AEROPORTO", date="TODAY", dtime="MORNING"),
            frame(arr="FIRENZE"),
            frame(dep="PISA", st="CENTRALE"),
            frame(c="YES"),
        ])
        return eng, traces

    def test_act_sequence(self):
        eng, _ = self.run()
        kinds = [a.kind for a in eng.acts]
        assert kinds == [
            ActKind.OPEN_PROMPT,
            ActKind.CONFIRM_PLUS_INITIATIVE,
            ActKind.YES_NO_CONFIRM,
            ActKind.YES_NO_CONFIRM,
            ActKind.PRESENT_INFO,
            ActKind.CLOSING,
        ]

    def test_carried_focus_joins_the_next_confirmation(self):
        eng, _ = self.run()
        cpi = eng.acts[1]
        assert cpi.focused == ((DEP, "PISA-AEROPORTO"),)
        assert cpi.requested is ARR
        ync = eng.acts[2]
        assert ync.focused == ((DEP, "PISA-AEROPORTO"), (ARR, "FIRENZE"))

    def test_late_correction_repairs_city_and_station_together(self):
        eng, traces = self.run()
        event = traces[2].event
        assert event.kind is EventKind.IMPLICATURE_REPAIR
        assert event.corrected == (DEP, ST)
        assert event.target_cycle == 0
        ync = eng.acts[3]
        assert ync.focused == ((DEP, "PISA"), (ST, "CENTRALE"))
        assert ync.text == "From Pisa Centrale?"

    def test_unobjected_destination_is_accepted_by_the_correction(self):
        eng, traces = self.run()
        assert eng.store.status(ARR) is Status.CONFIRMED
        # confirmed before the final yes: check at the time of the repair
        replay = Engine()
        replay.start()
        replay.observe(frame(dep="PISA-AEROPORTO", date="TODAY", dtime="MORNING"))
        replay.observe(frame(arr="FIRENZE"))
        replay.observe(frame(dep="PISA", st="CENTRALE"))
        assert replay.store.status(ARR) is Status.CONFIRMED

    def test_query_includes_station_and_temporals(self):
        eng, _ = self.run()
        present = eng.acts[4]
        q = dict(present.query)
        assert q == {
            "departure_city": "PISA",
            "departure_station": "CENTRALE",
            "arrival_city": "FIRENZE",
            "date": "TODAY",
            "times": "MORNING",
        }
        assert present.solutions[0].train_id == "1127"


class TestNonUnderstandingEscalation:
    def test_two_failures_switch_to_isolated_word_request(self):
        eng = Engine()
        eng.start()
        t1 = eng.observe(None)
        assert t1.act.kind is ActKind.NON_UNDERSTANDING_REQUEST
        assert not t1.act.isolated
        t2 = eng.observe(None)
        assert t2.act.kind is ActKind.REQUEST_PARAM
        assert t2.act.isolated
        assert t2.act.requested is DEP

    def test_directive_mode_reverts_after_a_successful_turn(self):
        eng = Engine()
        eng.start()
        eng.observe(None)
        eng.observe(None)
        t = eng.observe(frame(dep="MILANO"))
        assert t.act.kind is ActKind.CONFIRM_PLUS_INITIATIVE
        assert t.act.focused == ((DEP, "MILANO"),)

    def test_no_directive_switch_while_confirming(self):
        eng = Engine()
        eng.start()
        eng.observe(frame(dep="MILANO", arr="ROMA"))
        for _ in range(3):
            t = eng.observe(None)
            assert t.act.kind is ActKind.NON_UNDERSTANDING_REQUEST
            assert not t.act.isolated

    def test_turn_cap_closes_with_failure(self):
        eng = Engine(config=EngineConfig(max_turns=4))
        eng.start()
        for _ in range(4):
            eng.observe(None)
        t = eng.observe(None)
        assert t.act.kind is ActKind.CLOSING
        assert t.act.failed
        assert eng.closed and eng.failed


class TestRepairGating:
    def setup_engine(self, **cfg) -> Engine:
        eng = Engine(config=EngineConfig(**cfg))
        eng.start()
        eng.observe(frame(arr="ROMA"))  # CPI: confirm Roma, request departure
        return eng

    def test_with_climbing_the_correction_lands(self):
        eng = self.setup_engine(climb=True)
        t = eng.observe(frame(arr="ARONA"))
        assert t.event.kind is EventKind.IMPLICATURE_REPAIR
        assert eng.store.value(ARR) == "ARONA"
        assert t.act.kind is ActKind.YES_NO_CONFIRM
        assert t.act.focused == ((ARR, "ARONA"),)

    def test_without_climbing_the_correction_only_clarifies(self):
        eng = self.setup_engine(climb=False)
        t = eng.observe(frame(arr="ARONA"))
        assert t.event.kind is EventKind.DEVIATION_CLARIFY
        assert eng.store.value(ARR) == "ROMA"

    def test_without_implicature_corrections_only_clarify(self):
        eng = Engine(config=EngineConfig(implicature=False))
        eng.start()
        eng.observe(frame(dep="MILANO", arr="ARONA"))
        t = eng.observe(frame(dep="MILANO", arr="ROMA"))
        assert t.event.kind is EventKind.DEVIATION_CLARIFY
        assert eng.store.value(ARR) == "ARONA"
        assert eng.store.status(DEP) is Status.HYPOTHESIZED


class TestOtherUserMoves:
    def test_partial_repetition_confirms_only_the_repeated_slot(self):
        eng = Engine()
        eng.start()
        eng.observe(frame(dep="MILANO", arr="ROMA"))
        t = eng.observe(frame(dep="MILANO"))
        assert t.event.kind is EventKind.CONFIRMATION
        assert eng.store.status(DEP) is Status.CONFIRMED
        assert eng.store.status(ARR) is Status.HYPOTHESIZED
        assert t.act.kind is ActKind.YES_NO_CONFIRM
        assert t.act.focused == ((ARR, "ROMA"),)

    def test_denial_with_replacement_value_for_the_requested_slot(self):
        eng = Engine()
        eng.start()
        eng.observe(frame(arr="ARONA"))
        t = eng.observe(frame(c="NO", dep="MILANO"))
        assert t.event.kind is EventKind.DENIAL
        assert eng.store.status(ARR) is Status.DENIED
        assert t.act.kind is ActKind.CONFIRM_PLUS_INITIATIVE
        assert t.act.focused == ((DEP, "MILANO"),)
        assert t.act.requested is ARR

    def test_bare_denial_reopens_acquisition(self):
        eng = Engine()
        eng.start()
        eng.observe(frame(dep="MILANO", arr="ROMA"))
        t = eng.observe(frame(c="NO"))
        assert t.event.kind is EventKind.DENIAL
        assert t.act.kind is ActKind.REQUEST_PARAM
        assert t.act.requested is DEP

    def test_stray_yes_at_a_parameter_request_is_non_understanding(self):
        eng = Engine()
        eng.start()
        eng.observe(frame(dep="MILANO", arr="ROMA"))
        eng.observe(frame(c="NO"))           # both denied, system re-asks
        t = eng.observe(frame(c="YES"))      # yes answers nothing here
        assert t.event.kind is EventKind.NON_UNDERSTANDING

    def test_volunteered_temporal_while_acquiring_is_folded_in(self):
        eng = Engine()
        eng.start()
        eng.observe(frame(dep="MILANO"))
        t = eng.observe(frame(date="TODAY"))
        assert t.event.kind is EventKind.NEW_INFO
        assert eng.store.value(DATE) == "TODAY"
        assert t.act.kind is ActKind.CONFIRM_PLUS_INITIATIVE
        assert t.act.focused == ((DEP, "MILANO"),)


class TestTransitionNetworkValidation:
    def _node(self, name="a", action="open_prompt", arcs=(), terminal=False):
        return TnNode(name=name, action=action, arcs=tuple(arcs), terminal=terminal)

    def test_default_network_loads(self):
        tn = TransitionNetwork.load()
        assert tn.start == "greeting"
        assert "confirm" in tn.nodes

    def test_missing_start(self):
        with pytest.raises(TransitionNetworkError, match="start"):
            TransitionNetwork("nope", {"a": self._node(arcs=[Arc("a")])})

    def test_unknown_action(self):
        with pytest.raises(TransitionNetworkError, match="unknown action"):
            TransitionNetwork("a", {"a": self._node(action="fly", arcs=[Arc("a")])})

    def test_unknown_condition(self):
        with pytest.raises(TransitionNetworkError, match="unknown condition"):
            TransitionNetwork("a", {"a": self._node(
                arcs=[Arc("a", condition="sunny"), Arc("a")])})

    def test_dangling_target(self):
        with pytest.raises(TransitionNetworkError, match="does not exist"):
            TransitionNetwork("a", {"a": self._node(arcs=[Arc("b")])})

    def test_exactly_one_default_arc(self):
        with pytest.raises(TransitionNetworkError, match="default"):
            TransitionNetwork("a", {"a": self._node(
                arcs=[Arc("a", condition="complete")])})
        with pytest.raises(TransitionNetworkError, match="default"):
            TransitionNetwork("a", {"a": self._node(arcs=[Arc("a"), Arc("a")])})

    def test_default_arc_must_be_last(self):
        with pytest.raises(TransitionNetworkError, match="last"):
            TransitionNetwork("a", {"a": self._node(
                arcs=[Arc("a"), Arc("a", condition="complete")])})

    def test_terminal_node_has_no_arcs(self):
        with pytest.raises(TransitionNetworkError, match="terminal"):
            TransitionNetwork("a", {"a": self._node(terminal=True, arcs=[Arc("a")])})

    def test_auto_arc_must_be_alone(self):
        with pytest.raises(TransitionNetworkError, match="auto"):
            TransitionNetwork("a", {"a": self._node(
                arcs=[Arc("a", condition="complete", auto=True), Arc("a")])})

    def test_schema_version_checked(self, tmp_path):
        bad = tmp_path / "tn.yaml"
        bad.write_text("schema_version: 2\nstart: a\nnodes: {}\n")
        with pytest.raises(TransitionNetworkError, match="schema_version"):
            TransitionNetwork.load(bad)
