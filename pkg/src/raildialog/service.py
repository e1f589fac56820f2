"""Live dialogue sessions behind a JSON envelope, plus the HTTP wiring.

Every reply is a SessionEnvelope: the pending system act, a full state
dump (slot store, active expectations, focus tree, last event and last
transmission), and the session's channel summary.  Clients render from
the envelope only; nothing here needs a second query to draw an
inspector.  Turn handling is serialized per session: a post that lands
while another is in flight is rejected as busy rather than queued.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import asdict, dataclass, field
from random import Random

from .acts import SystemAct
from .channel import ChannelConfig, NoisyChannel, TransmissionLog
from .engine import Engine, EngineConfig, TransitionNetwork
from .expectations import Expectation
from .frames import SemanticFrame, Slot
from .keywords import ParseContext, UnparseableInput, parse_utterance
from .lexicon import data_path, default_lexicon
from .timetable import Timetable, default_timetable

SCHEMA_VERSION = 1


class SessionError(Exception):
    pass


class UnknownSession(SessionError):
    pass


class ClosedSession(SessionError):
    pass


class SessionBusy(SessionError):
    pass


class CapacityExceeded(SessionError):
    pass


class BadDirective(SessionError):
    """A forced-corruption directive is malformed."""


def _load_channel_config(overrides: dict | None) -> ChannelConfig:
    raw = json.loads(data_path("channel_default.json").read_text("utf-8"))
    overrides = dict(overrides or {})
    # pins every confusable pair to one probability without having to
    # restate the pair list; substitution_p=0 keeps the catalog visible
    # in the envelope while silencing the draws
    pin = overrides.pop("substitution_p", None)
    for key, value in overrides.items():
        if key not in raw:
            raise BadDirective(f"unknown channel override {key!r}")
        raw[key] = value
    if pin is not None:
        if not isinstance(pin, (int, float)) or isinstance(pin, bool) \
                or not 0.0 <= pin <= 1.0:
            raise BadDirective("substitution_p must be a number in [0, 1]")
        raw["substitutions"] = [
            {**pair, "p": pin} for pair in raw["substitutions"]
        ]
    return ChannelConfig.from_dict(raw)


def _frame_pairs(frame: SemanticFrame | None) -> list[list[str]] | None:
    if frame is None:
        return None
    return [[s.value, v] for s, v in frame.items()]


def _act_payload(act: SystemAct) -> dict:
    return {
        "kind": act.kind.value,
        "text": act.text,
        "template_id": act.template_id,
        "requested": act.requested.value if act.requested else None,
        "isolated": act.isolated,
        "focused": [[s.value, v] for s, v in act.focused],
        "solutions": [asdict(s) for s in act.solutions],
        "query": [[k, v] for k, v in act.query],
        "retry_kind": act.retry_kind.value if act.retry_kind else None,
    }


def _expectation_payload(exp: Expectation) -> dict:
    return {
        "kind": exp.kind.value,
        "focused": [[s.value, v] for s, v in exp.focused],
        "requested": exp.requested.value if exp.requested else None,
        "implicature": exp.implicature,
    }


def _log_payload(log: TransmissionLog | None) -> dict | None:
    if log is None:
        return None
    return {
        "failed": log.failed,
        "deleted": [s.value for s in log.deleted],
        "substituted": [[s.value, a, b] for s, a, b in log.substituted],
        "reverted": [[s.value, a, b] for s, a, b in log.reverted],
        "misparse_applied": log.misparse_applied,
        "dropped": [s.value for s in log.dropped],
    }


@dataclass
class _LastTurn:
    text: str | None
    intended: SemanticFrame | None
    heard: SemanticFrame | None
    unparseable: bool
    forced: dict | None
    log: TransmissionLog | None


@dataclass
class _Session:
    sid: str
    engine: Engine
    channel: NoisyChannel
    config: ChannelConfig
    rng: Random
    transcript: list[str] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    ended: bool = False
    last_turn: _LastTurn | None = None
    # everything the system said in the latest operation; one observe can
    # produce several acts (a result and the farewell)
    last_acts: list[SystemAct] = field(default_factory=list)


class SessionManager:
    """Owns the live sessions; every public method returns an envelope."""

    def __init__(self, capacity: int = 64,
                 timetable: Timetable | None = None,
                 network: TransitionNetwork | None = None):
        self._capacity = capacity
        self._timetable = timetable or default_timetable()
        self._network = network or TransitionNetwork.load()
        self._sessions: dict[str, _Session] = {}
        self._registry = threading.Lock()

    # --- lifecycle -----------------------------------------------------------

    def create(self, channel: dict | None = None, seed: int | None = None) -> dict:
        config = _load_channel_config(channel)
        engine = Engine(timetable=self._timetable, network=self._network,
                        config=EngineConfig())
        sid = uuid.uuid4().hex[:12]
        rng = Random(str(seed) if seed is not None else f"{config.seed}:{sid}")
        session = _Session(
            sid=sid, engine=engine, channel=NoisyChannel(config),
            config=config, rng=rng,
        )
        with self._registry:
            if len(self._sessions) >= self._capacity:
                raise CapacityExceeded(f"at most {self._capacity} sessions")
            self._sessions[sid] = session
        act = engine.start()
        session.last_acts = [act]
        session.transcript.append(f"SYS  {act.text}")
        return self.envelope(session)

    def get(self, sid: str) -> dict:
        return self.envelope(self._find(sid))

    def close(self, sid: str) -> dict:
        session = self._find(sid)
        session.ended = True
        return self.envelope(session)

    def transcript(self, sid: str) -> str:
        return "\n".join(self._find(sid).transcript) + "\n"

    def post(self, sid: str, text: str | None = None,
             frame: dict | None = None, corrupt: dict | None = None) -> dict:
        session = self._find(sid)
        if not session.lock.acquire(blocking=False):
            raise SessionBusy(sid)
        try:
            if session.ended or session.engine.closed:
                raise ClosedSession(sid)
            return self._run_turn(session, text, frame, corrupt)
        finally:
            session.lock.release()

    # --- turn handling -------------------------------------------------------

    def _run_turn(self, session: _Session, text: str | None,
                  frame: dict | None, corrupt: dict | None) -> dict:
        engine = session.engine
        intended: SemanticFrame | None = None
        unparseable = False
        if frame is not None:
            intended = SemanticFrame({Slot(k): v for k, v in frame.items()})
        elif text is not None:
            try:
                intended = parse_utterance(
                    text, ParseContext.for_act(engine.current_act))
            except UnparseableInput:
                unparseable = True

        log: TransmissionLog | None = None
        if unparseable or intended is None:
            received = None
        elif corrupt is not None:
            received, log = _apply_directive(corrupt, intended)
        else:
            received, log = session.channel.transmit(
                intended, session.rng,
                predictions=engine.predictions(),
                isolated=engine.current_act.isolated,
            )
        acts_before = len(engine.acts)
        engine.observe(received)
        session.last_acts = list(engine.acts[acts_before:])
        session.last_turn = _LastTurn(
            text=text, intended=intended, heard=received,
            unparseable=unparseable, forced=corrupt, log=log,
        )
        self._record(session, text, intended, received, session.last_acts)
        return self.envelope(session)

    def _record(self, session: _Session, text, intended, received, acts) -> None:
        said = text if text is not None else \
            " ".join(f"{s.value}={v}" for s, v in (intended.items() if intended else ()))
        session.transcript.append(f"USER {said}")
        heard = "<lost>" if received is None else \
            " ".join(f"{s.value}={v}" for s, v in received.items()) or "<empty>"
        if intended is None or received is None or received.items() != intended.items():
            session.transcript.append(f"     (heard: {heard})")
        for act in acts:
            session.transcript.append(f"SYS  {act.text}")

    # --- envelope ------------------------------------------------------------

    def envelope(self, session: _Session) -> dict:
        engine = session.engine
        last = session.last_turn
        return {
            "schema_version": SCHEMA_VERSION,
            "session_id": session.sid,
            "turn": engine.turns_taken,
            "closed": session.ended or engine.closed,
            "failed": engine.failed,
            "act": _act_payload(engine.current_act),
            "acts": [_act_payload(a) for a in session.last_acts],
            "state": {
                **engine.snapshot(),
                "expectations": [
                    _expectation_payload(e) for e in engine.current_expectations
                ],
                "last_trace": None if last is None else {
                    "text": last.text,
                    "intended": _frame_pairs(last.intended),
                    "heard": _frame_pairs(last.heard),
                    "unparseable": last.unparseable,
                    "forced": last.forced,
                    "channel": _log_payload(last.log),
                },
            },
            "channel": {
                "p_fail": session.config.p_fail,
                "p_delete": session.config.p_delete,
                "isolated_factor": session.config.isolated_factor,
                "substitutions": [
                    [s.source, s.target, s.p] for s in session.config.substitutions
                ],
            },
        }

    def _find(self, sid: str) -> _Session:
        with self._registry:
            session = self._sessions.get(sid)
        if session is None:
            raise UnknownSession(sid)
        return session


def _apply_directive(
    directive: dict, intended: SemanticFrame
) -> tuple[SemanticFrame | None, TransmissionLog]:
    """A forced corruption replaces the channel draw for this one turn."""
    lexicon = default_lexicon()
    kind = directive.get("kind")
    if kind == "fail":
        return None, TransmissionLog(failed=True)
    if kind == "substitute":
        try:
            source = str(directive["source"]).upper()
            target = str(directive["target"]).upper()
        except KeyError as exc:
            raise BadDirective(f"substitute needs {exc.args[0]}") from None
        if lexicon.word_class(target) is None:
            raise BadDirective(f"unknown token {target!r}")
        hits = []
        bindings = {}
        for slot, value in intended.items():
            if value == source:
                bindings[slot] = target
                hits.append((slot, source, target))
            else:
                bindings[slot] = value
        return SemanticFrame(bindings), TransmissionLog(substituted=tuple(hits))
    if kind == "delete":
        try:
            slot = Slot(directive["slot"])
        except KeyError:
            raise BadDirective("delete needs a slot") from None
        except ValueError as exc:
            raise BadDirective(str(exc)) from None
        bindings = {s: v for s, v in intended.items() if s is not slot}
        deleted = (slot,) if slot in intended else ()
        return SemanticFrame(bindings), TransmissionLog(deleted=deleted)
    raise BadDirective(f"unknown directive kind {kind!r}")


# --- HTTP wiring ----------------------------------------------------------------


def build_app(manager: SessionManager | None = None, static_dir=None):
    from fastapi import Body, FastAPI, HTTPException
    from fastapi.responses import JSONResponse, PlainTextResponse

    manager = manager or SessionManager()
    app = FastAPI(title="raildialog session service")

    def translate(exc: SessionError) -> HTTPException:
        status = {
            UnknownSession: 404,
            ClosedSession: 409,
            SessionBusy: 409,
            CapacityExceeded: 503,
            BadDirective: 422,
        }[type(exc)]
        codes = {
            UnknownSession: "unknown_session",
            ClosedSession: "closed_session",
            SessionBusy: "session_busy",
            CapacityExceeded: "capacity_exceeded",
            BadDirective: "bad_directive",
        }
        return HTTPException(status, {"error": codes[type(exc)],
                                      "message": str(exc)})

    @app.post("/api/sessions", status_code=201)
    def create_session(payload: dict = Body(default={})):
        try:
            return manager.create(channel=payload.get("channel"),
                                  seed=payload.get("seed"))
        except SessionError as exc:
            raise translate(exc) from None

    @app.get("/api/sessions/{sid}")
    def get_session(sid: str):
        try:
            return manager.get(sid)
        except SessionError as exc:
            raise translate(exc) from None

    @app.post("/api/sessions/{sid}/utterance")
    def post_utterance(sid: str, payload: dict = Body(...)):
        try:
            return manager.post(
                sid,
                text=payload.get("text"),
                frame=payload.get("frame"),
                corrupt=payload.get("corrupt"),
            )
        except SessionError as exc:
            raise translate(exc) from None
        except ValueError as exc:
            raise HTTPException(
                422, {"error": "bad_frame", "message": str(exc)}) from None

    @app.post("/api/sessions/{sid}/close")
    def close_session(sid: str):
        try:
            return manager.close(sid)
        except SessionError as exc:
            raise translate(exc) from None

    @app.get("/api/sessions/{sid}/transcript", response_class=PlainTextResponse)
    def download_transcript(sid: str):
        try:
            return manager.transcript(sid)
        except SessionError as exc:
            raise translate(exc) from None

    @app.get("/api/grammar")
    def grammar():
        return JSONResponse(
            json.loads(data_path("keyword_grammar.json").read_text("utf-8")))

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    return app
