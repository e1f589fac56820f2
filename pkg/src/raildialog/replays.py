"""Reference dialogues replayed from their recognized frames.

Each replay feeds the engine the post-recognition frames of one canned
conversation, channel bypassed, and renders the resulting transcript.
They demonstrate the four repair behaviours end to end: recovery from a
total recognition failure, a misheard destination corrected mid-
acquisition, a correction that tacitly confirms the repeated endpoint,
and a fused city/station misrecognition corrected late.
"""

from __future__ import annotations

from dataclasses import dataclass

from .engine import Engine
from .frames import SemanticFrame, Slot


@dataclass(frozen=True)
class ReplayTurn:
    frame: SemanticFrame | None
    note: str = ""


@dataclass(frozen=True)
class Replay:
    title: str
    turns: tuple[ReplayTurn, ...]


def _f(**kw) -> SemanticFrame:
    names = {
        "dep": Slot.DEPARTURE_CITY, "st": Slot.DEPARTURE_STATION,
        "arr": Slot.ARRIVAL_CITY, "date": Slot.DATE,
        "dtime": Slot.DEPARTURE_TIME, "hour": Slot.HOUR,
        "c": Slot.CONFIRMATION,
    }
    return SemanticFrame({names[k]: v for k, v in kw.items()})


REPLAYS: dict[str, Replay] = {
    "evening-train": Replay(
        title="recognition failure, then a batch answer with a stray 'no'",
        turns=(
            ReplayTurn(None, "nothing recognized"),
            ReplayTurn(_f(c="NO", dep="MILANO", arr="ROMA", dtime="EVENING")),
            ReplayTurn(_f(c="YES", hour="EIGHT")),
        ),
    ),
    "misheard-destination": Replay(
        title="destination misheard as a similar-sounding city, corrected "
              "while the system asks for the other endpoint",
        turns=(
            ReplayTurn(_f(arr="ARONA"), "caller actually said Roma"),
            ReplayTurn(_f(arr="ROMA")),
            ReplayTurn(_f(c="YES")),
            ReplayTurn(_f(dep="MILANO")),
            ReplayTurn(_f(c="YES")),
        ),
    ),
    "tacit-confirmation": Replay(
        title="correction that repeats the right endpoint, confirming it "
              "without a yes",
        turns=(
            ReplayTurn(_f(dep="MILANO", arr="ARONA"), "caller actually said Roma"),
            ReplayTurn(_f(dep="MILANO", arr="ROMA")),
            ReplayTurn(_f(c="YES")),
        ),
    ),
    "airport-station": Replay(
        title="city fused with its airport station, corrected late with the "
              "station refinement",
        turns=(
            ReplayTurn(_f(dep="PISA-AEROPORTO", date="TODAY", dtime="MORNING"),
                       "caller actually said Pisa"),
            ReplayTurn(_f(arr="FIRENZE")),
            ReplayTurn(_f(dep="PISA", st="CENTRALE")),
            ReplayTurn(_f(c="YES")),
        ),
    ),
}


def run_replay(name: str) -> list[str]:
    replay = REPLAYS[name]
    engine = Engine()
    lines = [f"# {name}: {replay.title}", ""]
    act = engine.start()
    lines.append(f"SYS  {act.text}")
    for turn in replay.turns:
        if turn.frame is None:
            said = "<nothing recognized>"
        else:
            said = " ".join(f"{s.value}={v}" for s, v in turn.frame.items())
        suffix = f"   ({turn.note})" if turn.note else ""
        lines.append(f"USER {said}{suffix}")
        before = len(engine.acts)
        trace = engine.observe(turn.frame)
        if trace.event is not None:
            lines.append(f"     [{trace.event.kind.value}]")
        # one observe can yield several acts (a result and the farewell)
        for act in engine.acts[before:]:
            lines.append(f"SYS  {act.text}")
    return lines
