"""Command line front door: batch trials, canned replays, service, chat."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .channel import ChannelConfig
from .lexicon import data_path
from .replays import REPLAYS, run_replay
from .report import format_table, write_report
from .usersim import ABLATIONS, load_scenarios, run_trial


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="raildialog",
        description="Railway timetable dialogue engine and its trial harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    trial = sub.add_parser(
        "trial", help="run simulated dialogues through the error channel "
                      "and report the outcome metrics")
    trial.add_argument("--n", type=int, default=923,
                       help="number of dialogues (default: 923)")
    trial.add_argument("--seed", type=int, default=None,
                       help="base seed (default: the channel config's seed)")
    trial.add_argument("--channel-config", type=Path, default=None,
                       help="channel description JSON (default: shipped config)")
    trial.add_argument("--scenarios", type=Path, default=None,
                       help="scenario JSONL (default: shipped library)")
    trial.add_argument("--ablate", choices=ABLATIONS, default=None,
                       help="disable one mechanism for comparison runs")
    trial.add_argument("--transcripts-dir", type=Path, default=None,
                       help="write one transcript file per dialogue")
    trial.add_argument("--report-dir", type=Path, default=None,
                       help="write delimited records, summaries, and figures")

    replay = sub.add_parser(
        "replay", help="replay a reference dialogue from recognized frames")
    replay.add_argument("name", nargs="?", choices=sorted(REPLAYS),
                        help="omit to list the available replays")

    serve = sub.add_parser("serve", help="run the HTTP session service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8765)
    serve.add_argument("--static", type=Path, default=None,
                       help="also serve a built web client from this directory")

    chat = sub.add_parser(
        "chat", help="talk to the engine in the terminal (same envelope "
                     "schema as the HTTP service)")
    chat.add_argument("--seed", type=int, default=None)
    chat.add_argument("--clean", action="store_true",
                      help="disable channel noise")
    chat.add_argument("--show-state", action="store_true",
                      help="dump the state envelope after every turn")
    return parser


def cmd_trial(args) -> int:
    config = ChannelConfig.load(args.channel_config or
                                data_path("channel_default.json"))
    scenarios = load_scenarios(args.scenarios) if args.scenarios else None
    seed = args.seed if args.seed is not None else config.seed
    report, outcomes = run_trial(
        args.n, base_seed=seed, channel_config=config, scenarios=scenarios,
        ablate=args.ablate, transcripts_dir=args.transcripts_dir,
    )
    print(format_table(report), end="")
    if args.report_dir:
        paths = write_report(report, outcomes, args.report_dir)
        written = [paths["summary_json"], paths["summary_table"],
                   paths["outcomes_csv"], *paths["figures"]]
        print()
        for path in written:
            print(f"wrote {path}")
    return 0


def cmd_replay(args) -> int:
    if args.name is None:
        for name, replay in sorted(REPLAYS.items()):
            print(f"{name:24} {replay.title}")
        return 0
    print("\n".join(run_replay(args.name)))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import build_app

    static = args.static if args.static and args.static.is_dir() else None
    app = build_app(static_dir=static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


CHAT_HELP = """\
commands:
  /substitute SRC DST   corrupt the next utterance (e.g. /substitute ROMA ARONA)
  /delete SLOT          drop one slot from the next utterance
  /fail                 lose the next utterance entirely
  /state                print the full state envelope
  /quit                 hang up
"""


def cmd_chat(args) -> int:
    from .service import SessionManager

    manager = SessionManager()
    overrides = {"p_fail": 0.0, "p_delete": 0.0, "isolated_factor": 0.0,
                 "substitutions": [], "misparses": []} if args.clean else None
    env = manager.create(channel=overrides, seed=args.seed)
    sid = env["session_id"]
    print(CHAT_HELP)
    print(f"SYS  {env['act']['text']}")
    forced = None
    while not env["closed"]:
        try:
            line = input("YOU> ").strip()
        except (EOFError, KeyboardInterrupt):
            print()
            break
        if not line:
            continue
        if line.startswith("/"):
            parts = line.split()
            if parts[0] == "/quit":
                break
            if parts[0] == "/state":
                print(json.dumps(env["state"], indent=2))
                continue
            if parts[0] == "/fail":
                forced = {"kind": "fail"}
                print("(next utterance will be lost)")
                continue
            if parts[0] == "/substitute" and len(parts) == 3:
                forced = {"kind": "substitute",
                          "source": parts[1], "target": parts[2]}
                print(f"(next utterance: {parts[1]} -> {parts[2]})")
                continue
            if parts[0] == "/delete" and len(parts) == 2:
                forced = {"kind": "delete", "slot": parts[1].lower()}
                print(f"(next utterance: {parts[1]} dropped)")
                continue
            print(CHAT_HELP)
            continue
        env = manager.post(sid, text=line, corrupt=forced)
        forced = None
        trace = env["state"]["last_trace"]
        if trace["heard"] != trace["intended"]:
            heard = "<lost>" if trace["heard"] is None else \
                " ".join(f"{s}={v}" for s, v in trace["heard"])
            print(f"     (heard: {heard})")
        if env["state"]["last_event"]:
            print(f"     [{env['state']['last_event']['kind']}]")
        if args.show_state:
            print(json.dumps(env["state"], indent=2))
        for act in env["acts"]:
            print(f"SYS  {act['text']}")
    print("(session over)")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "trial": cmd_trial,
        "replay": cmd_replay,
        "serve": cmd_serve,
        "chat": cmd_chat,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
