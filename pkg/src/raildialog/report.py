"""Trial reporting: delimited records, a summary table, and rendered figures.

Everything here is a pure function of a finished trial, so a report can be
regenerated from the same outcomes at any time and compare byte-identical.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .acts import EventKind
from .usersim import DialogueOutcome, MetricsReport

EVENT_COLUMNS = tuple(kind.value for kind in EventKind)

OUTCOME_FIELDS = (
    "index", "scenario", "success", "reason",
    "user_turns", "continuous_turns", "isolated_turns",
) + EVENT_COLUMNS


def outcome_rows(outcomes: list[DialogueOutcome]):
    for o in outcomes:
        events = dict(o.events)
        yield {
            "index": o.index,
            "scenario": o.scenario,
            "success": int(o.success),
            "reason": o.reason,
            "user_turns": o.user_turns,
            "continuous_turns": o.continuous_turns,
            "isolated_turns": o.isolated_turns,
            **{kind: events.get(kind, 0) for kind in EVENT_COLUMNS},
        }


def write_outcomes_csv(outcomes: list[DialogueOutcome], path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=OUTCOME_FIELDS)
        writer.writeheader()
        for row in outcome_rows(outcomes):
            writer.writerow(row)


def format_table(report: MetricsReport) -> str:
    failures = ", ".join(f"{k} {v}" for k, v in report.failure_reasons) or "none"
    events = ", ".join(f"{k} {v}" for k, v in report.event_totals) or "none"
    lines = [
        f"dialogues                   {report.n_dialogues}",
        f"base seed                   {report.base_seed}",
        f"ablation                    {report.ablation}",
        f"transaction success rate    {report.success_rate:.4f}",
        f"mean continuous utterances  {report.mean_continuous_utterances:.3f}",
        f"isolated-word utterances    {report.isolated_utterances}",
        f"failures                    {failures}",
        f"events                      {events}",
        f"reproducibility hash        {report.reproducibility_hash}",
        "",
        f"{'scenario':<28} {'dialogues':>9} {'successes':>9} {'rate':>7}",
    ]
    for name, n, successes in report.per_scenario:
        lines.append(f"{name:<28} {n:>9} {successes:>9} {successes / n:>7.3f}")
    return "\n".join(lines) + "\n"


def render_figures(
    report: MetricsReport, outcomes: list[DialogueOutcome], out_dir: Path
) -> list[Path]:
    paths = []

    fig, ax = plt.subplots(figsize=(7, 4))
    names = [name for name, _, _ in report.per_scenario]
    rates = [s / n for _, n, s in report.per_scenario]
    ax.barh(names, rates, color="#4878a8")
    ax.set_xlim(0, 1)
    ax.set_xlabel("transaction success rate")
    ax.invert_yaxis()
    paths.append(_save(fig, out_dir / "success_by_scenario.png"))

    fig, ax = plt.subplots(figsize=(7, 4))
    turns = [o.continuous_turns for o in outcomes]
    ax.hist(turns, bins=range(0, max(turns) + 2), color="#4878a8",
            edgecolor="white")
    ax.set_xlabel("continuous-speech utterances per dialogue")
    ax.set_ylabel("dialogues")
    paths.append(_save(fig, out_dir / "utterance_histogram.png"))

    fig, ax = plt.subplots(figsize=(7, 4))
    totals = dict(report.event_totals)
    ax.bar(EVENT_COLUMNS, [totals.get(k, 0) for k in EVENT_COLUMNS],
           color="#4878a8")
    ax.set_ylabel("events across the trial")
    ax.tick_params(axis="x", rotation=30)
    paths.append(_save(fig, out_dir / "event_totals.png"))
    return paths


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def write_report(
    report: MetricsReport, outcomes: list[DialogueOutcome], out_dir: str | Path
) -> dict[str, Path]:
    """Write the delimited records, both report renderings, and the figures."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.json").write_text(report.to_json(), "utf-8")
    (out / "summary.txt").write_text(format_table(report), "utf-8")
    write_outcomes_csv(outcomes, out / "outcomes.csv")
    figures = render_figures(report, outcomes, out)
    return {
        "summary_json": out / "summary.json",
        "summary_table": out / "summary.txt",
        "outcomes_csv": out / "outcomes.csv",
        "figures": figures,
    }
