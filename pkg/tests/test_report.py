"""Report artifacts: delimited records, summary renderings, figures."""

from __future__ import annotations

import csv
import json

from raildialog.channel import ChannelConfig
from raildialog.lexicon import data_path
from raildialog.report import OUTCOME_FIELDS, format_table, write_report
from raildialog.usersim import run_trial


def run_small_trial():
    cfg = ChannelConfig.load(data_path("channel_default.json"))
    return run_trial(24, base_seed=4, channel_config=cfg)


class TestReportArtifacts:
    def test_everything_is_written(self, tmp_path):
        report, outcomes = run_small_trial()
        paths = write_report(report, outcomes, tmp_path)
        assert paths["summary_json"].exists()
        assert paths["summary_table"].exists()
        assert paths["outcomes_csv"].exists()
        assert len(paths["figures"]) == 3
        for figure in paths["figures"]:
            blob = figure.read_bytes()
            assert blob.startswith(b"\x89PNG"), figure

    def test_csv_carries_every_outcome(self, tmp_path):
        report, outcomes = run_small_trial()
        write_report(report, outcomes, tmp_path)
        with (tmp_path / "outcomes.csv").open(newline="", encoding="utf-8") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == len(outcomes)
        assert tuple(rows[0]) == OUTCOME_FIELDS
        for row, outcome in zip(rows, outcomes):
            assert int(row["index"]) == outcome.index
            assert row["scenario"] == outcome.scenario
            assert int(row["success"]) == int(outcome.success)
            assert int(row["continuous_turns"]) == outcome.continuous_turns
        total_repairs = sum(int(r["implicature_repair"]) for r in rows)
        assert total_repairs == dict(report.event_totals).get("implicature_repair", 0)

    def test_summary_json_is_byte_stable(self, tmp_path):
        report, outcomes = run_small_trial()
        write_report(report, outcomes, tmp_path / "a")
        write_report(*run_small_trial(), tmp_path / "b")
        first = (tmp_path / "a" / "summary.json").read_bytes()
        second = (tmp_path / "b" / "summary.json").read_bytes()
        assert first == second
        assert json.loads(first) == report.to_dict()

    def test_table_reports_the_headline_numbers(self):
        report, _ = run_small_trial()
        table = format_table(report)
        assert f"{report.success_rate:.4f}" in table
        assert f"{report.mean_continuous_utterances:.3f}" in table
        assert report.reproducibility_hash in table
        for name, _, _ in report.per_scenario:
            assert name in table
