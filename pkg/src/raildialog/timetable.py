"""Train timetable fixture and the lookup the dialogue engine queries.

The table is a small flat CSV committed with the package.  Rows carry
display strings for announcement text plus date/time token sets used for
matching; an empty token set means the row serves any date or time.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

from .lexicon import Lexicon, default_lexicon, data_path


class UnknownPlace(Exception):
    """A place name outside the gazetteer reached the timetable."""


@dataclass(frozen=True)
class TrainSolution:
    train_class: str
    train_id: str
    departure_city: str
    departure_station: str
    departure_time: str
    arrival_city: str
    arrival_station: str
    arrival_time: str
    dates: tuple[str, ...]  # serving date tokens; empty = any date
    times: tuple[str, ...]  # serving time tokens; empty = any time


_COLUMNS = [
    "train_class", "train_id",
    "departure_city", "departure_station", "departure_time",
    "arrival_city", "arrival_station", "arrival_time",
    "dates", "times",
]


class Timetable:
    def __init__(self, rows: tuple[TrainSolution, ...], lexicon: Lexicon):
        self._rows = rows
        self._lexicon = lexicon

    @property
    def rows(self) -> tuple[TrainSolution, ...]:
        return self._rows

    @classmethod
    def load(cls, path: str | Path, lexicon: Lexicon | None = None) -> "Timetable":
        lexicon = lexicon or default_lexicon()
        rows: list[TrainSolution] = []
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames != _COLUMNS:
                raise ValueError(f"unexpected timetable columns: {reader.fieldnames}")
            for record in reader:
                row = TrainSolution(
                    train_class=record["train_class"],
                    train_id=record["train_id"],
                    departure_city=record["departure_city"],
                    departure_station=record["departure_station"],
                    departure_time=record["departure_time"],
                    arrival_city=record["arrival_city"],
                    arrival_station=record["arrival_station"],
                    arrival_time=record["arrival_time"],
                    dates=tuple(t for t in record["dates"].split("|") if t),
                    times=tuple(t for t in record["times"].split("|") if t),
                )
                for place in (
                    row.departure_city, row.departure_station,
                    row.arrival_city, row.arrival_station,
                ):
                    if place and not lexicon.knows_place(place):
                        raise UnknownPlace(f"{place!r} in timetable but not in gazetteer")
                rows.append(row)
        return cls(tuple(rows), lexicon)

    def serialize(self) -> str:
        """Canonical CSV text; loading then serializing is byte-identical."""
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(_COLUMNS)
        for r in self._rows:
            writer.writerow([
                r.train_class, r.train_id,
                r.departure_city, r.departure_station, r.departure_time,
                r.arrival_city, r.arrival_station, r.arrival_time,
                "|".join(r.dates), "|".join(r.times),
            ])
        return out.getvalue()

    def query(
        self,
        departure_city: str,
        arrival_city: str,
        departure_station: str | None = None,
        date: str | None = None,
        times: tuple[str, ...] = (),
    ) -> list[TrainSolution]:
        """Rows serving the trip, in fixture order; an empty list is a legal answer."""
        for place in (departure_city, arrival_city, departure_station):
            if place and not self._lexicon.knows_place(place):
                raise UnknownPlace(f"{place!r} is not in the gazetteer")
        hits: list[TrainSolution] = []
        for row in self._rows:
            if row.departure_city != departure_city or row.arrival_city != arrival_city:
                continue
            if departure_station and row.departure_station != departure_station:
                continue
            if date and row.dates and date not in row.dates:
                continue
            if times and row.times and not any(t in row.times for t in times):
                continue
            hits.append(row)
        return hits


def default_timetable() -> Timetable:
    return Timetable.load(data_path("timetable.csv"))
