"""Stochastic recognition-error channel between caller and engine.

A transmission degrades a semantic frame in a fixed order: total failure,
per-binding deletion, directed value substitution, then pattern-based
misparse rules.  Lexical predictions constrain the outcome: a corruption
whose product falls outside the predicted word classes is reverted to the
intended value.  The constraint itself consumes no randomness, so runs
with and without predictions draw the same stream and predictions can
only ever remove corruptions.

Isolated-word turns scale every error probability by a reliability
factor, reflecting the easier recognition task.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from random import Random

from .frames import SemanticFrame, Slot
from .lexicon import Lexicon, WordClass, default_lexicon, data_path


class ChannelConfigError(Exception):
    """The channel description is malformed."""


@dataclass(frozen=True)
class Substitution:
    source: str
    target: str
    p: float


@dataclass(frozen=True)
class MisparseRule:
    when: tuple[tuple[Slot, str], ...]
    put: tuple[tuple[Slot, str], ...]
    drop: tuple[Slot, ...]
    p: float


@dataclass(frozen=True)
class TransmissionLog:
    failed: bool = False
    deleted: tuple[Slot, ...] = ()
    substituted: tuple[tuple[Slot, str, str], ...] = ()
    reverted: tuple[tuple[Slot, str, str], ...] = ()
    misparse_applied: int | None = None
    misparse_reverted: int | None = None
    dropped: tuple[Slot, ...] = ()

    @property
    def clean(self) -> bool:
        return not (self.failed or self.deleted or self.substituted
                    or self.misparse_applied is not None)


def _check_p(p, where: str) -> float:
    if not isinstance(p, (int, float)) or not 0.0 <= p <= 1.0:
        raise ChannelConfigError(f"{where}: probability {p!r} outside [0, 1]")
    return float(p)


@dataclass(frozen=True)
class ChannelConfig:
    p_fail: float
    p_delete: float
    isolated_factor: float
    substitutions: tuple[Substitution, ...]
    misparses: tuple[MisparseRule, ...]
    seed: int

    @classmethod
    def from_dict(cls, raw: dict, lexicon: Lexicon | None = None) -> "ChannelConfig":
        lexicon = lexicon or default_lexicon()
        if raw.get("schema_version") != 1:
            raise ChannelConfigError(
                f"unsupported schema_version {raw.get('schema_version')!r}")

        def classify(value: str, where: str) -> WordClass:
            cls_ = lexicon.word_class(value)
            if cls_ is None:
                raise ChannelConfigError(f"{where}: unknown token {value!r}")
            return cls_

        subs: list[Substitution] = []
        seen: set[str] = set()
        for i, entry in enumerate(raw.get("substitutions", ())):
            where = f"substitutions[{i}]"
            source, target = entry["from"], entry["to"]
            if source in seen:
                raise ChannelConfigError(f"{where}: duplicate source {source!r}")
            seen.add(source)
            if classify(source, where) is not classify(target, where):
                raise ChannelConfigError(
                    f"{where}: {source!r} and {target!r} are different word classes")
            subs.append(Substitution(source, target, _check_p(entry["p"], where)))

        rules: list[MisparseRule] = []
        for i, entry in enumerate(raw.get("misparses", ())):
            where = f"misparses[{i}]"
            when = tuple(sorted(
                ((Slot(k), v) for k, v in entry["when"].items()),
                key=lambda kv: kv[0].value))
            put = tuple(sorted(
                ((Slot(k), v) for k, v in entry.get("set", {}).items()),
                key=lambda kv: kv[0].value))
            if not put:
                raise ChannelConfigError(f"{where}: empty 'set'")
            for _, v in when + put:
                classify(v, where)
            drop = tuple(Slot(s) for s in entry.get("drop", ()))
            rules.append(MisparseRule(when, put, drop, _check_p(entry["p"], where)))

        return cls(
            p_fail=_check_p(raw["p_fail"], "p_fail"),
            p_delete=_check_p(raw["p_delete"], "p_delete"),
            isolated_factor=_check_p(raw["isolated_factor"], "isolated_factor"),
            substitutions=tuple(subs),
            misparses=tuple(rules),
            seed=int(raw["seed"]),
        )

    @classmethod
    def load(cls, path: str | Path, lexicon: Lexicon | None = None) -> "ChannelConfig":
        raw = json.loads(Path(path).read_text("utf-8"))
        return cls.from_dict(raw, lexicon)


def default_channel_config() -> ChannelConfig:
    return ChannelConfig.load(data_path("channel_default.json"))


def ablation_channel_config() -> ChannelConfig:
    return ChannelConfig.load(data_path("channel_ablation.json"))


class NoisyChannel:
    def __init__(self, config: ChannelConfig, lexicon: Lexicon | None = None):
        self.config = config
        self._lexicon = lexicon or default_lexicon()
        self._by_source = {s.source: s for s in config.substitutions}

    def transmit(
        self,
        frame: SemanticFrame,
        rng: Random,
        predictions: frozenset[WordClass] | None = None,
        isolated: bool = False,
    ) -> tuple[SemanticFrame | None, TransmissionLog]:
        """Degrade one caller utterance; None models a total recognition failure.

        The draw sequence depends only on the intended frame and the
        configuration, never on `predictions`.
        """
        cfg = self.config
        factor = cfg.isolated_factor if isolated else 1.0

        if rng.random() < cfg.p_fail * factor:
            return None, TransmissionLog(failed=True)

        bindings = frame.items()
        deleted = tuple(s for s, _ in bindings if rng.random() < cfg.p_delete * factor)
        current = {s: v for s, v in bindings if s not in deleted}

        substituted: list[tuple[Slot, str, str]] = []
        reverted: list[tuple[Slot, str, str]] = []
        for slot, value in list(current.items()):
            pair = self._by_source.get(value)
            if pair is None:
                continue
            if rng.random() >= pair.p * factor:
                continue
            target_class = self._lexicon.word_class(pair.target)
            if predictions is not None and target_class not in predictions:
                reverted.append((slot, value, pair.target))
                continue
            current[slot] = pair.target
            substituted.append((slot, value, pair.target))

        misparse_applied: int | None = None
        misparse_reverted: int | None = None
        dropped: tuple[Slot, ...] = ()
        for i, rule in enumerate(cfg.misparses):
            draw = rng.random()  # always drawn, keeps streams aligned
            if misparse_applied is not None or misparse_reverted is not None:
                continue
            if draw >= rule.p * factor:
                continue
            if not all(current.get(s) == v for s, v in rule.when):
                continue
            products_fit = predictions is None or all(
                self._lexicon.word_class(v) in predictions for _, v in rule.put
            )
            if not products_fit:
                misparse_reverted = i
                continue
            for slot, value in rule.put:
                current[slot] = value
            dropped = tuple(s for s in rule.drop if s in current)
            for slot in dropped:
                del current[slot]
            misparse_applied = i

        log = TransmissionLog(
            deleted=deleted,
            substituted=tuple(substituted),
            reverted=tuple(reverted),
            misparse_applied=misparse_applied,
            misparse_reverted=misparse_reverted,
            dropped=dropped,
        )
        return SemanticFrame(current), log
