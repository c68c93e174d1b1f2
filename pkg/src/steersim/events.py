"""Positioned, timestamped event records for causality auditing.

An event log is stored column-wise (trial id, label, position, time) so that
million-trial sessions stay cheap to build and audit; individual events
materialize on access. The JSON Lines format is one event per line with
fields {trial_id, label, x_m, t_ns}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Iterator, TextIO

import numpy as np
from numpy.typing import NDArray

from .errors import MalformedInputError


class EventLabel(IntEnum):
    PAIR_EMISSION = 0
    QRNG_CHOICE_START = 1
    QRNG_CHOICE_READY = 2
    SETTING_SENT = 3
    ALICE_KNOWS_SETTING = 4
    ALICE_MEASUREMENT = 5
    ALICE_REPORT = 6
    BOB_MEASUREMENT_START = 7
    BOB_MEASUREMENT_END = 8
    BOB_REGISTRATION = 9


LABEL_NAMES = {label: label.name.lower() for label in EventLabel}
LABELS_BY_NAME = {name: label for label, name in LABEL_NAMES.items()}


@dataclass(frozen=True)
class SpacetimeEvent:
    trial_id: int
    label: EventLabel
    x_m: float
    t_ns: float

    def to_json(self) -> dict:
        return {
            "trial_id": self.trial_id,
            "label": LABEL_NAMES[self.label],
            "x_m": self.x_m,
            "t_ns": self.t_ns,
        }


class EventLog:
    """Columnar, append-ordered store of spacetime events."""

    def __init__(
        self,
        trial_id: NDArray[np.int64],
        label: NDArray[np.int8],
        x_m: NDArray[np.float64],
        t_ns: NDArray[np.float64],
    ):
        self.trial_id = np.asarray(trial_id, dtype=np.int64)
        self.label = np.asarray(label, dtype=np.int8)
        self.x_m = np.asarray(x_m, dtype=float)
        self.t_ns = np.asarray(t_ns, dtype=float)
        n = len(self.trial_id)
        if not (len(self.label) == len(self.x_m) == len(self.t_ns) == n):
            raise MalformedInputError("event log columns have mismatched lengths")

    def __len__(self) -> int:
        return len(self.trial_id)

    def __getitem__(self, i: int) -> SpacetimeEvent:
        return SpacetimeEvent(
            trial_id=int(self.trial_id[i]),
            label=EventLabel(int(self.label[i])),
            x_m=float(self.x_m[i]),
            t_ns=float(self.t_ns[i]),
        )

    def __iter__(self) -> Iterator[SpacetimeEvent]:
        for i in range(len(self)):
            yield self[i]

    @classmethod
    def from_events(cls, events: list[SpacetimeEvent]) -> "EventLog":
        return cls(
            trial_id=np.array([e.trial_id for e in events], dtype=np.int64),
            label=np.array([int(e.label) for e in events], dtype=np.int8),
            x_m=np.array([e.x_m for e in events], dtype=float),
            t_ns=np.array([e.t_ns for e in events], dtype=float),
        )

    def select(self, label: EventLabel) -> tuple[NDArray, NDArray, NDArray]:
        """(trial_id, x_m, t_ns) arrays of all events with the given label."""
        mask = self.label == int(label)
        return self.trial_id[mask], self.x_m[mask], self.t_ns[mask]

    def write_jsonl(self, target: str | Path | TextIO) -> None:
        if hasattr(target, "write"):
            self._write(target)  # type: ignore[arg-type]
        else:
            with open(target, "w") as fh:
                self._write(fh)

    @staticmethod
    def _fmt(value: float) -> str:
        # json.loads accepts the Infinity literal; repr(inf) would not parse
        if value == float("inf"):
            return "Infinity"
        if value == float("-inf"):
            return "-Infinity"
        return repr(value)

    def _write(self, fh: TextIO) -> None:
        names = [LABEL_NAMES[EventLabel(code)] for code in range(len(EventLabel))]
        for i in range(len(self)):
            fh.write(
                '{"trial_id": %d, "label": "%s", "x_m": %s, "t_ns": %s}\n'
                % (self.trial_id[i], names[self.label[i]], self._fmt(float(self.x_m[i])), self._fmt(float(self.t_ns[i])))
            )

    @classmethod
    def read_jsonl(cls, path: str | Path) -> "EventLog":
        trial_ids: list[int] = []
        labels: list[int] = []
        xs: list[float] = []
        ts: list[float] = []
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    trial_ids.append(int(rec["trial_id"]))
                    labels.append(int(LABELS_BY_NAME[rec["label"]]))
                    xs.append(float(rec["x_m"]))
                    ts.append(float(rec["t_ns"]))
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise MalformedInputError(f"{path}: line {lineno}: {exc}") from None
        return cls(
            trial_id=np.array(trial_ids, dtype=np.int64),
            label=np.array(labels, dtype=np.int8),
            x_m=np.array(xs, dtype=float),
            t_ns=np.array(ts, dtype=float),
        )
