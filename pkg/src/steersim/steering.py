"""Steering-inequality evaluation from tallied counts.

The steering value is S = T_X + T_Y + T_Z with

    T_s = sum_a P(a | s) * <B>^2_{s, a}

where a runs over Alice's ternary outcomes {+1, -1, 0}, P(a|s) is her
outcome probability among Bob-conclusive events, and <B>_{s,a} is Bob's
conditional mean in the subensemble where Alice reported a. An LHS model
with mutually unbiased measurements obeys S <= 1; counting Alice's
inconclusive outcomes inside T_s is what removes the fair-sampling
assumption. No background subtraction is applied anywhere.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
from numpy.typing import NDArray

from .errors import InsufficientDataError, InvalidParameterError, MalformedInputError
from .model import OUTCOMES_ALICE, OUTCOMES_BOB, SETTINGS, JointDistribution, Setting

# Tally axis order: counts[setting, alice outcome, bob outcome]
ALICE_INDEX = {1: 0, -1: 1, 0: 2}
BOB_INDEX = {1: 0, -1: 1}


@dataclass
class CountTally:
    """Sufficient statistic for the steering value.

    counts[s, a, b] holds the number of Bob-conclusive events with setting s,
    Alice outcome a in (+1, -1, 0) and Bob outcome b in (+1, -1). Entries are
    floats so that exact (probability-weighted) tallies evaluate through the
    same code path; session tallies hold integers. bob_inconclusive counts
    Bob's own no-detection trials per setting and is diagnostic only.
    """

    counts: NDArray[np.float64] = field(default_factory=lambda: np.zeros((3, 3, 2)))
    bob_inconclusive: NDArray[np.float64] = field(default_factory=lambda: np.zeros(3))
    n_discarded: int = 0

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=float)
        self.bob_inconclusive = np.asarray(self.bob_inconclusive, dtype=float)
        if self.counts.shape != (3, 3, 2):
            raise InvalidParameterError(f"tally counts must be (3, 3, 2), got {self.counts.shape}")
        if (self.counts < 0).any() or (self.bob_inconclusive < 0).any():
            raise InvalidParameterError("tally counts must be nonnegative")

    def n(self, s: Setting, a: int, b: int) -> float:
        return float(self.counts[s, ALICE_INDEX[a], BOB_INDEX[b]])

    def add(self, s: Setting, a: int, b: int, count: float = 1.0) -> None:
        self.counts[s, ALICE_INDEX[a], BOB_INDEX[b]] += count

    def total(self, s: Setting) -> float:
        return float(self.counts[s].sum())

    def scaled(self, factor: float) -> "CountTally":
        return CountTally(
            counts=self.counts * factor,
            bob_inconclusive=self.bob_inconclusive * factor,
            n_discarded=self.n_discarded,
        )

    # -- CSV interface: columns setting, alice_outcome, bob_outcome, count.
    # Rows with bob_outcome 0 carry the per-setting Bob-inconclusive
    # diagnostic; their alice_outcome is written as 0 and ignored on read.

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["setting", "alice_outcome", "bob_outcome", "count"])
            for s in SETTINGS:
                for a in OUTCOMES_ALICE:
                    for b in OUTCOMES_BOB:
                        count = self.counts[s, ALICE_INDEX[a], BOB_INDEX[b]]
                        writer.writerow([s.name, a, b, _format_count(count)])
                if self.bob_inconclusive[s]:
                    writer.writerow([s.name, 0, 0, _format_count(self.bob_inconclusive[s])])

    @classmethod
    def read_csv(cls, path: str | Path) -> "CountTally":
        tally = cls()
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            for lineno, row in enumerate(reader, start=1):
                if lineno == 1 and row and row[0].strip().lower() == "setting":
                    continue
                if not row or all(not cell.strip() for cell in row):
                    continue
                if len(row) != 4:
                    raise MalformedInputError(f"{path}: line {lineno}: expected 4 columns, got {len(row)}")
                try:
                    s = Setting[row[0].strip()]
                    a = int(row[1])
                    b = int(row[2])
                    count = float(row[3])
                except (KeyError, ValueError) as exc:
                    raise MalformedInputError(f"{path}: line {lineno}: {exc}") from None
                if count < 0:
                    raise MalformedInputError(f"{path}: line {lineno}: negative count {count}")
                if b == 0:
                    tally.bob_inconclusive[s] += count
                elif a in ALICE_INDEX and b in BOB_INDEX:
                    tally.counts[s, ALICE_INDEX[a], BOB_INDEX[b]] += count
                else:
                    raise MalformedInputError(f"{path}: line {lineno}: bad outcome pair ({a}, {b})")
        return tally

    @classmethod
    def from_trial_records(cls, records: Iterable[Mapping]) -> "CountTally":
        """Aggregate trial JSONL records (dicts) into a tally."""
        tally = cls()
        for rec in records:
            setting = rec.get("setting")
            if setting in (None, "discarded"):
                tally.n_discarded += 1
                continue
            try:
                s = Setting[setting]
                b = rec["bob_outcome"]
                a = rec["alice_outcome"]
            except (KeyError, TypeError) as exc:
                raise MalformedInputError(f"malformed trial record {rec}: {exc}") from None
            if b == 0:
                tally.bob_inconclusive[s] += 1
            else:
                tally.counts[s, ALICE_INDEX[a], BOB_INDEX[b]] += 1
        return tally

    @classmethod
    def read_trials_jsonl(cls, path: str | Path) -> "CountTally":
        def records():
            with open(path) as fh:
                for lineno, line in enumerate(fh, start=1):
                    if not line.strip():
                        continue
                    try:
                        yield json.loads(line)
                    except json.JSONDecodeError as exc:
                        raise MalformedInputError(f"{path}: line {lineno}: {exc}") from None

        return cls.from_trial_records(records())


def _format_count(count: float) -> str:
    return str(int(count)) if float(count).is_integer() else repr(float(count))


@dataclass(frozen=True)
class SteeringResult:
    """Steering value with per-basis correlations and statistical errors."""

    t: dict[Setting, float]
    s: float
    sigma_s: float | None = None
    sigma_t: dict[Setting, float] | None = None

    def to_json(self) -> dict:
        return {
            "t": {s.name: self.t[s] for s in SETTINGS},
            "s": self.s,
            "sigma_s": self.sigma_s,
            "sigma_t": None if self.sigma_t is None else {s.name: self.sigma_t[s] for s in SETTINGS},
        }


def conditional_mean(tally: CountTally, s: Setting, a: int) -> float:
    """Bob's mean outcome in the subensemble where Alice reported a.

    An empty subensemble contributes 0: conservative for Alice, since it can
    never inflate a squared conditional mean.
    """
    n_plus = tally.n(s, a, 1)
    n_minus = tally.n(s, a, -1)
    denom = n_plus + n_minus
    if denom <= 0:
        return 0.0
    return (n_plus - n_minus) / denom


def correlation_T(tally: CountTally, s: Setting) -> float:
    """Correlation coefficient T_s = sum_a P(a|s) <B>^2_{s,a}."""
    total = tally.total(s)
    if total <= 0:
        raise InsufficientDataError(f"no counts for setting {s.name}")
    t = 0.0
    for a in OUTCOMES_ALICE:
        p_a = (tally.n(s, a, 1) + tally.n(s, a, -1)) / total
        t += p_a * conditional_mean(tally, s, a) ** 2
    return t


def alice_efficiency(tally: CountTally, s: Setting) -> float:
    """Fraction of Bob-conclusive events where Alice was conclusive.

    Diagnostic estimate of the arm efficiency; equals eta for the honest
    model but is not claimed to reproduce a hardware efficiency measurement.
    """
    total = tally.total(s)
    if total <= 0:
        raise InsufficientDataError(f"no counts for setting {s.name}")
    conclusive = sum(tally.n(s, a, b) for a in (1, -1) for b in OUTCOMES_BOB)
    return conclusive / total


def visibility_estimate(tally: CountTally, s: Setting) -> float | None:
    """Visibility inferred from T_s = eta * V^2; None when eta is zero."""
    eta = alice_efficiency(tally, s)
    if eta <= 0:
        return None
    ratio = correlation_T(tally, s) / eta
    return math.sqrt(max(ratio, 0.0))


def steering_value(
    tally: CountTally,
    n_resamples: int = 0,
    rng: np.random.Generator | None = None,
) -> SteeringResult:
    """Evaluate S = T_X + T_Y + T_Z, optionally with Monte-Carlo errors."""
    t = {s: correlation_T(tally, s) for s in SETTINGS}
    s_value = t[Setting.X] + t[Setting.Y] + t[Setting.Z]
    sigma_s = None
    sigma_t = None
    if n_resamples:
        sigma_s, sigma_t = mc_error(tally, n_resamples=n_resamples, rng=rng)
    return SteeringResult(t=t, s=s_value, sigma_s=sigma_s, sigma_t=sigma_t)


def _replica_T(counts: NDArray[np.float64]) -> NDArray[np.float64]:
    """Vectorized T per setting for a stack of tallies, zeros where empty.

    counts has shape (..., 3, 3, 2); returns shape (..., 3).
    """
    n_a = counts.sum(axis=-1)                      # (..., 3, 3)
    totals = n_a.sum(axis=-1, keepdims=True)       # (..., 3, 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        p_a = np.where(totals > 0, n_a / np.where(totals > 0, totals, 1.0), 0.0)
        diff = counts[..., 0] - counts[..., 1]
        mean = np.where(n_a > 0, diff / np.where(n_a > 0, n_a, 1.0), 0.0)
    return (p_a * mean**2).sum(axis=-1)


def mc_error(
    tally: CountTally,
    n_resamples: int = 1000,
    rng: np.random.Generator | None = None,
) -> tuple[float, dict[Setting, float]]:
    """Poissonian Monte-Carlo standard error of S and of each T_s.

    Every tally cell is resampled as an independent Poisson variate with
    mean equal to the observed count; S is recomputed per replica and the
    standard deviation across replicas is returned. Replica subensembles
    that resample to zero contribute conditional mean 0, so degenerate
    tallies stay finite.
    """
    if n_resamples < 100:
        raise InvalidParameterError(f"n_resamples = {n_resamples} < 100")
    if rng is None:
        rng = np.random.default_rng(0)
    replicas = rng.poisson(lam=tally.counts, size=(n_resamples, 3, 3, 2)).astype(float)
    t = _replica_T(replicas)                       # (n_resamples, 3)
    s = t.sum(axis=-1)
    sigma_t = {setting: float(t[:, setting].std(ddof=1)) for setting in SETTINGS}
    return float(s.std(ddof=1)), sigma_t


def runs_error(per_run_s: Iterable[float]) -> float:
    """Standard deviation of the mean across repeated runs."""
    values = np.asarray(list(per_run_s), dtype=float)
    if values.size < 2:
        raise InsufficientDataError("need at least 2 runs")
    return float(values.std(ddof=1) / math.sqrt(values.size))


def tally_from_distributions(dists: Mapping[Setting, JointDistribution]) -> CountTally:
    """Exact (infinite-count) tally whose cells are probabilities."""
    tally = CountTally()
    for s in SETTINGS:
        if s not in dists:
            raise InsufficientDataError(f"missing distribution for setting {s.name}")
        for (a, b), prob in dists[s].p.items():
            tally.counts[s, ALICE_INDEX[a], BOB_INDEX[b]] = prob
    return tally
