"""Event-driven simulation of one experimental session.

Each trial is clocked: the QRNG on Bob's side draws two bits at a fixed
time after the tick (the 11 combination discards the trial), the setting
travels to Alice over the classical link, both analyzers switch, outcomes
are drawn from the active strategy, and every step is logged as a
positioned, timestamped event for causality auditing.

Sessions are deterministic given their seed. The per-trial outcome loop is
delegated to a compiled kernel when available (see steersim._kernels); both
kernel backends consume the same pre-drawn uniform block and produce
bit-identical sessions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence, TextIO, Union

import numpy as np
from numpy.typing import NDArray

from . import _kernels, quantum
from .errors import ConfigurationError, InvalidParameterError
from .events import EventLabel, EventLog, SpacetimeEvent
from .model import (
    SETTINGS,
    AnalyzerModel,
    LhsEnsemble,
    NoiseModel,
    Setting,
    distribution_cdf,
    honest_distribution,
)
from .spacetime import trusted_window
from .steering import ALICE_INDEX, CountTally
from .timing import TimingConfig

_CHUNK = 1 << 18

_ALICE_SIDE = {
    EventLabel.PAIR_EMISSION,
    EventLabel.ALICE_KNOWS_SETTING,
    EventLabel.ALICE_MEASUREMENT,
    EventLabel.ALICE_REPORT,
}

# Labels emitted by a discarded (bits 11) trial.
_DISCARD_LABELS = (
    EventLabel.PAIR_EMISSION,
    EventLabel.QRNG_CHOICE_START,
    EventLabel.QRNG_CHOICE_READY,
)


def qrng_choice(bit1: int, bit0: int) -> Setting | None:
    """Map the two QRNG bits to a setting; 11 discards the trial.

    The assignment is 00 -> X, 01 -> Y, 10 -> Z.
    """
    if bit1 not in (0, 1) or bit0 not in (0, 1):
        raise InvalidParameterError(f"bits must be 0 or 1, got ({bit1}, {bit0})")
    code = 2 * bit1 + bit0
    return None if code == 3 else Setting(code)


@dataclass(frozen=True)
class HonestStrategy:
    """Honest entangled source; outcomes follow honest_distribution."""

    kind: str = "honest"


@dataclass(frozen=True)
class LhsStrategy:
    """Cheating source: a local ensemble with deterministic responses.

    Bob's conclusive/inconclusive split comes from his analyzer's effects
    (ideal projective analyzer when none is given); the noise model's
    efficiencies do not apply in this mode.
    """

    ensemble: LhsEnsemble
    bob_analyzer: AnalyzerModel | None = None
    kind: str = "lhs"


Strategy = Union[HonestStrategy, LhsStrategy]


@dataclass(frozen=True)
class TrialRecord:
    trial_id: int
    setting: Setting | None  # None means discarded (QRNG bits 11)
    alice_outcome: int | None
    bob_outcome: int | None
    coincident: bool
    events: tuple[int, ...]  # indices into the session event log

    @property
    def discarded(self) -> bool:
        return self.setting is None


def _event_pattern(timing: TimingConfig):
    """Per-trial event template sorted into emission order.

    Returns (labels int8, rel_times, x_coords); the first three rows are
    always the discarded-trial subset (emission and the QRNG choice span).
    """
    window = trusted_window(timing)
    rel = {
        EventLabel.PAIR_EMISSION: 0.0,
        EventLabel.QRNG_CHOICE_START: 0.0,
        EventLabel.QRNG_CHOICE_READY: timing.qrng_ready_ns,
        EventLabel.SETTING_SENT: timing.t_setting_sent,
        EventLabel.ALICE_KNOWS_SETTING: timing.t_alice_knows,
        EventLabel.ALICE_MEASUREMENT: timing.t_alice_measurement,
        EventLabel.ALICE_REPORT: timing.t_alice_report,
        EventLabel.BOB_MEASUREMENT_START: window.acceptance_start_ns,
        EventLabel.BOB_MEASUREMENT_END: window.acceptance_end_ns - timing.detector_registration_ns,
        EventLabel.BOB_REGISTRATION: window.acceptance_end_ns,
    }
    codes = np.array(sorted(rel, key=lambda lab: (rel[lab], int(lab))), dtype=object)
    labels = np.array([int(lab) for lab in codes], dtype=np.int8)
    times = np.array([rel[lab] for lab in codes], dtype=float)
    xs = np.array(
        [0.0 if lab in _ALICE_SIDE else timing.distance_m for lab in codes], dtype=float
    )
    if set(codes[:3]) != set(_DISCARD_LABELS):
        raise ConfigurationError("event ordering places measurement before the QRNG choice")
    return labels, times, xs


class TrialLog(Sequence):
    """Column-wise sequence of TrialRecord entries for one session."""

    def __init__(
        self,
        setting: NDArray[np.int8],
        alice: NDArray[np.int8],
        bob: NDArray[np.int8],
        coincident: NDArray[np.bool_],
        event_start: NDArray[np.int64],
        event_count: NDArray[np.int64],
    ):
        self.setting = setting
        self.alice = alice
        self.bob = bob
        self.coincident = coincident
        self.event_start = event_start
        self.event_count = event_count

    def __len__(self) -> int:
        return len(self.setting)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        i = int(i)
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        discarded = self.setting[i] == 3
        start = int(self.event_start[i])
        events = tuple(range(start, start + int(self.event_count[i])))
        return TrialRecord(
            trial_id=i,
            setting=None if discarded else Setting(int(self.setting[i])),
            alice_outcome=None if discarded else int(self.alice[i]),
            bob_outcome=None if discarded else int(self.bob[i]),
            coincident=bool(self.coincident[i]),
            events=events,
        )

    def __iter__(self) -> Iterator[TrialRecord]:
        for i in range(len(self)):
            yield self[i]

    def write_jsonl(self, target: str | TextIO) -> None:
        if hasattr(target, "write"):
            self._write(target)  # type: ignore[arg-type]
        else:
            with open(target, "w") as fh:
                self._write(fh)

    def _write(self, fh: TextIO) -> None:
        names = [s.name for s in SETTINGS] + ["discarded"]
        for i in range(len(self)):
            s = self.setting[i]
            start = int(self.event_start[i])
            refs = ", ".join(str(j) for j in range(start, start + int(self.event_count[i])))
            if s == 3:
                fh.write(
                    '{"trial_id": %d, "setting": "discarded", "alice_outcome": null, '
                    '"bob_outcome": null, "coincident": false, "events": [%s]}\n' % (i, refs)
                )
            else:
                fh.write(
                    '{"trial_id": %d, "setting": "%s", "alice_outcome": %d, '
                    '"bob_outcome": %d, "coincident": %s, "events": [%s]}\n'
                    % (
                        i,
                        names[s],
                        self.alice[i],
                        self.bob[i],
                        "true" if self.coincident[i] else "false",
                        refs,
                    )
                )


def coincidence_gate(
    t_alice_detect_ns: float,
    t_bob_detect_ns: float,
    window_ns: float,
    nominal_offset_ns: float = 0.0,
) -> bool:
    """AND-gate test: offset-corrected arrival difference inside the window."""
    if window_ns <= 0:
        raise InvalidParameterError(f"coincidence window {window_ns} must be positive")
    return abs(t_alice_detect_ns - t_bob_detect_ns - nominal_offset_ns) <= window_ns / 2.0


def _honest_tables(noise: NoiseModel) -> tuple[NDArray, NDArray]:
    joint_cdf = np.empty((3, 6))
    marginal_cdf = np.empty((3, 3))
    for s in SETTINGS:
        dist = honest_distribution(noise, s)
        joint_cdf[s] = distribution_cdf(dist)
        p_plus = dist.p[(1, 1)] + dist.p[(1, -1)]
        p_minus = dist.p[(-1, 1)] + dist.p[(-1, -1)]
        p_zero = dist.p[(0, 1)] + dist.p[(0, -1)]
        marginal_cdf[s] = np.cumsum([p_plus, p_minus, p_zero])
    return joint_cdf, marginal_cdf


def _lhs_tables(strategy: LhsStrategy) -> tuple[NDArray, NDArray, NDArray]:
    analyzer = strategy.bob_analyzer or AnalyzerModel.ideal()
    members = strategy.ensemble.members
    member_cdf = np.cumsum([m.weight for m in members])
    responses = np.array(
        [[m.response[s] for s in SETTINGS] for m in members], dtype=np.int8
    )
    bob_cdf = np.empty((len(members), 3, 2))
    for i, m in enumerate(members):
        rho = quantum.bloch_to_density(m.bloch)
        for s in SETTINGS:
            p_plus = quantum.born_probability(rho, analyzer.effect_plus(s))
            p_minus = quantum.born_probability(rho, analyzer.effect_minus(s))
            bob_cdf[i, s, 0] = p_plus
            bob_cdf[i, s, 1] = p_plus + p_minus
    return member_cdf, responses, bob_cdf


def _outcome_sampler(strategy, noise):
    """Bind strategy tables once; returns a function of the uniform block."""
    if isinstance(strategy, HonestStrategy):
        joint_cdf, marginal_cdf = _honest_tables(noise)
        eta_bob = noise.eta_bob
        return lambda u: _kernels.simulate_honest(u, eta_bob, joint_cdf, marginal_cdf)
    if isinstance(strategy, LhsStrategy):
        member_cdf, responses, bob_cdf = _lhs_tables(strategy)
        return lambda u: _kernels.simulate_lhs(u, member_cdf, responses, bob_cdf)
    raise InvalidParameterError(f"unknown strategy {strategy!r}")


def run_session(
    timing: TimingConfig,
    noise: NoiseModel,
    strategy: Strategy,
    n_trials: int,
    seed: int,
    include_events: bool = True,
) -> tuple[EventLog, CountTally, TrialLog]:
    """Simulate a clocked session of n_trials trials.

    Returns the event log (in emission order), the tally of Bob-conclusive
    events, and the per-trial records. Only coincidence-identified pairs
    enter the tally's conclusive cells; a conclusive Alice outcome whose
    pair fails the AND gate is tallied as inconclusive (0), which is what
    the experiment's counting logic would see. include_events=False skips
    materializing the event log (returns an empty one) for bulk statistics
    runs.
    """
    if n_trials < 1:
        raise InvalidParameterError(f"n_trials must be >= 1, got {n_trials}")
    labels_pat, rel_pat, x_pat = _event_pattern(timing)

    ss = np.random.SeedSequence(seed)
    ss_main, ss_jitter = ss.spawn(2)
    rng = np.random.default_rng(ss_main)

    sampler = _outcome_sampler(strategy, noise)
    parts = []
    done = 0
    while done < n_trials:
        m = min(_CHUNK, n_trials - done)
        u = rng.random((m, 4))
        parts.append(sampler(u))
        done += m
    setting = np.concatenate([p[0] for p in parts])
    alice = np.concatenate([p[1] for p in parts])
    bob = np.concatenate([p[2] for p in parts])

    live = setting < 3
    bob_conclusive = live & (bob != 0)

    # AND-gate coincidences; detection instants only wobble under jitter
    gate_ok = np.ones(n_trials, dtype=bool)
    if timing.detector_jitter_ns > 0:
        jrng = np.random.default_rng(ss_jitter)
        jitter = jrng.normal(0.0, timing.detector_jitter_ns, size=(n_trials, 2))
        gate_ok = np.abs(jitter[:, 0] - jitter[:, 1]) <= timing.coincidence_window_ns / 2.0
    coincident = bob_conclusive & (alice != 0) & gate_ok

    # tally: coincidences keep Alice's outcome, lone Bob detections count as 0
    alice_eff = np.where(coincident, alice, 0).astype(np.int8)
    a_idx = np.where(alice_eff == 1, 0, np.where(alice_eff == -1, 1, 2))
    b_idx = (bob[bob_conclusive] == -1).astype(np.int64)
    code = (
        setting[bob_conclusive].astype(np.int64) * 6
        + a_idx[bob_conclusive] * 2
        + b_idx
    )
    counts = np.bincount(code, minlength=18).reshape(3, 3, 2).astype(float)
    bob_missing = live & (bob == 0)
    bob_inconclusive = np.bincount(
        setting[bob_missing].astype(np.int64), minlength=3
    ).astype(float)
    tally = CountTally(
        counts=counts,
        bob_inconclusive=bob_inconclusive,
        n_discarded=int((~live).sum()),
    )

    n_events = np.where(live, 10, 3).astype(np.int64)
    event_start = np.concatenate(([0], np.cumsum(n_events)[:-1]))
    trials = TrialLog(
        setting=setting,
        alice=alice,
        bob=bob,
        coincident=coincident,
        event_start=event_start,
        event_count=n_events,
    )

    if include_events:
        total = int(n_events.sum())
        trial_rep = np.repeat(np.arange(n_trials, dtype=np.int64), n_events)
        pos = np.arange(total, dtype=np.int64) - np.repeat(event_start, n_events)
        t0 = trial_rep * timing.trial_period_ns
        log = EventLog(
            trial_id=trial_rep,
            label=labels_pat[pos],
            x_m=x_pat[pos],
            t_ns=t0 + rel_pat[pos],
        )
    else:
        log = EventLog(
            trial_id=np.empty(0, dtype=np.int64),
            label=np.empty(0, dtype=np.int8),
            x_m=np.empty(0),
            t_ns=np.empty(0),
        )
    return log, tally, trials


def run_trial(
    timing: TimingConfig,
    noise: NoiseModel,
    strategy: Strategy,
    rng: np.random.Generator,
    trial_id: int = 0,
) -> tuple[TrialRecord, list[SpacetimeEvent]]:
    """Simulate a single trial, consuming four uniforms from rng.

    Returns the record together with its materialized events (times relative
    to this trial's clock tick plus the trial's period offset).
    """
    labels_pat, rel_pat, x_pat = _event_pattern(timing)
    u = rng.random((1, 4))
    setting, alice, bob = _outcome_sampler(strategy, noise)(u)
    discarded = setting[0] == 3
    live = not discarded
    coincident = bool(live and alice[0] != 0 and bob[0] != 0)
    count = 10 if live else 3
    t0 = trial_id * timing.trial_period_ns
    events = [
        SpacetimeEvent(
            trial_id=trial_id,
            label=EventLabel(int(labels_pat[k])),
            x_m=float(x_pat[k]),
            t_ns=t0 + float(rel_pat[k]),
        )
        for k in range(count)
    ]
    record = TrialRecord(
        trial_id=trial_id,
        setting=None if discarded else Setting(int(setting[0])),
        alice_outcome=None if discarded else int(alice[0]),
        bob_outcome=None if discarded else int(bob[0]),
        coincident=coincident,
        events=tuple(range(count)),
    )
    return record, events


def nominal_gate_offset_ns(timing: TimingConfig) -> float:
    """Deterministic path-delay difference between the two detections."""
    window = trusted_window(timing)
    return timing.t_alice_report - window.acceptance_end_ns
