"""Minkowski-interval classification and loophole-closure auditing.

Three conditions certify a session log:

* freedom of choice - the pair emission is space-like separated from every
  instant of the setting-choice span;
* setting independence - Bob's measurement window (start through
  registration) completes before light from the moment Alice could know the
  setting can reach him;
* outcome independence - Alice's outcome report is space-like separated
  from every instant of Bob's measurement window.

Hypothetical influences are always bounded at vacuum light speed regardless
of configured cable or fiber speeds, and extended events (choice span,
measurement window) are checked at their worst-case endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigurationError, MalformedInputError
from .events import EventLabel, EventLog, SpacetimeEvent
from .timing import TimingConfig, light_travel_ns

INTERVAL_TOL_NS = 0.01  # covers floating-point division by c


class Separation(Enum):
    SPACE_LIKE = "space_like"
    LIGHT_LIKE = "light_like"
    TIME_LIKE = "time_like"


@dataclass(frozen=True)
class Interval:
    kind: Separation
    margin_ns: float  # signed slack |dx|/c - |dt|


def interval(e1: SpacetimeEvent, e2: SpacetimeEvent) -> Interval:
    """Classify the Minkowski interval between two events (symmetric)."""
    margin = light_travel_ns(abs(e1.x_m - e2.x_m)) - abs(e1.t_ns - e2.t_ns)
    if margin > INTERVAL_TOL_NS:
        kind = Separation.SPACE_LIKE
    elif margin < -INTERVAL_TOL_NS:
        kind = Separation.TIME_LIKE
    else:
        kind = Separation.LIGHT_LIKE
    return Interval(kind=kind, margin_ns=margin)


@dataclass(frozen=True)
class ConditionReport:
    name: str
    passed: bool
    margin_ns: float
    n_trials: int

    def to_json(self) -> dict:
        return {"passed": self.passed, "margin_ns": self.margin_ns, "n_trials": self.n_trials}


@dataclass(frozen=True)
class LoopholeReport:
    freedom_of_choice: ConditionReport
    setting_independence: ConditionReport
    outcome_independence: ConditionReport
    trusted_window_ns: tuple[float, float]
    acceptance_window_ns: tuple[float, float]
    n_trials: int

    @property
    def overall_pass(self) -> bool:
        if np.isnan(self.acceptance_window_ns[0]):
            window_ok = True  # no measured trials, nothing to contain
        else:
            window_ok = (
                self.acceptance_window_ns[0] >= self.trusted_window_ns[0] - INTERVAL_TOL_NS
                and self.acceptance_window_ns[1] <= self.trusted_window_ns[1] + INTERVAL_TOL_NS
            )
        return (
            self.freedom_of_choice.passed
            and self.setting_independence.passed
            and self.outcome_independence.passed
            and window_ok
        )

    def to_json(self) -> dict:
        return {
            "freedom_of_choice": self.freedom_of_choice.to_json(),
            "setting_independence": self.setting_independence.to_json(),
            "outcome_independence": self.outcome_independence.to_json(),
            "trusted_window_ns": list(self.trusted_window_ns),
            "acceptance_window_ns": list(self.acceptance_window_ns),
            "n_trials": self.n_trials,
            "overall_pass": self.overall_pass,
        }

    def summary(self) -> str:
        lines = []
        for cond in (self.freedom_of_choice, self.setting_independence, self.outcome_independence):
            status = "PASS" if cond.passed else "FAIL"
            lines.append(f"{cond.name:<24} {status}  worst margin {cond.margin_ns:+.3f} ns")
        lines.append(
            "trusted window          [%.3f, %.3f] ns (length %.3f ns)"
            % (*self.trusted_window_ns, self.trusted_window_ns[1] - self.trusted_window_ns[0])
        )
        lines.append(
            "acceptance window       [%.3f, %.3f] ns" % self.acceptance_window_ns
        )
        lines.append(f"overall                 {'PASS' if self.overall_pass else 'FAIL'}")
        return "\n".join(lines)


def _per_trial(log: EventLog, label: EventLabel) -> tuple[NDArray, NDArray, NDArray]:
    """(trial_id, x_m, t_ns) for one label, sorted by trial, one per trial."""
    tid, x, t = log.select(label)
    if len(np.unique(tid)) != len(tid):
        raise MalformedInputError(f"duplicate {label.name} events for a trial")
    order = np.argsort(tid)
    return tid[order], x[order], t[order]


def _aligned(log: EventLog, labels: list[EventLabel]) -> list[tuple[NDArray, NDArray, NDArray]]:
    """Per-label columns restricted to trials carrying every listed label.

    Raises MalformedInputError when the labels cover different trial sets:
    a trial that has one of the events must have them all.
    """
    columns = [_per_trial(log, label) for label in labels]
    trial_sets = [set(col[0].tolist()) for col in columns]
    union = set.union(*trial_sets)
    for label, tset in zip(labels, trial_sets):
        if tset != union:
            missing = sorted(union - tset)[:3]
            raise MalformedInputError(
                f"trials {missing}... lack {label.name} events present elsewhere"
            )
    return columns


def check_freedom_of_choice(log: EventLog) -> ConditionReport:
    """Emission space-like separated from the whole setting-choice span."""
    if len(log) == 0:
        raise MalformedInputError("empty event log")
    (em, cs, cr) = _aligned(
        log, [EventLabel.PAIR_EMISSION, EventLabel.QRNG_CHOICE_START, EventLabel.QRNG_CHOICE_READY]
    )
    if len(em[0]) == 0:
        raise MalformedInputError("log has no pair_emission events")
    d_ns = light_travel_ns(np.abs(cs[1] - em[1]))
    worst_dt = np.maximum(np.abs(cs[2] - em[2]), np.abs(cr[2] - em[2]))
    margins = d_ns - worst_dt
    margin = float(margins.min())
    return ConditionReport(
        name="freedom_of_choice",
        passed=margin > INTERVAL_TOL_NS,
        margin_ns=margin,
        n_trials=len(margins),
    )


def check_setting_independence(log: EventLog) -> ConditionReport:
    """Bob's window ends before light from Alice's setting knowledge arrives.

    The earliest-influence arrival at Bob is t_know + distance/c, so the
    condition is registration_end < t_know + distance/c for every trial.
    Trials without a transmitted setting (discarded) are skipped; a log with
    no measured trials passes trivially with infinite margin.
    """
    if len(log) == 0:
        raise MalformedInputError("empty event log")
    know, start, reg = _aligned(
        log,
        [EventLabel.ALICE_KNOWS_SETTING, EventLabel.BOB_MEASUREMENT_START, EventLabel.BOB_REGISTRATION],
    )
    if len(know[0]) == 0:
        return ConditionReport("setting_independence", True, float("inf"), 0)
    d_ns = light_travel_ns(np.abs(reg[1] - know[1]))
    margins = (know[2] + d_ns) - reg[2]
    margin = float(margins.min())
    return ConditionReport(
        name="setting_independence",
        passed=margin > INTERVAL_TOL_NS,
        margin_ns=margin,
        n_trials=len(margins),
    )


def check_outcome_independence(log: EventLog) -> ConditionReport:
    """Alice's report space-like separated from Bob's whole window."""
    if len(log) == 0:
        raise MalformedInputError("empty event log")
    rep, start, reg = _aligned(
        log,
        [EventLabel.ALICE_REPORT, EventLabel.BOB_MEASUREMENT_START, EventLabel.BOB_REGISTRATION],
    )
    if len(rep[0]) == 0:
        return ConditionReport("outcome_independence", True, float("inf"), 0)
    d_ns = light_travel_ns(np.abs(start[1] - rep[1]))
    worst_dt = np.maximum(np.abs(rep[2] - start[2]), np.abs(rep[2] - reg[2]))
    margins = d_ns - worst_dt
    margin = float(margins.min())
    return ConditionReport(
        name="outcome_independence",
        passed=margin > INTERVAL_TOL_NS,
        margin_ns=margin,
        n_trials=len(margins),
    )


@dataclass(frozen=True)
class TrustedWindow:
    """Planner view: admissible placement of Bob's acceptance window."""

    start_ns: float
    end_ns: float
    acceptance_start_ns: float
    acceptance_end_ns: float

    @property
    def length_ns(self) -> float:
        return self.end_ns - self.start_ns


def trusted_window(timing: TimingConfig) -> TrustedWindow:
    """Compute the trusted window and center the acceptance window in it.

    The window opens when Bob's analyzer is ready and closes at the latest
    admissible measurement completion under both independence conditions;
    the acceptance window sits centered between the configured buffers.
    """
    d_ns = timing.light_time_ns
    start = timing.t_bob_ready
    end = min(timing.t_alice_knows + d_ns, timing.t_alice_report + d_ns)
    usable = end - start - 2.0 * timing.buffer_ns
    if usable < timing.acceptance_window_ns:
        raise ConfigurationError(
            f"acceptance window {timing.acceptance_window_ns} ns plus buffers does not fit "
            f"in the trusted window of {end - start:.3f} ns"
        )
    center = 0.5 * (start + end)
    return TrustedWindow(
        start_ns=start,
        end_ns=end,
        acceptance_start_ns=center - 0.5 * timing.acceptance_window_ns,
        acceptance_end_ns=center + 0.5 * timing.acceptance_window_ns,
    )


def audit_session(log: EventLog) -> LoopholeReport:
    """Run all three checks on a session log and report the shielded window.

    The report's trusted window is reconstructed from the log alone as the
    interval (relative to each trial's emission) during which Bob's
    measurement is provably shielded: bounded below by outcome independence
    (report minus light time) and above by both independence conditions.
    """
    freedom = check_freedom_of_choice(log)
    setting = check_setting_independence(log)
    outcome = check_outcome_independence(log)

    know, rep, start, reg = _aligned(
        log,
        [
            EventLabel.ALICE_KNOWS_SETTING,
            EventLabel.ALICE_REPORT,
            EventLabel.BOB_MEASUREMENT_START,
            EventLabel.BOB_REGISTRATION,
        ],
    )
    if len(know[0]) > 0:
        # Emission marks each trial's t = 0; every measured trial must have one.
        em_tid, _, em_t = _per_trial(log, EventLabel.PAIR_EMISSION)
        pos = np.searchsorted(em_tid, know[0])
        if len(em_tid) == 0 or pos.max() >= len(em_tid) or not np.array_equal(em_tid[pos], know[0]):
            raise MalformedInputError("measured trials lack pair_emission events")
        t0 = em_t[pos]
        d_ns = light_travel_ns(np.abs(start[1] - rep[1]))
        window = (
            float((rep[2] - t0 - d_ns).max()),
            float((np.minimum(know[2], rep[2]) - t0 + d_ns).min()),
        )
        acc = (float((start[2] - t0).min()), float((reg[2] - t0).max()))
    else:
        # no measured trials: nothing to shield
        window = (float("-inf"), float("inf"))
        acc = (float("nan"), float("nan"))
    n_trials = len(np.unique(log.trial_id))
    return LoopholeReport(
        freedom_of_choice=freedom,
        setting_independence=setting,
        outcome_independence=outcome,
        trusted_window_ns=window,
        acceptance_window_ns=acc,
        n_trials=n_trials,
    )
