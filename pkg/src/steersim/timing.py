"""Session timing configuration and derived per-trial instants.

All times are nanoseconds relative to the trial start (external clock tick);
the pair emission and the start of the setting choice both sit at t = 0.
Geometry is one-dimensional: Alice (and the pair source) at x = 0, Bob at
x = distance_m.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import ConfigurationError

SPEED_OF_LIGHT_M_PER_S = 299_792_458.0


def light_travel_ns(distance_m: float) -> float:
    """One-way light travel time in vacuum, in nanoseconds."""
    return distance_m / SPEED_OF_LIGHT_M_PER_S * 1e9


@dataclass(frozen=True)
class TimingConfig:
    """Clock, transfer, switching and window durations of one session.

    Defaults follow the measured values of the reference setup: a 787 kHz
    trial clock, setting bits ready 90 ns after the tick, 205 ns classical
    transmission to Alice, 48 ns splitter box and cabling, 22 ns EOM switch,
    a deliberate 20 ns measurement delay on Alice's side, at most 10 ns
    until a detection is registered, a 20 ns acceptance window (registration
    included) with 25 ns buffers, and 48 m between the laboratories.

    The classical setting transmission uses the measured duration rather
    than distance/coax_speed; the speed fields exist for what-if
    configurations only. Alice's delay fiber enters as a diagnostic photon
    arrival time and does not shift her scheduled measurement.
    """

    clock_rate_hz: float = 787e3
    qrng_ready_ns: float = 90.0
    setting_transmission_ns: float = 205.0
    splitter_and_cables_ns: float = 48.0
    eom_switch_ns: float = 22.0
    alice_extra_delay_ns: float = 20.0
    detector_registration_ns: float = 10.0
    acceptance_window_ns: float = 20.0
    buffer_ns: float = 25.0
    distance_m: float = 48.0
    fiber_speed: float = 0.66
    coax_speed: float = 0.66
    alice_fiber_m: float = 80.0
    coincidence_window_ns: float = 3.0
    detector_jitter_ns: float = 0.0

    def __post_init__(self):
        durations = {
            "qrng_ready_ns": self.qrng_ready_ns,
            "setting_transmission_ns": self.setting_transmission_ns,
            "splitter_and_cables_ns": self.splitter_and_cables_ns,
            "eom_switch_ns": self.eom_switch_ns,
            "alice_extra_delay_ns": self.alice_extra_delay_ns,
            "detector_registration_ns": self.detector_registration_ns,
            "buffer_ns": self.buffer_ns,
            "alice_fiber_m": self.alice_fiber_m,
            "detector_jitter_ns": self.detector_jitter_ns,
        }
        for name, value in durations.items():
            if value < 0 or math.isnan(value):
                raise ConfigurationError(f"{name} = {value} must be >= 0")
        if self.clock_rate_hz <= 0:
            raise ConfigurationError("clock_rate_hz must be positive")
        if self.distance_m <= 0:
            raise ConfigurationError("distance_m must be positive")
        if self.acceptance_window_ns <= 0:
            raise ConfigurationError("acceptance_window_ns must be positive")
        if self.coincidence_window_ns <= 0:
            raise ConfigurationError("coincidence_window_ns must be positive")
        for name, speed in [("fiber_speed", self.fiber_speed), ("coax_speed", self.coax_speed)]:
            if not 0.0 < speed <= 1.0:
                raise ConfigurationError(f"{name} = {speed} outside (0, 1]")
        if self.acceptance_window_ns < self.detector_registration_ns:
            raise ConfigurationError(
                "acceptance window must contain the detector registration time"
            )

    # -- derived instants, ns after the trial clock tick ------------------

    @property
    def trial_period_ns(self) -> float:
        return 1e9 / self.clock_rate_hz

    @property
    def light_time_ns(self) -> float:
        return light_travel_ns(self.distance_m)

    @property
    def t_setting_sent(self) -> float:
        return self.qrng_ready_ns

    @property
    def t_alice_knows(self) -> float:
        return self.qrng_ready_ns + self.setting_transmission_ns

    @property
    def t_alice_measurement(self) -> float:
        return (
            self.t_alice_knows
            + self.splitter_and_cables_ns
            + self.eom_switch_ns
            + self.alice_extra_delay_ns
        )

    @property
    def t_alice_report(self) -> float:
        return self.t_alice_measurement + self.detector_registration_ns

    @property
    def t_bob_ready(self) -> float:
        """Earliest time Bob's analyzer has its setting applied."""
        return self.qrng_ready_ns + self.splitter_and_cables_ns + self.eom_switch_ns

    @property
    def alice_photon_arrival_ns(self) -> float:
        """Diagnostic arrival time of Alice's photon after her delay fiber."""
        return self.alice_fiber_m / (self.fiber_speed * SPEED_OF_LIGHT_M_PER_S) * 1e9

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "TimingConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown timing fields: {sorted(unknown)}")
        return cls(**data)
