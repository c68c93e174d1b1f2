"""Honest and adversarial outcome models for the three-setting experiment.

The honest model is a heralded singlet with isotropic (per-basis) noise:
conditioned on Bob detecting, Alice is conclusive with probability eta and
same-basis correlations have contrast -V_s. Adversarial models replace the
entangled source by a local ensemble of known qubit states together with a
deterministic per-setting response table for Alice.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Mapping, Sequence

import numpy as np
from numpy.typing import NDArray

from . import quantum
from .errors import InvalidParameterError


class Setting(IntEnum):
    """Measurement setting; values index kernel tables and tally axes."""

    X = 0
    Y = 1
    Z = 2


SETTINGS = (Setting.X, Setting.Y, Setting.Z)

# Ternary outcome alphabet; 0 is an inconclusive (no-detection) event.
OUTCOMES_ALICE = (1, -1, 0)
OUTCOMES_BOB = (1, -1)

# Measurement observables per setting (X <-> +-45, Y <-> R/L, Z <-> H/V).
OBSERVABLES = {
    Setting.X: quantum.SIGMA_X,
    Setting.Y: quantum.SIGMA_Y,
    Setting.Z: quantum.SIGMA_Z,
}

# Eigenstate kets per setting in outcome order (+1, -1).
EIGENSTATES = {
    Setting.X: ("+45", "-45"),
    Setting.Y: ("R", "L"),
    Setting.Z: ("H", "V"),
}


def _as_visibility_map(v) -> dict[Setting, float]:
    if isinstance(v, Mapping):
        out = {}
        for s in SETTINGS:
            if s in v:
                out[s] = float(v[s])
            elif s.name in v:
                out[s] = float(v[s.name])
            else:
                raise InvalidParameterError(f"missing visibility for setting {s.name}")
        return out
    return {s: float(v) for s in SETTINGS}


@dataclass(frozen=True)
class NoiseModel:
    """Efficiencies and visibilities of one experimental configuration.

    eta_alice is Alice's conclusive probability conditioned on Bob detecting
    (heralding efficiency); eta_bob is Bob's raw detection probability and
    only thins the number of tallied trials.
    """

    eta_alice: float
    v_per_basis: dict[Setting, float] = field(default_factory=lambda: {s: 1.0 for s in SETTINGS})
    eta_bob: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "v_per_basis", _as_visibility_map(self.v_per_basis))
        for name, value in [("eta_alice", self.eta_alice), ("eta_bob", self.eta_bob)]:
            if not 0.0 <= value <= 1.0:
                raise InvalidParameterError(f"{name} = {value} outside [0, 1]")
        for s, v in self.v_per_basis.items():
            if not 0.0 <= v <= 1.0:
                raise InvalidParameterError(f"visibility[{s.name}] = {v} outside [0, 1]")

    @classmethod
    def uniform(cls, eta_alice: float, visibility: float = 1.0, eta_bob: float = 1.0) -> "NoiseModel":
        return cls(eta_alice=eta_alice, v_per_basis={s: visibility for s in SETTINGS}, eta_bob=eta_bob)


@dataclass(frozen=True)
class JointDistribution:
    """Joint outcome table for one setting, conditioned on Bob conclusive.

    p maps (alice outcome in {+1,-1,0}, bob outcome in {+1,-1}) to a
    probability; the six cells sum to one.
    """

    setting: Setting
    p: dict[tuple[int, int], float]

    def __post_init__(self):
        cells = [(a, b) for a in OUTCOMES_ALICE for b in OUTCOMES_BOB]
        if sorted(self.p.keys()) != sorted(cells):
            raise InvalidParameterError("joint distribution must cover the 3x2 outcome table")
        total = 0.0
        for key, value in self.p.items():
            if value < -1e-15:
                raise InvalidParameterError(f"negative probability {value} at {key}")
            total += value
        if abs(total - 1.0) > 1e-12:
            raise InvalidParameterError(f"joint distribution sums to {total}, not 1")

    def table(self) -> NDArray[np.float64]:
        """3x2 array in outcome order (+1, -1, 0) x (+1, -1)."""
        return np.array([[self.p[(a, b)] for b in OUTCOMES_BOB] for a in OUTCOMES_ALICE])

    def bob_marginal(self) -> tuple[float, float]:
        return (
            sum(self.p[(a, 1)] for a in OUTCOMES_ALICE),
            sum(self.p[(a, -1)] for a in OUTCOMES_ALICE),
        )


def honest_distribution(noise: NoiseModel, s: Setting) -> JointDistribution:
    """Heralded singlet outcome table with efficiency eta and contrast V_s.

    P(a, b) = eta * (1 - a*b*V_s) / 4 for conclusive a, and
    P(0, b) = (1 - eta) / 2: when Alice misses the photon, Bob's half of the
    pair is maximally mixed, so his outcomes stay uniform.
    """
    eta = noise.eta_alice
    v = noise.v_per_basis[s]
    p: dict[tuple[int, int], float] = {}
    for a in (1, -1):
        for b in OUTCOMES_BOB:
            p[(a, b)] = eta * (1.0 - a * b * v) / 4.0
    for b in OUTCOMES_BOB:
        p[(0, b)] = (1.0 - eta) / 2.0
    return JointDistribution(setting=s, p=p)


def predicted_S(noise: NoiseModel) -> float:
    """Analytic steering value sum_i eta * V_i**2 of the honest model."""
    return sum(noise.eta_alice * noise.v_per_basis[s] ** 2 for s in SETTINGS)


# Inverse-CDF cell order shared with the session kernels:
# (+1,+1), (+1,-1), (-1,+1), (-1,-1), (0,+1), (0,-1).
CELL_ALICE = np.array([1, 1, -1, -1, 0, 0], dtype=np.int8)
CELL_BOB = np.array([1, -1, 1, -1, 1, -1], dtype=np.int8)


def distribution_cdf(dist: JointDistribution) -> NDArray[np.float64]:
    """Cumulative cell probabilities in the shared kernel cell order."""
    cells = [dist.p[(int(a), int(b))] for a, b in zip(CELL_ALICE, CELL_BOB)]
    return np.cumsum(cells)


def sample_honest_trial(
    noise: NoiseModel, s: Setting, rng: np.random.Generator
) -> tuple[int, int]:
    """Draw one (alice, bob) outcome pair given that Bob detected.

    Deterministic for a fixed generator state; frequencies converge to
    honest_distribution.
    """
    cdf = distribution_cdf(honest_distribution(noise, s))
    idx = min(int(np.searchsorted(cdf, rng.random(), side="right")), 5)
    return int(CELL_ALICE[idx]), int(CELL_BOB[idx])


@dataclass(frozen=True)
class AnalyzerModel:
    """Per-setting measurement effect pairs of one analyzer module.

    The inconclusive effect is implicit: E0 = I - E_plus - E_minus, so a
    lossy analyzer has E_plus + E_minus strictly below the identity.
    """

    effects: dict[Setting, tuple[quantum.Matrix, quantum.Matrix]]

    def __post_init__(self):
        for s in SETTINGS:
            if s not in self.effects:
                raise InvalidParameterError(f"analyzer is missing setting {s.name}")
            plus, minus = self.effects[s]
            quantum.check_effect(plus)
            quantum.check_effect(minus)
            remainder = np.eye(2, dtype=complex) - plus - minus
            if np.linalg.eigvalsh(remainder).min() < -quantum.ATOL_PSD:
                raise InvalidParameterError(
                    f"effects for setting {s.name} exceed the identity"
                )

    def effect_plus(self, s: Setting) -> quantum.Matrix:
        return self.effects[s][0]

    def effect_minus(self, s: Setting) -> quantum.Matrix:
        return self.effects[s][1]

    def inconclusive(self, s: Setting) -> quantum.Matrix:
        plus, minus = self.effects[s]
        return np.eye(2, dtype=complex) - plus - minus

    @classmethod
    def ideal(cls, efficiency: float = 1.0) -> "AnalyzerModel":
        """Projective mutually unbiased analyzer, optionally loss-scaled."""
        if not 0.0 < efficiency <= 1.0:
            raise InvalidParameterError(f"efficiency {efficiency} outside (0, 1]")
        effects = {}
        for s in SETTINGS:
            plus, minus = (quantum.projector(quantum.KET[k]) for k in EIGENSTATES[s])
            effects[s] = (efficiency * plus, efficiency * minus)
        return cls(effects=effects)

    def to_json(self) -> dict:
        return {
            s.name: {
                "effect_plus": quantum.matrix_to_json(self.effects[s][0]),
                "effect_minus": quantum.matrix_to_json(self.effects[s][1]),
            }
            for s in SETTINGS
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "AnalyzerModel":
        effects = {}
        for s in SETTINGS:
            try:
                entry = data[s.name]
                plus = quantum.matrix_from_json(entry["effect_plus"])
                minus = quantum.matrix_from_json(entry["effect_minus"])
            except (KeyError, TypeError) as exc:
                raise InvalidParameterError(f"malformed analyzer entry for {s.name}: {exc}") from None
            effects[s] = (plus, minus)
        return cls(effects=effects)


@dataclass(frozen=True)
class LhsMember:
    """One local-hidden-state ensemble member.

    Alice pre-distributes the state `bloch` to Bob and, for each setting,
    reports the deterministic response in {+1, -1, 0}.
    """

    weight: float
    bloch: tuple[float, float, float]
    response: dict[Setting, int]

    def __post_init__(self):
        if self.weight < 0.0:
            raise InvalidParameterError(f"negative ensemble weight {self.weight}")
        quantum.bloch_to_density(self.bloch)  # validates the state
        for s in SETTINGS:
            if s not in self.response:
                raise InvalidParameterError(f"member response missing setting {s.name}")
            if self.response[s] not in (1, -1, 0):
                raise InvalidParameterError(f"response {self.response[s]} not in {{+1,-1,0}}")


@dataclass(frozen=True)
class LhsEnsemble:
    members: tuple[LhsMember, ...]

    def __post_init__(self):
        if not self.members:
            raise InvalidParameterError("LHS ensemble must contain at least one member")
        total = sum(m.weight for m in self.members)
        if abs(total - 1.0) > 1e-9:
            raise InvalidParameterError(f"ensemble weights sum to {total}, not 1")

    def to_json(self) -> dict:
        return {
            "members": [
                {
                    "weight": m.weight,
                    "bloch": list(m.bloch),
                    "response": {s.name: m.response[s] for s in SETTINGS},
                }
                for m in self.members
            ]
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "LhsEnsemble":
        try:
            members = tuple(
                LhsMember(
                    weight=float(entry["weight"]),
                    bloch=tuple(float(c) for c in entry["bloch"]),
                    response={s: int(entry["response"][s.name]) for s in SETTINGS},
                )
                for entry in data["members"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidParameterError(f"malformed ensemble file: {exc}") from None
        return cls(members=members)


def lhs_distribution(
    ensemble: LhsEnsemble | Sequence[LhsMember],
    bob_analyzer: AnalyzerModel,
    s: Setting,
) -> JointDistribution:
    """Joint outcome table of an LHS strategy, conditioned on Bob conclusive.

    Alice's outcome is the drawn member's deterministic response; Bob's
    outcome follows the Born rule on the drawn state with his analyzer's
    effects, renormalized over his conclusive results.
    """
    members = ensemble.members if isinstance(ensemble, LhsEnsemble) else tuple(ensemble)
    if not members:
        raise InvalidParameterError("empty LHS ensemble")
    plus, minus = bob_analyzer.effects[s]
    raw: dict[tuple[int, int], float] = {
        (a, b): 0.0 for a in OUTCOMES_ALICE for b in OUTCOMES_BOB
    }
    for m in members:
        rho = quantum.bloch_to_density(m.bloch)
        q_plus = quantum.born_probability(rho, plus)
        q_minus = quantum.born_probability(rho, minus)
        a = m.response[s]
        raw[(a, 1)] += m.weight * q_plus
        raw[(a, -1)] += m.weight * q_minus
    total = sum(raw.values())
    if total <= 1e-15:
        raise InvalidParameterError("Bob's analyzer is never conclusive on this ensemble")
    return JointDistribution(setting=s, p={k: v / total for k, v in raw.items()})


def optimal_lhs_ensemble() -> LhsEnsemble:
    """Six-state ensemble saturating the steering bound against ideal analyzers.

    Each basis eigenstate is sent with weight 1/6; Alice reports the matching
    eigenvalue in that basis and inconclusive (0) elsewhere, which yields
    T_i = 1/3 per basis and S = 1 exactly.
    """
    axes = {
        Setting.X: np.array([1.0, 0.0, 0.0]),
        Setting.Y: np.array([0.0, 1.0, 0.0]),
        Setting.Z: np.array([0.0, 0.0, 1.0]),
    }
    members = []
    for s in SETTINGS:
        for sign in (1, -1):
            response = {t: 0 for t in SETTINGS}
            response[s] = sign
            members.append(
                LhsMember(weight=1.0 / 6.0, bloch=tuple(sign * axes[s]), response=response)
            )
    return LhsEnsemble(members=tuple(members))
