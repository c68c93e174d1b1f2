"""Maximum-likelihood reconstruction of analyzer effects from probe counts.

Probing an analyzer setting with the six polarization states H, V, +45,
-45, R, L yields ternary counts (+1, -1, no detection) per probe. The two
conclusive effects are estimated by maximizing the multinomial likelihood
over a factored parametrization that is feasible by construction: three
square-root factors define M_o = A_o^dag A_o, a third slack factor absorbs
the inconclusive outcome, and E_o = G^(-1/2) M_o G^(-1/2) with G = sum M_o
sums to the identity exactly while staying positive semidefinite. Ascent is
quasi-Newton with batched finite-difference gradients; iterates never need
projection steps.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import minimize

from . import quantum
from .errors import (
    InvalidParameterError,
    InvalidProbesError,
    MalformedInputError,
    UndefinedDirectionError,
)
from .model import SETTINGS, AnalyzerModel, Setting

OUTCOME_COLUMNS = ("+1", "-1", "none")


@dataclass(frozen=True)
class ProbeSet:
    """Known pure probe states, in fixed label order."""

    labels: tuple[str, ...]
    bloch: NDArray[np.float64]  # (n_probes, 3)

    def __post_init__(self):
        b = np.asarray(self.bloch, dtype=float)
        if b.ndim != 2 or b.shape[1] != 3 or b.shape[0] != len(self.labels):
            raise InvalidProbesError(f"bloch array shape {b.shape} does not match labels")
        object.__setattr__(self, "bloch", b)
        # informational completeness: affine coordinates must span R^4
        affine = np.hstack([np.ones((b.shape[0], 1)), b])
        if np.linalg.matrix_rank(affine, tol=1e-9) < 4:
            raise InvalidProbesError("probe set is not informationally complete")

    def density(self, i: int) -> quantum.Matrix:
        return quantum.bloch_to_density(self.bloch[i])

    def __len__(self) -> int:
        return len(self.labels)


def default_probes() -> ProbeSet:
    """The standard H, V, +45, -45, R, L probe set."""
    labels = ("H", "V", "+45", "-45", "R", "L")
    bloch = np.array(
        [quantum.density_to_bloch(quantum.projector(quantum.KET[k])) for k in labels]
    )
    return ProbeSet(labels=labels, bloch=bloch)


@dataclass(frozen=True)
class TomographyCounts:
    """Ternary outcome counts per probe for one analyzer setting.

    counts is (n_probes, 3) in outcome order (+1, -1, none). When
    shots_per_probe is None the rows hold exact outcome probabilities
    (infinite-shot data); otherwise each row sums to shots_per_probe.
    """

    counts: NDArray[np.float64]
    shots_per_probe: float | None

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=float)
        if c.ndim != 2 or c.shape[1] != 3:
            raise InvalidParameterError(f"counts must be (n_probes, 3), got {c.shape}")
        if (c < 0).any():
            raise InvalidParameterError("counts must be nonnegative")
        object.__setattr__(self, "counts", c)
        if self.shots_per_probe is not None:
            sums = c.sum(axis=1)
            if not np.allclose(sums, self.shots_per_probe, rtol=0, atol=1e-6):
                raise InvalidParameterError(
                    f"per-probe counts {sums} do not sum to shots_per_probe"
                )

    @property
    def exact(self) -> bool:
        return self.shots_per_probe is None


def simulate_probe_counts(
    analyzer: AnalyzerModel,
    s: Setting,
    probes: ProbeSet,
    shots: int,
    rng: np.random.Generator,
) -> TomographyCounts:
    """Multinomial forward model of a probe run."""
    if shots < 1:
        raise InvalidParameterError(f"shots must be >= 1, got {shots}")
    counts = np.zeros((len(probes), 3))
    for i in range(len(probes)):
        rho = probes.density(i)
        p_plus = quantum.born_probability(rho, analyzer.effect_plus(s))
        p_minus = quantum.born_probability(rho, analyzer.effect_minus(s))
        p = np.array([p_plus, p_minus, max(1.0 - p_plus - p_minus, 0.0)])
        counts[i] = rng.multinomial(shots, p / p.sum())
    return TomographyCounts(counts=counts, shots_per_probe=float(shots))


def exact_probe_probabilities(
    analyzer: AnalyzerModel, s: Setting, probes: ProbeSet
) -> TomographyCounts:
    """Infinite-shot (exact probability) probe data."""
    rows = np.zeros((len(probes), 3))
    for i in range(len(probes)):
        rho = probes.density(i)
        p_plus = quantum.born_probability(rho, analyzer.effect_plus(s))
        p_minus = quantum.born_probability(rho, analyzer.effect_minus(s))
        rows[i] = (p_plus, p_minus, max(1.0 - p_plus - p_minus, 0.0))
    return TomographyCounts(counts=rows, shots_per_probe=None)


# --- batched 2x2 algebra for the likelihood -------------------------------

def _theta_to_matrices(theta: NDArray) -> NDArray:
    """(k, 24) real parameters -> (k, 3, 2, 2) complex factors."""
    k = theta.shape[0]
    pairs = theta.reshape(k, 3, 4, 2)
    return (pairs[..., 0] + 1j * pairs[..., 1]).reshape(k, 3, 2, 2)


def _matrices_to_theta(mats: NDArray) -> NDArray:
    flat = np.asarray(mats, dtype=complex).reshape(3, 4)
    return np.column_stack([flat.real.reshape(-1), flat.imag.reshape(-1)]).reshape(
        3, 4, 2
    ).reshape(-1)


def _effects_from_theta(theta: NDArray) -> NDArray:
    """(k, 24) parameters -> (k, 3, 2, 2) POVM effects summing to identity."""
    a = _theta_to_matrices(theta)
    m = np.einsum("koba,kobc->koac", a.conj(), a)
    g = m.sum(axis=1)
    # tiny diagonal load keeps G invertible without visibly biasing effects
    eps = 1e-14 * (np.einsum("kii->k", g).real + 1.0)
    g = g + eps[:, None, None] * np.eye(2)
    det = (g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] * g[:, 1, 0]).real
    tr = np.einsum("kii->k", g).real
    s = np.sqrt(np.maximum(det, 0.0))
    t = np.sqrt(tr + 2.0 * s)
    # inverse of G + sI, times t: closed-form inverse square root of G
    det2 = det + s * tr + s * s
    x = np.empty_like(g)
    x[:, 0, 0] = g[:, 1, 1] + s
    x[:, 1, 1] = g[:, 0, 0] + s
    x[:, 0, 1] = -g[:, 0, 1]
    x[:, 1, 0] = -g[:, 1, 0]
    x *= (t / det2)[:, None, None]
    return np.einsum("kab,kobc,kcd->koad", x, m, x)


def _effect_coeffs(effects: NDArray) -> tuple[NDArray, NDArray]:
    """E -> (a, w) with tr(E rho_b) = a + w.b, batched over leading axes."""
    a = (effects[..., 0, 0] + effects[..., 1, 1]).real / 2.0
    w = np.stack(
        [
            effects[..., 0, 1].real,
            -effects[..., 0, 1].imag,
            (effects[..., 0, 0] - effects[..., 1, 1]).real / 2.0,
        ],
        axis=-1,
    )
    return a, w


def _nll_batch(theta: NDArray, weights: NDArray, bloch: NDArray) -> NDArray:
    """Scaled negative log-likelihood for a (k, 24) parameter batch."""
    effects = _effects_from_theta(theta)
    a, w = _effect_coeffs(effects)  # (k, 3), (k, 3, 3)
    q = a[:, None, :] + np.einsum("pc,koc->kpo", bloch, w)
    logq = np.log(np.clip(q, 1e-300, None))
    return -(weights[None, :, :] * logq).sum(axis=(1, 2))


@dataclass(frozen=True)
class SettingReconstruction:
    effect_plus: quantum.Matrix
    effect_minus: quantum.Matrix
    converged: bool
    n_evaluations: int
    history: tuple[float, ...]  # scaled NLL per accepted iterate


@dataclass(frozen=True)
class ReconstructionResult:
    analyzer: AnalyzerModel
    converged: bool
    diagnostics: dict[Setting, SettingReconstruction]


def _linear_inversion(weights: NDArray, bloch: NDArray) -> NDArray:
    """Least-squares (a, w) fit per outcome, projected to feasible effects."""
    totals = weights.sum(axis=1, keepdims=True)
    freq = weights / np.where(totals > 0, totals, 1.0)
    design = np.hstack([np.ones((bloch.shape[0], 1)), bloch])
    coef, *_ = np.linalg.lstsq(design, freq, rcond=None)  # (4, 3)
    effects = np.empty((3, 2, 2), dtype=complex)
    for o in range(3):
        a, wx, wy, wz = coef[:, o]
        e = a * np.eye(2) + wx * quantum.SIGMA_X + wy * quantum.SIGMA_Y + wz * quantum.SIGMA_Z
        vals, vecs = np.linalg.eigh(e)
        vals = np.clip(vals, 1e-12, 1.0)
        effects[o] = (vecs * vals) @ vecs.conj().T
    return effects


def _sqrtm_psd(m: NDArray) -> NDArray:
    vals, vecs = np.linalg.eigh(m)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def _reconstruct_setting(
    counts: TomographyCounts, probes: ProbeSet, max_iterations: int
) -> SettingReconstruction:
    weights = counts.counts.astype(float)
    total = weights.sum()
    if total <= 0:
        raise InvalidParameterError("tomography counts are all zero")
    weights = weights / total
    bloch = probes.bloch

    init_effects = _linear_inversion(weights, bloch)
    theta0 = _matrices_to_theta(np.stack([_sqrtm_psd(e) for e in init_effects]))

    history: list[float] = []

    def fun(theta: NDArray) -> float:
        return float(_nll_batch(theta[None, :], weights, bloch)[0])

    def jac(theta: NDArray) -> NDArray:
        h = 1e-7 * (1.0 + np.abs(theta))
        batch = np.vstack([theta[None, :], theta[None, :] + np.diag(h)])
        values = _nll_batch(batch, weights, bloch)
        return (values[1:] - values[0]) / h

    def callback(theta: NDArray) -> None:
        history.append(fun(theta))

    history.append(fun(np.asarray(theta0)))
    res = minimize(
        fun,
        theta0,
        jac=jac,
        method="L-BFGS-B",
        callback=callback,
        options={"maxiter": max_iterations, "ftol": 1e-15, "gtol": 1e-10},
    )
    improvement = history[-2] - history[-1] if len(history) >= 2 else 0.0
    converged = bool(res.success) or (len(history) >= 2 and improvement < 1e-12)

    effects = _effects_from_theta(res.x[None, :])[0]
    plus = (effects[0] + effects[0].conj().T) / 2.0
    minus = (effects[1] + effects[1].conj().T) / 2.0
    return SettingReconstruction(
        effect_plus=plus,
        effect_minus=minus,
        converged=converged,
        n_evaluations=int(res.nfev),
        history=tuple(history),
    )


def reconstruct_analyzer(
    counts: Mapping[Setting, TomographyCounts],
    probes: ProbeSet | None = None,
    max_iterations: int = 500,
) -> ReconstructionResult:
    """Maximum-likelihood analyzer reconstruction from per-setting counts.

    Non-convergence returns the best-so-far analyzer with converged=False
    in the diagnostics rather than raising.
    """
    probes = probes or default_probes()
    diagnostics = {}
    effects = {}
    for s in SETTINGS:
        if s not in counts:
            raise InvalidParameterError(f"missing tomography counts for setting {s.name}")
        rec = _reconstruct_setting(counts[s], probes, max_iterations)
        diagnostics[s] = rec
        effects[s] = (rec.effect_plus, rec.effect_minus)
    analyzer = AnalyzerModel(effects=effects)
    return ReconstructionResult(
        analyzer=analyzer,
        converged=all(d.converged for d in diagnostics.values()),
        diagnostics=diagnostics,
    )


def principal_projector(effect: NDArray) -> quantum.Matrix:
    """Projector onto the principal eigenvector of an effect.

    Raises UndefinedDirectionError when the eigenvalues are degenerate and
    the effect has no preferred axis.
    """
    vals, vecs = np.linalg.eigh(np.asarray(effect, dtype=complex))
    if abs(vals[1] - vals[0]) < 1e-12:
        raise UndefinedDirectionError("effect eigenvalues are degenerate")
    top = vecs[:, np.argmax(vals)]
    return np.outer(top, top.conj())


def mub_deviation(analyzer: AnalyzerModel) -> float:
    """Worst-case departure of the analyzer bases from mutual unbiasedness.

    Uses the purified principal projectors of the plus effects; exact
    mutually unbiased bases give tr(Pi_i Pi_j) = 1/2 for i != j, so the
    deviation is max over pairs of |tr(Pi_i Pi_j) - 1/2| (0 ideal, 1/2 for
    parallel bases).
    """
    projectors = [principal_projector(analyzer.effect_plus(s)) for s in SETTINGS]
    worst = 0.0
    for i in range(3):
        for j in range(i + 1, 3):
            overlap = float(np.trace(projectors[i] @ projectors[j]).real)
            worst = max(worst, abs(overlap - 0.5))
    return worst


def purity(effect: NDArray) -> float:
    """tr(E^2) / tr(E)^2 of an effect, 1 for rank-one (pure) effects."""
    e = np.asarray(effect, dtype=complex)
    tr = float(np.trace(e).real)
    if tr <= 0:
        raise InvalidParameterError("effect has nonpositive trace")
    return float(np.trace(e @ e).real) / tr**2


# --- CSV interface ---------------------------------------------------------
# Per-setting files carry (probe_label, outcome, count); a combined file for
# all settings prefixes a setting column.

def write_counts_csv(
    path: str | Path, counts: Mapping[Setting, TomographyCounts], probes: ProbeSet | None = None
) -> None:
    probes = probes or default_probes()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["setting", "probe_label", "outcome", "count"])
        for s in SETTINGS:
            block = counts[s]
            for i, label in enumerate(probes.labels):
                for o, name in enumerate(OUTCOME_COLUMNS):
                    writer.writerow([s.name, label, name, _fmt(block.counts[i, o])])


def _fmt(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(float(value))


def read_counts_csv(
    path: str | Path, probes: ProbeSet | None = None
) -> dict[Setting, TomographyCounts]:
    probes = probes or default_probes()
    label_index = {label: i for i, label in enumerate(probes.labels)}
    outcome_index = {"+1": 0, "1": 0, "-1": 1, "none": 2, "0": 2}
    blocks = {s: np.zeros((len(probes), 3)) for s in SETTINGS}
    seen = {s: False for s in SETTINGS}
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
                probe = label_index[row[1].strip()]
                outcome = outcome_index[row[2].strip()]
                count = float(row[3])
            except (KeyError, ValueError) as exc:
                raise MalformedInputError(f"{path}: line {lineno}: {exc}") from None
            blocks[s][probe, outcome] += count
            seen[s] = True
    missing = [s.name for s in SETTINGS if not seen[s]]
    if missing:
        raise MalformedInputError(f"{path}: no rows for settings {missing}")
    out = {}
    for s in SETTINGS:
        shots = blocks[s].sum(axis=1)
        # exact-probability files have per-probe sums of 1.0
        if np.allclose(shots, 1.0, atol=1e-9):
            out[s] = TomographyCounts(counts=blocks[s], shots_per_probe=None)
        elif np.allclose(shots, shots[0]):
            out[s] = TomographyCounts(counts=blocks[s], shots_per_probe=float(shots[0]))
        else:
            raise MalformedInputError(f"{path}: unequal shots per probe for {s.name}")
    return out
