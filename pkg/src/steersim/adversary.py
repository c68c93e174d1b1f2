"""Numerical optimization of Alice's best local-hidden-state strategy.

For a single pre-distributed pure state with Bloch vector b, the steering
value Alice can reach against a characterized analyzer is

    cheat(b) = sum_i m_i(b)^2,
    m_i(b) = (tr(E_i+ rho_b) - tr(E_i- rho_b)) / (tr(E_i+ rho_b) + tr(E_i- rho_b)),

and by convexity the optimum over arbitrary ensembles equals the optimum
over pure states, i.e. over the unit sphere. The maximizer runs a coarse
sphere grid followed by derivative-free local refinement from the best
(deduplicated) grid seeds, and reports a Lipschitz-bounded certificate of
how far the true optimum can exceed the grid value.

For ideal mutually unbiased analyzers cheat(b) = |b|^2 = 1 on the whole
sphere, which is the steering bound itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import minimize

from . import tomography
from .errors import InvalidParameterError, InvalidStateError, ReconstructionError
from .model import SETTINGS, AnalyzerModel, Setting
from .quantum import effect_coefficients


@dataclass(frozen=True)
class OptimizerConfig:
    grid_step_deg: float = 1.0
    n_starts: int = 6
    max_evals: int = 4000
    fatol: float = 1e-12
    xatol: float = 1e-9

    def __post_init__(self):
        if self.grid_step_deg <= 0 or self.grid_step_deg > 30:
            raise InvalidParameterError(f"grid step {self.grid_step_deg} deg out of range")


@dataclass(frozen=True)
class Certificate:
    """Grid-oracle bound for the refined optimum.

    grid_best is the best value on the coarse grid; gap_bound is a
    Lipschitz-based bound on how much the true sphere optimum can exceed
    grid_best (infinite when a conclusive-probability denominator can
    vanish on the sphere). A sound result satisfies
    grid_best <= s_max <= grid_best + gap_bound.
    """

    grid_best: float
    grid_step_deg: float
    gap: float
    gap_bound: float


@dataclass(frozen=True)
class CheatResult:
    s_max: float
    argmax_bloch: NDArray[np.float64]
    optimizer_evals: int
    certificate: Certificate
    converged: bool = True

    def to_json(self) -> dict:
        return {
            "s_max": self.s_max,
            "argmax_bloch": [float(c) for c in self.argmax_bloch],
            "optimizer_evals": self.optimizer_evals,
            "converged": self.converged,
            "certificate": {
                "grid_best": self.certificate.grid_best,
                "grid_step_deg": self.certificate.grid_step_deg,
                "gap": self.certificate.gap,
                "gap_bound": self.certificate.gap_bound,
            },
        }


@dataclass(frozen=True)
class _RatioCoeffs:
    """Per-setting numerator/denominator affine coefficients of m_i(b)."""

    num0: NDArray
    numw: NDArray  # (3, 3)
    den0: NDArray
    denw: NDArray  # (3, 3)

    @classmethod
    def from_analyzer(cls, analyzer: AnalyzerModel) -> "_RatioCoeffs":
        num0 = np.empty(3)
        den0 = np.empty(3)
        numw = np.empty((3, 3))
        denw = np.empty((3, 3))
        for s in SETTINGS:
            a_p, w_p = effect_coefficients(analyzer.effect_plus(s))
            a_m, w_m = effect_coefficients(analyzer.effect_minus(s))
            num0[s] = a_p - a_m
            den0[s] = a_p + a_m
            numw[s] = w_p - w_m
            denw[s] = w_p + w_m
        return cls(num0=num0, numw=numw, den0=den0, denw=denw)

    def values(self, bloch: NDArray) -> NDArray:
        """cheat values for an (n, 3) batch of Bloch vectors."""
        num = self.num0 + bloch @ self.numw.T
        den = self.den0 + bloch @ self.denw.T
        with np.errstate(divide="ignore", invalid="ignore"):
            m = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), 0.0)
        return (m * m).sum(axis=-1)

    def lipschitz_bound(self) -> float:
        """Bound on |grad cheat| over the sphere; inf if a denominator can vanish."""
        total = 0.0
        for i in range(3):
            den_min = self.den0[i] - float(np.linalg.norm(self.denw[i]))
            if den_min <= 1e-12:
                return float("inf")
            total += (
                2.0
                * (np.linalg.norm(self.numw[i]) + np.linalg.norm(self.denw[i]))
                / den_min
            )
        return total


def cheat_value(bloch, analyzer: AnalyzerModel) -> float:
    """Steering value of the single-state strategy with Bloch vector b.

    b must be a unit vector (the optimum is pure by convexity); a setting
    whose conclusive probability vanishes on b contributes 0.
    """
    b = np.asarray(bloch, dtype=float)
    if b.shape != (3,):
        raise InvalidStateError(f"Bloch vector must have 3 components, got {b.shape}")
    if abs(b @ b - 1.0) > 2e-9:
        raise InvalidStateError(f"cheat states must be pure; |b| = {np.linalg.norm(b)}")
    return float(_RatioCoeffs.from_analyzer(analyzer).values(b[None, :])[0])


def _sphere_grid(step_deg: float) -> NDArray:
    theta = np.deg2rad(np.arange(0.0, 180.0 + step_deg / 2, step_deg))
    phi = np.deg2rad(np.arange(0.0, 360.0, step_deg))
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    st = np.sin(tt)
    return np.column_stack(
        [(st * np.cos(pp)).ravel(), (st * np.sin(pp)).ravel(), np.cos(tt).ravel()]
    )


def _tangent_frame(b: NDArray) -> tuple[NDArray, NDArray]:
    helper = np.array([1.0, 0.0, 0.0]) if abs(b[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(b, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(b, e1)
    return e1, e2


def max_cheat_value(
    analyzer: AnalyzerModel, cfg: OptimizerConfig | None = None
) -> CheatResult:
    """Maximize the cheat value over the unit sphere.

    Coarse grid scan, then Nelder-Mead refinement in local tangent-plane
    coordinates from the top grid seeds (deduplicated by angular distance).
    Exceeding cfg.max_evals during refinement returns the best-so-far value
    flagged converged=False.
    """
    cfg = cfg or OptimizerConfig()
    coeffs = _RatioCoeffs.from_analyzer(analyzer)

    grid = _sphere_grid(cfg.grid_step_deg)
    values = coeffs.values(grid)
    evals = len(grid)
    order = np.argsort(values)[::-1]
    grid_best = float(values[order[0]])

    # seeds: best grid points separated by at least a few grid cells
    min_sep = np.cos(np.deg2rad(5.0 * cfg.grid_step_deg))
    seeds: list[NDArray] = []
    for idx in order[: 50 * cfg.n_starts]:
        candidate = grid[idx]
        if all(candidate @ s <= min_sep for s in seeds):
            seeds.append(candidate)
        if len(seeds) >= cfg.n_starts:
            break

    best_value = grid_best
    best_bloch = grid[order[0]] / np.linalg.norm(grid[order[0]])
    converged = True
    for seed in seeds:
        e1, e2 = _tangent_frame(seed)

        def objective(t: NDArray) -> float:
            v = seed + t[0] * e1 + t[1] * e2
            v = v / np.linalg.norm(v)
            return -float(coeffs.values(v[None, :])[0])

        res = minimize(
            objective,
            np.zeros(2),
            method="Nelder-Mead",
            options={
                "fatol": cfg.fatol,
                "xatol": cfg.xatol,
                "maxfev": cfg.max_evals,
            },
        )
        evals += int(res.nfev)
        if not res.success:
            converged = False
        if -res.fun > best_value:
            best_value = -float(res.fun)
            v = seed + res.x[0] * e1 + res.x[1] * e2
            best_bloch = v / np.linalg.norm(v)

    # worst-case distance from any sphere point to the nearest grid node
    cover_rad = np.deg2rad(cfg.grid_step_deg) / np.sqrt(2.0)
    gap_bound = coeffs.lipschitz_bound() * cover_rad
    certificate = Certificate(
        grid_best=grid_best,
        grid_step_deg=cfg.grid_step_deg,
        gap=best_value - grid_best,
        gap_bound=gap_bound,
    )
    return CheatResult(
        s_max=best_value,
        argmax_bloch=best_bloch,
        optimizer_evals=evals,
        certificate=certificate,
        converged=converged,
    )


def min_efficiency(visibility: float) -> float:
    """Efficiency at which the honest prediction 3*eta*V^2 crosses 1."""
    v = float(visibility)
    if not 0.0 < v <= 1.0:
        raise InvalidParameterError(f"visibility {v} outside (0, 1]")
    return 1.0 / (3.0 * v * v)


def mc_cheat_bound_error(
    analyzer_counts: Mapping[Setting, tomography.TomographyCounts],
    n_resamples: int = 100,
    rng: np.random.Generator | None = None,
    probes: tomography.ProbeSet | None = None,
    cfg: OptimizerConfig | None = None,
) -> float:
    """Poissonian Monte-Carlo standard error of the cheating bound.

    Resamples the tomography counts, re-reconstructs the analyzer and
    re-optimizes per replica. Exact (infinite-shot) inputs are not
    resampled, so the spread collapses to zero. Failed replicas are skipped;
    more than 10% failures raises ReconstructionError.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    probes = probes or tomography.default_probes()
    values = []
    failures = 0
    for _ in range(n_resamples):
        replica = {}
        for s in SETTINGS:
            block = analyzer_counts[s]
            if block.exact:
                replica[s] = block
            else:
                counts = rng.poisson(lam=block.counts).astype(float)
                replica[s] = tomography.TomographyCounts(
                    counts=counts, shots_per_probe=None
                )
        try:
            rec = tomography.reconstruct_analyzer(replica, probes)
            values.append(max_cheat_value(rec.analyzer, cfg).s_max)
        except (InvalidParameterError, ReconstructionError):
            failures += 1
    if failures > 0.1 * n_resamples:
        raise ReconstructionError(
            f"{failures}/{n_resamples} tomography replicas failed to reconstruct"
        )
    if len(values) < 2:
        raise ReconstructionError("not enough successful replicas")
    return float(np.std(values, ddof=1))
