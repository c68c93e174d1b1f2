"""Exact one- and two-qubit linear algebra.

States are plain numpy arrays: a qubit state is either a 2x2 complex density
matrix or a real Bloch 3-vector, a two-qubit state is a 4x4 complex density
matrix, and a measurement effect is a 2x2 complex matrix E with 0 <= E <= I.
All downstream count models reduce to the Born rule implemented here.

Convention: outcome +1 corresponds to the first polarization of each basis
pair, so Z <-> H/V, X <-> +45/-45 and Y <-> R/L, with H at the north pole
of the Bloch sphere.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np
from numpy.typing import NDArray

from .errors import InvalidEffectError, InvalidParameterError, InvalidStateError

ATOL_ALGEBRAIC = 1e-12  # Hermiticity, trace and normalization checks
ATOL_PSD = 1e-10        # eigenvalue slack after floating-point eigensolves

Matrix = NDArray[np.complex128]

I2: Matrix = np.eye(2, dtype=complex)
SIGMA_X: Matrix = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y: Matrix = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z: Matrix = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS: tuple[Matrix, Matrix, Matrix] = (SIGMA_X, SIGMA_Y, SIGMA_Z)

# Pure polarization states, |0> = H.
KET = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "+45": np.array([1, 1], dtype=complex) / np.sqrt(2),
    "-45": np.array([1, -1], dtype=complex) / np.sqrt(2),
    "R": np.array([1, 1j], dtype=complex) / np.sqrt(2),
    "L": np.array([1, -1j], dtype=complex) / np.sqrt(2),
}


def projector(ket: NDArray) -> Matrix:
    """Rank-1 projector |k><k| for a (not necessarily normalized) ket."""
    k = np.asarray(ket, dtype=complex)
    k = k / np.linalg.norm(k)
    return np.outer(k, k.conj())


def is_hermitian(m: NDArray, atol: float = ATOL_ALGEBRAIC) -> bool:
    m = np.asarray(m)
    return bool(np.allclose(m, m.conj().T, atol=atol, rtol=0.0))


def check_density(rho: NDArray, dim: int = 2) -> Matrix:
    """Validate a density matrix (Hermitian, unit trace, PSD) and return it."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (dim, dim):
        raise InvalidStateError(f"expected a {dim}x{dim} matrix, got shape {rho.shape}")
    if not is_hermitian(rho):
        raise InvalidStateError("density matrix is not Hermitian")
    tr = complex(np.trace(rho)).real
    if abs(tr - 1.0) > 1e-9:
        raise InvalidStateError(f"density matrix trace {tr} != 1")
    if np.linalg.eigvalsh(rho).min() < -ATOL_PSD:
        raise InvalidStateError("density matrix is not positive semidefinite")
    return rho


def check_effect(effect: NDArray) -> Matrix:
    """Validate a measurement effect (Hermitian, 0 <= E <= I) and return it."""
    e = np.asarray(effect, dtype=complex)
    if e.shape != (2, 2):
        raise InvalidEffectError(f"expected a 2x2 matrix, got shape {e.shape}")
    if not is_hermitian(e):
        raise InvalidEffectError("effect is not Hermitian")
    ev = np.linalg.eigvalsh(e)
    if ev.min() < -ATOL_PSD or ev.max() > 1.0 + ATOL_PSD:
        raise InvalidEffectError(f"effect eigenvalues {ev} outside [0, 1]")
    return e


def bloch_to_density(bloch: Iterable[float]) -> Matrix:
    """Density matrix (I + b.sigma)/2 of a Bloch vector inside the unit ball."""
    b = np.asarray(bloch, dtype=float)
    if b.shape != (3,):
        raise InvalidStateError(f"Bloch vector must have 3 components, got {b.shape}")
    n2 = float(b @ b)
    if n2 > 1.0 + 1e-9:
        raise InvalidStateError(f"Bloch vector norm {np.sqrt(n2)} exceeds 1")
    return 0.5 * (I2 + b[0] * SIGMA_X + b[1] * SIGMA_Y + b[2] * SIGMA_Z)


def density_to_bloch(rho: NDArray) -> NDArray[np.float64]:
    """Bloch vector (tr(rho X), tr(rho Y), tr(rho Z)) of a qubit density matrix."""
    rho = np.asarray(rho, dtype=complex)
    return np.array([np.trace(rho @ s).real for s in PAULIS])


def expectation(state: NDArray, observable: NDArray) -> float:
    """Real part of tr(observable . state)."""
    return float(np.trace(np.asarray(observable) @ np.asarray(state)).real)


def born_probability(state: NDArray, effect: NDArray) -> float:
    """Outcome probability tr(E rho), clamped to [0, 1].

    Raises InvalidStateError / InvalidEffectError on invalid inputs.
    """
    rho = check_density(state)
    e = check_effect(effect)
    p = float(np.trace(e @ rho).real)
    return min(max(p, 0.0), 1.0)


def effect_coefficients(effect: NDArray) -> tuple[float, NDArray[np.float64]]:
    """Closed form (a, w) with tr(E rho_b) = a + w.b for every Bloch vector b.

    a = tr(E)/2 and w_k = tr(E sigma_k)/2; valid for any Hermitian E.
    """
    e = np.asarray(effect, dtype=complex)
    a = float(np.trace(e).real) / 2.0
    w = np.array([np.trace(e @ s).real for s in PAULIS]) / 2.0
    return a, w


def singlet() -> Matrix:
    """Two-qubit singlet density matrix for (|10> - |01>)/sqrt(2)."""
    psi = np.zeros(4, dtype=complex)
    psi[2] = 1.0 / np.sqrt(2.0)   # |10>
    psi[1] = -1.0 / np.sqrt(2.0)  # |01>
    return np.outer(psi, psi.conj())


def werner(visibility: float) -> Matrix:
    """Isotropic mixture V * singlet + (1 - V) * I/4.

    Same-basis joint distribution is P(a,b) = (1 - a*b*V)/4 for a,b = +-1.
    """
    v = float(visibility)
    if not 0.0 <= v <= 1.0:
        raise InvalidParameterError(f"visibility {v} outside [0, 1]")
    return v * singlet() + (1.0 - v) * np.eye(4, dtype=complex) / 4.0


def alice_marginal(joint: NDArray) -> Matrix:
    """Partial trace over the second (Bob) factor of a 4x4 density matrix."""
    r = np.asarray(joint, dtype=complex).reshape(2, 2, 2, 2)
    return np.einsum("ikjk->ij", r)


def bob_marginal(joint: NDArray) -> Matrix:
    """Partial trace over the first (Alice) factor of a 4x4 density matrix."""
    r = np.asarray(joint, dtype=complex).reshape(2, 2, 2, 2)
    return np.einsum("kikj->ij", r)


def conditional_state(joint: NDArray, alice_effect: NDArray) -> tuple[float, NDArray[np.float64]]:
    """Bob's subensemble after Alice's effect fires on her factor.

    Returns (p, bloch) with p = tr((E x I) rho) and bloch the Bloch vector of
    Bob's renormalized conditional state. For p < 1e-15 the probability 0 is
    returned together with the maximally mixed placeholder (zero vector).
    """
    rho = check_density(joint, dim=4)
    e = check_effect(alice_effect)
    # r[a, b, a', b'] = rho[(a b), (a' b')]; tr_A[(E x I) rho] contracts both
    # Alice indices against E.
    r = rho.reshape(2, 2, 2, 2)
    bob = np.einsum("ak,kbac->bc", e, r)
    p = float(np.trace(bob).real)
    if p < 1e-15:
        return 0.0, np.zeros(3)
    return p, density_to_bloch(bob / p)


def correlation(joint: NDArray, obs_a: NDArray, obs_b: NDArray) -> float:
    """Joint correlation <A x B> on a two-qubit state."""
    rho = np.asarray(joint, dtype=complex)
    return float(np.trace(np.kron(obs_a, obs_b) @ rho).real)


def trace_distance(a: NDArray, b: NDArray) -> float:
    """Trace distance 0.5 * ||A - B||_1 for Hermitian matrices."""
    d = np.asarray(a, dtype=complex) - np.asarray(b, dtype=complex)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(d)).sum())


# --- JSON schema for operators: complex numbers as [re, im] pairs, --------
# --- matrices as row-major nested arrays. ----------------------------------

def matrix_to_json(m: NDArray) -> list:
    """Encode a complex matrix as row-major nested [re, im] pairs."""
    a = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def matrix_from_json(data: object) -> Matrix:
    """Decode the row-major [re, im] nested-array matrix encoding."""
    try:
        rows = [[complex(entry[0], entry[1]) for entry in row] for row in data]  # type: ignore[union-attr]
        m = np.array(rows, dtype=complex)
    except (TypeError, ValueError, IndexError) as exc:
        raise InvalidParameterError(f"malformed matrix encoding: {exc}") from None
    if m.ndim != 2:
        raise InvalidParameterError(f"matrix encoding has {m.ndim} dimensions, expected 2")
    return m
