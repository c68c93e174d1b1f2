"""Pure-numpy trial kernel, the fallback when the extension is unavailable.

Both backends consume the same pre-drawn uniform block, one row of four per
trial (QRNG bit 1, QRNG bit 0, detection/member draw, outcome draw), and
must produce bit-identical outputs. Inverse-CDF lookups use searchsorted
right semantics with the index clipped to the last cell.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

BACKEND_NAME = "python"

_CELL_ALICE = np.array([1, 1, -1, -1, 0, 0], dtype=np.int8)
_CELL_BOB = np.array([1, -1, 1, -1, 1, -1], dtype=np.int8)
_MARGINAL_ALICE = np.array([1, -1, 0], dtype=np.int8)
_BOB_TERNARY = np.array([1, -1, 0], dtype=np.int8)


def _settings_from_bits(u: NDArray) -> NDArray[np.int8]:
    bit1 = (u[:, 0] >= 0.5).astype(np.int8)
    bit0 = (u[:, 1] >= 0.5).astype(np.int8)
    return (2 * bit1 + bit0).astype(np.int8)  # 3 means discarded


def simulate_honest(
    u: NDArray[np.float64],
    eta_bob: float,
    joint_cdf: NDArray[np.float64],
    marginal_cdf: NDArray[np.float64],
) -> tuple[NDArray[np.int8], NDArray[np.int8], NDArray[np.int8]]:
    """Outcomes for honest trials; returns (setting, alice, bob) int8 arrays.

    joint_cdf is (3, 6) cumulative cell probabilities conditioned on Bob
    conclusive; marginal_cdf is (3, 3) cumulative Alice marginals used when
    Bob's detector misses (probability 1 - eta_bob).
    """
    n = u.shape[0]
    setting = _settings_from_bits(u)
    alice = np.zeros(n, dtype=np.int8)
    bob = np.zeros(n, dtype=np.int8)
    detected = u[:, 2] < eta_bob
    for s in range(3):
        hit = (setting == s) & detected
        if hit.any():
            idx = np.searchsorted(joint_cdf[s], u[hit, 3], side="right")
            idx = np.minimum(idx, 5)
            alice[hit] = _CELL_ALICE[idx]
            bob[hit] = _CELL_BOB[idx]
        miss = (setting == s) & ~detected
        if miss.any():
            idx = np.searchsorted(marginal_cdf[s], u[miss, 3], side="right")
            idx = np.minimum(idx, 2)
            alice[miss] = _MARGINAL_ALICE[idx]
    return setting, alice, bob


def simulate_lhs(
    u: NDArray[np.float64],
    member_cdf: NDArray[np.float64],
    responses: NDArray[np.int8],
    bob_cdf: NDArray[np.float64],
) -> tuple[NDArray[np.int8], NDArray[np.int8], NDArray[np.int8]]:
    """Outcomes for local-hidden-state trials.

    member_cdf is (m,) cumulative ensemble weights, responses is (m, 3)
    Alice's deterministic report per setting, bob_cdf is (m, 3, 2) cumulative
    Born probabilities [p+, p+ + p-] with the remainder inconclusive.
    """
    n = u.shape[0]
    setting = _settings_from_bits(u)
    alice = np.zeros(n, dtype=np.int8)
    bob = np.zeros(n, dtype=np.int8)
    live = setting < 3
    member = np.searchsorted(member_cdf, u[live, 2], side="right")
    member = np.minimum(member, len(member_cdf) - 1)
    s_live = setting[live]
    alice[live] = responses[member, s_live]
    c0 = bob_cdf[member, s_live, 0]
    c1 = bob_cdf[member, s_live, 1]
    u3 = u[live, 3]
    k = (u3 >= c0).astype(np.int8) + (u3 >= c1).astype(np.int8)
    bob[live] = _BOB_TERNARY[k]
    return setting, alice, bob
