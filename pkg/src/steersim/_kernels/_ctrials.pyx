# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled trial kernel: one pass over the pre-drawn uniform block.

Must stay outcome-identical to the numpy twin in python.py: same bit
convention (bit = u >= 0.5), same inverse-CDF comparisons (advance while
u >= cdf, clip to the last cell).
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "compiled"

cdef signed char CELL_ALICE[6]
cdef signed char CELL_BOB[6]
cdef signed char MARGINAL_ALICE[3]
cdef signed char BOB_TERNARY[3]

CELL_ALICE[0], CELL_ALICE[1], CELL_ALICE[2] = 1, 1, -1
CELL_ALICE[3], CELL_ALICE[4], CELL_ALICE[5] = -1, 0, 0
CELL_BOB[0], CELL_BOB[1], CELL_BOB[2] = 1, -1, 1
CELL_BOB[3], CELL_BOB[4], CELL_BOB[5] = -1, 1, -1
MARGINAL_ALICE[0], MARGINAL_ALICE[1], MARGINAL_ALICE[2] = 1, -1, 0
BOB_TERNARY[0], BOB_TERNARY[1], BOB_TERNARY[2] = 1, -1, 0


def simulate_honest(
    double[:, ::1] u,
    double eta_bob,
    double[:, ::1] joint_cdf,
    double[:, ::1] marginal_cdf,
):
    cdef Py_ssize_t n = u.shape[0]
    setting_arr = np.zeros(n, dtype=np.int8)
    alice_arr = np.zeros(n, dtype=np.int8)
    bob_arr = np.zeros(n, dtype=np.int8)
    cdef signed char[::1] setting = setting_arr
    cdef signed char[::1] alice = alice_arr
    cdef signed char[::1] bob = bob_arr

    cdef Py_ssize_t i, idx
    cdef int s
    cdef double draw
    with nogil:
        for i in range(n):
            s = 0
            if u[i, 0] >= 0.5:
                s += 2
            if u[i, 1] >= 0.5:
                s += 1
            setting[i] = <signed char> s
            if s == 3:
                continue
            draw = u[i, 3]
            if u[i, 2] < eta_bob:
                idx = 0
                while idx < 5 and draw >= joint_cdf[s, idx]:
                    idx += 1
                alice[i] = CELL_ALICE[idx]
                bob[i] = CELL_BOB[idx]
            else:
                idx = 0
                while idx < 2 and draw >= marginal_cdf[s, idx]:
                    idx += 1
                alice[i] = MARGINAL_ALICE[idx]
    return setting_arr, alice_arr, bob_arr


def simulate_lhs(
    double[:, ::1] u,
    double[::1] member_cdf,
    signed char[:, ::1] responses,
    double[:, :, ::1] bob_cdf,
):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t n_members = member_cdf.shape[0]
    setting_arr = np.zeros(n, dtype=np.int8)
    alice_arr = np.zeros(n, dtype=np.int8)
    bob_arr = np.zeros(n, dtype=np.int8)
    cdef signed char[::1] setting = setting_arr
    cdef signed char[::1] alice = alice_arr
    cdef signed char[::1] bob = bob_arr

    cdef Py_ssize_t i, m
    cdef int s, k
    cdef double draw
    with nogil:
        for i in range(n):
            s = 0
            if u[i, 0] >= 0.5:
                s += 2
            if u[i, 1] >= 0.5:
                s += 1
            setting[i] = <signed char> s
            if s == 3:
                continue
            m = 0
            draw = u[i, 2]
            while m < n_members - 1 and draw >= member_cdf[m]:
                m += 1
            alice[i] = responses[m, s]
            draw = u[i, 3]
            k = 0
            if draw >= bob_cdf[m, s, 0]:
                k += 1
            if draw >= bob_cdf[m, s, 1]:
                k += 1
            bob[i] = BOB_TERNARY[k]
    return setting_arr, alice_arr, bob_arr
