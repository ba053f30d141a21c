# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hierarchy propagator; mirrors _hier.run_chunk_numpy.

Same equations and stepping as the numpy kernel on the same compressed
active-level tables; the generator arrives as sparse triplets and the GIL
is released across the whole chunk.
"""

import numpy as np

ctypedef double complex cplx


cdef void _rhs(cplx[:, ::1] Y, cplx[:, ::1] G,
               cplx[::1] mv, int[::1] mi, int[::1] mj, int nnz,
               double amp, double gamma, cplx z1, cplx z2,
               int[::1] k1, int[::1] k2, int[::1] lo1, int[::1] lo2,
               int[::1] up1, int[::1] up2, int nact) noexcept nogil:
    cdef int m, i, t
    cdef double damp
    for m in range(nact):
        damp = -gamma * (k1[m] + k2[m])
        for i in range(7):
            G[m, i] = damp * Y[m, i]
        for t in range(nnz):
            G[m, mi[t]] = G[m, mi[t]] + mv[t] * Y[m, mj[t]]
        G[m, 0] = G[m, 0] + amp * (z1 * Y[m, 1] + z2 * Y[m, 4])
        if lo1[m] >= 0:
            G[m, 0] = G[m, 0] + 0.5 * amp * k1[m] * Y[lo1[m], 1]
        if lo2[m] >= 0:
            G[m, 0] = G[m, 0] + 0.5 * amp * k2[m] * Y[lo2[m], 4]
        if up1[m] >= 0:
            G[m, 1] = G[m, 1] - amp * Y[up1[m], 0]
        if up2[m] >= 0:
            G[m, 4] = G[m, 4] - amp * Y[up2[m], 0]


def run_chunk_cy(cplx[::1] mv, int[::1] mi, int[::1] mj,
                 double amp, double gamma,
                 cplx[::1] psi0, cplx[:, :, ::1] zs,
                 double dt, int n_steps, int stride,
                 int[::1] k1, int[::1] k2, int[::1] lo1, int[::1] lo2,
                 int[::1] up1, int[::1] up2):
    cdef int B = zs.shape[0]
    cdef int nact = k1.shape[0]
    cdef int nnz = mv.shape[0]
    cdef int n_out = n_steps // stride + 1

    out_arr = np.empty((B, n_out, 7), dtype=complex)
    Y_arr = np.empty((nact, 7), dtype=complex)
    K1_arr = np.empty_like(Y_arr)
    K2_arr = np.empty_like(Y_arr)
    K3_arr = np.empty_like(Y_arr)
    K4_arr = np.empty_like(Y_arr)
    Yt_arr = np.empty_like(Y_arr)

    cdef cplx[:, :, ::1] out = out_arr
    cdef cplx[:, ::1] Y = Y_arr
    cdef cplx[:, ::1] K1 = K1_arr
    cdef cplx[:, ::1] K2 = K2_arr
    cdef cplx[:, ::1] K3 = K3_arr
    cdef cplx[:, ::1] K4 = K4_arr
    cdef cplx[:, ::1] Yt = Yt_arr

    cdef int b, n, m, i
    cdef double half = 0.5 * dt
    cdef double sixth = dt / 6.0
    cdef cplx za1, za2, zm1, zm2, zb1, zb2

    with nogil:
        for b in range(B):
            for m in range(nact):
                for i in range(7):
                    Y[m, i] = 0.0
            for i in range(7):
                Y[0, i] = psi0[i]
                out[b, 0, i] = psi0[i]
            for n in range(n_steps):
                za1 = zs[b, 0, 2 * n]
                za2 = zs[b, 1, 2 * n]
                zm1 = zs[b, 0, 2 * n + 1]
                zm2 = zs[b, 1, 2 * n + 1]
                zb1 = zs[b, 0, 2 * n + 2]
                zb2 = zs[b, 1, 2 * n + 2]
                _rhs(Y, K1, mv, mi, mj, nnz, amp, gamma, za1, za2,
                     k1, k2, lo1, lo2, up1, up2, nact)
                for m in range(nact):
                    for i in range(7):
                        Yt[m, i] = Y[m, i] + half * K1[m, i]
                _rhs(Yt, K2, mv, mi, mj, nnz, amp, gamma, zm1, zm2,
                     k1, k2, lo1, lo2, up1, up2, nact)
                for m in range(nact):
                    for i in range(7):
                        Yt[m, i] = Y[m, i] + half * K2[m, i]
                _rhs(Yt, K3, mv, mi, mj, nnz, amp, gamma, zm1, zm2,
                     k1, k2, lo1, lo2, up1, up2, nact)
                for m in range(nact):
                    for i in range(7):
                        Yt[m, i] = Y[m, i] + dt * K3[m, i]
                _rhs(Yt, K4, mv, mi, mj, nnz, amp, gamma, zb1, zb2,
                     k1, k2, lo1, lo2, up1, up2, nact)
                for m in range(nact):
                    for i in range(7):
                        Y[m, i] = Y[m, i] + sixth * (
                            K1[m, i] + 2.0 * (K2[m, i] + K3[m, i]) + K4[m, i])
                if (n + 1) % stride == 0:
                    for i in range(7):
                        out[b, (n + 1) // stride, i] = Y[0, i]
    return out_arr
