# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled DOP853 for the periodic 2x2 systems and their sigma-variation.

State y = (V, V_s) as 8 complex numbers, row-major 2x2 blocks.
    V'   = (M(t) - kappa) V
    V_s' = (M(t) - kappa) V_s + (diag(dd1, dd2) - kappa1) V
M has constant diagonal (d1, d2) and off-diagonals p12 g(t), p21 conj(g(t))
where g = c (direct) or conj(c) (adjoint).
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, pow, cos, sin

cdef extern from "complex.h" nogil:
    double cabs(double complex)
    double complex conj(double complex)

cdef enum:
    NS = 12
    NY = 8


cdef struct Rhs:
    double complex d1, d2, p12, p21, dd1, dd2
    double complex *coef
    int ncoef, lmin, adj, with_sigma


cdef inline double complex c_at(Rhs *r, double t) noexcept nogil:
    cdef double complex acc = 0
    cdef double complex e1 = cos(t) + 1j * sin(t)
    cdef double complex e = cos(r.lmin * t) + 1j * sin(r.lmin * t)
    cdef int l
    for l in range(r.ncoef):
        acc = acc + r.coef[l] * e
        e = e * e1
    return acc


cdef inline void rhs(Rhs *r, double t, double complex *y, double complex *f) noexcept nogil:
    cdef double complex c = c_at(r, t)
    cdef double complex g1, g2, m12, m21
    if r.adj:
        g1 = conj(c)
        g2 = c
    else:
        g1 = c
        g2 = conj(c)
    m12 = r.p12 * g1
    m21 = r.p21 * g2
    # V
    f[0] = r.d1 * y[0] + m12 * y[2]
    f[1] = r.d1 * y[1] + m12 * y[3]
    f[2] = m21 * y[0] + r.d2 * y[2]
    f[3] = m21 * y[1] + r.d2 * y[3]
    if r.with_sigma:
        f[4] = r.d1 * y[4] + m12 * y[6] + r.dd1 * y[0]
        f[5] = r.d1 * y[5] + m12 * y[7] + r.dd1 * y[1]
        f[6] = m21 * y[4] + r.d2 * y[6] + r.dd2 * y[2]
        f[7] = m21 * y[5] + r.d2 * y[7] + r.dd2 * y[3]
    else:
        f[4] = 0
        f[5] = 0
        f[6] = 0
        f[7] = 0


cdef double wnorm(double complex *v, double *scale, int n) noexcept nogil:
    cdef double s = 0, x
    cdef int i
    for i in range(n):
        x = cabs(v[i]) / scale[i]
        s += x * x
    return sqrt(s / n)


def integrate(double complex d1, double complex d2, double complex p12, double complex p21,
              bint adj, cnp.ndarray coef_in, int lmin,
              double complex dd1, double complex dd2,
              double[::1] nodes, double rtol, double atol, bint with_sigma,
              double[:, ::1] A, double[::1] B, double[::1] C,
              double[::1] E3, double[::1] E5, long max_steps=1000000):
    """Integrate from V(nodes[0]) = I; returns (Y, nsteps, nrejected), Y shape (n, 8)."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] coef = np.ascontiguousarray(coef_in, dtype=np.complex128)
    cdef Rhs r
    r.d1 = d1; r.d2 = d2; r.p12 = p12; r.p21 = p21; r.dd1 = dd1; r.dd2 = dd2
    r.coef = <double complex *> coef.data
    r.ncoef = coef.shape[0]; r.lmin = lmin; r.adj = adj; r.with_sigma = with_sigma
    cdef int n = 8 if with_sigma else 4
    cdef int nn = nodes.shape[0]
    out = np.zeros((nn, NY), dtype=np.complex128)
    cdef double complex[:, ::1] Y = out
    cdef double complex y[NY]
    cdef double complex ynew[NY]
    cdef double complex ytmp[NY]
    cdef double complex K[NS + 1][NY]
    cdef double complex e3[NY]
    cdef double complex e5[NY]
    cdef double scale[NY]
    cdef double t, h, hsug, tnext, err, e5n, e3n, den, factor, d0, dn1, dn2, h0, h1, x
    cdef bint clipped
    cdef int i, s, q, node
    cdef long steps = 0, rejected = 0
    for i in range(NY):
        y[i] = 0
    y[0] = 1
    y[3] = 1
    for i in range(NY):
        Y[0, i] = y[i]
    if nn < 2:
        return out, 0, 0
    t = nodes[0]
    rhs(&r, t, y, K[0])
    # initial step (Hairer's heuristic)
    for i in range(n):
        scale[i] = atol + cabs(y[i]) * rtol
    d0 = wnorm(y, scale, n)
    dn1 = wnorm(K[0], scale, n)
    h0 = 1e-6 if (d0 < 1e-5 or dn1 < 1e-5) else 0.01 * d0 / dn1
    for i in range(NY):
        ytmp[i] = y[i] + h0 * K[0][i]
    rhs(&r, t + h0, ytmp, K[1])
    for i in range(NY):
        e3[i] = (K[1][i] - K[0][i])
    dn2 = wnorm(e3, scale, n) / h0
    if dn1 <= 1e-15 and dn2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = pow(0.01 / max(dn1, dn2), 1.0 / 8.0)
    hsug = min(100 * h0, h1)
    node = 1
    while node < nn:
        tnext = nodes[node]
        clipped = False
        h = hsug
        if t + h >= tnext:
            h = tnext - t
            clipped = True
        if h < 1e-13 * max(1.0, fabs(t)):
            if clipped:
                # node coincides with t to rounding: just record it
                for i in range(NY):
                    Y[node, i] = y[i]
                node += 1
                continue
            raise FloatingPointError(f"step size underflow at t={t}")
        steps += 1
        if steps > max_steps:
            raise FloatingPointError(f"too many steps at t={t}")
        # stages
        with nogil:
            for s in range(1, NS):
                for i in range(NY):
                    ytmp[i] = y[i]
                    for q in range(s):
                        ytmp[i] = ytmp[i] + h * A[s, q] * K[q][i]
                rhs(&r, t + C[s] * h, ytmp, K[s])
            for i in range(NY):
                ynew[i] = y[i]
                for q in range(NS):
                    ynew[i] = ynew[i] + h * B[q] * K[q][i]
            rhs(&r, t + h, ynew, K[NS])
            for i in range(n):
                scale[i] = atol + max(cabs(y[i]), cabs(ynew[i])) * rtol
                e3[i] = 0
                e5[i] = 0
                for q in range(NS + 1):
                    e3[i] = e3[i] + K[q][i] * E3[q]
                    e5[i] = e5[i] + K[q][i] * E5[q]
            e5n = 0
            e3n = 0
            for i in range(n):
                x = cabs(e5[i]) / scale[i]
                e5n += x * x
                x = cabs(e3[i]) / scale[i]
                e3n += x * x
            if e5n == 0 and e3n == 0:
                err = 0
            else:
                den = e5n + 0.01 * e3n
                err = fabs(h) * e5n / sqrt(den * n)
        if err < 1:
            factor = 10.0 if err == 0 else min(10.0, 0.9 * pow(err, -1.0 / 8.0))
            t = tnext if clipped else t + h
            for i in range(NY):
                y[i] = ynew[i]
                K[0][i] = K[NS][i]
            if clipped:
                hsug = max(hsug, h * factor)
                for i in range(NY):
                    Y[node, i] = y[i]
                node += 1
            else:
                hsug = h * factor
        else:
            rejected += 1
            hsug = h * max(0.2, 0.9 * pow(err, -1.0 / 8.0))
    return out, steps, rejected
