# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch kernels: Cardano eigenvalues, discriminants and
branch matching for 2x2 / 3x3 complex matrices.

Same contracts as ``_pykernels``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, cbrt, copysign, hypot, atan2, cos, sin, INFINITY

cnp.import_array()

cdef double complex OMEGA = -0.5 + 0.8660254037844386j
cdef double complex OMEGA_BAR = -0.5 - 0.8660254037844386j

cdef int PERM2[2][2]
PERM2[0][:] = [0, 1]
PERM2[1][:] = [1, 0]
cdef int PERM3[6][3]
PERM3[0][:] = [0, 1, 2]
PERM3[1][:] = [0, 2, 1]
PERM3[2][:] = [1, 0, 2]
PERM3[3][:] = [1, 2, 0]
PERM3[4][:] = [2, 0, 1]
PERM3[5][:] = [2, 1, 0]


cdef inline double cabs_(double complex z) nogil:
    return hypot(z.real, z.imag)


cdef inline double cabs2_(double complex z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline double complex csqrt_(double complex z) nogil:
    # principal root without trig; sign of the zero imaginary part kept (C99 csqrt)
    cdef double r = hypot(z.real, z.imag)
    cdef double u, v
    if r == 0.0:
        return 0.0
    if z.real >= 0.0:
        u = sqrt(0.5 * (r + z.real))
        v = z.imag / (2.0 * u)
    else:
        v = copysign(sqrt(0.5 * (r - z.real)), z.imag)
        u = z.imag / (2.0 * v)
    return u + 1j * v


cdef inline double complex ccbrt_(double complex z) nogil:
    cdef double r
    cdef double t
    if z.real == 0.0 and z.imag == 0.0:
        return 0.0
    r = cbrt(hypot(z.real, z.imag))
    t = atan2(z.imag, z.real) / 3.0
    return r * cos(t) + 1j * (r * sin(t))


cdef inline void depressed3(double complex[:, :, ::1] m, Py_ssize_t k,
                            double complex *p, double complex *q,
                            double complex *beta) nogil:
    cdef double complex a, b, c, det
    a = -(m[k, 0, 0] + m[k, 1, 1] + m[k, 2, 2])
    b = (m[k, 0, 0] * m[k, 1, 1] - m[k, 0, 1] * m[k, 1, 0]
         + m[k, 0, 0] * m[k, 2, 2] - m[k, 0, 2] * m[k, 2, 0]
         + m[k, 1, 1] * m[k, 2, 2] - m[k, 1, 2] * m[k, 2, 1])
    det = (m[k, 0, 0] * (m[k, 1, 1] * m[k, 2, 2] - m[k, 1, 2] * m[k, 2, 1])
           - m[k, 0, 1] * (m[k, 1, 0] * m[k, 2, 2] - m[k, 1, 2] * m[k, 2, 0])
           + m[k, 0, 2] * (m[k, 1, 0] * m[k, 2, 1] - m[k, 1, 1] * m[k, 2, 0]))
    c = -det
    p[0] = b / 3.0 - a * a / 9.0
    q[0] = -c / 2.0 + a * b / 6.0 - a * a * a / 27.0
    beta[0] = a / 3.0


def eigvals_batch(mats):
    cdef double complex[:, :, ::1] m = np.ascontiguousarray(mats, dtype=np.complex128)
    cdef Py_ssize_t N = m.shape[0], n = m.shape[2], k
    out_arr = np.empty((N, n), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef double complex p, q, beta, s, wp, wm, ap, am, e0, d, root
    with nogil:
        for k in range(N):
            if n == 2:
                e0 = (m[k, 0, 0] + m[k, 1, 1]) / 2.0
                d = (m[k, 0, 0] - m[k, 1, 1]) / 2.0
                root = csqrt_(d * d + m[k, 0, 1] * m[k, 1, 0])
                out[k, 0] = e0 + root
                out[k, 1] = e0 - root
                continue
            depressed3(m, k, &p, &q, &beta)
            s = csqrt_(q * q + p * p * p)
            wp = q + s
            wm = q - s
            if cabs2_(wp) >= cabs2_(wm):
                ap = ccbrt_(wp)
                am = 0.0 if ap == 0.0 else -p / ap
            else:
                am = ccbrt_(wm)
                ap = -p / am
            out[k, 0] = ap + am - beta
            out[k, 1] = OMEGA * ap + OMEGA_BAR * am - beta
            out[k, 2] = OMEGA_BAR * ap + OMEGA * am - beta
    return out_arr


def discriminant_batch(mats):
    cdef double complex[:, :, ::1] m = np.ascontiguousarray(mats, dtype=np.complex128)
    cdef Py_ssize_t N = m.shape[0], n = m.shape[2], k
    out_arr = np.empty(N, dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    cdef double complex p, q, beta, d
    with nogil:
        for k in range(N):
            if n == 2:
                d = (m[k, 0, 0] - m[k, 1, 1]) / 2.0
                out[k] = d * d + m[k, 0, 1] * m[k, 1, 0]
            else:
                depressed3(m, k, &p, &q, &beta)
                out[k] = q * q + p * p * p
    return out_arr


cdef inline double row_gap(double complex[:, ::1] v, Py_ssize_t k, Py_ssize_t n) nogil:
    cdef double g = INFINITY, x
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(i + 1, n):
            x = cabs_(v[k, i] - v[k, j])
            if x < g:
                g = x
    return g


def min_gap_batch(vals):
    cdef double complex[:, ::1] v = np.ascontiguousarray(vals, dtype=np.complex128)
    cdef Py_ssize_t N = v.shape[0], n = v.shape[1], k
    out_arr = np.empty(N, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for k in range(N):
            out[k] = row_gap(v, k, n)
    return out_arr


cdef inline int assign(const double complex *prev, const double complex *nxt,
                       Py_ssize_t n, double *cost) nogil:
    """Index of the best permutation in PERM2/PERM3; writes its cost."""
    cdef int best = 0, j, i, np_ = 2 if n == 2 else 6
    cdef double c, bestc = INFINITY
    for j in range(np_):
        c = 0.0
        for i in range(n):
            if n == 2:
                c += cabs_(nxt[PERM2[j][i]] - prev[i])
            else:
                c += cabs_(nxt[PERM3[j][i]] - prev[i])
        if c < bestc:
            bestc = c
            best = j
    cost[0] = bestc
    return best


def best_assignment(prev, nxt):
    cdef double complex pv[3]
    cdef double complex nv[3]
    cdef Py_ssize_t n = len(prev), i
    cdef double cost
    for i in range(n):
        pv[i] = prev[i]
        nv[i] = nxt[i]
    cdef int j = assign(pv, nv, n, &cost)
    if n == 2:
        return (PERM2[j][0], PERM2[j][1]), cost
    return (PERM3[j][0], PERM3[j][1], PERM3[j][2]), cost


def continue_path(vals):
    cdef double complex[:, ::1] v = np.ascontiguousarray(vals, dtype=np.complex128)
    cdef Py_ssize_t N = v.shape[0], n = v.shape[1], k, i
    out_arr = np.empty((N, n), dtype=np.complex128)
    ratio_arr = np.empty(max(N - 1, 0), dtype=np.float64)
    cdef double complex[:, ::1] out = out_arr
    cdef double[::1] ratio = ratio_arr
    cdef double complex pv[3]
    cdef double complex nv[3]
    cdef double cost, gap
    cdef int j
    if N == 0:
        return out_arr, ratio_arr
    with nogil:
        for i in range(n):
            out[0, i] = v[0, i]
        for k in range(1, N):
            for i in range(n):
                pv[i] = out[k - 1, i]
                nv[i] = v[k, i]
            j = assign(pv, nv, n, &cost)
            for i in range(n):
                out[k, i] = nv[PERM2[j][i]] if n == 2 else nv[PERM3[j][i]]
            gap = row_gap(out, k - 1, n)
            ratio[k - 1] = cost / gap if gap > 0 else INFINITY
    return out_arr, ratio_arr
