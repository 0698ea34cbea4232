# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: batched classical Kloosterman sums and the
norm-bucketed dihedral sums.  Contracts match _kernels_py."""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()

BACKEND = "cython"


def unit_inverses(long long c):
    """Units x mod c with their inverses, ascending in x."""
    cdef list xs = []
    cdef long long x
    for x in range(1, c):
        if _gcd(x, c) == 1:
            xs.append(x)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] xs_arr = np.array(xs, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] xinvs = np.empty(len(xs), dtype=np.int64)
    cdef Py_ssize_t i
    for i in range(xs_arr.shape[0]):
        xinvs[i] = _invmod(xs_arr[i], c)
    return xs_arr, xinvs


cdef long long _gcd(long long a, long long b):
    cdef long long t
    while b:
        t = a % b
        a = b
        b = t
    return a


cdef long long _invmod(long long a, long long m):
    cdef long long g = m, x = 0, x1 = 1, q, t
    cdef long long aa = a % m
    while aa:
        q = g / aa
        t = g - q * aa; g = aa; aa = t
        t = x - q * x1; x = x1; x1 = t
    return x % m if x % m >= 0 else x % m + m


def kloosterman_many(ms, ns, long long c, xs, xinvs):
    """S(m_i, n_i; c) for parallel arrays of m and n at one modulus c."""
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ms_a = np.ascontiguousarray(ms, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ns_a = np.ascontiguousarray(ns, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] xs_a = np.ascontiguousarray(xs, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] xinvs_a = np.ascontiguousarray(xinvs, dtype=np.int64)
    cdef Py_ssize_t npairs = ms_a.shape[0], nx = xs_a.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(npairs, dtype=np.complex128)
    if c == 1:
        out[:] = 1.0
        return out
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cos_t = np.empty(c, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sin_t = np.empty(c, dtype=np.float64)
    cdef long long j
    cdef double two_pi_over_c = 2.0 * np.pi / c
    for j in range(c):
        cos_t[j] = cos(two_pi_over_c * j)
        sin_t[j] = sin(two_pi_over_c * j)
    cdef Py_ssize_t i, t
    cdef long long m, n, idx
    cdef double re, im
    for i in range(npairs):
        m = ms_a[i] % c
        n = ns_a[i] % c
        if m < 0:
            m += c
        if n < 0:
            n += c
        re = 0.0
        im = 0.0
        for t in range(nx):
            idx = (m * xs_a[t] + n * xinvs_a[t]) % c
            re += cos_t[idx]
            im += sin_t[idx]
        out[i] = re + 1j * im
    return out


def dihedral_bucket(long long p, long long k, long long A, long long B,
                    xi_table, long long m_red):
    """Norm-bucketed dihedral sums; see _kernels_py.dihedral_bucket."""
    cdef long long pk = p**k
    cdef long long pm = p**m_red
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] xi = np.ascontiguousarray(xi_table, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.zeros(pk, dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cos_t = np.empty(pk, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sin_t = np.empty(pk, dtype=np.float64)
    cdef long long j
    cdef double ang = -2.0 * np.pi / pk
    for j in range(pk):
        cos_t[j] = cos(ang * j)
        sin_t[j] = sin(ang * j)
    cdef long long a, b, norm, tr, am, bm
    cdef double complex v
    for b in range(pk):
        bm = b % pm
        for a in range(pk):
            v = xi[a % pm, bm]
            if v == 0:
                continue
            norm = (a * a - A * a * b + B * b * b) % pk
            if norm < 0:
                norm += pk
            tr = (2 * a - A * b) % pk
            if tr < 0:
                tr += pk
            out[norm] += v * (cos_t[tr] + 1j * sin_t[tr])
    return out
