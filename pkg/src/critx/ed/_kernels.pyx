# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled matrix-vector kernels; same contract as ``_kernels_py``."""


def tfim_matvec(const double[::1] v, double[::1] out, const long long[::1] states,
                const long long[::1] lookup, const double[::1] diag,
                const long long[::1] flip_masks, double hop):
    cdef Py_ssize_t a, b, n = v.shape[0], nb = flip_masks.shape[0]
    cdef long long lab
    cdef double s
    with nogil:
        for a in range(n):
            lab = states[a]
            s = diag[a] * v[a]
            for b in range(nb):
                s = s + hop * v[lookup[lab ^ flip_masks[b]]]
            out[a] = s
    return out.base


def spin1_matvec(const double[::1] v, double[::1] out, const long long[::1] states,
                 const signed char[:, ::1] digits, const long long[::1] lookup,
                 const double[::1] diag, const long long[::1] bond_i,
                 const long long[::1] bond_j, const long long[::1] pow3, double hop):
    cdef Py_ssize_t a, b, n = v.shape[0], nb = bond_i.shape[0]
    cdef long long lab, i, j, shift
    cdef signed char di, dj
    cdef double s
    with nogil:
        for a in range(n):
            lab = states[a]
            s = diag[a] * v[a]
            for b in range(nb):
                i = bond_i[b]
                j = bond_j[b]
                di = digits[a, i]
                dj = digits[a, j]
                shift = pow3[i] - pow3[j]
                if di < 2 and dj > 0:
                    s = s + hop * v[lookup[lab + shift]]
                if di > 0 and dj < 2:
                    s = s + hop * v[lookup[lab - shift]]
            out[a] = s
    return out.base
