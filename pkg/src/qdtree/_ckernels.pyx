# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; mirrors qdtree._pykernels."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def pair_branch(const double[::1] u, const double[::1] v, const double[::1] w,
                double phi_min):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i, j, m = 0
    cdef double phi, wij, dropped = 0.0
    W_ = np.empty(n * n)
    U_ = np.empty(n * n)
    V_ = np.empty(n * n)
    cdef double[::1] W = W_, U = U_, V = V_
    with nogil:
        for i in range(n):
            for j in range(n):
                phi = 1.0 + u[i] * u[j]
                wij = w[i] * w[j] * phi
                if phi < phi_min:
                    dropped += wij
                    continue
                W[m] = wij
                U[m] = (u[i] + u[j]) / phi
                V[m] = v[i] * v[j] / phi
                m += 1
    if m < n * n:
        return W_[:m].copy(), U_[:m].copy(), V_[:m].copy(), dropped
    return W_, U_, V_, dropped


def stratified_pick(const double[::1] cum, const double[::1] offsets):
    cdef Py_ssize_t n = offsets.shape[0], L = cum.shape[0]
    cdef Py_ssize_t i, k = 0
    cdef double total = cum[L - 1], step = total / n, x
    out_ = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] out = out_
    with nogil:
        for i in range(n):
            x = (i + offsets[i]) * step
            # positions increase, so a forward scan from the last hit suffices
            while k < L and cum[k] <= x:
                k += 1
            out[i] = k if k < L else L - 1
    return out_


def compressed_rounds(const double[::1] u, const double[::1] v,
                      const double[::1] cum, const Py_ssize_t[::1] perm,
                      const double[:, ::1] off_sample, const double[:, ::1] off_pair,
                      double phi_min):
    cdef Py_ssize_t rounds = off_sample.shape[0], n = off_sample.shape[1]
    cdef Py_ssize_t L = cum.shape[0]
    cdef Py_ssize_t r, i, j, k, q, idx
    cdef double total, step, x, acc, phi, bad, dropped = 0.0
    U_ = np.empty(rounds * n)
    V_ = np.empty(rounds * n)
    a_ = np.empty(n)
    b_ = np.empty(n)
    cdef double[::1] U = U_, V = V_, a = a_, b = b_
    with nogil:
        for r in range(rounds):
            # stratified N-sample from the permuted ensemble
            step = cum[L - 1] / n
            k = 0
            for i in range(n):
                x = (i + off_sample[r, i]) * step
                while k < L and cum[k] <= x:
                    k += 1
                idx = perm[k if k < L else L - 1]
                a[i] = u[idx]
                b[i] = v[idx]
            # total pair weight, forbidden pairs excluded
            total = 0.0
            bad = 0.0
            for i in range(n):
                for j in range(n):
                    phi = 1.0 + a[i] * a[j]
                    if phi >= phi_min:
                        total += phi
                    else:
                        bad += phi
            if bad > 0.0:
                dropped += bad / (total + bad)
            # stream the row-major pairs against the sorted positions
            step = total / n
            acc = 0.0
            q = 0
            x = off_pair[r, 0] * step
            for i in range(n):
                for j in range(n):
                    phi = 1.0 + a[i] * a[j]
                    if phi < phi_min:
                        continue
                    acc += phi
                    while q < n and acc > x:
                        U[r * n + q] = (a[i] + a[j]) / phi
                        V[r * n + q] = b[i] * b[j] / phi
                        q += 1
                        if q < n:
                            x = (q + off_pair[r, q]) * step
            # float round-off may leave the last position unmatched
            while q < n:
                U[r * n + q] = U[r * n + q - 1]
                V[r * n + q] = V[r * n + q - 1]
                q += 1
    return U_, V_, dropped / (rounds if rounds > 0 else 1)


def branch_pairs(const double[::1] ul, const double[::1] vl,
                 const double[::1] ur, const double[::1] vr):
    cdef Py_ssize_t n = ul.shape[0], i
    cdef double phi
    U_ = np.empty(n)
    V_ = np.empty(n)
    cdef double[::1] U = U_, V = V_
    with nogil:
        for i in range(n):
            phi = 1.0 + ul[i] * ur[i]
            U[i] = (ul[i] + ur[i]) / phi
            V[i] = vl[i] * vr[i] / phi
    return U_, V_


cdef inline void _neumaier(double* s, double* comp, double x) noexcept nogil:
    # branch-free two-sum: the rounding error of s + x is exact
    cdef double t = s[0] + x
    cdef double xp = t - s[0]
    comp[0] += (s[0] - (t - xp)) + (x - xp)
    s[0] = t


cdef void _support(const double[::1] p, Py_ssize_t* lo, Py_ssize_t* hi) noexcept nogil:
    cdef Py_ssize_t L = p.shape[0]
    lo[0] = 0
    hi[0] = L
    while lo[0] < L and p[lo[0]] == 0.0:
        lo[0] += 1
    while hi[0] > lo[0] and p[hi[0] - 1] == 0.0:
        hi[0] -= 1


def coarse_convolve(const double[::1] p, const double[::1] a, const double[::1] b):
    """Fused direct self-convolutions with compensated summation.

    Entries outside the support of p are exactly zero in a and b as well
    (|a|, |b| <= p), so loops are restricted to that window.
    """
    cdef Py_ssize_t L = p.shape[0], Lo = 2 * L - 1
    cdef Py_ssize_t n, i, j, ilo, ihi, lo, hi
    cdef double spp, cpp, saa, caa, spa, cpa, sbb, cbb
    P_ = np.zeros(Lo)
    A_ = np.zeros(Lo)
    B_ = np.zeros(Lo)
    cdef double[::1] P = P_, A = A_, B = B_
    with nogil:
        _support(p, &lo, &hi)
        for n in range(2 * lo, 2 * hi - 1):
            spp = cpp = saa = caa = spa = cpa = sbb = cbb = 0.0
            ilo = n - (hi - 1)
            if ilo < lo:
                ilo = lo
            # last i with i < j = n - i; C division truncates, so spell it out
            ihi = n // 2 - 1 if n % 2 == 0 else (n - 1) // 2
            i = ilo
            while i <= ihi:
                j = n - i
                _neumaier(&spp, &cpp, p[i] * p[j])
                _neumaier(&saa, &caa, a[i] * a[j])
                _neumaier(&spa, &cpa, p[i] * a[j] + p[j] * a[i])
                _neumaier(&sbb, &cbb, b[i] * b[j])
                i += 1
            # off-diagonal pairs count twice; doubling is exact
            spp *= 2.0; cpp *= 2.0; saa *= 2.0; caa *= 2.0
            sbb *= 2.0; cbb *= 2.0
            if n % 2 == 0:
                i = n // 2
                _neumaier(&spp, &cpp, p[i] * p[i])
                _neumaier(&saa, &caa, a[i] * a[i])
                _neumaier(&spa, &cpa, p[i] * a[i])
                _neumaier(&sbb, &cbb, b[i] * b[i])
            P[n] = (spp + cpp) + (saa + caa)
            A[n] = 2.0 * (spa + cpa)
            B[n] = sbb + cbb
    return P_, A_, B_
