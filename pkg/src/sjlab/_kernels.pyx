# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Mirrors ``sjlab._kernels_py`` function by function."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs
from libc.stdlib cimport malloc, free

from .errors import NotPositiveDefinite, Singular

cnp.import_array()

BACKEND = "cython"


def cholesky_lower(S, double tol):
    cdef double[:, ::1] s = np.ascontiguousarray(S, dtype=np.float64)
    cdef Py_ssize_t n = s.shape[0], i, j, k
    L_arr = np.zeros((n, n))
    cdef double[:, ::1] L = L_arr
    cdef double acc
    for j in range(n):
        acc = s[j, j]
        for k in range(j):
            acc -= L[j, k] * L[j, k]
        if not acc > tol:
            raise NotPositiveDefinite(f"pivot {j} is {acc:.3e} (tolerance {tol:.1e})")
        L[j, j] = sqrt(acc)
        for i in range(j + 1, n):
            acc = s[i, j]
            for k in range(j):
                acc -= L[i, k] * L[j, k]
            L[i, j] = acc / L[j, j]
    return L_arr


def solve_complex(A, B, double rel_tol):
    U_arr = np.array(A, dtype=np.complex128, order="C")
    X_arr = np.array(B, dtype=np.complex128, order="C")
    cdef double complex[:, ::1] U = U_arr
    cdef double complex[:, ::1] X = X_arr
    cdef Py_ssize_t n = U.shape[0], nrhs = X.shape[1], c, r, p, q
    cdef double amax = 0.0, best, thresh, mag
    cdef double complex f, tmp
    for r in range(n):
        for q in range(n):
            mag = abs(U[r, q])
            if mag > amax:
                amax = mag
    thresh = rel_tol * (amax if amax > 1e-300 else 1e-300)
    for c in range(n):
        p = c
        best = abs(U[c, c])
        for r in range(c + 1, n):
            mag = abs(U[r, c])
            if mag > best:
                best = mag
                p = r
        if best < thresh:
            raise Singular(f"pivot {c} is {best:.3e}")
        if p != c:
            for q in range(n):
                tmp = U[c, q]; U[c, q] = U[p, q]; U[p, q] = tmp
            for q in range(nrhs):
                tmp = X[c, q]; X[c, q] = X[p, q]; X[p, q] = tmp
        for r in range(c + 1, n):
            f = U[r, c] / U[c, c]
            for q in range(c, n):
                U[r, q] = U[r, q] - f * U[c, q]
            for q in range(nrhs):
                X[r, q] = X[r, q] - f * X[c, q]
    for c in range(n - 1, -1, -1):
        for q in range(nrhs):
            tmp = X[c, q]
            for r in range(c + 1, n):
                tmp = tmp - U[c, r] * X[r, q]
            X[c, q] = tmp / U[c, c]
    return X_arr


cdef int _inv_spd(double* Y, double* W, double* L, int n) nogil:
    """W = Y^-1 through a Cholesky factor; returns -1 if Y is not PD."""
    cdef int i, j, k
    cdef double acc
    cdef double* Li
    for j in range(n):
        acc = Y[j * n + j]
        for k in range(j):
            acc -= L[j * n + k] * L[j * n + k]
        if acc <= 0.0:
            return -1
        L[j * n + j] = sqrt(acc)
        for i in range(j + 1, n):
            acc = Y[i * n + j]
            for k in range(j):
                acc -= L[i * n + k] * L[j * n + k]
            L[i * n + j] = acc / L[j * n + j]
        for i in range(j):
            L[i * n + j] = 0.0
    # invert L in place into W (lower), then W = L^-T L^-1
    for i in range(n * n):
        W[i] = 0.0
    Li = <double*> malloc(n * n * sizeof(double))
    for i in range(n * n):
        Li[i] = 0.0
    for i in range(n):
        Li[i * n + i] = 1.0 / L[i * n + i]
        for j in range(i):
            acc = 0.0
            for k in range(j, i):
                acc -= L[i * n + k] * Li[k * n + j]
            Li[i * n + j] = acc / L[i * n + i]
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for k in range(i if i > j else j, n):
                acc += Li[k * n + i] * Li[k * n + j]
            W[i * n + j] = acc
    free(Li)
    return 0


cdef void _load_sym(const double[:, ::1] pts, Py_ssize_t p, int off, int n, double* Y):
    cdef int i, j, a = 0
    for i in range(n):
        for j in range(i, n):
            Y[i * n + j] = pts[p, off + a]
            Y[j * n + i] = pts[p, off + a]
            a += 1


def siegel_metric_batch(pts, int n, double A):
    cdef double[:, ::1] P = np.ascontiguousarray(np.atleast_2d(pts), dtype=np.float64)
    cdef Py_ssize_t N = P.shape[0], p
    cdef int h = n * (n + 1) // 2
    cdef int a, b, i, j, k, l, s, t, ii, jj, kk, ll
    out_arr = np.zeros((N, 2 * h, 2 * h))
    cdef double[:, :, ::1] out = out_arr
    cdef double* Y = <double*> malloc(n * n * sizeof(double))
    cdef double* W = <double*> malloc(n * n * sizeof(double))
    cdef double* L = <double*> malloc(n * n * sizeof(double))
    cdef int* pi = <int*> malloc(h * sizeof(int))
    cdef int* pj = <int*> malloc(h * sizeof(int))
    cdef double acc
    a = 0
    for i in range(n):
        for j in range(i, n):
            pi[a] = i
            pj[a] = j
            a += 1
    try:
        for p in range(N):
            _load_sym(P, p, h, n, Y)
            if _inv_spd(Y, W, L, n) != 0:
                raise NotPositiveDefinite("imaginary block is not positive definite")
            for a in range(h):
                for b in range(a, h):
                    acc = 0.0
                    # sum over both orientations of each symmetric basis element
                    for s in range(2):
                        if s == 1 and pi[a] == pj[a]:
                            break
                        ii = pi[a] if s == 0 else pj[a]
                        jj = pj[a] if s == 0 else pi[a]
                        for t in range(2):
                            if t == 1 and pi[b] == pj[b]:
                                break
                            kk = pi[b] if t == 0 else pj[b]
                            ll = pj[b] if t == 0 else pi[b]
                            acc += W[ll * n + ii] * W[jj * n + kk]
                    acc *= A
                    out[p, a, b] = acc
                    out[p, b, a] = acc
                    out[p, h + a, h + b] = acc
                    out[p, h + b, h + a] = acc
    finally:
        free(Y); free(W); free(L); free(pi); free(pj)
    return out_arr


def jacobi_metric_batch(pts, int n, int m, double A, double B):
    cdef double[:, ::1] P = np.ascontiguousarray(np.atleast_2d(pts), dtype=np.float64)
    cdef Py_ssize_t N = P.shape[0], p
    cdef int h = n * (n + 1) // 2
    cdef int mn = m * n
    cdef int d = 2 * h + 2 * mn
    cdef int a, b, i, j, k, l
    out_arr = np.zeros((N, d, d))
    cdef double[:, :, ::1] out = out_arr
    cdef double* Y = <double*> malloc(n * n * sizeof(double))
    cdef double* W = <double*> malloc(n * n * sizeof(double))
    cdef double* L = <double*> malloc(n * n * sizeof(double))
    cdef double* V = <double*> malloc(mn * sizeof(double))
    # per-basis T_a = W dOmega_a (n x n), Xi_a (m x n), Phi_a = Xi_a W (m x n)
    cdef double complex* T = <double complex*> malloc(d * n * n * sizeof(double complex))
    cdef double complex* Xi = <double complex*> malloc(d * mn * sizeof(double complex))
    cdef double complex* Phi = <double complex*> malloc(d * mn * sizeof(double complex))
    cdef double complex* dO = <double complex*> malloc(d * n * n * sizeof(double complex))
    cdef double complex* dZ = <double complex*> malloc(d * mn * sizeof(double complex))
    cdef double complex acc
    cdef double g1, g2
    for i in range(d * n * n):
        dO[i] = 0
    for i in range(d * mn):
        dZ[i] = 0
    a = 0
    for i in range(n):
        for j in range(i, n):
            dO[a * n * n + i * n + j] = 1.0
            dO[a * n * n + j * n + i] = 1.0
            dO[(h + a) * n * n + i * n + j] = 1j
            dO[(h + a) * n * n + j * n + i] = 1j
            a += 1
    for k in range(m):
        for l in range(n):
            a = 2 * h + k * n + l
            dZ[a * mn + k * n + l] = 1.0
            dZ[(a + mn) * mn + k * n + l] = 1j
    try:
        for p in range(N):
            _load_sym(P, p, h, n, Y)
            if _inv_spd(Y, W, L, n) != 0:
                raise NotPositiveDefinite("imaginary block is not positive definite")
            for i in range(mn):
                V[i] = P[p, 2 * h + mn + i]
            for a in range(d):
                for i in range(n):
                    for j in range(n):
                        acc = 0
                        for k in range(n):
                            acc = acc + W[i * n + k] * dO[a * n * n + k * n + j]
                        T[a * n * n + i * n + j] = acc
                for k in range(m):
                    for i in range(n):
                        acc = dZ[a * mn + k * n + i]
                        for j in range(n):
                            acc = acc - V[k * n + j] * T[a * n * n + j * n + i]
                        Xi[a * mn + k * n + i] = acc
                for k in range(m):
                    for j in range(n):
                        acc = 0
                        for i in range(n):
                            acc = acc + Xi[a * mn + k * n + i] * W[i * n + j]
                        Phi[a * mn + k * n + j] = acc
            for a in range(d):
                for b in range(a, d):
                    acc = 0
                    for i in range(n):
                        for j in range(n):
                            acc = acc + T[a * n * n + i * n + j] * T[b * n * n + j * n + i].conjugate()
                    g1 = acc.real
                    acc = 0
                    for k in range(mn):
                        acc = acc + Phi[a * mn + k] * Xi[b * mn + k].conjugate()
                    g2 = acc.real
                    out[p, a, b] = A * g1 + B * g2
                    out[p, b, a] = A * g1 + B * g2
    finally:
        free(Y); free(W); free(L); free(V); free(T); free(Xi); free(Phi); free(dO); free(dZ)
    return out_arr


def christoffel_contract(ginv, dg):
    """Gamma[p,k,i,j] from ginv[p,k,l] and dg[p,l,i,j] = d_l g_ij."""
    cdef double[:, :, ::1] G = np.ascontiguousarray(ginv, dtype=np.float64)
    cdef double[:, :, :, ::1] D = np.ascontiguousarray(dg, dtype=np.float64)
    cdef Py_ssize_t N = D.shape[0], d = D.shape[1], p, k, i, j, l
    out_arr = np.zeros((N, d, d, d))
    cdef double[:, :, :, ::1] out = out_arr
    cdef double acc
    for p in range(N):
        for k in range(d):
            for i in range(d):
                for j in range(i, d):
                    acc = 0.0
                    for l in range(d):
                        acc += G[p, k, l] * (D[p, i, j, l] + D[p, j, i, l] - D[p, l, i, j])
                    out[p, k, i, j] = 0.5 * acc
                    out[p, k, j, i] = 0.5 * acc
    return out_arr
