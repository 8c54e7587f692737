"""Pure-Python/numpy implementations of the hot kernels.

Every function here has a twin with the same name and signature in the
compiled ``_kernels`` extension; ``sjlab.kernels`` picks one at import time.
"""
import numpy as np

from .errors import NotPositiveDefinite, Singular

BACKEND = "python"


def cholesky_lower(S, tol):
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    L = np.zeros((n, n))
    for j in range(n):
        s = S[j, j] - L[j, :j] @ L[j, :j]
        if not s > tol:
            raise NotPositiveDefinite(f"pivot {j} is {s:.3e} (tolerance {tol:.1e})")
        L[j, j] = np.sqrt(s)
        for i in range(j + 1, n):
            L[i, j] = (S[i, j] - L[i, :j] @ L[j, :j]) / L[j, j]
    return L


def solve_complex(A, B, rel_tol):
    """Gaussian elimination with partial pivoting; ``B`` is (n, k)."""
    U = np.array(A, dtype=complex)
    X = np.array(B, dtype=complex)
    n = U.shape[0]
    thresh = rel_tol * max(np.abs(U).max(), 1e-300)
    for c in range(n):
        p = c + int(np.argmax(np.abs(U[c:, c])))
        if abs(U[p, c]) < thresh:
            raise Singular(f"pivot {c} is {abs(U[p, c]):.3e}")
        if p != c:
            U[[c, p]] = U[[p, c]]
            X[[c, p]] = X[[p, c]]
        f = U[c + 1:, c] / U[c, c]
        U[c + 1:, c:] -= np.outer(f, U[c, c:])
        X[c + 1:] -= np.outer(f, X[c])
    for c in range(n - 1, -1, -1):
        X[c] = (X[c] - U[c, c + 1:] @ X[c + 1:]) / U[c, c]
    return X


def _sym_index(n):
    return [(i, j) for i in range(n) for j in range(i, n)]


def _sym_basis(n):
    """(h, n, n) real basis of symmetric matrices matching the chart order."""
    idx = _sym_index(n)
    E = np.zeros((len(idx), n, n))
    for a, (i, j) in enumerate(idx):
        E[a, i, j] = 1.0
        E[a, j, i] = 1.0
    return E


def _inv_spd_batch(Y):
    return np.linalg.inv(Y)


def _unpack_sym(vals, n):
    N = vals.shape[0]
    Y = np.zeros((N, n, n))
    for a, (i, j) in enumerate(_sym_index(n)):
        Y[:, i, j] = vals[:, a]
        Y[:, j, i] = vals[:, a]
    return Y


def siegel_metric_batch(pts, n, A):
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    h = n * (n + 1) // 2
    W = _inv_spd_batch(_unpack_sym(pts[:, h:2 * h], n))
    E = _sym_basis(n)
    T = np.einsum("pij,ajk->paik", W, E)
    G = np.einsum("paij,pbji->pab", T, T)
    out = np.zeros((pts.shape[0], 2 * h, 2 * h))
    out[:, :h, :h] = A * G
    out[:, h:, h:] = A * G
    return out


def _jacobi_basis(n, m):
    h = n * (n + 1) // 2
    d = 2 * h + 2 * m * n
    E = _sym_basis(n)
    dO = np.zeros((d, n, n), dtype=complex)
    dZ = np.zeros((d, m, n), dtype=complex)
    dO[:h] = E
    dO[h:2 * h] = 1j * E
    for k in range(m):
        for l in range(n):
            a = 2 * h + k * n + l
            dZ[a, k, l] = 1.0
            dZ[a + m * n, k, l] = 1j
    return dO, dZ


def jacobi_metric_batch(pts, n, m, A, B):
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    h = n * (n + 1) // 2
    mn = m * n
    W = _inv_spd_batch(_unpack_sym(pts[:, h:2 * h], n))
    V = pts[:, 2 * h + mn:2 * h + 2 * mn].reshape(-1, m, n)
    dO, dZ = _jacobi_basis(n, m)
    T = np.einsum("pij,ajk->paik", W, dO)
    G = np.einsum("paij,pbji->pab", T, T.conj()).real
    Xi = dZ[None] - np.einsum("pkj,paji->paki", V, T)
    Phi = np.einsum("paki,pij->pakj", Xi, W)
    H = np.einsum("paki,pbki->pab", Phi, Xi.conj()).real
    out = A * G + B * H
    return 0.5 * (out + out.transpose(0, 2, 1))


def christoffel_contract(ginv, dg):
    """Gamma[p,k,i,j] from ginv[p,k,l] and dg[p,l,i,j] = d_l g_ij."""
    # t[p,i,j,l] = d_i g_jl + d_j g_il - d_l g_ij
    t = np.einsum("pilj->pijl", dg) + np.einsum("pjli->pijl", dg) - np.einsum("plij->pijl", dg)
    return 0.5 * np.einsum("pkl,pijl->pkij", ginv, t)
