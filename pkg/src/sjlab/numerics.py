"""Dense matrix kernels, small eigenvalue problems and finite differences.

Matrices travel as plain numpy arrays. The JSON encoding used across the
package is ``{"rows": r, "cols": c, "re": [...], "im": [...]}`` with
row-major entries; ``im`` is omitted for real matrices.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .errors import Diverges, InvariantViolation, NoConvergence, NotPositiveDefinite

log = logging.getLogger(__name__)

PD_TOL = 1e-12
PIVOT_TOL = 1e-13


@dataclass(frozen=True)
class FDConfig:
    """Central-difference step and number of Richardson levels."""

    h: float = 1e-4
    richardson_levels: int = 2

    def __post_init__(self):
        if not self.h > 0:
            raise InvariantViolation(f"FD step must be positive, got {self.h}")
        if not 1 <= self.richardson_levels <= 4:
            raise InvariantViolation(
                f"richardson_levels must lie in [1, 4], got {self.richardson_levels}")

    @classmethod
    def for_curvature(cls) -> "FDConfig":
        return cls(h=1e-3, richardson_levels=2)

    def steps(self) -> list[float]:
        return [self.h / 2**j for j in range(self.richardson_levels)]


# -- matrix JSON ----------------------------------------------------------

def matrix_to_json(M) -> dict:
    M = np.atleast_2d(np.asarray(M))
    r, c = M.shape
    out = {"rows": int(r), "cols": int(c), "re": [float(v) for v in M.real.ravel()]}
    if np.iscomplexobj(M):
        out["im"] = [float(v) for v in M.imag.ravel()]
    return out


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        r, c = int(obj["rows"]), int(obj["cols"])
        re = np.asarray(obj["re"], dtype=float)
        im = obj.get("im")
    except (KeyError, TypeError, ValueError) as exc:
        raise InvariantViolation(f"malformed matrix JSON: {exc}") from exc
    if re.size != r * c or (im is not None and len(im) != r * c):
        raise InvariantViolation(f"matrix JSON entry count does not match {r}x{c}")
    M = re.reshape(r, c)
    if im is not None:
        M = M + 1j * np.asarray(im, dtype=float).reshape(r, c)
    if not np.all(np.isfinite(M)):
        raise InvariantViolation("matrix JSON contains non-finite entries")
    return M


# -- dense kernels --------------------------------------------------------

def cholesky(S) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == S``.

    Raises NotPositiveDefinite when a pivot drops to ``1e-12`` times the
    largest diagonal entry; this is the package-wide test for ``Y > 0``.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise InvariantViolation(f"cholesky needs a square matrix, got shape {S.shape}")
    scale = max(np.abs(S).max(initial=0.0), 1e-300)
    if np.abs(S - S.T).max(initial=0.0) > 1e-12 * scale:
        raise InvariantViolation("cholesky input is not symmetric")
    diag = np.abs(np.diag(S)).max(initial=0.0)
    return kernels.cholesky_lower(S, PD_TOL * max(diag, 1e-300))


def is_positive_definite(S) -> bool:
    try:
        cholesky(S)
    except NotPositiveDefinite:
        return False
    return True


def linear_solve(A, B) -> np.ndarray:
    """Solve ``A X = B`` by Gaussian elimination with partial pivoting."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvariantViolation(f"linear_solve needs a square matrix, got {A.shape}")
    vec = B.ndim == 1
    B2 = B.reshape(-1, 1) if vec else B
    if B2.shape[0] != A.shape[0]:
        raise InvariantViolation(f"right-hand side {B.shape} does not conform to {A.shape}")
    X = kernels.solve_complex(A, B2, PIVOT_TOL)
    return X.ravel() if vec else X


def right_solve(W, A) -> np.ndarray:
    """``W @ inv(A)`` computed as a transposed left solve."""
    return linear_solve(np.asarray(A).T, np.asarray(W).T).T


def char_poly(A) -> np.ndarray:
    """Monic characteristic polynomial coefficients, highest degree first.

    Faddeev-LeVerrier recursion; adequate for the n <= 4 matrices used here.
    """
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    coeffs = np.zeros(n + 1, dtype=complex)
    coeffs[0] = 1.0
    Mk = np.zeros_like(A)
    I = np.eye(n)
    for k in range(1, n + 1):
        Mk = A @ Mk + coeffs[k - 1] * I
        coeffs[k] = -np.trace(A @ Mk) / k
    return coeffs


def _poly_and_deriv(c, z):
    p = c[0]
    dp = 0.0
    for a in c[1:]:
        dp = dp * z + p
        p = p * z + a
    return p, dp


def small_complex_eigenvalues(A, max_iter: int = 500) -> np.ndarray:
    """Eigenvalues of a square matrix of dimension at most 4.

    Roots of the characteristic polynomial by Aberth-Ehrlich simultaneous
    iteration. The result is sorted by (real, imaginary) part.
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvariantViolation(f"eigenvalues need a square matrix, got {A.shape}")
    n = A.shape[0]
    if n > 4:
        raise InvariantViolation(f"small_complex_eigenvalues supports n <= 4, got {n}")
    if n == 1:
        return A[0].copy()
    c = char_poly(A)
    norm = np.abs(A).sum(axis=1).max()
    accept = 1e-8 * (1.0 + norm) ** n
    radius = 1.0 + np.abs(c[1:]).max()
    z = radius * 0.5 * np.exp(1j * (2 * np.pi * np.arange(n) / n + 0.4))
    for _ in range(max_iter):
        step = np.zeros(n, dtype=complex)
        for i in range(n):
            p, dp = _poly_and_deriv(c, z[i])
            if p == 0:
                continue
            ratio = p / dp if dp != 0 else np.inf
            repulse = sum(1.0 / (z[i] - z[j]) for j in range(n) if j != i)
            denom = 1.0 - ratio * repulse
            step[i] = ratio / denom if denom != 0 else ratio
        if not np.all(np.isfinite(step)):
            z = z + 1e-3 * radius * np.exp(1j * np.arange(n))
            continue
        z = z - step
        if np.abs(step).max() <= 1e-15 * max(1.0, np.abs(z).max()):
            break
    residual = max(abs(_poly_and_deriv(c, zi)[0]) for zi in z)
    if not residual <= accept:
        raise NoConvergence(f"eigenvalue iteration stalled, residual {residual:.3e}")
    z = _merge_clusters(c, z)
    return np.array(sorted(z, key=lambda w: (w.real, w.imag)))


def _merge_clusters(c, z):
    """Collapse root clusters that look like one multiple root.

    A k-fold root is only resolved to about eps**(1/k) by the iteration;
    it is a simple root of the (k-1)-th derivative, where Newton from the
    cluster mean converges to working precision.
    """
    n = z.size
    eps = np.finfo(float).eps
    scale = max(1.0, np.abs(z).max())
    link = 8.0 * eps ** (1.0 / n) * scale
    label = list(range(n))
    for i in range(n):
        for j in range(i + 1, n):
            if abs(z[i] - z[j]) < link:
                old, new = label[j], label[i]
                label = [new if l == old else l for l in label]
    out = z.copy()
    for lab in set(label):
        idx = [i for i in range(n) if label[i] == lab]
        k = len(idx)
        if k < 2:
            continue
        diam = max(abs(z[i] - z[j]) for i in idx for j in idx)
        if diam > 8.0 * eps ** (1.0 / k) * scale:
            continue
        d = np.polyder(c, k - 1)
        w = z[idx].mean()
        for _ in range(8):
            p, dp = _poly_and_deriv(d, w)
            if dp == 0:
                break
            step = p / dp
            w = w - step
            if abs(step) <= eps * scale:
                break
        if abs(w - z[idx].mean()) <= diam + link:
            out[idx] = w
    return out


# -- finite differences ---------------------------------------------------

def richardson(central: list) -> np.ndarray | float:
    """Extrapolate central differences taken at h, h/2, h/4, ..."""
    table = list(central)
    for k in range(1, len(table)):
        f = 4.0**k
        table = [(f * table[j + 1] - table[j]) / (f - 1.0) for j in range(len(table) - 1)]
    return table[0]


def fd_partial(f: Callable, x, i: int, cfg: FDConfig = FDConfig()):
    """Partial derivative of ``f`` along coordinate ``i`` at ``x``.

    ``f`` may return a scalar or an array; the derivative has the same shape.
    """
    x = np.asarray(x, dtype=float)
    diffs = []
    for h in cfg.steps():
        e = np.zeros_like(x)
        e[i] = h
        diffs.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2.0 * h))
    return richardson(diffs)


def fd_gradient(f: Callable, x, cfg: FDConfig = FDConfig()) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.array([fd_partial(f, x, i, cfg) for i in range(x.size)])


def fd_jacobian(F: Callable, x, cfg: FDConfig = FDConfig()) -> np.ndarray:
    """``J[a, i] = dF_a / dx_i`` for a vector-valued map."""
    x = np.asarray(x, dtype=float)
    return np.stack([np.asarray(fd_partial(F, x, i, cfg)) for i in range(x.size)], axis=-1)


def fd_hessian(f: Callable, x, cfg: FDConfig = FDConfig()) -> np.ndarray:
    """Second derivatives by nesting ``fd_partial``; symmetrized."""
    x = np.asarray(x, dtype=float)
    d = x.size
    H = np.zeros((d, d))
    for i in range(d):
        for j in range(i, d):
            H[i, j] = fd_partial(lambda y: fd_partial(f, y, j, cfg), x, i, cfg)
            H[j, i] = H[i, j]
    return H


def stencil_points(X, cfg: FDConfig) -> np.ndarray:
    """All central-difference evaluation points for a batch of base points.

    Returns shape (K, d, levels, 2, d): base point k, direction i, level j,
    sign (+, -).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    K, d = X.shape
    steps = np.array(cfg.steps())
    eye = np.eye(d)
    off = steps[None, :, None, None] * np.array([1.0, -1.0])[None, None, :, None] * eye[:, None, None, :]
    return X[:, None, None, None, :] + off[None]


def stencil_derivative(values, cfg: FDConfig) -> np.ndarray:
    """Combine values on ``stencil_points`` into Richardson derivatives.

    ``values`` has shape (K, d, levels, 2, ...); result is (K, d, ...).
    """
    steps = cfg.steps()
    central = [(values[:, :, j, 0] - values[:, :, j, 1]) / (2.0 * h) for j, h in enumerate(steps)]
    return richardson(central)


# -- matrix series --------------------------------------------------------

def spectral_norm_estimate(R, steps: int = 20) -> float:
    """Power-iteration estimate of the largest singular value of ``R``."""
    R = np.asarray(R, dtype=complex)
    n = R.shape[0]
    v = np.ones(n, dtype=complex) + 0.1j * np.arange(n)
    v /= np.linalg.norm(v)
    RH = R.conj().T
    est = 0.0
    for _ in range(steps):
        w = RH @ (R @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        est = math.sqrt(nw)
        v = w / nw
    return est


def spectral_norm_upper(R, squarings: int = 10) -> float:
    """Certified upper bound ``(tr (R^H R)^p)^(1/2p)`` with ``p = 2**squarings``.

    Overestimates the largest singular value by at most ``n**(1/2p)``.
    """
    R = np.asarray(R, dtype=complex)
    A = R.conj().T @ R
    t = float(np.trace(A).real)
    if t <= 0.0:
        return 0.0
    B, L, p = A / t, math.log(t), 1
    for _ in range(squarings):
        B = B @ B
        t = float(np.trace(B).real)
        if t <= 0.0:
            break
        B /= t
        L, p = 2.0 * L + math.log(t), 2 * p
    return math.exp(L / (2.0 * p))


def _tail_ratio(R, q_est: float) -> float:
    # proxy from power iteration can undershoot; prefer the certified bound
    q = max(q_est, spectral_norm_upper(R))
    return q if q < 1.0 else q_est


def _series_bound(q: float, n: int, K: int) -> float:
    s = sum(q**k / (2 * k + 1) for k in range(K + 1)) if K < 200 else 1.0 / (1.0 - q)
    t = q ** (K + 1) / ((2 * K + 3) * (1.0 - q))
    return 4.0 * n * q * (2.0 * s * t + t * t)


def series_terms_needed(R, tol: float = 1e-12, cap: int = 10**6) -> int:
    """Smallest K whose tail bound for ``R`` is at most ``tol``."""
    q = spectral_norm_estimate(R)
    if q >= 1.0 - 1e-9:
        raise Diverges(f"series proxy {q:.12f} is not below 1")
    if q == 0.0:
        return 0
    n = np.asarray(R).shape[0]
    q = _tail_ratio(R, q)
    # bound ~ 8 n q s q^(K+1) / (2K+3)(1-q); start from the geometric estimate
    K = max(0, int(math.log(tol * (1.0 - q) ** 2 / (8.0 * n)) / math.log(q)) - 1)
    K = min(K, cap)
    while K > 0 and _series_bound(q, n, K - 1) <= tol:
        K -= 1
    while _series_bound(q, n, K) > tol:
        K += 1
        if K > cap:
            raise Diverges(f"series needs more than {cap} terms (proxy {q:.6f})")
    return K


def truncated_matrix_series(R, K: int) -> tuple[float, float]:
    """``Re tr(4 R S^2)`` with ``S = sum_{k<=K} R^k / (2k+1)``, plus a tail bound.

    For a scalar ``r`` in [0, 1) the full series equals
    ``log((1 + sqrt r) / (1 - sqrt r))**2``.
    """
    R = np.asarray(R, dtype=complex)
    n = R.shape[0]
    q = spectral_norm_estimate(R)
    if q >= 1.0 - 1e-9:
        raise Diverges(f"series proxy {q:.12f} is not below 1")
    S = np.zeros_like(R)
    P = np.eye(n, dtype=complex)
    for k in range(K + 1):
        S += P / (2 * k + 1)
        P = P @ R
    tr = np.trace(4.0 * R @ S @ S)
    if abs(tr.imag) > 1e-9:
        log.warning("series trace has imaginary residue %.3e", tr.imag)
    bound = 0.0
    if q > 0:
        qb = _tail_ratio(R, q)
        # analytic tail plus accumulated rounding in the K-term sum
        rounding = 8.0 * n * (K + 2) * np.finfo(float).eps * qb / (1.0 - qb) ** 2
        bound = _series_bound(qb, n, K) + rounding
    return float(tr.real), float(bound)
