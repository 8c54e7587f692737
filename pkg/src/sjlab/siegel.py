"""The Siegel upper half space H_n and its symplectic geometry.

Points are ``Omega = X + iY`` with ``X`` real symmetric and ``Y`` positive
definite. Chart coordinates list the upper-triangular entries of ``X``
followed by those of ``Y``, row by row, so the chart has n(n+1) real
dimensions. A coordinate vector with entry 1 at an off-diagonal slot moves
both ``x_ij`` and ``x_ji``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from . import kernels
from .errors import Diverges, DistanceOutOfRange, InvariantViolation, NormalizationViolated
from .numerics import (
    FDConfig,
    cholesky,
    fd_gradient,
    fd_hessian,
    is_positive_definite,
    linear_solve,
    matrix_from_json,
    matrix_to_json,
    right_solve,
    series_terms_needed,
    truncated_matrix_series,
)
from .riemann import MetricField

SYM_TOL = 1e-12
SYMPLECTIC_TOL = 1e-10


def _sym(S):
    S = np.asarray(S)
    return 0.5 * (S + S.T)


@lru_cache(maxsize=None)
def sym_pairs(n: int) -> tuple:
    """Upper-triangular index pairs in chart order."""
    return tuple((i, j) for i in range(n) for j in range(i, n))


@lru_cache(maxsize=None)
def sym_index(n: int) -> np.ndarray:
    """``I[i, j]`` = chart slot of the unordered pair {i, j}."""
    I = np.zeros((n, n), dtype=int)
    for a, (i, j) in enumerate(sym_pairs(n)):
        I[i, j] = I[j, i] = a
    return I


@lru_cache(maxsize=None)
def wirtinger_weights(n: int) -> np.ndarray:
    """The (1 + delta_ij)/2 factors of the matrix derivative d/dOmega."""
    return 0.5 * (1.0 + np.eye(n))


def pack_sym(S) -> np.ndarray:
    S = np.asarray(S)
    return np.array([S[i, j] for i, j in sym_pairs(S.shape[0])])


def unpack_sym(v, n: int) -> np.ndarray:
    v = np.asarray(v)
    return v[sym_index(n)]


def chart_dim(n: int) -> int:
    return n * (n + 1)


# -- domain types ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SiegelPoint:
    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        if X.ndim != 2 or X.shape[0] != X.shape[1] or X.shape != Y.shape:
            raise InvariantViolation(f"X and Y must be equal square matrices, got {X.shape}, {Y.shape}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise InvariantViolation("point has non-finite entries")
        if np.abs(X - X.T).max() > SYM_TOL or np.abs(Y - Y.T).max() > SYM_TOL:
            raise InvariantViolation("X and Y must be symmetric")
        if not is_positive_definite(Y):
            raise InvariantViolation("Im(Omega) is not positive definite")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def omega(self) -> np.ndarray:
        return self.X + 1j * self.Y

    @classmethod
    def from_omega(cls, omega) -> "SiegelPoint":
        omega = _sym(np.atleast_2d(np.asarray(omega, dtype=complex)))
        return cls(omega.real.copy(), omega.imag.copy())

    @classmethod
    def identity(cls, n: int) -> "SiegelPoint":
        """The base point i I_n."""
        return cls(np.zeros((n, n)), np.eye(n))

    def chart(self) -> np.ndarray:
        return np.concatenate([pack_sym(self.X), pack_sym(self.Y)])

    @classmethod
    def from_chart(cls, n: int, x) -> "SiegelPoint":
        x = np.asarray(x, dtype=float)
        h = n * (n + 1) // 2
        return cls(unpack_sym(x[:h], n), unpack_sym(x[h:2 * h], n))

    def to_json(self) -> dict:
        return {"n": self.n, "X": matrix_to_json(self.X), "Y": matrix_to_json(self.Y)}

    @classmethod
    def from_json(cls, obj: dict) -> "SiegelPoint":
        try:
            X, Y = matrix_from_json(obj["X"]), matrix_from_json(obj["Y"])
        except (KeyError, TypeError) as exc:
            raise InvariantViolation(f"malformed Siegel point JSON: {exc}") from exc
        if "n" in obj and int(obj["n"]) != X.shape[0]:
            raise InvariantViolation("declared degree does not match the matrices")
        return cls(X, Y)


def J_matrix(n: int) -> np.ndarray:
    Z, I = np.zeros((n, n)), np.eye(n)
    return np.block([[Z, I], [-I, Z]])


@dataclass(frozen=True, eq=False)
class SymplecticElement:
    M: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % 2:
            raise InvariantViolation(f"symplectic matrix must be 2n x 2n, got {M.shape}")
        object.__setattr__(self, "M", M)
        r = self.residual()
        if r > SYMPLECTIC_TOL:
            raise InvariantViolation(f"matrix is not symplectic (residual {r:.3e})")

    @property
    def n(self) -> int:
        return self.M.shape[0] // 2

    def residual(self) -> float:
        J = J_matrix(self.n)
        return float(np.abs(self.M.T @ J @ self.M - J).max())

    @property
    def blocks(self):
        n = self.n
        M = self.M
        return M[:n, :n], M[:n, n:], M[n:, :n], M[n:, n:]

    def __matmul__(self, other: "SymplecticElement") -> "SymplecticElement":
        return SymplecticElement(self.M @ other.M)

    @classmethod
    def identity(cls, n: int) -> "SymplecticElement":
        return cls(np.eye(2 * n))

    @classmethod
    def J(cls, n: int) -> "SymplecticElement":
        return cls(J_matrix(n))

    @classmethod
    def translation(cls, B) -> "SymplecticElement":
        B = np.asarray(B, dtype=float)
        n = B.shape[0]
        return cls(np.block([[np.eye(n), B], [np.zeros((n, n)), np.eye(n)]]))

    @classmethod
    def linear(cls, G) -> "SymplecticElement":
        """``[[G^-T, 0], [0, G]]``."""
        G = np.asarray(G, dtype=float)
        n = G.shape[0]
        Z = np.zeros((n, n))
        return cls(np.block([[np.linalg.inv(G).T, Z], [Z, G]]))

    def to_json(self) -> dict:
        return {"n": self.n, "M": matrix_to_json(self.M)}

    @classmethod
    def from_json(cls, obj: dict) -> "SymplecticElement":
        try:
            return cls(matrix_from_json(obj["M"]).real)
        except (KeyError, TypeError) as exc:
            raise InvariantViolation(f"malformed symplectic element JSON: {exc}") from exc


@dataclass(frozen=True)
class SiegelMetricParams:
    A: float = 1.0

    def __post_init__(self):
        if not self.A > 0:
            raise InvariantViolation(f"metric scale A must be positive, got {self.A}")


@dataclass(frozen=True, eq=False)
class SiegelTangent:
    dX: np.ndarray
    dY: np.ndarray

    def __post_init__(self):
        dX = np.atleast_2d(np.asarray(self.dX, dtype=float))
        dY = np.atleast_2d(np.asarray(self.dY, dtype=float))
        if np.abs(dX - dX.T).max() > SYM_TOL or np.abs(dY - dY.T).max() > SYM_TOL:
            raise InvariantViolation("tangent blocks must be symmetric")
        object.__setattr__(self, "dX", dX)
        object.__setattr__(self, "dY", dY)

    @property
    def d_omega(self) -> np.ndarray:
        return self.dX + 1j * self.dY

    def chart(self) -> np.ndarray:
        return np.concatenate([pack_sym(self.dX), pack_sym(self.dY)])

    @classmethod
    def from_chart(cls, n: int, v) -> "SiegelTangent":
        v = np.asarray(v, dtype=float)
        h = n * (n + 1) // 2
        return cls(unpack_sym(v[:h], n), unpack_sym(v[h:2 * h], n))


# -- the action -----------------------------------------------------------

def sp_act(M: SymplecticElement, omega: SiegelPoint) -> SiegelPoint:
    """``(A Omega + B)(C Omega + D)^-1``."""
    if M.n != omega.n:
        raise InvariantViolation(f"degree mismatch: element {M.n}, point {omega.n}")
    A, B, C, D = M.blocks
    W = omega.omega
    return SiegelPoint.from_omega(right_solve(A @ W + B, C @ W + D))


def chart_action(M: SymplecticElement) -> Callable[[np.ndarray], np.ndarray]:
    """The action as a map between chart vectors."""
    n = M.n
    return lambda x: sp_act(M, SiegelPoint.from_chart(n, x)).chart()


# -- derivatives ----------------------------------------------------------

def _chart_function(f, n):
    return lambda x: f(SiegelPoint.from_chart(n, x))


def wirtinger_matrix_apply(f: Callable, omega: SiegelPoint, cfg: FDConfig = FDConfig()):
    """Matrices ``(d/dOmega) f`` and ``(d/dOmega-bar) f`` at ``omega``.

    Entry (i, j) carries the (1 + delta_ij)/2 weight, so for holomorphic
    ``f`` the differential is ``tr(dOmega @ DOmega f)``.
    """
    n = omega.n
    h = n * (n + 1) // 2
    grad = fd_gradient(_chart_function(f, n), omega.chart(), cfg)
    gx, gy = unpack_sym(grad[:h], n), unpack_sym(grad[h:], n)
    w = wirtinger_weights(n)
    D = w * 0.5 * (gx - 1j * gy)
    Dbar = w * 0.5 * (gx + 1j * gy)
    return D, Dbar


def wirtinger_mixed(H, re_idx, im_idx) -> np.ndarray:
    """``W[a, b] = d/dz_a-bar d/dz_b f`` from the real Hessian ``H``.

    ``re_idx[a]``, ``im_idx[a]`` locate the real and imaginary chart
    coordinates of complex coordinate ``a``.
    """
    re = np.asarray(re_idx)
    im = np.asarray(im_idx)
    return 0.25 * (H[np.ix_(re, re)] + H[np.ix_(im, im)]
                   + 1j * (H[np.ix_(im, re)] - H[np.ix_(re, im)]))


def operator_fd(cfg: FDConfig, Y) -> FDConfig:
    """Step rescaled to the spectral size of ``Y``.

    Second-order operators weight the Hessian by ``Y`` twice, so a fixed
    absolute step loses digits once ``Y`` is large. The step grows with
    the largest eigenvalue but the stencil stays inside the cone.
    """
    ev = np.linalg.eigvalsh(np.asarray(Y, dtype=float))
    scale = max(1.0, ev[-1])
    reach = cfg.h * 2 ** cfg.richardson_levels
    scale = max(1.0, min(scale, 0.25 * ev[0] / reach))
    if scale == 1.0:
        return cfg
    return FDConfig(h=cfg.h * scale, richardson_levels=cfg.richardson_levels)


def siegel_laplacian_apply(f: Callable, omega: SiegelPoint,
                           params: SiegelMetricParams = SiegelMetricParams(),
                           cfg: FDConfig = FDConfig()) -> float:
    """``(4/A) tr(Y (Y d/dOmega-bar)^T d/dOmega) f`` from nested FD."""
    n = omega.n
    h = n * (n + 1) // 2
    H = fd_hessian(_chart_function(f, n), omega.chart(), operator_fd(cfg, omega.Y))
    Wc = wirtinger_mixed(H, np.arange(h), np.arange(h, 2 * h))
    I = sym_index(n)
    w = wirtinger_weights(n)
    T = w[:, :, None, None] * w[None, None] * Wc[I[:, :, None, None], I[None, None]]
    Y = omega.Y
    val = np.einsum("ab,ce,ebca->", Y, Y, T)
    return float(4.0 / params.A * val.real)


# -- metric, volume -------------------------------------------------------

def siegel_metric_quadratic(omega: SiegelPoint, t: SiegelTangent,
                            params: SiegelMetricParams = SiegelMetricParams()) -> float:
    """``A Re tr(Y^-1 dOmega Y^-1 dOmega-bar)``."""
    Yi = np.linalg.inv(omega.Y)
    dW = t.d_omega
    return float(params.A * np.trace(Yi @ dW @ Yi @ dW.conj()).real)


def metric_tensor_siegel(omega: SiegelPoint,
                         params: SiegelMetricParams = SiegelMetricParams()) -> np.ndarray:
    """Chart Gram matrix of the invariant metric (polarization of the quadratic form)."""
    return kernels.siegel_metric_batch(omega.chart()[None], omega.n, params.A)[0]


def _y_blocks_pd(n):
    h = n * (n + 1) // 2
    I = sym_index(n)

    def admissible(X):
        Y = np.asarray(X)[:, h:2 * h][:, I]
        return np.linalg.eigvalsh(Y)[:, 0] > 0

    return admissible


def siegel_metric_field(n: int, params: SiegelMetricParams = SiegelMetricParams()) -> MetricField:
    h = n * (n + 1) // 2
    return MetricField(
        dim=chart_dim(n),
        evaluate_batch=lambda X: kernels.siegel_metric_batch(X, n, params.A),
        admissible=_y_blocks_pd(n),
        complex_pairs=tuple((a, h + a) for a in range(h)),
        name=f"siegel-n{n}-A{params.A:g}",
    )


def volume_density(omega: SiegelPoint) -> float:
    """``det(Y)^-(n+1)``."""
    return float(np.linalg.det(omega.Y) ** (-(omega.n + 1)))


# -- cross-ratio and distance ---------------------------------------------

def cross_ratio(omega0: SiegelPoint, omega1: SiegelPoint) -> np.ndarray:
    """``(W0 - W1)(W0 - W1b)^-1 (W0b - W1b)(W0b - W1)^-1``."""
    if omega0.n != omega1.n:
        raise InvariantViolation("cross-ratio of points of different degree")
    W0, W1 = omega0.omega, omega1.omega
    P = right_solve(W0 - W1, W0 - W1.conj())
    Q = right_solve(W0.conj() - W1.conj(), W0.conj() - W1)
    return P @ Q


def normalized_cross_ratio(omega0: SiegelPoint, omega1: SiegelPoint) -> np.ndarray:
    """``L^-1 R L`` with ``Y1 = L L^T``.

    Similar to the cross-ratio, and a strict contraction in the spectral
    norm: it is the cross-ratio computed after moving ``omega1`` to i I.
    """
    R = cross_ratio(omega0, omega1)
    L = cholesky(omega1.Y)
    return linear_solve(L, R @ L)


def siegel_distance(omega0: SiegelPoint, omega1: SiegelPoint, tol: float = 1e-12) -> float:
    """Distance for the A = 1 metric by the trace power series of the cross-ratio."""
    R = normalized_cross_ratio(omega0, omega1)
    if not np.any(R):
        return 0.0
    try:
        K = series_terms_needed(R, tol)
        value, _ = truncated_matrix_series(R, K)
    except Diverges as exc:
        raise DistanceOutOfRange(str(exc)) from exc
    return math.sqrt(max(value, 0.0))


def _xy(w: SiegelPoint):
    if w.n != 1:
        raise InvariantViolation("the closed-form distance is for the upper half plane (n = 1)")
    return float(w.X[0, 0]), float(w.Y[0, 0])


def poincare_distance_forms(w1: SiegelPoint, w2: SiegelPoint) -> tuple[float, float, float]:
    """The log, arccosh and arcsinh closed forms of the half-plane distance."""
    x1, y1 = _xy(w1)
    x2, y2 = _xy(w2)
    dx2 = (x2 - x1) ** 2
    log_form = 2.0 * math.log((math.sqrt(dx2 + (y2 - y1) ** 2) + math.sqrt(dx2 + (y2 + y1) ** 2))
                              / (2.0 * math.sqrt(y1 * y2)))
    cosh_form = math.acosh(1.0 + (dx2 + (y2 - y1) ** 2) / (2.0 * y1 * y2))
    sinh_form = 2.0 * math.asinh(0.5 * math.sqrt((dx2 + (y2 - y1) ** 2) / (y1 * y2)))
    return log_form, cosh_form, sinh_form


def poincare_distance(w1: SiegelPoint, w2: SiegelPoint) -> float:
    return poincare_distance_forms(w1, w2)[1]


def special_geodesic(a, t: float) -> SiegelPoint:
    """``i diag(a_1^t, ..., a_n^t)`` for exponents with sum (log a_k)^2 = 1."""
    a = np.asarray(a, dtype=float).ravel()
    if np.any(a <= 0):
        raise NormalizationViolated("special-geodesic parameters must be positive")
    s = float(np.sum(np.log(a) ** 2))
    if abs(s - 1.0) > 1e-10:
        raise NormalizationViolated(f"sum of squared logs is {s!r}, expected 1")
    n = a.size
    return SiegelPoint(np.zeros((n, n)), np.diag(a**t))


def random_unit_logs(rng: np.random.Generator, n: int) -> np.ndarray:
    """Positive ``a`` with sum (log a_k)^2 = 1."""
    l = rng.normal(size=n)
    l /= np.linalg.norm(l)
    return np.exp(l)


# -- sampling -------------------------------------------------------------

def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_symmetric(rng, n, scale=1.0) -> np.ndarray:
    return _sym(scale * rng.normal(size=(n, n)))


def random_symplectic(seed, n: int, factors: int = 5) -> SymplecticElement:
    """Product of random translations, linear maps and J_n."""
    rng = _rng(seed)
    M = np.eye(2 * n)
    for _ in range(factors):
        kind = rng.integers(3)
        if kind == 0:
            g = SymplecticElement.translation(random_symmetric(rng, n, 0.5))
        elif kind == 1:
            while True:
                G = np.eye(n) + 0.3 * rng.normal(size=(n, n))
                if abs(np.linalg.det(G)) > 0.3 and np.linalg.cond(G) < 10:
                    break
            g = SymplecticElement.linear(G)
        else:
            g = SymplecticElement.J(n)
        M = M @ g.M
    return SymplecticElement(M)


def random_siegel_point(seed, n: int) -> SiegelPoint:
    """``X`` random symmetric, ``Y = Q Q^T + 0.1 I``."""
    rng = _rng(seed)
    X = random_symmetric(rng, n, 0.5)
    Q = rng.normal(size=(n, n)) / math.sqrt(n)
    return SiegelPoint(X, _sym(Q @ Q.T + 0.1 * np.eye(n)))


# -- scalar fields for operator checks ------------------------------------

def y_power(s: float) -> Callable[[SiegelPoint], float]:
    return lambda w: float(w.Y[0, 0] ** s)


def siegel_test_fields(n: int) -> dict:
    """Smooth scalar fields used to exercise the Laplacian."""
    fields = {
        "trace_y": lambda w: float(np.trace(w.Y)),
        "det_y": lambda w: float(np.linalg.det(w.Y)),
        "gauss_y": lambda w: float(np.exp(-np.trace(w.Y.T @ w.Y) / 10.0)),
        "poly_x": lambda w: float(np.trace(w.X @ w.X) + w.X[0, 0] * np.trace(w.X) + w.X[0, -1] ** 3),
    }
    if n == 1:
        for s in (1.5, 2.0, 2.5):
            fields[f"y_pow_{s:g}"] = y_power(s)
    return fields
