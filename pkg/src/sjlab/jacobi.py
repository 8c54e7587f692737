"""Heisenberg and Jacobi groups acting on the Siegel-Jacobi space.

A point of H_{n,m} is ``(Omega, Z)`` with ``Omega`` in H_n and ``Z`` an
m x n complex matrix. The chart appends the entries of ``U = Re Z`` and
then ``V = Im Z`` (row-major) to the Siegel chart, giving
n(n+1) + 2mn real coordinates.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .errors import InvariantViolation
from .numerics import FDConfig, fd_hessian, matrix_from_json, matrix_to_json, right_solve
from .riemann import MetricField
from .siegel import (
    SiegelPoint,
    SiegelTangent,
    SymplecticElement,
    _rng,
    _y_blocks_pd,
    operator_fd,
    random_siegel_point,
    random_symmetric,
    random_symplectic,
    sp_act,
    sym_index,
    wirtinger_mixed,
    wirtinger_weights,
)

log = logging.getLogger(__name__)

HEISENBERG_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class HeisenbergElement:
    """``(lambda, mu; kappa)`` with ``kappa + mu lambda^T`` symmetric."""

    lam: np.ndarray
    mu: np.ndarray
    kappa: np.ndarray

    def __post_init__(self):
        lam = np.atleast_2d(np.asarray(self.lam, dtype=float))
        mu = np.atleast_2d(np.asarray(self.mu, dtype=float))
        kappa = np.atleast_2d(np.asarray(self.kappa, dtype=float))
        m, n = lam.shape
        if mu.shape != (m, n) or kappa.shape != (m, m):
            raise InvariantViolation(
                f"Heisenberg blocks have shapes {lam.shape}, {mu.shape}, {kappa.shape}")
        S = kappa + mu @ lam.T
        if np.abs(S - S.T).max() > HEISENBERG_TOL:
            raise InvariantViolation("kappa + mu lambda^T is not symmetric")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "kappa", kappa)

    @property
    def m(self) -> int:
        return self.lam.shape[0]

    @property
    def n(self) -> int:
        return self.lam.shape[1]

    @classmethod
    def identity(cls, n: int, m: int) -> "HeisenbergElement":
        return cls(np.zeros((m, n)), np.zeros((m, n)), np.zeros((m, m)))

    def to_json(self) -> dict:
        return {"lambda": matrix_to_json(self.lam), "mu": matrix_to_json(self.mu),
                "kappa": matrix_to_json(self.kappa)}

    @classmethod
    def from_json(cls, obj: dict) -> "HeisenbergElement":
        try:
            return cls(matrix_from_json(obj["lambda"]).real, matrix_from_json(obj["mu"]).real,
                       matrix_from_json(obj["kappa"]).real)
        except (KeyError, TypeError) as exc:
            raise InvariantViolation(f"malformed Heisenberg JSON: {exc}") from exc


def heisenberg_mul(h1: HeisenbergElement, h2: HeisenbergElement) -> HeisenbergElement:
    if (h1.m, h1.n) != (h2.m, h2.n):
        raise InvariantViolation("Heisenberg elements of different degree")
    return HeisenbergElement(
        h1.lam + h2.lam,
        h1.mu + h2.mu,
        h1.kappa + h2.kappa + h1.lam @ h2.mu.T - h1.mu @ h2.lam.T,
    )


@dataclass(frozen=True, eq=False)
class JacobiElement:
    M: SymplecticElement
    h: HeisenbergElement

    def __post_init__(self):
        if self.M.n != self.h.n:
            raise InvariantViolation(f"degree mismatch: Sp({self.M.n}) with H^({self.h.n},{self.h.m})")

    @classmethod
    def identity(cls, n: int, m: int) -> "JacobiElement":
        return cls(SymplecticElement.identity(n), HeisenbergElement.identity(n, m))

    def to_json(self) -> dict:
        return {"M": matrix_to_json(self.M.M), **self.h.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "JacobiElement":
        try:
            M = SymplecticElement(matrix_from_json(obj["M"]).real)
        except (KeyError, TypeError) as exc:
            raise InvariantViolation(f"malformed Jacobi element JSON: {exc}") from exc
        return cls(M, HeisenbergElement.from_json(obj))


def jacobi_mul(g1: JacobiElement, g2: JacobiElement) -> JacobiElement:
    """Semidirect product; the Heisenberg row block of ``g1`` is moved by ``M2``."""
    n = g1.M.n
    h1, h2 = g1.h, g2.h
    rows = np.hstack([h1.lam, h1.mu]) @ g2.M.M
    lt, mt = rows[:, :n], rows[:, n:]
    h = HeisenbergElement(
        lt + h2.lam,
        mt + h2.mu,
        h1.kappa + h2.kappa + lt @ h2.mu.T - mt @ h2.lam.T,
    )
    return JacobiElement(g1.M @ g2.M, h)


@dataclass(frozen=True, eq=False)
class SiegelJacobiPoint:
    omega: SiegelPoint
    Z: np.ndarray

    def __post_init__(self):
        Z = np.atleast_2d(np.asarray(self.Z, dtype=complex))
        if Z.shape[1] != self.omega.n:
            raise InvariantViolation(f"Z must be m x {self.omega.n}, got {Z.shape}")
        if not np.all(np.isfinite(Z)):
            raise InvariantViolation("Z has non-finite entries")
        object.__setattr__(self, "Z", Z)

    @property
    def n(self) -> int:
        return self.omega.n

    @property
    def m(self) -> int:
        return self.Z.shape[0]

    @property
    def U(self) -> np.ndarray:
        return self.Z.real

    @property
    def V(self) -> np.ndarray:
        return self.Z.imag

    @classmethod
    def origin(cls, n: int, m: int) -> "SiegelJacobiPoint":
        return cls(SiegelPoint.identity(n), np.zeros((m, n), dtype=complex))

    def chart(self) -> np.ndarray:
        return np.concatenate([self.omega.chart(), self.U.ravel(), self.V.ravel()])

    @classmethod
    def from_chart(cls, n: int, m: int, x) -> "SiegelJacobiPoint":
        x = np.asarray(x, dtype=float)
        d0 = n * (n + 1)
        mn = m * n
        Z = x[d0:d0 + mn].reshape(m, n) + 1j * x[d0 + mn:d0 + 2 * mn].reshape(m, n)
        return cls(SiegelPoint.from_chart(n, x[:d0]), Z)

    def to_json(self) -> dict:
        return {"omega": self.omega.to_json(), "Z": matrix_to_json(self.Z.astype(complex))}

    @classmethod
    def from_json(cls, obj: dict) -> "SiegelJacobiPoint":
        try:
            return cls(SiegelPoint.from_json(obj["omega"]), matrix_from_json(obj["Z"]))
        except (KeyError, TypeError) as exc:
            raise InvariantViolation(f"malformed Siegel-Jacobi point JSON: {exc}") from exc


@dataclass(frozen=True)
class JacobiMetricParams:
    A: float = 1.0
    B: float = 1.0

    def __post_init__(self):
        if not (self.A > 0 and self.B > 0):
            raise InvariantViolation(f"A and B must be positive, got {self.A}, {self.B}")


@dataclass(frozen=True, eq=False)
class JacobiTangent:
    d_omega: SiegelTangent
    dZ: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dZ", np.atleast_2d(np.asarray(self.dZ, dtype=complex)))

    def chart(self) -> np.ndarray:
        return np.concatenate([self.d_omega.chart(), self.dZ.real.ravel(), self.dZ.imag.ravel()])

    @classmethod
    def from_chart(cls, n: int, m: int, v) -> "JacobiTangent":
        v = np.asarray(v, dtype=float)
        d0 = n * (n + 1)
        mn = m * n
        dZ = v[d0:d0 + mn].reshape(m, n) + 1j * v[d0 + mn:d0 + 2 * mn].reshape(m, n)
        return cls(SiegelTangent.from_chart(n, v[:d0]), dZ)


# -- action ---------------------------------------------------------------

def jacobi_act(g: JacobiElement, p: SiegelJacobiPoint) -> SiegelJacobiPoint:
    """``(M . Omega, (Z + lambda Omega + mu)(C Omega + D)^-1)``."""
    if (g.h.n, g.h.m) != (p.n, p.m):
        raise InvariantViolation("degree mismatch between group element and point")
    _, _, C, D = g.M.blocks
    W = p.omega.omega
    Zn = right_solve(p.Z + g.h.lam @ W + g.h.mu, C @ W + D)
    return SiegelJacobiPoint(sp_act(g.M, p.omega), Zn)


def chart_action(g: JacobiElement) -> Callable[[np.ndarray], np.ndarray]:
    n, m = g.h.n, g.h.m
    return lambda x: jacobi_act(g, SiegelJacobiPoint.from_chart(n, m, x)).chart()


# -- metric ---------------------------------------------------------------

def jacobi_metric_quadratic(p: SiegelJacobiPoint, t: JacobiTangent,
                            params: JacobiMetricParams = JacobiMetricParams()) -> float:
    """Real part of the five-term invariant quadratic form at ``p``."""
    Yi = np.linalg.inv(p.omega.Y)
    V = p.V
    dW = t.d_omega.d_omega
    dWb = dW.conj()
    dZ = t.dZ
    dZb = dZ.conj()
    a_term = np.trace(Yi @ dW @ Yi @ dWb)
    b_term = (np.trace(Yi @ V.T @ V @ Yi @ dW @ Yi @ dWb)
              + np.trace(Yi @ dZ.T @ dZb)
              - np.trace(V @ Yi @ dW @ Yi @ dZb.T)
              - np.trace(V @ Yi @ dWb @ Yi @ dZ.T))
    value = params.A * a_term + params.B * b_term
    if abs(value.imag) > 1e-9 * max(1.0, abs(value.real)):
        log.warning("invariant quadratic form has imaginary residue %.3e", value.imag)
    return float(value.real)


def metric_tensor_jacobi(p: SiegelJacobiPoint,
                         params: JacobiMetricParams = JacobiMetricParams()) -> np.ndarray:
    return kernels.jacobi_metric_batch(p.chart()[None], p.n, p.m, params.A, params.B)[0]


def jacobi_metric_field(n: int, m: int,
                        params: JacobiMetricParams = JacobiMetricParams()) -> MetricField:
    h = n * (n + 1) // 2
    mn = m * n
    pairs = tuple((a, h + a) for a in range(h))
    pairs += tuple((2 * h + k, 2 * h + mn + k) for k in range(mn))
    return MetricField(
        dim=2 * h + 2 * mn,
        evaluate_batch=lambda X: kernels.jacobi_metric_batch(X, n, m, params.A, params.B),
        admissible=_y_blocks_pd(n),
        complex_pairs=pairs,
        name=f"siegel-jacobi-n{n}-m{m}-A{params.A:g}-B{params.B:g}",
    )


# -- invariant operators --------------------------------------------------

def _operator_terms(f: Callable, p: SiegelJacobiPoint, cfg: FDConfig) -> tuple[complex, complex]:
    """(M1 f, M2 f) from one nested-FD Hessian."""
    n, m = p.n, p.m
    h = n * (n + 1) // 2
    mn = m * n
    H = fd_hessian(lambda x: f(SiegelJacobiPoint.from_chart(n, m, x)), p.chart(),
                   operator_fd(cfg, p.omega.Y))
    # complex coordinates: Omega slots then z_kl
    re = np.concatenate([np.arange(h), 2 * h + np.arange(mn)])
    im = np.concatenate([h + np.arange(h), 2 * h + mn + np.arange(mn)])
    Wc = wirtinger_mixed(H, re, im)
    IO, wO = sym_index(n), wirtinger_weights(n)
    # (d/dZ)[a, k] = d/dz_{k a}, an n x m matrix
    IZ = h + np.arange(mn).reshape(m, n).T
    wZ = np.ones((n, m))

    def mixed(Ib, wb, I, w):
        return (wb[:, :, None, None] * w[None, None]
                * Wc[Ib[:, :, None, None], I[None, None]])

    Y = p.omega.Y
    V = p.V
    S = V @ np.linalg.inv(Y) @ V.T
    OO = mixed(IO, wO, IO, wO)
    ZZ = mixed(IZ, wZ, IZ, wZ)
    OZ = mixed(IO, wO, IZ, wZ)
    ZO = mixed(IZ, wZ, IO, wO)
    m1 = (np.einsum("ab,ce,ebca->", Y, Y, OO)
          + np.einsum("kl,bc,clbk->", S, Y, ZZ)
          + np.einsum("ka,bc,cabk->", V, Y, OZ)
          + np.einsum("ka,bc,ckba->", V, Y, ZO))
    m2 = np.einsum("ab,akbk->", Y, ZZ)
    return m1, m2


def _real(z, what):
    if abs(z.imag) > 1e-6 * max(1.0, abs(z.real)):
        log.warning("%s has imaginary residue %.3e", what, z.imag)
    return float(z.real)


def m1_apply(f: Callable, p: SiegelJacobiPoint, cfg: FDConfig = FDConfig()) -> float:
    return _real(_operator_terms(f, p, cfg)[0], "M1 f")


def m2_apply(f: Callable, p: SiegelJacobiPoint, cfg: FDConfig = FDConfig()) -> float:
    """``tr(Y d/dZ (d/dZ-bar)^T) f``."""
    return _real(_operator_terms(f, p, cfg)[1], "M2 f")


def jacobi_laplacian_apply(f: Callable, p: SiegelJacobiPoint,
                           params: JacobiMetricParams = JacobiMetricParams(),
                           cfg: FDConfig = FDConfig()) -> float:
    """``(4/A) M1 f + (4/B) M2 f``."""
    m1, m2 = _operator_terms(f, p, cfg)
    return _real(4.0 / params.A * m1 + 4.0 / params.B * m2, "Laplacian")


# -- sampling -------------------------------------------------------------

def random_heisenberg(seed, n: int, m: int, scale: float = 0.5) -> HeisenbergElement:
    rng = _rng(seed)
    lam = scale * rng.normal(size=(m, n))
    mu = scale * rng.normal(size=(m, n))
    kappa = random_symmetric(rng, m, scale) - mu @ lam.T
    return HeisenbergElement(lam, mu, kappa)


def random_jacobi_element(seed, n: int, m: int) -> JacobiElement:
    rng = _rng(seed)
    return JacobiElement(random_symplectic(rng, n), random_heisenberg(rng, n, m))


def random_siegel_jacobi_point(seed, n: int, m: int) -> SiegelJacobiPoint:
    rng = _rng(seed)
    omega = random_siegel_point(rng, n)
    Z = 0.5 * (rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n)))
    return SiegelJacobiPoint(omega, Z)


def jacobi_test_fields(n: int, m: int) -> dict:
    """Z-dependent fields exercising the V-coupled terms."""
    fields = {
        "vtv": lambda p: float(np.trace(p.V @ p.V.T)),
        "zmix": lambda p: float(np.trace(p.Z @ p.Z.conj().T).real / (1.0 + np.trace(p.omega.Y))),
        "trace_y": lambda p: float(np.trace(p.omega.Y)),
        "gauss_y": lambda p: float(np.exp(-np.trace(p.omega.Y.T @ p.omega.Y) / 10.0)),
    }
    if n == 1 and m == 1:
        fields["y_pow_2"] = lambda p: float(p.omega.Y[0, 0] ** 2)
        fields["v_pow_2"] = lambda p: float(p.V[0, 0] ** 2)
        fields["v_pow_3"] = lambda p: float(p.V[0, 0] ** 3)
    return fields
