"""Chart-level Riemannian geometry driven by finite differences.

A :class:`MetricField` maps batches of chart points to metric tensors. On
top of it this module computes Christoffel symbols, integrates and shoots
geodesics, assembles curvature tensors, applies the Laplace-Beltrami
operator and tests the Kaehler conditions. Everything is generic in the
chart dimension; the Siegel and Siegel-Jacobi metrics plug in through
``siegel.siegel_metric_field`` and ``jacobi.jacobi_metric_field``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import NoConvergence, NotPositiveDefinite, StepOverflow
from .numerics import (
    FDConfig,
    fd_gradient,
    fd_partial,
    matrix_to_json,
    stencil_derivative,
    stencil_points,
)

log = logging.getLogger(__name__)

COORD_LIMIT = 1e6


def _always(X):
    return np.ones(len(X), dtype=bool)


@dataclass(frozen=True)
class MetricField:
    """A metric tensor on a chart of R^d.

    ``evaluate_batch`` maps an (N, d) array of points to (N, d, d) tensors.
    ``admissible`` flags, per point, whether it lies in the chart domain.
    ``complex_pairs`` lists (real, imaginary) coordinate index pairs that
    define the standard complex structure, when the chart has one.
    """

    dim: int
    evaluate_batch: Callable[[np.ndarray], np.ndarray]
    admissible: Callable[[np.ndarray], np.ndarray] = _always
    complex_pairs: tuple = ()
    name: str = "metric"

    def __call__(self, x) -> np.ndarray:
        return self.evaluate_batch(np.asarray(x, dtype=float)[None])[0]

    def checked(self, x) -> np.ndarray:
        """Evaluate at one point and enforce symmetry and positive definiteness."""
        G = self(x)
        if np.abs(G - G.T).max() > 1e-10 * max(1.0, np.abs(G).max()):
            raise NotPositiveDefinite(f"{self.name}: metric is not symmetric at {x}")
        try:
            np.linalg.cholesky(G)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite(f"{self.name}: metric is not positive definite") from exc
        return G

    def speed(self, x, v) -> float:
        v = np.asarray(v, dtype=float)
        return float(np.sqrt(v @ self(x) @ v))


def euclidean_field(d: int) -> MetricField:
    eye = np.eye(d)
    pairs = tuple((2 * k, 2 * k + 1) for k in range(d // 2))
    return MetricField(d, lambda X: np.broadcast_to(eye, (len(X), d, d)).copy(),
                       complex_pairs=pairs, name=f"euclidean-{d}")


def _inverse_batch(G):
    try:
        np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("metric tensor is not positive definite") from exc
    return np.linalg.inv(G)


def christoffel_batch(g: MetricField, X, cfg: FDConfig = FDConfig()) -> np.ndarray:
    """Christoffel symbols ``Gamma[p, k, i, j]`` at each row of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    K, d = X.shape
    P = stencil_points(X, cfg)
    vals = g.evaluate_batch(P.reshape(-1, d)).reshape(P.shape[:-1] + (d, d))
    dg = stencil_derivative(vals, cfg)
    ginv = _inverse_batch(g.evaluate_batch(X))
    return kernels.christoffel_contract(ginv, np.ascontiguousarray(dg))


def christoffel(g: MetricField, x, cfg: FDConfig = FDConfig()) -> np.ndarray:
    """``Gamma[k, i, j]`` from the Levi-Civita formula on FD metric derivatives."""
    return christoffel_batch(g, x, cfg)[0]


# -- geodesics ------------------------------------------------------------

@dataclass
class GeodesicPath:
    times: np.ndarray
    points: np.ndarray
    velocities: np.ndarray

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    def speeds(self, g: MetricField) -> np.ndarray:
        G = g.evaluate_batch(self.points)
        return np.sqrt(np.einsum("pi,pij,pj->p", self.velocities, G, self.velocities))

    def to_json(self) -> dict:
        return {
            "times": self.times.tolist(),
            "points": self.points.tolist(),
            "velocities": self.velocities.tolist(),
        }


def _accel(g, X, V, cfg):
    try:
        Gam = christoffel_batch(g, X, cfg)
    except NotPositiveDefinite as exc:
        raise StepOverflow(f"{g.name}: geodesic left the admissible cone") from exc
    return -np.einsum("pkij,pi,pj->pk", Gam, V, V)


def _guard(g, X):
    if not np.all(np.isfinite(X)) or np.abs(X).max() > COORD_LIMIT:
        raise StepOverflow(f"{g.name}: coordinate exceeded {COORD_LIMIT:g}")
    if not np.all(g.admissible(X)):
        raise StepOverflow(f"{g.name}: geodesic left the admissible cone")


def _rk4(g, X, V, T, steps, cfg, record=False):
    dt = T / steps
    traj = [(X.copy(), V.copy())] if record else None
    for _ in range(steps):
        k1x, k1v = V, _accel(g, X, V, cfg)
        X2, V2 = X + 0.5 * dt * k1x, V + 0.5 * dt * k1v
        k2x, k2v = V2, _accel(g, X2, V2, cfg)
        X3, V3 = X + 0.5 * dt * k2x, V + 0.5 * dt * k2v
        k3x, k3v = V3, _accel(g, X3, V3, cfg)
        X4, V4 = X + dt * k3x, V + dt * k3v
        k4x, k4v = V4, _accel(g, X4, V4, cfg)
        X = X + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        V = V + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        _guard(g, X)
        if record:
            traj.append((X.copy(), V.copy()))
    return (X, V) if not record else traj


def geodesic_integrate(g: MetricField, x0, v0, T: float = 1.0, steps: int = 128,
                       cfg: FDConfig = FDConfig()) -> GeodesicPath:
    """Integrate the geodesic equation with classical fourth-order Runge-Kutta."""
    if steps < 64:
        raise ValueError(f"steps must be at least 64, got {steps}")
    X = np.asarray(x0, dtype=float)[None].copy()
    V = np.asarray(v0, dtype=float)[None].copy()
    _guard(g, X)
    traj = _rk4(g, X, V, T, steps, cfg, record=True)
    return GeodesicPath(
        times=np.linspace(0.0, T, steps + 1),
        points=np.array([p[0][0] for p in traj]),
        velocities=np.array([p[1][0] for p in traj]),
    )


def geodesic_endpoints(g: MetricField, X0, V0, T: float = 1.0, steps: int = 128,
                       cfg: FDConfig = FDConfig()) -> np.ndarray:
    """Time-``T`` positions for a batch of initial conditions."""
    X = np.atleast_2d(np.asarray(X0, dtype=float))
    V = np.atleast_2d(np.asarray(V0, dtype=float))
    X = np.broadcast_to(X, V.shape).copy()
    return _rk4(g, X, V, T, steps, cfg)[0]


def _newton_shoot(g, x0, x1, v, steps, tol, max_iter, cfg):
    d = x0.size

    def miss(V):
        return geodesic_endpoints(g, x0, V, 1.0, steps, cfg) - x1

    try:
        F = miss(v[None])[0]
    except StepOverflow as exc:
        raise NoConvergence(f"initial shot failed: {exc}") from exc
    err = np.linalg.norm(F)
    for it in range(max_iter):
        if err <= tol:
            log.debug("shooting converged in %d iterations, miss %.2e", it, err)
            return v
        eps = 1e-6 * max(1.0, np.linalg.norm(v))
        try:
            Fp = miss(v[None] + eps * np.eye(d))
        except StepOverflow as exc:
            raise NoConvergence(f"Jacobian shot failed: {exc}") from exc
        J = (Fp - F[None]).T / eps
        try:
            delta = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence("shooting Jacobian is singular") from exc
        lam = 1.0
        for _ in range(30):
            try:
                Fn = miss((v + lam * delta)[None])[0]
                en = np.linalg.norm(Fn)
            except StepOverflow:
                en = np.inf
            if en < err:
                break
            lam *= 0.5
        else:
            raise NoConvergence(f"line search failed at miss {err:.3e}")
        v, F, err = v + lam * delta, Fn, en
    if err <= tol:
        return v
    raise NoConvergence(f"shooting did not converge in {max_iter} iterations (miss {err:.3e})")


def geodesic_shoot_bvp(g: MetricField, x0, x1, steps: int = 128, tol: float = 1e-9,
                       max_iter: int = 100, cfg: FDConfig = FDConfig()):
    """Initial velocity of the time-1 geodesic from ``x0`` to ``x1``, and its length.

    Damped Newton on the endpoint map, Jacobian by forward differences of
    a batch of perturbed shots, starting from the chord ``x1 - x0``. When
    that fails the target is walked along the chord in stages, each solve
    warm-started from the previous one.
    """
    x0 = np.asarray(x0, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    if np.array_equal(x0, x1):
        raise ValueError("shooting needs two distinct points")
    chord = x1 - x0

    def length(v):
        return float(np.sqrt(v @ g(x0) @ v))

    try:
        v = _newton_shoot(g, x0, x1, chord, steps, tol, max_iter, cfg)
        return length(v), v
    except NoConvergence as exc:
        first = exc
    for stages in (4, 16):
        try:
            v = chord / stages
            for k in range(1, stages + 1):
                if k > 1:
                    v = v * k / (k - 1)
                v = _newton_shoot(g, x0, x0 + chord * k / stages, v, steps,
                                  tol if k == stages else 1e-6, max_iter, cfg)
            log.debug("shooting needed %d continuation stages", stages)
            return length(v), v
        except NoConvergence:
            continue
    raise first


# -- curvature ------------------------------------------------------------

@dataclass
class CurvatureReport:
    """Curvature data at one chart point.

    ``riemann[l, i, j, k] = R^l_{ijk}`` is antisymmetric in (j, k);
    ``ricci[i, j] = R^k_{ikj}`` and ``scalar = g^{ij} R_ij``.
    """

    christoffel: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    einstein_constant: float
    einstein_residual: float
    convention: str = "trace-ricci"
    extra: dict = field(default_factory=dict)

    @property
    def gaussian(self) -> float | None:
        """Sectional curvature for two-dimensional charts."""
        return self.scalar / 2.0 if self.ricci.shape[0] == 2 else None

    def to_json(self) -> dict:
        out = {
            "scalar": self.scalar,
            "convention": self.convention,
            "ricci": matrix_to_json(self.ricci),
            "einstein_constant": self.einstein_constant,
            "einstein_residual": self.einstein_residual,
        }
        if self.gaussian is not None:
            out["gaussian"] = self.gaussian
        out.update(self.extra)
        return out


def curvature(g: MetricField, x, cfg: FDConfig = FDConfig.for_curvature()) -> CurvatureReport:
    x = np.asarray(x, dtype=float)
    d = x.size
    P = stencil_points(x[None], cfg)
    base_and_stencil = np.concatenate([x[None], P.reshape(-1, d)])
    Gam_all = christoffel_batch(g, base_and_stencil, cfg)
    Gam = Gam_all[0]
    dGam = stencil_derivative(Gam_all[1:].reshape(P.shape[:-1] + (d, d, d)), cfg)[0]
    # dGam[m, l, a, b] = d_m Gamma^l_ab
    R = (np.einsum("jlik->lijk", dGam) - np.einsum("klij->lijk", dGam)
         + np.einsum("ljm,mik->lijk", Gam, Gam) - np.einsum("lkm,mij->lijk", Gam, Gam))
    ric = np.einsum("kikj->ij", R)
    ric = 0.5 * (ric + ric.T)
    G = g(x)
    ginv = np.linalg.inv(G)
    scalar = float(np.einsum("ij,ij->", ginv, ric))
    c = scalar / d
    resid = float(np.abs(ric - c * G).max() / np.abs(G).max())
    return CurvatureReport(Gam, R, ric, scalar, c, resid)


def laplace_beltrami(g: MetricField, f: Callable, x, cfg: FDConfig = FDConfig()) -> float:
    """``(1/sqrt det g) d_i (sqrt det g g^ij d_j f)`` by nested differences."""
    x = np.asarray(x, dtype=float)

    def flux(y):
        G = g(y)
        return np.sqrt(np.linalg.det(G)) * np.linalg.solve(G, fd_gradient(f, y, cfg))

    div = sum(fd_partial(lambda y, i=i: flux(y)[i], x, i, cfg) for i in range(x.size))
    return float(div / np.sqrt(np.linalg.det(g(x))))


def complex_structure(d: int, pairs: Sequence) -> np.ndarray:
    """Matrix of J with J e_re = e_im and J e_im = -e_re."""
    J = np.zeros((d, d))
    for re, im in pairs:
        J[im, re] = 1.0
        J[re, im] = -1.0
    return J


def kahler_check(g: MetricField, x, cfg: FDConfig = FDConfig()) -> tuple[float, float]:
    """(compatibility residual, d-omega residual) at ``x``.

    compat is ``max |g(Ju, Jv) - g(u, v)|`` over basis vectors and the
    second entry is the largest component of the exterior derivative of
    ``omega(u, v) = g(Ju, v)``.
    """
    x = np.asarray(x, dtype=float)
    d = x.size
    if not g.complex_pairs or 2 * len(g.complex_pairs) != d:
        raise ValueError(f"{g.name} does not declare a complex pairing of all {d} coordinates")
    J = complex_structure(d, g.complex_pairs)
    G = g(x)
    compat = float(np.abs(J.T @ G @ J - G).max())
    P = stencil_points(x[None], cfg)
    vals = g.evaluate_batch(P.reshape(-1, d)).reshape(P.shape[:-1] + (d, d))
    dOm = np.einsum("ba,pmjsbc->pmjsac", J, vals)
    dOm = stencil_derivative(dOm, cfg)[0]
    # dOm[m, b, c] = d_m omega_bc
    cyc = dOm + np.einsum("bca->abc", dOm) + np.einsum("cab->abc", dOm)
    return compat, float(np.abs(cyc).max())
