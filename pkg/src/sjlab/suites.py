"""Seeded verification suites.

Each check draws its samples from a generator seeded by
``(seed, crc32(check name), sample index)``, so results do not depend on
which other checks run or on thread scheduling.
"""
from __future__ import annotations

import itertools
import math
import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import jacobi as jc
from . import riemann as rm
from . import siegel as sg
from .errors import InvariantViolation, SJLabError
from .numerics import FDConfig, fd_jacobian, fd_partial, small_complex_eigenvalues


# tangent pushforward step for invariance identities
PUSHFORWARD_FD = FDConfig(h=1e-5)


@dataclass
class SuiteConfig:
    seed: int = 42
    samples: int | None = None
    tolerances: dict = field(default_factory=dict)
    n: int | None = None
    m: int | None = None
    A: float = 1.0
    B: float = 1.0
    fd: FDConfig = field(default_factory=FDConfig)
    threads: int = 1

    def __post_init__(self):
        if self.samples is not None and self.samples < 1:
            raise InvariantViolation("samples must be at least 1")
        for k, v in self.tolerances.items():
            if not v > 0:
                raise InvariantViolation(f"tolerance {k} must be positive")
        if not (0 <= self.seed < 2**64):
            raise InvariantViolation("seed must be a 64-bit unsigned integer")

    @classmethod
    def from_env(cls, **kw) -> "SuiteConfig":
        threads = int(os.environ.get("SJLAB_THREADS", "1") or 1)
        return cls(threads=max(1, threads), **kw)


@dataclass
class CheckResult:
    name: str
    passed: bool
    max_residual: float
    tolerance: float
    samples: int
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "max_residual": self.max_residual,
                "tolerance": self.tolerance, "samples": self.samples, "details": self.details}


@dataclass(frozen=True)
class _Check:
    name: str
    suite: str
    tolerance: float
    samples: int
    run: Callable


_REGISTRY: dict[str, _Check] = {}


def check(name, suite, tolerance, samples):
    def deco(fn):
        _REGISTRY[name] = _Check(name, suite, tolerance, samples, fn)
        return fn
    return deco


def sample_rng(seed: int, name: str, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(name.encode()), index])


class _Ctx:
    """Per-check view of the suite configuration."""

    def __init__(self, spec: _Check, cfg: SuiteConfig):
        self.name = spec.name
        self.cfg = cfg
        self.count = cfg.samples if cfg.samples is not None else spec.samples

    def rng(self, i):
        return sample_rng(self.cfg.seed, self.name, i)

    def sizes(self, default):
        if self.cfg.n is None and self.cfg.m is None:
            return default
        out = [s for s in default
               if (self.cfg.n is None or s[0] == self.cfg.n)
               and (len(s) < 2 or self.cfg.m is None or s[1] == self.cfg.m)]
        return out or default

    def map(self, fn, items):
        items = list(items)
        if self.cfg.threads > 1:
            with ThreadPoolExecutor(self.cfg.threads) as ex:
                return list(ex.map(fn, items))
        return [fn(x) for x in items]


def _rel(a, b):
    return abs(a - b) / max(1.0, abs(b))


def _spectrum_gap(e1, e2):
    return min(max(abs(a - b) for a, b in zip(e1, p)) for p in itertools.permutations(e2))


def _moderate_pair(rng, n):
    a = sg.random_siegel_point(rng, n)
    L = np.linalg.cholesky(a.Y)
    H = sg.random_symmetric(rng, n, 0.5)
    w, U = np.linalg.eigh(H)
    E = U @ np.diag(np.exp(w)) @ U.T
    S = sg.random_symmetric(rng, n, 0.5)
    b = sg.SiegelPoint(sg._sym(a.X + L @ S @ L.T), sg._sym(L @ E @ L.T))
    return a, b


# -- distance -------------------------------------------------------------

@check("distance_oracle", "distance", 1e-9, 100)
def _distance_oracle(ctx):
    i1 = sg.SiegelPoint.identity(1)
    base = abs(sg.siegel_distance(i1, sg.SiegelPoint.from_omega([[2j]])) - math.log(2.0))

    def one(k):
        rng = ctx.rng(k)
        a, b = sg.random_siegel_point(rng, 1), sg.random_siegel_point(rng, 1)
        return abs(sg.siegel_distance(a, b) - sg.poincare_distance(a, b))

    res = ctx.map(one, range(ctx.count))
    return max([base] + res), {"log2_error": base}


@check("distance_invariance", "distance", 1e-8, 100)
def _distance_invariance(ctx):
    per_n = {}
    for (n,) in ctx.sizes([(1,), (2,), (3,)]):
        def one(k, n=n):
            rng = ctx.rng(1000 * n + k)
            M = sg.random_symplectic(rng, n)
            a, b = sg.random_siegel_point(rng, n), sg.random_siegel_point(rng, n)
            return abs(sg.siegel_distance(sg.sp_act(M, a), sg.sp_act(M, b)) - sg.siegel_distance(a, b))
        per_n[f"n{n}"] = max(ctx.map(one, range(ctx.count)))
    return max(per_n.values()), per_n


@check("cross_ratio_spectrum", "distance", 1e-8, 100)
def _cross_ratio_spectrum(ctx):
    per_n = {}
    for (n,) in ctx.sizes([(1,), (2,), (3,)]):
        def one(k, n=n):
            rng = ctx.rng(1000 * n + k)
            M = sg.random_symplectic(rng, n)
            a, b = sg.random_siegel_point(rng, n), sg.random_siegel_point(rng, n)
            e1 = small_complex_eigenvalues(sg.cross_ratio(b, a))
            e2 = small_complex_eigenvalues(sg.cross_ratio(sg.sp_act(M, b), sg.sp_act(M, a)))
            return _spectrum_gap(e1, e2)
        per_n[f"n{n}"] = max(ctx.map(one, range(ctx.count)))
    return max(per_n.values()), per_n


# -- special geodesics ----------------------------------------------------

def _special_velocity(a, t, cfg):
    n = len(a)
    v = fd_partial(lambda s: sg.special_geodesic(a, s[0]).chart(), np.array([t]), 0, cfg)
    return sg.SiegelTangent.from_chart(n, v)


@check("special_geodesic_speed", "geodesic", 1e-6, 20)
def _special_speed(ctx):
    def one(k):
        rng = ctx.rng(k)
        n = 1 + k % 3
        a = sg.random_unit_logs(rng, n)
        return max(abs(sg.siegel_metric_quadratic(sg.special_geodesic(a, t),
                                                  _special_velocity(a, t, ctx.cfg.fd)) - 1.0)
                   for t in (-1.0, 0.0, 2.0))
    return max(ctx.map(one, range(ctx.count))), {}


@check("special_geodesic_distance", "geodesic", 1e-6, 20)
def _special_distance(ctx):
    def one(k):
        rng = ctx.rng(k)
        a = sg.random_unit_logs(rng, 1 + k % 3)
        return abs(sg.siegel_distance(sg.special_geodesic(a, 0.0), sg.special_geodesic(a, 1.0)) - 1.0)
    return max(ctx.map(one, range(ctx.count))), {}


@check("special_geodesic_integration", "geodesic", 1e-5, 6)
def _special_integration(ctx):
    def one(k):
        rng = ctx.rng(k)
        n = 1 + k % 3
        a = sg.random_unit_logs(rng, n)
        g = sg.siegel_metric_field(n)
        v0 = sg.SiegelTangent(np.zeros((n, n)), np.diag(np.log(a))).chart()
        path = rm.geodesic_integrate(g, sg.SiegelPoint.identity(n).chart(), v0, 1.0, 128, ctx.cfg.fd)
        return float(np.abs(path.end - sg.special_geodesic(a, 1.0).chart()).max())
    return max(ctx.map(one, range(ctx.count))), {}


# -- operators ------------------------------------------------------------

@check("laplacian_siegel_vs_laplace_beltrami", "laplacian", 1e-4, 3)
def _lap_siegel(ctx):
    worst = {}
    for (n,) in ctx.sizes([(1,), (2,)]):
        params = sg.SiegelMetricParams(ctx.cfg.A)
        g = sg.siegel_metric_field(n, params)
        for k in range(ctx.count):
            w = sg.random_siegel_point(ctx.rng(100 * n + k), n)
            for name, f in sg.siegel_test_fields(n).items():
                a = sg.siegel_laplacian_apply(f, w, params, ctx.cfg.fd)
                b = rm.laplace_beltrami(g, lambda x, f=f: f(sg.SiegelPoint.from_chart(n, x)),
                                        w.chart(), ctx.cfg.fd)
                key = f"n{n}.{name}"
                worst[key] = max(worst.get(key, 0.0), _rel(a, b))
    return max(worst.values()), worst


@check("laplacian_jacobi_vs_laplace_beltrami", "laplacian", 1e-3, 3)
def _lap_jacobi(ctx):
    worst = {}
    params = jc.JacobiMetricParams(ctx.cfg.A, ctx.cfg.B)
    g = jc.jacobi_metric_field(1, 1, params)
    for k in range(ctx.count):
        p = jc.random_siegel_jacobi_point(ctx.rng(k), 1, 1)
        for name, f in jc.jacobi_test_fields(1, 1).items():
            a = jc.jacobi_laplacian_apply(f, p, params, ctx.cfg.fd)
            b = rm.laplace_beltrami(g, lambda x, f=f: f(jc.SiegelJacobiPoint.from_chart(1, 1, x)),
                                    p.chart(), ctx.cfg.fd)
            worst[name] = max(worst.get(name, 0.0), _rel(a, b))
    return max(worst.values()), worst


@check("laplacian_jacobi_reduces_to_siegel", "laplacian", 1e-5, 3)
def _lap_reduction(ctx):
    worst = 0.0
    for n, m in ctx.sizes([(1, 1), (2, 1)]):
        for k in range(ctx.count):
            p = jc.random_siegel_jacobi_point(ctx.rng(100 * n + k), n, m)
            for f in sg.siegel_test_fields(n).values():
                a = jc.jacobi_laplacian_apply(lambda q, f=f: f(q.omega), p,
                                              jc.JacobiMetricParams(ctx.cfg.A, ctx.cfg.B), ctx.cfg.fd)
                b = sg.siegel_laplacian_apply(f, p.omega, sg.SiegelMetricParams(ctx.cfg.A), ctx.cfg.fd)
                worst = max(worst, _rel(a, b))
    return worst, {}


def _operator_invariance(ctx, op):
    fields = list(jc.jacobi_test_fields(1, 1).items())
    params = jc.JacobiMetricParams(ctx.cfg.A, ctx.cfg.B)

    def apply(f, p):
        if op == "laplacian":
            return jc.jacobi_laplacian_apply(f, p, params, ctx.cfg.fd)
        return (jc.m1_apply if op == "m1" else jc.m2_apply)(f, p, ctx.cfg.fd)

    def one(k):
        rng = ctx.rng(k)
        g = jc.random_jacobi_element(rng, 1, 1)
        p = jc.random_siegel_jacobi_point(rng, 1, 1)
        name, f = fields[k % len(fields)]
        lhs = apply(lambda q: f(jc.jacobi_act(g, q)), p)
        rhs = apply(f, jc.jacobi_act(g, p))
        return _rel(lhs, rhs)

    return max(ctx.map(one, range(ctx.count))), {}


@check("invariance_laplacian", "operators", 1e-3, 20)
def _inv_lap(ctx):
    return _operator_invariance(ctx, "laplacian")


@check("invariance_m1", "operators", 1e-3, 20)
def _inv_m1(ctx):
    return _operator_invariance(ctx, "m1")


@check("invariance_m2", "operators", 1e-3, 20)
def _inv_m2(ctx):
    return _operator_invariance(ctx, "m2")


@check("invariance_siegel_laplacian", "operators", 1e-4, 20)
def _inv_siegel_lap(ctx):
    def one(k):
        rng = ctx.rng(k)
        n = 1 + k % 2
        M = sg.random_symplectic(rng, n)
        w = sg.random_siegel_point(rng, n)
        fields = list(sg.siegel_test_fields(n).values())
        f = fields[k % len(fields)]
        params = sg.SiegelMetricParams(ctx.cfg.A)
        lhs = sg.siegel_laplacian_apply(lambda q: f(sg.sp_act(M, q)), w, params, ctx.cfg.fd)
        rhs = sg.siegel_laplacian_apply(f, sg.sp_act(M, w), params, ctx.cfg.fd)
        return _rel(lhs, rhs)
    return max(ctx.map(one, range(ctx.count))), {}


# -- volume ---------------------------------------------------------------

@check("volume_invariance", "volume", 1e-5, 50)
def _volume(ctx):
    def one(k):
        rng = ctx.rng(k)
        n = 1 + k % 2
        M = sg.random_symplectic(rng, n)
        w = sg.random_siegel_point(rng, n)
        J = fd_jacobian(sg.chart_action(M), w.chart(), PUSHFORWARD_FD)
        lhs = sg.volume_density(sg.sp_act(M, w)) * abs(np.linalg.det(J))
        rhs = sg.volume_density(w)
        return abs(lhs - rhs) / rhs
    return max(ctx.map(one, range(ctx.count))), {}


# -- curvature ------------------------------------------------------------

@check("curvature_poincare_gaussian", "curvature", 1e-4, 10)
def _curv_poincare(ctx):
    g = sg.siegel_metric_field(1)

    def one(k):
        w = sg.random_siegel_point(ctx.rng(k), 1)
        return abs(rm.curvature(g, w.chart()).gaussian + 1.0)
    return max(ctx.map(one, range(ctx.count))), {}


def _jacobi_scalars(ctx):
    out = {}
    pts = [jc.random_siegel_jacobi_point(ctx.rng(k), 1, 1).chart() for k in range(ctx.count)]
    for A, B in itertools.product((1.0, 2.0), (1.0, 5.0)):
        g = jc.jacobi_metric_field(1, 1, jc.JacobiMetricParams(A, B))
        out[A, B] = np.array(ctx.map(lambda x: rm.curvature(g, x).scalar, pts))
    return out


@check("curvature_jacobi_scalar", "curvature", 1e-3, 10)
def _curv_jacobi(ctx):
    s = _jacobi_scalars(ctx)
    constant = max(float(np.ptp(v)) for v in s.values())
    b_indep = max(float(np.abs(s[A, 1.0] - s[A, 5.0]).max()) for A in (1.0, 2.0))
    a_scale = max(float(np.abs(2.0 * s[2.0, B] - s[1.0, B]).max()) for B in (1.0, 5.0))
    trace_err = max(float(np.abs(v + 3.0 / A).max()) for (A, B), v in s.items())
    half_err = max(float(np.abs(0.5 * v + 3.0 / A).max()) for (A, B), v in s.items())
    convention = "trace-ricci" if trace_err <= half_err else "half-trace"
    value_err = min(trace_err, half_err)
    details = {
        "constant_across_points": constant,
        "b_independence": b_indep,
        "a_scaling": a_scale,
        "value_vs_minus_3_over_A": value_err,
        "matching_convention": convention,
        "mean_scalar": {f"A{A:g}_B{B:g}": float(v.mean()) for (A, B), v in s.items()},
    }
    return max(constant, b_indep, a_scale, value_err), details


@check("einstein_siegel", "curvature", 1e-3, 10)
def _einstein(ctx):
    resid, spread, consts = 0.0, 0.0, {}
    for (n,) in ctx.sizes([(1,), (2,)]):
        g = sg.siegel_metric_field(n, sg.SiegelMetricParams(ctx.cfg.A))
        reps = ctx.map(lambda k, n=n: rm.curvature(g, sg.random_siegel_point(ctx.rng(100 * n + k), n).chart()),
                       range(ctx.count))
        c = np.array([r.einstein_constant for r in reps])
        resid = max(resid, max(r.einstein_residual for r in reps))
        spread = max(spread, float(np.ptp(c)))
        consts[f"n{n}"] = float(c.mean())
    return max(resid, spread), {"einstein_constant": consts, "constant_spread": spread,
                                "proportionality_residual": resid}


@check("kahler_jacobi", "kahler", 1e-4, 10)
def _kahler(ctx):
    worst = {"compat": 0.0, "domega": 0.0}
    for A, B in sorted({(ctx.cfg.A, ctx.cfg.B), (2.0, 5.0)}):
        g = jc.jacobi_metric_field(1, 1, jc.JacobiMetricParams(A, B))
        for k in range(ctx.count):
            c, d = rm.kahler_check(g, jc.random_siegel_jacobi_point(ctx.rng(k), 1, 1).chart(), ctx.cfg.fd)
            worst["compat"] = max(worst["compat"], c)
            worst["domega"] = max(worst["domega"], d)
    return max(worst.values()), worst


# -- groups ---------------------------------------------------------------

def _jacobi_inverse(g: jc.JacobiElement) -> jc.JacobiElement:
    """Right inverse found by solving g x = e for x."""
    from .numerics import linear_solve

    n = g.M.n
    Minv = sg.SymplecticElement(linear_solve(g.M.M, np.eye(2 * n)).real)
    rows = np.hstack([g.h.lam, g.h.mu]) @ Minv.M
    lt, mt = rows[:, :n], rows[:, n:]
    # x = (M^-1, (-lt, -mu_t; k)) with kappa + k + lt^T(-mt) - mt^T(-lt) = 0
    k = -g.h.kappa + lt @ mt.T - mt @ lt.T
    return jc.JacobiElement(Minv, jc.HeisenbergElement(-lt, -mt, k))


def _jacobi_gap(a: jc.JacobiElement, b: jc.JacobiElement) -> float:
    return max(float(np.abs(a.M.M - b.M.M).max()), float(np.abs(a.h.lam - b.h.lam).max()),
               float(np.abs(a.h.mu - b.h.mu).max()), float(np.abs(a.h.kappa - b.h.kappa).max()))


@check("group_laws", "group", 1e-9, 100)
def _group(ctx):
    worst = {"identity": 0.0, "associativity": 0.0, "constraint_closure": 0.0,
             "action_compatibility": 0.0, "action_identity": 0.0, "inverse": 0.0}
    for n, m in ctx.sizes([(1, 1), (2, 1), (1, 2)]):
        e = jc.JacobiElement.identity(n, m)
        for k in range(ctx.count):
            rng = ctx.rng(1000 * (10 * n + m) + k)
            h1, h2, h3 = (jc.random_heisenberg(rng, n, m) for _ in range(3))
            g1, g2, g3 = (jc.random_jacobi_element(rng, n, m) for _ in range(3))
            p = jc.random_siegel_jacobi_point(rng, n, m)
            he = jc.HeisenbergElement.identity(n, m)
            hm = jc.heisenberg_mul
            idn = max(float(np.abs(hm(h1, he).kappa - h1.kappa).max()),
                      float(np.abs(hm(he, h1).kappa - h1.kappa).max()),
                      _jacobi_gap(jc.jacobi_mul(g1, e), g1), _jacobi_gap(jc.jacobi_mul(e, g1), g1))
            l, r = hm(hm(h1, h2), h3), hm(h1, hm(h2, h3))
            assoc = max(float(np.abs(l.kappa - r.kappa).max()), float(np.abs(l.lam - r.lam).max()),
                        _jacobi_gap(jc.jacobi_mul(jc.jacobi_mul(g1, g2), g3),
                                    jc.jacobi_mul(g1, jc.jacobi_mul(g2, g3))))
            prod = hm(h1, h2)
            S = prod.kappa + prod.mu @ prod.lam.T
            jp = jc.jacobi_mul(g1, g2).h
            S2 = jp.kappa + jp.mu @ jp.lam.T
            closure = max(float(np.abs(S - S.T).max()), float(np.abs(S2 - S2.T).max()))
            q1 = jc.jacobi_act(jc.jacobi_mul(g1, g2), p).chart()
            q2 = jc.jacobi_act(g1, jc.jacobi_act(g2, p)).chart()
            compat = float(np.abs(q1 - q2).max())
            act_id = float(np.abs(jc.jacobi_act(e, p).chart() - p.chart()).max())
            inv = _jacobi_inverse(g1)
            inverse = max(_jacobi_gap(jc.jacobi_mul(g1, inv), e), _jacobi_gap(jc.jacobi_mul(inv, g1), e))
            for key, val in [("identity", idn), ("associativity", assoc), ("constraint_closure", closure),
                             ("action_compatibility", compat), ("action_identity", act_id),
                             ("inverse", inverse)]:
                worst[key] = max(worst[key], val)
    return max(worst.values()), worst


# -- shooting -------------------------------------------------------------

@check("shooting_siegel", "shooting", 1e-5, 20)
def _shoot_siegel(ctx):
    per_n = {}
    for (n,) in ctx.sizes([(1,), (2,)]):
        g = sg.siegel_metric_field(n)

        def one(k, n=n):
            a, b = _moderate_pair(ctx.rng(100 * n + k), n)
            d, _ = rm.geodesic_shoot_bvp(g, a.chart(), b.chart(), cfg=ctx.cfg.fd)
            return abs(d - sg.siegel_distance(a, b))
        per_n[f"n{n}"] = max(ctx.map(one, range(ctx.count)))
    return max(per_n.values()), per_n


@check("shooting_jacobi_symmetry", "shooting", 1e-5, 3)
def _shoot_jacobi(ctx):
    g = jc.jacobi_metric_field(1, 1, jc.JacobiMetricParams(ctx.cfg.A, ctx.cfg.B))
    p = jc.SiegelJacobiPoint.origin(1, 1)
    q = jc.SiegelJacobiPoint(sg.SiegelPoint.from_omega([[2j]]), [[0.3 + 0.1j]])
    pairs = [(p, q)]
    for k in range(1, ctx.count):
        rng = ctx.rng(k)
        a = jc.random_siegel_jacobi_point(rng, 1, 1)
        b = jc.SiegelJacobiPoint(sg.SiegelPoint(a.omega.X + 0.3 * rng.normal(size=(1, 1)),
                                                a.omega.Y * math.exp(0.4 * rng.normal())),
                                 a.Z + 0.2 * (rng.normal() + 1j * rng.normal()))
        pairs.append((a, b))

    def one(pq):
        a, b = pq
        d1, _ = rm.geodesic_shoot_bvp(g, a.chart(), b.chart(), cfg=ctx.cfg.fd)
        d2, _ = rm.geodesic_shoot_bvp(g, b.chart(), a.chart(), cfg=ctx.cfg.fd)
        return abs(d1 - d2), d1

    res = ctx.map(one, pairs)
    return max(r[0] for r in res), {"preset_distance": res[0][1]}


# -- driver ---------------------------------------------------------------

SUITES = sorted({c.suite for c in _REGISTRY.values()})


def check_names(suite: str = "all") -> list[str]:
    if suite != "all" and suite not in SUITES and suite not in _REGISTRY:
        raise KeyError(f"unknown suite {suite!r}; choose from all, {', '.join(SUITES)}")
    if suite in _REGISTRY:
        return [suite]
    return sorted(n for n, c in _REGISTRY.items() if suite == "all" or c.suite == suite)


def default_tolerance(name: str) -> float:
    return _REGISTRY[name].tolerance


def run_check(name: str, cfg: SuiteConfig = SuiteConfig()) -> CheckResult:
    spec = _REGISTRY[name]
    ctx = _Ctx(spec, cfg)
    tol = cfg.tolerances.get(name, spec.tolerance)
    try:
        resid, details = spec.run(ctx)
    except SJLabError as exc:
        # one bad sample fails this check, not the whole report
        return CheckResult(name, False, math.inf, tol, ctx.count,
                           {"error": f"{type(exc).__name__}: {exc}"})
    resid = float(resid)
    return CheckResult(name, bool(resid <= tol), resid, tol, ctx.count, details)


def run_suite(suite: str = "all", cfg: SuiteConfig = SuiteConfig()) -> dict:
    results = [run_check(name, cfg) for name in check_names(suite)]
    return {
        "suite": suite,
        "seed": cfg.seed,
        "passed": all(r.passed for r in results),
        "checks": [r.to_json() for r in results],
    }


def merge_reports(reports: list[dict]) -> dict:
    """Combine several check reports; later entries for a check win."""
    checks = {}
    for rep in reports:
        for c in rep.get("checks", []):
            checks[c["name"]] = c
    ordered = [checks[k] for k in sorted(checks)]
    return {"suite": "report", "sources": len(reports),
            "passed": all(c["passed"] for c in ordered), "checks": ordered}
