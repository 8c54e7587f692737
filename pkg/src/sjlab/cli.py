"""``sjlab`` command line: one JSON document per invocation on stdout."""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import jacobi as jc
from . import riemann as rm
from . import siegel as sg
from . import suites
from .errors import SJLabError
from .numerics import FDConfig, matrix_from_json, matrix_to_json, small_complex_eigenvalues

SIG_DIGITS = 12
PRESETS = ("iI", "i-2i", "special-geodesic", "jacobi-origin", "jacobi-pair")


class UsageError(Exception):
    pass


# -- output ---------------------------------------------------------------

def _round(obj):
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return float(f"{x:.{SIG_DIGITS}g}") + 0.0
    if isinstance(obj, complex):
        return {"re": _round(obj.real), "im": _round(obj.imag)}
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def dumps(obj, style: str = "compact") -> str:
    obj = _round(obj)
    if style == "pretty":
        return json.dumps(obj, indent=2, sort_keys=True)
    return json.dumps(obj, separators=(",", ":"), sort_keys=True)


# -- input ----------------------------------------------------------------

def _parse_complex(text: str) -> complex | None:
    t = text.strip().replace(" ", "").replace("i", "j")
    if t == "j":
        t = "1j"
    try:
        return complex(t)
    except ValueError:
        return None


def load_json(arg: str, what: str):
    """Inline JSON, a path to a JSON file, or a bare complex number."""
    text = arg.strip()
    if not text.startswith(("{", "[", '"')) and os.path.isfile(arg):
        with open(arg) as fh:
            text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        z = _parse_complex(arg)
        if z is not None:
            return z
        raise UsageError(f"{what}: malformed JSON ({exc.msg} at position {exc.pos})") from exc


def siegel_point(obj) -> sg.SiegelPoint:
    if isinstance(obj, complex) or isinstance(obj, (int, float)):
        return sg.SiegelPoint.from_omega([[complex(obj)]])
    if isinstance(obj, str):
        z = _parse_complex(obj)
        if z is None:
            raise UsageError(f"cannot read {obj!r} as a point")
        return sg.SiegelPoint.from_omega([[z]])
    if isinstance(obj, dict) and "omega" in obj and "X" not in obj:
        return sg.SiegelPoint.from_omega(matrix_from_json(obj["omega"]))
    return sg.SiegelPoint.from_json(obj)


def jacobi_point(obj) -> jc.SiegelJacobiPoint:
    if not isinstance(obj, dict):
        raise UsageError("a Siegel-Jacobi point needs {\"omega\": ..., \"Z\": ...}")
    return jc.SiegelJacobiPoint(siegel_point(obj["omega"]), matrix_from_json(obj["Z"]))


def _tangent_chart(obj, space: str, n: int, m: int) -> np.ndarray:
    if isinstance(obj, list):
        v = np.asarray(obj, dtype=float)
    elif isinstance(obj, dict):
        t = sg.SiegelTangent(matrix_from_json(obj["dX"]).real, matrix_from_json(obj["dY"]).real)
        if space == "jacobi":
            t = jc.JacobiTangent(t, matrix_from_json(obj["dZ"]))
        v = t.chart()
    else:
        raise UsageError("tangent must be a chart list or a block dictionary")
    d = sg.chart_dim(n) + (2 * m * n if space == "jacobi" else 0)
    if v.size != d:
        raise UsageError(f"tangent has {v.size} components, chart dimension is {d}")
    return v


def _element(obj, group: str, n: int, m: int, seed: int):
    if obj == "random":
        if group == "sp":
            return sg.random_symplectic(seed, n)
        if group == "heisenberg":
            return jc.random_heisenberg(seed, n, m)
        return jc.random_jacobi_element(seed, n, m)
    if group == "sp":
        return sg.SymplecticElement.from_json(obj)
    if group == "heisenberg":
        return jc.HeisenbergElement.from_json(obj)
    return jc.JacobiElement.from_json(obj)


def _element_json(e):
    return e.to_json()


def _special_a(n: int) -> np.ndarray:
    return np.exp(np.full(n, 1.0 / math.sqrt(n)))


def _preset_points(args):
    n = args.n or 1
    m = args.m or 1
    p = args.preset
    if p == "iI":
        w = sg.SiegelPoint.identity(n)
        return w, w
    if p == "i-2i":
        return sg.SiegelPoint.from_omega([[1j]]), sg.SiegelPoint.from_omega([[2j]])
    if p == "special-geodesic":
        a = _special_a(n)
        return sg.special_geodesic(a, 0.0), sg.special_geodesic(a, 1.0)
    if p == "jacobi-origin":
        o = jc.SiegelJacobiPoint.origin(n, m)
        return o, o
    if p == "jacobi-pair":
        return (jc.SiegelJacobiPoint.origin(1, 1),
                jc.SiegelJacobiPoint(sg.SiegelPoint.from_omega([[2j]]), [[0.3 + 0.1j]]))
    raise UsageError("no preset given")


def _points(args, space: str, names=("point",)):
    out = []
    presets = _preset_points(args) if args.preset else None
    for k, name in enumerate(names):
        raw = getattr(args, name, None)
        if raw is None:
            if presets is None:
                raise UsageError(f"--{name} or --preset is required")
            p = presets[min(k, 1)]
        else:
            obj = load_json(raw, f"--{name}")
            p = jacobi_point(obj) if space == "jacobi" else siegel_point(obj)
        if space == "jacobi" and not isinstance(p, jc.SiegelJacobiPoint):
            raise UsageError(f"preset {args.preset} is not a Siegel-Jacobi point")
        if space == "siegel" and not isinstance(p, sg.SiegelPoint):
            raise UsageError(f"preset {args.preset} is not a Siegel point")
        out.append(p)
    return out


def _fd(args, curvature: bool = False) -> FDConfig:
    base = FDConfig.for_curvature() if curvature else FDConfig()
    return FDConfig(h=args.fd_step if args.fd_step is not None else base.h,
                    richardson_levels=args.richardson if args.richardson is not None
                    else base.richardson_levels)


def _field(space, p, args):
    if space == "siegel":
        return sg.siegel_metric_field(p.n, sg.SiegelMetricParams(args.A))
    return jc.jacobi_metric_field(p.n, p.m, jc.JacobiMetricParams(args.A, args.B))


def _space(args):
    if args.space:
        return args.space
    return "jacobi" if args.preset in ("jacobi-origin", "jacobi-pair") else "siegel"


# -- subcommands ----------------------------------------------------------

def cmd_act(args):
    group = args.group
    (p,) = _points(args, "jacobi" if group == "jacobi" else "siegel")
    n, m = p.n, getattr(p, "m", args.m or 1)
    g = _element(load_json(args.element, "--element") if args.element != "random" else "random",
                 group, n, m, args.seed)
    q = sg.sp_act(g, p) if group == "sp" else jc.jacobi_act(g, p)
    return {"element": _element_json(g), "point": q.to_json()}


def cmd_mul(args):
    n, m = args.n or 1, args.m or 1
    a = _element(load_json(args.left, "--left") if args.left != "random" else "random",
                 args.group, n, m, args.seed)
    b = _element(load_json(args.right, "--right") if args.right != "random" else "random",
                 args.group, n, m, args.seed + 1)
    if args.group == "sp":
        c = a @ b
    elif args.group == "heisenberg":
        c = jc.heisenberg_mul(a, b)
    else:
        c = jc.jacobi_mul(a, b)
    return {"product": _element_json(c)}


def cmd_distance(args):
    if args.A != 1.0:
        raise UsageError("the closed-form distance is available for A = 1 only")
    p0, p1 = _points(args, "siegel", ("point0", "point1"))
    return {"rho": sg.siegel_distance(p0, p1)}


def cmd_cross_ratio(args):
    p0, p1 = _points(args, "siegel", ("point0", "point1"))
    R = sg.cross_ratio(p0, p1)
    ev = small_complex_eigenvalues(R)
    return {"R": matrix_to_json(R), "eigenvalues": [[z.real, z.imag] for z in ev]}


def cmd_metric(args):
    space = _space(args)
    (p,) = _points(args, space)
    g = _field(space, p, args)
    out = {"space": space, "g": matrix_to_json(g(p.chart()))}
    if args.tangent is not None:
        v = _tangent_chart(load_json(args.tangent, "--tangent"), space, p.n, getattr(p, "m", 0))
        out["q"] = float(v @ g(p.chart()) @ v)
    return out


def cmd_laplacian(args):
    op = args.operator
    space = "siegel" if op == "siegel" else "jacobi"
    (p,) = _points(args, space)
    fd = _fd(args)
    if space == "siegel":
        fields = sg.siegel_test_fields(p.n)
    else:
        fields = jc.jacobi_test_fields(p.n, p.m)
    if args.field not in fields:
        raise UsageError(f"unknown field {args.field!r}; choose from {', '.join(sorted(fields))}")
    f = fields[args.field]
    if op == "siegel":
        val = sg.siegel_laplacian_apply(f, p, sg.SiegelMetricParams(args.A), fd)
    elif op == "m1":
        val = jc.m1_apply(f, p, fd)
    elif op == "m2":
        val = jc.m2_apply(f, p, fd)
    else:
        val = jc.jacobi_laplacian_apply(f, p, jc.JacobiMetricParams(args.A, args.B), fd)
    return {"operator": op, "field": args.field, "value": val}


def cmd_curvature(args):
    space = _space(args)
    (p,) = _points(args, space)
    rep = rm.curvature(_field(space, p, args), p.chart(), _fd(args, curvature=True))
    return {"space": space, **rep.to_json()}


def cmd_geodesic(args):
    space = _space(args)
    fd = _fd(args)
    if args.mode == "shoot":
        p0, p1 = _points(args, space, ("point0", "point1"))
        g = _field(space, p0, args)
        dist, v0 = rm.geodesic_shoot_bvp(g, p0.chart(), p1.chart(), steps=args.steps, cfg=fd)
        out = {"length": dist, "v0": v0}
        if space == "siegel" and args.A == 1.0:
            out["series_distance"] = sg.siegel_distance(p0, p1)
        return out
    (p,) = _points(args, space)
    g = _field(space, p, args)
    if args.velocity is not None:
        v0 = _tangent_chart(load_json(args.velocity, "--velocity"), space, p.n, getattr(p, "m", 0))
    elif args.preset == "special-geodesic":
        v0 = sg.SiegelTangent(np.zeros((p.n, p.n)), np.diag(np.log(_special_a(p.n)))).chart()
    else:
        raise UsageError("--velocity is required")
    path = rm.geodesic_integrate(g, p.chart(), v0, args.T, args.steps, fd)
    out = {"end": path.end, "speed": path.speeds(g)[[0, -1]]}
    if args.trajectory:
        out["path"] = path.to_json()
    if args.preset == "special-geodesic" and args.velocity is None:
        ref = sg.special_geodesic(_special_a(p.n), args.T).chart()
        out["reference_error"] = float(np.abs(path.end - ref).max())
    return out


def cmd_kahler(args):
    (p,) = _points(args, "jacobi")
    compat, domega = rm.kahler_check(_field("jacobi", p, args), p.chart(), _fd(args))
    return {"compatibility": compat, "domega": domega}


def _suite_config(args) -> suites.SuiteConfig:
    return suites.SuiteConfig.from_env(
        seed=args.seed, samples=args.samples, tolerances=args.tolerances,
        n=args.n, m=args.m, A=args.A, B=args.B, fd=_fd(args))


def cmd_check(args):
    try:
        names = suites.check_names(args.suite)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from exc
    for name in args.tolerances:
        if name not in suites._REGISTRY:
            raise UsageError(f"--tol.{name}: no such check")
    rep = suites.run_suite(args.suite, _suite_config(args))
    assert [c["name"] for c in rep["checks"]] == names
    return rep


def cmd_report(args):
    reports = []
    for path in args.inputs:
        obj = load_json(path, path)
        if not isinstance(obj, dict) or "checks" not in obj:
            raise UsageError(f"{path}: not a check report")
        reports.append(obj)
    return suites.merge_reports(reports)


# -- parser ---------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--samples", type=int)
    p.add_argument("--fd-step", type=float)
    p.add_argument("--richardson", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--A", type=float, default=1.0)
    p.add_argument("--B", type=float, default=1.0)
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--json", choices=("compact", "pretty"), default="compact")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="sjlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(fn=fn)
        return sp

    sp = add("act", cmd_act, "apply a group element to a point")
    sp.add_argument("--group", choices=("sp", "jacobi"), default="sp")
    sp.add_argument("--element", required=True, help="JSON, file, or 'random'")
    sp.add_argument("--point")

    sp = add("mul", cmd_mul, "multiply two group elements")
    sp.add_argument("--group", choices=("sp", "heisenberg", "jacobi"), default="sp")
    sp.add_argument("--left", required=True)
    sp.add_argument("--right", required=True)

    for name, fn, h in (("distance", cmd_distance, "geodesic distance on H_n"),
                        ("cross-ratio", cmd_cross_ratio, "cross-ratio matrix and spectrum")):
        sp = add(name, fn, h)
        sp.add_argument("--point0")
        sp.add_argument("--point1")

    sp = add("metric", cmd_metric, "metric tensor in chart coordinates")
    sp.add_argument("--space", choices=("siegel", "jacobi"))
    sp.add_argument("--point")
    sp.add_argument("--tangent")

    sp = add("laplacian", cmd_laplacian, "apply an invariant operator to a catalog field")
    sp.add_argument("--operator", choices=("full", "m1", "m2", "siegel"), default="full")
    sp.add_argument("--field", required=True)
    sp.add_argument("--point")

    sp = add("curvature", cmd_curvature, "Ricci and scalar curvature")
    sp.add_argument("--space", choices=("siegel", "jacobi"))
    sp.add_argument("--point")

    sp = add("geodesic", cmd_geodesic, "integrate or shoot geodesics")
    sp.add_argument("mode", choices=("integrate", "shoot"))
    sp.add_argument("--space", choices=("siegel", "jacobi"))
    sp.add_argument("--point")
    sp.add_argument("--point0")
    sp.add_argument("--point1")
    sp.add_argument("--velocity")
    sp.add_argument("--T", type=float, default=1.0)
    sp.add_argument("--steps", type=int, default=128)
    sp.add_argument("--trajectory", action="store_true")

    sp = add("kahler", cmd_kahler, "Kahler residuals of the Siegel-Jacobi metric")
    sp.add_argument("--point")

    sp = add("check", cmd_check, "run seeded verification suites")
    sp.add_argument("--suite", default="all")

    sp = add("report", cmd_report, "merge check reports")
    sp.add_argument("inputs", nargs="+")
    return parser


def _split_tolerances(argv):
    """Pull ``--tol.<name> value`` / ``--tol.<name>=value`` out of argv."""
    rest, tols = [], {}
    it = iter(argv)
    for tok in it:
        if not tok.startswith("--tol."):
            rest.append(tok)
            continue
        key, sep, val = tok[len("--tol."):].partition("=")
        if not sep:
            val = next(it, None)
            if val is None:
                raise UsageError(f"{tok} needs a value")
        try:
            tols[key] = float(val)
        except ValueError as exc:
            raise UsageError(f"{tok}: {val!r} is not a number") from exc
        if not tols[key] > 0:
            raise UsageError(f"{tok}: tolerance must be positive")
    return rest, tols


def run_command(argv) -> tuple[int, str]:
    """Exit code and stdout text; diagnostics go to stderr."""
    try:
        argv, tols = _split_tolerances(list(argv))
        args = build_parser().parse_args(argv)
        args.tolerances = tols
        if args.samples is not None and args.samples < 1:
            raise UsageError("--samples must be at least 1")
        if not (0 <= args.seed < 2**64):
            raise UsageError("--seed must be a 64-bit unsigned integer")
        result = args.fn(args)
    except SystemExit as exc:
        return int(exc.code or 0), ""
    except UsageError as exc:
        print(f"sjlab: error: {exc}", file=sys.stderr)
        return 2, ""
    except (SJLabError, KeyError, TypeError, ValueError) as exc:
        print(f"sjlab: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2, ""
    code = 0
    if args.command in ("check", "report") and not result["passed"]:
        code = 1
    return code, dumps(result, args.json)


def main(argv=None) -> int:
    code, text = run_command(sys.argv[1:] if argv is None else argv)
    if text:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
