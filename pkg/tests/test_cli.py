import json
import math
import subprocess
import sys

import numpy as np
import pytest

from sjlab import jacobi as jc
from sjlab import siegel as sg
from sjlab.cli import dumps, run_command


def run(*argv):
    code, out = run_command(list(argv))
    return code, (json.loads(out) if out else None)


def H(l, m, k):
    return json.dumps(jc.HeisenbergElement([[l]], [[m]], [[k]]).to_json())


class TestOutput:
    def test_twelve_digits(self):
        assert dumps({"x": math.pi}) == '{"x":3.14159265359}'
        assert dumps({"x": -0.0}) == '{"x":0.0}'

    def test_pretty(self):
        assert dumps({"b": 1, "a": [1.5]}, "pretty").startswith("{\n  \"a\"")


class TestCommands:
    def test_distance_shorthand(self):
        code, out = run("distance", "--point0", "i", "--point1", "2i")
        assert code == 0 and out["rho"] == pytest.approx(math.log(2), abs=1e-11)

    def test_distance_json_and_file(self, tmp_path):
        p0 = tmp_path / "p0.json"
        p0.write_text(json.dumps(sg.SiegelPoint.identity(2).to_json()))
        p1 = json.dumps(sg.SiegelPoint.from_omega(1j * math.exp(1 / math.sqrt(2)) * np.eye(2)).to_json())
        code, out = run("distance", "--point0", str(p0), "--point1", p1)
        assert code == 0 and out["rho"] == pytest.approx(1.0, abs=1e-11)

    def test_distance_presets(self):
        assert run("distance", "--preset", "i-2i")[1]["rho"] == pytest.approx(math.log(2), abs=1e-11)
        assert run("distance", "--preset", "special-geodesic", "--n", "3")[1]["rho"] == pytest.approx(1.0, abs=1e-10)

    def test_act_translation(self, tmp_path):
        M = sg.SymplecticElement.translation([[0.5]])
        f = tmp_path / "M.json"
        f.write_text(json.dumps(M.to_json()))
        code, out = run("act", "--group", "sp", "--element", str(f), "--point", "2i")
        q = sg.SiegelPoint.from_json(out["point"])
        assert code == 0 and q.omega[0, 0] == pytest.approx(0.5 + 2j)

    def test_act_jacobi(self):
        g = jc.JacobiElement(sg.SymplecticElement.J(1), jc.HeisenbergElement.identity(1, 1))
        code, out = run("act", "--group", "jacobi", "--element", json.dumps(g.to_json()), "--preset", "jacobi-origin")
        p = jc.SiegelJacobiPoint.from_json(out["point"])
        np.testing.assert_allclose(p.chart(), [0, 1, 0, 0], atol=1e-12)

    def test_mul_heisenberg(self):
        code, out = run("mul", "--group", "heisenberg", "--left", H(1, 2, 0), "--right", H(3, 4, 0))
        h = jc.HeisenbergElement.from_json(out["product"])
        assert (h.lam[0, 0], h.mu[0, 0], h.kappa[0, 0]) == (4, 6, -2)

    def test_cross_ratio(self):
        code, out = run("cross-ratio", "--preset", "i-2i")
        assert out["eigenvalues"][0][0] == pytest.approx(1 / 9)

    def test_metric(self):
        code, out = run("metric", "--preset", "jacobi-origin", "--A", "2", "--B", "5", "--tangent", "[0,0,1,0]")
        assert out["q"] == 5.0 and out["g"]["re"][0] == 2.0

    @pytest.mark.parametrize("op,field,value", [("m1", "y_pow_2", 0.5), ("m2", "v_pow_2", 0.5),
                                                ("full", "y_pow_2", 2.0), ("siegel", "y_pow_2", 2.0)])
    def test_laplacian(self, op, field, value):
        preset = "iI" if op == "siegel" else "jacobi-origin"
        code, out = run("laplacian", "--operator", op, "--field", field, "--preset", preset)
        assert code == 0 and out["value"] == pytest.approx(value, abs=1e-6)

    def test_curvature(self):
        out = run("curvature", "--preset", "iI")[1]
        assert out["gaussian"] == pytest.approx(-1.0, abs=1e-6) and out["convention"] == "trace-ricci"
        out = run("curvature", "--preset", "jacobi-origin", "--A", "2", "--B", "5")[1]
        assert out["scalar"] == pytest.approx(-1.5, abs=1e-4)

    def test_geodesic(self):
        out = run("geodesic", "integrate", "--preset", "special-geodesic", "--n", "2")[1]
        assert out["reference_error"] < 1e-8
        out = run("geodesic", "integrate", "--preset", "iI", "--velocity", "[0,1]", "--steps", "64", "--trajectory")[1]
        assert out["end"][1] == pytest.approx(math.e, abs=1e-6) and len(out["path"]["times"]) == 65
        out = run("geodesic", "shoot", "--preset", "i-2i")[1]
        assert out["length"] == pytest.approx(out["series_distance"], abs=1e-6)

    def test_kahler(self):
        out = run("kahler", "--preset", "jacobi-origin", "--A", "2", "--B", "5")[1]
        assert out["compatibility"] <= 1e-4 and out["domega"] <= 1e-4


class TestCheckAndReport:
    def test_check_and_report(self, tmp_path):
        code, out = run("check", "--suite", "group", "--samples", "3")
        assert code == 0 and out["passed"] and [c["name"] for c in out["checks"]] == ["group_laws"]
        f = tmp_path / "r.json"
        f.write_text(json.dumps(out))
        code2, out2 = run("check", "--suite", "volume", "--samples", "3", "--tol.volume_invariance=1e-300")
        assert code2 == 1 and not out2["passed"]
        g = tmp_path / "s.json"
        g.write_text(json.dumps(out2))
        code3, rep = run("report", str(f), str(g))
        assert code3 == 1 and [c["name"] for c in rep["checks"]] == ["group_laws", "volume_invariance"]
        assert run("report", str(f))[0] == 0

    def test_tolerance_override_spaced(self):
        code, out = run("check", "--suite", "group_laws", "--samples", "2", "--tol.group_laws", "0.5")
        assert code == 0 and out["checks"][0]["tolerance"] == 0.5

    def test_deterministic(self):
        a = run_command(["check", "--suite", "distance", "--samples", "4", "--seed", "7"])
        b = run_command(["check", "--suite", "distance", "--samples", "4", "--seed", "7"])
        assert a == b
        c = run_command(["check", "--suite", "distance", "--samples", "4", "--seed", "8"])
        assert c[1] != a[1]


class TestErrors:
    @pytest.mark.parametrize("argv", [
        ["distance", "--point0", "{bad", "--point1", "2i"],
        ["distance", "--point0", "i", "--point1", "2i", "--A", "2"],
        ["distance", "--point1", "2i"],
        ["check", "--suite", "nope"],
        ["check", "--tol.nope", "1e-3"],
        ["check", "--samples", "0"],
        ["check", "--tol.group_laws", "-1"],
        ["laplacian", "--field", "missing", "--preset", "jacobi-origin"],
        ["metric", "--point", '{"n":1,"X":{"rows":1,"cols":1,"re":[0]},"Y":{"rows":1,"cols":1,"re":[-1]}}'],
        ["frobnicate"],
    ])
    def test_usage_errors(self, argv, capsys):
        code, out = run_command(argv)
        assert code == 2 and out == ""
        assert capsys.readouterr().err.strip()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "sjlab", "distance", "--preset", "i-2i"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout) == {"rho": 0.69314718056}
    bad = subprocess.run([sys.executable, "-m", "sjlab", "distance", "--point0", "{x", "--point1", "i"],
                         capture_output=True, text=True, check=False)
    assert bad.returncode == 2 and "malformed JSON" in bad.stderr and bad.stdout == ""
