from __future__ import annotations

import io
import json
import subprocess
import sys

import pytest

from tspan import example_path
from tspan.cli import run


def data(name: str) -> str:
    return str(example_path(name))


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    report = json.loads(out.getvalue()) if out.getvalue() else None
    return code, report, err.getvalue()


class TestCheck:
    def test_five_point_ext4pt_ok(self):
        code, report, _ = call("check", data("five_point.json"), "--kind", "ext4pt")
        assert code == 0 and report["ok"]

    def test_octagon_violation(self):
        code, report, _ = call("check", data("octagon.json"), "--kind", "ext4pt")
        cert = report["result"]["certificate"]
        assert code == 1
        assert cert["witness"] == ["w", "x", "z", "y"]
        assert (cert["lhs"], cert["rhs"]) == ("6", "3")

    def test_certificate_rechecks_from_witness(self):
        _, report, _ = call("check", data("five_point.json"), "--kind", "metric")
        witness = ",".join(report["result"]["certificate"]["witness"])
        code, again, _ = call("check", data("five_point.json"), "--kind", "metric", "--witness", witness)
        assert code == 1
        assert again["result"]["certificate"] == report["result"]["certificate"]

    def test_witness_that_holds(self):
        code, report, _ = call("check", data("five_point.json"), "--kind", "metric", "--witness", "x,y,z")
        assert code == 0 and report["result"]["certificate"]["ok"]

    def test_four_point_on_five_point(self):
        code, _, _ = call("check", data("five_point.json"), "--kind", "4pt")
        assert code in (0, 1)

    def test_diversity_kind(self):
        code, report, _ = call("check", data("four_four_five.json"), "--kind", "diversity")
        assert code == 0 and report["result"]["certificate"]["ok"]

    def test_invalid_diversity(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text('{"elements": ["a", "b", "c"], "delta": {"a,b": 1, "a,c": 1, "b,c": 1, "a,b,c": 5}}')
        code, report, _ = call("check", str(p), "--kind", "diversity")
        assert code == 1 and not report["result"]["certificate"]["ok"]

    def test_malformed_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text('{"labels": ["a"], "matrix": [[0,]]}')
        code, report, err = call("check", str(p), "--kind", "metric")
        assert code == 2 and report is None
        assert "line 1" in err

    def test_float_input(self, tmp_path):
        p = tmp_path / "f.json"
        p.write_text('{"labels": ["a", "b"], "matrix": [[0, 0.5], [0.5, 0]]}')
        code, _, err = call("check", str(p), "--kind", "metric")
        assert code == 2 and "floating point" in err

    def test_bad_flag(self):
        code, _, _ = call("check", data("five_point.json"), "--kind", "nope")
        assert code == 2


class TestTightspan:
    def test_geodesic(self):
        code, report, _ = call("tightspan", "geodesic", data("three_point.json"), "--pair", "x,y", "--t", "1")
        assert code == 0 and report["result"]["vector"] == ["1", "2", "0"]

    @pytest.mark.parametrize("method", ["lp", "contraction"])
    def test_retract(self, method):
        code, report, _ = call(
            "tightspan", "retract", data("strict_inclusion.json"), "--point", "0,1,3,2", "--method", method
        )
        assert code == 0
        assert report["result"]["vector"] == ["0", "1", "3", "0"]
        assert report["result"]["exact"]

    def test_member_outside_pd(self):
        code, report, _ = call("tightspan", "member", data("three_point.json"), "--point", "0,0,0")
        assert code == 1 and report["result"]["in_Pd"] is False

    def test_member_inside(self):
        code, report, _ = call("tightspan", "member", data("three_point.json"), "--point", "1,2,0")
        assert code == 0 and report["result"]["in_Td"] is True

    def test_kappa_gates(self):
        code, report, _ = call("tightspan", "kappa", data("five_point.json"), "--label", "v")
        gates = report["result"]["gates"]
        assert code == 0 and set(gates) == {"x", "y", "w"}
        assert all(g["v"] == "0" for g in gates.values())

    def test_dist_pair(self):
        code, report, _ = call("tightspan", "dist", data("five_point.json"), "--pair", "x,y")
        assert code == 0 and report["result"]["distance"] == "9"

    def test_dist_points(self):
        code, report, _ = call(
            "tightspan", "dist", data("three_point.json"), "--point", "0,3,1", "--other", "1,2,0"
        )
        assert report["result"] == {"distance": "1", "distance_by_formula": "1"}

    def test_missing_argument(self):
        code, _, err = call("tightspan", "geodesic", data("three_point.json"), "--pair", "x,y")
        assert code == 2 and "--t" in err

    def test_wrong_method(self):
        code, _, _ = call("tightspan", "member", data("three_point.json"), "--point", "1,2,0", "--method", "lp")
        assert code == 2

    def test_precondition_failure(self):
        code, report, _ = call("tightspan", "geodesic", data("octagon.json"), "--pair", "w,y", "--t", "1")
        assert code == 1 and "certificate" in report["result"]


class TestSubtree:
    def test_five_point(self, tmp_path):
        out = tmp_path / "tree.json"
        code, report, _ = call("subtree", data("five_point.json"), "--out", str(out))
        assert code == 0 and report["result"]["verification"]["ok"]
        tree = json.loads(out.read_text())
        assert set(tree["subtrees"]) == {"x", "y", "z", "v", "w"}

    def test_octagon(self):
        code, report, _ = call("subtree", data("octagon.json"))
        assert code == 1 and report["result"]["certificate"]["kind"] == "ext-fourpoint-violation"

    def test_two_points(self):
        code, report, _ = call("subtree", data("two_point.txt"))
        assert code == 0
        assert report["result"]["representation"]["edges"] == [[0, 1, "5/2"]]


class TestDominate:
    def test_any(self):
        code, report, _ = call("dominate", "any", data("five_point.json"))
        assert code == 0 and report["result"]["metric"]["matrix"][0][1] == "10"

    def test_minimize(self):
        code, report, _ = call("dominate", "minimize", data("strict_inclusion.json"))
        assert code == 0 and report["result"]["minimal"]
        assert report["result"]["metric"]["matrix"][0][1] == "0"

    def test_verify(self):
        code, report, _ = call(
            "dominate", "verify", data("strict_inclusion.json"), "--metric", data("strict_inclusion_rho.json")
        )
        assert code == 0 and report["result"]["minimal"] is True

    def test_verify_not_minimal(self):
        code, report, _ = call("dominate", "verify", data("five_point.json"))
        assert code == 1 and "smaller" in report["result"]

    def test_pin_already_pinned(self):
        code, report, _ = call(
            "dominate", "pin", data("strict_inclusion.json"), "--metric", data("strict_inclusion_rho.json"),
            "--pair", "x,y",
        )
        assert code == 0 and report["result"]["unchanged"]

    def test_embed(self):
        code, report, _ = call(
            "dominate", "embed", data("strict_inclusion.json"), "--metric", data("strict_inclusion_rho.json")
        )
        assert code == 0 and report["result"]["exact"]
        assert report["result"]["points"]["w"] == {"w": "0", "x": "1", "y": "3", "z": "0"}


class TestDiversity:
    def test_arboreal(self):
        code, report, _ = call("diversity", "arboreal", data("four_four_five.json"))
        assert code == 0 and report["result"]["arboreal"]

    def test_phylo(self):
        code, report, _ = call("diversity", "phylo", data("four_four_five.json"))
        r = report["result"]
        assert code == 1 and r["phylogenetic"] is False
        assert r["witness"] == ["a", "b", "c"] and (r["delta_value"], r["hull_value"]) == ("5", "6")

    @pytest.mark.parametrize("method", ["lp", "vertices"])
    def test_nice(self, method):
        code, report, _ = call("diversity", "nice", data("size_minus_one.json"), "--method", method)
        assert code == 1 and report["result"]["nice"] is False

    def test_ddelta(self):
        code, report, _ = call("diversity", "ddelta", data("four_four_five.json"))
        D = report["result"]["d_delta"]
        i, j = D["labels"].index("{a,b}"), D["labels"].index("{c}")
        assert D["matrix"][i][j] == "1"

    def test_embed(self):
        code, report, _ = call("diversity", "embed", data("size_minus_one.json"))
        assert code == 0 and set(report["result"]["points"]) == {"x", "y", "z"}


class TestFuzz:
    def test_empty(self):
        code, report, _ = call("fuzz", "--count", "0", "--mode", "subtree")
        assert code == 0
        assert report["result"]["failures"] == [] and report["result"]["count"] == 0

    @pytest.mark.parametrize("mode", ["subtree", "metric", "diversity"])
    def test_modes(self, mode):
        code, report, _ = call("fuzz", "--count", "25", "--seed", "3", "--mode", mode)
        assert code == 0 and report["result"]["passed"] == 25

    def test_negative_count(self):
        code, _, _ = call("fuzz", "--count", "-1", "--mode", "metric")
        assert code == 2


class TestDeterminism:
    def test_identical_output(self):
        argv = ["subtree", data("five_point.json")]
        a, b = io.StringIO(), io.StringIO()
        run(argv, stdout=a)
        run(argv, stdout=b)
        assert a.getvalue() == b.getvalue()

    def test_timing_is_opt_in(self):
        _, report, _ = call("check", data("five_point.json"), "--kind", "ext4pt")
        assert "seconds" not in report
        _, report, _ = call("--timing", "check", data("five_point.json"), "--kind", "ext4pt")
        assert float(report["seconds"]) >= 0

    def test_console_script(self):
        proc = subprocess.run(
            [sys.executable, "-m", "tspan.cli", "check", data("octagon.json"), "--kind", "ext4pt"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 1
        assert json.loads(proc.stdout)["result"]["certificate"]["lhs"] == "6"
