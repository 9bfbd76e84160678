import json
from pathlib import Path

import pytest

import noetherkit as nk
from noetherkit import algebra, cli

GOLDEN_DIR = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestTextReport:
    def test_galilei(self, capsys):
        code, out, err = run(capsys, str(nk.fixture_path("galilei")))
        assert code == 0
        assert "L[translation_1][boost_1] = M" in out
        assert "conservation residuals: 0, 0, 0, 0, 0, 0" in out
        assert err == ""

    def test_scale_all_zero(self, capsys):
        code, out, _ = run(capsys, str(nk.fixture_path("scale_free")))
        assert code == 0
        assert "all entries zero" in out
        assert "C[scale,translation_1]^translation_1 = 1/2" in out


class TestRejection:
    def test_not_a_symmetry_exits_1_with_residual(self, capsys):
        code, out, err = run(capsys, str(nk.fixture_path("not_a_symmetry")))
        assert code == 1
        assert out == ""
        assert "not a symmetry" in err
        assert "-q1*k" in err

    def test_missing_file(self, capsys):
        code, out, err = run(capsys, "no_such_file.sys")
        assert code == 1
        assert "rejected" in err

    def test_parse_error_carries_position(self, capsys, tmp_path):
        bad = tmp_path / "bad.sys"
        bad.write_text('system "x"\nparams { M > 0 }\ncoords { q1 }\n'
                       'lagrangian = M*zz\ngenerator "g" { delta { q1 = 1 } }\n')
        code, _, err = run(capsys, str(bad))
        assert code == 1
        assert "line 4" in err

    def test_unbound_parameter_in_numeric_mode(self, capsys):
        code, _, err = run(capsys, str(nk.fixture_path("magnetic")),
                           "--numeric", "--bind", "M=1")
        assert code == 1
        assert "unbound parameter" in err


class TestInternalErrors:
    def test_cross_check_failure_exits_2(self, capsys, monkeypatch):
        def broken(spec):
            raise algebra.CrossCheckError("forced")
        monkeypatch.setattr(algebra, "analyze", broken)
        code, _, err = run(capsys, str(nk.fixture_path("galilei")))
        assert code == 2
        assert "internal inconsistency" in err


class TestJsonReport:
    def test_deterministic_output(self, capsys):
        _, out1, _ = run(capsys, str(nk.fixture_path("magnetic")),
                         "--report", "json")
        _, out2, _ = run(capsys, str(nk.fixture_path("magnetic")),
                         "--report", "json")
        assert out1 == out2

    def test_expressions_reparse(self, capsys, magnetic):
        _, out, _ = run(capsys, str(nk.fixture_path("magnetic")),
                        "--report", "json")
        doc = json.loads(out)
        # rendered charges re-parse to the derived expressions
        rep = nk.analyze(magnetic)
        table = magnetic.table
        rendered = doc["generators"][0]["lambda"]
        src = ('system "echo"\nparams { M > 0, e > 0, c > 0, B > 0 }\n'
               'coords { q1, q2 }\nlagrangian = ' + rendered +
               '\ngenerator "g" { delta { q1 = 1 } }')
        echoed = nk.parse(src)
        assert echoed.lagrangian == rep.charges.surface_terms[0]

    def test_text_and_json_values_agree(self, capsys):
        _, text_out, _ = run(capsys, str(nk.fixture_path("galilei")))
        _, json_out, _ = run(capsys, str(nk.fixture_path("galilei")),
                             "--report", "json")
        doc = json.loads(json_out)
        for g in doc["generators"]:
            assert f"lambda = {g['lambda']}" in text_out
            assert f"charge = {g['charge']}" in text_out
        assert f"hessian det = {doc['hessian_det']}" in text_out

    @pytest.mark.parametrize("name", ["galilei", "magnetic", "scale_free"])
    def test_golden_reports(self, capsys, name):
        _, out, _ = run(capsys, str(nk.fixture_path(name)), "--report", "json")
        golden = (GOLDEN_DIR / f"{name}.json").read_text()
        assert out == golden


class TestNumericMode:
    def test_magnetic_numeric_passes(self, capsys):
        code, out, _ = run(capsys, str(nk.fixture_path("magnetic")),
                           "--numeric", "--dt", "1e-3", "--horizon", "2",
                           "--seed", "7", "--bind", "M=1,e=1,c=1,B=1",
                           "--report", "json")
        assert code == 0
        doc = json.loads(out)
        assert doc["numeric"]["pass"] is True
        assert doc["numeric"]["max_charge_drift"] <= 1e-8
        assert doc["numeric"]["max_flow_defect"] <= 1e-8

    def test_seed_determinism(self, capsys):
        args = (str(nk.fixture_path("magnetic")), "--numeric", "--horizon", "2",
                "--seed", "3", "--bind", "M=1,e=1,c=1,B=1", "--report", "json")
        _, out1, _ = run(capsys, *args)
        _, out2, _ = run(capsys, *args)
        assert out1 == out2

    def test_oscillator_numeric(self, capsys):
        code, out, _ = run(capsys, str(nk.fixture_path("oscillator")),
                           "--numeric", "--horizon", "2",
                           "--bind", "M=1,k=1", "--report", "json")
        assert code == 0
        assert json.loads(out)["numeric"]["pass"] is True
