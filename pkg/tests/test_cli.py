"""Command line behaviour: exit codes, output formats, error handling."""

import json
import shutil
import subprocess

import pytest

from cfmcheck.cli import main

SECURE = "high h\nC := h.l.C + l.C\nmain := C\n"
INSECURE = "high h\nC := h.B\nB := l.B\nmain := C | B\n"


@pytest.fixture
def secure_path(tmp_path):
    path = tmp_path / "secure.cfm"
    path.write_text(SECURE)
    return str(path)


@pytest.fixture
def insecure_path(tmp_path):
    path = tmp_path / "insecure.cfm"
    path.write_text(INSECURE)
    return str(path)


class TestNetCommand:
    def test_text(self, secure_path, capsys):
        assert main(["net", secure_path]) == 0
        out = capsys.readouterr().out
        assert "places (2):" in out
        assert "l.C" in out
        assert "[1 token]" in out
        assert "C --h--> l.C" in out

    def test_json(self, secure_path, capsys):
        assert main(["net", "--format", "json", secure_path]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["places"] == ["C", "l.C"]
        assert data["initial"] == [{"place": 0, "count": 1}]

    def test_dot(self, secure_path, capsys):
        assert main(["net", "--format", "dot", secure_path]) == 0
        out = capsys.readouterr().out
        assert out.startswith("digraph")
        assert out.rstrip().endswith("}")


class TestLtsAndReach:
    def test_lts_text(self, insecure_path, capsys):
        assert main(["lts", insecure_path]) == 0
        out = capsys.readouterr().out
        assert "[initial]" in out
        assert "--h-->" in out

    def test_lts_json(self, insecure_path, capsys):
        assert main(["lts", "--format", "json", insecure_path]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["roots"] == [0]
        assert {"from": 0, "label": "h", "to": 1} in data["edges"] or any(
            e["label"] == "h" for e in data["edges"])

    def test_reach_text(self, insecure_path, capsys):
        assert main(["reach", insecure_path]) == 0
        out = capsys.readouterr().out
        assert "reachable markings (2):" in out
        assert "2*B" in out

    def test_reach_json(self, insecure_path, capsys):
        assert main(["reach", "--format", "json", insecure_path]) == 0
        data = json.loads(capsys.readouterr().out)
        assert [["B", 2]] in data["markings"]

    def test_reach_limit(self, tmp_path, capsys):
        path = tmp_path / "wide.cfm"
        path.write_text("main := " + " | ".join(["a.b.c.0"] * 12) + "\n")
        assert main(["reach", "--max-states", "40", str(path)]) == 2
        assert "error:" in capsys.readouterr().err


class TestEquivCommand:
    def test_equivalent(self, secure_path, capsys):
        code = main(["equiv", secure_path, "--left", "tau.l.0",
                     "--right", "l.0"])
        assert code == 0
        assert "are equivalent" in capsys.readouterr().out

    def test_rooted_flag_tightens(self, secure_path, capsys):
        code = main(["equiv", secure_path, "--left", "tau.l.0",
                     "--right", "l.0", "--rooted"])
        assert code == 1
        out = capsys.readouterr().out
        assert "not equivalent" in out

    def test_detail_on_difference(self, secure_path, capsys):
        code = main(["equiv", secure_path, "--left", "l.0",
                     "--right", "l.l.0"])
        assert code == 1
        data = capsys.readouterr().out
        assert "not equivalent" in data

    def test_json(self, secure_path, capsys):
        code = main(["equiv", "--format", "json", secure_path,
                     "--left", "C | l.0", "--right", "l.0 | C"])
        assert code == 0
        data = json.loads(capsys.readouterr().out)
        assert data["equivalent"] is True
        assert data["rooted"] is False

    def test_spec_constants_usable(self, insecure_path, capsys):
        code = main(["equiv", insecure_path, "--left", "C | B",
                     "--right", "B | C"])
        assert code == 0


class TestDniCommand:
    def test_secure_exit(self, secure_path, capsys):
        assert main(["dni", secure_path]) == 0
        out = capsys.readouterr().out
        for method in ("definitional", "structural", "compositional", "rooted"):
            assert f"{method}: secure" in out

    def test_insecure_exit(self, insecure_path, capsys):
        assert main(["dni", insecure_path]) == 1
        out = capsys.readouterr().out
        assert "definitional: insecure" in out
        assert "--h-->" in out

    def test_single_method(self, insecure_path, capsys):
        assert main(["dni", "--method", "struct", insecure_path]) == 1
        data = capsys.readouterr().out
        assert data.count("insecure") == 1

    def test_sbndc_disagrees_here(self, insecure_path, capsys):
        assert main(["dni", "--sbndc", insecure_path]) == 1
        out = capsys.readouterr().out
        assert "sbndc: secure" in out

    def test_json(self, insecure_path, capsys):
        assert main(["dni", "--format", "json", insecure_path]) == 1
        data = json.loads(capsys.readouterr().out)
        assert [v["method"] for v in data] == [
            "definitional", "structural", "compositional", "rooted"]
        assert all(v["secure"] is False for v in data)
        assert data[0]["witnesses"]

    def test_deterministic(self, insecure_path, capsys):
        def strip(verdicts):
            return [{k: v for k, v in verdict.items() if k != "stats"}
                    for verdict in verdicts]

        main(["dni", "--format", "json", insecure_path])
        first = json.loads(capsys.readouterr().out)
        main(["--seed", "7", "dni", "--format", "json", insecure_path])
        second = json.loads(capsys.readouterr().out)
        assert strip(first) == strip(second)


class TestTypeCommand:
    def test_typed(self, secure_path, capsys):
        assert main(["type", secure_path]) == 0
        assert "typed" in capsys.readouterr().out

    def test_untyped(self, tmp_path, capsys):
        path = tmp_path / "untyped.cfm"
        path.write_text("high h\nmain := h.0\n")
        assert main(["type", str(path)]) == 1
        assert "untyp" in capsys.readouterr().out

    def test_json_derivation(self, secure_path, capsys):
        assert main(["type", "--format", "json", secure_path]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["typed"] is True
        assert data["derivation"]["rule"]


class TestErrors:
    def test_missing_file(self, capsys):
        assert main(["net", "/nonexistent/spec.cfm"]) == 2
        assert "error:" in capsys.readouterr().err

    def test_parse_error(self, tmp_path, capsys):
        path = tmp_path / "broken.cfm"
        path.write_text("main := a.\n")
        assert main(["net", str(path)]) == 2
        err = capsys.readouterr().err
        assert "error: 1:" in err

    def test_bad_method(self, secure_path, capsys):
        assert main(["dni", "--method", "bogus", secure_path]) == 2

    def test_help(self, capsys):
        assert main(["--help"]) == 0
        assert "cfmcheck" in capsys.readouterr().out


class TestConsoleScript:
    def test_installed_entry_point(self, secure_path):
        exe = shutil.which("cfmcheck")
        if exe is None:
            pytest.skip("console script not installed")
        done = subprocess.run([exe, "dni", secure_path],
                              capture_output=True, text=True)
        assert done.returncode == 0
        assert "rooted: secure" in done.stdout
