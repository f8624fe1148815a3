import json
import subprocess
import sys

import pytest

from radialrestore import fixture_path
from radialrestore.cli import EXIT_INFEASIBLE, EXIT_INVALID, EXIT_LIMIT, EXIT_OK, main


def case(name):
    return str(fixture_path(name))


def test_solve_ring(tmp_path):
    out = tmp_path / "ring.json"
    assert main(["solve", "--case", case("ring4"), "--out", str(out)]) == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["cut_lines"] == [2]
    assert doc["closed_lines"] == [1, 3, 4]
    assert len(doc["trace"]) == 1
    assert doc["dispatch"]["status"] == "optimal"
    assert set(doc["timing_ms"]) >= {"build", "solve", "graph", "total"}


def test_solve_tree_to_stdout(capsys):
    assert main(["solve", "--case", case("tree5")]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["cut_lines"] == [] and doc["trace"] == []


def test_malformed_file_names_field(tmp_path, capsys):
    bad = json.loads(fixture_path("ring4").read_text())
    del bad["lines"][1]["r"]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    assert main(["solve", "--case", str(path)]) == EXIT_INVALID
    assert "lines[1].r" in capsys.readouterr().err


def test_missing_file(capsys):
    assert main(["info", "--case", "/nonexistent/case.json"]) == EXIT_INVALID


def test_invalid_json(tmp_path):
    path = tmp_path / "x.json"
    path.write_text("{")
    assert main(["validate", "--case", str(path)]) == EXIT_INVALID


def test_semantic_validation(tmp_path, capsys):
    doc = json.loads(fixture_path("ring4").read_text())
    doc["lines"][0]["r"] = 0.0
    path = tmp_path / "r0.json"
    path.write_text(json.dumps(doc))
    assert main(["validate", "--case", str(path)]) == EXIT_INVALID
    assert "R_ij" in capsys.readouterr().err


def test_bad_flags():
    assert main(["solve", "--case", case("ring4"), "--tol", "0"]) == EXIT_INVALID
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_infeasible_exit(tmp_path):
    doc = json.loads(fixture_path("ring4").read_text())
    doc["storages"] = [{"bus": 3, "soc_init": 0.5, "soc_min": 0.0, "soc_max": 1.0, "rho": -0.1,
                        "p_max": 5.0, "q_max": 0.0, "p_min": 3.0}]
    path = tmp_path / "inf.json"
    path.write_text(json.dumps(doc))
    assert main(["solve", "--case", str(path)]) == EXIT_INFEASIBLE


def test_oracle_limit_exit(tmp_path):
    assert main(["oracle", "--case", case("mesh12"), "--tree-limit", "3",
                 "--out", str(tmp_path / "o.json")]) == EXIT_LIMIT


def test_oracle_ring(tmp_path):
    out = tmp_path / "o.json"
    assert main(["oracle", "--case", case("ring4"), "--out", str(out)]) == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["trees_evaluated"] == 4
    assert doc["cut_lines"] == [2]


@pytest.mark.parametrize("name, meshes", [("synth32", 5), ("synth123", 2), ("tree5", 0), ("ring4", 1)])
def test_info_mesh_count(name, meshes, capsys):
    assert main(["info", "--case", case(name)]) == EXIT_OK
    info = dict(line.split(None, 1) for line in capsys.readouterr().out.splitlines())
    assert int(info["meshes"]) == meshes


def test_bench_ih_only(tmp_path):
    out = tmp_path / "b"
    assert main(["bench", "--case", case("ring4"), "--scenarios", "3", "--methods", "ih",
                 "--out", str(out)]) == EXIT_OK
    assert (out / "rows.csv").read_text().splitlines()[0] == "scenario,method,f,n_load,p_loss,cut_lines,time_ms,status"


def test_bench_unscored_still_succeeds(tmp_path):
    out = tmp_path / "b"
    assert main(["bench", "--case", case("mesh12"), "--scenarios", "2", "--tree-limit", "2",
                 "--out", str(out)]) == EXIT_OK
    assert "unscored" in (out / "rows.csv").read_text()


def test_bench_bad_spec(tmp_path):
    assert main(["bench", "--case", case("ring4"), "--critical", "9", "--out", str(tmp_path)]) == EXIT_INVALID
    assert main(["bench", "--case", case("ring4"), "--methods", "misocp", "--out", str(tmp_path)]) == EXIT_INVALID


def test_bench_env_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("RADIALRESTORE_OUT", str(tmp_path / "env"))
    assert main(["bench", "--case", case("ring4"), "--scenarios", "1", "--methods", "ih"]) == EXIT_OK
    assert (tmp_path / "env" / "summary.json").exists()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "radialrestore", "info", "--case", case("ring4")],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "meshes" in proc.stdout
