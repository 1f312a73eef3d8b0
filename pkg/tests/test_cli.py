import json
import subprocess
import sys

import pytest

from cesaro_trees.cli import main


@pytest.fixture
def spec_file(tmp_path):
    def write(**data):
        p = tmp_path / f"{data['kind']}_{len(list(tmp_path.iterdir()))}.json"
        p.write_text(json.dumps(data))
        return str(p)
    return write


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_tree_stats_path(spec_file, capsys):
    code, out, _ = run(["tree-stats", "--spec", spec_file(kind="path", truncate_depth=5), "--depth", "100"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["schema_version"] == 1
    assert doc["metrics"]["width"] == 1 and doc["metrics"]["branching_index"] == 0
    assert set(doc["m_alpha"]) == {"0.0", "0.5", "1.0", "2.0"}


def test_tree_stats_widening(spec_file, capsys):
    code, out, _ = run(["tree-stats", "--spec", spec_file(kind="widening", truncate_depth=3), "--depth", "1000"],
                       capsys)
    m1 = json.loads(out)["m_alpha"]["1.0"]
    assert code == 0
    assert m1["sup_j_ge_1"] < 1
    assert m1["sup"] == 1.0


def test_missing_file(capsys):
    code, out, err = run(["tree-stats", "--spec", "/nonexistent/x.json"], capsys)
    assert code == 3 and out == "" and "I/O" in err


def test_malformed(spec_file, capsys):
    code, _, err = run(["norm", "--spec", spec_file(kind="kary_root", truncate_depth=3)], capsys)
    assert code == 2 and "MalformedSpec" in err


def test_norm(spec_file, capsys):
    code, out, _ = run(["norm", "--spec", spec_file(kind="kary_root", k=4, truncate_depth=20)], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["report"]["upper_bound"] == 4.0
    code, out, _ = run(["norm", "--spec", spec_file(kind="kary_root", k=5, truncate_depth=20)], capsys)
    doc = json.loads(out)
    assert doc["infinite_tree_certificates"][0][1] == pytest.approx(2.0554, abs=1e-4)


def test_norm_path_4096(spec_file, capsys):
    code, out, _ = run(["norm", "--spec", spec_file(kind="path", truncate_depth=4096)], capsys)
    sigma = json.loads(out)["report"]["section_norm"]
    assert code == 0 and sigma <= 2.0


def test_norm_no_convergence(spec_file, capsys, monkeypatch):
    import cesaro_trees.cli as cli
    from cesaro_trees.errors import NoConvergence

    def stuck(*args, **kwargs):
        raise NoConvergence(7)

    monkeypatch.setattr(cli, "section_norm", stuck)
    code, _, err = run(["norm", "--spec", spec_file(kind="path", truncate_depth=4)], capsys)
    assert code == 4 and err


def test_apply_and_adjoint(spec_file, tmp_path, capsys):
    spec = spec_file(kind="path", truncate_depth=3)
    code, out, _ = run(["apply", "--spec", spec], capsys)
    assert json.loads(out)["result"] == [[1.0, 0.0], [0.5, 0.0], [1 / 3, 0.0], [0.25, 0.0]]
    vec = tmp_path / "v.json"
    vec.write_text(json.dumps([[0, 0], [0, 0], [0, 0], [1, 0]]))
    code, out, _ = run(["adjoint", "--spec", spec, "--vector", str(vec)], capsys)
    assert json.loads(out)["result"] == [[0.25, 0.0]] * 4
    code, out, _ = run(["apply", "--spec", spec, "--dense"], capsys)
    assert out.splitlines()[2] == "1,0.5,0.5,0.0,0.0"


def test_eigvec(spec_file, tmp_path, capsys):
    spec = spec_file(kind="path", truncate_depth=64)
    code, out, _ = run(["eigvec", "--spec", spec, "--lambda", "0.5,0"], capsys)
    assert code == 0 and json.loads(out)["certificate"]["residual"] == 0.0
    grid = tmp_path / "l.csv"
    grid.write_text("re,im\n1,0\n3.5,0\n")
    code, out, _ = run(["eigvec", "--spec", spec, "--lambdas", str(grid), "--format", "csv"], capsys)
    lines = out.splitlines()
    assert lines[1].startswith("1.0,0.0,inside") and lines[2].startswith("3.5,0.0,outside")
    code, _, err = run(["eigvec", "--spec", spec, "--lambda", "2.5"], capsys)
    assert code == 2 and "OutsideDisc" in err


def test_hypo(spec_file, capsys):
    code, out, _ = run(["hypo", "--spec", spec_file(kind="kary_root", k=2, truncate_depth=2)], capsys)
    assert json.loads(out)["gap"]["mid"] == pytest.approx(-0.2101318663, abs=1e-8)
    code, _, err = run(["hypo", "--spec", spec_file(kind="path", truncate_depth=2)], capsys)
    assert code == 2


def test_pointspec(spec_file, capsys):
    code, out, _ = run(["pointspec", "--spec", spec_file(kind="path", truncate_depth=70), "--seed", "2"], capsys)
    doc = json.loads(out)
    assert doc["lambda"] == "1/3" and doc["coefficients"][:4] == ["1", "3", "6", "10"]
    code, out, _ = run(["pointspec", "--spec", spec_file(kind="comb", truncate_depth=8), "--seed", "6"], capsys)
    doc = json.loads(out)
    assert doc["leaf_encountered"] and doc["eigenvalue"] == "1/4"


def test_decomp(spec_file, capsys):
    code, out, _ = run(["decomp", "--spec", spec_file(kind="kary_root", k=3, truncate_depth=40)], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["decomposition"]["d"] == 3
    assert max(doc["perturbation_identity_max_error"]) <= 1e-12
    code, _, _ = run(["decomp", "--spec", spec_file(kind="comb", truncate_depth=8)], capsys)
    assert code == 2


def test_demo_unbounded(capsys, tmp_path):
    out_file = tmp_path / "demo.json"
    code, out, _ = run(["demo-unbounded", "--out", str(out_file)], capsys)
    doc = json.loads(out_file.read_text())
    assert code == 0 and out == ""
    assert doc["strictly_increasing"] and doc["S"][0] > 6.58
    assert doc["S"][-1] > 5 * doc["S"][1]


def test_reproduce(capsys):
    code, out, _ = run(["reproduce"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["all_pass"]
    claims = [r["claim"] for r in doc["rows"]]
    assert "hypo-gap k_T=1" in claims


def test_deterministic_output(spec_file):
    spec = spec_file(kind="comb", truncate_depth=30)
    cmd = [sys.executable, "-m", "cesaro_trees.cli", "norm", "--spec", spec]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and json.loads(a)["schema_version"] == 1
