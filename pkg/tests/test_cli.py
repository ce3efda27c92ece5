import json

import numpy as np
import pytest

from bifcc.cli import EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main
from bifcc.grids import read_pgm
from bifcc.manifest import RunManifest, sha256_of


def run(tmp_path, *argv, capsys=None):
    code = main([*argv, "--out", str(tmp_path), "--no-plot"])
    out = capsys.readouterr().out if capsys else None
    return code, out


def test_slice_locus_class(tmp_path, capsys):
    code, out = run(tmp_path, "slice", "--plane", "c-plane", "--fixed", "0,0",
                    "--region", "-2,2,-2,2", "--resolution", "65", "--field", "locus-class",
                    capsys=capsys)
    assert code == EXIT_OK
    g = read_pgm(tmp_path / "slice.pgm")
    j, i = g.index_of(0j)
    assert g.values[j, i] == 0
    side = json.loads((tmp_path / "slice.pgm.json").read_text())
    assert side["resolution"] == [65, 65]
    assert json.loads(out)["field"] == "locus-class"


def test_slice_tminus_density_has_mass(tmp_path, capsys):
    code, out = run(tmp_path, "slice", "--field", "Tminus-density", "--resolution", "96",
                    capsys=capsys)
    assert code == EXIT_OK
    assert json.loads(out)["total"] > 0.1


def test_slice_resolution_zero_is_usage_error(tmp_path):
    code, _ = run(tmp_path, "slice", "--resolution", "0")
    assert code == EXIT_USAGE
    assert not (tmp_path / "slice.csv").exists()
    assert json.loads((tmp_path / "slice.manifest.json").read_text())["status"] == "usage-error"


def test_bad_arguments_exit_two(tmp_path):
    assert main(["slice", "--region", "1,2,3"]) == EXIT_USAGE
    assert main(["misiurewicz", "--spec", "2,2,1,0", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["nonsense"]) == EXIT_USAGE


def test_numeric_failure_exit_three(tmp_path):
    # phi^- is undefined at the origin, so the leaf cannot start
    code, _ = run(tmp_path, "trace", "--from", "0,0", "--s-end", "2")
    assert code == EXIT_NUMERIC
    assert not (tmp_path / "trace.csv").exists()
    man = RunManifest.read(tmp_path / "trace.manifest.json")
    assert man.status == "numeric-failure" and man.outputs == {}


def test_trace(tmp_path, capsys):
    code, out = run(tmp_path, "trace", "--from", "10,10", "--constraint", "per-plus-1",
                    "--s-end", "2", capsys=capsys)
    assert code == EXIT_OK
    rows = np.loadtxt(tmp_path / "trace.csv", delimiter=",", skiprows=1)
    assert rows.shape == (20, 8)
    assert np.all(rows[:, 6:] < 1e-6)


def test_misiurewicz(tmp_path):
    code, _ = run(tmp_path, "misiurewicz", "--spec", "2,1,2,1")
    assert code == EXIT_OK
    data = json.loads((tmp_path / "misiurewicz.json").read_text())
    assert any(abs(p["c"][0] - 1) < 1e-8 and abs(p["v"][0] + 2) < 1e-8 and p["misiurewicz"]
               for p in data["points"])


def test_equidist(tmp_path, capsys):
    code, out = run(tmp_path, "equidist", "--sign", "plus", "--n", "8", "--at", "10,0",
                    capsys=capsys)
    assert code == EXIT_OK
    assert abs(json.loads(out)["value"] - 0.8446) < 1e-3


def test_transversal(tmp_path, capsys):
    code, out = run(tmp_path, "transversal", "--c0", "1000", "--resolution", "16",
                    "--measure-resolution", "32", capsys=capsys)
    assert code == EXIT_OK
    info = json.loads((tmp_path / "transversal.json").read_text())
    assert info["success_rate"] == 1.0
    assert info["measure"]["total"] > 0


def test_negative_region_without_equals(tmp_path):
    code, _ = run(tmp_path, "slice", "--region", "-1,-0.5,-0.25,0.25", "--resolution", "16",
                  "--field", "Gplus")
    assert code == EXIT_OK
    side = json.loads((tmp_path / "slice.pgm.json").read_text())
    assert side["region"] == [-1, -0.5, -0.25, 0.25]


def test_dry_run_writes_nothing(tmp_path, capsys):
    out_dir = tmp_path / "plan"
    code = main(["slice", "--dry-run", "--out", str(out_dir)])
    assert code == EXIT_OK
    plan = json.loads(capsys.readouterr().out)
    assert str(out_dir / "slice.manifest.json") in plan["outputs"]
    assert not out_dir.exists()


def test_manifest_digests_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    argv = ["equidist", "--sign", "minus", "--n", "6", "--at", "3,1"]
    for d in (a, b):
        assert main([*argv, "--out", str(d)]) == EXIT_OK
        assert main(["slice", "--resolution", "24", "--field", "Tplus-density", "--out", str(d),
                     "--no-plot"]) == EXIT_OK
    for name in ("equidist.json", "equidist.png", "slice.csv", "slice.pgm", "slice.pgm.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    man = RunManifest.read(a / "equidist.manifest.json")
    assert man.command[:2] == ["bifcc", "equidist"]
    assert man.outputs["equidist.json"] == sha256_of(a / "equidist.json")
    assert all(man.verify_outputs(a).values())
    assert "green_tol" in man.tolerances
    (a / "equidist.json").write_text("{}")
    assert man.verify_outputs(a)["equidist.json"] is False


def test_version(capsys):
    with pytest.raises(SystemExit):
        from bifcc.cli import build_parser
        build_parser().parse_args(["--version"])
    assert "bifcc" in capsys.readouterr().out
