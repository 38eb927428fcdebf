import json
import math
import os

import pytest

import app


ALPHA = (math.sqrt(5.0) - 1.0) / 2.0
BETA = math.sqrt(3.0)

LATTICE = {"special_form": {"alpha": [ALPHA], "beta": [BETA]}}
KESTEN = {"box": {"lo": [0.0], "hi": [ALPHA]}}
PARTNER = {"box": {"lo": [1.0 - ALPHA], "hi": [1.0]}}
UNIT = {"box": {"lo": [0.0], "hi": [1.0]}}


def _swap(delta: float) -> dict:
    return {
        "pieces": [
            {"window": {"box": {"lo": [0.0], "hi": [0.5]}}, "vector": [0.5 + delta]},
            {"window": {"box": {"lo": [0.5], "hi": [1.0]}}, "vector": [-0.5]},
        ]
    }


def _load(out, name):
    with open(os.path.join(out, name), encoding="utf-8") as f:
        return json.load(f)


def _read(out, name):
    with open(os.path.join(out, name), "rb") as f:
        return f.read()


@pytest.fixture
def inputs(write_json):
    return {
        "lattice": write_json("lattice.json", LATTICE),
        "window": write_json("window.json", KESTEN),
        "partner": write_json("partner.json", PARTNER),
        "unit": write_json("unit.json", UNIT),
    }


# --- gen -------------------------------------------------------------------
def test_gen_writes_patch_and_manifest(inputs, tmp_path):
    out = str(tmp_path / "gen")
    code = app.main(["gen", "--lattice", inputs["lattice"], "--window", inputs["window"],
                     "--nmax", "200", "--out", out])
    assert code == app.EXIT_OK
    header = _read(out, "patch.csv").decode("utf-8").splitlines()[0]
    assert header == "n,m_1,p1,p2_1,flag_boundary"
    manifest = _load(out, "manifest.json")
    assert manifest["command"] == "gen"
    assert manifest["outputs"] == ["patch.csv", "patch.json"]
    assert set(manifest["inputs"]) == {"lattice", "window"}
    meta = _load(out, "patch.json")
    assert meta["points_inclusive"] - meta["points_exclusive"] == meta["flagged"] == 1


def test_gen_is_deterministic(inputs, tmp_path):
    outs = [str(tmp_path / name) for name in ("first", "second")]
    for out in outs:
        assert app.main(["gen", "--lattice", inputs["lattice"], "--window", inputs["window"],
                         "--nmax", "300", "--out", out]) == app.EXIT_OK
    for name in ("patch.csv", "patch.json", "manifest.json"):
        assert _read(outs[0], name) == _read(outs[1], name)


# --- Usage Errors ----------------------------------------------------------
def test_missing_input_file_is_a_usage_error(inputs, tmp_path, capsys):
    code = app.main(["gen", "--lattice", str(tmp_path / "nope.json"), "--window", inputs["window"],
                     "--out", str(tmp_path / "out")])
    assert code == app.EXIT_USAGE
    assert "error:" in capsys.readouterr().err


def test_missing_required_flag_exits(tmp_path):
    with pytest.raises(SystemExit) as exc:
        app.main(["orbit", "--out", str(tmp_path)])
    assert exc.value.code == 2


# --- Verdict Commands ------------------------------------------------------
def test_hall_reports_pigeonhole_witness(write_json, tmp_path):
    instance = write_json("instance.json", {"left": [0, 2], "right": [1], "F": [1, -1]})
    out = str(tmp_path / "hall")
    assert app.main(["hall", "--instance", instance, "--out", out]) == app.EXIT_FAIL
    verdict = _load(out, "hall.json")
    assert verdict["holds"] is False
    assert verdict["witness"] == [0, 1]
    assert verdict["neighbors"] == [0]


def test_equi_verify_exit_follows_verdict(inputs, write_json, tmp_path):
    good = write_json("swap.json", _swap(0.0))
    bad = write_json("perturbed.json", _swap(0.01))
    common = ["--window", inputs["unit"], "--window2", inputs["unit"], "--samples", "20000"]
    out = str(tmp_path / "good")
    assert app.main(["equi-verify", "--decomposition", good, "--out", out] + common) == app.EXIT_OK
    assert _load(out, "partition.json")["verdict"] == "PASS"
    out = str(tmp_path / "bad")
    assert app.main(["equi-verify", "--decomposition", bad, "--out", out] + common) == app.EXIT_FAIL
    assert _load(out, "partition.json")["verdict"] == "FAIL"


def test_brs_with_report(inputs, tmp_path):
    out = str(tmp_path / "brs")
    code = app.main(["brs", "--lattice", inputs["lattice"], "--window", inputs["window"],
                     "--nmax", "5000", "--split", "1000", "--pdf", "--out", out])
    assert code == app.EXIT_OK
    assert _load(out, "brs.json")["evidence"] == "bounded_evidence"
    assert os.path.exists(os.path.join(out, "report.pdf")) or os.path.exists(os.path.join(out, "report.txt"))
    assert _read(out, "profile.csv").decode("utf-8").startswith("N,D,running_max\n")


def test_bde_binary_search(inputs, tmp_path):
    out = str(tmp_path / "bde")
    code = app.main(["bde", "--lattice", inputs["lattice"], "--window", inputs["window"],
                     "--nmax", "300", "--K", "10", "--binary-search-K", "--out", out])
    assert code == app.EXIT_OK
    summary = _load(out, "bde.json")
    assert summary["deficiency"] == 0
    assert 0 < summary["minimal_K"] <= 10
    assert summary["max_displacement"] <= summary["minimal_K"]


def test_special_form_of_general_basis(write_json, tmp_path):
    lattice = write_json("basis.json", {
        "m": 1, "n": 1, "basis": [[1.0, 1.0], [math.sqrt(3.0), math.sqrt(2.0) - 1.0]],
    })
    out = str(tmp_path / "sf")
    assert app.main(["special-form", "--lattice", lattice, "--out", out]) == app.EXIT_OK
    payload = _load(out, "special_form.json")
    assert payload["certified"] is True
    assert payload["lattice"]["special_form"]["alpha"][0] == pytest.approx(math.sqrt(2.0) - 1.0)


def test_special_form_refuses_rational_basis(write_json, tmp_path):
    lattice = write_json("basis.json", {"m": 1, "n": 1, "basis": [[1.0, 1.0], [2.0, 0.5]]})
    out = str(tmp_path / "sf")
    assert app.main(["special-form", "--lattice", lattice, "--out", out]) == app.EXIT_FAIL
    assert _load(out, "special_form.json")["certified"] is False


def test_orbit_translation_set(inputs, tmp_path):
    out = str(tmp_path / "orbit")
    code = app.main(["orbit", "--alpha", str(ALPHA), "--window", inputs["window"], "--window2",
                     inputs["partner"], "--x", "0.1", "--nmax", "1000", "--out", out])
    assert code == app.EXIT_OK
    assert _load(out, "orbit.json")["E"] == [0, 1]


def test_uniformity_defaults_to_alpha(inputs, tmp_path):
    out = str(tmp_path / "uni")
    code = app.main(["uniformity", "--lattice", inputs["lattice"], "--window", inputs["window"],
                     "--kmax", "32", "--samples", "8", "--out", out])
    assert code == app.EXIT_OK
    assert _read(out, "uniformity.csv").decode("utf-8").startswith("k,min_count,ratio\n")
    assert _load(out, "uniformity.json")["c_estimate"] > 0
