import json

import numpy as np
import pytest

from nio_synth import serialize as io
from nio_synth.cli import (
    EXIT_ASSUMPTION,
    EXIT_INFEASIBLE,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_USAGE,
    demo_config,
    exit_code_for,
    main,
    normalize_config,
)
from nio_synth.errors import (
    Assumption2Violated,
    Infeasible,
    NoiseBoundViolated,
    NotNeeded,
    NumericalFailure,
    SchemaError,
)


def read(path):
    return json.loads(path.read_text())


def test_exit_codes():
    assert exit_code_for(Infeasible(-1)) == EXIT_INFEASIBLE == 2
    assert exit_code_for(Assumption2Violated(-1)) == EXIT_ASSUMPTION == 3
    assert exit_code_for(NoiseBoundViolated(-1)) == exit_code_for(NotNeeded()) == 3
    assert exit_code_for(NumericalFailure()) == EXIT_NUMERICAL == 4
    assert exit_code_for(SchemaError()) == EXIT_USAGE == 1


@pytest.mark.parametrize("name,order", [("batch-reactor", 8), ("augmented", 9)])
def test_demo(tmp_path, name, order):
    assert main(["demo", name, "--out", str(tmp_path)]) == EXIT_OK
    for f in ("config", "data", "plant", "controller", "report", "metadata"):
        assert (tmp_path / f"{f}.json").exists()
    rep = read(tmp_path / "report.json")
    assert rep["ok"] and rep["closed_loop"]["spectral_radius"] < 1 and rep["certificate"]["ok"]
    ctrl = read(tmp_path / "controller.json")
    assert ctrl["controller"]["order"] == order
    assert (ctrl["augmentation"] is not None) == (name == "augmented")
    assert rep["controller_hash"] == io.load(tmp_path / "controller.json")[1]
    assert ctrl["data_hash"] == io.load(tmp_path / "data.json")[1]
    assert read(tmp_path / "data.json")["config_hash"] == io.load(tmp_path / "config.json")[1]
    if name == "augmented":
        assert not rep["noisy_run"]["diverged"]


def test_demo_drowned_in_noise(tmp_path, capsys):
    code = main(["demo", "batch-reactor", "--noise-scale", "1000", "--out", str(tmp_path)])
    assert code in (EXIT_ASSUMPTION, EXIT_INFEASIBLE)
    err = read(tmp_path / "error.json")
    assert err["error"] in ("Assumption2Violated", "Infeasible") and err["exit_code"] == code
    assert json.loads(capsys.readouterr().err)["error"] == err["error"]


def test_demo_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["demo", "batch-reactor", "--seed", "3", "--out", str(a)]) == 0
    assert main(["demo", "batch-reactor", "--seed", "3", "--out", str(b)]) == 0
    for f in ("data", "controller", "report"):
        assert (a / f"{f}.json").read_bytes() == (b / f"{f}.json").read_bytes()


@pytest.mark.parametrize("name", ["batch-reactor", "augmented"])
def test_roundtrip_matches_demo(tmp_path, name):
    demo, step = tmp_path / "demo", tmp_path / "step"
    assert main(["demo", name, "--seed", "4", "--out", str(demo)]) == 0
    cfg = tmp_path / "config.json"
    io.write(cfg, demo_config(name, 4))
    assert main(["collect", str(cfg), "--out", str(step)]) == 0
    assert main(["synth", str(step / "data.json"), "--out", str(step)]) == 0
    assert main(["verify", str(step / "plant.json"), str(step / "controller.json"), "--out", str(step)]) == 0
    for f in ("data", "plant", "controller", "report"):
        assert (demo / f"{f}.json").read_bytes() == (step / f"{f}.json").read_bytes(), f


def test_synth_on_poor_data(tmp_path):
    cfg = demo_config("batch-reactor", 0, noise_scale=1000)
    io.write(tmp_path / "c.json", cfg)
    assert main(["collect", str(tmp_path / "c.json"), "--out", str(tmp_path)]) == 0
    assert main(["synth", str(tmp_path / "data.json"), "--out", str(tmp_path)]) == EXIT_ASSUMPTION
    err = read(tmp_path / "error.json")
    assert err["error"] == "Assumption2Violated" and err["min_eig"] < 0


def test_synth_infeasible(tmp_path):
    assert main(["demo", "batch-reactor", "--out", str(tmp_path)]) == 0
    out = tmp_path / "big"
    assert main(["synth", str(tmp_path / "data.json"), "--theta-scale", "20", "--out", str(out)]) == EXIT_INFEASIBLE
    assert read(out / "error.json")["error"] == "Infeasible"


def test_synth_flags(tmp_path):
    assert main(["demo", "batch-reactor", "--out", str(tmp_path)]) == 0
    out = tmp_path / "eq18"
    assert main(["synth", str(tmp_path / "data.json"), "--variant", "eq18", "--epsilon", "1e-5",
                 "--dump-lmi", "--out", str(out)]) == 0
    ctrl = read(out / "controller.json")
    assert ctrl["solver"]["variant"] == "eq18" and ctrl["solver"]["epsilon"] == 1e-5
    lmi = read(out / "lmi.json")
    assert lmi["constraints"][0]["block_sizes"] == [8, 8, 8] and "solution" in lmi


def test_verify_dimension_mismatch(tmp_path):
    assert main(["demo", "batch-reactor", "--out", str(tmp_path)]) == 0
    io.write(tmp_path / "other.json", {"A": [[0.5]], "B": [[1.0]], "C": [[1.0]]})
    code = main(["verify", str(tmp_path / "other.json"), str(tmp_path / "controller.json"), "--out", str(tmp_path)])
    assert code == EXIT_USAGE
    assert read(tmp_path / "error.json")["error"] == "SchemaError"


def test_verify_flags_unstable_controller(tmp_path):
    assert main(["demo", "batch-reactor", "--out", str(tmp_path)]) == 0
    ctrl = read(tmp_path / "controller.json")
    ctrl["K"] = io.mat(np.zeros((2, 8)))
    io.write(tmp_path / "zero.json", ctrl)
    assert main(["verify", str(tmp_path / "plant.json"), str(tmp_path / "zero.json"), "--out", str(tmp_path)]) == EXIT_NUMERICAL
    rep = read(tmp_path / "report.json")
    assert not rep["ok"] and not rep["closed_loop"]["schur"] and not rep["certificate"]["ok"]


def test_bad_json_and_usage(tmp_path, capsys):
    (tmp_path / "c.json").write_text("{oops")
    assert main(["collect", str(tmp_path / "c.json"), "--out", str(tmp_path)]) == EXIT_USAGE
    assert "line 1" in read(tmp_path / "error.json")["message"]
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == EXIT_USAGE


@pytest.mark.parametrize("patch,msg", [
    (lambda c: c["experiment"].update(du_bar=-1.0), "du_bar"),
    (lambda c: c["experiment"].pop("seed"), "seed"),
    (lambda c: c.update(variant="both"), "variant"),
    (lambda c: c.pop("plant"), "plant"),
    (lambda c: c.update(ell=0), "ell"),
])
def test_config_validation(patch, msg):
    cfg = demo_config("batch-reactor", 0)
    patch(cfg)
    with pytest.raises(SchemaError, match=msg):
        normalize_config(cfg)


def test_config_auto_ell_and_plant_file(tmp_path):
    cfg = demo_config("batch-reactor", 0)
    io.write(tmp_path / "plant.json", cfg.pop("plant"))
    cfg["plant_file"] = "plant.json"
    cfg["ell"] = "auto"
    norm = normalize_config(cfg, tmp_path)
    assert norm["ell"] == 2 and norm["plant"]["A"]["rows"] == 4


def test_collect_seed_override(tmp_path):
    io.write(tmp_path / "c.json", demo_config("batch-reactor", 0))
    assert main(["collect", str(tmp_path / "c.json"), "--seed", "9", "--out", str(tmp_path / "o")]) == 0
    assert read(tmp_path / "o" / "data.json")["seed"] == 9


def test_user_artificial_system_redrawn(tmp_path):
    cfg = demo_config("augmented", 0)
    # an artificial state that never reaches the output leaves the augmented data poor
    cfg["augmentation"] = {"A_a": [[0.0]], "B_a": [[1.0, 1.0]], "C_a": [[0.0], [0.0]]}
    io.write(tmp_path / "c.json", normalize_config(cfg))
    assert main(["collect", str(tmp_path / "c.json"), "--out", str(tmp_path)]) == 0
    assert main(["synth", str(tmp_path / "data.json"), "--out", str(tmp_path)]) == 0
    assert read(tmp_path / "controller.json")["augmentation"]["source"].startswith("random-contractive")


def test_inspect(tmp_path, capsys):
    assert main(["demo", "batch-reactor", "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    assert main(["inspect", str(tmp_path / "data.json")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["n_cols"] == 20 and out["diagnostics"]["assumption2_ok"] and out["theta_diag"] == pytest.approx(0.02)


def test_thread_cap(tmp_path, monkeypatch):
    monkeypatch.setenv("NIO_SYNTH_THREADS", "1")
    assert main(["demo", "batch-reactor", "--out", str(tmp_path)]) == 0
