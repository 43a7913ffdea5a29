import json
import os
import shutil

import numpy as np
import pytest

from prophetsim.cli import main
from prophetsim.corpus import corpus_path
from prophetsim.curves import build_curveset
from prophetsim.distributions import load_instance
from prophetsim.schedule import build_schedule, load_schedule_dump
from prophetsim.verify import CheckReport


def _run(capsys, argv):
    code = main(argv)
    return code, capsys.readouterr().out


def test_constants_json(capsys):
    code, out = _run(capsys, ["constants"])
    assert code == 0
    doc = json.loads(out)
    assert 0.7445 <= doc["gamma_iid"] <= 0.7455
    assert 0.2105 <= doc["alpha"] <= 0.2115
    assert 0.7245 <= doc["gamma_sel"] <= 0.7255
    assert abs(doc["residual_gamma_iid"]) <= 1e-10


def test_constants_hk_artifacts(tmp_path, capsys):
    out = str(tmp_path / "c.json")
    code, _ = _run(capsys, ["constants", "--hk", "64", "--out", out])
    assert code == 0
    doc = json.loads(open(out).read())
    assert "z_cross" in doc and "hk_gap_at_z1" in doc
    assert os.path.exists(str(tmp_path / "c_hk.csv"))
    assert os.path.exists(str(tmp_path / "c.png"))


def test_curves_dump_stdout(capsys):
    inst = str(corpus_path("03_iid_uniform_2"))
    code, out = _run(capsys, ["curves", "dump", "--instance", inst, "--grid-n", "64"])
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].split(",") == ["t", "tau", "p_1", "p_2", "q_1", "q_2"]
    assert len(lines) == 1 + 65  # header + N+1 grid rows


def test_schedule_dump_round_trip(tmp_path, capsys):
    src = str(corpus_path("08_mixed_3"))
    out = str(tmp_path / "sched.csv")
    code, _ = _run(capsys, ["schedule", "dump", "--instance", src,
                            "--grid-n", "256", "--out", out])
    assert code == 0
    back = load_schedule_dump(out)
    inst = load_instance(src)
    sched = build_schedule(build_curveset(inst, 256), back.gamma)
    np.testing.assert_array_equal(back.F, sched.F)
    np.testing.assert_array_equal(back.g, sched.g)
    assert back.item_one == sched.item_one
    assert os.path.exists(str(tmp_path / "sched.png"))


def test_schedule_gamma_flag(tmp_path, capsys):
    src = str(corpus_path("03_iid_uniform_2"))
    out = str(tmp_path / "s.csv")
    code, _ = _run(capsys, ["schedule", "dump", "--instance", src, "--grid-n", "64",
                            "--gamma", "0.5", "--out", out, "--no-figures"])
    assert code == 0
    assert load_schedule_dump(out).gamma == 0.5
    assert not os.path.exists(str(tmp_path / "s.png"))


def test_simulate_artifacts(tmp_path, capsys):
    src = str(corpus_path("03_iid_uniform_2"))
    out = str(tmp_path / "run.json")
    code, _ = _run(capsys, ["simulate", "--instance", src, "--trials", "2000",
                            "--grid-n", "256", "--workers", "1", "--out", out])
    assert code == 0
    doc = json.loads(open(out).read())
    assert doc["algorithm_tag"] == "main"
    assert 0.0 < doc["ratio"] <= 1.0
    assert len(doc["survival"]) == 19
    assert os.path.exists(str(tmp_path / "run.png"))


def test_simulate_no_figures(tmp_path, capsys):
    src = str(corpus_path("01_one_uniform"))
    out = str(tmp_path / "r.json")
    code, _ = _run(capsys, ["simulate", "--instance", src, "--alg", "single_threshold",
                            "--trials", "2000", "--grid-n", "64", "--workers", "1",
                            "--out", out, "--no-figures"])
    assert code == 0
    assert os.path.exists(out)
    assert not os.path.exists(str(tmp_path / "r.png"))


def test_exit_two_paths_leave_no_artifact(tmp_path, capsys):
    out = str(tmp_path / "x.csv")
    code, _ = _run(capsys, ["curves", "dump", "--instance",
                            str(tmp_path / "nope.json"), "--out", out])
    assert code == 2 and not os.path.exists(out)
    # grid size must be a power of two
    code, _ = _run(capsys, ["curves", "dump", "--instance",
                            str(corpus_path("01_one_uniform")), "--grid-n", "100",
                            "--out", out])
    assert code == 2 and not os.path.exists(out)
    # missing --instance
    code, _ = _run(capsys, ["curves", "dump", "--out", out])
    assert code == 2 and not os.path.exists(out)


def test_unknown_command_exits_two():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_oracle_cap_and_json(tmp_path, capsys):
    code, out = _run(capsys, ["oracle", "--instance", str(corpus_path("06_two_scales"))])
    assert code == 0
    doc = json.loads(out)
    assert doc["best_order"] == [2, 1]
    assert doc["best_value"] == pytest.approx(1.0625, abs=1e-9)
    assert doc["prophet_value"] == pytest.approx(13.0 / 12.0, abs=1e-9)
    big = {"label": "big", "items": [{"kind": "uniform", "lo": 0.0, "hi": 1.0}] * 9}
    path = str(tmp_path / "big.json")
    with open(path, "w") as fh:
        json.dump(big, fh)
    code, _ = _run(capsys, ["oracle", "--instance", path, "--out",
                            str(tmp_path / "o.json")])
    assert code == 2 and not os.path.exists(str(tmp_path / "o.json"))


def test_verify_exit_and_artifacts(tmp_path, capsys, monkeypatch):
    ok = CheckReport("identities", "t1", 0.2, 1.0, True, 64,
                     ({"part": "a", "normalized_residual": 0.2},))
    bad = CheckReport("validity", "t1", 2.5, 1.0, False, 64,
                      ({"part": "b", "normalized_residual": 2.5},))

    monkeypatch.setattr("prophetsim.cli.run_all", lambda **kw: [ok])
    out = str(tmp_path / "rep.json")
    code, text = _run(capsys, ["verify", "all", "--trials", "10", "--out", out])
    assert code == 0
    assert "1/1 checks pass" in text
    assert os.path.exists(out)
    assert os.path.exists(str(tmp_path / "rep_worst.csv"))
    assert os.path.exists(str(tmp_path / "rep.png"))

    monkeypatch.setattr("prophetsim.cli.run_all", lambda **kw: [ok, bad])
    out2 = str(tmp_path / "rep2.json")
    code, text = _run(capsys, ["verify", "all", "--trials", "10", "--out", out2])
    assert code == 1
    assert "FAIL validity" in text and "1/2 checks pass" in text
    # failing runs still leave the full report trail
    doc = json.loads(open(out2).read())
    assert doc["passed"] is False and len(doc["reports"]) == 2


def test_sweep_tiny_dir(tmp_path, capsys):
    d = tmp_path / "insts"
    d.mkdir()
    for lbl in ("01_one_uniform", "03_iid_uniform_2"):
        shutil.copy(corpus_path(lbl), d)
    out = str(tmp_path / "sweep.csv")
    code, _ = _run(capsys, ["sweep", "--instance-dir", str(d), "--trials", "2000",
                            "--grid-n", "256", "--workers", "1", "--out", out])
    assert code == 0
    lines = open(out).read().strip().splitlines()
    assert lines[0].startswith("label,n,main_sel_ratio")
    assert len(lines) == 3
    row03 = next(l for l in lines if l.startswith("03_"))
    assert row03.split(",")[4] != ""  # iid instance carries a main_iid column
    assert os.path.exists(str(tmp_path / "sweep.png"))
    code, _ = _run(capsys, ["sweep", "--instance-dir", str(tmp_path / "empty"),
                            "--out", out])
    assert code == 2
