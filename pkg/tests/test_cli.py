import json

import numpy as np
import pytest

from ddpole.cli import main
from ddpole.plant import chemical_reactor, random_controllable, save_system
from ddpole.synthesis import PoleSpec

REACTOR_POLES = {"poles": [{"re": p, "im": 0.0} for p in (0.5, 0.3, 0.0002, 0.0065)]}


@pytest.fixture
def reactor_traj(tmp_path):
    save_system(chemical_reactor(), tmp_path / "sys.json")
    assert main(["simulate", "--system", str(tmp_path / "sys.json"), "--T", "10", "--seed", "1",
                 "--out", str(tmp_path / "traj.csv")]) == 0
    (tmp_path / "poles.json").write_text(json.dumps(REACTOR_POLES))
    return tmp_path


def test_simulate_writes_csv_and_sidecar(reactor_traj):
    lines = (reactor_traj / "traj.csv").read_text().splitlines()
    assert lines[0] == "t,u_1,u_2,x_1,x_2,x_3,x_4"
    assert len(lines) == 11
    assert json.loads((reactor_traj / "traj.json").read_text()) == {"m": 2, "n": 4, "T": 10}


def test_pe_check_exit_codes(reactor_traj, capsys):
    assert main(["pe-check", "--trajectory", str(reactor_traj / "traj.csv"), "--order", "1"]) == 0
    assert "rank 2" in capsys.readouterr().out
    assert main(["pe-check", "--trajectory", str(reactor_traj / "traj.csv"), "--order", "4"]) != 0


def test_place_writes_gain(reactor_traj):
    out = reactor_traj / "gain.json"
    assert main(["place", "--trajectory", str(reactor_traj / "traj.csv"),
                 "--poles", str(reactor_traj / "poles.json"), "--out", str(out)]) == 0
    obj = json.loads(out.read_text())
    assert np.array(obj["K"]).shape == (2, 4)
    assert obj["placement_error"] < 1e-4


def test_place_data_rank_exit_3(tmp_path):
    save_system(chemical_reactor(), tmp_path / "sys.json")
    main(["simulate", "--system", str(tmp_path / "sys.json"), "--T", "5", "--out", str(tmp_path / "t.csv")])
    (tmp_path / "poles.json").write_text(json.dumps(REACTOR_POLES))
    assert main(["place", "--trajectory", str(tmp_path / "t.csv"), "--poles", str(tmp_path / "poles.json"),
                 "--out", str(tmp_path / "g.json")]) == 3


def test_place_infeasible_exit_2(tmp_path):
    save_system(random_controllable(4, seed=0), tmp_path / "sys.json")
    main(["simulate", "--system", str(tmp_path / "sys.json"), "--T", "20", "--out", str(tmp_path / "t.csv")])
    X = np.random.default_rng(0).standard_normal((4, 4))
    spec = PoleSpec([0.1, 0.2, 0.3, 0.4], X)
    (tmp_path / "poles.json").write_text(json.dumps({"poles": spec.to_json()["poles"]}))
    (tmp_path / "X.json").write_text(json.dumps({"X": spec.to_json()["X"]}))
    assert main(["place", "--trajectory", str(tmp_path / "t.csv"), "--poles", str(tmp_path / "poles.json"),
                 "--eigvecs", str(tmp_path / "X.json"), "--out", str(tmp_path / "g.json")]) == 2


def test_identify(reactor_traj):
    out = reactor_traj / "model.json"
    assert main(["identify", "--trajectory", str(reactor_traj / "traj.csv"), "--out", str(out)]) == 0
    obj = json.loads(out.read_text())
    np.testing.assert_allclose(obj["A"], chemical_reactor().A, atol=1e-6)


def test_identify_insufficient_data(tmp_path):
    save_system(chemical_reactor(), tmp_path / "sys.json")
    main(["simulate", "--system", str(tmp_path / "sys.json"), "--T", "4", "--out", str(tmp_path / "t.csv")])
    assert main(["identify", "--trajectory", str(tmp_path / "t.csv"), "--out", str(tmp_path / "m.json")]) == 3


def test_bench_reactor(tmp_path):
    assert main(["bench", "reactor", "--out", str(tmp_path / "r")]) == 0
    summary = json.loads((tmp_path / "r" / "summary.json").read_text())
    assert summary["reactor"]["placement_error"] < 1e-4


def test_bench_with_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_values": [4], "noise_variances": [1.0], "trials": 2}))
    assert main(["bench", "montecarlo", "--config", str(cfg), "--out", str(tmp_path / "mc")]) == 0
    assert len((tmp_path / "mc" / "records.csv").read_text().splitlines()) == 5


def test_bench_bad_config_is_usage_error(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"unknown_key": 1}))
    assert main(["bench", "montecarlo", "--config", str(cfg), "--out", str(tmp_path / "mc")]) == 1


def test_usage_errors_exit_1(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["place", "--trajectory", "x.csv"])
    assert exc.value.code == 1
    assert main(["identify", "--trajectory", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "o")]) == 1
