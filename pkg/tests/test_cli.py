import numpy as np
import pytest

from dynid.cli import (main, mnae, mse, validation_metrics, write_report)
from dynid.dataio import (read_samples, ur10_default_model, write_payload,
                          write_robot_model)
from dynid.payload import PayloadSpec

PAYLOAD = PayloadSpec(mass=4.8, com=(0.10, 0.06, 0.05),
                      inertia_com=np.diag((0.030, 0.035, 0.030)))


# ---------------------------------------------------------------------------
# metric functions

def test_mse_values():
    x = np.array([1.0, 2.0, 3.0])
    assert mse(x, x) == 0.0
    assert mse(np.zeros(2), np.ones(2)) == 1.0
    with pytest.raises(ValueError):
        mse(np.zeros(3), np.zeros(4))
    with pytest.raises(ValueError):
        mse(np.zeros((2, 2)), np.zeros((2, 2)))


def test_mnae_units_exact():
    # mean |x - y| = 0.1 over range 2 -> 200 * 0.1 / 2 = 10 percent exactly
    x = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
    y = x + 0.1
    assert mnae(x, y) == 10.0
    assert mnae(x, x) == 0.0
    # normalization makes the score scale-free
    assert abs(mnae(5.0 * x, 5.0 * y) - mnae(x, y)) < 1e-12


def test_mnae_zero_range_rejected():
    with pytest.raises(ValueError, match="zero-range"):
        mnae(np.ones(4), np.zeros(4))


def test_validation_metrics(data_a):
    perfect = validation_metrics(data_a, data_a.v)
    assert np.array_equal(perfect.mse, np.zeros(6))
    assert np.array_equal(perfect.mnae, np.zeros(6))
    assert perfect.eta is None
    # a slightly worse baseline gives eta > 1 on every joint
    rng = np.random.default_rng(0)
    pred = data_a.v + 0.01 * rng.standard_normal(data_a.v.shape)
    base = data_a.v + 0.05 * rng.standard_normal(data_a.v.shape)
    m = validation_metrics(data_a, pred, base)
    assert m.eta is not None and np.all(m.eta > 1.0)
    assert np.all(m.mse > 0.0) and np.all(np.isfinite(m.mnae_nonlinear))
    with pytest.raises(ValueError):
        validation_metrics(data_a, data_a.v[:, :3])


def test_report_schema(data_a, tmp_path):
    m = validation_metrics(data_a, data_a.v)
    p = tmp_path / "report.csv"
    write_report(m, p)
    lines = p.read_text().splitlines()
    assert lines[0] == "joint,mse,mnae,mnae_nonlinear_region"
    assert len(lines) == 7
    assert lines[1].split(",")[0] == "1"
    m2 = validation_metrics(data_a, data_a.v, baseline=data_a.v * 1.01)
    write_report(m2, p)
    header = p.read_text().splitlines()[0]
    assert header == "joint,mse,mnae,mnae_nonlinear_region,eta"


# ---------------------------------------------------------------------------
# end-to-end pipeline on files

@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Full command-line workflow in one directory, noiseless data."""
    d = tmp_path_factory.mktemp("cli")
    robot = str(d / "robot.ini")
    payload = str(d / "payload.ini")
    write_robot_model(ur10_default_model(), robot)
    write_payload(PAYLOAD, payload)

    paths = {
        "dir": d, "robot": robot, "payload": payload,
        "traj_a": str(d / "traj_a.csv"), "traj_a2": str(d / "traj_a2.csv"),
        "traj_b": str(d / "traj_b.csv"),
        "run_a": str(d / "run_a.csv"), "run_a2": str(d / "run_a2.csv"),
        "run_b": str(d / "run_b.csv"),
        "model_lin": str(d / "model_lin.ini"),
        "model_fric": str(d / "model_fric.ini"),
        "model": str(d / "model.ini"),
        "torques": str(d / "torques.csv"), "report": str(d / "report.csv"),
    }
    steps = [
        ["traj", "gen", "--robot", robot, "--seed", "1",
         "--duration", "10", "--out", paths["traj_a"]],
        ["traj", "gen", "--robot", robot, "--seed", "5",
         "--duration", "10", "--out", paths["traj_a2"]],
        ["traj", "gen", "--robot", robot, "--seed", "2",
         "--duration", "10", "--out", paths["traj_b"]],
        ["simulate", "--robot", robot, "--traj", paths["traj_a"],
         "--seed", "3", "--out", paths["run_a"]],
        ["simulate", "--robot", robot, "--traj", paths["traj_a2"],
         "--seed", "3", "--out", paths["run_a2"]],
        ["simulate", "--robot", robot, "--traj", paths["traj_b"],
         "--payload", payload, "--seed", "4", "--out", paths["run_b"]],
        # one run alone is not persistently exciting; the stages merge logs
        ["identify", "linear", "--robot", robot,
         "--samples", paths["run_a"], paths["run_a2"],
         "--out", paths["model_lin"]],
        ["identify", "friction", "--model", paths["model_lin"],
         "--samples", paths["run_a"], paths["run_a2"],
         "--out", paths["model_fric"]],
        ["identify", "gains", "--model", paths["model_fric"],
         "--samples-a", paths["run_a"], paths["run_a2"],
         "--samples-b", paths["run_b"],
         "--payload", payload, "--known", "mass,com",
         "--out", paths["model"]],
        ["solve", "--model", paths["model"], "--traj", paths["run_a"],
         "--out", paths["torques"]],
        ["validate", "--model", paths["model"], "--samples", paths["run_a"],
         "--report", paths["report"]],
    ]
    for argv in steps:
        assert main(argv) == 0, f"step failed: {argv}"
    return paths


def test_pipeline_report(pipeline):
    lines = open(pipeline["report"]).read().splitlines()
    assert lines[0] == "joint,mse,mnae,mnae_nonlinear_region"
    assert len(lines) == 7
    for row in lines[1:]:
        fields = row.split(",")
        # noiseless data: the identified model explains itself tightly
        assert float(fields[2]) < 1.0


def test_pipeline_solve_schema(pipeline):
    lines = open(pipeline["torques"]).read().splitlines()
    head = lines[0].split(",")
    assert head[0] == "t"
    for k, name in enumerate(("tau", "inertia", "coriolis", "friction",
                              "gravity")):
        block = head[1 + 6 * k:7 + 6 * k]
        assert block == [f"{name}{j}" for j in range(1, 7)]
    ds = read_samples(pipeline["run_a"])
    assert len(lines) == ds.m + 1
    # decomposition columns sum to the torque column on every row
    row = np.array([float(x) for x in lines[3].split(",")])
    tau = row[1:7]
    parts = row[7:13] + row[13:19] + row[19:25] + row[25:31]
    assert np.max(np.abs(tau - parts)) < 1e-9


def test_traj_gen_deterministic(pipeline):
    d, robot = pipeline["dir"], pipeline["robot"]
    again = str(d / "traj_a_again.csv")
    assert main(["traj", "gen", "--robot", robot, "--seed", "1",
                 "--duration", "10", "--out", again]) == 0
    assert open(again, "rb").read() == open(pipeline["traj_a"], "rb").read()
    other = str(d / "traj_other.csv")
    assert main(["traj", "gen", "--robot", robot, "--seed", "9",
                 "--duration", "10", "--out", other]) == 0
    assert open(other, "rb").read() != open(pipeline["traj_a"], "rb").read()


def test_simulate_deterministic(pipeline):
    d = pipeline["dir"]
    again = str(d / "run_a_again.csv")
    assert main(["simulate", "--robot", pipeline["robot"], "--traj",
                 pipeline["traj_a"], "--seed", "3", "--out", again]) == 0
    assert open(again, "rb").read() == open(pipeline["run_a"], "rb").read()


def test_exit_codes_usage(pipeline, capsys):
    assert main(["frobnicate"]) == 1
    assert "error=1" in capsys.readouterr().err
    # gains before friction: stage order is enforced by name
    rc = main(["identify", "gains", "--model", pipeline["model_lin"],
               "--samples-a", pipeline["run_a"],
               "--samples-b", pipeline["run_b"],
               "--payload", pipeline["payload"]])
    assert rc == 1
    assert "missing stage: friction" in capsys.readouterr().err
    # solving needs the gain stage
    rc = main(["solve", "--model", pipeline["model_fric"],
               "--traj", pipeline["run_a"], "--out",
               str(pipeline["dir"] / "nope.csv")])
    assert rc == 1
    assert "missing stage: gains" in capsys.readouterr().err


def test_exit_code_scenario_mismatch(pipeline, capsys):
    rc = main(["identify", "gains", "--model", pipeline["model_fric"],
               "--samples-a", pipeline["run_a"],
               "--samples-b", pipeline["run_a"],  # wrong: scenario 'a'
               "--payload", pipeline["payload"], "--known", "mass,com"])
    assert rc == 1
    assert "scenario 'b'" in capsys.readouterr().err


def test_exit_code_unknown_group(pipeline, capsys):
    rc = main(["identify", "gains", "--model", pipeline["model_fric"],
               "--samples-a", pipeline["run_a"],
               "--samples-b", pipeline["run_b"],
               "--payload", pipeline["payload"], "--known", "mass,weight"])
    assert rc == 1
    assert "weight" in capsys.readouterr().err


def test_exit_code_missing_file(pipeline, capsys):
    rc = main(["identify", "linear", "--robot", pipeline["robot"],
               "--samples", str(pipeline["dir"] / "absent.csv"),
               "--out", str(pipeline["dir"] / "nope.ini")])
    assert rc == 2
    assert "error=2" in capsys.readouterr().err
    # a missing model file is a usage error that names the fix
    rc = main(["solve", "--model", str(pipeline["dir"] / "absent.ini"),
               "--traj", pipeline["run_a"],
               "--out", str(pipeline["dir"] / "nope.csv")])
    assert rc == 1
    assert "identify linear" in capsys.readouterr().err


def test_validate_with_baseline(pipeline):
    report2 = str(pipeline["dir"] / "report_eta.csv")
    rc = main(["validate", "--model", pipeline["model"],
               "--samples", pipeline["run_a"],
               "--baseline", pipeline["run_b"], "--report", report2])
    assert rc == 0
    lines = open(report2).read().splitlines()
    assert lines[0].endswith(",eta")
    assert len(lines[1].split(",")) == 5
