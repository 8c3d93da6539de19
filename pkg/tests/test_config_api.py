import json

import pytest

from contactrom.cli import check_is_config_good, eval_config
from contactrom.config_api import *
from contactrom.lib import logger
from contactrom.lib.errors import UsageError
from contactrom.models.run_config import ProblemKind, RunConfig, Stage

logger.VERBOSE = True


def setup_function(module):
    reset_configuration()


@pytest.fixture(autouse=True)
def no_thread_env(monkeypatch):
    monkeypatch.delenv("CONTACTROM_THREADS", raising=False)


def test_defaults():
    config = get_configuration()
    assert config.problem == ProblemKind.HERTZ
    assert config.stage == Stage.FULL
    assert config.design == "uniform:12"
    assert config.delta == 1e-6
    assert config.tau is None
    assert config.k_max == 50
    assert config.workers == WORKER_DEFAULT
    assert config.model_dir == "results/model"


def test_study_settings():
    study(problem="rope", stage="chls", delta=1e-4, mesh={"n_nodes": 21})
    config = get_configuration()
    assert config.problem == ProblemKind.ROPE
    assert config.stage == Stage.CHLS
    assert config.delta == 1e-4
    assert config.mesh == {"n_nodes": 21}


def test_unknown_study_setting():
    with pytest.raises(UsageError):
        study(problme="rope")


def test_bad_values_are_refused():
    with pytest.raises(UsageError):
        get_configuration(problem="sphere")
    with pytest.raises(UsageError):
        get_configuration(delta=1.5)
    with pytest.raises(UsageError):
        get_configuration(k_max=0)
    with pytest.raises(UsageError):
        workers(0)


def test_thresholds():
    thresholds(
        mean_dual_err={"max": 0.15},
        speedup=(10, None),
        ratio_mean_time=(None, 1.2),
    )
    config = get_configuration()
    assert config.thresholds == {
        "mean_dual_err": {"max": 0.15},
        "speedup": {"min": 10},
        "ratio:mean_time": {"max": 1.2},
    }
    with pytest.raises(UsageError):
        RunConfig(thresholds={"speedup": {"least": 3}})


def test_precedence(monkeypatch):
    study(delta=1e-3)
    workers(2)
    assert get_configuration().workers == 2
    monkeypatch.setenv("CONTACTROM_THREADS", "6")
    assert get_configuration().workers == 6
    config = get_configuration(workers=3, delta=1e-5, tau=None)
    assert config.workers == 3
    assert config.delta == 1e-5
    assert config.tau is None
    monkeypatch.setenv("CONTACTROM_THREADS", "many")
    with pytest.raises(UsageError):
        get_configuration()


def test_reset_configuration():
    study(problem="ironing")
    thresholds(speedup=(1, None))
    workers(4)
    reset_configuration()
    config = get_configuration()
    assert config.problem == ProblemKind.HERTZ
    assert config.thresholds == {}
    assert config.workers == WORKER_DEFAULT


def test_toml_config(tmp_path):
    path = tmp_path / "study.toml"
    path.write_text(
        'problem = "ironing2p"\n'
        'design = "nested:3"\n'
        "workers = 2\n"
        "[mesh]\n"
        "iron_nodes = 5\n"
        "[thresholds]\n"
        "mean_primal_err = { max = 0.01 }\n"
    )
    load_config(path)
    config = get_configuration()
    assert config.problem == ProblemKind.IRONING2P
    assert config.design == "nested:3"
    assert config.workers == 2
    assert config.mesh == {"iron_nodes": 5}
    assert config.thresholds == {"mean_primal_err": {"max": 0.01}}


def test_json_config_with_study_table(tmp_path):
    path = tmp_path / "study.json"
    path.write_text(json.dumps({"study": {"stage": "offline", "seed": 7}}))
    load_config(path)
    config = get_configuration()
    assert config.stage == Stage.OFFLINE
    assert config.seed == 7


def test_bad_config_files(tmp_path):
    with pytest.raises(UsageError):
        load_config(tmp_path / "missing.toml")
    broken = tmp_path / "broken.toml"
    broken.write_text("problem = \n")
    with pytest.raises(UsageError):
        load_config(broken)
    other = tmp_path / "study.yaml"
    other.write_text("problem: rope\n")
    with pytest.raises(UsageError):
        load_config(other)


def test_python_config(tmp_path):
    path = tmp_path / "study.py"
    path.write_text(
        'study(problem="rope", design="uniform:5")\n'
        "thresholds(mean_primal_err=(None, 0.05))\n"
        "workers(2)\n"
    )
    eval_config(path)
    config = get_configuration()
    assert config.problem == ProblemKind.ROPE
    assert config.design == "uniform:5"
    assert config.workers == 2
    assert config.thresholds == {"mean_primal_err": {"max": 0.05}}


def test_config_check(tmp_path):
    good = tmp_path / "good.py"
    good.write_text('study(stage="online")\n')
    assert check_is_config_good(good)
    bad = tmp_path / "bad.py"
    bad.write_text("study(stage=)\n")
    assert not check_is_config_good(bad)


def test_digest_ignores_where_results_go():
    a = get_configuration(output_dir="a", workers=1)
    b = get_configuration(output_dir="b", workers=4)
    c = get_configuration(delta=1e-3)
    assert a.digest() == b.digest()
    assert a.digest() != c.digest()
    assert a.to_dict()["problem"] == "hertz"
