import json

import numpy as np
import pytest

from app.artifacts.artifact_manager import ArtifactManager
from app.artifacts.config import Config
from app.artifacts.models.run_config import RunConfig
from app.artifacts.models.vocabulary import Vocabulary
from app.utils.errors import ArtifactError
from app.utils.helpers import parse_float_grid
from app.utils.response import to_json


def test_write_refuses_to_overwrite_without_force(tmp_path):
    path = str(tmp_path / "model.txt")
    ArtifactManager.write_artifact(path, "TEST v1", ["first"])
    with pytest.raises(ArtifactError):
        ArtifactManager.write_artifact(path, "TEST v1", ["second"])
    ArtifactManager.write_artifact(path, "TEST v1", ["second"], force=True)
    assert ArtifactManager.read_artifact(path, "TEST v1") == ([], ["second"])
    assert not (tmp_path / "model.txt.tmp").exists()


def test_read_checks_header(tmp_path):
    path = tmp_path / "vocab.txt"
    path.write_text("NGRAM v1 3\n", encoding="utf-8")
    with pytest.raises(ArtifactError):
        Vocabulary.load(str(path))
    with pytest.raises(FileNotFoundError):
        Vocabulary.load(str(tmp_path / "missing.txt"))


def test_split_sections_groups_lines():
    body = ["loose", "[one]", "a", "", "b", "[two]", "c"]
    assert ArtifactManager.split_sections(body) == {"": ["loose"], "one": ["a", "b"], "two": ["c"]}


def test_run_config_defaults():
    config = RunConfig.load()
    assert config.decoder.beam_size == 10
    assert config.hmmlda.K == 50
    assert config.lm.lambda_lm == 0.6
    assert config.paths.pairs is None


def test_seed_defaults_come_from_the_environment_setting():
    config = RunConfig.load()
    seeds = {config.corpus.seed, config.hmmlda.seed, config.sif.seed, config.decoder.seed, config.eval.seed}
    assert seeds == {Config.SEED}


def test_run_config_round_trip(tmp_path):
    config = RunConfig.load(overrides={"decoder": {"alpha": 7.5, "ta_bias": None}, "hmmlda": {"K": 4}})
    path = config.dump(str(tmp_path / "run.ini"))
    loaded = RunConfig.load(path)
    assert loaded == config
    assert loaded.decoder.alpha == 7.5
    assert loaded.source == path


def test_run_config_overrides_win_over_file(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[decoder]\nbeam_size = 4\nalpha = 1.0\n", encoding="utf-8")
    config = RunConfig.load(str(path), overrides={"decoder": {"alpha": 3.0, "beta": None}})
    assert config.decoder.beam_size == 4
    assert config.decoder.alpha == 3.0
    assert config.decoder.beta == 2.0


def test_run_config_rejects_invalid_values(tmp_path):
    with pytest.raises(ValueError) as info:
        RunConfig.load(overrides={"decoder": {"beam_size": 0}})
    assert "beam_size" in info.value.args[0]
    with pytest.raises(ValueError):
        RunConfig.load(overrides={"hmmlda": {"C": 1}})
    with pytest.raises(ValueError):
        RunConfig.load(overrides={"eval": {"bootstrap_iterations": 10}})


def test_run_config_rejects_unknown_section(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[beam]\nsize = 3\n", encoding="utf-8")
    with pytest.raises(ValueError):
        RunConfig.load(str(path))


def test_parse_float_grid():
    assert parse_float_grid("0, 2,5") == [0.0, 2.0, 5.0]
    with pytest.raises(ValueError):
        parse_float_grid("1,x")
    with pytest.raises(ValueError):
        parse_float_grid(" , ")


def test_json_encoder_handles_numpy_and_infinities():
    record = {"score": -np.inf, "count": np.int64(3), "dist": np.array([0.5, 0.5]), "nested": [float("nan"), 1.0]}
    assert json.loads(to_json(record)) == {"score": None, "count": 3, "dist": [0.5, 0.5], "nested": [None, 1.0]}
