import pytest

from qkclassify import config
from qkclassify.config import ConfigError, ExperimentConfig


def test_empty_config_is_default():
    cfg = config.parse_config("")
    assert cfg == ExperimentConfig()
    assert len(cfg.models.roster) == 8


def test_parse_types():
    cfg = config.parse_config("""
[dataset]
source = iris
iris_classes = versicolor, virginica
[preprocess]
lowercase = no
max_vocab = 50
[selection]
lasso_grid = 0.5, 2
[models]
roster = iqp_full, rbf_svm  ; trailing comment
[kernel]
mode = sampled
shots = 100
""")
    assert cfg.dataset.iris_classes == ("versicolor", "virginica")
    assert cfg.preprocess.lowercase is False and cfg.preprocess.max_vocab == 50
    assert cfg.selection.lasso_grid == (0.5, 2.0)
    assert cfg.models.roster == ("iqp_full", "rbf_svm")
    assert cfg.estimation.sampled and cfg.estimation.shots == 100


@pytest.mark.parametrize("text", [
    "[bogus]\nx = 1\n",
    "[run]\nnope = 1\n",
    "[run]\nseed = abc\n",
    "[models]\nroster = qaoa_full\n",
    "[models]\nroster = \n",
    "[selection]\nk = 25\n",
    "[selection]\nk_min = 9\nk_max = 3\n",
    "[kernel]\nmode = noisy\n",
    "[evaluation]\ncv_k = 1\n",
    "[preprocess]\nscaling = zscore\n",
    "[preprocess]\nlowercase = maybe\n",
])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        config.parse_config(text)


def test_materialize_fills_seeds_from_master():
    cfg = config.with_master_seed(ExperimentConfig(), 7)
    m = config.materialize(cfg)
    assert (m.dataset.seed, m.kernel.seed, m.evaluation.seed, m.selection.forest_seed, m.models.tree_seed) == (7,) * 5
    assert cfg.dataset.seed is None


def test_explicit_seed_wins():
    cfg = config.parse_config("[dataset]\nseed = 3\n[run]\nseed = 9\n")
    m = config.materialize(cfg)
    assert m.dataset.seed == 3 and m.kernel.seed == 9


def test_dump_round_trip():
    cfg = config.materialize(config.parse_config("[models]\nrx_angle = 0.1\nroster = proposed_full\n"))
    text = config.dump_config(cfg)
    assert "none" not in text.split("[dataset]")[1].split("[preprocess]")[0]
    again = config.parse_config(text)
    assert again == cfg
    assert config.dump_config(again) == text


def test_feature_map_view():
    spec = ExperimentConfig().feature_map("heisenberg_linear")
    assert spec.name == "heisenberg_linear" and spec.reps == 2
