"""
Desk-scale training runs checked for the orderings the benchmark is built to
show. Each takes minutes; run with `pytest -m slow`.
"""

import pandas as pd
import pytest

from src.config import experiment_config_from_dict, get_project_root, load_config
from src.data_sources.dataset_io import read_dataset, write_dataset
from src.data_sources.scene_synth import SceneProfile, make_split
from src.pipelines.ablations import SEED_ENV_VAR, ablate_reward, ablate_strategy, reward_hacking_holds
from src.pipelines.curriculum import CurriculumConfig, Recipe, run_curriculum
from src.policy.recurrent import PolicyParams
from src.utils.math_stats import rolling_mean

pytestmark = pytest.mark.slow


@pytest.fixture(autouse=True)
def no_seed_override(monkeypatch):
    monkeypatch.delenv(SEED_ENV_VAR, raising=False)


@pytest.fixture(scope='module')
def experiment(tmp_path_factory):
    """The example experiment config pointed at freshly generated splits."""
    root = tmp_path_factory.mktemp('desk')
    settings = load_config(str(get_project_root() / 'config' / 'settings.example.yaml'))
    dims = tuple(int(v) for v in settings['scenes']['dims'].split('x'))
    for name, split in settings['scenes']['splits'].items():
        scenes = make_split(SceneProfile.from_name(split['profile']), split['count'], dims, split['base_seed'])
        write_dataset(scenes, root / 'scenes' / name, quiet=True)
    raw = dict(settings['experiments'])
    raw['datasets'] = {'fine': 'scenes/fine_train', 'camouflaged': 'scenes/camouflaged_train'}
    raw['eval_dataset'] = 'scenes/camouflaged_eval'
    raw['out_dir'] = 'runs'
    return experiment_config_from_dict(raw, base_dir=root)


def test_s_only_reward_is_hacked(experiment):
    table = ablate_reward(experiment, verbose=False)
    assert reward_hacking_holds(table)
    wide = table.pivot(index='seed', columns='arm', values='iou')
    assert (wide['reward-combined'] > wide['reward-s']).sum() >= 2


def test_training_strategy_orderings(experiment):
    table = ablate_strategy(experiment, verbose=False)
    wide = table.pivot(index='seed', columns='arm', values='iou')
    assert (wide['rl-only'] > wide['baseline']).sum() >= 2
    assert (wide['sft-rl'] >= wide['rl-only']).sum() >= 2
    assert (wide['pure-rl'] >= wide['rl-only']).sum() >= 2


@pytest.mark.parametrize('seed', [0, 1, 2])
def test_reward_curve_rises(tmp_path, experiment, seed):
    scenes = read_dataset(experiment.datasets['camouflaged'])
    cfg = experiment.curriculum(seed)
    run_curriculum(Recipe.RL_ONLY, cfg, {'rl': scenes}, PolicyParams.init(seed), out_dir=tmp_path, verbose=False)
    log = pd.read_csv(tmp_path / 'train_log.csv')
    assert log['reward_mean'].between(0.0, 2.0).all()
    smoothed = rolling_mean(log['reward_mean'], window=50)
    assert smoothed.iloc[-1] > smoothed.iloc[0]
