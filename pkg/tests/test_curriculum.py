import pandas as pd
import pytest

from src.pipelines.curriculum import (
    CurriculumConfig, Recipe, check_datasets, recipe_stages, run_curriculum,
)
from src.policy.recurrent import PolicyParams
from src.prompts.mask_prompt import PromptStage
from src.training.grpo import GrpoConfig
from src.training.sft import load_trajectories

SMALL_GRPO = GrpoConfig(group_size=2, batch_scenes=2, decoding='grammar', seed=1)


def _datasets(fine_scenes, camouflaged_scenes):
    return {'prerl': fine_scenes, 'sft': camouflaged_scenes, 'rl': camouflaged_scenes}


def test_recipe_names():
    assert Recipe.from_name('pure-rl') is Recipe.PURE_RL
    assert Recipe.from_name('SFT_THEN_RL') is Recipe.SFT_THEN_RL
    with pytest.raises(KeyError, match='Available recipes'):
        Recipe.from_name('rl-then-sft')
    assert [s.name for s in recipe_stages(Recipe.PURE_RL)] == ['prerl', 'rl']
    assert recipe_stages(Recipe.PURE_RL)[0].prompt_stage is PromptStage.POINTS_ONLY


def test_stage_configs():
    cfg = CurriculumConfig(grpo=SMALL_GRPO, prerl_steps=3, rl_steps=5)
    prerl, rl = recipe_stages(Recipe.PURE_RL)
    assert cfg.stage_grpo(prerl).total_steps == 3
    assert cfg.stage_grpo(prerl).stage is PromptStage.POINTS_ONLY
    assert cfg.stage_grpo(rl).total_steps == 5
    assert cfg.stage_grpo(rl).stage is PromptStage.BOX_AND_POINTS
    with pytest.raises(ValueError):
        CurriculumConfig(prerl_steps=-1)
    with pytest.raises(ValueError):
        CurriculumConfig(sft_epochs=-1)


def test_missing_dataset_names_the_stage(camouflaged_scenes):
    with pytest.raises(ValueError, match="stage 'prerl'"):
        check_datasets(Recipe.PURE_RL, {'rl': camouflaged_scenes})
    with pytest.raises(ValueError, match="stage 'sft'"):
        run_curriculum(Recipe.SFT_THEN_RL, CurriculumConfig(), {'rl': camouflaged_scenes},
                       PolicyParams.zeros(hidden=4), verbose=False)


def test_rl_only_with_no_steps_keeps_the_policy(camouflaged_scenes):
    policy = PolicyParams.init(0, hidden=8)
    cfg = CurriculumConfig(grpo=SMALL_GRPO, rl_steps=0)
    result = run_curriculum(Recipe.RL_ONLY, cfg, {'rl': camouflaged_scenes}, policy, verbose=False)
    assert result.policy == policy
    assert result.history == []
    assert list(result.stage_policies) == ['rl']


def test_each_stage_starts_at_its_own_reference(tmp_path, fine_scenes, camouflaged_scenes):
    policy = PolicyParams.init(4, hidden=8, scale=0.5)
    cfg = CurriculumConfig(grpo=SMALL_GRPO, prerl_steps=1, rl_steps=1)
    result = run_curriculum(Recipe.PURE_RL, cfg, _datasets(fine_scenes, camouflaged_scenes), policy,
                            out_dir=tmp_path, verbose=False)
    assert [(s.stage, s.step) for s in result.history] == [('prerl', 0), ('rl', 0)]
    assert [s.kl_mean for s in result.history] == [0.0, 0.0]
    log = pd.read_csv(tmp_path / 'train_log.csv')
    assert log['stage'].tolist() == ['prerl', 'rl']
    assert result.policy == result.stage_policies['rl']


def test_sft_then_rl_records_trajectories(tmp_path, fine_scenes, camouflaged_scenes):
    policy = PolicyParams.init(5, hidden=8)
    cfg = CurriculumConfig(grpo=SMALL_GRPO, rl_steps=0, sft_epochs=2, sft_lr=0.05, sft_batch_size=2)
    result = run_curriculum(Recipe.SFT_THEN_RL, cfg, _datasets(fine_scenes, camouflaged_scenes), policy,
                            out_dir=tmp_path, verbose=False)
    assert len(result.sft_losses) == 2
    assert result.history == []
    assert result.policy != policy
    assert result.stage_policies['sft'] == result.policy
    trajs = load_trajectories(tmp_path / 'trajectories.jsonl')
    assert [t.scene_id for t in trajs] == [s.scene_id for s in camouflaged_scenes]


def test_curriculum_is_deterministic(fine_scenes, camouflaged_scenes):
    cfg = CurriculumConfig(grpo=SMALL_GRPO, prerl_steps=1, rl_steps=1)
    policy = PolicyParams.init(6, hidden=8)
    a = run_curriculum(Recipe.PURE_RL, cfg, _datasets(fine_scenes, camouflaged_scenes), policy, verbose=False)
    b = run_curriculum(Recipe.PURE_RL, cfg, _datasets(fine_scenes, camouflaged_scenes), policy, verbose=False)
    assert a.policy == b.policy
    assert a.history == b.history
