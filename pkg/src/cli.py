"""
Command-line front end.

Subcommands:
    gen              write a synthetic scene split (PGM pairs + manifest)
    train-sft        oracle-annotate a split and fine-tune a policy on it
    train-rl         one GRPO stage on a split
    eval             score a checkpoint on a split (one CSV row on stdout)
    ablate-reward    reward-function ablation
    ablate-strategy  training-strategy ablation
    parse            parse a prompt from stdin, print it as JSON
    segment          run the simulated segmenter on one image (text or JSON prompt)

Exit codes: 0 success, 1 usage error (or a prompt that fails to parse),
2 runtime error. Errors are printed to stderr as "❌ <message>".
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

import pandas as pd

from src.config import grpo_config_from_dict, load_experiment_config, read_yaml
from src.data_sources.dataset_io import DatasetError, read_dataset, write_dataset
from src.data_sources.scene_synth import SceneProfile, make_split, parse_dims
from src.imaging.pgm import PgmError, read_image_pgm, write_mask_pgm
from src.pipelines.ablations import ablate_reward, ablate_strategy
from src.pipelines.evaluate_policy import evaluate_policy
from src.policy.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from src.policy.grammar import GrammarConstraint
from src.policy.recurrent import PolicyParams
from src.prompts.mask_prompt import FormatError, PromptStage, parse, prompt_from_dict, prompt_to_json
from src.segmenter.region_growing import SegmenterConfig, segment_prompt, segment_text
from src.training.grpo import DECODING_MODES, GrpoConfig, train_grpo
from src.training.oracle import annotate_scenes
from src.training.rewards import MetricMode
from src.training.sft import load_trajectories, save_trajectories, sft_train
from src.utils.io import load_json, save_csv

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

STAGE_CHOICES = [s.value for s in PromptStage]
PROFILE_CHOICES = [p.value for p in SceneProfile]
METRIC_CHOICES = [m.value for m in MetricMode]


class UsageError(Exception):
    """Bad command line (unknown flag, missing or invalid argument)."""


class BenchArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _constraint(decoding: str, stage: PromptStage, max_points: int) -> Optional[GrammarConstraint]:
    return GrammarConstraint(stage, max_points) if decoding == 'grammar' else None


def _segmenter_from_args(args) -> SegmenterConfig:
    return SegmenterConfig(tolerance=args.tolerance, connectivity=args.connectivity,
                           max_region_fraction=args.max_region_fraction)


def _initial_policy(ckpt: Optional[str], seed: int) -> PolicyParams:
    return load_checkpoint(Path(ckpt)) if ckpt else PolicyParams.init(seed)


def cmd_gen(args) -> int:
    profile = SceneProfile.from_name(args.profile)
    scenes = make_split(profile, args.count, args.dims, args.seed)
    write_dataset(scenes, Path(args.out), quiet=args.quiet)
    return EXIT_OK


def cmd_train_sft(args) -> int:
    scenes = read_dataset(Path(args.data))
    seg_cfg = _segmenter_from_args(args)
    out = Path(args.out)
    policy = _initial_policy(args.ckpt, args.seed)

    if args.trajectories:
        trajectories = load_trajectories(Path(args.trajectories))
        print(f"\n📊 Loaded {len(trajectories)} oracle trajectories from {args.trajectories}")
    else:
        print(f"\n📊 Annotating {len(scenes)} scenes with the oracle...")
        trajectories = annotate_scenes(scenes, seg_cfg, args.max_points)
    save_trajectories(trajectories, out / 'trajectories.jsonl')

    constraint = _constraint(args.decoding, PromptStage.BOX_AND_POINTS, args.max_points)
    policy, losses = sft_train(policy, trajectories, scenes, epochs=args.epochs, lr=args.lr,
                               batch_size=args.batch_size, seed=args.seed,
                               constraint=constraint, verbose=True)
    save_csv(pd.DataFrame({'epoch': range(1, len(losses) + 1), 'loss': losses}),
             out / 'sft_loss.csv', float_format='%.6f')
    save_checkpoint(policy, out / 'policy.bin', quiet=False)
    return EXIT_OK


def cmd_train_rl(args) -> int:
    raw = read_yaml(Path(args.config)) if args.config else {}
    overrides = {
        'stage': args.stage, 'total_steps': args.steps, 'seed': args.seed,
        'decoding': args.decoding, 'learning_rate': args.lr, 'group_size': args.group_size,
        'batch_scenes': args.batch_scenes,
    }
    raw.update({k: v for k, v in overrides.items() if v is not None})
    cfg: GrpoConfig = grpo_config_from_dict(raw)

    scenes = read_dataset(Path(args.data))
    out = Path(args.out)
    log_path = out / 'train_log.csv'
    if log_path.exists():
        log_path.unlink()
    policy = _initial_policy(args.ckpt, cfg.seed)
    policy, _ = train_grpo(
        policy, scenes, cfg, MetricMode.from_name(args.metric), stage_name=args.stage_name,
        seg_cfg=_segmenter_from_args(args), log_path=log_path,
        checkpoint_dir=out / 'checkpoints', checkpoint_every=args.checkpoint_every,
        verbose=not args.quiet,
    )
    save_checkpoint(policy, out / 'policy.bin', quiet=args.quiet)
    return EXIT_OK


def cmd_eval(args) -> int:
    policy = load_checkpoint(Path(args.ckpt))
    scenes = read_dataset(Path(args.data))
    stage = PromptStage.from_name(args.stage)
    evaluation = evaluate_policy(policy, scenes, stage, _segmenter_from_args(args),
                                 _constraint(args.decoding, stage, args.max_points), workers=args.workers)
    if args.header:
        print(evaluation.report.csv_header())
    print(evaluation.report.to_csv_row())
    return EXIT_OK


def _run_ablation(args, runner) -> int:
    cfg = load_experiment_config(Path(args.config))
    if args.out:
        cfg = replace(cfg, out_dir=str(Path(args.out)))
    runner(cfg, workers=args.workers, deterministic=args.deterministic, verbose=not args.quiet)
    return EXIT_OK


def cmd_ablate_reward(args) -> int:
    return _run_ablation(args, ablate_reward)


def cmd_ablate_strategy(args) -> int:
    return _run_ablation(args, ablate_strategy)


def cmd_parse(args) -> int:
    data = sys.stdin.buffer.read() if args.input == '-' else Path(args.input).read_bytes()
    try:
        prompt = parse(data, PromptStage.from_name(args.stage))
    except FormatError as e:
        print(e.category.value)
        return EXIT_USAGE
    print(prompt_to_json(prompt))
    return EXIT_OK


def cmd_segment(args) -> int:
    image = read_image_pgm(Path(args.image))
    seg_cfg = _segmenter_from_args(args)
    if args.prompt_json is not None:
        data = load_json(Path(args.prompt_json))
        if not isinstance(data, dict):
            raise ValueError(f"Prompt JSON must be an object: {args.prompt_json}")
        result = segment_prompt(image, prompt_from_dict(data), seg_cfg)
    else:
        if args.prompt is not None:
            text = args.prompt
        elif args.prompt_file is not None:
            text = Path(args.prompt_file).read_text(encoding='utf-8')
        else:
            text = sys.stdin.read()
        result = segment_text(image, text, PromptStage.from_name(args.stage), seg_cfg)
    write_mask_pgm(result.mask, Path(args.out))
    print(f"{result.outcome.value},{result.mask.count()}")
    return EXIT_OK


def _add_segmenter_flags(p: argparse.ArgumentParser) -> None:
    defaults = SegmenterConfig()
    p.add_argument('--tolerance', type=int, default=defaults.tolerance,
                   help=f'Region-growing intensity tolerance (default: {defaults.tolerance})')
    p.add_argument('--connectivity', type=int, choices=[4, 8], default=defaults.connectivity,
                   help=f'Pixel connectivity (default: {defaults.connectivity})')
    p.add_argument('--max-region-fraction', type=float, default=defaults.max_region_fraction,
                   help=f'Flood guard as a share of the box or frame (default: {defaults.max_region_fraction})')


def build_parser() -> BenchArgumentParser:
    parser = BenchArgumentParser(
        prog='bench',
        description='Learn mask prompts for a simulated segmenter with GRPO',
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest='command', metavar='COMMAND', parser_class=BenchArgumentParser)
    sub.required = True

    p = sub.add_parser('gen', help='Generate a synthetic scene split')
    p.add_argument('--profile', required=True, choices=PROFILE_CHOICES, help='Scene profile')
    p.add_argument('--count', type=int, required=True, help='Number of scenes')
    p.add_argument('--dims', type=parse_dims, default=(64, 64), help='Scene size WIDTHxHEIGHT (default: 64x64)')
    p.add_argument('--seed', type=int, default=0, help='Base seed; scene i uses seed + i (default: 0)')
    p.add_argument('--out', required=True, help='Output directory')
    p.add_argument('--quiet', action='store_true', help='Suppress progress lines')
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser('train-sft', help='Supervised fine-tuning on oracle trajectories')
    p.add_argument('--data', required=True, help='Training split directory')
    p.add_argument('--out', required=True, help='Output directory (policy.bin, trajectories.jsonl, sft_loss.csv)')
    p.add_argument('--ckpt', help='Initial checkpoint (default: fresh policy from --seed)')
    p.add_argument('--epochs', type=int, default=1, help='Training epochs (default: 1)')
    p.add_argument('--lr', type=float, default=1e-3, help='Learning rate (default: 0.001)')
    p.add_argument('--batch-size', type=int, default=8, help='Trajectories per update (default: 8)')
    p.add_argument('--seed', type=int, default=0, help='Seed for init and shuffling (default: 0)')
    p.add_argument('--max-points', type=int, default=6, help='Oracle point budget (default: 6)')
    p.add_argument('--trajectories', help='Reuse a trajectories.jsonl instead of annotating (default: annotate)')
    p.add_argument('--decoding', choices=DECODING_MODES, default='free', help='Softmax masking (default: free)')
    _add_segmenter_flags(p)
    p.set_defaults(func=cmd_train_sft)

    p = sub.add_parser('train-rl', help='One GRPO training stage')
    p.add_argument('--data', required=True, help='Training split directory')
    p.add_argument('--out', required=True, help='Output directory (policy.bin, train_log.csv)')
    p.add_argument('--config', help='JSON/YAML file with GrpoConfig fields')
    p.add_argument('--ckpt', help='Initial checkpoint, also the frozen reference (default: fresh policy)')
    p.add_argument('--stage', choices=STAGE_CHOICES, help='Prompt grammar (default: box)')
    p.add_argument('--steps', type=int, help='Number of GRPO steps (default: 200)')
    p.add_argument('--seed', type=int, help='Rollout and init seed (default: 0)')
    p.add_argument('--lr', type=float, help='Learning rate (default: 0.001)')
    p.add_argument('--group-size', type=int, help='Rollouts per scene (default: 4)')
    p.add_argument('--batch-scenes', type=int, help='Scenes per step (default: 24)')
    p.add_argument('--decoding', choices=DECODING_MODES, help='free or grammar (default: free)')
    p.add_argument('--metric', choices=METRIC_CHOICES, default='combined', help='Segmentation reward (default: combined)')
    p.add_argument('--stage-name', default='rl', help='Stage label in train_log.csv (default: rl)')
    p.add_argument('--checkpoint-every', type=int, default=0, help='Checkpoint period in steps (default: never)')
    p.add_argument('--quiet', action='store_true', help='Suppress progress lines')
    _add_segmenter_flags(p)
    p.set_defaults(func=cmd_train_rl)

    p = sub.add_parser('eval', help='Score a checkpoint on a split')
    p.add_argument('--ckpt', required=True, help='Policy checkpoint')
    p.add_argument('--data', required=True, help='Evaluation split directory')
    p.add_argument('--stage', choices=STAGE_CHOICES, default='box', help='Prompt grammar (default: box)')
    p.add_argument('--decoding', choices=DECODING_MODES, default='grammar', help='free or grammar (default: grammar)')
    p.add_argument('--max-points', type=int, default=6, help='Grammar point budget (default: 6)')
    p.add_argument('--workers', type=int, default=1, help='Processes for metric computation (default: 1)')
    p.add_argument('--header', action='store_true', help='Print the CSV header line first')
    _add_segmenter_flags(p)
    p.set_defaults(func=cmd_eval)

    for name, func, text in (('ablate-reward', cmd_ablate_reward, 'Reward-function ablation'),
                             ('ablate-strategy', cmd_ablate_strategy, 'Training-strategy ablation')):
        p = sub.add_parser(name, help=text)
        p.add_argument('--config', required=True, help='Experiment config (YAML/JSON, or a full settings file)')
        p.add_argument('--out', help='Output directory (overrides the config)')
        p.add_argument('--workers', type=int, default=1, help='Seeds run in parallel processes (default: 1)')
        p.add_argument('--deterministic', action='store_true', help='Run everything sequentially')
        p.add_argument('--quiet', action='store_true', help='Suppress progress lines')
        p.set_defaults(func=func)

    p = sub.add_parser('parse', help='Parse a prompt and print it as JSON')
    p.add_argument('--stage', choices=STAGE_CHOICES, default='box', help='Prompt grammar (default: box)')
    p.add_argument('--input', default='-', help="Input file ('-' = stdin, default)")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser('segment', help='Segment one image from a prompt')
    p.add_argument('--image', required=True, help='Input PGM image')
    source = p.add_mutually_exclusive_group()
    source.add_argument('--prompt', help='Prompt text (default: read stdin)')
    source.add_argument('--prompt-file', help='File holding the prompt text')
    source.add_argument('--prompt-json', help='File holding the prompt as JSON (think, bbox, points, labels)')
    p.add_argument('--stage', choices=STAGE_CHOICES, default='box',
                   help='Prompt grammar for text prompts (default: box)')
    p.add_argument('--out', required=True, help='Output mask PGM')
    _add_segmenter_flags(p)
    p.set_defaults(func=cmd_segment)

    for subparser in sub.choices.values():
        subparser.set_defaults(command_prog=subparser.prog)
    return parser


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one subcommand.

    Returns:
        Exit code: 0 success, 1 usage error, 2 runtime error
    """
    argv: List[str] = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args, extras = parser.parse_known_args(argv)
        if extras:
            raise UsageError(f"{args.command_prog}: unrecognized arguments: {' '.join(extras)}")
    except UsageError as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        # --help
        return int(e.code or 0)

    try:
        return args.func(args)
    except (OSError, RuntimeError, DatasetError, PgmError, CheckpointError, ValueError, KeyError) as e:
        message = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"❌ {message}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == '__main__':
    sys.exit(cli_main())
