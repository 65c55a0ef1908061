#!/usr/bin/env python3
"""
Command Line Interface for Relevance Diffusion
"""

import sys
import json
import time
import click

from relevance_diffusion.errors import ConfigError, CheckpointError, NumericalAbort
from relevance_diffusion.core.diagnostics import TINY_MODEL, GRADCHECK_TOLERANCE
from relevance_diffusion.datasets import get_available_datasets
from relevance_diffusion.runs import run_train, run_sample, run_eval, run_gradcheck, run_compare_speed
from relevance_diffusion.utils.checkpoint import MODES
from relevance_diffusion.utils.config_manager import (
    TrainConfig, load_config, config_from_dict, list_presets, load_preset, save_preset, delete_preset,
    get_preset_path
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2


def list_datasets():
    """List all available dataset generators with descriptions"""
    return {name: generator.__doc__.strip().splitlines()[0] for name, generator in get_available_datasets().items()}


def _resolve_config(ctx, config_path, preset, seed=None, quiet=False):
    """Config from --preset or --config (defaults otherwise), with --seed applied"""
    try:
        if preset:
            click.echo(f"Loading preset: {preset}")
            cfg = load_preset(preset)
        else:
            cfg = load_config(config_path, verbose=not quiet and config_path is not None)
        if seed is not None:
            cfg = cfg.replace(seed=seed).validate()
    except ConfigError as e:
        click.echo(f"Config error: {e}", err=True)
        ctx.exit(EXIT_USAGE)
    return cfg


# Create a group for all commands
@click.group()
@click.version_option(package_name='relevance_diffusion')
def cli():
    """Relevance Diffusion - denoise only the features that explain a signal."""
    pass


@cli.command()
@click.option('--config', 'config_path', type=click.Path(), help='JSON config file')
@click.option('--preset', type=str, help='Use a saved preset instead of --config')
@click.option('--mode', type=click.Choice(MODES), default='xddpm', help='Training objective')
@click.option('--out', 'out_dir', type=click.Path(), required=True, help='Output directory')
@click.option('--seed', type=int, help='Override the config seed')
@click.option('--resume', type=click.Path(), help='Checkpoint to continue from')
@click.option('--save-preset', 'new_preset', type=str, help='Save the effective config as a preset')
@click.option('--visualize/--no-visualize', default=False, help='Write loss and mask plots')
@click.option('--quiet', is_flag=True, help='No progress output')
@click.pass_context
def train(ctx, config_path, preset, mode, out_dir, seed, resume, new_preset, visualize, quiet):
    """Train a model and write checkpoint.json, trace.csv and manifest.json."""
    cfg = _resolve_config(ctx, config_path, preset, seed, quiet)

    if new_preset:
        preset_path = save_preset(new_preset, cfg)
        click.echo(f"Saved preset to {preset_path}")

    try:
        stats = run_train(cfg, mode, out_dir, resume_path=resume, visualize=visualize, verbose=not quiet)
    except NumericalAbort as e:
        click.echo(f"Training aborted: {e} (diagnostics in {out_dir})", err=True)
        ctx.exit(EXIT_NUMERICAL)
    except (ConfigError, CheckpointError, ValueError, RuntimeError) as e:
        click.echo(f"Error: {e}", err=True)
        ctx.exit(EXIT_USAGE)

    click.echo(f"Trained {stats['steps']} steps in {stats['elapsed']:.2f} seconds")
    if stats['final_ema_denoise'] is not None:
        click.echo(f"Final smoothed denoise loss: {stats['final_ema_denoise']:.4f}")
    click.echo(f"Checkpoint: {stats['checkpoint']}")


@cli.command()
@click.option('--checkpoint', 'checkpoint_path', type=click.Path(), required=True, help='Checkpoint file')
@click.option('--n', 'n', type=click.IntRange(min=1), default=1000, help='Number of samples')
@click.option('--seed', type=click.IntRange(min=0, max=2 ** 64 - 1), default=0, help='Sampling seed')
@click.option('--out', 'out_dir', type=click.Path(), required=True, help='Output directory')
@click.option('--quiet', is_flag=True, help='No progress output')
@click.pass_context
def sample(ctx, checkpoint_path, n, seed, out_dir, quiet):
    """Generate samples of W and write samples.csv plus a JSON sidecar."""
    try:
        stats = run_sample(checkpoint_path, n, seed, out_dir, verbose=not quiet)
    except CheckpointError as e:
        click.echo(f"Checkpoint error: {e}", err=True)
        ctx.exit(EXIT_USAGE)
    except NumericalAbort as e:
        click.echo(f"Sampling aborted: {e}", err=True)
        ctx.exit(EXIT_NUMERICAL)
    except (ValueError, RuntimeError) as e:
        click.echo(f"Error: {e}", err=True)
        ctx.exit(EXIT_USAGE)
    click.echo(f"Wrote {stats['n']} samples to {stats['samples']}")


@cli.command()
@click.option('--checkpoint', 'checkpoint_path', type=click.Path(), required=True, help='Checkpoint file')
@click.option('--n', 'n_gen', type=click.IntRange(min=20), default=2000, help='Number of generated samples')
@click.option('--seed', type=click.IntRange(min=0, max=2 ** 64 - 1), default=0, help='Evaluation seed')
@click.option('--out', 'out_dir', type=click.Path(), required=True, help='Output directory')
@click.option('--dataset', type=click.Choice(sorted(get_available_datasets())),
              help='Dataset generator (defaults to the checkpoint config)')
@click.option('--data-seed', type=int, help='Dataset seed (defaults to the checkpoint config)')
@click.option('--data-n', type=int, help='Dataset size (defaults to the checkpoint config)')
@click.option('--visualize/--no-visualize', default=False, help='Write mask and histogram plots')
@click.option('--quiet', is_flag=True, help='No progress output')
@click.pass_context
def evaluate(ctx, checkpoint_path, n_gen, seed, out_dir, dataset, data_seed, data_n, visualize, quiet):
    """Evaluate a checkpoint and write report.json and per_coordinate.csv."""
    overrides = {"name": dataset, "seed": data_seed, "N": data_n}
    try:
        report, paths = run_eval(checkpoint_path, n_gen, seed, out_dir, dataset_overrides=overrides,
                                 visualize=visualize, verbose=not quiet)
    except CheckpointError as e:
        click.echo(f"Checkpoint error: {e}", err=True)
        ctx.exit(EXIT_USAGE)
    except NumericalAbort as e:
        click.echo(f"Evaluation aborted: {e}", err=True)
        ctx.exit(EXIT_NUMERICAL)
    except (ValueError, RuntimeError) as e:
        click.echo(f"Error: {e}", err=True)
        ctx.exit(EXIT_USAGE)

    if report.mask_auc is not None:
        click.echo(f"Mask AUC: {report.mask_auc:.4f}")
        click.echo(f"Denoiser relevance AUC: {report.denoiser_auc:.4f}")
        click.echo(f"Max |corr| irrelevant/relevant: {report.max_abs_cross_corr:.4f}")
    click.echo(f"Predicted pass-through variance: {report.predicted_irrelevant_var:.4f}")
    click.echo(f"Report: {paths['report']}")


@cli.command()
@click.option('--config', 'config_path', type=click.Path(), help='JSON config file (tiny model if omitted)')
@click.option('--corrupt-gradient', is_flag=True, hidden=True, help='Perturb analytic gradients')
@click.pass_context
def gradcheck(ctx, config_path, corrupt_gradient):
    """Check analytic gradients of every loss against central differences."""
    start_time = time.time()
    if config_path is None:
        cfg = config_from_dict(TINY_MODEL)
    else:
        cfg = _resolve_config(ctx, config_path, None)

    try:
        reports, passed = run_gradcheck(cfg, corrupt=corrupt_gradient)
    except ValueError as e:
        click.echo(f"Gradient check error: {e}", err=True)
        ctx.exit(EXIT_USAGE)
    for name, report in reports.items():
        status = "ok" if report.passed(GRADCHECK_TOLERANCE) else "FAILED"
        click.echo(f"{name}: max relative error {report.global_max_rel_err:.3e} "
                   f"over {report.probes} probes [{status}]")
        for block, err in report.per_block_max_rel_err.items():
            click.echo(f"  • {block}: {err:.3e}")
    click.echo(f"Gradient check finished in {time.time() - start_time:.2f} seconds")
    if not passed:
        ctx.exit(EXIT_USAGE)


@cli.command(name='compare-speed')
@click.option('--config', 'config_path', type=click.Path(), help='JSON config file')
@click.option('--preset', type=str, help='Use a saved preset instead of --config')
@click.option('--out', 'out_dir', type=click.Path(), required=True, help='Output directory')
@click.option('--seed', type=int, help='Override the config seed')
@click.option('--visualize/--no-visualize', default=False, help='Write a loss comparison plot')
@click.option('--quiet', is_flag=True, help='No progress output')
@click.pass_context
def compare_speed(ctx, config_path, preset, out_dir, seed, visualize, quiet):
    """Train both objectives on identical data and compare steps to a loss threshold."""
    cfg = _resolve_config(ctx, config_path, preset, seed, quiet)
    try:
        result = run_compare_speed(cfg, out_dir, visualize=visualize, verbose=not quiet)
    except NumericalAbort as e:
        click.echo(f"Training aborted: {e} (diagnostics in {out_dir})", err=True)
        ctx.exit(EXIT_NUMERICAL)
    except (ValueError, RuntimeError) as e:
        click.echo(f"Error: {e}", err=True)
        ctx.exit(EXIT_USAGE)

    click.echo(f"Threshold: {result['threshold']}")
    click.echo(f"Steps to threshold: xddpm={result['steps_xddpm']}, ddpm={result['steps_ddpm']}")
    if result['ratio'] is not None:
        click.echo(f"Ratio xddpm/ddpm: {result['ratio']:.3f} (reference {result['reference_ratio']})")
    else:
        click.echo("Ratio: n/a (threshold not reached by both runs)")


@cli.command(name='show-config')
@click.option('--config', 'config_path', type=click.Path(), help='JSON config file')
@click.pass_context
def show_config(ctx, config_path):
    """Print the effective config (defaults merged with the file)."""
    cfg = _resolve_config(ctx, config_path, None, quiet=True)
    click.echo(json.dumps(cfg.to_dict(), indent=2))


@cli.command(name='list-datasets')
def list_available_datasets():
    """List all available synthetic dataset generators."""
    click.echo("Available datasets:")
    for name, desc in list_datasets().items():
        click.echo(f"  • {name}: {desc}")


@cli.command(name='show-presets')
def show_presets():
    """List all available presets."""
    presets = list_presets()
    if not presets:
        click.echo("No presets found.")
        return

    click.echo("Available presets:")
    for preset in presets:
        click.echo(f"  • {preset}")


@cli.command(name='show-preset')
@click.argument('preset_name')
@click.pass_context
def show_preset(ctx, preset_name):
    """Show the settings of a specific preset."""
    try:
        cfg = load_preset(preset_name)
    except ConfigError as e:
        click.echo(f"Error: {e}", err=True)
        ctx.exit(EXIT_USAGE)

    click.echo(f"Preset: {preset_name} ({get_preset_path(preset_name)})")
    defaults = TrainConfig().to_dict()
    for key, value in cfg.to_dict().items():
        marker = "" if value == defaults[key] else " *"
        click.echo(f"  • {key}: {value}{marker}")


@cli.command(name='delete-preset')
@click.argument('preset_name')
@click.pass_context
def delete_preset_command(ctx, preset_name):
    """Delete a preset."""
    if delete_preset(preset_name):
        click.echo(f"Preset '{preset_name}' deleted")
    else:
        click.echo(f"Preset '{preset_name}' not found", err=True)
        ctx.exit(EXIT_USAGE)


def main(args=None):
    """Console entry point; usage errors exit 1 and numerical aborts exit 2"""
    try:
        code = cli.main(args=args, prog_name="relevance-diffusion", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except click.Abort:
        click.echo("Aborted!", err=True)
        return EXIT_USAGE
    return code if isinstance(code, int) else EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
