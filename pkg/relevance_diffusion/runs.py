#!/usr/bin/env python3
"""
Experiment drivers behind the CLI: each writes its artifacts plus a manifest into an output directory
"""

import os
import time

import numpy as np

from relevance_diffusion.errors import NumericalAbort
from relevance_diffusion.core.diagnostics import gradient_suite, GRADCHECK_TOLERANCE
from relevance_diffusion.core.sampler import generate
from relevance_diffusion.core.tensor import RngStream, STREAM_SAMPLE, STREAM_EVAL
from relevance_diffusion.core.trainer import (
    TRACE_COLUMNS, train_loop, steps_to_threshold, final_smoothed_loss
)
from relevance_diffusion.datasets import create_dataset
from relevance_diffusion.evaluation import evaluate, EvalReport
from relevance_diffusion.utils.artifacts import OutputDirLock, RunManifest, write_csv, write_json
from relevance_diffusion.utils.checkpoint import load_checkpoint, save_checkpoint
from relevance_diffusion.utils.config_manager import config_hash


AUTO_THRESHOLD_MARGIN = 1.05
REFERENCE_SPEED_RATIO = 0.5


def dataset_for(cfg, **overrides):
    """Regenerate the dataset a config describes (keyword overrides win)"""
    data_args = {
        "name": cfg.dataset, "seed": cfg.dataset_seed, "N": cfg.N,
        "D": cfg.D, "k": cfg.k, "d": cfg.d, "signal_noise": cfg.signal_noise,
    }
    data_args.update({key: value for key, value in overrides.items() if value is not None})
    return create_dataset(**data_args), data_args


def write_trace(path, trace, record_timing=True):
    return write_csv(path, TRACE_COLUMNS, trace.csv_rows(record_timing=record_timing))


def _train_into(cfg, dataset, mode, out_dir, manifest, prefix="", resume=None, verbose=True):
    """Train one mode, writing checkpoint and trace; abort diagnostics go to abort.json"""
    try:
        checkpoint, trace = train_loop(cfg, dataset, mode=mode, resume=resume, verbose=verbose)
    except NumericalAbort as e:
        manifest.add(write_json(os.path.join(out_dir, f"{prefix}abort.json"),
                                {"error": str(e), "diagnostics": _jsonable(e.diagnostics)}))
        manifest.write(out_dir)
        raise

    checkpoint_path = manifest.add(save_checkpoint(checkpoint, os.path.join(out_dir, f"{prefix}checkpoint.json")))
    trace_path = manifest.add(write_trace(os.path.join(out_dir, f"{prefix}trace.csv"), trace, cfg.record_timing))
    return checkpoint, trace, checkpoint_path, trace_path


def _jsonable(data):
    out = {}
    for key, value in data.items():
        if isinstance(value, (np.floating, float)):
            out[key] = float(value) if np.isfinite(value) else str(value)
        elif isinstance(value, np.integer):
            out[key] = int(value)
        else:
            out[key] = value
    return out


def run_train(cfg, mode, out_dir, resume_path=None, visualize=False, verbose=True):
    """
    Train and write checkpoint.json, trace.csv and manifest.json

    Returns:
        dict: Run statistics and artifact paths

    Raises:
        NumericalAbort: After writing abort.json
    """
    start_time = time.time()
    with OutputDirLock(out_dir):
        manifest = RunManifest(config_hash=config_hash(cfg), seed=cfg.seed, config=cfg.to_dict())
        resume = load_checkpoint(resume_path) if resume_path else None
        dataset, data_args = dataset_for(cfg)
        if verbose:
            print(f"Generated {data_args['name']} dataset: N={dataset.N}, D={dataset.D}, d={dataset.d}")

        checkpoint, trace, checkpoint_path, trace_path = _train_into(
            cfg, dataset, mode, out_dir, manifest, resume=resume, verbose=verbose)

        if visualize:
            from relevance_diffusion.evaluation import learned_mask
            from relevance_diffusion.visualization import plot_loss_trace, plot_mask, save_figure
            if trace.rows:
                manifest.add(save_figure(plot_loss_trace(trace), os.path.join(out_dir, "trace.png")))
            if dataset.has_both_classes:
                _, held_out = dataset.split()
                mask = learned_mask(checkpoint.phi_mask, held_out.x)
                manifest.add(save_figure(plot_mask(mask, dataset.truth_mask), os.path.join(out_dir, "mask.png")))

        manifest_path = manifest.write(out_dir)

    return {
        "mode": mode,
        "steps": checkpoint.step,
        "rows": len(trace),
        "final_ema_denoise": trace.ema_denoise[-1] if trace.rows else None,
        "checkpoint": checkpoint_path,
        "trace": trace_path,
        "manifest": manifest_path,
        "elapsed": time.time() - start_time,
    }


def run_sample(checkpoint_path, n, seed, out_dir, verbose=True):
    """
    Generate n samples of W into samples.csv with a samples.json sidecar

    Raises:
        CheckpointError: Missing or incompatible checkpoint
        NumericalAbort: Non-finite sample values
    """
    with OutputDirLock(out_dir):
        checkpoint = load_checkpoint(checkpoint_path)
        manifest = RunManifest(config_hash=config_hash(checkpoint.config), seed=seed,
                               config=checkpoint.config.to_dict())
        sched = checkpoint.config.build_schedule()
        if verbose:
            print(f"Sampling {n} rows from {checkpoint_path} (T={sched.T})")

        batch = generate(checkpoint.theta, sched, n, RngStream(seed, STREAM_SAMPLE), mode=checkpoint.mode,
                         verbose=verbose)
        header = [f"x{j}" for j in range(batch.w.shape[1])]
        samples_path = manifest.add(write_csv(os.path.join(out_dir, "samples.csv"), header,
                                              ([float(v) for v in row] for row in batch.w)))
        sidecar = dict(batch.sidecar(), checkpoint=os.path.abspath(checkpoint_path))
        sidecar_path = manifest.add(write_json(os.path.join(out_dir, "samples.json"), sidecar))
        manifest_path = manifest.write(out_dir)
    return {"samples": samples_path, "sidecar": sidecar_path, "manifest": manifest_path, "n": n}


def run_eval(checkpoint_path, n_gen, seed, out_dir, dataset_overrides=None, visualize=False, verbose=True):
    """
    Regenerate the dataset, evaluate and write report.json + per_coordinate.csv

    Returns:
        (EvalReport, dict of artifact paths)
    """
    with OutputDirLock(out_dir):
        checkpoint = load_checkpoint(checkpoint_path)
        cfg = checkpoint.config
        manifest = RunManifest(config_hash=config_hash(cfg), seed=seed, config=cfg.to_dict())
        dataset, data_args = dataset_for(cfg, **(dataset_overrides or {}))
        if verbose:
            print(f"Evaluating {checkpoint_path} on {data_args['name']} dataset (seed {data_args['seed']})")

        report = evaluate(checkpoint, dataset, n_gen, RngStream(seed, STREAM_EVAL), verbose=verbose)
        report_data = dict(report.to_dict(), dataset=data_args)
        paths = {
            "report": manifest.add(write_json(os.path.join(out_dir, "report.json"), report_data)),
            "per_coordinate": manifest.add(write_csv(os.path.join(out_dir, "per_coordinate.csv"),
                                                     EvalReport.PER_COORDINATE_COLUMNS,
                                                     report.per_coordinate_rows())),
        }
        if visualize:
            from relevance_diffusion.visualization import plot_mask, plot_sample_histograms, save_figure
            sched = cfg.build_schedule()
            w = generate(checkpoint.theta, sched, n_gen, RngStream(seed, STREAM_EVAL).derive(1)).w
            _, held_out = dataset.split()
            paths["mask_plot"] = manifest.add(save_figure(plot_mask(report.mask_mean, dataset.truth_mask),
                                                          os.path.join(out_dir, "mask.png")))
            paths["samples_plot"] = manifest.add(save_figure(
                plot_sample_histograms(w, dataset.truth_mask, held_out.x), os.path.join(out_dir, "samples.png")))
        paths["manifest"] = manifest.write(out_dir)
    return report, paths


def run_gradcheck(cfg, corrupt=False):
    """
    Gradient suite over the three losses

    Returns:
        (dict of GradReports, passed flag)
    """
    reports = gradient_suite(cfg, corrupt=corrupt)
    passed = all(report.passed(GRADCHECK_TOLERANCE) for report in reports.values())
    return reports, passed


def speed_threshold(cfg, trace_xddpm, trace_ddpm):
    """Configured threshold, or the level both runs end up reaching"""
    if cfg.loss_threshold is not None:
        return float(cfg.loss_threshold)
    return AUTO_THRESHOLD_MARGIN * max(final_smoothed_loss(trace_xddpm), final_smoothed_loss(trace_ddpm))


def run_compare_speed(cfg, out_dir, visualize=False, verbose=True):
    """
    Train both modes on identical data and seeds; write speed.json

    Returns:
        dict: The speed.json contents
    """
    with OutputDirLock(out_dir):
        manifest = RunManifest(config_hash=config_hash(cfg), seed=cfg.seed, config=cfg.to_dict())
        dataset, _ = dataset_for(cfg)

        runs = {}
        for mode, prefix in (("xddpm", "xddpm_"), ("ddpm-baseline", "ddpm_")):
            runs[mode] = _train_into(cfg, dataset, mode, out_dir, manifest, prefix=prefix, verbose=verbose)

        trace_x, trace_d = runs["xddpm"][1], runs["ddpm-baseline"][1]
        if trace_x.rows and trace_d.rows:
            threshold = speed_threshold(cfg, trace_x, trace_d)
            steps_x = steps_to_threshold(trace_x, threshold)
            steps_d = steps_to_threshold(trace_d, threshold)
        else:
            threshold, steps_x, steps_d = cfg.loss_threshold, None, None
        ratio = steps_x / steps_d if steps_x is not None and steps_d is not None else None

        result = {
            "steps_xddpm": steps_x,
            "steps_ddpm": steps_d,
            "ratio": ratio,
            "reference_ratio": REFERENCE_SPEED_RATIO,
            "threshold": threshold,
            "restricted_to_relevant": trace_x.has_relevant,
            "trace_xddpm": runs["xddpm"][3],
            "trace_ddpm": runs["ddpm-baseline"][3],
            "checkpoint_xddpm": runs["xddpm"][2],
            "checkpoint_ddpm": runs["ddpm-baseline"][2],
        }
        manifest.add(write_json(os.path.join(out_dir, "speed.json"), result))
        if visualize and trace_x.rows and trace_d.rows:
            from relevance_diffusion.visualization import plot_speed_comparison, save_figure
            manifest.add(save_figure(plot_speed_comparison(trace_x, trace_d, threshold),
                                     os.path.join(out_dir, "speed.png")))
        manifest.write(out_dir)
    return result
