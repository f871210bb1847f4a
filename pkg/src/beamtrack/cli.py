"""Command-line driver: generate / train / evaluate / sweep / summarize.

Exit codes: 0 success, 2 configuration error, 3 I/O or results-file error.
"""

import argparse
import json
import sys

import numpy as np

from .channel import wrap_interval
from .config import PREDICTORS, ConfigError, ExperimentConfig, load_config
from .ensemble import EnsembleModel, save_ensemble
from .experiment import (
    derived_rng,
    format_summary,
    read_csv,
    run_sweep,
    summarize,
    write_csv,
)
from .reservoir import save_reservoir
from .tracking import fit_predictor, prepare_trial

_TRAINABLE = ("erm_xavier", "erm_random", "ensemble")


class _DataError(Exception):
    """Results-file problem (schema mismatch, empty file): exit code 3."""


def _load_cfg(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        cfg.master_seed = args.seed
    if getattr(args, "trials", None) is not None:
        cfg.trials = args.trials
    cfg.validate()
    return cfg


def _check_predictor(name: str, allowed=PREDICTORS) -> str:
    if name is None:
        raise ConfigError(
            f"--predictor is required; valid names: {', '.join(allowed)}"
        )
    if name not in allowed:
        raise ConfigError(
            f"unknown predictor {name!r}; valid names: {', '.join(allowed)}"
        )
    return name


def cmd_generate(args) -> int:
    """Draw trajectories and tracked true channels to an .npz archive."""
    cfg = _load_cfg(args)
    out = args.out or f"{cfg.scenario_id}-trials.npz"
    payload = {
        "meta": np.array(json.dumps({
            "schema": "beamtrack-trials-v1",
            "scenario": cfg.scenario_id,
            "trials": cfg.trials,
            "master_seed": cfg.master_seed,
        })),
    }
    for t in range(cfg.trials):
        chan_tag = 0 if cfg.channel_seed_mode == "shared" else t
        trial = prepare_trial(
            cfg,
            derived_rng(cfg.master_seed, "channel", chan_tag),
            derived_rng(cfg.master_seed, "noise", chan_tag),
        )
        # the full feature trajectory is the first window plus every
        # one-step-ahead target; wrapping restores physical angles from
        # the per-window charts
        head = trial.dataset.inputs[0].reshape(cfg.n_delay, -1)
        payload[f"trial{t}_trajectory"] = wrap_interval(
            np.vstack([head, trial.dataset.targets]), -0.5, 0.5
        )
        payload[f"trial{t}_channels"] = np.stack(trial.true_channels)
    np.savez(out, **payload)
    print(f"wrote {cfg.trials} trials to {out}")
    return 0


def cmd_train(args) -> int:
    """Fit one predictor on the trial-0 dataset and serialize it."""
    cfg = _load_cfg(args)
    predictor = _check_predictor(args.predictor, _TRAINABLE)
    chan_tag = 0
    trial = prepare_trial(
        cfg,
        derived_rng(cfg.master_seed, "channel", chan_tag),
        derived_rng(cfg.master_seed, "noise", chan_tag),
    )
    fit_rng = derived_rng(cfg.master_seed, "fit", predictor, 0)
    fitted = fit_predictor(cfg, predictor, trial.dataset, fit_rng)
    out = args.out or f"{cfg.scenario_id}-{predictor}.npz"
    if isinstance(fitted, EnsembleModel):
        save_ensemble(fitted, out)
    else:
        save_reservoir(fitted, out)
    print(f"trained {predictor} and wrote model to {out}")
    return 0


def cmd_evaluate(args) -> int:
    """Run the sweep grid for a single predictor."""
    cfg = _load_cfg(args)
    predictor = _check_predictor(args.predictor)
    cfg.predictors = [predictor]
    cfg.validate()
    records = run_sweep(cfg, jobs=args.jobs, timing=args.timing)
    out = args.out or cfg.output_path
    write_csv(records, out)
    print(f"wrote {len(records)} records to {out}")
    print(format_summary(summarize(records)))
    return 0


def cmd_sweep(args) -> int:
    """Run the full trials x SNR x predictors grid."""
    cfg = _load_cfg(args)
    records = run_sweep(cfg, jobs=args.jobs, timing=args.timing)
    out = args.out or cfg.output_path
    write_csv(records, out)
    print(f"wrote {len(records)} records to {out}")
    print(format_summary(summarize(records)))
    return 0


def cmd_summarize(args) -> int:
    """Recompute the comparison report from a results CSV."""
    try:
        records = read_csv(args.results)
    except ValueError as exc:
        raise _DataError(str(exc)) from exc
    print(format_summary(summarize(records)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beamtrack",
        description=(
            "Beamspace channel tracking experiments: reservoir predictors, "
            "a boosted ensemble, and sparse-recovery baselines over a "
            "clustered mmWave channel."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, jobs=False, predictor=False, timing=False):
        p.add_argument("--config", help="path to a JSON experiment config")
        p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--trials", type=int, help="override trial count")
        p.add_argument("--out", help="output path")
        if predictor:
            p.add_argument("--predictor", help="predictor name")
        if jobs:
            p.add_argument("--jobs", type=int, default=1,
                           help="worker processes for trials (default 1)")
            p.add_argument("--timing", action="store_true",
                           help="record wall_time per predictor-trial "
                                "(breaks byte-identical reruns)")

    p = sub.add_parser("generate",
                       help="draw trajectories and channels to a file")
    common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="fit one predictor and serialize it")
    common(p, predictor=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate",
                       help="run the grid for a single predictor")
    common(p, jobs=True, predictor=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="run the full experiment grid")
    common(p, jobs=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("summarize",
                       help="recompute the report from a results CSV")
    p.add_argument("results", help="path to a results CSV")
    p.set_defaults(func=cmd_summarize)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except _DataError as exc:
        print(f"results error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
