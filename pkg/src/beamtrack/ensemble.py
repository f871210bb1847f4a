"""Stagewise boosted ensemble of echo state networks.

Weak learners are added one at a time. Each new learner is trained against
the current residual of the running ensemble on its own data subset, then
enters with the scalar weight that exactly minimizes the remaining mean
squared training error (a 1-D least-squares projection, so the recorded
error sequence can never increase). The fitted predictor is the additive
sum of weighted stages; a variant that also divides by the stage count is
kept alongside because both combination rules appear in practice.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from beamtrack.reservoir import (
    ReservoirConfig,
    ReservoirModel,
    build_reservoir,
    reservoir_step,
    ridge_readout,
    run_reservoir,
)

SUBSET_STRATEGIES = ("bootstrap", "contiguous_blocks")


@dataclass
class EnsembleConfig:
    """Stage count, subset assignment rule, and the weak-learner template."""

    weak_config: ReservoirConfig
    m1: int = 8
    subset_strategy: str = "bootstrap"

    def __post_init__(self):
        if self.m1 < 1:
            raise ValueError("m1 must be at least 1")
        if self.subset_strategy not in SUBSET_STRATEGIES:
            raise ValueError(
                f"subset_strategy must be one of {SUBSET_STRATEGIES}"
            )


@dataclass
class EnsembleModel:
    """Ordered (weight, weak model) stages plus the training-error trace."""

    stages: list = field(default_factory=list)
    fitting_errors: list = field(default_factory=list)

    @property
    def n_stages(self) -> int:
        return len(self.stages)

    @property
    def is_fitted(self) -> bool:
        return bool(self.stages)


def fit_stage_weight(residual: np.ndarray, predictions: np.ndarray) -> float:
    """Least-squares line search c = <r, p> / <p, p> over flattened arrays.

    A numerically dead learner (zero prediction energy) gets weight 0 with
    a warning instead of an error, so a degenerate stage cannot hurt.
    """
    r = np.asarray(residual, dtype=float).ravel()
    p = np.asarray(predictions, dtype=float).ravel()
    if r.shape != p.shape:
        raise ValueError("residual and predictions must match in size")
    pp = float(p @ p)
    if pp < np.finfo(float).tiny:
        warnings.warn("degenerate weak learner; stage weight set to 0",
                      RuntimeWarning)
        return 0.0
    return float(r @ p) / pp


def _subset_indices(
    strategy: str, n: int, stage: int, m1: int, rng: np.random.Generator
) -> np.ndarray:
    if strategy == "bootstrap":
        return rng.integers(0, n, size=n)
    chunks = np.array_split(np.arange(n), m1)
    if any(c.size == 0 for c in chunks):
        raise ValueError(
            f"cannot split {n} samples into {m1} nonempty contiguous blocks"
        )
    return chunks[stage]


def train_ensemble(
    cfg: EnsembleConfig,
    inputs: np.ndarray,
    targets: np.ndarray,
    rng: np.random.Generator,
) -> EnsembleModel:
    """Fit m1 weak learners stagewise against the running residual.

    Every weak learner gets fresh input and reservoir weights and runs over
    the full chronological sequence (reservoir states only make sense in
    order); the subset strategy decides which post-washout (state, residual)
    pairs enter its ridge solve. Stage weights and recorded errors are
    computed on all post-washout samples.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    weak_cfg = cfg.weak_config
    if targets.shape[0] != inputs.shape[0]:
        raise ValueError("inputs and targets must have equal length")
    if inputs.shape[0] <= weak_cfg.washout + weak_cfg.input_dim:
        raise ValueError(
            f"need more than washout + input_dim = "
            f"{weak_cfg.washout + weak_cfg.input_dim} samples, "
            f"got {inputs.shape[0]}"
        )
    washout = weak_cfg.washout
    targets_pw = targets[washout:]
    residual = targets_pw.copy()
    n_pw = residual.shape[0]

    model = EnsembleModel()
    for m in range(cfg.m1):
        weak = build_reservoir(weak_cfg, rng)
        states_pw = run_reservoir(weak, inputs)[washout:]
        idx = _subset_indices(cfg.subset_strategy, n_pw, m, cfg.m1, rng)
        weak.w_out = ridge_readout(
            states_pw[idx], residual[idx], weak_cfg.ridge_lambda
        )
        preds = states_pw @ weak.w_out.T
        c = fit_stage_weight(residual, preds)
        residual = residual - c * preds
        model.stages.append((c, weak))
        model.fitting_errors.append(float(np.mean(residual ** 2)))
    return model


def _stage_predictions(model: EnsembleModel, states, x):
    if not model.is_fitted:
        raise ValueError("ensemble has no fitted stages yet")
    if len(states) != model.n_stages:
        raise ValueError("need one reservoir state per stage")
    new_states = []
    preds = []
    for (c, weak), state in zip(model.stages, states):
        new_state = reservoir_step(state, x, weak)
        preds.append(c * (weak.w_out @ new_state))
        new_states.append(new_state)
    return preds, new_states


def ensemble_predict_sum(
    model: EnsembleModel,
    states: list,
    x: np.ndarray,
    wrap_domain: tuple[float, float] | None = None,
) -> tuple[np.ndarray, list]:
    """Additive forecast sum_m c_m p_m — the quantity the fitting minimizes.

    states holds one reservoir state per stage; each is advanced on x.
    Returns (prediction, new_states).
    """
    preds, new_states = _stage_predictions(model, states, x)
    y = np.sum(preds, axis=0)
    if wrap_domain is not None:
        lo, hi = wrap_domain
        y = lo + np.mod(y - lo, hi - lo)
    return y, new_states


def ensemble_predict(
    model: EnsembleModel,
    states: list,
    x: np.ndarray,
    wrap_domain: tuple[float, float] | None = None,
) -> tuple[np.ndarray, list]:
    """Averaged weighted forecast (1/M) sum_m c_m p_m.

    This combination rule divides the additive fit by the stage count, so
    for M > 1 it shrinks the forecast relative to the fitted predictor;
    ensemble_predict_sum is what the tracking pipeline consumes.
    """
    preds, new_states = _stage_predictions(model, states, x)
    y = np.sum(preds, axis=0) / model.n_stages
    if wrap_domain is not None:
        lo, hi = wrap_domain
        y = lo + np.mod(y - lo, hi - lo)
    return y, new_states


def initial_ensemble_states(model: EnsembleModel) -> list:
    """Zero reservoir state for every stage."""
    return [
        np.zeros(weak.config.reservoir_size) for _, weak in model.stages
    ]


def warm_up_ensemble(model: EnsembleModel, inputs: np.ndarray) -> list:
    """Run every stage over the sequence; return the final per-stage states."""
    return [
        run_reservoir(weak, inputs)[-1] for _, weak in model.stages
    ]


def save_ensemble(model: EnsembleModel, path) -> None:
    """Persist stage weights, all stage matrices, and configs as one npz."""
    if not model.is_fitted:
        raise ValueError("refusing to save an unfitted ensemble")
    arrays = {
        "schema": np.array(["beamtrack-ensemble-v1"]),
        "stage_weights": np.array([c for c, _ in model.stages]),
        "fitting_errors": np.array(model.fitting_errors),
    }
    configs = []
    for i, (_, weak) in enumerate(model.stages):
        arrays[f"stage{i}_w_in"] = weak.w_in
        arrays[f"stage{i}_w_res"] = weak.w_res
        arrays[f"stage{i}_w_out"] = weak.w_out
        configs.append(asdict(weak.config))
    arrays["configs_json"] = np.array([json.dumps(configs)])
    np.savez(path, **arrays)


def load_ensemble(path) -> EnsembleModel:
    with np.load(path, allow_pickle=False) as data:
        schema = str(data["schema"][0])
        if schema != "beamtrack-ensemble-v1":
            raise ValueError(f"unrecognized ensemble schema {schema!r}")
        weights = data["stage_weights"]
        configs = json.loads(str(data["configs_json"][0]))
        model = EnsembleModel()
        for i, (c, cfg_dict) in enumerate(zip(weights, configs)):
            weak = ReservoirModel(
                w_in=data[f"stage{i}_w_in"],
                w_res=data[f"stage{i}_w_res"],
                w_out=data[f"stage{i}_w_out"],
                config=ReservoirConfig(**cfg_dict),
            )
            model.stages.append((float(c), weak))
        model.fitting_errors = [float(e) for e in data["fitting_errors"]]
        return model
