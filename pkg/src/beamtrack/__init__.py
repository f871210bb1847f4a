"""Beamspace channel tracking toolkit.

Simulates narrowband mmWave MIMO links with uniform linear arrays at both
ends, generates slowly drifting multipath channels, and tracks the dominant
beamspace entries over time with echo state networks, boosted ensembles of
them, and greedy sparse recovery as a baseline. A small CLI drives batch
sweeps over SNR and random seeds and writes flat CSV result tables.

The orchestration-level API is re-exported here; the per-module namespaces
(channel, reservoir, ensemble, tracking, transceiver, metrics, experiment,
config, cli) carry the full surface.
"""

from beamtrack.channel import (
    ArrayGeometry,
    ClusterConfig,
    MotionDynamics,
    MotionFeatureState,
    PathSet,
    assemble_channel,
    beamspace_transform,
    generate_paths,
    generate_trajectory,
)
from beamtrack.config import (
    PREDICTORS,
    ConfigError,
    ExperimentConfig,
    load_config,
    save_config,
)
from beamtrack.ensemble import (
    EnsembleConfig,
    EnsembleModel,
    ensemble_predict,
    ensemble_predict_sum,
    load_ensemble,
    save_ensemble,
    train_ensemble,
)
from beamtrack.experiment import (
    ResultRecord,
    format_summary,
    prediction_dispersion,
    read_csv,
    run_sweep,
    run_trial,
    summarize,
    write_csv,
)
from beamtrack.metrics import nmse, rmse, tau1, tau2
from beamtrack.reservoir import (
    ReservoirConfig,
    ReservoirModel,
    build_reservoir,
    load_reservoir,
    predict,
    save_reservoir,
    train_readout,
)
from beamtrack.tracking import (
    PilotObservation,
    TrackingDataset,
    build_dataset,
    fit_predictor,
    omp_estimate,
    prepare_trial,
    track_and_evaluate,
)
from beamtrack.transceiver import (
    LinkBudget,
    benchmark_spectral_efficiency,
    link_spectral_efficiency,
)

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry",
    "ClusterConfig",
    "ConfigError",
    "EnsembleConfig",
    "EnsembleModel",
    "ExperimentConfig",
    "LinkBudget",
    "MotionDynamics",
    "MotionFeatureState",
    "PREDICTORS",
    "PathSet",
    "PilotObservation",
    "ReservoirConfig",
    "ReservoirModel",
    "ResultRecord",
    "TrackingDataset",
    "assemble_channel",
    "beamspace_transform",
    "benchmark_spectral_efficiency",
    "build_dataset",
    "build_reservoir",
    "ensemble_predict",
    "ensemble_predict_sum",
    "fit_predictor",
    "format_summary",
    "generate_paths",
    "generate_trajectory",
    "link_spectral_efficiency",
    "load_config",
    "load_ensemble",
    "load_reservoir",
    "nmse",
    "omp_estimate",
    "predict",
    "prediction_dispersion",
    "prepare_trial",
    "read_csv",
    "rmse",
    "run_sweep",
    "run_trial",
    "save_config",
    "save_ensemble",
    "save_reservoir",
    "summarize",
    "tau1",
    "tau2",
    "track_and_evaluate",
    "train_ensemble",
    "train_readout",
    "write_csv",
]
