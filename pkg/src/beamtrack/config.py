"""Experiment configuration: defaults, JSON round-trip, strict validation.

The default values describe the 64x16 link with 8 clusters of 6 rays, four
RF chains and four streams per side, a 6-tap input delay line, a 75/25
chronological split, and 20 tracked slots at one observation per second.
Unknown keys in a config file are hard errors, not warnings, because a
silently ignored typo destroys reproducibility.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from beamtrack.channel import ArrayGeometry, ClusterConfig, MotionDynamics
from beamtrack.ensemble import SUBSET_STRATEGIES
from beamtrack.reservoir import ACTIVATIONS, ReservoirConfig

PREDICTORS = ("erm_xavier", "erm_random", "ensemble", "omp", "perfect_csi")

PILOT_MODES = ("random_phase", "orthogonal")

CHANNEL_SEED_MODES = ("per_trial", "shared")


class ConfigError(ValueError):
    """Invalid or unparseable experiment configuration."""


@dataclass
class RfChainConfig:
    """Stream and RF chain counts of the hybrid transceiver."""

    n_streams: int = 4
    n_tx_rf: int = 4
    n_rx_rf: int = 4

    def __post_init__(self):
        if min(self.n_streams, self.n_tx_rf, self.n_rx_rf) < 1:
            raise ConfigError("stream and RF chain counts must be positive")
        if self.n_streams > min(self.n_tx_rf, self.n_rx_rf):
            raise ConfigError("n_streams cannot exceed either RF chain count")


@dataclass
class ErmSettings:
    """Echo state network hyperparameters shared by every predictor.

    input_dim and output_dim are not configurable: they follow from the
    cluster layout and the delay line.
    """

    reservoir_size: int = 200
    connectivity: float = 0.1
    spectral_radius_target: float = 0.9
    activation: str = "sigmoid"
    washout: int = 20
    ridge_lambda: float = 1e-6

    def __post_init__(self):
        if self.reservoir_size < 1:
            raise ConfigError("reservoir_size must be positive")
        if not 0.0 < self.connectivity <= 1.0:
            raise ConfigError("connectivity must be in (0, 1]")
        if not 0.0 < self.spectral_radius_target < 1.0:
            raise ConfigError("spectral_radius_target must be in (0, 1)")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"activation must be one of {ACTIVATIONS}")
        if self.washout < 0:
            raise ConfigError("washout must be nonnegative")
        if self.ridge_lambda < 0:
            raise ConfigError("ridge_lambda must be nonnegative")


@dataclass
class EnsembleSettings:
    m1: int = 8
    subset_strategy: str = "bootstrap"

    def __post_init__(self):
        if self.m1 < 1:
            raise ConfigError("m1 must be at least 1")
        if self.subset_strategy not in SUBSET_STRATEGIES:
            raise ConfigError(
                f"subset_strategy must be one of {SUBSET_STRATEGIES}"
            )


@dataclass
class ExperimentConfig:
    scenario_id: str = "default-64x16"
    geometry: ArrayGeometry = field(default_factory=ArrayGeometry)
    rf_chains: RfChainConfig = field(default_factory=RfChainConfig)
    clusters: ClusterConfig = field(default_factory=ClusterConfig)
    motion: MotionDynamics = field(default_factory=MotionDynamics)
    erm: ErmSettings = field(default_factory=ErmSettings)
    ensemble: EnsembleSettings = field(default_factory=EnsembleSettings)
    wavelength: float = 1.36  # recorded for provenance; only d/lambda matters
    trajectory_len: int = 10000
    n_delay: int = 6
    train_fraction: float = 0.75
    n_batches: int = 250
    n_tracked_steps: int = 20
    sparsity: int = 48
    pilot_len: int = 96  # 2x sparsity keeps the per-row LS well overdetermined
    pilot_mode: str = "orthogonal"
    snr_grid_db: list = field(
        default_factory=lambda: [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]
    )
    trials: int = 50
    master_seed: int = 1
    channel_seed_mode: str = "per_trial"
    predictors: list = field(default_factory=lambda: list(PREDICTORS))
    normalize_nmse_by_truth: bool = False
    output_path: str = "results.csv"

    def __post_init__(self):
        self.validate()

    # -- derived quantities ------------------------------------------------

    @property
    def feature_dim(self) -> int:
        return self.clusters.feature_dim

    @property
    def input_dim(self) -> int:
        return self.n_delay * self.feature_dim

    @property
    def n_windows(self) -> int:
        return self.trajectory_len - self.n_delay

    @property
    def n_train_windows(self) -> int:
        return int(self.n_windows * self.train_fraction)

    @property
    def angle_domain(self) -> tuple[float, float]:
        return (self.clusters.angle_low, self.clusters.angle_high)

    def reservoir_config(self, init_scheme: str) -> ReservoirConfig:
        """Concrete network config for one init scheme, dims filled in."""
        return ReservoirConfig(
            input_dim=self.input_dim,
            reservoir_size=self.erm.reservoir_size,
            connectivity=self.erm.connectivity,
            spectral_radius_target=self.erm.spectral_radius_target,
            activation=self.erm.activation,
            washout=self.erm.washout,
            ridge_lambda=self.erm.ridge_lambda,
            init_scheme=init_scheme,
            output_dim=self.feature_dim,
        )

    # -- validation ----------------------------------------------------------

    def validate(self) -> None:
        if self.trajectory_len < self.n_delay + 1:
            raise ConfigError(
                "trajectory_len must be at least n_delay + 1 "
                f"({self.n_delay + 1}), got {self.trajectory_len}"
            )
        if self.n_delay < 1:
            raise ConfigError("n_delay must be at least 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must be in (0, 1)")
        if self.n_batches < 1:
            raise ConfigError("n_batches must be positive")
        if self.n_tracked_steps < 1:
            raise ConfigError("n_tracked_steps must be positive")
        if self.sparsity < 1:
            raise ConfigError("sparsity must be positive")
        if self.pilot_len < self.sparsity:
            raise ConfigError(
                "pilot_len must be at least sparsity so least-squares and "
                "greedy recovery stay well-posed"
            )
        if self.pilot_mode not in PILOT_MODES:
            raise ConfigError(f"pilot_mode must be one of {PILOT_MODES}")
        if self.pilot_mode == "orthogonal" and self.pilot_len < self.geometry.n_tx:
            raise ConfigError(
                "orthogonal pilots need pilot_len >= n_tx"
            )
        if not isinstance(self.snr_grid_db, (list, tuple)) or not self.snr_grid_db:
            raise ConfigError("snr_grid_db must be a nonempty list of numbers")
        if not all(isinstance(s, (int, float)) for s in self.snr_grid_db):
            raise ConfigError("snr_grid_db entries must be numbers")
        self.snr_grid_db = [float(s) for s in self.snr_grid_db]
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError("trials must be a positive integer")
        if not isinstance(self.master_seed, int) or self.master_seed < 0:
            raise ConfigError("master_seed must be a nonnegative integer")
        if self.channel_seed_mode not in CHANNEL_SEED_MODES:
            raise ConfigError(
                f"channel_seed_mode must be one of {CHANNEL_SEED_MODES}"
            )
        if not isinstance(self.predictors, (list, tuple)) or not self.predictors:
            raise ConfigError("predictors must be a nonempty list")
        self.predictors = list(self.predictors)
        for name in self.predictors:
            if name not in PREDICTORS:
                raise ConfigError(
                    f"unknown predictor {name!r}; valid names: "
                    + ", ".join(PREDICTORS)
                )
        if len(set(self.predictors)) != len(self.predictors):
            raise ConfigError("predictors must be distinct")
        if self.rf_chains.n_tx_rf > self.geometry.n_tx:
            raise ConfigError("n_tx_rf cannot exceed n_tx")
        if self.rf_chains.n_rx_rf > self.geometry.n_rx:
            raise ConfigError("n_rx_rf cannot exceed n_rx")
        needs_fit = {"erm_xavier", "erm_random", "ensemble"} & set(self.predictors)
        min_train = self.erm.washout + self.input_dim
        if needs_fit and self.n_train_windows <= min_train:
            raise ConfigError(
                f"training split has {self.n_train_windows} windows but the "
                f"readout solve needs more than washout + input_dim = "
                f"{min_train}; raise trajectory_len"
            )
        if self.n_windows - self.n_train_windows < self.n_tracked_steps:
            raise ConfigError(
                "test split shorter than n_tracked_steps; raise "
                "trajectory_len or lower n_tracked_steps"
            )


_SECTION_TYPES = {
    "geometry": ArrayGeometry,
    "rf_chains": RfChainConfig,
    "clusters": ClusterConfig,
    "motion": MotionDynamics,
    "erm": ErmSettings,
    "ensemble": EnsembleSettings,
}


def _build_section(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(
            f"{path}: unknown keys {sorted(unknown)}; known keys: "
            + ", ".join(sorted(known))
        )
    try:
        return cls(**data)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def config_from_dict(data: dict) -> ExperimentConfig:
    """Build and validate a config from a parsed JSON object."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(
            f"unknown config keys {sorted(unknown)}; known keys: "
            + ", ".join(sorted(known))
        )
    kwargs = {}
    for key, value in data.items():
        if key in _SECTION_TYPES:
            kwargs[key] = _build_section(_SECTION_TYPES[key], value, key)
        else:
            kwargs[key] = value
    try:
        return ExperimentConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return asdict(cfg)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def save_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(
        json.dumps(config_to_dict(cfg), indent=2) + "\n", encoding="utf-8"
    )
