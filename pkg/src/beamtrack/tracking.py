"""End-to-end tracking: datasets, support prediction, pilot LS, and OMP.

One trial is a single channel realization: an angle trajectory, its window
dataset, and the true beamspace channels over the tracked slots. A learner
forecasts the next angle vector, the forecast picks the beamspace support,
and per-entry gains come from a least-squares fit to the pilot
observations of that slot. The greedy baseline skips the forecast and
recovers the support directly from the same observations.

Pilot sounding is idealized on the receive side: the model assumes every
beamspace row is observed each slot (in hardware the combiner would cycle
its beam subset across slots to the same effect).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from beamtrack.channel import (
    MotionFeatureState,
    PathSet,
    assemble_channel,
    beamspace_transform,
    dft_matrix,
    generate_trajectory,
    nearest_grid_index,
    redraw_gain_phases,
)
from beamtrack.config import ExperimentConfig
from beamtrack.ensemble import (
    EnsembleConfig,
    ensemble_predict,
    ensemble_predict_sum,
    train_ensemble,
    warm_up_ensemble,
)
from beamtrack.metrics import nmse, rmse
from beamtrack.reservoir import build_reservoir, predict, run_reservoir, train_readout
from beamtrack.transceiver import LinkBudget, benchmark_spectral_efficiency


@dataclass
class TrackingDataset:
    """Delay-embedded windows with a chronological train/test split.

    inputs[i] concatenates n_delay consecutive feature vectors; targets[i]
    is the next feature vector after that window. Rows are in time order
    and the first n_train rows form the training split, so no test target
    ever precedes a training target. n_batches is bookkeeping for loss
    histogram studies and does not affect the fit.
    """

    inputs: np.ndarray
    targets: np.ndarray
    n_train: int
    n_delay: int
    n_batches: int = 250

    @property
    def train_inputs(self) -> np.ndarray:
        return self.inputs[: self.n_train]

    @property
    def train_targets(self) -> np.ndarray:
        return self.targets[: self.n_train]

    @property
    def test_inputs(self) -> np.ndarray:
        return self.inputs[self.n_train :]

    @property
    def test_targets(self) -> np.ndarray:
        return self.targets[self.n_train :]


def build_dataset(
    trajectory,
    n_delay: int = 6,
    train_fraction: float = 0.75,
    n_batches: int = 250,
) -> TrackingDataset:
    """Slide a length-n_delay window over the trajectory features.

    trajectory is a sequence of MotionFeatureState or a (T, d) feature
    array. A trajectory of length T yields T - n_delay windows; the first
    floor(train_fraction * count) are the training split.

    Angle trajectories live on a circle, so motion-state windows are
    expressed in the chart of their first frame: the series is unwrapped
    along time and each window (input frames and target alike) is shifted
    by whole periods so that it is continuous and starts inside the
    domain. Without this a path drifting past the domain edge would put a
    near-full-period jump into the regression targets, which a linear
    readout cannot represent. Plain feature arrays are windowed as given.
    """
    if n_delay < 1:
        raise ValueError("n_delay must be at least 1")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    if len(trajectory) and isinstance(trajectory[0], MotionFeatureState):
        wrapped = np.stack([s.features() for s in trajectory])
        feats = np.unwrap(wrapped, axis=0, period=1.0)
        offsets = feats - wrapped  # whole-period shift of each entry
    else:
        feats = np.atleast_2d(np.asarray(trajectory, dtype=float))
        offsets = None
    t_len = feats.shape[0]
    if t_len < n_delay + 1:
        raise ValueError(
            f"trajectory length {t_len} too short for n_delay={n_delay}; "
            f"need at least {n_delay + 1}"
        )
    n_windows = t_len - n_delay
    inputs = np.empty((n_windows, n_delay * feats.shape[1]))
    targets = np.empty((n_windows, feats.shape[1]))
    for i in range(n_windows):
        block = feats[i : i + n_delay + 1]
        if offsets is not None:
            block = block - offsets[i]
        inputs[i] = block[:n_delay].ravel()
        targets[i] = block[n_delay]
    n_train = int(n_windows * train_fraction)
    return TrackingDataset(
        inputs=inputs,
        targets=targets,
        n_train=n_train,
        n_delay=n_delay,
        n_batches=n_batches,
    )


def predict_support(
    state: MotionFeatureState, n_rx: int, n_tx: int, sparsity: int
) -> list:
    """Beamspace entries implied by predicted angles.

    Each (AoA, AoD) pair maps to its nearest receive and transmit grid
    index. Duplicate pairs collapse to the first occurrence, and the list
    is truncated at sparsity entries.
    """
    if sparsity < 1:
        raise ValueError("sparsity must be at least 1")
    support = []
    seen = set()
    for aoa, aod in zip(state.aoa, state.aod):
        pair = (nearest_grid_index(aoa, n_rx), nearest_grid_index(aod, n_tx))
        if pair not in seen:
            seen.add(pair)
            support.append(pair)
        if len(support) == sparsity:
            break
    return support


@dataclass
class PilotObservation:
    """Known sounding matrix, received rows, and the slot noise power.

    pilots has shape (n_tx, n_pilot) with the transmit amplitude folded in,
    observed has shape (n_rx, n_pilot).
    """

    pilots: np.ndarray
    observed: np.ndarray
    noise_power: float

    def __post_init__(self):
        self.pilots = np.asarray(self.pilots, dtype=complex)
        self.observed = np.asarray(self.observed, dtype=complex)
        if self.pilots.ndim != 2 or self.observed.ndim != 2:
            raise ValueError("pilots and observed must be matrices")
        if self.pilots.shape[1] != self.observed.shape[1]:
            raise ValueError("pilots and observed must agree on slot count")

    @property
    def n_pilot(self) -> int:
        return self.pilots.shape[1]


def generate_pilot_matrix(
    n_tx: int,
    n_pilot: int,
    rho: float,
    rng: np.random.Generator,
    mode: str = "random_phase",
) -> np.ndarray:
    """Sounding matrix (n_tx, n_pilot) with per-slot transmit power rho.

    random_phase draws unit-modulus entries with i.i.d. phases, giving a
    compressed (coherent) dictionary when n_pilot < n_tx. orthogonal uses
    DFT rows and needs n_pilot >= n_tx; its per-beam sequences are exactly
    orthogonal.
    """
    if n_pilot < 1:
        raise ValueError("n_pilot must be at least 1")
    if mode == "random_phase":
        phases = rng.random((n_tx, n_pilot))
        return np.sqrt(rho / n_tx) * np.exp(2j * np.pi * phases)
    if mode == "orthogonal":
        if n_pilot < n_tx:
            raise ValueError("orthogonal pilots need n_pilot >= n_tx")
        u = dft_matrix(n_pilot)
        return np.sqrt(rho * n_pilot / n_tx) * u[:n_tx, :]
    raise ValueError("mode must be 'random_phase' or 'orthogonal'")


def simulate_pilot_observation(
    h_b: np.ndarray,
    pilots: np.ndarray,
    sigma2: float,
    rng_or_noise,
) -> PilotObservation:
    """Observed rows Y = H_b X + N with N ~ CN(0, sigma2) per entry.

    rng_or_noise is either a Generator or a pre-drawn standard complex
    noise matrix (used to share one noise realization across SNR points).
    """
    h_b = np.asarray(h_b, dtype=complex)
    if isinstance(rng_or_noise, np.random.Generator):
        noise = standard_complex_noise(
            rng_or_noise, (h_b.shape[0], pilots.shape[1])
        )
    else:
        noise = np.asarray(rng_or_noise, dtype=complex)
    return PilotObservation(
        pilots=pilots,
        observed=h_b @ pilots + np.sqrt(sigma2) * noise,
        noise_power=sigma2,
    )


def standard_complex_noise(rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-variance circular complex Gaussian draws."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def reconstruct_ls(support, pilots: PilotObservation) -> np.ndarray:
    """Least-squares gains on the given support, zeros elsewhere.

    The rows decouple: entries of row r sharing the support are fit
    together against that row's observations. A rank-deficient per-row
    system is an error naming the offending rows and columns.
    """
    support = list(support)
    n_rx = pilots.observed.shape[0]
    n_tx = pilots.pilots.shape[0]
    if pilots.n_pilot < len(support):
        raise ValueError(
            f"{pilots.n_pilot} pilot slots cannot determine "
            f"{len(support)} support entries"
        )
    estimate = np.zeros((n_rx, n_tx), dtype=complex)
    cols_by_row: dict[int, list[int]] = {}
    for r, c in support:
        if not (0 <= r < n_rx and 0 <= c < n_tx):
            raise ValueError(f"support entry {(r, c)} out of range")
        cols_by_row.setdefault(int(r), []).append(int(c))
    for r, cols in cols_by_row.items():
        a = pilots.pilots[cols, :].T
        if np.linalg.matrix_rank(a) < len(cols):
            raise ValueError(
                f"rank-deficient pilot system on row {r}, columns {cols}"
            )
        gains, *_ = np.linalg.lstsq(a, pilots.observed[r], rcond=None)
        estimate[r, cols] = gains
    return estimate


def omp(
    y: np.ndarray, dictionary: np.ndarray, sparsity: int
) -> tuple[np.ndarray, list, list]:
    """Greedy sparse recovery of y over the columns of dictionary.

    Repeats sparsity times: pick the column most correlated with the
    residual (normalized by column norm, lowest index on ties), refit all
    selected coefficients by least squares, update the residual. Returns
    (coefficients, support, residual norm after each iteration).
    """
    y = np.asarray(y, dtype=complex)
    a = np.asarray(dictionary, dtype=complex)
    if sparsity < 0 or sparsity > a.shape[0]:
        raise ValueError("sparsity must be in [0, measurement count]")
    col_norms = np.linalg.norm(a, axis=0)
    safe_norms = np.where(col_norms > 0, col_norms, 1.0)
    x = np.zeros(a.shape[1], dtype=complex)
    support: list[int] = []
    residual = y.copy()
    norms = []
    for _ in range(sparsity):
        corr = np.abs(a.conj().T @ residual) / safe_norms
        corr[support] = -1.0
        corr[col_norms == 0] = -1.0
        j = int(np.argmax(corr))
        if corr[j] <= 0.0:
            break
        support.append(j)
        coef, *_ = np.linalg.lstsq(a[:, support], y, rcond=None)
        residual = y - a[:, support] @ coef
        norms.append(float(np.linalg.norm(residual)))
    if support:
        coef, *_ = np.linalg.lstsq(a[:, support], y, rcond=None)
        x[support] = coef
    return x, support, norms


def omp_estimate(
    pilots: PilotObservation, sparsity: int
) -> tuple[np.ndarray, list]:
    """Greedy beamspace estimate from pilot observations alone.

    Globally greedy matrix variant: each of the sparsity iterations picks
    the (transmit atom, receive row) pair with the largest normalized
    residual correlation anywhere in the matrix, refits that row's
    coefficients by least squares, and updates that row's residual.
    Returns (estimate, Frobenius residual after each iteration).
    """
    if sparsity < 0 or sparsity > pilots.n_pilot:
        raise ValueError("sparsity must be in [0, pilot count]")
    a = pilots.pilots.T  # (n_pilot, n_tx)
    y = pilots.observed.T  # (n_pilot, n_rx)
    n_tx = a.shape[1]
    n_rx = y.shape[1]
    col_norms = np.linalg.norm(a, axis=0)
    safe_norms = np.where(col_norms > 0, col_norms, 1.0)
    residual = y.copy()
    cols_by_row: dict[int, list[int]] = {}
    taken = np.zeros((n_tx, n_rx), dtype=bool)
    norms = []
    for _ in range(sparsity):
        corr = np.abs(a.conj().T @ residual) / safe_norms[:, None]
        corr[taken] = -1.0
        corr[col_norms == 0, :] = -1.0
        flat = int(np.argmax(corr))
        atom, row = divmod(flat, n_rx)
        if corr[atom, row] <= 0.0:
            break
        taken[atom, row] = True
        cols = cols_by_row.setdefault(row, [])
        cols.append(atom)
        coef, *_ = np.linalg.lstsq(a[:, cols], y[:, row], rcond=None)
        residual[:, row] = y[:, row] - a[:, cols] @ coef
        norms.append(float(np.linalg.norm(residual)))
    estimate = np.zeros((n_rx, n_tx), dtype=complex)
    for row, cols in cols_by_row.items():
        coef, *_ = np.linalg.lstsq(a[:, cols], y[:, row], rcond=None)
        estimate[row, cols] = coef
    return estimate, norms


# -- per-trial orchestration -------------------------------------------------


@dataclass
class TrialData:
    """Everything one channel realization pins down before any SNR enters."""

    dataset: TrackingDataset
    true_states: list
    true_channels: list
    pilot_noise: list


def prepare_trial(
    cfg: ExperimentConfig,
    channel_rng: np.random.Generator,
    noise_rng: np.random.Generator,
) -> TrialData:
    """Trajectory, dataset, true tracked channels, and per-step pilot noise.

    The per-step standard complex noise is drawn once here and scaled by
    each SNR's sigma later, so reconstruction noise is paired across the
    SNR grid.
    """
    states, paths = generate_trajectory(
        cfg.clusters, cfg.motion, cfg.trajectory_len, channel_rng
    )
    dataset = build_dataset(
        states, cfg.n_delay, cfg.train_fraction, cfg.n_batches
    )
    true_states = []
    true_channels = []
    pilot_noise = []
    for j in range(cfg.n_tracked_steps):
        idx = dataset.n_train + j + cfg.n_delay  # trajectory index of target j
        state = states[idx]
        gains = redraw_gain_phases(paths.gains, channel_rng)
        h = assemble_channel(
            PathSet(aod=state.aod, aoa=state.aoa, gains=gains), cfg.geometry
        )
        true_states.append(state)
        true_channels.append(beamspace_transform(h, cfg.geometry))
        pilot_noise.append(
            standard_complex_noise(
                noise_rng, (cfg.geometry.n_rx, cfg.pilot_len)
            )
        )
    return TrialData(
        dataset=dataset,
        true_states=true_states,
        true_channels=true_channels,
        pilot_noise=pilot_noise,
    )


def fit_predictor(
    cfg: ExperimentConfig, predictor: str, dataset: TrackingDataset,
    fit_rng: np.random.Generator,
):
    """Train whatever the predictor needs; None for fit-free baselines."""
    if predictor in ("omp", "perfect_csi"):
        return None
    if predictor in ("erm_xavier", "erm_random"):
        scheme = "xavier" if predictor == "erm_xavier" else "uniform_random"
        model = build_reservoir(cfg.reservoir_config(scheme), fit_rng)
        return train_readout(model, dataset.train_inputs, dataset.train_targets)
    if predictor == "ensemble":
        ens_cfg = EnsembleConfig(
            weak_config=cfg.reservoir_config("xavier"),
            m1=cfg.ensemble.m1,
            subset_strategy=cfg.ensemble.subset_strategy,
        )
        return train_ensemble(
            ens_cfg, dataset.train_inputs, dataset.train_targets, fit_rng
        )
    raise ValueError(f"unknown predictor {predictor!r}")


def predict_tracked_states(
    cfg: ExperimentConfig,
    predictor: str,
    fitted,
    dataset: TrackingDataset,
    combination: str = "sum",
    wrap: bool = True,
) -> list | None:
    """Angle forecasts for the tracked slots; None for fit-free baselines.

    The learner is warmed up over the training windows in order, then fed
    the observed test windows one step at a time. Forecasts are wrapped
    into the angle domain unless wrap=False (dispersion studies need the
    unwrapped values so near-edge spread is not inflated). combination
    picks the ensemble combiner: the additive "sum" the fitting minimizes,
    or the stage-count-"averaged" form.
    """
    if fitted is None:
        return None
    if combination not in ("sum", "averaged"):
        raise ValueError("combination must be 'sum' or 'averaged'")
    domain = cfg.angle_domain if wrap else None
    out = []
    if predictor == "ensemble":
        combine = (
            ensemble_predict_sum if combination == "sum" else ensemble_predict
        )
        stage_states = warm_up_ensemble(fitted, dataset.train_inputs)
        for j in range(cfg.n_tracked_steps):
            y, stage_states = combine(
                fitted, stage_states, dataset.test_inputs[j], wrap_domain=domain
            )
            out.append(MotionFeatureState.from_features(y, timestamp=j))
        return out
    state = run_reservoir(fitted, dataset.train_inputs)[-1]
    for j in range(cfg.n_tracked_steps):
        y, state = predict(
            fitted, state, dataset.test_inputs[j], wrap_domain=domain
        )
        out.append(MotionFeatureState.from_features(y, timestamp=j))
    return out


@dataclass
class StepResult:
    """Metrics (and optionally matrices) for one tracked slot at one SNR."""

    predictor: str
    snr_db: float
    time_step: int
    nmse: float
    rmse: float
    se: float
    h_true: np.ndarray | None = None
    h_est: np.ndarray | None = None


def track_and_evaluate(
    cfg: ExperimentConfig,
    predictor: str,
    trial_data: TrialData,
    pilot_matrix_unit: np.ndarray,
    fitted=None,
    forecasts=None,
    keep_channels: bool = False,
) -> list:
    """Reconstruct and score every (SNR, tracked slot) pair for one predictor.

    pilot_matrix_unit is the rho=1 sounding matrix; each SNR point scales
    the pre-drawn slot noise by its own sigma. Rates use the benchmark
    convention: beam selection fixed by the true channel, baseband designed
    from each reconstruction, so the perfect-CSI row is the per-step upper
    bound by construction.
    """
    if predictor not in ("omp", "perfect_csi") and forecasts is None:
        forecasts = predict_tracked_states(
            cfg, predictor, fitted, trial_data.dataset
        )
    rf = cfg.rf_chains
    results = []
    for snr_db in cfg.snr_grid_db:
        budget = LinkBudget.from_snr_db(snr_db)
        pilots_scaled = np.sqrt(budget.rho) * pilot_matrix_unit
        for j in range(cfg.n_tracked_steps):
            h_true = trial_data.true_channels[j]
            if predictor == "perfect_csi":
                h_est = h_true.copy()
            else:
                obs = PilotObservation(
                    pilots=pilots_scaled,
                    observed=h_true @ pilots_scaled
                    + np.sqrt(budget.sigma2) * trial_data.pilot_noise[j],
                    noise_power=budget.sigma2,
                )
                if predictor == "omp":
                    h_est, _ = omp_estimate(obs, cfg.sparsity)
                else:
                    support = predict_support(
                        forecasts[j], cfg.geometry.n_rx, cfg.geometry.n_tx,
                        cfg.sparsity,
                    )
                    h_est = reconstruct_ls(support, obs)
            se = benchmark_spectral_efficiency(
                h_est, h_true, rf.n_tx_rf, rf.n_rx_rf, rf.n_streams, budget
            )
            results.append(
                StepResult(
                    predictor=predictor,
                    snr_db=float(snr_db),
                    time_step=j,
                    nmse=nmse([h_true], [h_est],
                              normalize_by_truth=cfg.normalize_nmse_by_truth),
                    rmse=rmse([h_true], [h_est]),
                    se=se,
                    h_true=h_true if keep_channels else None,
                    h_est=h_est if keep_channels else None,
                )
            )
    return results
