"""Echo state network with a fixed reservoir and a single-solve readout.

The recurrent weights are drawn once, sparsified, rescaled to a spectral
radius below one, and never touched again. Input weights follow either the
fan-in-scaled Gaussian rule (variance 1/input_dim) or a plain U[-1, 1]
baseline. Training runs the reservoir over the input sequence, discards a
washout prefix, and solves one ridge regression for the readout, so there
is no iterative optimization anywhere.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import expit

_STATE_LO = np.nextafter(0.0, 1.0)
_STATE_HI = np.nextafter(1.0, 0.0)

ACTIVATIONS = ("sigmoid", "logsig")
INIT_SCHEMES = ("xavier", "uniform_random")


@dataclass
class ReservoirConfig:
    """Hyperparameters of one echo state network.

    activation accepts "sigmoid" or "logsig"; both name the same logistic
    map 1/(1+exp(-z)). output_dim defaults to input_dim but differs when
    the input is a delay-embedded window of several feature vectors.
    """

    input_dim: int
    reservoir_size: int = 200
    connectivity: float = 0.1
    spectral_radius_target: float = 0.9
    activation: str = "sigmoid"
    washout: int = 20
    ridge_lambda: float = 1e-6
    init_scheme: str = "xavier"
    output_dim: int | None = None

    def __post_init__(self):
        if self.input_dim < 1 or self.reservoir_size < 1:
            raise ValueError("input_dim and reservoir_size must be at least 1")
        if not 0.0 < self.connectivity <= 1.0:
            raise ValueError("connectivity must be in (0, 1]")
        if not 0.0 < self.spectral_radius_target < 1.0:
            raise ValueError("spectral radius target must be in (0, 1)")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        if self.washout < 0:
            raise ValueError("washout must be nonnegative")
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be nonnegative")
        if self.init_scheme not in INIT_SCHEMES:
            raise ValueError(f"init_scheme must be one of {INIT_SCHEMES}")
        if self.output_dim is None:
            self.output_dim = self.input_dim
        if self.output_dim < 1:
            raise ValueError("output_dim must be at least 1")


@dataclass
class ReservoirModel:
    """Weight triple plus config; w_out stays None until trained."""

    w_in: np.ndarray
    w_res: np.ndarray
    w_out: np.ndarray | None
    config: ReservoirConfig

    @property
    def is_trained(self) -> bool:
        return self.w_out is not None


def xavier_input_weights(
    input_dim: int, reservoir_size: int, rng: np.random.Generator
) -> np.ndarray:
    """Gaussian input weights with mean 0 and variance exactly 1/input_dim.

    The fan-in scaling keeps the pre-activation variance of order one for
    inputs with O(1) coordinates, which holds the logistic units inside
    their responsive region.
    """
    if input_dim < 1 or reservoir_size < 1:
        raise ValueError("dimensions must be at least 1")
    return rng.standard_normal((reservoir_size, input_dim)) / np.sqrt(input_dim)


def uniform_input_weights(
    input_dim: int, reservoir_size: int, rng: np.random.Generator
) -> np.ndarray:
    """Baseline U[-1, 1] input weights (variance 1/3 regardless of fan-in)."""
    if input_dim < 1 or reservoir_size < 1:
        raise ValueError("dimensions must be at least 1")
    return rng.uniform(-1.0, 1.0, size=(reservoir_size, input_dim))


def init_input_weights(
    input_dim: int, reservoir_size: int, rng: np.random.Generator, scheme: str
) -> np.ndarray:
    if scheme == "xavier":
        return xavier_input_weights(input_dim, reservoir_size, rng)
    if scheme == "uniform_random":
        return uniform_input_weights(input_dim, reservoir_size, rng)
    raise ValueError(f"init scheme must be one of {INIT_SCHEMES}")


def init_reservoir(
    reservoir_size: int,
    connectivity: float,
    spectral_radius_target: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Sparse U[-1, 1] recurrent matrix rescaled to the target spectral radius.

    Each entry is nonzero with probability connectivity. Draws whose
    spectral radius is numerically zero (so rescaling is impossible) are
    redrawn, up to 10 attempts.
    """
    if reservoir_size < 1:
        raise ValueError("reservoir_size must be at least 1")
    if not 0.0 < connectivity <= 1.0:
        raise ValueError("connectivity must be in (0, 1]")
    if not 0.0 < spectral_radius_target < 1.0:
        raise ValueError("spectral radius target must be in (0, 1)")
    for _ in range(10):
        mask = rng.random((reservoir_size, reservoir_size)) < connectivity
        w = rng.uniform(-1.0, 1.0, size=(reservoir_size, reservoir_size)) * mask
        radius = np.max(np.abs(np.linalg.eigvals(w)))
        if radius > 1e-12:
            return w * (spectral_radius_target / radius)
    raise RuntimeError(
        "reservoir draw degenerate (zero spectral radius) 10 times in a row"
    )


def build_reservoir(config: ReservoirConfig, rng: np.random.Generator) -> ReservoirModel:
    """Fresh untrained model: input weights per init_scheme, fixed reservoir."""
    w_in = init_input_weights(
        config.input_dim, config.reservoir_size, rng, config.init_scheme
    )
    w_res = init_reservoir(
        config.reservoir_size,
        config.connectivity,
        config.spectral_radius_target,
        rng,
    )
    return ReservoirModel(w_in=w_in, w_res=w_res, w_out=None, config=config)


def _activate(z: np.ndarray) -> np.ndarray:
    # logistic squashed into the open interval so states never touch 0 or 1
    return np.clip(expit(z), _STATE_LO, _STATE_HI)


def reservoir_step(
    prev: np.ndarray, x: np.ndarray, model: ReservoirModel
) -> np.ndarray:
    """One state update: logistic(W_res @ prev + W_in @ x)."""
    return _activate(model.w_res @ prev + model.w_in @ x)


def run_reservoir(
    model: ReservoirModel,
    inputs: np.ndarray,
    initial_state: np.ndarray | None = None,
) -> np.ndarray:
    """States after consuming each input row; shape (T, reservoir_size).

    states[i] is the state that has just absorbed inputs[i], so it is the
    state the readout uses to predict the target paired with inputs[i].
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    t_len = inputs.shape[0]
    size = model.config.reservoir_size
    state = (
        np.zeros(size) if initial_state is None else np.asarray(initial_state, float)
    )
    # one dense product for every input projection, loop only the recurrence
    driven = inputs @ model.w_in.T
    states = np.empty((t_len, size))
    for i in range(t_len):
        state = _activate(model.w_res @ state + driven[i])
        states[i] = state
    return states


def ridge_readout(
    states: np.ndarray, targets: np.ndarray, ridge_lambda: float
) -> np.ndarray:
    """Closed-form ridge solution W = Y^T S (S^T S + lambda I)^{-1}.

    With ridge_lambda = 0 the normal matrix must be nonsingular; a rank
    check fires first with a pointer at the fix.
    """
    states = np.asarray(states, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if states.shape[0] != targets.shape[0]:
        raise ValueError("states and targets must pair up row by row")
    size = states.shape[1]
    if ridge_lambda == 0.0 and np.linalg.matrix_rank(states) < size:
        raise np.linalg.LinAlgError(
            "normal matrix is singular with ridge_lambda=0; "
            "set ridge_lambda > 0"
        )
    gram = states.T @ states + ridge_lambda * np.eye(size)
    cross = targets.T @ states
    return np.linalg.solve(gram, cross.T).T


def train_readout(
    model: ReservoirModel, inputs: np.ndarray, targets: np.ndarray
) -> ReservoirModel:
    """Fit the readout in one ridge solve; w_in and w_res are not touched.

    inputs[i] pairs with targets[i] (the next feature vector after the
    window inputs[i] covers). The first washout pairs are discarded.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    cfg = model.config
    t_len = inputs.shape[0]
    if targets.shape[0] != t_len:
        raise ValueError("inputs and targets must have equal length")
    if inputs.shape[1] != cfg.input_dim:
        raise ValueError(
            f"input width {inputs.shape[1]} does not match config "
            f"input_dim {cfg.input_dim}"
        )
    if targets.shape[1] != cfg.output_dim:
        raise ValueError(
            f"target width {targets.shape[1]} does not match config "
            f"output_dim {cfg.output_dim}"
        )
    if t_len <= cfg.washout + cfg.input_dim:
        raise ValueError(
            f"need more than washout + input_dim = "
            f"{cfg.washout + cfg.input_dim} samples, got {t_len}"
        )
    states = run_reservoir(model, inputs)
    model.w_out = ridge_readout(
        states[cfg.washout :], targets[cfg.washout :], cfg.ridge_lambda
    )
    return model


def predict(
    model: ReservoirModel,
    state: np.ndarray,
    x: np.ndarray,
    wrap_domain: tuple[float, float] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """One-step forecast: advance the state on x, multiply by the readout.

    Returns (prediction, new_state). When wrap_domain = (lo, hi) is given
    the prediction is wrapped into [lo, hi), which is how angle forecasts
    are squared with the motion model before channel reconstruction;
    residual-fitting learners leave it None.
    """
    if not model.is_trained:
        raise ValueError("model has no trained readout yet")
    new_state = reservoir_step(state, x, model)
    y = model.w_out @ new_state
    if wrap_domain is not None:
        lo, hi = wrap_domain
        y = lo + np.mod(y - lo, hi - lo)
    return y, new_state


def save_reservoir(model: ReservoirModel, path) -> None:
    """Persist all weights plus config as an npz archive."""
    cfg_json = json.dumps(asdict(model.config))
    arrays = {
        "schema": np.array(["beamtrack-esn-v1"]),
        "config_json": np.array([cfg_json]),
        "w_in": model.w_in,
        "w_res": model.w_res,
    }
    if model.w_out is not None:
        arrays["w_out"] = model.w_out
    np.savez(path, **arrays)


def load_reservoir(path) -> ReservoirModel:
    with np.load(path, allow_pickle=False) as data:
        schema = str(data["schema"][0])
        if schema != "beamtrack-esn-v1":
            raise ValueError(f"unrecognized model schema {schema!r}")
        config = ReservoirConfig(**json.loads(str(data["config_json"][0])))
        w_out = data["w_out"] if "w_out" in data.files else None
        return ReservoirModel(
            w_in=data["w_in"], w_res=data["w_res"], w_out=w_out, config=config
        )
