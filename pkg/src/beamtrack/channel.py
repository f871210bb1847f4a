"""Clustered mmWave channel generation and beamspace transforms.

Narrowband geometric channel with N_cl clusters of N_ray rays each. Every
ray carries a complex gain and a pair of spatial angles (departure and
arrival), the channel matrix is the normalized sum of rank-one outer
products of ULA steering vectors, and a unitary DFT on each side moves the
matrix into beamspace where it is approximately sparse. Angles drift over
time as a wrapped Gaussian random walk, which is the time series the
learners in this package forecast.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ArrayGeometry:
    """Uniform linear arrays at both link ends.

    Only the element count enters the steering vectors below; the spacing
    ratio is kept so configs stay explicit about the d/lambda = 1/2 habit.
    """

    n_tx: int = 64
    n_rx: int = 16
    element_spacing_over_wavelength: float = 0.5

    def __post_init__(self):
        if self.n_tx < 1 or self.n_rx < 1:
            raise ValueError("antenna counts must be at least 1")
        if self.element_spacing_over_wavelength <= 0:
            raise ValueError("element spacing ratio must be positive")


@dataclass
class ClusterConfig:
    """Cluster/ray layout and the angle domain.

    Cluster centers are uniform on [angle_low, angle_high); rays sit
    uniformly within +-cluster_spread of their center and are wrapped back
    into the domain. Gains are complex Gaussian with unit variance.
    """

    n_clusters: int = 8
    n_rays: int = 6
    angle_low: float = -0.5
    angle_high: float = 0.5
    cluster_spread: float = 0.02

    def __post_init__(self):
        if self.n_clusters < 1 or self.n_rays < 1:
            raise ValueError("cluster and ray counts must be at least 1")
        if not self.angle_high > self.angle_low:
            raise ValueError("angle domain is empty")
        if self.cluster_spread < 0:
            raise ValueError("cluster spread must be nonnegative")

    @property
    def n_paths(self) -> int:
        return self.n_clusters * self.n_rays

    @property
    def feature_dim(self) -> int:
        # flattened motion feature length: one AoD and one AoA per path
        return 2 * self.n_paths


@dataclass
class MotionDynamics:
    """Per-step random-walk parameters for the angle trajectories."""

    drift: float = 0.002
    sigma: float = 0.003

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")


@dataclass
class MotionFeatureState:
    """Spatial angles of every path at one time step.

    aod and aoa have length n_clusters*n_rays; the flattened feature vector
    is their concatenation.
    """

    aod: np.ndarray
    aoa: np.ndarray
    timestamp: int = 0

    def __post_init__(self):
        self.aod = np.asarray(self.aod, dtype=float)
        self.aoa = np.asarray(self.aoa, dtype=float)
        if self.aod.shape != self.aoa.shape or self.aod.ndim != 1:
            raise ValueError("aod and aoa must be 1-d arrays of equal length")

    def features(self) -> np.ndarray:
        """Flattened feature vector [aod, aoa]."""
        return np.concatenate([self.aod, self.aoa])

    @classmethod
    def from_features(cls, chi: np.ndarray, timestamp: int = 0) -> "MotionFeatureState":
        chi = np.asarray(chi, dtype=float)
        if chi.ndim != 1 or chi.size % 2:
            raise ValueError("feature vector must be 1-d with even length")
        half = chi.size // 2
        return cls(aod=chi[:half], aoa=chi[half:], timestamp=timestamp)


@dataclass
class PathSet:
    """Per-path departure angle, arrival angle, and complex gain."""

    aod: np.ndarray
    aoa: np.ndarray
    gains: np.ndarray

    def __post_init__(self):
        self.aod = np.asarray(self.aod, dtype=float)
        self.aoa = np.asarray(self.aoa, dtype=float)
        self.gains = np.asarray(self.gains, dtype=complex)
        if not (self.aod.shape == self.aoa.shape == self.gains.shape):
            raise ValueError("aod, aoa, gains must share one shape")
        if self.aod.ndim != 1:
            raise ValueError("path arrays must be 1-d")

    @property
    def n_paths(self) -> int:
        return self.aod.size


def wrap_interval(x, lo: float, hi: float):
    """Wrap values into [lo, hi) by modular arithmetic."""
    if not hi > lo:
        raise ValueError("interval is empty")
    return lo + np.mod(np.asarray(x, dtype=float) - lo, hi - lo)


def steering_vector(phi: float, n: int) -> np.ndarray:
    """ULA steering vector of length n at spatial angle phi.

    Entry k is (1/sqrt(n)) * exp(-2j*pi*k*phi); the conjugation mirrors the
    Hermitian in the array response definition and is a global convention
    that no power metric can see.
    """
    if n < 1:
        raise ValueError("antenna count must be at least 1")
    k = np.arange(n)
    return np.exp(-2j * np.pi * k * float(phi)) / np.sqrt(n)


def steering_matrix(phis: np.ndarray, n: int) -> np.ndarray:
    """Columns are steering vectors at each angle in phis; shape (n, len(phis))."""
    phis = np.asarray(phis, dtype=float)
    k = np.arange(n)[:, None]
    return np.exp(-2j * np.pi * k * phis[None, :]) / np.sqrt(n)


def grid_angles(n: int) -> np.ndarray:
    """Beamspace angle grid (k - (n-1)/2)/n for k = 0..n-1, symmetric about 0."""
    if n < 1:
        raise ValueError("grid size must be at least 1")
    return (np.arange(n) - (n - 1) / 2.0) / n


def dft_matrix(n: int) -> np.ndarray:
    """Unitary DFT whose rows match steering directions on grid_angles(n).

    Row k equals the conjugate of steering_vector(grid_angles(n)[k], n), so a
    path sitting exactly on grid angle k maps to beam index k under U @ a.
    """
    phis = grid_angles(n)
    m = np.arange(n)
    return np.exp(2j * np.pi * np.outer(phis, m)) / np.sqrt(n)


def nearest_grid_index(phi: float, n: int) -> int:
    """Index of the beamspace grid angle closest to phi under wrap-around.

    Distances are taken on the unit circle of spatial angles. Ties go to the
    lower index.
    """
    d = wrap_interval(grid_angles(n) - float(phi), -0.5, 0.5)
    return int(np.argmin(np.abs(d)))


def channel_gain_scale(n_tx: int, n_rx: int, n_paths: int) -> float:
    """Normalization sqrt(n_tx*n_rx/n_paths) keeping E||H||_F^2 = n_tx*n_rx."""
    if min(n_tx, n_rx, n_paths) < 1:
        raise ValueError("dimensions must be at least 1")
    return float(np.sqrt(n_tx * n_rx / n_paths))


def generate_paths(cfg: ClusterConfig, rng: np.random.Generator) -> PathSet:
    """Draw a fresh clustered path set.

    Cluster centers are uniform on the angle domain, rays uniform within
    +-cluster_spread of their center (wrapped), separately for departure and
    arrival. Gains are i.i.d. CN(0, 1).
    """
    lo, hi = cfg.angle_low, cfg.angle_high
    shape = (cfg.n_clusters, cfg.n_rays)

    def draw_side():
        centers = rng.uniform(lo, hi, size=cfg.n_clusters)
        offsets = rng.uniform(-cfg.cluster_spread, cfg.cluster_spread, size=shape)
        return wrap_interval(centers[:, None] + offsets, lo, hi).ravel()

    aod = draw_side()
    aoa = draw_side()
    gains = (
        rng.standard_normal(cfg.n_paths) + 1j * rng.standard_normal(cfg.n_paths)
    ) / np.sqrt(2.0)
    return PathSet(aod=aod, aoa=aoa, gains=gains)


def redraw_gain_phases(gains: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Fresh uniform phases on fixed per-path magnitudes (block-fading step)."""
    gains = np.asarray(gains, dtype=complex)
    return np.abs(gains) * np.exp(2j * np.pi * rng.random(gains.shape))


def assemble_channel(paths: PathSet, geom: ArrayGeometry) -> np.ndarray:
    """Spatial channel H = gamma * sum_p alpha_p a_rx(aoa_p) a_tx(aod_p)^H.

    Returns an n_rx x n_tx complex matrix.
    """
    gamma = channel_gain_scale(geom.n_tx, geom.n_rx, paths.n_paths)
    a_rx = steering_matrix(paths.aoa, geom.n_rx)
    a_tx = steering_matrix(paths.aod, geom.n_tx)
    return gamma * (a_rx * paths.gains[None, :]) @ a_tx.conj().T


def beamspace_transform(h: np.ndarray, geom: ArrayGeometry) -> np.ndarray:
    """Beamspace image U_rx @ H @ U_tx^H of a spatial channel.

    Both factors are unitary, so the Frobenius norm is preserved exactly.
    """
    h = np.asarray(h)
    if h.shape != (geom.n_rx, geom.n_tx):
        raise ValueError(
            f"channel shape {h.shape} does not match geometry "
            f"({geom.n_rx}, {geom.n_tx})"
        )
    u_rx = dft_matrix(geom.n_rx)
    u_tx = dft_matrix(geom.n_tx)
    return u_rx @ h @ u_tx.conj().T


def evolve_motion_state(
    prev: MotionFeatureState,
    dynamics: MotionDynamics,
    rng: np.random.Generator,
    angle_low: float = -0.5,
    angle_high: float = 0.5,
) -> MotionFeatureState:
    """One random-walk step: add drift plus Gaussian jitter, wrap, advance time."""

    def step(a):
        jitter = dynamics.sigma * rng.standard_normal(a.shape)
        return wrap_interval(a + dynamics.drift + jitter, angle_low, angle_high)

    return MotionFeatureState(
        aod=step(prev.aod), aoa=step(prev.aoa), timestamp=prev.timestamp + 1
    )


def generate_trajectory(
    cfg: ClusterConfig,
    dynamics: MotionDynamics,
    length: int,
    rng: np.random.Generator,
) -> tuple[list[MotionFeatureState], PathSet]:
    """Initial path draw plus a length-step angle trajectory.

    Returns (states, initial_paths); states[0] holds the initial angles and
    len(states) == length. The initial PathSet carries the gain magnitudes
    reused when the per-step channels are materialized.
    """
    if length < 1:
        raise ValueError("trajectory length must be at least 1")
    paths = generate_paths(cfg, rng)
    state = MotionFeatureState(aod=paths.aod.copy(), aoa=paths.aoa.copy(), timestamp=0)
    states = [state]
    for _ in range(length - 1):
        state = evolve_motion_state(
            state, dynamics, rng, cfg.angle_low, cfg.angle_high
        )
        states.append(state)
    return states, paths
