"""Hybrid analog-digital transceiver over a beamspace channel.

The analog stage is pure beam selection: each RF chain connects to one
beamspace port, so the selection matrices have one unit entry per column.
The digital stage is an SVD precoder/combiner on the reduced channel with
equal power across streams. Spectral efficiency is the log-det rate of the
combined link with the post-combining noise covariance folded in.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


@dataclass
class BeamSelection:
    """Row (receive) and column (transmit) beam indices kept by the RF chains."""

    rx_indices: np.ndarray
    tx_indices: np.ndarray

    def __post_init__(self):
        self.rx_indices = np.asarray(self.rx_indices, dtype=int)
        self.tx_indices = np.asarray(self.tx_indices, dtype=int)
        for idx in (self.rx_indices, self.tx_indices):
            if idx.ndim != 1 or len(np.unique(idx)) != idx.size:
                raise ValueError("beam indices must be 1-d and distinct")


@dataclass
class BasebandMatrices:
    """Digital precoder (n_tx_rf x n_streams) and combiner (n_rx_rf x n_streams)."""

    f_bb: np.ndarray
    w_bb: np.ndarray

    def __post_init__(self):
        self.f_bb = np.asarray(self.f_bb, dtype=complex)
        self.w_bb = np.asarray(self.w_bb, dtype=complex)
        if self.f_bb.ndim != 2 or self.w_bb.ndim != 2:
            raise ValueError("baseband matrices must be 2-d")
        if self.f_bb.shape[1] != self.w_bb.shape[1]:
            raise ValueError("precoder and combiner must agree on stream count")

    @property
    def n_streams(self) -> int:
        return self.f_bb.shape[1]


@dataclass
class LinkBudget:
    """Transmit power and noise power on the linear scale."""

    rho: float = 1.0
    sigma2: float = 1.0

    def __post_init__(self):
        if self.rho <= 0 or self.sigma2 <= 0:
            raise ValueError("rho and sigma2 must be positive")

    @property
    def snr_db(self) -> float:
        return 10.0 * np.log10(self.rho / self.sigma2)

    @classmethod
    def from_snr_db(cls, snr_db: float, rho: float = 1.0) -> "LinkBudget":
        return cls(rho=rho, sigma2=rho / 10.0 ** (snr_db / 10.0))


def selection_matrix(indices: np.ndarray, n: int) -> np.ndarray:
    """n x k binary matrix with column j picking entry indices[j]."""
    indices = np.asarray(indices, dtype=int)
    s = np.zeros((n, indices.size))
    s[indices, np.arange(indices.size)] = 1.0
    return s


def select_beams(h_b: np.ndarray, n_tx_rf: int, n_rx_rf: int) -> BeamSelection:
    """Keep the highest-energy rows and columns of the beamspace channel.

    Energy is the squared row/column norm; ties break toward the lower
    index, and the returned index arrays are sorted ascending.
    """
    h_b = np.asarray(h_b)
    n_rx, n_tx = h_b.shape
    if n_tx_rf > n_tx or n_rx_rf > n_rx:
        raise ValueError("RF chain count exceeds beam count")
    if n_tx_rf < 1 or n_rx_rf < 1:
        raise ValueError("RF chain counts must be at least 1")
    energy = np.abs(h_b) ** 2
    # stable argsort on -energy keeps the lower original index among ties
    rx = np.sort(np.argsort(-energy.sum(axis=1), kind="stable")[:n_rx_rf])
    tx = np.sort(np.argsort(-energy.sum(axis=0), kind="stable")[:n_tx_rf])
    return BeamSelection(rx_indices=rx, tx_indices=tx)


def reduce_channel(h_b: np.ndarray, sel: BeamSelection) -> np.ndarray:
    """Effective channel seen by the RF chains: selected rows and columns."""
    return np.asarray(h_b)[np.ix_(sel.rx_indices, sel.tx_indices)]


def design_baseband(h_reduced: np.ndarray, n_s: int) -> BasebandMatrices:
    """SVD precoder/combiner on the reduced channel, equal power per stream.

    F_BB holds the top n_s right singular vectors scaled so that the
    selected-and-precoded transmit matrix has squared Frobenius norm n_s
    (selection columns are orthonormal, so the norm is checked on F_BB
    itself). W_BB holds the top n_s left singular vectors. When the channel
    rank falls below n_s the remaining directions come from the orthonormal
    complement that the full SVD already provides, with a warning.
    """
    h_reduced = np.asarray(h_reduced, dtype=complex)
    if h_reduced.ndim != 2:
        raise ValueError("reduced channel must be a matrix")
    if n_s < 1 or n_s > min(h_reduced.shape):
        raise ValueError("stream count must be in [1, min(h_reduced.shape)]")
    u, s, vh = np.linalg.svd(h_reduced)
    tol = max(h_reduced.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    if np.count_nonzero(s > tol) < n_s:
        warnings.warn(
            "channel rank below stream count; padding with orthonormal "
            "complement directions",
            RuntimeWarning,
        )
    f_bb = vh[:n_s].conj().T
    f_bb = f_bb * np.sqrt(n_s) / np.linalg.norm(f_bb)
    w_bb = u[:, :n_s]
    return BasebandMatrices(f_bb=f_bb, w_bb=w_bb)


def received_signal(
    h_b: np.ndarray,
    sel: BeamSelection,
    bb: BasebandMatrices,
    s: np.ndarray,
    budget: LinkBudget,
    rng: np.random.Generator,
) -> np.ndarray:
    """Combined baseband observation of one symbol vector.

    y = W_BB^H S_r^H (H_b x + n) with x = sqrt(rho/n_s) S_t F_BB s and
    n ~ CN(0, sigma2 I).
    """
    h_b = np.asarray(h_b, dtype=complex)
    s = np.asarray(s, dtype=complex)
    n_rx, n_tx = h_b.shape
    if s.shape != (bb.n_streams,):
        raise ValueError("symbol vector length must equal the stream count")
    s_t = selection_matrix(sel.tx_indices, n_tx)
    s_r = selection_matrix(sel.rx_indices, n_rx)
    x = np.sqrt(budget.rho / bb.n_streams) * (s_t @ bb.f_bb @ s)
    noise = np.sqrt(budget.sigma2 / 2.0) * (
        rng.standard_normal(n_rx) + 1j * rng.standard_normal(n_rx)
    )
    return bb.w_bb.conj().T @ s_r.T @ (h_b @ x + noise)


def spectral_efficiency(
    h_b: np.ndarray,
    sel: BeamSelection,
    bb: BasebandMatrices,
    budget: LinkBudget,
) -> float:
    """Achievable rate log2 det(I + rho/(sigma2 n_s) R_n^-1 G G^H) in bits/s/Hz.

    G = W_BB^H S_r^H H_b S_t F_BB is the combined link matrix and
    R_n = W_BB^H S_r^H S_r W_BB the post-combining noise covariance. The
    determinant is evaluated on the Hermitian form I + c G^H R_n^-1 G, which
    has the same value. A singular R_n is nudged by 1e-12 I with a warning.
    """
    g = bb.w_bb.conj().T @ reduce_channel(h_b, sel) @ bb.f_bb
    r_n = bb.w_bb.conj().T @ bb.w_bb
    r_n = 0.5 * (r_n + r_n.conj().T)
    try:
        np.linalg.cholesky(r_n)
    except np.linalg.LinAlgError:
        warnings.warn("singular noise covariance; regularizing", RuntimeWarning)
        r_n = r_n + 1e-12 * np.eye(r_n.shape[0])
    c = budget.rho / (budget.sigma2 * bb.n_streams)
    m = np.eye(bb.n_streams) + c * (g.conj().T @ np.linalg.solve(r_n, g))
    sign, logdet = np.linalg.slogdet(m)
    if sign.real <= 0:
        raise ArithmeticError("rate determinant not positive")
    return float(logdet / np.log(2.0))


def link_spectral_efficiency(
    h_design: np.ndarray,
    h_true: np.ndarray,
    n_tx_rf: int,
    n_rx_rf: int,
    n_s: int,
    budget: LinkBudget,
) -> float:
    """Design the transceiver from one channel estimate, rate it on the truth.

    With h_design = h_true this is the perfect-CSI upper bound.
    """
    sel = select_beams(h_design, n_tx_rf, n_rx_rf)
    bb = design_baseband(reduce_channel(h_design, sel), n_s)
    return spectral_efficiency(h_true, sel, bb, budget)


def benchmark_spectral_efficiency(
    h_est: np.ndarray,
    h_true: np.ndarray,
    n_tx_rf: int,
    n_rx_rf: int,
    n_s: int,
    budget: LinkBudget,
) -> float:
    """Rate an estimate against the true channel's own beam selection.

    The analog stage is fixed by the reference selection derived from the
    true channel, the digital stage is designed from the estimate restricted
    to those beams, and the rate is evaluated on the true reduced channel.
    Because any semi-unitary baseband pair can only shrink the singular
    values of the reduced truth, the h_est = h_true design is a per-instance
    upper bound, which makes benchmark curves directly comparable.
    """
    sel = select_beams(h_true, n_tx_rf, n_rx_rf)
    bb = design_baseband(reduce_channel(h_est, sel), n_s)
    return spectral_efficiency(h_true, sel, bb, budget)
