"""Error, dispersion, and rate summary metrics over channel estimates.

All matrix norms are Frobenius. The error metrics follow the exact summed
forms (no averaging inside rmse, estimate-energy normalization inside
nmse), and the dispersion pair (tau1, tau2) measures how much repeated
independently seeded fits disagree with their own mean prediction.
"""

from __future__ import annotations

import numpy as np


def _stack(batch) -> np.ndarray:
    arr = np.stack([np.asarray(m) for m in batch])
    if arr.ndim != 3:
        raise ValueError("expected a sequence of matrices")
    return arr


def rmse(truths, estimates) -> float:
    """Root of the summed squared Frobenius errors sqrt(sum_i ||H_i - Hhat_i||^2)."""
    t = _stack(truths)
    e = _stack(estimates)
    if t.shape != e.shape:
        raise ValueError("truth and estimate batches must match in shape")
    if t.shape[0] == 0:
        raise ValueError("empty batch")
    return float(np.sqrt(np.sum(np.abs(t - e) ** 2)))


def nmse(truths, estimates, normalize_by_truth: bool = False) -> float:
    """Summed squared error over summed estimate energy.

    The denominator is the estimate energy sum ||Hhat_i||^2 by default;
    normalize_by_truth switches to the truth energy for comparison with
    conventions that normalize the other way.
    """
    t = _stack(truths)
    e = _stack(estimates)
    if t.shape != e.shape:
        raise ValueError("truth and estimate batches must match in shape")
    if t.shape[0] == 0:
        raise ValueError("empty batch")
    denom = float(np.sum(np.abs(t if normalize_by_truth else e) ** 2))
    if denom <= 0.0:
        raise ZeroDivisionError(
            "normalization energy is zero; nmse undefined for an all-zero "
            + ("truth" if normalize_by_truth else "estimate")
            + " batch"
        )
    return float(np.sum(np.abs(t - e) ** 2) / denom)


def _deviations(predictions) -> np.ndarray:
    p = _stack(predictions)
    if p.shape[0] < 2:
        raise ValueError("dispersion needs at least 2 predictions")
    mu = p.mean(axis=0)
    return np.sqrt(np.sum(np.abs(p - mu) ** 2, axis=(1, 2)))


def tau1(predictions) -> float:
    """Standard deviation of predictions about their mean:
    sqrt(sum_i ||Hhat_i - mu||^2 / M)."""
    d = _deviations(predictions)
    return float(np.sqrt(np.mean(d ** 2)))


def tau2(predictions) -> float:
    """Mean absolute deviation of predictions: sum_i ||Hhat_i - mu|| / M."""
    return float(np.mean(_deviations(predictions)))


def tau_dispersion(predictions) -> tuple[float, float]:
    """(tau1, tau2) in one pass."""
    d = _deviations(predictions)
    return float(np.sqrt(np.mean(d ** 2))), float(np.mean(d))


def summarize_reduction(baseline: float, improved: float) -> float:
    """Percentage drop from baseline to improved: 100 (1 - improved/baseline)."""
    if baseline <= 0.0:
        raise ValueError("baseline must be positive")
    return 100.0 * (1.0 - improved / baseline)


def se_curve(snrs_db, se_values) -> list[tuple[float, float]]:
    """Mean spectral efficiency per SNR point, sorted by SNR.

    snrs_db and se_values pair up elementwise across however many trials
    and time steps produced them.
    """
    snrs_db = np.asarray(snrs_db, dtype=float)
    se_values = np.asarray(se_values, dtype=float)
    if snrs_db.shape != se_values.shape or snrs_db.ndim != 1:
        raise ValueError("snrs_db and se_values must be equal-length vectors")
    if snrs_db.size == 0:
        raise ValueError("empty curve")
    return [
        (float(s), float(se_values[snrs_db == s].mean()))
        for s in np.unique(snrs_db)
    ]
