"""Seeded sweep driver: derived RNG streams, the trial grid, CSV, summaries.

The CSV is the artifact of record. Runs are reproducible from
(config, master_seed) alone: every random draw comes from a stream derived
by hashing the master seed with a purpose tag, so adding predictors or
SNR points never shifts the channels other predictors see.
"""

import csv
import hashlib
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import generate_trajectory
from .config import ExperimentConfig
from .metrics import summarize_reduction, tau1, tau2
from .tracking import (
    build_dataset,
    fit_predictor,
    generate_pilot_matrix,
    predict_tracked_states,
    prepare_trial,
    track_and_evaluate,
)

SCHEMA_VERSION = "1"

# frozen column order; bump SCHEMA_VERSION on any change
CSV_COLUMNS = (
    "schema",
    "scenario",
    "predictor",
    "seed",
    "snr_db",
    "time_step",
    "nmse",
    "rmse",
    "tau1",
    "tau2",
    "se",
    "wall_time",
)

_FIT_FREE = ("omp", "perfect_csi")


def derive_seed(master_seed: int, *tags) -> int:
    """Fold sha256(master_seed, tags...) to a 64-bit stream seed.

    Purpose tags keep streams independent: the channel stream for trial 3
    never collides with the fit stream for trial 3, and inserting a new
    predictor cannot shift anyone else's draws.
    """
    h = hashlib.sha256()
    h.update(str(int(master_seed)).encode("utf-8"))
    for tag in tags:
        h.update(b"/")
        h.update(str(tag).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "little")


def derived_rng(master_seed: int, *tags) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, *tags))


@dataclass
class ResultRecord:
    """One scored (predictor, trial, SNR, tracked step) cell."""

    schema: str
    scenario: str
    predictor: str
    seed: int
    snr_db: float
    time_step: int
    nmse: float
    rmse: float
    tau1: float
    tau2: float
    se: float
    wall_time: float

    def row(self) -> list:
        return [
            self.schema,
            self.scenario,
            self.predictor,
            str(self.seed),
            _fmt(self.snr_db),
            str(self.time_step),
            _fmt(self.nmse),
            _fmt(self.rmse),
            _fmt(self.tau1),
            _fmt(self.tau2),
            _fmt(self.se),
            _fmt(self.wall_time),
        ]


def _fmt(x: float) -> str:
    return f"{float(x):.12g}"


@dataclass
class TrialOutput:
    """Raw per-trial payload before dispersion stats are folded in."""

    trial_index: int
    # rows: predictor -> list of (snr_db, time_step, nmse, rmse, se)
    rows: dict
    # forecasts: predictor -> (n_tracked_steps, feature_dim) or None
    forecasts: dict
    wall: dict


def run_trial(cfg: ExperimentConfig, trial_index: int,
              timing: bool = False) -> TrialOutput:
    """Run every configured predictor over one channel realization.

    Channel, pilot, and slot-noise streams are tagged by trial only, so all
    predictors and all SNR points inside a trial face identical propagation
    conditions. Fit streams are tagged by (predictor, trial): repeated fits
    differ, paired comparisons stay paired. channel_seed_mode="shared" pins
    the channel-side tags to trial 0 so only fit randomness varies across
    trials.
    """
    chan_tag = 0 if cfg.channel_seed_mode == "shared" else trial_index
    channel_rng = derived_rng(cfg.master_seed, "channel", chan_tag)
    noise_rng = derived_rng(cfg.master_seed, "noise", chan_tag)
    trial = prepare_trial(cfg, channel_rng, noise_rng)
    pilot_rng = derived_rng(cfg.master_seed, "pilot", chan_tag)
    pilots_unit = generate_pilot_matrix(
        cfg.geometry.n_tx, cfg.pilot_len, 1.0, pilot_rng, cfg.pilot_mode
    )
    rows = {}
    forecasts_out = {}
    wall = {}
    for predictor in cfg.predictors:
        t0 = time.perf_counter()
        fit_rng = derived_rng(cfg.master_seed, "fit", predictor, trial_index)
        fitted = fit_predictor(cfg, predictor, trial.dataset, fit_rng)
        forecasts = predict_tracked_states(cfg, predictor, fitted,
                                           trial.dataset)
        step_results = track_and_evaluate(
            cfg, predictor, trial, pilots_unit,
            fitted=fitted, forecasts=forecasts,
        )
        wall[predictor] = time.perf_counter() - t0 if timing else 0.0
        forecasts_out[predictor] = (
            None if forecasts is None
            else np.stack([f.features() for f in forecasts])
        )
        rows[predictor] = [
            (r.snr_db, r.time_step, r.nmse, r.rmse, r.se)
            for r in step_results
        ]
    return TrialOutput(trial_index, rows, forecasts_out, wall)


def _run_trial_args(args):
    return run_trial(*args)


def _dispersion_by_step(forecast_stacks: list) -> tuple:
    """Per-step tau over a list of (n_steps, d) forecast matrices."""
    n_steps = forecast_stacks[0].shape[0]
    t1 = np.empty(n_steps)
    t2 = np.empty(n_steps)
    for j in range(n_steps):
        mats = [f[j][None, :] for f in forecast_stacks]
        t1[j] = tau1(mats)
        t2[j] = tau2(mats)
    return t1, t2


def run_sweep(cfg: ExperimentConfig, jobs: int = 1,
              timing: bool = False) -> list:
    """Execute trials x SNR grid x predictors; return ordered ResultRecords.

    Trials are independent work items; jobs > 1 fans them over a process
    pool and reassembles in trial order, so the record stream is identical
    to a serial run. tau columns are filled per (predictor, step) across
    trials when channel_seed_mode="shared" (the channel is pinned, so
    dispersion isolates fit randomness); otherwise they are 0.0 because
    cross-trial spread would conflate channel variation with fit variation.
    wall_time is 0.0 unless timing is requested, keeping fixed-seed runs
    byte-identical.
    """
    cfg.validate()
    arg_list = [(cfg, t, timing) for t in range(cfg.trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_run_trial_args, arg_list))
    else:
        outputs = [run_trial(*args) for args in arg_list]

    use_tau = cfg.channel_seed_mode == "shared" and cfg.trials >= 2
    tau_by_predictor = {}
    for predictor in cfg.predictors:
        stacks = [o.forecasts[predictor] for o in outputs]
        if use_tau and stacks[0] is not None:
            tau_by_predictor[predictor] = _dispersion_by_step(stacks)
        else:
            zeros = np.zeros(cfg.n_tracked_steps)
            tau_by_predictor[predictor] = (zeros, zeros)

    records = []
    for predictor in cfg.predictors:
        t1_steps, t2_steps = tau_by_predictor[predictor]
        for out in outputs:
            for snr_db, step, nmse, rmse, se in out.rows[predictor]:
                records.append(ResultRecord(
                    schema=SCHEMA_VERSION,
                    scenario=cfg.scenario_id,
                    predictor=predictor,
                    seed=out.trial_index,
                    snr_db=float(snr_db),
                    time_step=int(step),
                    nmse=float(nmse),
                    rmse=float(rmse),
                    tau1=float(t1_steps[step]),
                    tau2=float(t2_steps[step]),
                    se=float(se),
                    wall_time=float(out.wall[predictor]),
                ))
    _check_finite(records)
    return records


def _check_finite(records: list) -> None:
    for r in records:
        for name in ("snr_db", "nmse", "rmse", "tau1", "tau2", "se",
                     "wall_time"):
            if not np.isfinite(getattr(r, name)):
                raise RuntimeError(
                    f"non-finite {name} in record (predictor={r.predictor}, "
                    f"seed={r.seed}, snr_db={r.snr_db}, "
                    f"time_step={r.time_step})"
                )


def write_csv(records: list, path) -> None:
    """UTF-8, comma-delimited, frozen header; floats printed with %.12g."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow(r.row())


def read_csv(path) -> list:
    """Parse a results CSV back into ResultRecords, validating the schema."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("empty results CSV: missing header row")
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(_header_mismatch(header))
        records = []
        for row in reader:
            if not row:
                continue
            if len(row) != len(CSV_COLUMNS):
                raise ValueError(
                    f"row {len(records) + 2} has {len(row)} fields, "
                    f"expected {len(CSV_COLUMNS)}"
                )
            rec = ResultRecord(
                schema=row[0],
                scenario=row[1],
                predictor=row[2],
                seed=int(row[3]),
                snr_db=float(row[4]),
                time_step=int(row[5]),
                nmse=float(row[6]),
                rmse=float(row[7]),
                tau1=float(row[8]),
                tau2=float(row[9]),
                se=float(row[10]),
                wall_time=float(row[11]),
            )
            if rec.schema != SCHEMA_VERSION:
                raise ValueError(
                    f"schema version {rec.schema!r} in column 'schema' is "
                    f"not supported (expected {SCHEMA_VERSION!r})"
                )
            records.append(rec)
    if not records:
        raise ValueError("empty results CSV: no data rows")
    return records


def _header_mismatch(header: list) -> str:
    expected = set(CSV_COLUMNS)
    got = set(header)
    missing = [c for c in CSV_COLUMNS if c not in got]
    extra = [c for c in header if c not in expected]
    if missing:
        return f"results CSV is missing column '{missing[0]}'"
    if extra:
        return f"results CSV has unknown column '{extra[0]}'"
    return (
        "results CSV column order does not match schema "
        f"{SCHEMA_VERSION}: got {header}"
    )


def _group_mean_std(records: list, value: str) -> dict:
    """(predictor, snr_db) -> (mean, std, count) over the named field."""
    cells = {}
    for r in records:
        cells.setdefault((r.predictor, r.snr_db), []).append(
            getattr(r, value)
        )
    return {
        key: (float(np.mean(v)), float(np.std(v)), len(v))
        for key, v in cells.items()
    }


def summarize(records: list) -> dict:
    """Per-SNR means, dispersion-reduction and SE-gain percentages.

    Reductions are quoted for the two upgrade steps the predictor family
    defines: uniform-random-init ERM -> Xavier ERM, and Xavier ERM ->
    boosted ensemble. SE gains are quoted against the OMP baseline.
    """
    predictors = sorted({r.predictor for r in records})
    snrs = sorted({r.snr_db for r in records})
    nmse_cells = _group_mean_std(records, "nmse")
    se_cells = _group_mean_std(records, "se")
    tau2_mean = {
        p: float(np.mean([r.tau2 for r in records if r.predictor == p]))
        for p in predictors
    }
    tau1_mean = {
        p: float(np.mean([r.tau1 for r in records if r.predictor == p]))
        for p in predictors
    }

    reductions = {}
    for label, base, better in (
        ("tau2_random_to_xavier", "erm_random", "erm_xavier"),
        ("tau2_xavier_to_ensemble", "erm_xavier", "ensemble"),
    ):
        if base in tau2_mean and better in tau2_mean and tau2_mean[base] > 0:
            reductions[label] = summarize_reduction(
                tau2_mean[base], tau2_mean[better]
            )

    se_gains = {}
    if "omp" in predictors:
        for p in predictors:
            if p == "omp":
                continue
            gains = {}
            for snr in snrs:
                base = se_cells.get(("omp", snr))
                cell = se_cells.get((p, snr))
                if base and cell and base[0] > 0:
                    gains[snr] = 100.0 * (cell[0] - base[0]) / base[0]
            if gains:
                se_gains[p] = gains

    return {
        "predictors": predictors,
        "snrs_db": snrs,
        "nmse": nmse_cells,
        "se": se_cells,
        "tau1_mean": tau1_mean,
        "tau2_mean": tau2_mean,
        "reductions": reductions,
        "se_gain_vs_omp_pct": se_gains,
        "n_records": len(records),
    }


def format_summary(summary: dict) -> str:
    """Render the summary dict as aligned mean +/- std tables."""
    lines = []
    snrs = summary["snrs_db"]
    preds = summary["predictors"]

    def table(title, cells):
        lines.append(title)
        head = "predictor".ljust(14) + "".join(
            f"{snr:>10.4g} dB" for snr in snrs
        )
        lines.append(head)
        for p in preds:
            parts = [p.ljust(14)]
            for snr in snrs:
                cell = cells.get((p, snr))
                if cell is None:
                    parts.append(" " * 13)
                else:
                    parts.append(
                        f"{cell[0]:.4g}+-{cell[1]:.2g}".rjust(13)
                    )
            lines.append("".join(parts))
        lines.append("")

    table("NMSE (mean +- std per cell)", summary["nmse"])
    table("SE bits/s/Hz (mean +- std per cell)", summary["se"])

    if any(v > 0 for v in summary["tau2_mean"].values()):
        lines.append("prediction dispersion (mean tau1 / tau2)")
        for p in preds:
            lines.append(
                f"  {p.ljust(14)} {summary['tau1_mean'][p]:.6g} / "
                f"{summary['tau2_mean'][p]:.6g}"
            )
        lines.append("")
    for label, pct in summary["reductions"].items():
        lines.append(f"{label}: {pct:.1f}% reduction")
    for p, gains in summary["se_gain_vs_omp_pct"].items():
        joined = ", ".join(
            f"{snr:g} dB: {g:+.1f}%" for snr, g in sorted(gains.items())
        )
        lines.append(f"SE gain of {p} over omp: {joined}")
    lines.append(f"records: {summary['n_records']}")
    return "\n".join(lines)


def prediction_dispersion(cfg: ExperimentConfig, predictor: str,
                          n_fits: int, dataset_index: int = 0) -> tuple:
    """(tau1, tau2) of tracked forecasts across repeated fits of one dataset.

    The dataset (trajectory) is pinned by dataset_index while the fit
    stream varies, so the spread measures initialization/training
    randomness only. Only predictors with a fit stage qualify. Forecasts
    are taken unwrapped (edge wrapping would inflate the spread) and the
    ensemble contributes its stage-count-averaged combination, the form
    whose dispersion the boosting phase is meant to shrink.
    """
    if predictor in _FIT_FREE:
        raise ValueError(
            f"predictor {predictor!r} has no fit randomness to measure"
        )
    channel_rng = derived_rng(cfg.master_seed, "channel", dataset_index)
    states, _ = generate_trajectory(
        cfg.clusters, cfg.motion, cfg.trajectory_len, channel_rng
    )
    dataset = build_dataset(
        states, cfg.n_delay, cfg.train_fraction, cfg.n_batches
    )
    preds = []
    for m in range(n_fits):
        fit_rng = derived_rng(
            cfg.master_seed, "fit", predictor, dataset_index, m
        )
        fitted = fit_predictor(cfg, predictor, dataset, fit_rng)
        forecasts = predict_tracked_states(
            cfg, predictor, fitted, dataset, combination="averaged", wrap=False
        )
        preds.append(np.stack([f.features() for f in forecasts]))
    return tau1(preds), tau2(preds)
