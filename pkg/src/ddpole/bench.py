"""Experiment harness: reactor stabilisation, trajectory-length study, Monte Carlo.

Every trial draws from its own RNG stream seeded by
``SeedSequence([master_seed, experiment_tag, cell..., trial_id])``, so records
do not depend on execution order or on the number of workers.
"""
from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .baselines import identify_least_squares, model_based_place
from .errors import DDPoleError, InvalidInputError
from .numerics import numerical_rank
from .plant import LtiSystem, SimulationConfig, chemical_reactor, closed_loop, random_controllable, simulate
from .signals import extract_data_matrices
from .synthesis import PoleSpec, place_poles, pole_matching_error

REACTOR_POLES = (0.5, 0.3, 0.0002, 0.0065)
EXPERIMENTS = ("reactor", "vary_t", "montecarlo")
_TAGS = {"reactor": 0, "vary_t": 1, "montecarlo": 2}


@dataclass
class ExperimentConfig:
    """Knobs for one experiment; unspecified fields take per-experiment defaults.

    ``samples_per_state`` fixes the Monte Carlo record length ``T = k * n``.
    """

    experiment: str = "montecarlo"
    T_values: list = field(default_factory=lambda: [10, 15, 20, 25, 30, 40, 50])
    n_values: list = field(default_factory=lambda: [4, 6, 8, 10])
    noise_variances: list = field(default_factory=lambda: [1.0, 10.0, 100.0])
    trials: int = 100
    master_seed: int = 0
    output_path: str | None = None
    samples_per_state: int = 20
    sweeps: int = 10
    workers: int = 1

    def __post_init__(self):
        self.experiment = self.experiment.replace("-", "_")
        if self.experiment not in EXPERIMENTS:
            raise InvalidInputError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if int(self.trials) < 1:
            raise InvalidInputError("trials must be >= 1")
        if any(s < 0 for s in self.noise_variances):
            raise InvalidInputError("noise variances must be >= 0")
        for n in self.n_values:
            if n < 2:
                raise InvalidInputError("state dimensions must be >= 2")
            m = max(1, n // 2)
            if self.samples_per_state * n < n + m + 1:
                raise InvalidInputError(f"T = {self.samples_per_state * n} too short for n={n}")
        if self.experiment == "vary_t" and min(self.T_values) < 4 + 2 + 1:
            raise InvalidInputError("reactor runs need T >= n + m + 1 = 7")

    @classmethod
    def default(cls, experiment: str, **overrides) -> "ExperimentConfig":
        experiment = experiment.replace("-", "_")
        base = {"experiment": experiment}
        if experiment == "vary_t":
            base["trials"] = 10
        elif experiment == "reactor":
            base["trials"] = 1
        base.update(overrides)
        return cls(**base)

    @classmethod
    def from_json(cls, experiment: str, obj: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
        obj = {k: v for k, v in obj.items() if k != "experiment"}
        return cls.default(experiment, **obj)


@dataclass
class TrialRecord:
    experiment: str
    cell: str
    trial_id: int
    n: int
    T: int
    sigma_e2: float
    method: str
    arm: str = ""
    placement_error: float = float("nan")
    mean_error: float = float("nan")
    status: str = "ok"
    reason: str = ""
    note: str = ""
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == "ok"


RECORD_COLUMNS = [f.name for f in fields(TrialRecord) if f.name != "wall_time"]


def _rng(*key) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in key]))


def _child_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(2**63 - 1))


def _true_error(sys: LtiSystem, K, poles):
    return pole_matching_error(poles, np.linalg.eigvals(sys.A - sys.B @ K))


def _timed(record: TrialRecord, fn):
    t0 = time.perf_counter()
    try:
        fn(record)
    except (DDPoleError, np.linalg.LinAlgError) as exc:
        record.status = "failed"
        record.reason = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    record.wall_time = time.perf_counter() - t0
    return record


# -- reactor -----------------------------------------------------------------

def reactor_data(rng, T: int, sys: LtiSystem | None = None):
    sys = sys or chemical_reactor()
    return simulate(sys, SimulationConfig(T=T, x0=None, rng_seed=rng))


def run_reactor(cfg: ExperimentConfig | None = None):
    """Stabilise the reactor from ``T = 10`` open-loop samples.

    Returns ``(report, records)``; the report carries the gain, the achieved
    spectrum of the true closed loop, the pole errors of the refined and of
    the plain random selection, and the state norm at time ``T``.
    """
    cfg = cfg or ExperimentConfig.default("reactor")
    sys = chemical_reactor()
    T = 10
    rng = _rng(cfg.master_seed, _TAGS["reactor"])
    traj = reactor_data(rng, T, sys)
    dm = extract_data_matrices(traj)
    spec = PoleSpec(REACTOR_POLES)
    x_T = sys.A @ traj.states[-1] + sys.B @ traj.inputs[-1]
    report = {
        "T": T,
        "desired_poles": list(REACTOR_POLES),
        "open_loop_spectrum": sorted(np.linalg.eigvals(sys.A).real.tolist()),
        "state_norm_last_sample": float(np.linalg.norm(traj.states[-1])),
        "state_norm_at_T": float(np.linalg.norm(x_T)),
        "data_rank": numerical_rank(dm.stacked),
        "master_seed": cfg.master_seed,
    }
    record = TrialRecord("reactor", "T=10", 0, sys.n, T, 0.0, "data_driven")
    t0 = time.perf_counter()
    try:
        res = place_poles(dm, spec, seed=_child_seed(rng), sweeps=cfg.sweeps)
        err, mean_err = _true_error(sys, res.K, spec.poles)
        plain = place_poles(dm, spec, seed=_child_seed(rng), sweeps=0)
        plain_err, _ = _true_error(sys, plain.K, spec.poles)
        ach = np.linalg.eigvals(sys.A - sys.B @ res.K)
        report.update({
            "status": "ok",
            "K": res.K.tolist(),
            "achieved_spectrum": [[float(z.real), float(z.imag)] for z in ach[np.argsort(-ach.real)]],
            "placement_error": err,
            "mean_error": mean_err,
            "placement_error_plain_selection": plain_err,
            "eigvec_condition": res.eigvec_condition,
        })
        record.placement_error, record.mean_error = err, mean_err
    except DDPoleError as exc:
        report.update({"status": "failed", "reason": f"{type(exc).__name__}: {exc}"})
        record.status, record.reason = "failed", report["reason"]
    record.wall_time = time.perf_counter() - t0
    return report, [record]


# -- vary T --------------------------------------------------------------------

def _vary_t_seed(cfg: ExperimentConfig, seed_id: int):
    """All records for one seed: pre-stabilising gain, then both arms per T."""
    sys = chemical_reactor()
    spec = PoleSpec(REACTOR_POLES)
    base = _rng(cfg.master_seed, _TAGS["vary_t"], seed_id)
    pre = None
    pre_reason = ""
    try:
        dm10 = extract_data_matrices(reactor_data(base, 10, sys))
        pre = place_poles(dm10, spec, seed=_child_seed(base), sweeps=cfg.sweeps).K
    except DDPoleError as exc:
        pre_reason = f"pre-stabilising gain failed: {type(exc).__name__}: {exc}"
    out = []
    for T in cfg.T_values:
        T = int(T)
        cell = f"T={T}"
        rng_u = _rng(cfg.master_seed, _TAGS["vary_t"], seed_id, T, 0)
        rng_s = _rng(cfg.master_seed, _TAGS["vary_t"], seed_id, T, 1)

        def unstable(rec, rng=rng_u, T=T):
            dm = extract_data_matrices(reactor_data(rng, T, sys))
            r = numerical_rank(dm.stacked)
            if r < sys.n + sys.m:
                rec.note = f"rank[X0;U0]={r}<{sys.n + sys.m}"
            res = place_poles(dm, spec, seed=_child_seed(rng), sweeps=cfg.sweeps, check_data=False)
            rec.placement_error, rec.mean_error = _true_error(sys, res.K, spec.poles)

        def stable(rec, rng=rng_s, T=T):
            if pre is None:
                raise InvalidInputError(pre_reason)
            cl = closed_loop(sys, pre)
            dm = extract_data_matrices(reactor_data(rng, T, cl))
            res = place_poles(dm, spec, seed=_child_seed(rng), sweeps=cfg.sweeps, check_data=False)
            rec.placement_error, rec.mean_error = _true_error(sys, pre + res.K, spec.poles)

        out.append(_timed(TrialRecord("vary_t", cell, seed_id, sys.n, T, 0.0, "data_driven", "unstable"), unstable))
        out.append(_timed(TrialRecord("vary_t", cell, seed_id, sys.n, T, 0.0, "data_driven", "stable"), stable))
    return out


def run_vary_t(cfg: ExperimentConfig | None = None):
    """Placement error versus record length on raw and pre-stabilised reactor data.

    The unstable arm places on open-loop reactor data. The stable arm closes
    the loop with a gain computed from ``T = 10`` samples, records new data
    from that stable loop and places again; the total gain is the sum. Both
    arms skip the up-front rank guard so that degraded data still yields a
    gain; rank deficits are noted on the record.
    """
    cfg = cfg or ExperimentConfig.default("vary_t")
    records = []
    for seed_id in range(cfg.trials):
        records.extend(_vary_t_seed(cfg, seed_id))
    return _sorted(records)


# -- Monte Carlo --------------------------------------------------------------

def _mc_trial(args):
    cfg, n, sigma2, trial_id = args
    rng = _rng(cfg.master_seed, _TAGS["montecarlo"], n, int(round(sigma2 * 1_000_000)), trial_id)
    sys = random_controllable(n, rng)
    poles = rng.uniform(-n, n, size=n)
    T = cfg.samples_per_state * n
    traj = simulate(sys, SimulationConfig(T=T, x0="random", noise_variance=sigma2, rng_seed=rng))
    dm = extract_data_matrices(traj)
    spec = PoleSpec(poles)
    place_seed = _child_seed(rng)
    cell = f"n={n},sigma_e2={sigma2:g}"

    def data_driven(rec):
        res = place_poles(dm, spec, seed=place_seed, sweeps=cfg.sweeps)
        rec.placement_error, rec.mean_error = _true_error(sys, res.K, spec.poles)

    def model_based(rec):
        model = identify_least_squares(dm)
        K = model_based_place(model.system(), spec, sweeps=2 * cfg.sweeps)
        rec.placement_error, rec.mean_error = _true_error(sys, K, spec.poles)

    return [
        _timed(TrialRecord("montecarlo", cell, trial_id, n, T, float(sigma2), "data_driven"), data_driven),
        _timed(TrialRecord("montecarlo", cell, trial_id, n, T, float(sigma2), "model_based"), model_based),
    ]


def run_montecarlo(cfg: ExperimentConfig | None = None):
    """Data-driven versus identify-then-place on noisy data from random stable plants."""
    cfg = cfg or ExperimentConfig.default("montecarlo")
    tasks = [(cfg, int(n), float(s2), t)
             for s2 in cfg.noise_variances for n in cfg.n_values for t in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(_mc_trial, tasks, chunksize=8))
    else:
        chunks = [_mc_trial(t) for t in tasks]
    return _sorted([r for chunk in chunks for r in chunk])


def _sorted(records):
    return sorted(records, key=lambda r: (r.experiment, r.sigma_e2, r.n, r.T, r.trial_id, r.method, r.arm))


# -- summaries and output -----------------------------------------------------

def _stats(values):
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return {"mean": None, "median": None}
    return {"mean": float(v.mean()), "median": float(np.median(v))}


def summarize(records, cfg: ExperimentConfig | None = None) -> dict:
    """Per-cell aggregates over ok trials, with failure counts."""
    cells = {}
    for r in records:
        key = r.method + (f"/{r.arm}" if r.arm else "")
        group = cells.setdefault(r.cell, {}).setdefault(key, {"ok": [], "failed": 0})
        if r.ok and np.isfinite(r.placement_error):
            group["ok"].append(r.placement_error)
        else:
            group["failed"] += 1
    out = {}
    for cell, groups in cells.items():
        entry = {}
        for key, g in groups.items():
            entry[key] = {"count_ok": len(g["ok"]), "count_failed": g["failed"], **_stats(g["ok"])}
        dd, mb = entry.get("data_driven"), entry.get("model_based")
        if dd and mb and dd["mean"] and mb["mean"] is not None:
            entry["ratio_model_over_data_mean"] = mb["mean"] / dd["mean"]
        un, st = entry.get("data_driven/unstable"), entry.get("data_driven/stable")
        if un and st and un["median"] is not None and st["median"]:
            entry["ratio_unstable_over_stable_median"] = un["median"] / st["median"]
        out[cell] = entry
    summary = {"cells": out, "records": len(records)}
    if cfg is not None:
        summary["config"] = {k: v for k, v in asdict(cfg).items() if k not in ("output_path", "workers")}
        summary["master_seed"] = cfg.master_seed
    return summary


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def emit_results(records, path, summary: dict | None = None):
    """Write ``records.csv``, ``summary.json`` and ``timings.csv`` under ``path``.

    ``records.csv`` and ``summary.json`` hold no timing information and are
    byte-identical for identical inputs; wall-clock times go to ``timings.csv``.
    """
    if not records:
        raise InvalidInputError("no records to write")
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InvalidInputError(f"cannot create {out}: {exc}") from exc
    rec_path = out / "records.csv"
    with rec_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_COLUMNS)
        for r in records:
            w.writerow([_fmt(getattr(r, c)) for c in RECORD_COLUMNS])
    with (out / "timings.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["experiment", "cell", "trial_id", "method", "arm", "wall_time"])
        for r in records:
            w.writerow([r.experiment, r.cell, r.trial_id, r.method, r.arm, f"{r.wall_time:.6f}"])
    summary = summary if summary is not None else summarize(records)
    sum_path = out / "summary.json"
    sum_path.write_text(json.dumps(_json_safe(summary), indent=2, sort_keys=True, allow_nan=False) + "\n")
    return rec_path, sum_path


def run(cfg: ExperimentConfig):
    """Run the configured experiment; returns ``(records, summary)``."""
    if cfg.experiment == "reactor":
        report, records = run_reactor(cfg)
        summary = summarize(records, cfg)
        summary["reactor"] = report
    elif cfg.experiment == "vary_t":
        records = run_vary_t(cfg)
        summary = summarize(records, cfg)
    else:
        records = run_montecarlo(cfg)
        summary = summarize(records, cfg)
    return records, summary
