"""Seeded Monte Carlo driver for symbol-error-rate curves.

Seed splitting
--------------
Every random draw is derived from ``master_seed`` through
:class:`numpy.random.SeedSequence` spawn keys, so any trial can be replayed
in isolation:

* ``(0,)`` the shared matrix in ``fixed`` ensemble mode,
* ``(1, trial)`` matrix (``fresh_per_trial``) and signal of a trial,
* ``(2, trial)`` the unit-variance noise vector of a trial, scaled to each
  noise level (common random numbers across the noise grid),
* ``(3, trial)`` tuning instances for the IST threshold search.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.stats import binomtest

from . import algorithms as alg
from .algorithms import RecoveryConfig
from .measurement import build_dct_ensemble, build_svd_ensemble, noise_level_db_to_variance
from .signal import SignalPrior, generate_sparse_signal

log = logging.getLogger(__name__)

OUTPUT_ENV = "DISCRETE_CS_OUTPUT"
CSV_COLUMNS = ["algorithm", "noise_db", "trials", "errors", "total", "ser", "ci_low", "ci_high", "diverged", "failures"]
CONFIG_HEADER = "# discrete_cs experiment v1"

LABELS = {
    "ims": "IMS/Q",
    "tsr": "TSR/Q",
    "iht": "IHT/Q",
    "ist": "IST/Q",
    "omp": "OMP/Q",
    "ml": "ML",
    "ims_genie_ee": "IMS/Q genie ee",
    "ims_genie_dd": "IMS/Q genie dd",
    "ims_genie_both": "IMS/Q genie both",
}
GENIE = {"ims_genie_ee": "true_ee", "ims_genie_dd": "true_dd", "ims_genie_both": "both"}
IST_GRID = tuple(0.05 * k for k in range(1, 41))


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "results"))


def omp_iterations(noise_db: float) -> int:
    """OMP step count interpolated from 23 at 15 dB to 33 at 21 dB, clipped."""
    return int(np.clip(round(23 + (noise_db - 15.0) * 10.0 / 6.0), 23, 33))


@dataclass
class ExperimentConfig:
    L: int = 258
    K: int = 129
    s: int = 20
    noise_levels_db: list = field(default_factory=lambda: [15.0, 16.0, 17.0, 18.0, 19.0, 20.0, 21.0])
    trials: int = 2000
    algorithms: list = field(default_factory=lambda: ["ims", "tsr", "iht", "ist", "omp"])
    master_seed: int = 0
    ensemble_mode: str = "fresh_per_trial"
    ensemble_kind: str = "svd"
    recovery: dict = field(default_factory=dict)
    ist_tau: dict = field(default_factory=dict)
    tuning_trials: int = 200
    workers: int = 1
    output_dir: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not all(math.isfinite(float(v)) for v in self.noise_levels_db):
            raise ValueError("noise levels must be finite")
        self.noise_levels_db = [float(v) for v in self.noise_levels_db]
        unknown = [a for a in self.algorithms if a not in LABELS]
        if unknown:
            raise ValueError(f"unknown algorithms: {unknown}")
        if self.ensemble_mode not in ("fresh_per_trial", "fixed"):
            raise ValueError(f"unknown ensemble_mode {self.ensemble_mode!r}")
        if self.ensemble_kind not in ("svd", "dct"):
            raise ValueError(f"unknown ensemble_kind {self.ensemble_kind!r}")
        self.ist_tau = {float(k): float(v) for k, v in self.ist_tau.items()}

    @property
    def prior(self) -> SignalPrior:
        return SignalPrior(self.L, self.s)

    def recovery_config(self, name: str) -> RecoveryConfig:
        base = name.split("_")[0]
        options = dict(self.recovery.get(base, {}))
        options.update(self.recovery.get(name, {}))
        return RecoveryConfig(**options)


# -- config file ---------------------------------------------------------

_INT_KEYS = {"L", "K", "s", "trials", "master_seed", "tuning_trials", "workers"}
_LIST_KEYS = {"noise_levels_db", "algorithms"}


def _coerce(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if text.lower() in ("none", "null"):
        return None
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def parse_config(text: str) -> ExperimentConfig:
    """Parse the ``key = value`` experiment format.

    The first line must be the version header. Lists are comma separated,
    ``algo.option = value`` sets a :class:`RecoveryConfig` field for one
    algorithm and ``ist_tau.<db> = <tau>`` pins an IST threshold.
    """
    lines = text.splitlines()
    if not lines or lines[0].strip() != CONFIG_HEADER:
        raise ValueError(f"config must start with {CONFIG_HEADER!r}")
    kwargs: dict = {"recovery": {}, "ist_tau": {}}
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key.startswith("ist_tau."):
            kwargs["ist_tau"][float(key[len("ist_tau."):])] = float(value)
        elif "." in key:
            name, option = key.split(".", 1)
            kwargs["recovery"].setdefault(name, {})[option] = _coerce(value)
        elif key in _LIST_KEYS:
            items = [v.strip() for v in value.split(",") if v.strip()]
            kwargs[key] = [float(v) for v in items] if key == "noise_levels_db" else items
        elif key in _INT_KEYS:
            kwargs[key] = int(value)
        else:
            kwargs[key] = _coerce(value)
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ValueError(f"bad config: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def format_config(config: ExperimentConfig) -> str:
    out = [CONFIG_HEADER]
    for key in ("L", "K", "s", "trials", "master_seed", "ensemble_mode", "ensemble_kind", "tuning_trials", "workers"):
        out.append(f"{key} = {getattr(config, key)}")
    out.append("noise_levels_db = " + ", ".join(f"{v:g}" for v in config.noise_levels_db))
    out.append("algorithms = " + ", ".join(config.algorithms))
    for name, options in sorted(config.recovery.items()):
        for option, value in sorted(options.items()):
            out.append(f"{name}.{option} = {value}")
    for db, tau in sorted(config.ist_tau.items()):
        out.append(f"ist_tau.{db:g} = {tau!r}")
    return "\n".join(out) + "\n"


# -- SER bookkeeping -----------------------------------------------------


def ser(x_hat, x_true) -> tuple[int, int]:
    """Symbol error count and number of symbols."""
    x_hat = np.asarray(x_hat)
    x_true = np.asarray(x_true)
    if x_hat.shape != x_true.shape:
        raise ValueError(f"length mismatch: {x_hat.shape} vs {x_true.shape}")
    return int(np.count_nonzero(x_hat != x_true)), int(x_true.size)


@dataclass
class SerPoint:
    algorithm: str
    noise_db: float
    trials: int = 0
    errors: int = 0
    total: int = 0
    diverged: int = 0
    failures: int = 0

    @property
    def ser(self) -> float:
        return self.errors / self.total if self.total else 0.0

    @property
    def ci(self) -> tuple[float, float]:
        """95% Clopper-Pearson interval."""
        if self.total == 0:
            return 0.0, 1.0
        interval = binomtest(self.errors, self.total).proportion_ci(0.95, method="exact")
        return float(interval.low), float(interval.high)

    def add(self, other: "SerPoint") -> None:
        self.trials += other.trials
        self.errors += other.errors
        self.total += other.total
        self.diverged += other.diverged
        self.failures += other.failures


@dataclass
class SerCurve:
    points: list = field(default_factory=list)
    ist_tau: dict = field(default_factory=dict)

    def get(self, algorithm: str, noise_db: float) -> SerPoint:
        for p in self.points:
            if p.algorithm == algorithm and p.noise_db == noise_db:
                return p
        raise KeyError((algorithm, noise_db))

    def series(self, algorithm: str) -> list:
        return sorted((p for p in self.points if p.algorithm == algorithm), key=lambda p: p.noise_db)

    @property
    def algorithms(self) -> list:
        return list(dict.fromkeys(p.algorithm for p in self.points))


# -- trial execution -----------------------------------------------------


def _rng(config: ExperimentConfig, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(config.master_seed, spawn_key=key))


def _ensemble(config: ExperimentConfig, rng):
    build = build_svd_ensemble if config.ensemble_kind == "svd" else build_dct_ensemble
    return build(config.K, config.L, rng)


def draw_trial(config: ExperimentConfig, trial: int, fixed_ensemble=None, stream: int = 1):
    """Matrix, signal and unit-variance noise for one trial."""
    rng = _rng(config, stream, trial)
    ensemble = fixed_ensemble if fixed_ensemble is not None else _ensemble(config, rng)
    x = generate_sparse_signal(config.prior, rng)
    noise = _rng(config, stream + 1, trial).standard_normal(config.K)
    return ensemble, x, noise


def fixed_ensemble(config: ExperimentConfig):
    if config.ensemble_mode != "fixed":
        return None
    return _ensemble(config, _rng(config, 0))


def run_algorithm(name: str, y, ensemble, sigma_n_sq: float, prior: SignalPrior, config: RecoveryConfig, x_true=None):
    if name == "ims":
        return alg.ims_q(y, ensemble, sigma_n_sq, prior, config)
    if name in GENIE:
        return alg.ims_q_genie(y, ensemble, sigma_n_sq, prior, config.with_(genie_mode=GENIE[name]), x_true)
    if name == "tsr":
        return alg.tsr_q(y, ensemble, sigma_n_sq, prior, config)
    if name == "iht":
        return alg.iht_q(y, ensemble, prior, config)
    if name == "ist":
        return alg.ist_q(y, ensemble, prior, config)
    if name == "omp":
        return alg.omp_q(y, ensemble, prior, config)
    if name == "ml":
        x = alg.ml_oracle(y, ensemble, prior)
        return alg.RecoveryResult(x, x, 1)
    raise ValueError(f"unknown algorithm {name!r}")


def _level_config(config: ExperimentConfig, name: str, noise_db: float) -> RecoveryConfig:
    rc = config.recovery_config(name)
    if name == "omp" and rc.omp_iters is None:
        rc = rc.with_(omp_iters=omp_iterations(noise_db))
    if name == "ist" and rc.ist_tau is None:
        rc = rc.with_(ist_tau=config.ist_tau[noise_db])
    return rc


def run_trial(config: ExperimentConfig, trial: int, ensemble=None) -> list:
    """Run every configured algorithm at every noise level on one trial.

    Returns one :class:`SerPoint` per (algorithm, noise level).
    """
    ensemble, x, noise = draw_trial(config, trial, ensemble)
    prior = config.prior
    points = []
    for noise_db in config.noise_levels_db:
        sigma_n_sq = noise_level_db_to_variance(noise_db)
        y = ensemble.A @ x + math.sqrt(sigma_n_sq) * noise
        for name in config.algorithms:
            point = SerPoint(name, noise_db)
            try:
                result = run_algorithm(name, y, ensemble, sigma_n_sq, prior, _level_config(config, name, noise_db), x)
            except (ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
                log.warning("trial %d, %s at %g dB failed: %s", trial, name, noise_db, exc)
                point.failures = 1
            else:
                point.errors, point.total = ser(result.x_hat_discrete, x)
                point.trials = 1
                point.diverged = int(result.diverged)
            points.append(point)
    return points


def _run_chunk(args):
    config, trials = args
    ensemble = fixed_ensemble(config)
    acc: dict = {}
    for t in trials:
        for p in run_trial(config, t, ensemble):
            key = (p.algorithm, p.noise_db)
            if key in acc:
                acc[key].add(p)
            else:
                acc[key] = p
    return acc


def run_curve(config: ExperimentConfig) -> SerCurve:
    """Monte Carlo SER for every algorithm over the noise grid.

    Aggregation only adds integer counters, so the result does not depend on
    ``workers`` or on trial order.
    """
    if "ist" in config.algorithms and any(db not in config.ist_tau for db in config.noise_levels_db):
        config = replace(config, ist_tau={**tune_ist_tau(config), **config.ist_tau})
    points = {
        (name, db): SerPoint(name, db) for db in config.noise_levels_db for name in config.algorithms
    }
    trials = list(range(config.trials))
    if config.workers > 1:
        chunks = [(config, trials[i :: config.workers]) for i in range(config.workers)]
        with ProcessPoolExecutor(config.workers) as pool:
            partials = list(pool.map(_run_chunk, chunks))
    else:
        partials = [_run_chunk((config, trials))]
    for partial in partials:
        for key, p in partial.items():
            points[key].add(p)
    ordered = [points[(name, db)] for name in config.algorithms for db in config.noise_levels_db]
    ist = {db: config.ist_tau[db] for db in config.noise_levels_db} if "ist" in config.algorithms else {}
    return SerCurve(ordered, ist)


def tune_ist_tau(config: ExperimentConfig, grid=IST_GRID) -> dict:
    """Pick the IST threshold per noise level by grid search on tuning trials.

    Candidates are ``k * sigma_n`` for ``k`` in ``grid``; the winner has the
    fewest symbol errors, then the smallest soft-estimate squared error, then
    the smallest threshold.
    """
    prior = config.prior
    base = config.recovery_config("ist")
    ensemble = fixed_ensemble(config)
    instances = [draw_trial(config, t, ensemble, stream=3) for t in range(config.tuning_trials)]
    table = {}
    for noise_db in config.noise_levels_db:
        sigma_n_sq = noise_level_db_to_variance(noise_db)
        sigma_n = math.sqrt(sigma_n_sq)
        scores = []
        for k in grid:
            tau = k * sigma_n
            errors, sq = 0, 0.0
            for ens, x, noise in instances:
                y = ens.A @ x + sigma_n * noise
                result = alg.ist_q(y, ens, prior, base.with_(ist_tau=tau))
                errors += ser(result.x_hat_discrete, x)[0]
                sq += float(np.sum((result.x_soft_final - x) ** 2))
            scores.append((errors, sq, tau))
        table[noise_db] = min(scores)[2]
    return table


# -- output --------------------------------------------------------------


def emit_csv(curve: SerCurve, path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for p in curve.points:
                low, high = p.ci
                writer.writerow(
                    [p.algorithm, repr(p.noise_db), p.trials, p.errors, p.total, repr(p.ser),
                     repr(low), repr(high), p.diverged, p.failures]
                )
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc
    return path


def read_csv(path) -> SerCurve:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    points = [
        SerPoint(
            r["algorithm"], float(r["noise_db"]), int(r["trials"]), int(r["errors"]),
            int(r["total"]), int(r["diverged"]), int(r.get("failures") or 0),
        )
        for r in rows
    ]
    return SerCurve(points)


def emit_svg(curve: SerCurve, path, floor: float = 1e-6, title: str | None = None) -> Path:
    """Log-scale SER against noise level; zero-error points drawn at ``floor``."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for name in curve.algorithms:
        series = curve.series(name)
        db = [p.noise_db for p in series]
        values = [max(p.ser, floor) for p in series]
        ax.semilogy(db, values, marker="o", label=LABELS.get(name, name))
    ax.set_xlabel("1/sigma_n^2 [dB]")
    ax.set_ylabel("SER")
    ax.set_ylim(bottom=floor * 0.5)
    ax.grid(True, which="both", alpha=0.3)
    if title:
        ax.set_title(title)
    if curve.points:
        ax.legend()
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg")
    except OSError as exc:
        raise OSError(f"cannot write SVG to {path}: {exc}") from exc
    finally:
        plt.close(fig)
    return path


def write_manifest(config: ExperimentConfig, curve: SerCurve, path) -> Path:
    path = Path(path)
    manifest = {
        "config": {k: v for k, v in asdict(config).items() if k != "ist_tau"},
        "ist_tau": {f"{k:g}": v for k, v in curve.ist_tau.items()},
        "omp_iters": {f"{db:g}": omp_iterations(db) for db in config.noise_levels_db},
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


# -- curve analysis ------------------------------------------------------


def crossing_db(series, target: float, floor: float = 1e-7) -> float:
    """First noise level where the SER reaches ``target``.

    Interpolates linearly in ``log10(SER)`` between grid points; zero-error
    points count as ``floor``. Returns ``inf`` when the curve never gets there
    and the first grid level when it starts below the target.
    """
    db = np.array([p.noise_db for p in series])
    logs = np.log10(np.maximum([p.ser for p in series], floor))
    goal = math.log10(target)
    below = np.flatnonzero(logs <= goal)
    if below.size == 0:
        return math.inf
    i = int(below[0])
    if i == 0:
        return float(db[0])
    x0, x1, y0, y1 = db[i - 1], db[i], logs[i - 1], logs[i]
    return float(x0 + (goal - y0) * (x1 - x0) / (y1 - y0))
