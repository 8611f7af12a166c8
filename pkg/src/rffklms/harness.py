"""
Monte Carlo experiment runner.

A realization draws a fresh system from the model family, a fresh feature
map (unless maps are shared across runs) and a fresh filter, all seeded from
``(base_seed, run_index)``, and records the squared prior error at every
step. ``monte_carlo`` averages those traces in run-index order, so the
result does not depend on the order (or process) in which runs execute.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from os import PathLike
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from . import rng as _rng
from .analysis import predict_convergence
from .datagen import KernelExpansion, ModelSpec, generate, model_to_dict
from .filters import QKLMS, RFFKLMS, RFFRLS
from .kernelcore import GaussianKernel, RandomFeatureMap, sample_feature_map


class RunFailedError(RuntimeError):
    """A realization raised; carries the run context."""

    def __init__(self, message, *, label, run_index, seed):
        super().__init__(message)
        self.label, self.run_index, self.seed = label, run_index, seed


@dataclass(frozen=True)
class FilterConfig:
    """
    One filter of an experiment.

    ``feature_dim`` is used by the random-feature filters, ``epsilon`` by
    QKLMS, ``reg_lambda`` and ``beta`` by RFF-RLS.
    """

    algorithm: str
    sigma: float
    mu: float = 1.0
    feature_dim: int | None = None
    epsilon: float | None = None
    reg_lambda: float | None = None
    beta: float = 1.0
    label: str | None = None

    def __post_init__(self):
        if self.algorithm not in ("rffklms", "qklms", "rffrls"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.algorithm in ("rffklms", "rffrls") and not self.feature_dim:
            raise ValueError(f"{self.algorithm} needs feature_dim")
        if self.algorithm == "qklms" and self.epsilon is None:
            raise ValueError("qklms needs epsilon")
        if self.algorithm == "rffrls" and self.reg_lambda is None:
            raise ValueError("rffrls needs reg_lambda")
        if self.label is None:
            tag = f"eps{self.epsilon:g}" if self.algorithm == "qklms" else f"D{self.feature_dim}"
            object.__setattr__(self, "label", f"{self.algorithm}_{tag}")

    def build(self, input_dim: int, fmap: RandomFeatureMap | None):
        if self.algorithm == "rffklms":
            return RFFKLMS(fmap, self.mu)
        if self.algorithm == "rffrls":
            return RFFRLS(fmap, self.reg_lambda, self.beta)
        return QKLMS(GaussianKernel(self.sigma), self.mu, self.epsilon, input_dim)

    @property
    def uses_map(self) -> bool:
        return self.algorithm != "qklms"


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    filters: tuple[FilterConfig, ...]
    n_samples: int
    n_runs: int = 100
    base_seed: int = 0
    share_feature_map_across_runs: bool = False
    mse_window: int | None = None
    name: str = "experiment"

    def __post_init__(self):
        object.__setattr__(self, "filters", tuple(self.filters))
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise ValueError(f"n_samples must be a positive integer, got {self.n_samples}")
        if int(self.n_runs) != self.n_runs or self.n_runs < 1:
            raise ValueError(f"n_runs must be a positive integer, got {self.n_runs}")
        _rng.check_seed(self.base_seed)
        if self.mse_window is not None and not (1 <= self.mse_window <= self.n_samples):
            raise ValueError(f"mse_window must lie in [1, n_samples], got {self.mse_window}")
        labels = [f.label for f in self.filters]
        if len(set(labels)) != len(labels):
            raise ValueError(f"filter labels must be unique, got {labels}")
        seeds = {self.run_seed(r) for r in range(self.n_runs)}
        if len(seeds) != self.n_runs:
            raise ValueError("derived run seeds collide; choose another base_seed")

    @property
    def window(self) -> int:
        return self.mse_window or max(1, self.n_samples // 10)

    def run_seed(self, run_index: int) -> int:
        return _rng.derive_seed(self.base_seed, _rng.RUN, run_index)

    def model_for_run(self, run_index: int) -> ModelSpec:
        return dataclasses.replace(self.model, seed=self.run_seed(run_index), n_samples=self.n_samples)

    def feature_map(self, filter_index: int, run_index: int) -> RandomFeatureMap:
        f = self.filters[filter_index]
        if self.share_feature_map_across_runs:
            seed = _rng.derive_seed(self.base_seed, _rng.FEATURES, filter_index)
        else:
            seed = _rng.derive_seed(self.run_seed(run_index), _rng.FEATURES, filter_index)
        return sample_feature_map(self.model.input_dim, f.feature_dim, f.sigma, seed)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n_samples": self.n_samples,
            "n_runs": self.n_runs,
            "base_seed": self.base_seed,
            "share_feature_map_across_runs": self.share_feature_map_across_runs,
            "mse_window": self.window,
            "model": model_to_dict(self.model),
            "filters": [dataclasses.asdict(f) for f in self.filters],
        }

    def config_hash(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


@dataclass
class Realization:
    sq_errors: NDArray[np.float64]
    seconds: float
    dict_sizes: NDArray[np.int64] | None = None

    @property
    def final_dict_size(self) -> int | None:
        return None if self.dict_sizes is None else int(self.dict_sizes[-1])


def run_realization(config: ExperimentConfig, filter_index: int, run_index: int) -> Realization:
    """One Monte Carlo sample: squared prior errors, training time, dictionary sizes."""
    if not 0 <= filter_index < len(config.filters):
        raise IndexError(f"filter_index {filter_index} out of range")
    if not 0 <= run_index < config.n_runs:
        raise IndexError(f"run_index {run_index} out of range")
    fc = config.filters[filter_index]
    seed = config.run_seed(run_index)
    try:
        X, y = generate(config.model_for_run(run_index))
        start = time.perf_counter()
        fmap = config.feature_map(filter_index, run_index) if fc.uses_map else None
        filt = fc.build(config.model.input_dim, fmap)
        out = filt.run(X, y)
        seconds = time.perf_counter() - start
    except Exception as exc:
        raise RunFailedError(
            f"{fc.label} run {run_index} (seed {seed}) failed: {exc}",
            label=fc.label, run_index=run_index, seed=seed,
        ) from exc
    if isinstance(out, tuple):
        errors, sizes = out
        return Realization(errors**2, seconds, sizes)
    return Realization(out**2, seconds)


@dataclass
class LearningCurve:
    label: str
    per_step_mse: NDArray[np.float64]
    window: int
    n_runs: int
    runtimes: NDArray[np.float64] = field(repr=False)
    dict_size: NDArray[np.float64] | None = field(default=None, repr=False)
    final_dict_sizes: NDArray[np.int64] | None = field(default=None, repr=False)
    config_hash: str = ""

    @property
    def per_step_mse_db(self) -> NDArray[np.float64]:
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(self.per_step_mse)

    @property
    def steady_state(self) -> float:
        return float(np.mean(self.per_step_mse[-self.window:]))

    @property
    def steady_state_db(self) -> float:
        return 10.0 * math.log10(self.steady_state) if self.steady_state > 0 else -math.inf

    @property
    def mean_dict_size(self) -> float | None:
        return None if self.final_dict_sizes is None else float(np.mean(self.final_dict_sizes))


def _realize(args):
    config, filter_index, run_index = args
    return run_realization(config, filter_index, run_index)


def monte_carlo(config: ExperimentConfig, n_jobs: int = 1, runs: range | None = None) -> list[LearningCurve]:
    """
    Average squared-error traces over runs, one learning curve per filter.

    Parameters
    ----------
    n_jobs : int
        Worker processes; ``1`` runs in-process.
    runs : range, optional
        Subset of run indices (default: all ``config.n_runs``).
    """
    runs = range(config.n_runs) if runs is None else runs
    if len(runs) == 0:
        raise ValueError("no runs selected")
    curves = []
    executor = ProcessPoolExecutor(n_jobs) if n_jobs > 1 else None
    try:
        for fi, fc in enumerate(config.filters):
            tasks = [(config, fi, r) for r in runs]
            results = executor.map(_realize, tasks) if executor else map(_realize, tasks)
            total = np.zeros(config.n_samples)
            times, sizes, final = [], None, []
            # results arrive in run-index order whatever the executor
            for res in results:
                total += res.sq_errors
                times.append(res.seconds)
                if res.dict_sizes is not None:
                    sizes = res.dict_sizes.astype(np.float64) if sizes is None else sizes + res.dict_sizes
                    final.append(res.final_dict_size)
            n = len(runs)
            curves.append(LearningCurve(
                label=fc.label,
                per_step_mse=total / n,
                window=config.window,
                n_runs=n,
                runtimes=np.asarray(times),
                dict_size=None if sizes is None else sizes / n,
                final_dict_sizes=np.asarray(final, dtype=np.int64) if final else None,
                config_hash=config.config_hash(),
            ))
    finally:
        if executor:
            executor.shutdown()
    return curves


@dataclass(frozen=True)
class Timing:
    label: str
    mean: float
    min: float
    max: float
    times: tuple[float, ...]


def bench_timing(config: ExperimentConfig) -> list[Timing]:
    """Serial wall-clock training time of every filter over every run."""
    out = []
    for fi, fc in enumerate(config.filters):
        times = tuple(run_realization(config, fi, r).seconds for r in range(config.n_runs))
        out.append(Timing(fc.label, float(np.mean(times)), float(min(times)), float(max(times)), times))
    return out


def theory_prediction(config: ExperimentConfig, filter_index: int, run_index: int = 0) -> dict | None:
    """
    Steady-state theory for an RFFKLMS filter on a kernel-expansion model,
    evaluated for the feature map and system drawn in ``run_index``.
    Returns ``None`` when the theory does not apply.
    """
    fc = config.filters[filter_index]
    if fc.algorithm != "rffklms" or not isinstance(config.model, KernelExpansion):
        return None
    model = config.model_for_run(run_index).resolve()
    fmap = config.feature_map(filter_index, run_index)
    pred = predict_convergence(fmap, model.sigma_x, fc.mu, model.sigma_eta, model.centers, model.coeffs)
    return {
        "label": fc.label,
        "mu_max": pred.mu_max,
        "mu_max_variance": pred.mu_max_variance,
        "lambda_max": pred.lambda_max,
        "j_opt": pred.j_opt,
        "steady_state_mse": pred.steady_state_mse,
        "excess_mse": pred.excess_mse,
        "D": fmap.feature_dim,
        "sigma": fmap.sigma,
        "sigma_x": model.sigma_x,
        "seed": fmap.seed,
    }


def write_curve_csv(curve: LearningCurve, path: str | PathLike):
    """Columns ``n,mse,mse_db[,dict_size]``; floats with 17 significant digits."""
    path = Path(path)
    try:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            header = ["n", "mse", "mse_db"]
            if curve.dict_size is not None:
                header.append("dict_size")
            out.writerow(header)
            db = curve.per_step_mse_db
            for k in range(curve.per_step_mse.shape[0]):
                row = [k + 1, f"{curve.per_step_mse[k]:.17g}", f"{db[k]:.17g}"]
                if curve.dict_size is not None:
                    row.append(f"{curve.dict_size[k]:.17g}")
                out.writerow(row)
    except OSError as exc:
        raise OSError(f"cannot write curve to {path}: {exc}") from exc


def read_curve_csv(path: str | PathLike) -> dict[str, NDArray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {name: np.array([float(r[i]) for r in body]) for i, name in enumerate(header)}


def summarize(config: ExperimentConfig, curves: list[LearningCurve], timings: list[Timing] | None = None,
              theory: list[dict] | None = None) -> dict:
    filters = {}
    for c in curves:
        entry = {
            "steady_state": c.steady_state,
            "steady_state_db": c.steady_state_db,
            "window": c.window,
            "n_runs": c.n_runs,
            "mean_train_seconds": float(np.mean(c.runtimes)),
        }
        if c.mean_dict_size is not None:
            entry["mean_dict_size"] = c.mean_dict_size
        filters[c.label] = entry
    for t in timings or ():
        filters.setdefault(t.label, {})["timing"] = {"mean": t.mean, "min": t.min, "max": t.max}
    return {
        "config_hash": config.config_hash(),
        "config": config.to_dict(),
        "filters": filters,
        "theory": list(theory or []),
    }


def write_summary_json(summary: dict, path: str | PathLike):
    path = Path(path)
    try:
        path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write summary to {path}: {exc}") from exc
