"""Training loop and benchmark sweep producing (f1, f2, f3) records."""

from __future__ import annotations

import logging
import time
import zlib
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from typing import Callable, Iterable

import numpy as np

from .arch_space import ArchitectureSpec, SearchSpace, enumerate_space
from .data import DataError, SeriesDataset, split
from .neural.model import CompositeModel, parameter_count
from .store import PerformanceRecord, RecordStore

log = logging.getLogger(__name__)


class DivergedTraining(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 50
    max_epochs: int = 100
    patience: int = 10
    seed: int = 0
    eval_batch_size: int = 256

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.max_epochs < 1 or not 1 <= self.patience <= self.max_epochs:
            raise ValueError("need max_epochs >= 1 and 1 <= patience <= max_epochs")


def run_seed(seed: int, key: str) -> int:
    return (seed ^ zlib.crc32(key.encode())) & 0xFFFFFFFF


class Adam:
    def __init__(self, params: dict, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.t = 0

    def step(self) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for k, p in self.params.items():
            if p.grad is None:
                continue
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * p.grad
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * p.grad**2
            p.data = p.data - self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def normalization_stats(dataset: SeriesDataset) -> tuple[float, float]:
    """Mean and std over the series positions covered by training samples only."""
    values = dataset.values[dataset.covered(dataset.train_idx)]
    mean = float(values.mean())
    std = float(values.std())
    return mean, (std if std > 0 else 1.0)


def relative_l2(pred: np.ndarray, truth: np.ndarray) -> float:
    denom = float(np.sqrt(np.sum(truth**2)))
    err = float(np.sqrt(np.sum((pred - truth) ** 2)))
    if denom == 0.0:
        return 0.0 if err == 0.0 else float("inf")
    return err / denom


def predict(model: CompositeModel, inputs: np.ndarray, batch_size: int = 256) -> np.ndarray:
    out = [model(inputs[i : i + batch_size]).data for i in range(0, len(inputs), batch_size)]
    return np.concatenate(out, axis=0)


def _mse(model: CompositeModel, x: np.ndarray, y: np.ndarray, batch_size: int) -> float:
    total = 0.0
    for i in range(0, len(x), batch_size):
        pred = model(x[i : i + batch_size]).data
        total += float(np.sum((pred - y[i : i + batch_size]) ** 2))
    return total / y.size


def train(
    spec: ArchitectureSpec,
    dataset: SeriesDataset,
    config: TrainConfig = TrainConfig(),
    return_model: bool = False,
):
    """Train ``spec`` on ``dataset`` and measure (f1, f2, f3).

    The dataset is split chronologically 0.9/0.1 if it carries no split.
    Returns a :class:`PerformanceRecord` (and the trained model when
    ``return_model`` is set).
    """
    if dataset.lookback != spec.lookback or dataset.horizon != spec.horizon:
        raise DataError(
            f"dataset windows (L={dataset.lookback}, H={dataset.horizon}) do not match "
            f"{spec.key} (L={spec.lookback}, H={spec.horizon})"
        )
    if dataset.train_idx is None:
        dataset = split(dataset, 0.9, "chronological")
    key = spec.key
    seed = run_seed(config.seed, key)
    mean, std = normalization_stats(dataset)
    x_tr, y_tr = dataset.windows(dataset.train_idx)
    x_va, y_va = dataset.windows(dataset.val_idx)
    x_tr, y_tr = (x_tr - mean) / std, (y_tr - mean) / std
    x_va_z, y_va_z = (x_va - mean) / std, (y_va - mean) / std

    model = CompositeModel(spec, seed=seed)
    opt = Adam(model.params, lr=config.learning_rate)
    rng = np.random.default_rng([seed, 1])
    best_loss, best_state, best_epoch, stale = np.inf, model.state(), 0, 0
    epochs_run = 0

    start = time.perf_counter()
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(x_tr))
        for i in range(0, len(order), config.batch_size):
            idx = order[i : i + config.batch_size]
            model.zero_grad()
            diff = model(x_tr[idx]) - y_tr[idx]
            loss = (diff * diff).mean()
            if not np.isfinite(loss.data):
                raise DivergedTraining(f"{key}: non-finite training loss at epoch {epoch}")
            loss.backward()
            opt.step()
        epochs_run = epoch
        val_loss = _mse(model, x_va_z, y_va_z, config.eval_batch_size)
        if not np.isfinite(val_loss):
            raise DivergedTraining(f"{key}: non-finite validation loss at epoch {epoch}")
        if val_loss < best_loss:
            best_loss, best_state, best_epoch, stale = val_loss, model.state(), epoch, 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    elapsed = time.perf_counter() - start

    model.load_state(best_state)
    pred = predict(model, x_va_z, config.eval_batch_size) * std + mean
    f1 = relative_l2(pred, y_va)
    last = int(np.argmax(dataset.starts[dataset.val_idx]))
    record = PerformanceRecord(
        key=key,
        f1=f1,
        f2=max(elapsed, 1e-9),
        f3=parameter_count(spec),
        metadata={
            "seed": config.seed,
            "run_seed": seed,
            "epochs": epochs_run,
            "best_epoch": best_epoch,
            "val_mse_z": best_loss,
            "f1_last_window": relative_l2(pred[last], y_va[last]),
            "dataset": dataset.name,
            "n_train": int(len(dataset.train_idx)),
            "n_val": int(len(dataset.val_idx)),
            "config": asdict(config),
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        },
    )
    return (record, model) if return_model else record


def _train_job(spec: ArchitectureSpec, dataset: SeriesDataset, config: TrainConfig) -> PerformanceRecord:
    return train(spec, dataset, config)


def run_space(
    specs: SearchSpace | Iterable[ArchitectureSpec],
    dataset: SeriesDataset,
    config: TrainConfig,
    store: RecordStore,
    jobs: int = 1,
    on_record: Callable[[PerformanceRecord, int, int], None] | None = None,
) -> list[PerformanceRecord]:
    """Train every spec whose key is not yet in ``store``; returns the new records.

    Records are appended as they finish, so an interrupted sweep resumes
    where it stopped.  ``on_record(record, done, total)`` is called after
    each append.
    """
    if isinstance(specs, SearchSpace):
        specs = enumerate_space(specs)
    specs = list(specs)
    done = store.keys()
    todo = [s for s in specs if s.key not in done]
    total = len(todo)
    log.info("%d specs, %d already in %s, %d to train", len(specs), len(specs) - total, store.path, total)
    new: list[PerformanceRecord] = []

    def finish(record: PerformanceRecord) -> None:
        store.append(record)
        new.append(record)
        if on_record is not None:
            on_record(record, len(new), total)

    if jobs <= 1:
        for spec in todo:
            finish(train(spec, dataset, config))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_train_job, spec, dataset, config) for spec in todo]
            for fut in as_completed(futures):
                finish(fut.result())
    return new
