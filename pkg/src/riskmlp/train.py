"""Dataset splitting, steepest-descent and Levenberg-Marquardt trainers,
and early stopping on consecutive validation failures.

Both trainers are full batch: one epoch is one accepted parameter update
over the whole training split. The validation split drives early
stopping (best weights are checkpointed and restored); the test split is
evaluated every epoch for reporting only.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .data import SUCCESS, Dataset, Sample
from .linalg import DefinitenessError, solve_spd
from .rng import SplitMix64


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int):
        super().__init__(f"non-finite loss at epoch {epoch}")
        self.epoch = epoch


@dataclass
class TrainConfig:
    algorithm: str = "lm"  # "gd" or "lm"
    learning_rate: float = 0.01
    mu0: float = 0.001
    mu_increase: float = 10.0
    mu_decrease: float = 0.1
    mu_max: float = 1e10
    max_epochs: int = 1000
    max_validation_failures: int = 6
    min_gradient_norm: float = 1e-7
    seed: int = 0
    split_ratios: tuple[float, float, float] = (0.70, 0.15, 0.15)
    stratified: bool = True

    def __post_init__(self):
        if self.algorithm not in ("gd", "lm"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.learning_rate < 0:
            raise ValueError("learning rate must be >= 0")
        if self.mu0 <= 0 or self.mu_increase <= 1 or not 0 < self.mu_decrease < 1:
            raise ValueError("invalid mu schedule")
        if self.max_epochs < 1 or self.max_validation_failures < 1:
            raise ValueError("epoch/failure budgets must be positive")


@dataclass
class EpochRecord:
    epoch: int
    train_mse: float
    validation_mse: float
    test_mse: float
    gradient_norm: float
    mu: float | None
    validation_failure_count: int


@dataclass
class TrainOutcome:
    best_network: nn.Network
    records: list[EpochRecord]
    stop_reason: str  # validation_failures | max_epochs | gradient_floor | mu_ceiling
    best_validation_epoch: int


class EarlyStopper:
    """Counts consecutive epochs without strict validation improvement.

    A strict improvement resets the counter and checkpoints the weights;
    once the counter reaches the budget, training stops and the
    checkpointed best-validation weights become the final model.
    """

    def __init__(self, max_failures: int):
        self.max_failures = max_failures
        self.best_mse = math.inf
        self.best_epoch = 0
        self.best_net: nn.Network | None = None
        self.failures = 0

    def update(self, epoch: int, validation_mse: float, net: nn.Network) -> bool:
        """Record one epoch; returns True when training should stop."""
        if validation_mse < self.best_mse:
            self.best_mse = validation_mse
            self.best_epoch = epoch
            self.best_net = net.copy()
            self.failures = 0
            return False
        self.failures += 1
        return self.failures >= self.max_failures


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def _allocate(counts: list[int], ratio: float, total_target: int) -> list[int]:
    """Per-class allocation by half-away rounding, adjusted to hit the target."""
    alloc = [_round_half_away(ratio * c) for c in counts]
    diff = sum(alloc) - total_target
    while diff > 0:
        k = max(range(len(alloc)), key=lambda i: alloc[i])
        alloc[k] -= 1
        diff -= 1
    while diff < 0:
        k = max(range(len(alloc)), key=lambda i: counts[i] - alloc[i])
        alloc[k] += 1
        diff += 1
    return alloc


def split_dataset(
    data: Dataset,
    ratios: tuple[float, float, float],
    seed: int,
    stratified: bool = True,
) -> tuple[Dataset, Dataset, Dataset]:
    """Partition into (train, validation, test).

    Validation and test sizes are the rounded (half away from zero)
    ratio shares; training takes the remainder. Stratified mode keeps the
    global success:failure ratio in every split to within one sample per
    class.
    """
    if len(data) == 0:
        raise ValueError("empty dataset")
    if any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"split ratios {ratios} must be positive and sum to 1")
    n = len(data)
    n_val = _round_half_away(ratios[1] * n)
    n_test = _round_half_away(ratios[2] * n)
    n_train = n - n_val - n_test
    if min(n_train, n_val, n_test) <= 0:
        raise ValueError(f"dataset of {n} samples leaves an empty split")

    rng = SplitMix64(seed)
    if stratified:
        groups = [
            [i for i, s in enumerate(data.samples) if s.label == SUCCESS],
            [i for i, s in enumerate(data.samples) if s.label != SUCCESS],
        ]
        counts = [len(g) for g in groups]
        val_alloc = _allocate(counts, ratios[1], n_val)
        test_alloc = _allocate(counts, ratios[2], n_test)
        val_idx, test_idx, train_idx = [], [], []
        for g, v_c, t_c in zip(groups, val_alloc, test_alloc):
            g = list(g)
            rng.shuffle(g)
            val_idx += g[:v_c]
            test_idx += g[v_c:v_c + t_c]
            train_idx += g[v_c + t_c:]
    else:
        order = list(range(n))
        rng.shuffle(order)
        val_idx = order[:n_val]
        test_idx = order[n_val:n_val + n_test]
        train_idx = order[n_val + n_test:]

    def subset(idx: list[int]) -> Dataset:
        return Dataset(
            schema=data.schema, samples=[data.samples[i] for i in sorted(idx)]
        )

    return subset(train_idx), subset(val_idx), subset(test_idx)


def fit_normalization(samples: list[Sample]) -> list[tuple[float, float]]:
    """Per-feature (min, max) over the training split."""
    feats = np.array([s.features for s in samples])
    return [(float(lo), float(hi)) for lo, hi in zip(feats.min(0), feats.max(0))]


def encode_target(label: str, class_order: list[str]) -> np.ndarray:
    t = -np.ones(len(class_order))
    t[class_order.index(label)] = 1.0
    return t


def make_pairs(samples: list[Sample], net: nn.Network) -> list[nn.TrainingPair]:
    """Normalize features with the network's stored stats and encode targets."""
    return [
        nn.TrainingPair(
            input=net.normalize(s.features),
            target=encode_target(s.label, net.class_order),
        )
        for s in samples
    ]


def _grad_norm(gw: list[np.ndarray], gb: list[np.ndarray]) -> float:
    total = sum(float(np.sum(g * g)) for g in gw) + sum(
        float(np.sum(g * g)) for g in gb
    )
    return math.sqrt(total)


def train_gd(
    net: nn.Network,
    splits: tuple[list[nn.TrainingPair], list[nn.TrainingPair], list[nn.TrainingPair]],
    config: TrainConfig,
) -> TrainOutcome:
    """Full-batch steepest descent with early stopping."""
    if config.algorithm != "gd":
        raise ValueError("config.algorithm must be 'gd'")
    train, val, test = splits
    stopper = EarlyStopper(config.max_validation_failures)
    records: list[EpochRecord] = []
    stop_reason = "max_epochs"
    for epoch in range(1, config.max_epochs + 1):
        gw, gb = nn.gradient(net, train)
        gnorm = _grad_norm(gw, gb)
        net = net.copy()
        for m in range(net.n_layers):
            net.weights[m] -= config.learning_rate * gw[m]
            net.biases[m] -= config.learning_rate * gb[m]
        train_mse = nn.batch_mse(net, train)
        val_mse = nn.batch_mse(net, val)
        test_mse = nn.batch_mse(net, test)
        if not all(map(math.isfinite, (train_mse, val_mse, test_mse))):
            raise DivergenceError(epoch)
        should_stop = stopper.update(epoch, val_mse, net)
        records.append(
            EpochRecord(epoch, train_mse, val_mse, test_mse, gnorm, None, stopper.failures)
        )
        if should_stop:
            stop_reason = "validation_failures"
            break
        if gnorm < config.min_gradient_norm:
            stop_reason = "gradient_floor"
            break
    best = stopper.best_net if stopper.best_net is not None else net
    return TrainOutcome(
        best_network=best,
        records=records,
        stop_reason=stop_reason,
        best_validation_epoch=stopper.best_epoch,
    )


def lm_step(jtj: np.ndarray, jte: np.ndarray, mu: float) -> np.ndarray:
    """Damped Gauss-Newton step: solves (J^T J + mu I) delta = -J^T e."""
    a = jtj + mu * np.eye(jtj.shape[0])
    return -solve_spd(a, jte)


def train_lm(
    net: nn.Network,
    splits: tuple[list[nn.TrainingPair], list[nn.TrainingPair], list[nn.TrainingPair]],
    config: TrainConfig,
) -> TrainOutcome:
    """Levenberg-Marquardt training with adaptive damping.

    Each epoch builds the error Jacobian over the training split and
    retries with increased damping until a candidate step strictly
    decreases the training sum-squared error (or the damping ceiling is
    hit). Accepted steps therefore form a strictly decreasing SSE
    sequence.
    """
    if config.algorithm != "lm":
        raise ValueError("config.algorithm must be 'lm'")
    train, val, test = splits
    q = len(train)
    stopper = EarlyStopper(config.max_validation_failures)
    records: list[EpochRecord] = []
    stop_reason = "max_epochs"
    mu = config.mu0
    for epoch in range(1, config.max_epochs + 1):
        j, e = nn.jacobian_lm(net, train)
        sse = float(e @ e)
        jte = j.T @ e
        # gradient of the batch-mean MSE; SSE gradient is 2 J^T e
        gnorm = float(np.linalg.norm(2.0 * jte)) / q
        if gnorm < config.min_gradient_norm:
            stop_reason = "gradient_floor"
            break
        jtj = j.T @ j
        x = nn.params_to_vector(net)
        accepted = None
        while True:
            try:
                delta = lm_step(jtj, jte, mu)
            except DefinitenessError:
                delta = None
            if delta is not None:
                candidate = nn.with_params(net, x + delta)
                sse_new = nn.batch_mse(candidate, train) * q
                if math.isfinite(sse_new) and sse_new < sse:
                    accepted = (candidate, sse_new)
                    break
            mu *= config.mu_increase
            if mu > config.mu_max:
                break
        if accepted is None:
            stop_reason = "mu_ceiling"
            break
        net, sse = accepted
        accepted_mu = mu
        mu = max(mu * config.mu_decrease, 1e-20)
        train_mse = sse / q
        val_mse = nn.batch_mse(net, val)
        test_mse = nn.batch_mse(net, test)
        should_stop = stopper.update(epoch, val_mse, net)
        records.append(
            EpochRecord(
                epoch, train_mse, val_mse, test_mse, gnorm, accepted_mu, stopper.failures
            )
        )
        if should_stop:
            stop_reason = "validation_failures"
            break
    best = stopper.best_net if stopper.best_net is not None else net
    return TrainOutcome(
        best_network=best,
        records=records,
        stop_reason=stop_reason,
        best_validation_epoch=stopper.best_epoch,
    )


LOG_HEADER = [
    "epoch",
    "train_mse",
    "validation_mse",
    "test_mse",
    "gradient_norm",
    "mu",
    "val_failures",
]


def write_log(records: list[EpochRecord], path: str) -> None:
    """One CSV row per epoch (the data behind the performance curves)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LOG_HEADER)
        for r in records:
            writer.writerow(
                [
                    r.epoch,
                    repr(r.train_mse),
                    repr(r.validation_mse),
                    repr(r.test_mse),
                    repr(r.gradient_norm),
                    "" if r.mu is None else repr(r.mu),
                    r.validation_failure_count,
                ]
            )


def read_log(path: str) -> list[EpochRecord]:
    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            records.append(
                EpochRecord(
                    epoch=int(row["epoch"]),
                    train_mse=float(row["train_mse"]),
                    validation_mse=float(row["validation_mse"]),
                    test_mse=float(row["test_mse"]),
                    gradient_norm=float(row["gradient_norm"]),
                    mu=float(row["mu"]) if row["mu"] else None,
                    validation_failure_count=int(row["val_failures"]),
                )
            )
    return records
