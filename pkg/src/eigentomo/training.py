"""Seeded gradient-descent fitting of the RBM ansatz to measurement data.

Plain gradient descent with an adaptive step-halving rule: whenever a step
would increase the cost, the step is reverted, the learning rate halved and
the step retried, up to a fixed number of halvings.  Restart k draws its
initial parameters from seed ``base_seed + k``; the best restart by final
cost wins, ties broken by restart index.
"""

from __future__ import annotations

import concurrent.futures
import csv
from dataclasses import dataclass, field, replace

import numpy as np

from . import rbm
from .costs import CostEngine, CostSpec
from .measurement import MeasurementDataset
from .rbm import NqsState
from .states import StateVector

MAX_HALVINGS = 20
INIT_SCALE = 0.01
#: The phase network starts wider: with near-zero phases everywhere, descent
#: cannot build sign structure and stalls on nonnegative-amplitude states.
PHASE_INIT_SCALE = 0.5
#: Total squared overlap with previous states counted as orthogonal.
ORTHOGONALITY_TOL = 1e-3
_COST_FLOOR = 1e-15

LOG_COLUMNS = ("epoch", "cost", "grad_norm", "learning_rate", "restart")


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training run."""

    cost: CostSpec
    learning_rate: float = 0.05
    max_epochs: int = 20000
    batch_bases: int | None = None
    seed: int = 0
    patience: int = 200
    tol_rel: float = 1e-6
    restarts: int = 3

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.max_epochs < 1 or self.patience < 1 or self.restarts < 1:
            raise ValueError("max_epochs, patience and restarts must be positive")
        if not 0 < self.tol_rel < 1:
            raise ValueError("tol_rel must lie in (0, 1)")
        if self.batch_bases is not None and self.batch_bases < 1:
            raise ValueError("batch_bases must be positive when set")


@dataclass
class TrainingLog:
    """Per-epoch rows (epoch, cost, grad_norm, learning_rate, restart)."""

    rows: list[tuple[int, float, float, float, int]]
    winner_restart: int
    best_cost: float
    diagnostics: list[str] = field(default_factory=list)
    orthogonality_ok: bool | None = None

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(LOG_COLUMNS)
            for epoch, cost, gnorm, lr, restart in self.rows:
                writer.writerow(
                    [
                        epoch,
                        format(cost, ".17g"),
                        format(gnorm, ".17g"),
                        format(lr, ".17g"),
                        restart,
                    ]
                )


@dataclass
class _RestartResult:
    restart: int
    theta: np.ndarray | None
    cost: float
    rows: list[tuple[int, float, float, float, int]]
    error: str | None = None


def _run_restart(
    engine: CostEngine, config: TrainConfig, restart: int
) -> _RestartResult:
    rng = np.random.default_rng(config.seed + restart)
    half = rbm.n_parameters(engine.n_qubits) // 2
    theta = np.concatenate(
        [
            rng.uniform(-INIT_SCALE, INIT_SCALE, size=half),
            rng.uniform(-PHASE_INIT_SCALE, PHASE_INIT_SCALE, size=half),
        ]
    )
    rows: list[tuple[int, float, float, float, int]] = []
    stochastic = config.batch_bases is not None and config.batch_bases < engine.n_bases

    cost, grad = engine.value_and_grad(theta)
    if not np.isfinite(cost) or not np.all(np.isfinite(grad)):
        return _RestartResult(restart, None, np.inf, rows, "non-finite initial cost")

    lr = config.learning_rate
    best_cost = cost
    best_theta = theta.copy()
    stall = 0
    for epoch in range(1, config.max_epochs + 1):
        if stochastic:
            indices = np.sort(
                rng.choice(engine.n_bases, size=config.batch_bases, replace=False)
            )
            _, grad = engine.value_and_grad(theta, indices)
            if not np.all(np.isfinite(grad)):
                return _RestartResult(
                    restart, None, np.inf, rows, f"non-finite gradient at epoch {epoch}"
                )
            theta = theta - lr * grad
            cost = engine.value(theta)
            if not np.isfinite(cost):
                return _RestartResult(
                    restart, None, np.inf, rows, f"non-finite cost at epoch {epoch}"
                )
            gnorm = float(np.linalg.norm(grad))
        else:
            # The gradient at the accepted point doubles as the next step's
            # direction, so the common path costs one evaluation per epoch.
            accepted = False
            for _ in range(MAX_HALVINGS + 1):
                candidate = theta - lr * grad
                new_cost, new_grad = engine.value_and_grad(candidate)
                if (
                    np.isfinite(new_cost)
                    and np.all(np.isfinite(new_grad))
                    and new_cost <= cost
                ):
                    theta = candidate
                    cost = new_cost
                    grad = new_grad
                    accepted = True
                    break
                lr *= 0.5
            gnorm = float(np.linalg.norm(grad))
            if not accepted:
                rows.append((epoch, cost, gnorm, lr, restart))
                break

        rows.append((epoch, cost, gnorm, lr, restart))
        if cost < best_cost:
            improvement = (best_cost - cost) / max(best_cost, _COST_FLOOR)
            best_cost = cost
            best_theta = theta.copy()
            stall = 0 if improvement > config.tol_rel else stall + 1
        else:
            stall += 1
        if stall >= config.patience or cost <= _COST_FLOOR:
            break

    return _RestartResult(restart, best_theta, best_cost, rows)


def train_pure_state(
    data: MeasurementDataset, config: TrainConfig, n_threads: int = 1
) -> tuple[NqsState, TrainingLog]:
    """Fit a pure ansatz state to measurement statistics.

    Returns the best state over all restarts together with the full training
    log; identical (data, config) inputs give bit-identical results.
    """
    if data.n_records == 0 and not config.cost.orth_states:
        raise ValueError("dataset is empty and no orthogonality penalty is active")
    engine = CostEngine(config.cost, data)

    if n_threads > 1 and config.restarts > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(
                pool.map(
                    lambda k: _run_restart(engine, config, k), range(config.restarts)
                )
            )
    else:
        results = [_run_restart(engine, config, k) for k in range(config.restarts)]

    diagnostics = [
        f"restart {r.restart} aborted: {r.error}" for r in results if r.error
    ]
    survivors = [r for r in results if r.error is None]
    if not survivors:
        raise RuntimeError("all restarts failed: " + "; ".join(diagnostics))
    winner = min(survivors, key=lambda r: (r.cost, r.restart))

    rows = [row for r in results for row in r.rows]
    log = TrainingLog(
        rows=rows,
        winner_restart=winner.restart,
        best_cost=winner.cost,
        diagnostics=diagnostics,
    )
    state = rbm.unpack_parameters(winner.theta, engine.n_qubits)
    return state.with_log_partition(), log


def train_next_eigenstate(
    data: MeasurementDataset,
    previous: list[StateVector] | tuple[StateVector, ...],
    config: TrainConfig,
    n_threads: int = 1,
) -> tuple[NqsState, TrainingLog]:
    """Fit a state constrained to be orthogonal to previously extracted ones.

    With an empty ``previous`` this is exactly ``train_pure_state``.  If the
    trained state fails to reach the orthogonality tolerance, the failure is
    flagged in the log and the state is still returned.
    """
    spec = replace(config.cost, orth_states=tuple(previous))
    state, log = train_pure_state(data, replace(config, cost=spec), n_threads)
    if previous:
        psi = rbm.to_state_vector(state)
        total = float(
            sum(abs(prev.overlap(psi)) ** 2 for prev in previous)
        )
        log.orthogonality_ok = total <= ORTHOGONALITY_TOL
        if not log.orthogonality_ok:
            log.diagnostics.append(
                f"orthogonality not reached: total squared overlap {total:.3e}"
            )
    return state, log
