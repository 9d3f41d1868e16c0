"""Explicit adaptive Runge-Kutta integration of many independent ODEs at once.

Dormand-Prince 5(4) pair with first-same-as-last stages. Every row of the
state array is an independent initial value problem on [0, L_row] with
its own step size and error control; rows advance in lockstep only in
the sense that one loop iteration attempts one step for every active row.

The right-hand side reports, per row, whether a stage state left the
admissible region. Such a step is rejected and retried with a smaller
step; only when the step collapses is the failure raised.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np
import structlog

from gasflow.config import IntegratorConfig
from gasflow.errors import ChokedFlow, NonPhysicalPressure, StiffnessBudgetExceeded

logger = structlog.get_logger()


class StageStatus(IntEnum):
    OK = 0
    CHOKED = 1
    NONPHYSICAL = 2


# Dormand-Prince tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array(_A[6] + [0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_BAD_STAGE_FACTOR = 0.25
_MIN_STEP_FRACTION = 1e-13

# rhs(x, y, rows) -> (dy/dx, status); x and y hold only the listed rows
RightHandSide = Callable[[np.ndarray, np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass
class BatchResult:
    """Final states and, when recorded, every accepted step per row."""

    y: np.ndarray
    steps: np.ndarray
    xs: list[list[float]] = field(default_factory=list)
    ys: list[list[np.ndarray]] = field(default_factory=list)

    def trajectory(self, row: int) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.xs[row]), np.vstack(self.ys[row])


def _raise_for(status: int, label: str, x: float) -> None:
    if status == StageStatus.CHOKED:
        raise ChokedFlow("Momentum denominator vanished (choked flow)", pipe_id=label, x=x)
    raise NonPhysicalPressure("Transformed pressure left the positive range", pipe_id=label, x=x)


def integrate_batch(
    rhs: RightHandSide,
    y0: np.ndarray,
    lengths: np.ndarray,
    cfg: IntegratorConfig,
    labels: Sequence[str] | None = None,
    record: bool = False,
) -> BatchResult:
    """Integrate y' = rhs(x, y) for every row from x = 0 to x = lengths[row].

    Args:
        rhs: Vectorized right-hand side; see :data:`RightHandSide`.
        y0: Initial states, shape (rows, components).
        lengths: End point of each row's interval, shape (rows,).
        cfg: Tolerances, step budget and first-step fraction.
        labels: Row names used in error messages.
        record: Keep every accepted (x, y) per row.

    Raises:
        ChokedFlow, NonPhysicalPressure: A row cannot take any step.
        StiffnessBudgetExceeded: A row needed more than ``cfg.max_steps`` steps.
    """
    y = np.array(y0, dtype=float, ndmin=2, copy=True)
    lengths = np.asarray(lengths, dtype=float)
    n_rows = y.shape[0]
    labels = list(labels) if labels is not None else [str(i) for i in range(n_rows)]

    x = np.zeros(n_rows)
    h = cfg.first_step * lengths
    steps = np.zeros(n_rows, dtype=int)
    active = lengths > 0
    result = BatchResult(y=y, steps=steps)
    if record:
        result.xs = [[0.0] for _ in range(n_rows)]
        result.ys = [[y[i].copy()] for i in range(n_rows)]

    all_rows = np.arange(n_rows)
    k_first, status = rhs(x, y, all_rows)
    bad = status != StageStatus.OK
    if np.any(bad & active):
        row = int(np.flatnonzero(bad & active)[0])
        _raise_for(int(status[row]), labels[row], 0.0)

    with np.errstate(all="ignore"):
        while np.any(active):
            rows = np.flatnonzero(active)
            hh = np.minimum(h[rows], lengths[rows] - x[rows])
            yr = y[rows]
            xr = x[rows]
            stage_bad = np.zeros(rows.size, dtype=int)

            ks = [k_first[rows]]
            for s in range(1, 7):
                y_stage = yr + hh[:, None] * sum(a * k for a, k in zip(_A[s], ks) if a != 0.0)
                k, st = rhs(xr + _C[s] * hh, y_stage, rows)
                stage_bad = np.where((stage_bad == 0) & (st != StageStatus.OK), st, stage_bad)
                ks.append(k)

            y_new = yr + hh[:, None] * sum(b * k for b, k in zip(_B, ks) if b != 0.0)
            err = hh[:, None] * sum(e * k for e, k in zip(_E, ks) if e != 0.0)
            scale = cfg.atol + cfg.rtol * np.maximum(np.abs(yr), np.abs(y_new))
            err_norm = np.sqrt(np.mean((err / scale) ** 2, axis=1))
            finite = np.isfinite(err_norm) & np.all(np.isfinite(y_new), axis=1)
            nonfinite = (stage_bad == 0) & ~finite
            stage_bad = np.where(nonfinite, int(StageStatus.NONPHYSICAL), stage_bad)

            accepted = (stage_bad == 0) & (err_norm <= 1.0)
            acc_rows = rows[accepted]
            x[acc_rows] = xr[accepted] + hh[accepted]
            y[acc_rows] = y_new[accepted]
            k_first[acc_rows] = ks[6][accepted]
            steps[acc_rows] += 1
            if record:
                for r in acc_rows:
                    result.xs[r].append(float(x[r]))
                    result.ys[r].append(y[r].copy())

            factor = np.where(
                err_norm > 0,
                np.clip(_SAFETY * err_norm ** -0.2, _MIN_FACTOR, _MAX_FACTOR),
                _MAX_FACTOR,
            )
            factor = np.where(accepted, factor, np.minimum(factor, 1.0))
            factor = np.where(stage_bad != 0, _BAD_STAGE_FACTOR, factor)
            h[rows] = hh * factor

            collapsed = (stage_bad != 0) & (h[rows] < _MIN_STEP_FRACTION * lengths[rows])
            if np.any(collapsed):
                i = int(np.flatnonzero(collapsed)[0])
                _raise_for(int(stage_bad[i]), labels[rows[i]], float(xr[i]))

            over = steps[rows] > cfg.max_steps
            if np.any(over):
                i = int(np.flatnonzero(over)[0])
                raise StiffnessBudgetExceeded(
                    f"More than {cfg.max_steps} integration steps",
                    pipe_id=labels[rows[i]], x=float(x[rows[i]]),
                )

            finished = x[rows] >= lengths[rows] * (1.0 - 1e-14)
            x[rows[finished]] = lengths[rows[finished]]
            active[rows[finished]] = False

    logger.debug("batch_integrated", rows=n_rows, max_steps=int(steps.max(initial=0)))
    return result
