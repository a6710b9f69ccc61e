"""Box IOU and the continual-learning metric suite over accuracy matrices.

The accuracy matrix a has one row per completed training step: a[i][j] is the
accuracy on task j's test set after training through task i (0-based here,
full square recorded so unseen-task entries exist). b[j] is the accuracy of
the freshly initialized model on task j.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Box:
    """Axis-aligned box, top-left origin."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.w < 0 or self.h < 0:
            raise ValueError("box width and height must be non-negative")

    @property
    def area(self) -> float:
        return self.w * self.h


def iou(a: Box, b: Box) -> float:
    """Intersection over union; 0 when the union has zero area."""
    ix = max(0.0, min(a.x + a.w, b.x + b.w) - max(a.x, b.x))
    iy = max(0.0, min(a.y + a.h, b.y + b.h) - max(a.y, b.y))
    inter = ix * iy
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def is_correct(iou_value: float, threshold: float = 0.5) -> bool:
    """Strictly greater than the threshold; exactly 0.5 does not count."""
    return iou_value > threshold


@dataclass
class AccuracyMatrix:
    """a: (rows, N) accuracies, b: (N,) random-init baseline, optional per-task
    mean attention triples measured after final training."""

    a: np.ndarray
    b: np.ndarray
    attention_report: np.ndarray | None = None

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.a.ndim != 2 or self.a.shape[0] < 1:
            raise ValueError("a must be a non-empty 2-D array")
        if self.b.shape != (self.a.shape[1],):
            raise ValueError("baseline length must match the number of tasks")
        if np.any(self.a < 0) or np.any(self.a > 1) or np.any(self.b < 0) or np.any(self.b > 1):
            raise ValueError("accuracies must lie in [0, 1]")
        if self.attention_report is not None:
            self.attention_report = np.asarray(self.attention_report, dtype=np.float64)

    @property
    def num_tasks(self) -> int:
        return self.a.shape[1]

    @property
    def num_steps(self) -> int:
        return self.a.shape[0]

    def is_square(self) -> bool:
        return self.a.shape[0] == self.a.shape[1]


def la(matrix: AccuracyMatrix) -> float:
    """Mean accuracy across all tasks after the final training step."""
    return float(np.mean(matrix.a[-1]))


def aa(matrix: AccuracyMatrix, step: int) -> float:
    """Mean accuracy over tasks 1..step after training through task `step` (1-based)."""
    if not 1 <= step <= matrix.num_steps:
        raise ValueError(f"step must be in [1, {matrix.num_steps}]")
    return float(np.mean(matrix.a[step - 1, :step]))


def aa_steps(matrix: AccuracyMatrix) -> list[float]:
    return [aa(matrix, i) for i in range(1, matrix.num_steps + 1)]


def fwt_steps(matrix: AccuracyMatrix) -> list[float]:
    """Per-step transfer to unseen tasks: mean over j > i of a[i][j] - b[j]."""
    if not matrix.is_square():
        raise ValueError("forward transfer needs the full square matrix")
    n = matrix.num_tasks
    if n < 2:
        raise ValueError("forward transfer needs at least two tasks")
    return [float(np.mean(matrix.a[i - 1, i:] - matrix.b[i:])) for i in range(1, n)]


def fwt(matrix: AccuracyMatrix) -> float:
    """Mean of the per-step forward-transfer values."""
    return float(np.mean(fwt_steps(matrix)))


def bwt_steps(matrix: AccuracyMatrix) -> list[float]:
    """Per-step retention: mean over j < i of a[i][j] - a[j][j]."""
    if not matrix.is_square():
        raise ValueError("backward transfer needs the full square matrix")
    n = matrix.num_tasks
    if n < 2:
        raise ValueError("backward transfer needs at least two tasks")
    diag = np.diag(matrix.a)
    return [float(np.mean(matrix.a[i - 1, : i - 1] - diag[: i - 1])) for i in range(2, n + 1)]


def bwt(matrix: AccuracyMatrix) -> float:
    """Mean of the per-step backward-transfer values."""
    return float(np.mean(bwt_steps(matrix)))
