"""Small logistic-regression primitive used by NIL prediction and pair scoring.

Training is deliberately boring: per-feature standardization, zero init, and
full-batch gradient descent on log-loss. Everything is deterministic, and the
fitted model serializes to JSON so case bundles can ship their own weights.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DegenerateFeatureWarning(UserWarning):
    """A feature had zero variance and was frozen out of training."""


def sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@dataclass
class LogisticModel:
    weights: list[float]
    bias: float
    feature_names: list[str]
    means: list[float]
    stds: list[float]
    final_loss: float | None = None
    loss_trace: list[float] = field(default_factory=list, repr=False)
    dropped_features: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.feature_names):
            raise ValueError("weights length must equal feature count")
        if any(s <= 0 for s in self.stds):
            raise ValueError("feature stds must be > 0")

    @classmethod
    def plain(cls, weights: list[float], bias: float, feature_names: list[str]) -> "LogisticModel":
        """Model over raw features (identity standardization)."""
        n = len(weights)
        return cls(
            weights=list(weights),
            bias=bias,
            feature_names=list(feature_names),
            means=[0.0] * n,
            stds=[1.0] * n,
        )

    def predict_proba(self, features: list[float]) -> float:
        if len(features) != len(self.weights):
            raise ValueError(
                f"expected {len(self.weights)} features, got {len(features)}"
            )
        z = self.bias
        for x, w, mu, sd in zip(features, self.weights, self.means, self.stds):
            z += w * (x - mu) / sd
        return sigmoid(z)

    def to_dict(self) -> dict:
        return {
            "weights": list(self.weights),
            "bias": self.bias,
            "feature_names": list(self.feature_names),
            "means": list(self.means),
            "stds": list(self.stds),
            "final_loss": self.final_loss,
            "dropped_features": list(self.dropped_features),
        }

    def save(self, path: Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_dict(cls, payload: dict) -> "LogisticModel":
        return cls(
            weights=list(payload["weights"]),
            bias=float(payload["bias"]),
            feature_names=list(payload["feature_names"]),
            means=list(payload["means"]),
            stds=list(payload["stds"]),
            final_loss=payload.get("final_loss"),
            dropped_features=list(payload.get("dropped_features", [])),
        )

    @classmethod
    def load(cls, path: Path) -> "LogisticModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def train_logistic(
    examples: list[tuple[list[float], int]],
    lr: float = 0.1,
    epochs: int = 500,
    feature_names: list[str] | None = None,
) -> LogisticModel:
    """Fit a logistic model by full-batch gradient descent on log-loss."""
    if not examples:
        raise ValueError("no training examples")
    labels = {label for _, label in examples}
    if labels != {0, 1}:
        raise ValueError("need at least one example of each label (0 and 1)")

    X = np.array([f for f, _ in examples], dtype=float)
    y = np.array([label for _, label in examples], dtype=float)
    n, d = X.shape
    names = feature_names or [f"f{i}" for i in range(d)]
    if len(names) != d:
        raise ValueError("feature_names length mismatch")

    means = X.mean(axis=0)
    stds = X.std(axis=0)
    dropped = [names[i] for i in range(d) if stds[i] == 0.0]
    if dropped:
        warnings.warn(
            f"zero-variance features frozen at weight 0: {', '.join(dropped)}",
            DegenerateFeatureWarning,
        )
    live = stds != 0.0
    safe_stds = np.where(live, stds, 1.0)
    Z = (X - means) / safe_stds

    w = np.zeros(d)
    b = 0.0
    trace: list[float] = []
    eps = 1e-12
    for _ in range(epochs):
        p = 1.0 / (1.0 + np.exp(-(Z @ w + b)))
        loss = float(-np.mean(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps)))
        trace.append(loss)
        grad_w = Z.T @ (p - y) / n
        grad_w[~live] = 0.0
        w -= lr * grad_w
        b -= lr * float(np.mean(p - y))

    return LogisticModel(
        weights=[float(v) for v in w],
        bias=float(b),
        feature_names=names,
        means=[float(v) for v in means],
        stds=[float(v) for v in safe_stds],
        final_loss=trace[-1],
        loss_trace=trace,
        dropped_features=dropped,
    )


def accuracy(model: LogisticModel, examples: list[tuple[list[float], int]]) -> float:
    good = sum(
        1 for f, label in examples if (model.predict_proba(f) >= 0.5) == bool(label)
    )
    return good / len(examples)
