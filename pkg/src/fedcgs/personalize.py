"""Local training with a prototype feature-alignment penalty.

A compact two-layer extractor plus linear classifier stands in for the
fine-tuned network: it is small enough that every gradient is derived by
hand and checked against finite differences. The extractor output lives in
the same space as the downloaded global prototypes, and the objective is

    cross_entropy + lambda * R,
    R = sum_j (1 / n_j) * sum_{x with label j} ||f(x) - prototype_j||^2

where n_j counts label-j samples in the data the penalty is evaluated on and
empty classes are skipped. The prototypes stay fixed for the whole run; only
the local parameters move.
"""

from dataclasses import dataclass, field

import numpy as np

from .data import LabeledFeatureSet

PARAM_NAMES = ("w1", "b1", "w2", "b2", "wc", "bc")


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite during local training."""


@dataclass
class MlpModel:
    """input -> relu(x W1 + b1) -> feature map (x W2 + b2) -> linear classifier."""

    w1: np.ndarray  # (d_in, hidden)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden, d_feat)
    b2: np.ndarray  # (d_feat,)
    wc: np.ndarray  # (d_feat, C)
    bc: np.ndarray  # (C,)

    @property
    def feature_dim(self) -> int:
        return self.w2.shape[1]

    @property
    def num_classes(self) -> int:
        return self.wc.shape[1]

    def copy(self) -> "MlpModel":
        return MlpModel(*(getattr(self, name).copy() for name in PARAM_NAMES))

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}


@dataclass(frozen=True)
class PersonalizeConfig:
    """Hyperparameters for one client's local run.

    Defaults follow the usual small-scale recipe: momentum 0.5, learning
    rate 0.01. ``lam`` weighs the alignment penalty; zero disables it.
    """

    lam: float = 1.0
    learning_rate: float = 0.01
    epochs: int = 50
    batch_size: int = 32
    seed: int = 0
    momentum: float = 0.5

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")


def init_model(
    input_dim: int, hidden: int, feature_dim: int, num_classes: int, seed: int = 0
) -> MlpModel:
    """Seeded uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)] per layer."""
    rng = np.random.default_rng(seed)

    def layer(fan_in, fan_out):
        bound = 1.0 / np.sqrt(fan_in)
        w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        b = rng.uniform(-bound, bound, size=fan_out)
        return w, b

    w1, b1 = layer(input_dim, hidden)
    w2, b2 = layer(hidden, feature_dim)
    wc, bc = layer(feature_dim, num_classes)
    return MlpModel(w1, b1, w2, b2, wc, bc)


def _forward(model: MlpModel, x: np.ndarray):
    pre1 = x @ model.w1 + model.b1
    act1 = np.maximum(pre1, 0.0)
    feats = act1 @ model.w2 + model.b2
    logits = feats @ model.wc + model.bc
    return pre1, act1, feats, logits


def model_features(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """The local feature map f(x; theta) for a batch of rows."""
    return _forward(model, np.asarray(x, dtype=np.float64))[2]


def model_logits(model: MlpModel, x: np.ndarray) -> np.ndarray:
    return _forward(model, np.asarray(x, dtype=np.float64))[3]


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _backprop_trunk(model, x, pre1, act1, d_feats, grads):
    """Accumulate extractor gradients given d(loss)/d(features)."""
    grads["w2"] += act1.T @ d_feats
    grads["b2"] += d_feats.sum(axis=0)
    d_act1 = d_feats @ model.w2.T
    d_pre1 = d_act1 * (pre1 > 0)
    grads["w1"] += x.T @ d_pre1
    grads["b1"] += d_pre1.sum(axis=0)


def _zero_grads(model: MlpModel) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(getattr(model, name)) for name in PARAM_NAMES}


def cross_entropy_and_grads(
    model: MlpModel, x: np.ndarray, y: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy over the batch and its gradient for every parameter."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = len(y)
    pre1, act1, feats, logits = _forward(model, x)
    probs = _softmax(logits)
    loss = float(-np.log(probs[np.arange(n), y] + 1e-300).mean())

    d_logits = probs.copy()
    d_logits[np.arange(n), y] -= 1.0
    d_logits /= n

    grads = _zero_grads(model)
    grads["wc"] += feats.T @ d_logits
    grads["bc"] += d_logits.sum(axis=0)
    d_feats = d_logits @ model.wc.T
    _backprop_trunk(model, x, pre1, act1, d_feats, grads)
    return loss, grads


def regularizer(model: MlpModel, data: LabeledFeatureSet, prototypes: np.ndarray) -> float:
    """Alignment penalty of the model's features against fixed prototypes.

    Per-class mean squared distance, summed over the classes present in
    ``data``. The lambda weight is applied by the trainer, not here.
    """
    value, _ = regularizer_and_grads(model, data.features, data.labels, prototypes)
    return value


def regularizer_and_grads(
    model: MlpModel, x: np.ndarray, y: np.ndarray, prototypes: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Alignment penalty and its gradient; classifier parameters get zero."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    prototypes = np.asarray(prototypes, dtype=np.float64)
    if prototypes.ndim != 2 or prototypes.shape[1] != model.feature_dim:
        raise ValueError(
            f"prototype dimension mismatch: model features have dim "
            f"{model.feature_dim}, prototypes have shape {prototypes.shape}"
        )
    pre1, act1, feats, _ = _forward(model, x)
    counts = np.bincount(y, minlength=prototypes.shape[0]).astype(np.float64)
    inv = np.zeros_like(counts)
    inv[counts > 0] = 1.0 / counts[counts > 0]

    residual = feats - prototypes[y]
    per_sample_weight = inv[y]
    value = float((per_sample_weight * np.einsum("nd,nd->n", residual, residual)).sum())

    grads = _zero_grads(model)
    d_feats = 2.0 * residual * per_sample_weight[:, None]
    _backprop_trunk(model, x, pre1, act1, d_feats, grads)
    return value, grads


@dataclass
class TrainResult:
    model: MlpModel
    epoch_losses: list[float] = field(default_factory=list)
    epoch_alignment: list[float] = field(default_factory=list)


def local_train(
    model: MlpModel,
    data: LabeledFeatureSet,
    prototypes: np.ndarray,
    cfg: PersonalizeConfig,
) -> TrainResult:
    """Mini-batch gradient descent with momentum on cross-entropy + lam * R.

    Deterministic given the config seed (it fixes the shuffle order); zero
    epochs returns the initial parameters untouched. Raises
    TrainingDivergedError as soon as a batch objective stops being finite.
    """
    if data.n < 1:
        raise ValueError("local training needs a non-empty dataset")
    prototypes = np.asarray(prototypes, dtype=np.float64).copy()  # fixed for the whole run
    model = model.copy()
    rng = np.random.default_rng(cfg.seed)
    velocity = {name: np.zeros_like(getattr(model, name)) for name in PARAM_NAMES}
    result = TrainResult(model)

    for _ in range(cfg.epochs):
        order = rng.permutation(data.n)
        epoch_loss = 0.0
        batches = 0
        for start in range(0, data.n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            bx, by = data.features[idx], data.labels[idx]
            ce, grads = cross_entropy_and_grads(model, bx, by)
            objective = ce
            if cfg.lam > 0:
                reg, reg_grads = regularizer_and_grads(model, bx, by, prototypes)
                objective += cfg.lam * reg
                for name in PARAM_NAMES:
                    grads[name] += cfg.lam * reg_grads[name]
            if not np.isfinite(objective):
                raise TrainingDivergedError(f"objective became {objective}")
            for name in PARAM_NAMES:
                velocity[name] = cfg.momentum * velocity[name] + grads[name]
                getattr(model, name)[...] -= cfg.learning_rate * velocity[name]
            epoch_loss += objective
            batches += 1
        result.epoch_losses.append(epoch_loss / batches)
        result.epoch_alignment.append(regularizer(model, data, prototypes))
    return result


def class_feature_alignment(
    model: MlpModel, data: LabeledFeatureSet, prototypes: np.ndarray
) -> float:
    """Mean squared distance between per-class local feature means and prototypes.

    The metric the alignment penalty is supposed to shrink; averaged over the
    classes present in ``data``.
    """
    feats = model_features(model, data.features)
    present = np.unique(data.labels)
    gaps = [
        float(np.sum((feats[data.labels == cls].mean(axis=0) - prototypes[cls]) ** 2))
        for cls in present
    ]
    return float(np.mean(gaps))
