"""PCNet: feature transform -> PC-Conv -> softmax, trained with hand-derived gradients.

Logits are ``g_t(L) Theta(X)`` where ``Theta`` is a linear layer or a two-layer
MLP and ``g_t`` is a PC-Conv filter bank with learnable weights ``theta``.
Backward passes reuse the cached powers ``L^n Theta(X)``: the gradient of the
loss with respect to ``theta_k`` is ``sum_n T[n, k] <dlogits, L^n H>``.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import Dataset, Split
from .errors import InvalidArgumentError
from .filters import FilterParams, propagate
from .graph import Graph, NormalizationConfig, pc_laplacian
from .linalg import SparseMatrix, spmm
from .pcpoly import build_table, check_t

__all__ = [
    "ModelConfig",
    "TrainConfig",
    "PCNetModel",
    "AdamState",
    "History",
    "MODES",
    "LOWPASS_T",
    "init_model",
    "baseline_mode",
    "forward",
    "loss",
    "backward",
    "adam_step",
    "train",
    "evaluate",
    "predict",
    "save_model",
    "load_model",
]

MODES = ("pcnet", "lowpass", "mlp_only")
LOWPASS_T = 1e-6
PROB_EPS = 1e-12
MAGIC = b"PCN1"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    t: float = 0.5
    p: float = 2.0
    eta: float = 0.5
    N: int = 10
    K: int = 5
    hidden: int = 64
    mlp_layers: int = 2
    dropout: float = 0.5
    mode: str = "pcnet"

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidArgumentError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mlp_layers not in (1, 2):
            raise InvalidArgumentError("mlp_layers must be 1 or 2")
        if not 0.0 <= self.dropout < 1.0:
            raise InvalidArgumentError("dropout must lie in [0, 1)")
        if self.K < 1 or self.N < 0 or self.hidden < 1:
            raise InvalidArgumentError("need K >= 1, N >= 0 and hidden >= 1")
        NormalizationConfig(self.eta, self.p)
        check_t(self.t, self.K)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.01
    weight_decay: float = 5e-4
    theta_lr: float | None = None
    max_epochs: int = 1000
    patience: int = 200
    seed: int = 0

    def __post_init__(self):
        if not self.lr > 0 or (self.theta_lr is not None and not self.theta_lr > 0):
            raise InvalidArgumentError("learning rates must be positive")
        if self.weight_decay < 0:
            raise InvalidArgumentError("weight_decay must be non-negative")
        if self.max_epochs < 1 or not 0 <= self.patience <= self.max_epochs:
            raise InvalidArgumentError("need max_epochs >= 1 and 0 <= patience <= max_epochs")


def baseline_mode(config: ModelConfig, flag: str) -> ModelConfig:
    """Constrained variants of PCNet run through the same training loop.

    ``lowpass`` freezes ``t`` at 1e-6, leaving the ``(1 - lam)^k`` bank;
    ``mlp_only`` freezes ``theta`` at ``e_0`` so the graph is never used.
    """
    if flag not in MODES:
        raise InvalidArgumentError(f"unknown baseline flag {flag!r}")
    if flag == "lowpass":
        return replace(config, mode=flag, t=LOWPASS_T)
    return replace(config, mode=flag)


@dataclass(eq=False)
class PCNetModel:
    config: ModelConfig
    params: dict
    n_features: int
    n_classes: int
    version: int = 0
    _table: object = field(default=None, repr=False)

    @property
    def frozen(self) -> tuple[str, ...]:
        return ("theta",) if self.config.mode == "mlp_only" else ()

    @property
    def table(self):
        if self._table is None:
            self._table = build_table(self.config.t, self.config.N, self.config.K)
        return self._table

    def filter_params(self) -> FilterParams:
        c = self.config
        return FilterParams(self.params["theta"], c.t, c.p, c.eta, c.N, c.K)

    def folded(self) -> np.ndarray:
        """Power-basis coefficients ``a_n`` of the current filter bank."""
        theta = self.params["theta"]
        a = self.table.taylor() @ theta[1:]
        a[0] += theta[0]
        return a

    def operator(self, graph: Graph) -> SparseMatrix:
        return pc_laplacian(graph, NormalizationConfig(self.config.eta, self.config.p))

    def copy(self) -> "PCNetModel":
        return PCNetModel(self.config, {k: v.copy() for k, v in self.params.items()},
                          self.n_features, self.n_classes, self.version, self._table)


def _glorot(rng, fan_in, fan_out):
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def init_model(n_features: int, n_classes: int, config: ModelConfig | None = None, seed=0) -> PCNetModel:
    """Glorot-uniform weights, zero biases; ``theta = (1, 1/K, ..., 1/K)``
    (``e_0`` in ``mlp_only`` mode)."""
    config = config or ModelConfig()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    params = {}
    if config.mlp_layers == 2:
        params["W1"] = _glorot(rng, n_features, config.hidden)
        params["b1"] = np.zeros(config.hidden)
        params["W2"] = _glorot(rng, config.hidden, n_classes)
        params["b2"] = np.zeros(n_classes)
    else:
        params["W1"] = _glorot(rng, n_features, n_classes)
        params["b1"] = np.zeros(n_classes)
    theta = np.full(config.K + 1, 1.0 / config.K)
    theta[0] = 1.0
    if config.mode == "mlp_only":
        theta[1:] = 0.0
    params["theta"] = theta
    return PCNetModel(config, params, n_features, n_classes)


# -- forward / backward ------------------------------------------------

def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def forward(model: PCNetModel, L: SparseMatrix, X, training: bool = False, rng=None):
    """Class probabilities and the cache needed by :func:`backward`."""
    X = np.asarray(X, dtype=np.float64)
    prm, cfg = model.params, model.config
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise InvalidArgumentError(f"expected {model.n_features} features per node, got shape {X.shape}")
    if L.shape != (X.shape[0], X.shape[0]):
        raise InvalidArgumentError(f"operator {L.shape} does not match {X.shape[0]} nodes")

    cache = {"X": X, "L": L, "version": model.version}
    Z1 = X @ prm["W1"] + prm["b1"]
    if cfg.mlp_layers == 2:
        H1 = np.maximum(Z1, 0.0)
        mask = None
        if training and cfg.dropout > 0:
            if rng is None:
                raise InvalidArgumentError("dropout in training mode needs an rng")
            mask = (rng.random(H1.shape) >= cfg.dropout) / (1.0 - cfg.dropout)
            H1 = H1 * mask
        H = H1 @ prm["W2"] + prm["b2"]
        cache.update(Z1=Z1, H1=H1, mask=mask)
    else:
        H = Z1

    a = model.folded()
    powers = propagate(L, H, cfg.N)
    logits = a[0] * powers[0]
    for n in range(1, cfg.N + 1):
        logits = logits + a[n] * powers[n]
    probs = _softmax(logits)
    cache.update(H=H, powers=powers, a=a, logits=logits, probs=probs)
    return probs, cache


def _check_idx(idx, m):
    idx = np.asarray(idx, dtype=np.int64)
    if idx.ndim != 1 or len(idx) == 0:
        raise InvalidArgumentError("index set must be a non-empty vector")
    if idx.min() < 0 or idx.max() >= m:
        raise InvalidArgumentError("index out of range")
    return idx


def loss(probs, labels, train_idx) -> float:
    """Mean cross-entropy over ``train_idx`` with probabilities clamped at 1e-12."""
    probs = np.asarray(probs)
    idx = _check_idx(train_idx, probs.shape[0])
    picked = probs[idx, np.asarray(labels)[idx]]
    return float(-np.mean(np.log(np.maximum(picked, PROB_EPS))))


def backward(model: PCNetModel, cache, labels, train_idx, weight_decay: float = 0.0) -> dict:
    """Gradients of ``loss + weight_decay/2 * sum ||W||^2`` for every parameter."""
    if cache.get("version") != model.version:
        raise InvalidArgumentError("stale cache: parameters changed since the forward pass")
    prm, cfg = model.params, model.config
    probs, powers, L = cache["probs"], cache["powers"], cache["L"]
    idx = _check_idx(train_idx, probs.shape[0])
    labels = np.asarray(labels)

    dlogits = np.zeros_like(probs)
    dlogits[idx] = probs[idx]
    dlogits[idx, labels[idx]] -= 1.0
    dlogits /= len(idx)

    grads = {}
    inner = np.array([np.sum(dlogits * P) for P in powers])
    dtheta = np.empty(cfg.K + 1)
    dtheta[0] = inner[0]
    dtheta[1:] = model.table.taylor().T @ inner
    grads["theta"] = dtheta

    # dH = sum_n a_n L^n dlogits (L is symmetric)
    a = cache["a"]
    v = dlogits
    dH = a[0] * v
    for n in range(1, cfg.N + 1):
        v = spmm(L, v)
        dH = dH + a[n] * v

    X = cache["X"]
    if cfg.mlp_layers == 2:
        grads["W2"] = cache["H1"].T @ dH
        grads["b2"] = dH.sum(axis=0)
        dH1 = dH @ prm["W2"].T
        if cache["mask"] is not None:
            dH1 = dH1 * cache["mask"]
        dZ1 = dH1 * (cache["Z1"] > 0)
        grads["W1"] = X.T @ dZ1
        grads["b1"] = dZ1.sum(axis=0)
    else:
        grads["W1"] = X.T @ dH
        grads["b1"] = dH.sum(axis=0)

    if weight_decay:
        for name in ("W1", "W2"):
            if name in grads:
                grads[name] = grads[name] + weight_decay * prm[name]
    return grads


# -- optimizer ---------------------------------------------------------

@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(state: AdamState, params: dict, grads: dict, lr) -> dict:
    """One bias-corrected Adam update, in place.  ``lr`` is a float or a per-name dict."""
    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    for name, g in grads.items():
        p = params[name]
        if g.shape != p.shape:
            raise InvalidArgumentError(f"gradient for {name} has shape {g.shape}, parameter {p.shape}")
        m = state.m.setdefault(name, np.zeros_like(p))
        v = state.v.setdefault(name, np.zeros_like(p))
        if m.shape != p.shape:
            raise InvalidArgumentError(f"optimizer state for {name} has the wrong shape")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        step = lr[name] if isinstance(lr, dict) else lr
        p -= step * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params


# -- training ------------------------------------------------------------

@dataclass
class History:
    epoch: list = field(default_factory=list)
    train_loss: list = field(default_factory=list)
    val_acc: list = field(default_factory=list)
    best_epoch: int = -1
    best_val_acc: float = -1.0

    def __len__(self):
        return len(self.epoch)

    def rows(self):
        return list(zip(self.epoch, self.train_loss, self.val_acc))


def predict(model: PCNetModel, L: SparseMatrix, X) -> np.ndarray:
    probs, _ = forward(model, L, X, training=False)
    return np.argmax(probs, axis=1)


def evaluate(model: PCNetModel, dataset: Dataset, idx, L: SparseMatrix | None = None) -> float:
    """Accuracy of argmax predictions (ties go to the lowest class id) on ``idx``."""
    idx = _check_idx(idx, dataset.n_nodes)
    if L is None:
        L = model.operator(dataset.graph)
    pred = predict(model, L, dataset.X)
    return float(np.mean(pred[idx] == dataset.labels[idx]))


def train(dataset: Dataset, split: Split, model_config: ModelConfig | None = None,
          config: TrainConfig | None = None):
    """Full-batch Adam with early stopping on validation accuracy.

    Training stops once ``patience`` consecutive epochs fail to beat the best
    validation accuracy; the returned model carries the best epoch's weights.
    """
    model_config = model_config or ModelConfig()
    config = config or TrainConfig()
    split.check_bounds(dataset.n_nodes)
    rng = np.random.default_rng(config.seed)
    model = init_model(dataset.n_features, dataset.n_classes, model_config, rng)
    L = model.operator(dataset.graph)
    X, y = dataset.X, dataset.labels

    theta_lr = config.lr if config.theta_lr is None else config.theta_lr
    lrs = {name: (theta_lr if name == "theta" else config.lr) for name in model.params}
    state = AdamState()
    history = History()
    best = model.copy()
    stale = 0
    for epoch in range(config.max_epochs):
        probs, cache = forward(model, L, X, training=True, rng=rng)
        train_loss = loss(probs, y, split.train_idx)
        grads = backward(model, cache, y, split.train_idx, config.weight_decay)
        for name in model.frozen:
            grads.pop(name)
        adam_step(state, model.params, grads, lrs)
        model.version += 1

        val_acc = evaluate(model, dataset, split.val_idx, L)
        history.epoch.append(epoch)
        history.train_loss.append(train_loss)
        history.val_acc.append(val_acc)
        if val_acc > history.best_val_acc:
            history.best_val_acc = val_acc
            history.best_epoch = epoch
            best = model.copy()
            stale = 0
        else:
            stale += 1
        if stale >= config.patience:
            break
    return best, history


# -- persistence -------------------------------------------------------
# Layout (little-endian): b"PCN1", 8 x int64 header
# (version, mlp_layers, n_features, hidden, n_classes, K, N, mode index),
# float64 arrays W1, b1, [W2, b2], theta, then float64 (t, p, eta, dropout).

def save_model(model: PCNetModel, path) -> Path:
    cfg = model.config
    path = Path(path)
    header = struct.pack(
        "<8q", FORMAT_VERSION, cfg.mlp_layers, model.n_features, cfg.hidden,
        model.n_classes, cfg.K, cfg.N, MODES.index(cfg.mode),
    )
    names = ["W1", "b1"] + (["W2", "b2"] if cfg.mlp_layers == 2 else []) + ["theta"]
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(header)
        for name in names:
            fh.write(np.ascontiguousarray(model.params[name], dtype="<f8").tobytes())
        fh.write(struct.pack("<4d", cfg.t, cfg.p, cfg.eta, cfg.dropout))
    return path


def load_model(path) -> PCNetModel:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise InvalidArgumentError(f"{path}: not a PCNet model file")
    version, layers, d, hidden, C, K, N, mode = struct.unpack_from("<8q", raw, 4)
    if version != FORMAT_VERSION:
        raise InvalidArgumentError(f"{path}: unsupported format version {version}")
    width = hidden if layers == 2 else C
    shapes = [("W1", (d, width)), ("b1", (width,))]
    if layers == 2:
        shapes += [("W2", (hidden, C)), ("b2", (C,))]
    shapes.append(("theta", (K + 1,)))
    offset = 4 + 8 * 8
    params = {}
    for name, shape in shapes:
        count = int(np.prod(shape))
        params[name] = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).reshape(shape).astype(np.float64)
        offset += 8 * count
    t, p, eta, dropout = struct.unpack_from("<4d", raw, offset)
    if offset + 32 != len(raw):
        raise InvalidArgumentError(f"{path}: trailing or missing bytes")
    config = ModelConfig(t=t, p=p, eta=eta, N=N, K=K, hidden=hidden, mlp_layers=layers,
                         dropout=dropout, mode=MODES[mode])
    return PCNetModel(config, params, d, C)
