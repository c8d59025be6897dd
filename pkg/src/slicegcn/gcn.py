"""Two-layer graph convolution classifier, trained transductively.

The stack is conv(ReLU, 200) -> conv(ReLU, 200) -> dropout -> dropout ->
dense(2), where one convolution is H -> ReLU(A_hat H W + b) over the
symmetric-normalized adjacency. Training is full-graph: every node
participates in propagation, the cross-entropy is averaged over the
labeled (masked) slice nodes only, and parameters follow Adam. Gradients
are derived by hand; tests check them against central finite differences.

All arithmetic is float64 and every random draw is generator-seeded, so a
(graph, config, seed) triple fixes the trained parameters bit for bit.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import metrics as metrics_mod
from .errors import DataError, DivergenceError
from .graph import TextGraph

HIDDEN = 200
N_CLASSES = 2


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    epochs: int = 4
    dropout_p: float = 0.5
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    single_dropout: bool = False
    hidden: int = HIDDEN

    def __post_init__(self):
        if not 0.0 <= self.dropout_p < 1.0:
            raise DataError("dropout_p must be in [0,1)")
        if self.learning_rate <= 0:
            raise DataError("learning_rate must be positive")


@dataclass
class GcnParams:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    W_out: np.ndarray
    b_out: np.ndarray

    NAMES = ("W1", "b1", "W2", "b2", "W_out", "b_out")

    def tensors(self) -> list[tuple[str, np.ndarray]]:
        return [(n, getattr(self, n)) for n in self.NAMES]

    def copy(self) -> "GcnParams":
        return GcnParams(**{n: getattr(self, n).copy() for n in self.NAMES})

    @property
    def dim_in(self) -> int:
        return self.W1.shape[0]

    @property
    def hidden(self) -> int:
        return self.W1.shape[1]


def init_params(dim_in: int, seed: int, hidden: int = HIDDEN) -> GcnParams:
    """Seeded Gaussian init with std sqrt(2/fan_in); zero biases."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    def w(fan_in, fan_out):
        return rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in)
    return GcnParams(
        W1=w(dim_in, hidden),
        b1=np.zeros(hidden),
        W2=w(hidden, hidden),
        b2=np.zeros(hidden),
        W_out=w(hidden, N_CLASSES),
        b_out=np.zeros(N_CLASSES),
    )


@dataclass
class Predictions:
    """Class probabilities and argmax labels for slice nodes."""

    probs: np.ndarray  # (n_slices, 2), rows sum to 1
    log_probs: np.ndarray
    labels: np.ndarray  # argmax
    positions: np.ndarray  # slice-node positions these rows describe


@dataclass
class ForwardCache:
    graph: TextGraph
    params: GcnParams
    X: np.ndarray
    hat_vals: np.ndarray  # the normalized adjacency the pass actually used
    AX: np.ndarray
    Z1: np.ndarray
    H1: np.ndarray
    AH1: np.ndarray
    Z2: np.ndarray
    H2: np.ndarray
    drop_mask: np.ndarray | None
    Hd: np.ndarray
    logits: np.ndarray
    log_probs: np.ndarray
    probs: np.ndarray

    def check_fresh(self) -> None:
        g = self.graph
        if g.hat_vals is not self.hat_vals or g.features is not self.X:
            raise DataError("stale cache: graph changed after the forward pass")


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    m = logits.max(axis=1, keepdims=True)
    return logits - m - np.log(np.exp(logits - m).sum(axis=1, keepdims=True))


def forward(
    g: TextGraph,
    params: GcnParams,
    mode: str = "eval",
    rng: np.random.Generator | int | None = None,
    dropout_p: float = 0.5,
    single_dropout: bool = False,
) -> tuple[Predictions, ForwardCache]:
    """Full-graph forward pass. Train mode applies inverted dropout drawn
    from rng; eval mode is deterministic."""
    if g.features is None:
        raise DataError("graph has no feature matrix")
    if g.hat_vals is None:
        raise DataError("adjacency not normalized")
    X = g.features
    if X.shape[1] != params.dim_in:
        raise DataError(f"feature dim {X.shape[1]} != W1 rows {params.dim_in}")
    if mode not in ("train", "eval"):
        raise DataError(f"unknown mode {mode!r}")

    AX = g.matmul(X)
    Z1 = AX @ params.W1 + params.b1
    H1 = np.maximum(Z1, 0.0)
    AH1 = g.matmul(H1)
    Z2 = AH1 @ params.W2 + params.b2
    H2 = np.maximum(Z2, 0.0)

    drop_mask = None
    if mode == "train" and dropout_p > 0.0:
        if rng is None:
            raise DataError("train mode needs an rng or seed for dropout")
        if not isinstance(rng, np.random.Generator):
            rng = np.random.default_rng(rng)
        keep = 1.0 - dropout_p
        n_masks = 1 if single_dropout else 2
        drop_mask = np.ones_like(H2)
        for _ in range(n_masks):
            drop_mask *= (rng.random(H2.shape) < keep) / keep
    Hd = H2 if drop_mask is None else H2 * drop_mask

    logits = Hd @ params.W_out + params.b_out
    log_probs = _log_softmax(logits)
    probs = np.exp(log_probs)

    sl = slice(g.n_words, g.n_nodes)
    preds = Predictions(
        probs=probs[sl],
        log_probs=log_probs[sl],
        labels=np.argmax(probs[sl], axis=1),
        positions=np.arange(g.n_slices),
    )
    cache = ForwardCache(
        graph=g, params=params, X=X, hat_vals=g.hat_vals, AX=AX, Z1=Z1,
        H1=H1, AH1=AH1, Z2=Z2, H2=H2, drop_mask=drop_mask, Hd=Hd,
        logits=logits, log_probs=log_probs, probs=probs,
    )
    return preds, cache


def loss(preds: Predictions, labels: np.ndarray, train_mask: np.ndarray) -> float:
    """Mean negative log-probability of the true class over masked nodes."""
    mask = np.asarray(train_mask, dtype=bool)
    if not mask.any():
        raise DataError("empty training mask")
    rows = np.where(mask)[0]
    lab = np.asarray(labels)[rows]
    return float(-preds.log_probs[rows, lab].mean())


def backward(cache: ForwardCache, labels: np.ndarray, mask: np.ndarray) -> GcnParams:
    """Exact gradients of loss() w.r.t. every parameter tensor, reusing the
    GcnParams container for the gradient set."""
    cache.check_fresh()
    g = cache.graph
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise DataError("empty training mask")
    rows = g.n_words + np.where(mask)[0]
    lab = np.asarray(labels)[np.where(mask)[0]]
    m = len(rows)

    dlogits = np.zeros_like(cache.logits)
    dlogits[rows] = cache.probs[rows]
    dlogits[rows, lab] -= 1.0
    dlogits[rows] /= m

    dW_out = cache.Hd.T @ dlogits
    db_out = dlogits.sum(axis=0)
    dHd = dlogits @ cache.params.W_out.T

    dH2 = dHd if cache.drop_mask is None else dHd * cache.drop_mask
    dZ2 = dH2 * (cache.Z2 > 0.0)
    dW2 = cache.AH1.T @ dZ2
    db2 = dZ2.sum(axis=0)
    dH1 = g.matmul(dZ2 @ cache.params.W2.T)  # A_hat is symmetric

    dZ1 = dH1 * (cache.Z1 > 0.0)
    dW1 = cache.AX.T @ dZ1
    db1 = dZ1.sum(axis=0)

    return GcnParams(W1=dW1, b1=db1, W2=dW2, b2=db2, W_out=dW_out, b_out=db_out)


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params: GcnParams) -> "AdamState":
        return cls(
            m={n: np.zeros_like(t) for n, t in params.tensors()},
            v={n: np.zeros_like(t) for n, t in params.tensors()},
        )

    def step(self, params: GcnParams, grads: GcnParams, cfg: TrainConfig) -> None:
        self.t += 1
        b1c = 1.0 - cfg.beta1 ** self.t
        b2c = 1.0 - cfg.beta2 ** self.t
        for name, p in params.tensors():
            grad = getattr(grads, name)
            self.m[name] = cfg.beta1 * self.m[name] + (1.0 - cfg.beta1) * grad
            self.v[name] = cfg.beta2 * self.v[name] + (1.0 - cfg.beta2) * grad * grad
            m_hat = self.m[name] / b1c
            v_hat = self.v[name] / b2c
            p -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps)


def train(
    g: TextGraph,
    config: TrainConfig,
    labels: np.ndarray,
    train_mask: np.ndarray,
) -> tuple[GcnParams, list[float]]:
    """Full-graph transductive training.

    The recorded history holds one loss per epoch, evaluated on the training
    nodes in eval mode after the parameter update, so it is free of dropout
    noise. A non-finite loss aborts with DivergenceError.
    """
    labels = np.asarray(labels)
    train_mask = np.asarray(train_mask, dtype=bool)
    if g.features is None:
        raise DataError("graph has no feature matrix")
    if len(labels) != g.n_slices or len(train_mask) != g.n_slices:
        raise DataError("labels/mask length must equal the slice-node count")
    params = init_params(g.features.shape[1], config.seed, hidden=config.hidden)
    adam = AdamState.for_params(params)
    drop_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))
    history: list[float] = []
    for epoch in range(config.epochs):
        preds, cache = forward(
            g, params, mode="train", rng=drop_rng,
            dropout_p=config.dropout_p, single_dropout=config.single_dropout,
        )
        step_loss = loss(preds, labels, train_mask)
        if not np.isfinite(step_loss):
            raise DivergenceError(f"non-finite training loss at epoch {epoch}")
        grads = backward(cache, labels, train_mask)
        adam.step(params, grads, config)
        eval_preds, _ = forward(g, params, mode="eval")
        epoch_loss = loss(eval_preds, labels, train_mask)
        if not np.isfinite(epoch_loss):
            raise DivergenceError(f"non-finite training loss at epoch {epoch}")
        history.append(epoch_loss)
    return params, history


def predict(g: TextGraph, params: GcnParams, mask: np.ndarray) -> Predictions:
    """Eval-mode predictions restricted to the masked slice nodes."""
    mask = np.asarray(mask, dtype=bool)
    preds, _ = forward(g, params, mode="eval")
    rows = np.where(mask)[0]
    return Predictions(
        probs=preds.probs[rows],
        log_probs=preds.log_probs[rows],
        labels=preds.labels[rows],
        positions=rows,
    )


def baseline_linear(
    features: np.ndarray,
    labels: np.ndarray,
    train_mask: np.ndarray,
    test_mask: np.ndarray,
    config: TrainConfig,
) -> tuple[metrics_mod.EvalReport, np.ndarray]:
    """Logistic-style linear classifier over per-slice vectors alone, trained
    with the same optimizer settings and reported with the same metrics.
    Returns the report on the test mask and the predicted test labels."""
    labels = np.asarray(labels)
    train_mask = np.asarray(train_mask, dtype=bool)
    test_mask = np.asarray(test_mask, dtype=bool)
    X = np.asarray(features, dtype=np.float64)
    if len({int(l) for l in labels[train_mask]}) < 2:
        warnings.warn("baseline training labels are all one class", stacklevel=2)
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 2]))
    W = rng.standard_normal((X.shape[1], N_CLASSES)) * np.sqrt(2.0 / X.shape[1])
    b = np.zeros(N_CLASSES)
    mW = np.zeros_like(W)
    vW = np.zeros_like(W)
    mb = np.zeros_like(b)
    vb = np.zeros_like(b)
    rows = np.where(train_mask)[0]
    lab = labels[rows]
    Xtr = X[rows]
    for t in range(1, config.epochs + 1):
        logits = Xtr @ W + b
        log_probs = _log_softmax(logits)
        step_loss = float(-log_probs[np.arange(len(rows)), lab].mean())
        if not np.isfinite(step_loss):
            raise DivergenceError(f"non-finite baseline loss at step {t}")
        probs = np.exp(log_probs)
        dlogits = probs.copy()
        dlogits[np.arange(len(rows)), lab] -= 1.0
        dlogits /= len(rows)
        gW = Xtr.T @ dlogits
        gb = dlogits.sum(axis=0)
        mW = config.beta1 * mW + (1 - config.beta1) * gW
        vW = config.beta2 * vW + (1 - config.beta2) * gW * gW
        mb = config.beta1 * mb + (1 - config.beta1) * gb
        vb = config.beta2 * vb + (1 - config.beta2) * gb * gb
        W -= config.learning_rate * (mW / (1 - config.beta1 ** t)) / (
            np.sqrt(vW / (1 - config.beta2 ** t)) + config.eps
        )
        b -= config.learning_rate * (mb / (1 - config.beta1 ** t)) / (
            np.sqrt(vb / (1 - config.beta2 ** t)) + config.eps
        )
    test_rows = np.where(test_mask)[0]
    pred = np.argmax(X[test_rows] @ W + b, axis=1)
    conf = metrics_mod.confusion(pred.tolist(), labels[test_rows].tolist())
    return metrics_mod.metrics(conf), pred


def save_checkpoint(
    path: str, params: GcnParams, config: TrainConfig, history: list[float]
) -> None:
    """Text checkpoint: shapes and config header, row-major matrices at 17
    significant digits, loss history appended."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"gcn-checkpoint dim_in={params.dim_in} hidden={params.hidden} "
            f"classes={N_CLASSES}\n"
        )
        fh.write(
            f"config seed={config.seed} lr={config.learning_rate:.17g} "
            f"epochs={config.epochs} dropout_p={config.dropout_p:.17g} "
            f"single_dropout={int(config.single_dropout)}\n"
        )
        for name, tensor in params.tensors():
            mat = np.atleast_2d(tensor)
            fh.write(f"tensor {name} {tensor.ndim} {' '.join(map(str, tensor.shape))}\n")
            for row in mat:
                fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")
        fh.write(f"loss_history {len(history)}\n")
        if history:
            fh.write(" ".join(f"{x:.17g}" for x in history) + "\n")


def load_checkpoint(path: str) -> tuple[GcnParams, TrainConfig, list[float]]:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("gcn-checkpoint "):
        raise DataError(f"{path}: not a checkpoint file")
    head = dict(kv.split("=", 1) for kv in lines[0].split()[1:])
    conf_kv = dict(kv.split("=", 1) for kv in lines[1].split()[1:])
    config = TrainConfig(
        learning_rate=float(conf_kv["lr"]),
        epochs=int(conf_kv["epochs"]),
        dropout_p=float(conf_kv["dropout_p"]),
        seed=int(conf_kv["seed"]),
        single_dropout=bool(int(conf_kv["single_dropout"])),
        hidden=int(head["hidden"]),
    )
    tensors: dict[str, np.ndarray] = {}
    i = 2
    while i < len(lines) and lines[i].startswith("tensor "):
        _, name, ndim, *shape = lines[i].split()
        shape = [int(s) for s in shape]
        n_rows = 1 if int(ndim) == 1 else shape[0]
        rows = []
        for r in range(n_rows):
            rows.append([float(x) for x in lines[i + 1 + r].split()])
        arr = np.asarray(rows)
        tensors[name] = arr.reshape(shape)
        i += 1 + n_rows
    if not lines[i].startswith("loss_history "):
        raise DataError(f"{path}: missing loss history")
    n_hist = int(lines[i].split()[1])
    history = [float(x) for x in lines[i + 1].split()] if n_hist else []
    missing = set(GcnParams.NAMES) - set(tensors)
    if missing:
        raise DataError(f"{path}: checkpoint missing tensors {sorted(missing)}")
    return GcnParams(**tensors), config, history
