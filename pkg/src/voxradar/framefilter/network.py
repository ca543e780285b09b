"""Two-stage convolutional classifier (Regular vs Ambiguous) with explicit backprop.

Layout for an ``[B, 1, H, W]`` batch::

    conv3x3(1 -> c1, pad 1) -> ReLU -> pool2x2
    conv3x3(c1 -> c2, pad 1) -> ReLU -> pool2x2
    global pool -> [B, c2] -> fully connected (c2 -> 2)

Every pooling stage uses the model's pooling kind (average or max).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

INPUT_SIZE = 32
PARAM_ORDER = ("conv1_w", "conv1_b", "conv2_w", "conv2_b", "fc_w", "fc_b")


class Pooling(str, enum.Enum):
    AVG = "avg"
    MAX = "max"


class Verdict(enum.IntEnum):
    REGULAR = 0
    AMBIGUOUS = 1


@dataclass
class ClassifierModel:
    params: dict[str, np.ndarray]
    pooling: Pooling = Pooling.MAX
    history: list[tuple[int, float, float]] = field(default_factory=list)

    def __post_init__(self):
        self.pooling = Pooling(self.pooling)
        missing = [k for k in PARAM_ORDER if k not in self.params]
        if missing:
            raise ValueError(f"missing parameters: {missing}")
        if self.params["fc_w"].shape[0] != 2 or self.params["fc_b"].shape != (2,):
            raise ValueError("classifier head must have exactly 2 outputs")

    @property
    def channels(self) -> tuple[int, int]:
        return self.params["conv1_w"].shape[0], self.params["conv2_w"].shape[0]

    def copy(self) -> "ClassifierModel":
        return ClassifierModel({k: v.copy() for k, v in self.params.items()},
                               self.pooling, list(self.history))

    def n_params(self) -> int:
        return sum(v.size for v in self.params.values())

    def check_finite(self) -> None:
        for k, v in self.params.items():
            if not np.all(np.isfinite(v)):
                raise ValueError(f"non-finite values in parameter {k}")


def init_model(pooling: Pooling | str = Pooling.MAX, seed: int = 0,
               channels: tuple[int, int] = (8, 16)) -> ClassifierModel:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation for every tensor."""
    rng = np.random.default_rng(seed)
    c1, c2 = channels
    shapes = {"conv1_w": ((c1, 1, 3, 3), 9), "conv1_b": ((c1,), 9),
              "conv2_w": ((c2, c1, 3, 3), 9 * c1), "conv2_b": ((c2,), 9 * c1),
              "fc_w": ((2, c2), c2), "fc_b": ((2,), c2)}
    params = {}
    for name in PARAM_ORDER:
        shape, fan_in = shapes[name]
        a = 1.0 / math.sqrt(fan_in)
        params[name] = rng.uniform(-a, a, size=shape)
    return ClassifierModel(params, Pooling(pooling))


# -- layers -----------------------------------------------------------------

def _conv_forward(x, w, b):
    bsz, c, h, wd = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    cols = sliding_window_view(xp, (3, 3), axis=(2, 3))          # [B, C, H, W, 3, 3]
    cols = cols.transpose(0, 2, 3, 1, 4, 5).reshape(bsz * h * wd, c * 9)
    out = cols @ w.reshape(w.shape[0], -1).T + b
    return out.reshape(bsz, h, wd, -1).transpose(0, 3, 1, 2), cols


def _conv_backward(dout, cols, x_shape, w):
    bsz, c, h, wd = x_shape
    cout = w.shape[0]
    d2 = dout.transpose(0, 2, 3, 1).reshape(-1, cout)
    dw = (d2.T @ cols).reshape(w.shape)
    db = d2.sum(axis=0)
    dcols = (d2 @ w.reshape(cout, -1)).reshape(bsz, h, wd, c, 3, 3)
    dxp = np.zeros((bsz, c, h + 2, wd + 2))
    for i in range(3):
        for j in range(3):
            dxp[:, :, i:i + h, j:j + wd] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    return dxp[:, :, 1:-1, 1:-1], dw, db


def _pool_forward(x, kind):
    bsz, c, h, w = x.shape
    blocks = x.reshape(bsz, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5)
    blocks = blocks.reshape(bsz, c, h // 2, w // 2, 4)
    if kind is Pooling.AVG:
        return blocks.mean(axis=-1), None
    arg = blocks.argmax(axis=-1)
    return np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0], arg


def _pool_backward(dout, arg, x_shape, kind):
    bsz, c, h, w = x_shape
    if kind is Pooling.AVG:
        dblocks = np.repeat(dout[..., None] / 4.0, 4, axis=-1)
    else:
        dblocks = np.zeros(dout.shape + (4,))
        np.put_along_axis(dblocks, arg[..., None], dout[..., None], axis=-1)
    dblocks = dblocks.reshape(bsz, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    return dblocks.reshape(x_shape)


def _global_pool_forward(x, kind):
    flat = x.reshape(x.shape[0], x.shape[1], -1)
    if kind is Pooling.AVG:
        return flat.mean(axis=-1), None
    arg = flat.argmax(axis=-1)
    return np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0], arg


def _global_pool_backward(dout, arg, x_shape, kind):
    bsz, c = dout.shape
    n = x_shape[2] * x_shape[3]
    if kind is Pooling.AVG:
        dflat = np.repeat(dout[..., None] / n, n, axis=-1)
    else:
        dflat = np.zeros((bsz, c, n))
        np.put_along_axis(dflat, arg[..., None], dout[..., None], axis=-1)
    return dflat.reshape(x_shape)


def _as_batch(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        x = x[None, None]
    elif x.ndim == 3:
        x = x[:, None]
    h, w = x.shape[-2:]
    if h % 4 or w % 4:
        raise ValueError(f"input size {h}x{w} must be divisible by 4")
    return x


def forward_batch(model: ClassifierModel, x, *, keep_cache: bool = False):
    """Logits ``[B, 2]`` for a batch of ``[H, W]`` images (or ``[B, 1, H, W]``)."""
    model.check_finite()
    p, kind = model.params, model.pooling
    x = _as_batch(x)
    z1, cols1 = _conv_forward(x, p["conv1_w"], p["conv1_b"])
    a1 = np.maximum(z1, 0.0)
    q1, arg1 = _pool_forward(a1, kind)
    z2, cols2 = _conv_forward(q1, p["conv2_w"], p["conv2_b"])
    a2 = np.maximum(z2, 0.0)
    q2, arg2 = _pool_forward(a2, kind)
    feat, argg = _global_pool_forward(q2, kind)
    logits = feat @ p["fc_w"].T + p["fc_b"]
    if not keep_cache:
        return logits
    cache = dict(x=x, z1=z1, cols1=cols1, a1=a1, arg1=arg1, q1=q1, z2=z2, cols2=cols2,
                 a2=a2, arg2=arg2, q2=q2, argg=argg, feat=feat)
    return logits, cache


def backward_batch(model: ClassifierModel, dlogits, cache) -> dict[str, np.ndarray]:
    p, kind = model.params, model.pooling
    grads = {"fc_w": dlogits.T @ cache["feat"], "fc_b": dlogits.sum(axis=0)}
    dfeat = dlogits @ p["fc_w"]
    dq2 = _global_pool_backward(dfeat, cache["argg"], cache["q2"].shape, kind)
    da2 = _pool_backward(dq2, cache["arg2"], cache["a2"].shape, kind)
    dz2 = da2 * (cache["z2"] > 0)
    dq1, grads["conv2_w"], grads["conv2_b"] = _conv_backward(dz2, cache["cols2"],
                                                             cache["q1"].shape, p["conv2_w"])
    da1 = _pool_backward(dq1, cache["arg1"], cache["a1"].shape, kind)
    dz1 = da1 * (cache["z1"] > 0)
    _, grads["conv1_w"], grads["conv1_b"] = _conv_backward(dz1, cache["cols1"],
                                                           cache["x"].shape, p["conv1_w"])
    return grads


def forward(model: ClassifierModel, image) -> np.ndarray:
    """Logits (Regular, Ambiguous) for one input image."""
    logits = forward_batch(model, image)[0]
    if not np.all(np.isfinite(logits)):
        raise ValueError("non-finite logits")
    return logits


def cross_entropy(logits, label: int) -> float:
    """-log softmax(logits)[label], evaluated without overflow."""
    x = np.asarray(logits, dtype=float)
    top = int(np.argmax(x))
    rest = np.delete(x, top) - x[top]
    return float((x[top] - x[label]) + np.log1p(np.exp(rest).sum()))


def batch_loss_and_grad(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy over a batch, its gradient w.r.t. the logits, per-sample losses."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1))
    per = lse - shifted[np.arange(len(labels)), labels]
    prob = np.exp(shifted - lse[:, None])
    prob[np.arange(len(labels)), labels] -= 1.0
    return float(per.mean()), prob / len(labels), per


def classify(model: ClassifierModel, image) -> Verdict:
    return verdict_from_logits(forward(model, image))


def verdict_from_logits(logits) -> Verdict:
    """Argmax over (Regular, Ambiguous); a tie counts as Regular."""
    return Verdict.AMBIGUOUS if logits[1] > logits[0] else Verdict.REGULAR
