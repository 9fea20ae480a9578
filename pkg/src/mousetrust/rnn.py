"""From-scratch GRU and LSTM binary sequence classifiers.

Single recurrent layer, sigmoid read-out on the final hidden state, mean
binary cross-entropy trained by full backpropagation through time with an
adaptive-moment optimizer and global-norm gradient clipping. Everything is
float64 numpy; no autograd.

Two forward paths exist on purpose and must not be merged:

* training and gradient checking run a batched forward (one matmul per gate
  per step over the whole batch), which is what the analytic backward pass
  mirrors;
* inference runs `score_window`, a sequential matrix-vector forward over a
  single window. Every consumer that compares scores (batch evaluation and
  the streaming engine) calls this one function, so equal inputs give
  bit-equal scores without relying on BLAS dispatch being shape-stable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DataError, NumericError
from .kinematics import FEATURE_WIDTH, NormStats
from .windowing import LabeledSet

RNN_FORMAT = "mousetrust-rnn"
RNN_FORMAT_VERSION = 1

GRU_KEYS = ("W_z", "U_z", "b_z", "W_r", "U_r", "b_r", "W_h", "U_h", "b_h", "w_out", "b_out")
LSTM_KEYS = (
    "W_i", "U_i", "b_i",
    "W_f", "U_f", "b_f",
    "W_o", "U_o", "b_o",
    "W_g", "U_g", "b_g",
    "w_out", "b_out",
)

CLIP_NORM = 5.0
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class RnnConfig:
    cell: str = "gru"  # "gru" or "lstm"
    input_width: int = FEATURE_WIDTH
    hidden: int = 32
    layers: int = 1
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0
    class_weighting: str = "none"  # "none" or "balanced"

    def __post_init__(self):
        if self.cell not in ("gru", "lstm"):
            raise DataError("cell must be 'gru' or 'lstm'")
        if self.hidden < 1:
            raise DataError("hidden units must be >= 1")
        if self.layers != 1:
            raise DataError("only a single recurrent layer is supported")
        if self.learning_rate < 0:
            raise DataError("learning rate must be >= 0")
        if self.class_weighting not in ("none", "balanced"):
            raise DataError("class_weighting must be 'none' or 'balanced'")


def param_keys(cell: str) -> tuple[str, ...]:
    return GRU_KEYS if cell == "gru" else LSTM_KEYS


def param_shapes(cell: str, hidden: int, width: int) -> dict[str, tuple[int, ...]]:
    shapes: dict[str, tuple[int, ...]] = {}
    for key in param_keys(cell):
        if key == "w_out":
            shapes[key] = (hidden,)
        elif key == "b_out":
            shapes[key] = (1,)
        elif key.startswith("W_"):
            shapes[key] = (hidden, width)
        elif key.startswith("U_"):
            shapes[key] = (hidden, hidden)
        else:
            shapes[key] = (hidden,)
    return shapes


def init_params(config: RnnConfig) -> dict[str, np.ndarray]:
    """Uniform(-r, r) with r = 1/sqrt(hidden), drawn in fixed key order."""
    rng = np.random.default_rng(np.random.SeedSequence((config.seed,)))
    r = 1.0 / math.sqrt(config.hidden)
    params = {}
    for key, shape in param_shapes(config.cell, config.hidden, config.input_width).items():
        params[key] = rng.uniform(-r, r, size=shape)
    return params


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # piecewise form never exponentiates a positive argument
    out = np.empty_like(x)
    pos = x >= 0
    neg = ~pos
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[neg])
    out[neg] = ex / (1.0 + ex)
    return out


def _sigmoid_scalar(a: float) -> float:
    if a >= 0:
        return 1.0 / (1.0 + math.exp(-a))
    ea = math.exp(a)
    return ea / (1.0 + ea)


def _forward_batch(cell: str, params: dict[str, np.ndarray], X: np.ndarray) -> dict:
    """Batched forward over (B, T, width); caches everything for backward."""
    B, T, _ = X.shape
    hidden = params["w_out"].shape[0]
    h = np.zeros((B, hidden))
    cache: dict = {"h": [h], "X": X}
    if cell == "gru":
        zs, rs, hhs = [], [], []
        for t in range(T):
            x = X[:, t, :]
            z = _sigmoid(x @ params["W_z"].T + h @ params["U_z"].T + params["b_z"])
            r = _sigmoid(x @ params["W_r"].T + h @ params["U_r"].T + params["b_r"])
            hh = np.tanh(x @ params["W_h"].T + (r * h) @ params["U_h"].T + params["b_h"])
            h = (1.0 - z) * h + z * hh
            zs.append(z)
            rs.append(r)
            hhs.append(hh)
            cache["h"].append(h)
        cache.update(z=zs, r=rs, hh=hhs)
    else:
        c = np.zeros((B, hidden))
        i_s, f_s, o_s, g_s, cs, tcs = [], [], [], [], [c], []
        for t in range(T):
            x = X[:, t, :]
            i = _sigmoid(x @ params["W_i"].T + h @ params["U_i"].T + params["b_i"])
            f = _sigmoid(x @ params["W_f"].T + h @ params["U_f"].T + params["b_f"])
            o = _sigmoid(x @ params["W_o"].T + h @ params["U_o"].T + params["b_o"])
            g = np.tanh(x @ params["W_g"].T + h @ params["U_g"].T + params["b_g"])
            c = f * cs[-1] + i * g
            tc = np.tanh(c)
            h = o * tc
            i_s.append(i)
            f_s.append(f)
            o_s.append(o)
            g_s.append(g)
            cs.append(c)
            tcs.append(tc)
            cache["h"].append(h)
        cache.update(i=i_s, f=f_s, o=o_s, g=g_s, c=cs, tc=tcs)
    cache["logits"] = cache["h"][-1] @ params["w_out"] + params["b_out"][0]
    return cache


def _loss_from_logits(logits: np.ndarray, y: np.ndarray, w_pos: float) -> float:
    """Mean BCE via softplus, stable for any logit magnitude."""
    per = w_pos * y * np.logaddexp(0.0, -logits) + (1.0 - y) * np.logaddexp(0.0, logits)
    return float(per.mean())


def _backward_batch(
    cell: str, params: dict[str, np.ndarray], cache: dict, y: np.ndarray, w_pos: float
) -> dict[str, np.ndarray]:
    X = cache["X"]
    B, T, _ = X.shape
    p = _sigmoid(cache["logits"])
    dlogit = (w_pos * y * (p - 1.0) + (1.0 - y) * p) / B

    grads = {k: np.zeros_like(v) for k, v in params.items()}
    h_final = cache["h"][-1]
    grads["w_out"] = dlogit @ h_final
    grads["b_out"] = np.array([dlogit.sum()])
    dh = dlogit[:, None] * params["w_out"][None, :]

    if cell == "gru":
        for t in range(T - 1, -1, -1):
            x = X[:, t, :]
            h_prev = cache["h"][t]
            z, r, hh = cache["z"][t], cache["r"][t], cache["hh"][t]
            dz = dh * (hh - h_prev)
            dhh = dh * z
            dh_prev = dh * (1.0 - z)
            dpre_h = dhh * (1.0 - hh * hh)
            grads["W_h"] += dpre_h.T @ x
            grads["U_h"] += dpre_h.T @ (r * h_prev)
            grads["b_h"] += dpre_h.sum(axis=0)
            drh = dpre_h @ params["U_h"]
            dr = drh * h_prev
            dh_prev = dh_prev + drh * r
            dpre_r = dr * r * (1.0 - r)
            grads["W_r"] += dpre_r.T @ x
            grads["U_r"] += dpre_r.T @ h_prev
            grads["b_r"] += dpre_r.sum(axis=0)
            dh_prev = dh_prev + dpre_r @ params["U_r"]
            dpre_z = dz * z * (1.0 - z)
            grads["W_z"] += dpre_z.T @ x
            grads["U_z"] += dpre_z.T @ h_prev
            grads["b_z"] += dpre_z.sum(axis=0)
            dh_prev = dh_prev + dpre_z @ params["U_z"]
            dh = dh_prev
    else:
        dc = np.zeros_like(dh)
        for t in range(T - 1, -1, -1):
            x = X[:, t, :]
            h_prev = cache["h"][t]
            c_prev = cache["c"][t]
            i, f, o, g = cache["i"][t], cache["f"][t], cache["o"][t], cache["g"][t]
            tc = cache["tc"][t]
            do = dh * tc
            dc = dc + dh * o * (1.0 - tc * tc)
            di = dc * g
            dg = dc * i
            df = dc * c_prev
            dc_next = dc * f
            dpre_i = di * i * (1.0 - i)
            dpre_f = df * f * (1.0 - f)
            dpre_o = do * o * (1.0 - o)
            dpre_g = dg * (1.0 - g * g)
            dh_prev = np.zeros_like(dh)
            for name, dpre in (("i", dpre_i), ("f", dpre_f), ("o", dpre_o), ("g", dpre_g)):
                grads[f"W_{name}"] += dpre.T @ x
                grads[f"U_{name}"] += dpre.T @ h_prev
                grads[f"b_{name}"] += dpre.sum(axis=0)
                dh_prev = dh_prev + dpre @ params[f"U_{name}"]
            dh = dh_prev
            dc = dc_next
    return grads


def _clip_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> None:
    total = 0.0
    for g in grads.values():
        total += float(np.sum(g * g))
    norm = math.sqrt(total)
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale


@dataclass(frozen=True)
class RnnModel:
    config: RnnConfig
    params: dict[str, np.ndarray]
    loss_history: tuple[float, ...]
    norm_stats: Optional[NormStats] = None
    window_length: Optional[int] = None

    def __post_init__(self):
        for key, arr in self.params.items():
            if not np.isfinite(arr).all():
                raise NumericError(f"non-finite parameter tensor {key}")


def labeled_to_tensor(labeled: LabeledSet) -> tuple[np.ndarray, np.ndarray]:
    """Stack windows into (n, T, 9) and labels into (n,) float64."""
    X = np.stack([w.rows for w in labeled.windows]).astype(np.float64)
    return X, labeled.labels.astype(np.float64)


def positive_weight(y: np.ndarray, mode: str) -> float:
    if mode == "none":
        return 1.0
    n_pos = float(np.sum(y == 1))
    n_neg = float(np.sum(y == 0))
    return n_neg / n_pos


def train_rnn(
    config: RnnConfig,
    X: np.ndarray,
    y: np.ndarray,
    norm_stats: Optional[NormStats] = None,
) -> RnnModel:
    """Train on normalized window tensors; deterministic for a fixed seed.

    loss_history[0] is the full-set loss before any update; each later entry
    is the sample-weighted mean of that epoch's batch losses.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 3 or X.shape[0] != y.shape[0]:
        raise DataError("need (n, T, width) windows aligned with n labels")
    if X.shape[2] != config.input_width:
        raise DataError(f"window width {X.shape[2]} != configured input width {config.input_width}")
    if X.shape[0] < 2 or len(np.unique(y)) < 2:
        raise DataError("training needs at least two windows covering both classes")

    n = X.shape[0]
    w_pos = positive_weight(y, config.class_weighting)
    rng = np.random.default_rng(np.random.SeedSequence((config.seed,)))
    r = 1.0 / math.sqrt(config.hidden)
    params = {}
    for key, shape in param_shapes(config.cell, config.hidden, config.input_width).items():
        params[key] = rng.uniform(-r, r, size=shape)

    history = [_loss_from_logits(_forward_batch(config.cell, params, X)["logits"], y, w_pos)]
    m = {k: np.zeros_like(v) for k, v in params.items()}
    v = {k: np.zeros_like(p) for k, p in params.items()}
    step = 0
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            Xb, yb = X[batch], y[batch]
            cache = _forward_batch(config.cell, params, Xb)
            loss = _loss_from_logits(cache["logits"], yb, w_pos)
            if not math.isfinite(loss):
                raise NumericError(f"non-finite loss at epoch {epoch}, batch start {start}")
            epoch_loss += loss * len(batch)
            grads = _backward_batch(config.cell, params, cache, yb, w_pos)
            _clip_global_norm(grads, CLIP_NORM)
            step += 1
            bc1 = 1.0 - ADAM_BETA1**step
            bc2 = 1.0 - ADAM_BETA2**step
            for key in params:
                g = grads[key]
                m[key] = ADAM_BETA1 * m[key] + (1.0 - ADAM_BETA1) * g
                v[key] = ADAM_BETA2 * v[key] + (1.0 - ADAM_BETA2) * g * g
                params[key] = params[key] - config.learning_rate * (m[key] / bc1) / (
                    np.sqrt(v[key] / bc2) + ADAM_EPS
                )
        history.append(epoch_loss / n)
    return RnnModel(config, params, tuple(history), norm_stats, window_length=X.shape[1])


def score_window(model: RnnModel, rows: np.ndarray) -> float:
    """Intruder probability for one window via the sequential matvec path.

    This is the canonical inference route: batch evaluation and the
    streaming engine both call it, so identical rows always produce the
    identical float.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != model.config.input_width:
        raise DataError(f"window must be (T, {model.config.input_width}), got {rows.shape}")
    p = model.params
    hidden = p["w_out"].shape[0]
    h = np.zeros(hidden)
    if model.config.cell == "gru":
        for x in rows:
            z = _sigmoid(p["W_z"] @ x + p["U_z"] @ h + p["b_z"])
            r = _sigmoid(p["W_r"] @ x + p["U_r"] @ h + p["b_r"])
            hh = np.tanh(p["W_h"] @ x + p["U_h"] @ (r * h) + p["b_h"])
            h = (1.0 - z) * h + z * hh
    else:
        c = np.zeros(hidden)
        for x in rows:
            i = _sigmoid(p["W_i"] @ x + p["U_i"] @ h + p["b_i"])
            f = _sigmoid(p["W_f"] @ x + p["U_f"] @ h + p["b_f"])
            o = _sigmoid(p["W_o"] @ x + p["U_o"] @ h + p["b_o"])
            g = np.tanh(p["W_g"] @ x + p["U_g"] @ h + p["b_g"])
            c = f * c + i * g
            h = o * np.tanh(c)
    return _sigmoid_scalar(float(p["w_out"] @ h + p["b_out"][0]))


def score_windows(model: RnnModel, X: np.ndarray) -> np.ndarray:
    """One score per window, each through the canonical singleton path."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 3:
        raise DataError("expected (n, T, width) window tensor")
    return np.array([score_window(model, X[i]) for i in range(X.shape[0])])


def gradient_check(config: RnnConfig, X: np.ndarray, y: np.ndarray) -> float:
    """Max relative error of analytic vs central-difference gradients.

    Relative error per parameter element is |a - n| / max(|a|, |n|, 1e-8)
    with a finite-difference step of 1e-5 on the batched-loss path.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    params = init_params(config)
    w_pos = positive_weight(y, config.class_weighting) if config.class_weighting != "none" else 1.0

    cache = _forward_batch(config.cell, params, X)
    analytic = _backward_batch(config.cell, params, cache, y, w_pos)

    def loss_at(p: dict[str, np.ndarray]) -> float:
        return _loss_from_logits(_forward_batch(config.cell, p, X)["logits"], y, w_pos)

    step = 1e-5
    worst = 0.0
    for key in param_keys(config.cell):
        flat = params[key].ravel()
        grad_flat = analytic[key].ravel()
        for j in range(flat.shape[0]):
            original = flat[j]
            flat[j] = original + step
            hi = loss_at(params)
            flat[j] = original - step
            lo = loss_at(params)
            flat[j] = original
            numeric = (hi - lo) / (2.0 * step)
            a = float(grad_flat[j])
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, rel)
    return worst


def rnn_to_dict(model: RnnModel) -> dict:
    payload = {
        "format": RNN_FORMAT,
        "version": RNN_FORMAT_VERSION,
        "cell": model.config.cell,
        "input_width": model.config.input_width,
        "hidden": model.config.hidden,
        "epochs": model.config.epochs,
        "batch_size": model.config.batch_size,
        "learning_rate": model.config.learning_rate,
        "seed": model.config.seed,
        "class_weighting": model.config.class_weighting,
        "loss_history": list(model.loss_history),
        "window_length": model.window_length,
        "params": {
            key: {"shape": list(arr.shape), "data": [float(v) for v in arr.ravel()]}
            for key, arr in model.params.items()
        },
        "norm_stats": None
        if model.norm_stats is None
        else {
            "mean": [float(v) for v in model.norm_stats.mean],
            "std": [float(v) for v in model.norm_stats.std],
        },
    }
    return payload


def rnn_from_dict(payload: dict) -> RnnModel:
    if payload.get("format") != RNN_FORMAT:
        raise DataError("not a serialized recurrent model")
    if payload.get("version") != RNN_FORMAT_VERSION:
        raise DataError(f"unsupported model format version {payload.get('version')}")
    config = RnnConfig(
        cell=payload["cell"],
        input_width=int(payload["input_width"]),
        hidden=int(payload["hidden"]),
        epochs=int(payload["epochs"]),
        batch_size=int(payload["batch_size"]),
        learning_rate=float(payload["learning_rate"]),
        seed=int(payload["seed"]),
        class_weighting=payload["class_weighting"],
    )
    params = {}
    for key, entry in payload["params"].items():
        params[key] = np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
    stats = payload.get("norm_stats")
    norm_stats = (
        None
        if stats is None
        else NormStats(np.array(stats["mean"], dtype=np.float64), np.array(stats["std"], dtype=np.float64))
    )
    return RnnModel(
        config=config,
        params=params,
        loss_history=tuple(payload["loss_history"]),
        norm_stats=norm_stats,
        window_length=payload.get("window_length"),
    )


def save_rnn_json(path, model: RnnModel) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rnn_to_dict(model), fh)


def load_rnn_json(path) -> RnnModel:
    with open(path, "r", encoding="utf-8") as fh:
        return rnn_from_dict(json.load(fh))
