"""Minimal dense neural-network kernel with reverse-mode gradients.

Tensors wrap float64 numpy arrays and record a tape of the fixed op set
below (linear algebra, ReLU, softmax, cross-entropy, multi-head attention,
dropout). Single-threaded and deterministic given seeds; no GPU, no
convolutions, nothing beyond the ops the classifier needs.
"""

from __future__ import annotations

import json

import numpy as np


class Tensor:
    """A numpy array plus accumulated gradient and backward closure."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, parents=(), backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad) or any(p.requires_grad for p in parents)
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self, seed=None) -> None:
        """Reverse-mode accumulation from this tensor (default seed: ones)."""
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited or not node.requires_grad:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))
        self._accumulate(np.ones_like(self.data) if seed is None
                         else np.broadcast_to(seed, self.data.shape).astype(np.float64))
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)


def constant(data) -> Tensor:
    return Tensor(data, requires_grad=False)


# ---------------------------------------------------------------------------
# Ops. Each returns a new Tensor whose backward routes into its parents.
# ---------------------------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """2-D or batched 3-D matrix product (no implicit broadcasting)."""
    out_data = a.data @ b.data

    def bwd(g):
        if a.requires_grad:
            a._accumulate(g @ np.swapaxes(b.data, -1, -2))
        if b.requires_grad:
            b._accumulate(np.swapaxes(a.data, -1, -2) @ g)

    return Tensor(out_data, parents=(a, b), backward=bwd)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise add; b may broadcast as a trailing-axis bias."""
    out_data = a.data + b.data

    def reduce_to(g, shape):
        extra = g.ndim - len(shape)
        if extra:
            g = g.sum(axis=tuple(range(extra)))
        axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
        if axes:
            g = g.sum(axis=axes, keepdims=True)
        return g

    def bwd(g):
        if a.requires_grad:
            a._accumulate(reduce_to(g, a.data.shape))
        if b.requires_grad:
            b._accumulate(reduce_to(g, b.data.shape))

    return Tensor(out_data, parents=(a, b), backward=bwd)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product with broadcasting (used for masks and weights)."""
    out_data = a.data * b.data

    def reduce_to(g, shape):
        extra = g.ndim - len(shape)
        if extra:
            g = g.sum(axis=tuple(range(extra)))
        axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
        if axes:
            g = g.sum(axis=axes, keepdims=True)
        return g

    def bwd(g):
        if a.requires_grad:
            a._accumulate(reduce_to(g * b.data, a.data.shape))
        if b.requires_grad:
            b._accumulate(reduce_to(g * a.data, b.data.shape))

    return Tensor(out_data, parents=(a, b), backward=bwd)


def scale(a: Tensor, s: float) -> Tensor:
    def bwd(g):
        if a.requires_grad:
            a._accumulate(g * s)

    return Tensor(a.data * s, parents=(a,), backward=bwd)


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """y = x @ w (+ b)."""
    if x.data.shape[-1] != w.data.shape[0]:
        raise ValueError(f"linear shape mismatch: x {x.data.shape} vs w {w.data.shape}")
    y = matmul(x, w)
    return add(y, b) if b is not None else y


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0

    def bwd(g):
        if x.requires_grad:
            x._accumulate(g * mask)

    return Tensor(x.data * mask, parents=(x,), backward=bwd)


def softmax(x: Tensor) -> Tensor:
    """Softmax over the last axis, stabilized by max subtraction."""
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=-1, keepdims=True)

    def bwd(g):
        if x.requires_grad:
            dot = (g * out_data).sum(axis=-1, keepdims=True)
            x._accumulate(out_data * (g - dot))

    return Tensor(out_data, parents=(x,), backward=bwd)


def cross_entropy(logits: Tensor, classes) -> Tensor:
    """Mean negative log-likelihood of integer classes under softmax(logits)."""
    idx = np.atleast_1d(np.asarray(classes, dtype=np.int64))
    n, c = logits.data.shape
    if idx.shape != (n,):
        raise ValueError(f"expected {n} class indices, got shape {idx.shape}")
    if (idx < 0).any() or (idx >= c).any():
        raise ValueError(f"class index out of range [0, {c})")
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - logsumexp
    loss = -logp[np.arange(n), idx].mean()

    def bwd(g):
        if logits.requires_grad:
            p = np.exp(logp)
            p[np.arange(n), idx] -= 1.0
            logits._accumulate(float(g) * p / n)

    return Tensor(loss, parents=(logits,), backward=bwd)


def reshape(x: Tensor, shape) -> Tensor:
    orig = x.data.shape

    def bwd(g):
        if x.requires_grad:
            x._accumulate(g.reshape(orig))

    return Tensor(x.data.reshape(shape), parents=(x,), backward=bwd)


def transpose(x: Tensor, axes) -> Tensor:
    inverse = np.argsort(axes)

    def bwd(g):
        if x.requires_grad:
            x._accumulate(g.transpose(inverse))

    return Tensor(x.data.transpose(axes), parents=(x,), backward=bwd)


def concat(tensors, axis: int = -1) -> Tensor:
    tensors = list(tensors)
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def bwd(g):
        parts = np.split(g, splits, axis=axis)
        for t, part in zip(tensors, parts):
            if t.requires_grad:
                t._accumulate(part)

    return Tensor(np.concatenate([t.data for t in tensors], axis=axis),
                  parents=tuple(tensors), backward=bwd)


def dropout(x: Tensor, rate: float, training: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout: identity in eval mode or at rate 0."""
    if not training or rate == 0.0:
        return x
    if not (0.0 <= rate < 1.0):
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if rng is None:
        raise ValueError("training-mode dropout needs an rng for determinism")
    mask = (rng.random(x.data.shape) >= rate) / (1.0 - rate)

    def bwd(g):
        if x.requires_grad:
            x._accumulate(g * mask)

    return Tensor(x.data * mask, parents=(x,), backward=bwd)


def multihead_attention(query: Tensor, keys: Tensor, values: Tensor,
                        wq: Tensor, bq: Tensor, wk: Tensor, bk: Tensor,
                        wv: Tensor, bv: Tensor, wo: Tensor, bo: Tensor,
                        heads: int) -> Tensor:
    """Scaled dot-product attention with per-head softmax over the key axis.

    query: (1, D); keys/values: (M, D). Projections wq/wk/wv/wo are (D, D).
    Output is the concatenated heads passed through the output projection.
    """
    d = query.data.shape[-1]
    if d % heads != 0:
        raise ValueError(f"model dim {d} not divisible by {heads} heads")
    m = keys.data.shape[0]
    if m < 1:
        raise ValueError("attention needs at least one key")
    dh = d // heads

    q = linear(query, wq, bq)                       # (1, D)
    k = linear(keys, wk, bk)                        # (M, D)
    v = linear(values, wv, bv)                      # (M, D)
    qh = transpose(reshape(q, (1, heads, dh)), (1, 0, 2))   # (H, 1, dh)
    kh = transpose(reshape(k, (m, heads, dh)), (1, 0, 2))   # (H, M, dh)
    vh = transpose(reshape(v, (m, heads, dh)), (1, 0, 2))   # (H, M, dh)
    scores = scale(matmul(qh, transpose(kh, (0, 2, 1))), 1.0 / np.sqrt(dh))  # (H, 1, M)
    attn = softmax(scores)
    ctx = matmul(attn, vh)                          # (H, 1, dh)
    merged = reshape(transpose(ctx, (1, 0, 2)), (1, d))
    return linear(merged, wo, bo)


# ---------------------------------------------------------------------------
# Parameters and optimizer
# ---------------------------------------------------------------------------

def kaiming_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


class ParamStore:
    """Named trainable tensors plus AdamW moment buffers."""

    def __init__(self):
        self.params: dict[str, Tensor] = {}
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        self.step_count = 0

    def add(self, name: str, data: np.ndarray) -> Tensor:
        if name in self.params:
            raise ValueError(f"duplicate parameter {name!r}")
        t = Tensor(np.asarray(data, dtype=np.float64), requires_grad=True)
        self.params[name] = t
        self._m[name] = np.zeros_like(t.data)
        self._v[name] = np.zeros_like(t.data)
        return t

    def add_linear(self, name: str, fan_in: int, fan_out: int,
                   rng: np.random.Generator, bias: bool = True):
        w = self.add(f"{name}.w", kaiming_uniform(rng, fan_in, fan_out))
        b = self.add(f"{name}.b", np.zeros(fan_out)) if bias else None
        return w, b

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def zero_grad(self) -> None:
        for t in self.params.values():
            t.grad = None

    def num_parameters(self, prefixes=None) -> int:
        total = 0
        for name, t in self.params.items():
            if prefixes is None or any(name.startswith(p) for p in prefixes):
                total += t.data.size
        return total

    def adamw_step(self, lr: float, weight_decay: float = 0.0,
                   beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
        """Bias-corrected AdamW with decoupled decay.

        p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p).
        Parameters without a gradient this step are left untouched.
        """
        self.step_count += 1
        t = self.step_count
        c1 = 1.0 - beta1 ** t
        c2 = 1.0 - beta2 ** t
        for name, p in self.params.items():
            if p.grad is None:
                continue
            g = p.grad
            m = self._m[name]
            v = self._v[name]
            m *= beta1
            m += (1.0 - beta1) * g
            v *= beta2
            v += (1.0 - beta2) * g * g
            update = (m / c1) / (np.sqrt(v / c2) + eps)
            p.data -= lr * (update + weight_decay * p.data)

    def state_arrays(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {"__step__": np.array([self.step_count])}
        for name, t in self.params.items():
            out[f"p::{name}"] = t.data
            out[f"m::{name}"] = self._m[name]
            out[f"v::{name}"] = self._v[name]
        return out

    def load_state_arrays(self, arrays) -> None:
        self.step_count = int(arrays["__step__"][0])
        for name, t in self.params.items():
            t.data = np.array(arrays[f"p::{name}"], dtype=np.float64)
            self._m[name] = np.array(arrays[f"m::{name}"], dtype=np.float64)
            self._v[name] = np.array(arrays[f"v::{name}"], dtype=np.float64)

    def clone_param_data(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.params.items()}

    def set_param_data(self, snapshot: dict[str, np.ndarray]) -> None:
        for name, data in snapshot.items():
            self.params[name].data = data.copy()


CHECKPOINT_VERSION = 1


def save_checkpoint(path, store: ParamStore, meta: dict) -> None:
    """Versioned npz of parameters + optimizer state; exact round-trip."""
    header = dict(meta)
    header["checkpoint_version"] = CHECKPOINT_VERSION
    arrays = store.state_arrays()
    np.savez(path, __meta__=np.frombuffer(json.dumps(header).encode(), dtype=np.uint8),
             **arrays)


def load_checkpoint(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Returns (meta dict, raw arrays) — the caller rebuilds its ParamStore."""
    with np.load(path) as z:
        arrays = {k: z[k] for k in z.files}
    meta = json.loads(bytes(arrays.pop("__meta__")).decode())
    if meta.get("checkpoint_version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {meta.get('checkpoint_version')}")
    return meta, arrays
