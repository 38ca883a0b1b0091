"""Training loop, evaluation with bootstrap CIs, and the ablation sweep."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .classifier import (
    ABLATION_CONFIGS,
    AblationConfig,
    GraphObjectClassifier,
    ModelDims,
    prepare_sample,
)
from .dataset import Sample, dataset_vocabularies

logger = logging.getLogger(__name__)

N_BOOTSTRAP = 1000


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-4
    weight_decay: float = 1e-4
    batch_size: int = 512          # scaled down when the dataset is smaller
    epochs: int = 20
    patience: int = 10             # early stop on validation macro-F1
    seed: int = 0
    val_fraction: float = 0.1

    def __post_init__(self):
        if min(self.lr, self.batch_size, self.epochs) <= 0 or self.patience < 0:
            raise ValueError("train config values must be positive")


@dataclass
class EvalReport:
    top1_accuracy: float
    macro_f1: float
    ci_halfwidth: float
    n_samples: int
    n_bootstrap: int = N_BOOTSTRAP
    config_name: str = ""

    def formatted(self) -> str:
        """Accuracy as percent in the usual "73.43 ± 0.32" form."""
        return f"{self.top1_accuracy * 100:.2f} ± {self.ci_halfwidth * 100:.2f}"

    def to_dict(self) -> dict:
        return {
            "config": self.config_name,
            "top1_accuracy": self.top1_accuracy,
            "macro_f1": self.macro_f1,
            "ci_halfwidth": self.ci_halfwidth,
            "n_samples": self.n_samples,
            "n_bootstrap": self.n_bootstrap,
            "formatted": self.formatted(),
        }


@dataclass
class TrainResult:
    model: GraphObjectClassifier
    history: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    best_val_f1: float = 0.0


def macro_f1(truth: np.ndarray, predicted: np.ndarray) -> float:
    """Unweighted mean F1 over classes present in the truth labels."""
    scores = []
    for c in np.unique(truth):
        tp = int(((predicted == c) & (truth == c)).sum())
        fp = int(((predicted == c) & (truth != c)).sum())
        fn = int(((predicted != c) & (truth == c)).sum())
        denom = 2 * tp + fp + fn
        scores.append(2 * tp / denom if denom else 0.0)
    return float(np.mean(scores)) if scores else 0.0


def bootstrap_halfwidth(correct: np.ndarray, n_bootstrap: int = N_BOOTSTRAP,
                        seed: int = 0) -> float:
    """Std of accuracy over seeded resamples (with replacement, size n).

    The resampling unit is the evaluation instance (one object each).
    """
    n = len(correct)
    if n == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(n_bootstrap, n))
    accs = correct[idx].mean(axis=1)
    return float(accs.std(ddof=1))


def split_samples(samples, val_fraction: float, seed: int):
    """Deterministic shuffled train/validation split."""
    order = np.random.default_rng(seed).permutation(len(samples))
    n_val = max(1, int(round(len(samples) * val_fraction))) if len(samples) > 1 else 0
    val_idx = set(order[:n_val].tolist())
    train = [samples[i] for i in order[n_val:]]
    val = [samples[i] for i in order[:n_val]]
    return train, val


def _packs(model: GraphObjectClassifier, samples) -> list:
    return [prepare_sample(s.graph, s.target_id, model.class_to_idx,
                           model.material_to_idx, true_label=s.label)
            for s in samples]


def _predict_packs(model: GraphObjectClassifier, packs) -> np.ndarray:
    preds = np.empty(len(packs), dtype=np.int64)
    for i, pack in enumerate(packs):
        preds[i] = int(np.argmax(model.forward_pack(pack).data))
    return preds


def train(samples: list[Sample], config: AblationConfig | str,
          train_cfg: TrainConfig | None = None, dims: ModelDims | None = None,
          val_samples: list[Sample] | None = None,
          class_vocab=None, material_vocab=None) -> TrainResult:
    """Train one classifier; returns the best-validation-macro-F1 snapshot.

    The train/val split is derived from the seed when no explicit validation
    set is given. Gradients are averaged over each batch; one optimizer step
    per batch; everything single-threaded and deterministic for a fixed seed.
    """
    if not samples:
        raise ValueError("empty training dataset")
    cfg = ABLATION_CONFIGS[config] if isinstance(config, str) else config
    tc = train_cfg or TrainConfig()
    if class_vocab is None or material_vocab is None:
        cv, mv = dataset_vocabularies(list(samples) + list(val_samples or []))
        class_vocab = class_vocab or cv
        material_vocab = material_vocab or mv
    model = GraphObjectClassifier(class_vocab, material_vocab, cfg, dims, seed=tc.seed)

    if val_samples is None:
        train_samples, val_samples = split_samples(samples, tc.val_fraction, tc.seed)
    else:
        train_samples = list(samples)
    train_packs = _packs(model, train_samples)
    val_packs = _packs(model, val_samples)
    val_truth = np.array([p.target_index for p in val_packs], dtype=np.int64)

    rng = np.random.default_rng(tc.seed + 1)
    batch_size = min(tc.batch_size, len(train_packs))
    result = TrainResult(model=model)
    best_snapshot = model.store.clone_param_data()
    epochs_since_best = 0

    for epoch in range(tc.epochs):
        t0 = time.monotonic()
        order = rng.permutation(len(train_packs))
        losses = []
        hits = 0
        for start in range(0, len(order), batch_size):
            batch = order[start:start + batch_size]
            model.store.zero_grad()
            inv = 1.0 / len(batch)
            for i in batch:
                pack = train_packs[i]
                logits = model.forward_pack(pack, training=True, rng=rng)
                loss = nn.cross_entropy(logits, [pack.target_index])
                loss.backward(seed=inv)
                losses.append(float(loss.data))
                hits += int(np.argmax(logits.data) == pack.target_index)
            model.store.adamw_step(lr=tc.lr, weight_decay=tc.weight_decay)
        val_pred = _predict_packs(model, val_packs)
        val_f1 = macro_f1(val_truth, val_pred) if len(val_packs) else 0.0
        val_acc = float((val_pred == val_truth).mean()) if len(val_packs) else 0.0
        entry = {
            "epoch": epoch,
            "train_loss": float(np.mean(losses)),
            "train_accuracy": hits / len(train_packs),
            "val_accuracy": val_acc,
            "val_macro_f1": val_f1,
            "seconds": time.monotonic() - t0,
        }
        result.history.append(entry)
        logger.info("epoch %d loss %.4f train_acc %.3f val_acc %.3f val_f1 %.3f",
                    epoch, entry["train_loss"], entry["train_accuracy"], val_acc, val_f1)
        if val_f1 > result.best_val_f1 or result.best_epoch < 0:
            result.best_val_f1 = val_f1
            result.best_epoch = epoch
            best_snapshot = model.store.clone_param_data()
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if epochs_since_best >= tc.patience:
                logger.info("early stop at epoch %d (best %d)", epoch, result.best_epoch)
                break
    model.store.set_param_data(best_snapshot)
    return result


def evaluate(samples: list[Sample], model: GraphObjectClassifier,
             bootstrap_seed: int = 0, config_name: str = "") -> EvalReport:
    """Top-1 accuracy, macro-F1, and a bootstrap CI over object instances."""
    if not samples:
        raise ValueError("empty evaluation dataset")
    packs = _packs(model, samples)
    truth = np.array([p.target_index for p in packs], dtype=np.int64)
    pred = _predict_packs(model, packs)
    correct = (pred == truth).astype(np.float64)
    return EvalReport(
        top1_accuracy=float(correct.mean()),
        macro_f1=macro_f1(truth, pred),
        ci_halfwidth=bootstrap_halfwidth(correct, seed=bootstrap_seed),
        n_samples=len(samples),
        config_name=config_name,
    )


def ablation_sweep(samples: list[Sample], config_names=None,
                   train_cfg: TrainConfig | None = None,
                   dims: ModelDims | None = None) -> dict[str, EvalReport]:
    """Train + evaluate every configuration on a shared split and seed."""
    names = list(config_names or ABLATION_CONFIGS)
    tc = train_cfg or TrainConfig()
    train_samples, val_samples = split_samples(samples, tc.val_fraction, tc.seed)
    class_vocab, material_vocab = dataset_vocabularies(samples)
    reports: dict[str, EvalReport] = {}
    for name in names:
        if name not in ABLATION_CONFIGS:
            raise KeyError(f"unknown ablation config {name!r}; "
                           f"valid: {', '.join(ABLATION_CONFIGS)}")
        logger.info("sweep: training %s", name)
        result = train(train_samples, name, tc, dims, val_samples=val_samples,
                       class_vocab=class_vocab, material_vocab=material_vocab)
        reports[name] = evaluate(val_samples, result.model, config_name=name)
    return reports


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

def save_model(path, model: GraphObjectClassifier, extra: dict | None = None) -> None:
    meta = {
        "class_vocab": list(model.class_vocab),
        "material_vocab": list(model.material_vocab),
        "config": vars(model.config) if not hasattr(model.config, "__dataclass_fields__")
        else {k: getattr(model.config, k) for k in model.config.__dataclass_fields__},
        "dims": {k: getattr(model.dims, k) for k in model.dims.__dataclass_fields__},
        "seed": model.seed,
        "active_parameters": model.active_parameter_count(),
    }
    if extra:
        meta["extra"] = extra
    nn.save_checkpoint(path, model.store, meta)


def load_model(path) -> GraphObjectClassifier:
    meta, arrays = nn.load_checkpoint(path)
    model = GraphObjectClassifier(
        class_vocab=meta["class_vocab"],
        material_vocab=meta["material_vocab"],
        config=AblationConfig(**meta["config"]),
        dims=ModelDims(**meta["dims"]),
        seed=meta.get("seed", 0),
    )
    model.store.load_state_arrays(arrays)
    return model
