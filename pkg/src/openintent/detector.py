"""Novelty detection over raw utterance embeddings.

A softmax head is trained over the seen intents plus extra out-of-scope
classes built from the OOD material: mode "one_unseen" pools every OOD row
into a single rejection class, mode "m_unseen" gives each OOD intent its own
class, and mode "seen_only" trains no rejection class at all (only useful
when no OOD rows exist; detection then relies purely on the per-class
thresholds).

Per-class probability thresholds follow the one-sided outlier rule: correct
predictions should pile up near probability 1, so for each seen class the
probabilities of its own training rows are mirrored around 1 (p -> 2 - p)
and the standard deviation about the mean 1 sets the cut

    t_i = max(0.5, 1 - k * sigma_i)

with k = 3 by default. A query is flagged novel when its argmax lands on a
rejection class, or when its probability stays below t_i for every seen
class; otherwise it is assigned the argmax seen intent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, DivergenceError
from .optim import Adam
from .serialize import array_to_b64, b64_to_array

UNSEEN_SENTINEL = "<unseen>"

MODES = ("one_unseen", "m_unseen", "seen_only")


def softmax(z: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max-shift for stability."""
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def ce_loss_and_grad(W: np.ndarray, b: np.ndarray, X: np.ndarray,
                     y: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy of softmax(X W^T + b) and its W, b gradients."""
    n = X.shape[0]
    probs = softmax(X @ W.T + b)
    eps = 1e-300  # guards log(0); irrelevant to gradients
    loss = -float(np.mean(np.log(probs[np.arange(n), y] + eps)))
    delta = probs
    delta[np.arange(n), y] -= 1.0
    delta /= n
    return loss, delta.T @ X, delta.sum(axis=0)


@dataclass
class DocThresholds:
    """Per-seen-class probability cutoffs."""

    classes: list[str]
    sigma: dict[str, float]
    t: dict[str, float]
    k: float

    def to_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "k": self.k,
            "sigma": {c: self.sigma[c] for c in self.classes},
            "t": {c: self.t[c] for c in self.classes},
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "DocThresholds":
        return cls(
            classes=list(obj["classes"]),
            sigma={c: float(v) for c, v in obj["sigma"].items()},
            t={c: float(v) for c, v in obj["t"].items()},
            k=float(obj["k"]),
        )


def doc_threshold(probs: np.ndarray, k: float = 3.0) -> tuple[float, float]:
    """Sigma and threshold for one class from its own-row probabilities.

    Mirroring p -> 2 - p about 1 makes the (1-p) and mirrored (p-1)
    deviations symmetric, so the std about mean 1 is sqrt(mean((1-p)^2))
    (population divisor).
    """
    p = np.asarray(probs, dtype=np.float64)
    if p.size == 0:
        raise DataError("cannot fit a threshold with zero examples")
    sigma = float(np.sqrt(np.mean((1.0 - p) ** 2)))
    return sigma, max(0.5, 1.0 - k * sigma)


class NoveltyDetector:
    """Softmax head plus per-class thresholds over raw embeddings."""

    def __init__(self, classes: list[str], n_seen: int, dim: int, mode: str):
        if mode not in MODES:
            raise ConfigError(f"unknown detector mode {mode!r}")
        self.classes = list(classes)
        self.n_seen = int(n_seen)
        self.dim = int(dim)
        self.mode = mode
        # zero init: an untrained head scores every class equally
        self.W = np.zeros((len(classes), dim), dtype=np.float64)
        self.b = np.zeros(len(classes), dtype=np.float64)
        self.thresholds: DocThresholds | None = None

    # -- construction -----------------------------------------------------

    @classmethod
    def fit(cls, X_seen: np.ndarray, seen_intents: list[str],
            X_ood: np.ndarray | None, ood_intents: list[str] | None,
            mode: str = "m_unseen", *, lr: float = 0.05, epochs: int = 8,
            batch_size: int = 64, doc_k: float = 3.0,
            seed: int = 0) -> "NoveltyDetector":
        """Train the head and fit thresholds on the training rows."""
        X_seen = np.asarray(X_seen, dtype=np.float64)
        if X_seen.ndim != 2 or X_seen.shape[0] == 0:
            raise DataError("detector needs a non-empty 2-D seen matrix")
        if len(seen_intents) != X_seen.shape[0]:
            raise DataError("seen intents and rows disagree in length")
        seen_classes = sorted(set(seen_intents))

        have_ood = X_ood is not None and len(X_ood) > 0
        if mode in ("one_unseen", "m_unseen") and not have_ood:
            raise DataError(f"mode {mode!r} needs OOD rows; none were given")
        if mode == "one_unseen":
            classes = seen_classes + [UNSEEN_SENTINEL]
            extra = [UNSEEN_SENTINEL] * len(X_ood)
        elif mode == "m_unseen":
            if ood_intents is None or len(ood_intents) != len(X_ood):
                raise DataError("mode m_unseen needs an intent per OOD row")
            if any(i is None for i in ood_intents):
                raise DataError("mode m_unseen needs an intent per OOD row")
            classes = seen_classes + sorted(set(ood_intents))
            extra = list(ood_intents)
        else:
            classes = seen_classes
            extra = []

        det = cls(classes, n_seen=len(seen_classes), dim=X_seen.shape[1], mode=mode)
        cls_index = {c: i for i, c in enumerate(classes)}
        if have_ood and mode != "seen_only":
            X = np.vstack([X_seen, np.asarray(X_ood, dtype=np.float64)])
            y = np.array([cls_index[c] for c in list(seen_intents) + extra])
        else:
            X = X_seen
            y = np.array([cls_index[c] for c in seen_intents])

        rng = np.random.default_rng(seed)
        opt = Adam([det.W, det.b], lr=lr)
        n = X.shape[0]
        for _ in range(int(epochs)):
            order = rng.permutation(n)
            for start in range(0, n, int(batch_size)):
                sel = order[start : start + int(batch_size)]
                loss, gW, gb = ce_loss_and_grad(det.W, det.b, X[sel], y[sel])
                if not np.isfinite(loss):
                    raise DivergenceError("detector loss became non-finite")
                opt.step([gW, gb])

        det.fit_thresholds(X_seen, list(seen_intents), k=doc_k)
        return det

    def fit_thresholds(self, X_seen: np.ndarray, seen_intents: list[str],
                       k: float = 3.0) -> None:
        probs = self.predict_proba(X_seen)
        seen_classes = self.classes[: self.n_seen]
        sigma, t = {}, {}
        for ci, c in enumerate(seen_classes):
            own = probs[[i for i, lab in enumerate(seen_intents) if lab == c], ci]
            sigma[c], t[c] = doc_threshold(own, k=k)
        self.thresholds = DocThresholds(classes=seen_classes, sigma=sigma, t=t, k=k)

    # -- inference ---------------------------------------------------------

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.dim:
            raise DataError(f"expected dim {self.dim}, got {X.shape[1]}")
        return softmax(X @ self.W.T + self.b)

    def detect(self, X: np.ndarray) -> tuple[np.ndarray, list[str | None]]:
        """Flag novel rows and label the rest.

        Returns (novel_mask, labels); labels[i] is the assigned seen intent,
        or None where the row is novel.
        """
        if self.thresholds is None:
            raise ConfigError("thresholds not fitted")
        probs = self.predict_proba(X)
        top = probs.argmax(axis=1)
        novel = np.zeros(probs.shape[0], dtype=bool)
        labels: list[str | None] = []
        t = np.array([self.thresholds.t[c] for c in self.classes[: self.n_seen]])
        below_all = (probs[:, : self.n_seen] < t[None, :]).all(axis=1)
        for i in range(probs.shape[0]):
            if top[i] >= self.n_seen or below_all[i]:
                novel[i] = True
                labels.append(None)
            else:
                labels.append(self.classes[top[i]])
        return novel, labels

    # -- persistence -------------------------------------------------------

    def to_dict(self) -> dict:
        out = {
            "kind": "novelty_detector",
            "mode": self.mode,
            "classes": list(self.classes),
            "n_seen": self.n_seen,
            "dim": self.dim,
            "W": array_to_b64(self.W),
            "b": array_to_b64(self.b),
        }
        if self.thresholds is not None:
            out["thresholds"] = self.thresholds.to_dict()
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "NoveltyDetector":
        try:
            det = cls(list(obj["classes"]), int(obj["n_seen"]), int(obj["dim"]),
                      obj["mode"])
        except KeyError as exc:
            raise DataError(f"detector artifact missing field {exc}") from None
        W = b64_to_array(obj["W"])
        b = b64_to_array(obj["b"])
        if W.shape != det.W.shape or b.shape != det.b.shape:
            raise DataError("detector artifact weight shapes disagree with header")
        det.W[...] = W
        det.b[...] = b
        if "thresholds" in obj:
            det.thresholds = DocThresholds.from_dict(obj["thresholds"])
        return det
