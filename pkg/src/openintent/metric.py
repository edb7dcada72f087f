"""Discriminative metric learning over fixed utterance embeddings.

A two-layer head is trained with a three-term pairwise margin loss so that
the hidden representation separates intents within and across domains:

    E(x)   = tanh(W1 x + b1)          (hidden, "E" space)
    Emb(x) = W2 E(x) + b2             (output, "Emb" space)

Each training example is a quadruplet (x, x_i, x_j, x_k): x_i shares x's
intent, x_j shares only its domain, x_k comes from another domain. With
d_p = d(E(x), E(x_p)) and d the one-minus-cosine distance, the loss is

    max(0, m1 + d_i - d_j)
      + alpha * max(0, m2 + d_i - d_k)
      + beta  * max(0, m3 + d_j - d_k)

averaged over the batch. Clustering later measures euclidean distance in
Emb space; the loss itself only touches E space, so W2 and b2 receive zero
gradient and stay at their initialization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import EmbeddingSet, View
from .errors import DataError, DivergenceError
from .optim import Adam
from .serialize import array_to_b64, b64_to_array


@dataclass(frozen=True)
class Quadruplet:
    """Anchor plus its three paired utterances, as utterance ids."""

    anchor: str
    same_intent: str
    same_domain_diff_intent: str
    diff_domain: str


@dataclass(frozen=True)
class LossConfig:
    m1: float = 0.05
    m2: float = 0.05
    m3: float = 0.05
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if min(self.m1, self.m2, self.m3) < 0:
            raise DataError("margins must be >= 0")
        if self.alpha < 0 or self.beta < 0:
            raise DataError("alpha and beta must be >= 0")


@dataclass(frozen=True)
class MetricTrainConfig:
    learning_rate: float = 1e-3
    batch_quadruplets: int = 64
    epochs: int = 15
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    rng_seed: int = 0
    h: int = 256
    e: int = 128
    quads_per_anchor: int = 4

    def __post_init__(self):
        if self.batch_quadruplets < 1:
            raise DataError("batch_quadruplets must be >= 1")
        if self.h < 1 or self.e < 1:
            raise DataError("layer sizes must be >= 1")


class EncoderNet:
    """tanh hidden layer plus linear output head."""

    def __init__(self, W1: np.ndarray, b1: np.ndarray,
                 W2: np.ndarray, b2: np.ndarray):
        self.W1 = np.asarray(W1, dtype=np.float64)
        self.b1 = np.asarray(b1, dtype=np.float64)
        self.W2 = np.asarray(W2, dtype=np.float64)
        self.b2 = np.asarray(b2, dtype=np.float64)
        h, d = self.W1.shape
        e = self.W2.shape[0]
        if self.b1.shape != (h,) or self.W2.shape != (e, h) or self.b2.shape != (e,):
            raise DataError("encoder weight shapes are inconsistent")
        for w in (self.W1, self.b1, self.W2, self.b2):
            if not np.isfinite(w).all():
                raise DataError("encoder weights contain non-finite values")

    @property
    def dim(self) -> int:
        return self.W1.shape[1]

    @property
    def h(self) -> int:
        return self.W1.shape[0]

    @property
    def e(self) -> int:
        return self.W2.shape[0]

    @classmethod
    def init_xavier(cls, dim: int, h: int, e: int,
                    rng: np.random.Generator | int = 0) -> "EncoderNet":
        rng = np.random.default_rng(rng)
        lim1 = np.sqrt(6.0 / (dim + h))
        lim2 = np.sqrt(6.0 / (h + e))
        return cls(
            W1=rng.uniform(-lim1, lim1, size=(h, dim)),
            b1=np.zeros(h),
            W2=rng.uniform(-lim2, lim2, size=(e, h)),
            b2=np.zeros(e),
        )

    def params(self) -> list[np.ndarray]:
        return [self.W1, self.b1, self.W2, self.b2]

    def forward(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Row-wise (E, Emb) for a matrix of raw embeddings."""
        X = np.asarray(X, dtype=np.float64)
        squeeze = X.ndim == 1
        if squeeze:
            X = X[None, :]
        if X.shape[1] != self.dim:
            raise DataError(f"expected dim {self.dim}, got {X.shape[1]}")
        E = np.tanh(X @ self.W1.T + self.b1)
        Emb = E @ self.W2.T + self.b2
        if squeeze:
            return E[0], Emb[0]
        return E, Emb

    def embed_all(self, embs: EmbeddingSet) -> EmbeddingSet:
        """Map a raw-space embedding set into Emb space, order preserved."""
        if embs.n == 0:
            return EmbeddingSet(ids=embs.ids,
                                matrix=np.zeros((0, self.e)), space_tag="Emb")
        _, emb = self.forward(embs.matrix)
        return EmbeddingSet(ids=embs.ids, matrix=emb, space_tag="Emb")

    def to_dict(self) -> dict:
        return {
            "kind": "encoder_net",
            "dim": self.dim,
            "h": self.h,
            "e": self.e,
            "W1": array_to_b64(self.W1),
            "b1": array_to_b64(self.b1),
            "W2": array_to_b64(self.W2),
            "b2": array_to_b64(self.b2),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "EncoderNet":
        try:
            net = cls(b64_to_array(obj["W1"]), b64_to_array(obj["b1"]),
                      b64_to_array(obj["W2"]), b64_to_array(obj["b2"]))
        except KeyError as exc:
            raise DataError(f"encoder artifact missing field {exc}") from None
        return net


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cosine similarity; a zero-norm argument means maximal distance 1."""
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 1.0
    return 1.0 - float(np.dot(u, v)) / (nu * nv)


def _row_cosine_distance(U: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Per-row 1 - cos(U[r], V[r]); zero-norm rows give distance 1."""
    nu = np.linalg.norm(U, axis=1)
    nv = np.linalg.norm(V, axis=1)
    dot = np.einsum("ij,ij->i", U, V)
    ok = (nu > 0) & (nv > 0)
    out = np.ones(U.shape[0])
    out[ok] = 1.0 - dot[ok] / (nu[ok] * nv[ok])
    return out


def _cosine_grads(U: np.ndarray, V: np.ndarray):
    """Per-row gradients of d(u,v)=1-cos wrt u and v; zero at degenerate rows."""
    nu = np.linalg.norm(U, axis=1)
    nv = np.linalg.norm(V, axis=1)
    dot = np.einsum("ij,ij->i", U, V)
    ok = (nu > 0) & (nv > 0)
    gU = np.zeros_like(U)
    gV = np.zeros_like(V)
    nu_s = np.where(ok, nu, 1.0)
    nv_s = np.where(ok, nv, 1.0)
    c = dot / (nu_s * nv_s)
    # d/du (1 - u.v/(|u||v|)) = c*u/|u|^2 - v/(|u||v|)
    gU[ok] = (c[:, None] * U / (nu_s ** 2)[:, None]
              - V / (nu_s * nv_s)[:, None])[ok]
    gV[ok] = (c[:, None] * V / (nv_s ** 2)[:, None]
              - U / (nu_s * nv_s)[:, None])[ok]
    return gU, gV


def sample_quadruplets(view: View, per_anchor: int,
                       rng_seed: np.random.Generator | int = 0,
                       ) -> tuple[list[Quadruplet], dict]:
    """Draw quadruplets for every anchor that has all three pair categories.

    Returns the quadruplets and a skip report counting anchors that lack a
    same-intent, same-domain-other-intent, or other-domain candidate.
    """
    rng = np.random.default_rng(rng_seed)
    ids = list(view.ids)
    intents = view.intents()
    domains = view.domains()
    missing = [u for u in ids if u not in intents or u not in domains]
    if missing:
        raise DataError(
            f"quadruplet sampling needs intent and domain for every row; "
            f"missing on {missing[0]!r}"
        )
    by_intent: dict[str, list[str]] = {}
    by_domain: dict[str, list[str]] = {}
    for u in ids:
        by_intent.setdefault(intents[u], []).append(u)
        by_domain.setdefault(domains[u], []).append(u)

    quads: list[Quadruplet] = []
    skipped = 0
    for anchor in ids:
        it, dom = intents[anchor], domains[anchor]
        same_i = [u for u in by_intent[it] if u != anchor]
        same_d = [u for u in by_domain[dom] if intents[u] != it]
        diff_d = [u for u in ids if domains[u] != dom]
        if not same_i or not same_d or not diff_d:
            skipped += 1
            continue
        for _ in range(int(per_anchor)):
            quads.append(Quadruplet(
                anchor=anchor,
                same_intent=same_i[rng.integers(len(same_i))],
                same_domain_diff_intent=same_d[rng.integers(len(same_d))],
                diff_domain=diff_d[rng.integers(len(diff_d))],
            ))
    report = {
        "anchors_total": len(ids),
        "anchors_skipped": skipped,
        "quadruplets": len(quads),
    }
    if not quads:
        raise DataError(
            "no valid quadruplets: need at least two intents in some domain "
            "and at least two domains"
        )
    return quads, report


def _quad_indices(quads: list[Quadruplet], embs: EmbeddingSet) -> np.ndarray:
    idx = np.empty((len(quads), 4), dtype=np.int64)
    for r, q in enumerate(quads):
        idx[r, 0] = embs.index_of(q.anchor)
        idx[r, 1] = embs.index_of(q.same_intent)
        idx[r, 2] = embs.index_of(q.same_domain_diff_intent)
        idx[r, 3] = embs.index_of(q.diff_domain)
    return idx


def quadruplet_loss(net: EncoderNet, X: np.ndarray, idx: np.ndarray,
                    cfg: LossConfig) -> float:
    """Mean margin loss of a batch of quadruplets given as index rows."""
    loss, _ = quadruplet_loss_and_grads(net, X, idx, cfg, want_grads=False)
    return loss


def quadruplet_loss_and_grads(net: EncoderNet, X: np.ndarray, idx: np.ndarray,
                              cfg: LossConfig, want_grads: bool = True,
                              ) -> tuple[float, list[np.ndarray] | None]:
    """Mean batch loss and exact gradients for [W1, b1, W2, b2].

    idx is an (M, 4) array of row indices into X ordered anchor, same-intent,
    same-domain-other-intent, other-domain. The hinge subgradient at the
    kink is taken as 0. The loss never touches Emb space, so the W2 and b2
    gradients are exactly zero.
    """
    idx = np.asarray(idx, dtype=np.int64)
    if idx.ndim != 2 or idx.shape[1] != 4 or idx.shape[0] == 0:
        raise DataError("quadruplet batch must be a non-empty (M, 4) index array")
    M = idx.shape[0]
    Xa, Xi, Xj, Xk = (X[idx[:, c]] for c in range(4))
    Za = Xa @ net.W1.T + net.b1
    Ea = np.tanh(Za)
    Ei = np.tanh(Xi @ net.W1.T + net.b1)
    Ej = np.tanh(Xj @ net.W1.T + net.b1)
    Ek = np.tanh(Xk @ net.W1.T + net.b1)

    di = _row_cosine_distance(Ea, Ei)
    dj = _row_cosine_distance(Ea, Ej)
    dk = _row_cosine_distance(Ea, Ek)

    h1 = cfg.m1 + di - dj
    h2 = cfg.m2 + di - dk
    h3 = cfg.m3 + dj - dk
    a1 = h1 > 0
    a2 = h2 > 0
    a3 = h3 > 0
    loss = float(np.mean(
        np.where(a1, h1, 0.0)
        + cfg.alpha * np.where(a2, h2, 0.0)
        + cfg.beta * np.where(a3, h3, 0.0)
    ))
    if not want_grads:
        return loss, None

    # per-quadruplet weight on each distance term
    gi = a1.astype(np.float64) + cfg.alpha * a2
    gj = -a1.astype(np.float64) + cfg.beta * a3
    gk = -(cfg.alpha * a2 + cfg.beta * a3).astype(np.float64)

    dEa = np.zeros_like(Ea)
    gAi, gIi = _cosine_grads(Ea, Ei)
    gAj, gJj = _cosine_grads(Ea, Ej)
    gAk, gKk = _cosine_grads(Ea, Ek)
    dEa += gi[:, None] * gAi + gj[:, None] * gAj + gk[:, None] * gAk
    dEi = gi[:, None] * gIi
    dEj = gj[:, None] * gJj
    dEk = gk[:, None] * gKk

    gW1 = np.zeros_like(net.W1)
    gb1 = np.zeros_like(net.b1)
    for dE, E, Xr in ((dEa, Ea, Xa), (dEi, Ei, Xi), (dEj, Ej, Xj), (dEk, Ek, Xk)):
        dz = dE * (1.0 - E * E)
        gW1 += dz.T @ Xr
        gb1 += dz.sum(axis=0)
    gW1 /= M
    gb1 /= M
    return loss, [gW1, gb1, np.zeros_like(net.W2), np.zeros_like(net.b2)]


@dataclass
class TrainTrace:
    """Per-epoch mean losses recorded during training."""

    epoch_losses: list[float] = field(default_factory=list)


def train_metric(view: View, loss_cfg: LossConfig,
                 train_cfg: MetricTrainConfig) -> tuple[EncoderNet, TrainTrace, dict]:
    """Fit the encoder on a labeled view; returns net, loss trace, skip report."""
    rng = np.random.default_rng(train_cfg.rng_seed)
    embs = view.embeddings()
    quads, report = sample_quadruplets(view, train_cfg.quads_per_anchor, rng)
    idx = _quad_indices(quads, embs)
    X = embs.matrix

    net = EncoderNet.init_xavier(embs.dim, train_cfg.h, train_cfg.e, rng)
    opt = Adam(net.params(), lr=train_cfg.learning_rate,
               beta1=train_cfg.adam_beta1, beta2=train_cfg.adam_beta2)
    trace = TrainTrace()
    n = idx.shape[0]
    bs = train_cfg.batch_quadruplets
    for epoch in range(int(train_cfg.epochs)):
        order = rng.permutation(n)
        losses = []
        for bno, start in enumerate(range(0, n, bs)):
            batch = idx[order[start : start + bs]]
            loss, grads = quadruplet_loss_and_grads(net, X, batch, loss_cfg)
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"metric loss became non-finite at epoch {epoch}, batch {bno}"
                )
            opt.step(grads)
            losses.append(loss)
        trace.epoch_losses.append(float(np.mean(losses)))
    return net, trace, report
