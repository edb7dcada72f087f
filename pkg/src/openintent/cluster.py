"""Complete-linkage clustering with threshold transfer and pair constraints.

The dendrogram is built by repeatedly merging the pair of clusters whose
complete-linkage distance (maximum over cross-cluster point pairs) is
minimal. Ties break toward the pair with the smallest (older, then younger)
cluster creation ids so results are identical across platforms. The cut
threshold is learned on labeled data: every merge height (plus 0) is tried
and the one maximizing the clustering-vs-labels F1 wins, ties going to the
smallest height.

Must-link pairs are edited to distance 0 and cannot-link pairs to ten times
the largest input distance before linkage runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import EmbeddingSet
from .errors import ConstraintError, DataError


@dataclass(frozen=True)
class DistanceMatrix:
    """Condensed upper-triangular pairwise distances over ordered ids."""

    ids: tuple[str, ...]
    condensed: np.ndarray

    def __post_init__(self):
        n = len(self.ids)
        cond = np.asarray(self.condensed, dtype=np.float64)
        if cond.shape != (n * (n - 1) // 2,):
            raise DataError(
                f"condensed length {cond.shape} does not fit {n} items"
            )
        if cond.size and not np.isfinite(cond).all():
            raise DataError("distance matrix has non-finite entries")
        if cond.size and cond.min() < 0:
            raise DataError("distance matrix has negative entries")
        cond.flags.writeable = False
        object.__setattr__(self, "condensed", cond)

    @property
    def n(self) -> int:
        return len(self.ids)

    def square(self) -> np.ndarray:
        n = self.n
        sq = np.zeros((n, n))
        iu = np.triu_indices(n, k=1)
        sq[iu] = self.condensed
        sq[(iu[1], iu[0])] = self.condensed
        return sq


@dataclass(frozen=True)
class Dendrogram:
    """Ordered merge list; leaves are 0..n-1, merge m creates node n+m."""

    n_leaves: int
    ids: tuple[str, ...]
    merges: tuple[tuple[int, int, float], ...]

    def heights(self) -> list[float]:
        return [m[2] for m in self.merges]

    def to_dict(self) -> dict:
        return {
            "n_leaves": self.n_leaves,
            "ids": list(self.ids),
            "merges": [[int(a), int(b), float(h)] for a, b, h in self.merges],
        }


@dataclass(frozen=True)
class Clustering:
    """Dense cluster indices 0..k-1 over ordered ids."""

    ids: tuple[str, ...]
    labels: np.ndarray
    k: int

    def __post_init__(self):
        lab = np.asarray(self.labels, dtype=np.int64)
        if lab.shape != (len(self.ids),):
            raise DataError("one cluster index per id required")
        if len(self.ids) > 0:
            present = np.unique(lab)
            if present[0] != 0 or present[-1] != self.k - 1 or len(present) != self.k:
                raise DataError("cluster indices must be dense 0..k-1")
        lab.flags.writeable = False
        object.__setattr__(self, "labels", lab)

    @property
    def assignment(self) -> dict[str, int]:
        return {uid: int(c) for uid, c in zip(self.ids, self.labels)}

    def members(self) -> list[list[str]]:
        out: list[list[str]] = [[] for _ in range(self.k)]
        for uid, c in zip(self.ids, self.labels):
            out[c].append(uid)
        return out

    def to_dict(self) -> dict:
        return {"assignment": self.assignment, "k": self.k}


@dataclass(frozen=True)
class ConstraintSet:
    """Must-link / cannot-link utterance id pairs."""

    must_link: tuple[tuple[str, str], ...]
    cannot_link: tuple[tuple[str, str], ...]

    @classmethod
    def from_dict(cls, obj: dict) -> "ConstraintSet":
        def pairs(key):
            raw = obj.get(key, [])
            out = []
            for p in raw:
                if not isinstance(p, (list, tuple)) or len(p) != 2:
                    raise DataError(f"{key} entries must be [id, id] pairs")
                a, b = str(p[0]), str(p[1])
                if a == b:
                    raise ConstraintError(f"{key} pair links {a!r} to itself")
                out.append((min(a, b), max(a, b)))
            return tuple(out)

        return cls(must_link=pairs("must_link"), cannot_link=pairs("cannot_link"))

    def to_dict(self) -> dict:
        return {
            "must_link": [list(p) for p in self.must_link],
            "cannot_link": [list(p) for p in self.cannot_link],
        }

    def validate(self, known_ids: Sequence[str]) -> None:
        """Ids known, no pair in both sets, ML closure hits no CL pair."""
        known = set(known_ids)
        for a, b in self.must_link + self.cannot_link:
            for x in (a, b):
                if x not in known:
                    raise ConstraintError(f"constraint references unknown id {x!r}")
        ml = set(self.must_link)
        cl = set(self.cannot_link)
        both = ml & cl
        if both:
            a, b = sorted(both)[0]
            raise ConstraintError(
                f"pair ({a!r}, {b!r}) is both must-link and cannot-link"
            )
        parent: dict[str, str] = {}

        def find(x: str) -> str:
            while parent.get(x, x) != x:
                parent[x] = parent.get(parent[x], parent[x])
                x = parent[x]
            return x

        for a, b in self.must_link:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
        for a, b in self.cannot_link:
            if find(a) == find(b):
                raise ConstraintError(
                    f"cannot-link pair ({a!r}, {b!r}) is connected by must-links"
                )


def pairwise_distances(embs: EmbeddingSet) -> DistanceMatrix:
    """Condensed euclidean distances over an Emb-space set."""
    if embs.n < 2:
        raise DataError("pairwise distances need at least 2 points")
    X = embs.matrix
    sq = np.sum(X * X, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(d2, 0.0, out=d2)
    dist = np.sqrt(d2)
    iu = np.triu_indices(embs.n, k=1)
    cond = dist[iu]
    if not np.isfinite(cond).all():
        raise DataError("non-finite pairwise distance")
    return DistanceMatrix(ids=embs.ids, condensed=cond)


def complete_linkage(dm: DistanceMatrix) -> Dendrogram:
    """Agglomerate by minimal maximum inter-point distance.

    Cluster ids count up from the leaves in creation order; the matrix is
    kept compacted in that same order, so a row-major argmin over the upper
    triangle realizes the (older, younger) tie-break exactly. Heights are
    selections from the input entries (no arithmetic), so the brute-force
    recomputation matches them exactly.
    """
    n = dm.n
    if n < 2:
        raise DataError("linkage needs at least 2 items")
    D = dm.square()
    np.fill_diagonal(D, np.inf)
    ids = list(range(n))
    merges: list[tuple[int, int, float]] = []
    next_id = n
    while len(ids) > 1:
        m = len(ids)
        bi, bj, bh = -1, -1, np.inf
        for i in range(m - 1):
            row = D[i, i + 1 :]
            j_rel = int(np.argmin(row))
            if row[j_rel] < bh:
                bh = float(row[j_rel])
                bi, bj = i, i + 1 + j_rel
        merges.append((ids[bi], ids[bj], bh))
        newrow = np.maximum(D[bi], D[bj])
        keep = [p for p in range(m) if p != bi and p != bj]
        D2 = np.empty((m - 1, m - 1))
        D2[: m - 2, : m - 2] = D[np.ix_(keep, keep)]
        D2[m - 2, : m - 2] = newrow[keep]
        D2[: m - 2, m - 2] = newrow[keep]
        D2[m - 2, m - 2] = np.inf
        D = D2
        ids = [ids[p] for p in keep]
        ids.append(next_id)
        next_id += 1
    return Dendrogram(n_leaves=n, ids=dm.ids, merges=tuple(merges))


def cut(dend: Dendrogram, delta: float) -> Clustering:
    """Apply every merge with height <= delta; components become clusters.

    Cluster indices are assigned densely by first appearance in leaf order.
    """
    if delta < 0:
        raise DataError("cut threshold must be >= 0")
    n = dend.n_leaves
    total = n + len(dend.merges)
    parent = list(range(total))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for step, (a, b, h) in enumerate(dend.merges):
        if h > delta:
            break  # heights are non-decreasing; later merges are all higher
        node = n + step
        parent[find(a)] = node
        parent[find(b)] = node
    dense: dict[int, int] = {}
    labels = np.empty(n, dtype=np.int64)
    for leaf in range(n):
        root = find(leaf)
        if root not in dense:
            dense[root] = len(dense)
        labels[leaf] = dense[root]
    return Clustering(ids=dend.ids, labels=labels, k=len(dense))


def _pair_counts(labels: Sequence) -> tuple[dict, int]:
    counts: dict = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    pairs = sum(c * (c - 1) // 2 for c in counts.values())
    return counts, pairs


def pairwise_f1(pred: Sequence, truth: Sequence) -> float:
    """F1 over same-cluster vs. same-label item pairs.

    Zero predicted-positive or zero truth-positive pairs give F1 = 0.
    """
    if len(pred) != len(truth):
        raise DataError("pred and truth must align")
    _, pred_pairs = _pair_counts(pred)
    _, truth_pairs = _pair_counts(truth)
    if pred_pairs == 0 or truth_pairs == 0:
        return 0.0
    cells: dict = {}
    for p, t in zip(pred, truth):
        cells[(p, t)] = cells.get((p, t), 0) + 1
    tp = sum(c * (c - 1) // 2 for c in cells.values())
    precision = tp / pred_pairs
    recall = tp / truth_pairs
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def bcubed_f1(pred: Sequence, truth: Sequence) -> float:
    """Item-averaged BCubed precision/recall F1 (alternate F1 variant)."""
    if len(pred) != len(truth):
        raise DataError("pred and truth must align")
    n = len(pred)
    if n == 0:
        return 0.0
    cells: dict = {}
    pc, _ = _pair_counts(pred)
    tc, _ = _pair_counts(truth)
    for p, t in zip(pred, truth):
        cells[(p, t)] = cells.get((p, t), 0) + 1
    prec = sum(c * c / pc[p] for (p, t), c in cells.items()) / n
    rec = sum(c * c / tc[t] for (p, t), c in cells.items()) / n
    if prec + rec == 0:
        return 0.0
    return 2 * prec * rec / (prec + rec)


F1_VARIANTS = {"pairwise": pairwise_f1, "bcubed": bcubed_f1}


@dataclass(frozen=True)
class TransferResult:
    delta: float
    f1: float
    dendrogram: Dendrogram


def transfer_threshold(embs: EmbeddingSet, labels: dict[str, str],
                       f1_variant: str = "pairwise") -> TransferResult:
    """Pick the cut height that best reproduces the labels on this set.

    Candidates are 0 plus every merge height; the F1-maximizing candidate
    wins and ties keep the smallest height (the finer clustering).
    """
    score = F1_VARIANTS.get(f1_variant)
    if score is None:
        raise DataError(f"unknown f1 variant {f1_variant!r}")
    missing = [u for u in embs.ids if u not in labels]
    if missing:
        raise DataError(f"no label for id {missing[0]!r}")
    truth = [labels[u] for u in embs.ids]
    if len(set(truth)) < 2:
        raise DataError("threshold transfer needs at least 2 distinct labels")
    dend = complete_linkage(pairwise_distances(embs))
    candidates = [0.0]
    for h in dend.heights():
        if h != candidates[-1]:
            candidates.append(h)
    best_delta, best_f1 = 0.0, -1.0
    for cand in candidates:
        f1 = score(list(cut(dend, cand).labels), truth)
        if f1 > best_f1:
            best_delta, best_f1 = cand, f1
    return TransferResult(delta=best_delta, f1=best_f1, dendrogram=dend)


def apply_constraints(dm: DistanceMatrix, cs: ConstraintSet) -> DistanceMatrix:
    """Edit distances: must-link to 0, cannot-link to 10x the input maximum."""
    cs.validate(dm.ids)
    cond = dm.condensed.copy()
    if cond.size == 0:
        return dm
    far = 10.0 * float(cond.max())
    pos = {uid: i for i, uid in enumerate(dm.ids)}
    n = dm.n

    def flat(a: str, b: str) -> int:
        i, j = sorted((pos[a], pos[b]))
        return i * n - i * (i + 1) // 2 + (j - i - 1)

    for a, b in cs.must_link:
        cond[flat(a, b)] = 0.0
    for a, b in cs.cannot_link:
        cond[flat(a, b)] = far
    return DistanceMatrix(ids=dm.ids, condensed=cond)


def cluster_novel(embs: EmbeddingSet, delta: float,
                  constraints: ConstraintSet | None = None) -> Clustering:
    """Cluster flagged-novel utterances at the transferred threshold."""
    if embs.n == 0:
        raise DataError("nothing to cluster")
    if embs.n == 1:
        return Clustering(ids=embs.ids, labels=np.zeros(1, dtype=np.int64), k=1)
    dm = pairwise_distances(embs)
    if constraints is not None:
        dm = apply_constraints(dm, constraints)
    return cut(complete_linkage(dm), delta)
