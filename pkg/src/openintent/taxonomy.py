"""Domain linking: group discovered intent clusters into domains.

Seen clusters (from cutting the labeled corpus at the transferred height)
are labeled with the modal domain of their members. Their centroids, taken
in Emb space, carry domain labels, so the same threshold-transfer trick
that produced the intent cut yields a domain-level height. Novel cluster
centroids cut at that height form the novel domains.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .cluster import Clustering, TransferResult, cluster_novel, transfer_threshold
from .corpus import EmbeddingSet
from .errors import DataError


@dataclass(frozen=True)
class IntentCluster:
    """One intent-level cluster with its centroid and optional domain."""

    cluster_id: str
    member_ids: tuple[str, ...]
    centroid: np.ndarray
    provenance: str  # "seen" | "novel"
    domain: str | None = None

    def __post_init__(self):
        if len(self.member_ids) == 0:
            raise DataError("intent cluster must have members")
        if self.provenance not in ("seen", "novel"):
            raise DataError(f"bad provenance {self.provenance!r}")
        c = np.asarray(self.centroid, dtype=np.float64)
        c.flags.writeable = False
        object.__setattr__(self, "centroid", c)

    def to_dict(self, with_centroid: bool = False) -> dict:
        out = {
            "id": self.cluster_id,
            "member_ids": list(self.member_ids),
            "provenance": self.provenance,
        }
        if self.domain is not None:
            out["domain"] = self.domain
        if with_centroid:
            out["centroid"] = [float(v) for v in self.centroid]
        return out


@dataclass(frozen=True)
class Domain:
    domain_id: str
    provenance: str  # "seen" | "novel"
    clusters: tuple[IntentCluster, ...]


@dataclass(frozen=True)
class Taxonomy:
    """Domains with their member intent clusters."""

    domains: tuple[Domain, ...]

    @property
    def n_novel_domains(self) -> int:
        return sum(1 for d in self.domains if d.provenance == "novel")

    @property
    def n_novel_intents(self) -> int:
        return sum(
            sum(1 for c in d.clusters if c.provenance == "novel")
            for d in self.domains
        )

    def to_dict(self, with_centroids: bool = False) -> dict:
        return {
            "domains": [
                {
                    "id": d.domain_id,
                    "provenance": d.provenance,
                    "intents": [c.to_dict(with_centroids) for c in d.clusters],
                }
                for d in self.domains
            ]
        }


def compute_centroids(clustering: Clustering, embs: EmbeddingSet) -> np.ndarray:
    """Arithmetic mean of member Emb vectors, one row per cluster index."""
    if embs.n != len(clustering.ids):
        raise DataError("embeddings must cover all clustered ids")
    order = [embs.index_of(u) for u in clustering.ids]
    X = embs.matrix[order]
    cents = np.zeros((clustering.k, embs.dim))
    counts = np.zeros(clustering.k)
    for row, c in zip(X, clustering.labels):
        cents[c] += row
        counts[c] += 1
    return cents / counts[:, None]


def label_seen_clusters(clustering: Clustering, domains: dict[str, str],
                        embs: EmbeddingSet) -> list[IntentCluster]:
    """Seen intent clusters labeled with their modal member domain.

    A tie picks the lexicographically smallest domain label.
    """
    missing = [u for u in clustering.ids if u not in domains]
    if missing:
        raise DataError(f"no domain label for id {missing[0]!r}")
    cents = compute_centroids(clustering, embs)
    out = []
    for ci, members in enumerate(clustering.members()):
        votes = Counter(domains[u] for u in members)
        top = max(votes.values())
        domain = min(lab for lab, cnt in votes.items() if cnt == top)
        out.append(IntentCluster(
            cluster_id=f"seen-intent-{ci}",
            member_ids=tuple(members),
            centroid=cents[ci],
            provenance="seen",
            domain=domain,
        ))
    return out


def novel_clusters(clustering: Clustering, embs: EmbeddingSet) -> list[IntentCluster]:
    """Wrap a novel-utterance clustering into unlabeled intent clusters."""
    cents = compute_centroids(clustering, embs)
    return [
        IntentCluster(
            cluster_id=f"novel-intent-{ci}",
            member_ids=tuple(members),
            centroid=cents[ci],
            provenance="novel",
        )
        for ci, members in enumerate(clustering.members())
    ]


def _centroid_set(clusters: list[IntentCluster]) -> EmbeddingSet:
    return EmbeddingSet(
        ids=tuple(c.cluster_id for c in clusters),
        matrix=np.vstack([c.centroid for c in clusters]),
        space_tag="Emb",
    )


def transfer_domain_threshold(seen_clusters: list[IntentCluster],
                              f1_variant: str = "pairwise") -> TransferResult:
    """Learn the domain-level cut height from seen cluster centroids."""
    doms = {c.domain for c in seen_clusters}
    if None in doms:
        raise DataError("seen clusters must carry domain labels")
    if len(doms) < 2:
        raise DataError("domain threshold transfer needs at least 2 seen domains")
    labels = {c.cluster_id: c.domain for c in seen_clusters}
    return transfer_threshold(_centroid_set(seen_clusters), labels, f1_variant)


def link_domains(novel: list[IntentCluster], delta_dom: float,
                 seen_clusters: list[IntentCluster] | None = None,
                 include_seen: bool = False) -> list[Domain]:
    """Group novel intent clusters into novel domains at the given height.

    Groups are named novel-domain-<k> in order of their smallest member
    cluster id. With include_seen, seen centroids join the cut and any group
    containing seen clusters adopts that group's modal seen domain instead
    of founding a new one (exploration mode).
    """
    if not novel:
        raise DataError("no novel clusters to link")
    pool = list(novel)
    if include_seen and seen_clusters:
        pool = pool + list(seen_clusters)
    by_id = {c.cluster_id: c for c in pool}
    grouping = cluster_novel(_centroid_set(pool), delta_dom)
    groups = grouping.members()

    # order novel groups by smallest member novel-cluster index
    novel_order = {c.cluster_id: i for i, c in enumerate(novel)}
    named: list[tuple[int, list[str]]] = []
    adopted: list[Domain] = []
    for members in groups:
        novel_members = [m for m in members if by_id[m].provenance == "novel"]
        if not novel_members:
            continue
        seen_members = [m for m in members if by_id[m].provenance == "seen"]
        if seen_members:
            votes = Counter(by_id[m].domain for m in seen_members)
            top = max(votes.values())
            dom = min(lab for lab, cnt in votes.items() if cnt == top)
            adopted.append(Domain(
                domain_id=dom,
                provenance="seen",
                clusters=tuple(by_id[m] for m in members),
            ))
        else:
            key = min(novel_order[m] for m in novel_members)
            named.append((key, novel_members))
    named.sort(key=lambda t: t[0])
    out = []
    for k, (_, members) in enumerate(named):
        out.append(Domain(
            domain_id=f"novel-domain-{k}",
            provenance="novel",
            clusters=tuple(by_id[m] for m in sorted(members, key=novel_order.get)),
        ))
    return out + adopted


def build_taxonomy(seen_clusters: list[IntentCluster],
                   novel_domains: list[Domain]) -> Taxonomy:
    """Assemble seen domains (from labels) and novel domains into one tree."""
    by_domain: dict[str, list[IntentCluster]] = {}
    for c in seen_clusters:
        by_domain.setdefault(c.domain, []).append(c)
    merged: dict[str, Domain] = {
        dom: Domain(domain_id=dom, provenance="seen", clusters=tuple(cs))
        for dom, cs in sorted(by_domain.items())
    }
    novel_only: list[Domain] = []
    for d in novel_domains:
        if d.provenance == "seen":
            # exploration mode folded novel clusters into a seen domain
            base = merged.get(d.domain_id)
            extra = tuple(c for c in d.clusters if c.provenance == "novel")
            if base is None:
                merged[d.domain_id] = Domain(d.domain_id, "seen", extra)
            else:
                merged[d.domain_id] = Domain(
                    d.domain_id, "seen", base.clusters + extra
                )
        else:
            novel_only.append(d)
    return Taxonomy(domains=tuple(list(merged.values()) + novel_only))
