"""Synthetic Gaussian-blob corpora for end-to-end checks and demos.

Two presets:

* "recovery": well-separated blobs. 6 seen intents in 2 domains, 4 unseen
  intents in 2 unseen domains, plus out-of-scope training intents parked
  near the unseen regions. Blob sigma 0.05, every pair of blob centers at
  least 1 apart. A pipeline run should detect the unseen rows and recover
  the 4 intents and 2 domains.

* "overlap": same layout but wide blobs (sigma 0.35) and closer unseen
  intents, so clustering is genuinely ambiguous and pairwise constraints
  have room to help.

Domain centers sit on orthogonal axes at equal radius so no region is
privileged; intent offsets use further orthogonal axes. All draws come from
one seeded generator, so a preset + seed pins the corpus exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cluster import ConstraintSet
from .corpus import EmbeddingSet, Utterance
from .errors import ConfigError


@dataclass(frozen=True)
class BlobSpec:
    """Geometry and row counts for the synthetic corpus."""

    dim: int = 16
    radius: float = 6.0           # domain center distance from origin
    seen_domains: int = 2
    intents_per_seen_domain: int = 3
    novel_domains: int = 2
    intents_per_novel_domain: int = 2
    ood_per_novel_domain: int = 1
    off_seen: float = 1.25        # intent offset from its domain center
    off_novel: float = 1.0
    off_ood: float = 1.25
    sigma: float = 0.05
    sigma_seen: float | None = None  # seen-blob spread; None = same as sigma
    train_per_intent: int = 60
    validation_per_intent: int = 5
    ood_rows_per_intent: int = 40
    dx_per_novel_intent: int = 20
    dc_seen_per_intent: int = 10  # seen-intent rows hidden in the unlabeled split

    def axes_needed(self) -> int:
        domains = self.seen_domains + self.novel_domains
        offsets = max(self.intents_per_seen_domain,
                      self.intents_per_novel_domain + self.ood_per_novel_domain)
        return domains + offsets


@dataclass
class SyntheticCorpus:
    utterances: list[Utterance]
    embeddings: EmbeddingSet
    # truth for rows the pipeline sees as unlabeled
    truth_intent: dict[str, str] = field(default_factory=dict)
    truth_domain: dict[str, str] = field(default_factory=dict)


def _centers(spec: BlobSpec) -> tuple[dict, dict, dict]:
    """Blob centers keyed by intent name; returns (seen, novel, ood) maps.

    Intent names also encode their domain: values are (center, domain).
    """
    if spec.axes_needed() > spec.dim:
        raise ConfigError(
            f"dim {spec.dim} too small for the requested layout "
            f"({spec.axes_needed()} axes needed)"
        )
    n_dom = spec.seen_domains + spec.novel_domains
    seen, novel, ood = {}, {}, {}
    k = 0
    for d in range(spec.seen_domains):
        dom = f"domain-{d}"
        cen = np.zeros(spec.dim)
        cen[d] = spec.radius
        for j in range(spec.intents_per_seen_domain):
            c = cen.copy()
            c[n_dom + j] += spec.off_seen
            seen[f"seen-intent-{k}"] = (c, dom)
            k += 1
    k = 0
    for d in range(spec.novel_domains):
        dom = f"unseen-domain-{d}"
        cen = np.zeros(spec.dim)
        cen[spec.seen_domains + d] = spec.radius
        for j in range(spec.intents_per_novel_domain):
            c = cen.copy()
            c[n_dom + j] += spec.off_novel
            novel[f"unseen-intent-{k}"] = (c, dom)
            k += 1
        for j in range(spec.ood_per_novel_domain):
            c = cen.copy()
            c[n_dom + spec.intents_per_novel_domain + j] += spec.off_ood
            ood[f"oos-intent-{d * spec.ood_per_novel_domain + j}"] = (c, dom)
    return seen, novel, ood


def min_center_gap(spec: BlobSpec) -> float:
    """Smallest distance between any two blob centers."""
    seen, novel, ood = _centers(spec)
    pts = [c for c, _ in seen.values()]
    pts += [c for c, _ in novel.values()]
    pts += [c for c, _ in ood.values()]
    best = np.inf
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            best = min(best, float(np.linalg.norm(pts[i] - pts[j])))
    return best


def generate(spec: BlobSpec, seed: int) -> SyntheticCorpus:
    rng = np.random.default_rng(seed)
    seen, novel, ood = _centers(spec)
    utterances: list[Utterance] = []
    ids: list[str] = []
    rows: list[np.ndarray] = []
    truth_intent: dict[str, str] = {}
    truth_domain: dict[str, str] = {}
    counter = 0

    sigma_seen = spec.sigma if spec.sigma_seen is None else spec.sigma_seen

    def emit(center: np.ndarray, n: int, sigma: float, **fields) -> None:
        nonlocal counter
        pts = center + rng.normal(0.0, sigma, size=(n, spec.dim))
        for r in range(n):
            uid = f"u{counter:05d}"
            counter += 1
            ids.append(uid)
            rows.append(pts[r])
            utterances.append(Utterance(id=uid, **fields))

    for intent, (center, dom) in seen.items():
        emit(center, spec.train_per_intent, sigma_seen,
             split="train_seen", intent=intent, domain=dom)
    for intent, (center, dom) in seen.items():
        emit(center, spec.validation_per_intent, sigma_seen,
             split="validation", intent=intent, domain=dom)
    for intent, (center, _dom) in ood.items():
        emit(center, spec.ood_rows_per_intent, spec.sigma,
             split="ood", intent=intent)
    for intent, (center, dom) in novel.items():
        emit(center, spec.dx_per_novel_intent, spec.sigma,
             split="unlabeled", intent=intent, domain=dom)
    for intent, (center, dom) in seen.items():
        emit(center, spec.dc_seen_per_intent, sigma_seen,
             split="unlabeled", intent=intent, domain=dom)

    for utt in utterances:
        if utt.split == "unlabeled":
            truth_intent[utt.id] = utt.intent
            truth_domain[utt.id] = utt.domain
    embs = EmbeddingSet(ids=tuple(ids), matrix=np.vstack(rows), space_tag="raw")
    return SyntheticCorpus(utterances=utterances, embeddings=embs,
                           truth_intent=truth_intent, truth_domain=truth_domain)


def recovery_spec() -> BlobSpec:
    return BlobSpec()


def overlap_spec() -> BlobSpec:
    """Ambiguous variant: unseen intents within a domain nearly fuse.

    The cut height transfers from the seen side, whose blobs are wider and
    denser than the unseen ones, so the two crowded unseen intents of each
    domain land under one cluster unless constraints force them apart.
    """
    return BlobSpec(
        sigma=0.35,
        sigma_seen=0.55,
        off_seen=2.5,
        off_novel=0.9,
        train_per_intent=80,
        dx_per_novel_intent=20,
        dc_seen_per_intent=0,
        ood_rows_per_intent=30,
    )


def pick_constraints(corpus: SyntheticCorpus, n_groups: int = 3,
                     per_group: int = 4, seed: int = 0) -> ConstraintSet:
    """Truth-consistent constraints over a few unlabeled novel utterances.

    Picks n_groups distinct truth intents and, from each, the per_group
    utterances nearest the intent's centroid (an annotator labeling
    prototypical examples). Pairs within a group become must-link, pairs
    across groups cannot-link. Compact groups matter under complete
    linkage: a zero-distance nucleus of spread-out points would push the
    rest of its own cluster away.
    """
    rng = np.random.default_rng(seed)
    by_intent: dict[str, list[str]] = {}
    for uid, intent in sorted(corpus.truth_intent.items()):
        if intent.startswith("unseen-intent-"):
            by_intent.setdefault(intent, []).append(uid)
    eligible = sorted(i for i, v in by_intent.items() if len(v) >= per_group)
    if len(eligible) < n_groups:
        raise ConfigError(
            f"need {n_groups} intents with >= {per_group} rows, "
            f"have {len(eligible)}"
        )
    chosen = list(rng.choice(eligible, size=n_groups, replace=False))
    groups = []
    for intent in chosen:
        members = by_intent[intent]
        pts = np.vstack([corpus.embeddings.row(u) for u in members])
        center = pts.mean(axis=0)
        near = np.argsort(np.linalg.norm(pts - center, axis=1))[:per_group]
        groups.append([members[int(t)] for t in near])
    must, cannot = [], []
    for g in groups:
        for i in range(len(g)):
            for j in range(i + 1, len(g)):
                a, b = sorted((g[i], g[j]))
                must.append((a, b))
    for gi in range(len(groups)):
        for gj in range(gi + 1, len(groups)):
            for a in groups[gi]:
                for b in groups[gj]:
                    x, y = sorted((a, b))
                    cannot.append((x, y))
    return ConstraintSet(must_link=tuple(must), cannot_link=tuple(cannot))
