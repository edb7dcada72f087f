"""Stage orchestration: detect, discover, link, evaluate, full pipeline.

Stages communicate only through JSON artifacts in the output directory, so
any stage can be rerun in isolation:

    detector_head.json    trained softmax head (+ thresholds)
    doc_thresholds.json   per-class probability cutoffs, standalone copy
    detections.json       novel ids + seen-intent assignments
    metric_net.json       encoder weights + training trace
    novel_clustering.json cluster assignment of flagged utterances + delta
    taxonomy.json         domains with member intent clusters + delta_dom
    report.json           metrics/counts summary

Every run also writes manifest.json (config snapshot, seed, versions,
artifact hashes, wall-clock timings, failure point). Timings live only in
the manifest so the seven artifacts above are byte-stable for a fixed
config + seed.
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .cluster import (ConstraintSet, Clustering, cluster_novel, complete_linkage,
                      cut, pairwise_distances, transfer_threshold)
from .config import RunConfig
from .corpus import Dataset, View, join, load_embeddings, load_utterances, split_views
from .detector import NoveltyDetector
from .errors import ConfigError, DataError
from .metric import EncoderNet, LossConfig, MetricTrainConfig, train_metric
from .metrics import build_report, format_table
from .serialize import dump_json, load_json, sha256_file
from .taxonomy import (build_taxonomy, label_seen_clusters, link_domains,
                       novel_clusters, transfer_domain_threshold)

ARTIFACTS = (
    "detector_head.json",
    "doc_thresholds.json",
    "detections.json",
    "metric_net.json",
    "novel_clustering.json",
    "taxonomy.json",
    "report.json",
)


def load_corpus(cfg: RunConfig) -> tuple[Dataset, View, View, View]:
    embs = load_embeddings(cfg.paths.embeddings)
    utts = load_utterances(cfg.paths.utterances)
    ds = join(utts, embs)
    d_t, ood, d_c = split_views(ds)
    return ds, d_t, ood, d_c


def _ensure_out(cfg: RunConfig) -> Path:
    out = Path(cfg.paths.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_detect(cfg: RunConfig) -> dict:
    """Stage I: train the detector and flag novel unlabeled utterances."""
    ds, d_t, ood, d_c = load_corpus(cfg)
    det_cfg = cfg.detector
    if det_cfg.mode in ("one_unseen", "m_unseen") and len(ood) == 0:
        raise ConfigError(
            f"detector.mode {det_cfg.mode!r} needs rows with split=ood; "
            "the corpus has none (use mode seen_only)"
        )
    if len(d_t) == 0:
        raise DataError("no train_seen rows")
    _ensure_out(cfg)

    seen_embs = d_t.embeddings()
    intents = d_t.intents()
    seen_intents = [intents[u] for u in d_t.ids]
    ood_embs = ood.embeddings()
    ood_intents_map = ood.intents()
    ood_intents = [ood_intents_map.get(u) for u in ood.ids]
    det = NoveltyDetector.fit(
        seen_embs.matrix, seen_intents,
        ood_embs.matrix if len(ood) else None,
        ood_intents if len(ood) else None,
        mode=det_cfg.mode, lr=det_cfg.lr, epochs=det_cfg.epochs,
        batch_size=det_cfg.batch_size, doc_k=det_cfg.k, seed=cfg.seed,
    )

    novel_ids: list[str] = []
    seen_assigned: dict[str, str] = {}
    if len(d_c) > 0:
        mask, labels = det.detect(d_c.embeddings().matrix)
        for uid, is_novel, label in zip(d_c.ids, mask, labels):
            if is_novel:
                novel_ids.append(uid)
            else:
                seen_assigned[uid] = label

    dump_json(det.to_dict(), cfg.out_path("detector_head.json"))
    dump_json(det.thresholds.to_dict(), cfg.out_path("doc_thresholds.json"))
    summary = {
        "n_unlabeled": len(d_c),
        "n_novel": len(novel_ids),
        "n_assigned_seen": len(seen_assigned),
    }
    dump_json(
        {"novel_ids": novel_ids, "seen_labels": seen_assigned, "summary": summary},
        cfg.out_path("detections.json"),
    )
    return summary


def _read_detections(cfg: RunConfig) -> dict:
    path = cfg.out_path("detections.json")
    if not path.exists():
        raise DataError(f"{path} not found; run the detect stage first")
    return load_json(path)


def _load_constraints(cfg: RunConfig, novel_ids: list[str]) -> tuple[ConstraintSet | None, int]:
    """Constraint file filtered to flagged ids; returns (set, dropped pairs)."""
    if not cfg.paths.constraints:
        return None, 0
    cs = ConstraintSet.from_dict(load_json(cfg.paths.constraints))
    known = set(novel_ids)
    ml = tuple(p for p in cs.must_link if p[0] in known and p[1] in known)
    cl = tuple(p for p in cs.cannot_link if p[0] in known and p[1] in known)
    dropped = len(cs.must_link) + len(cs.cannot_link) - len(ml) - len(cl)
    filtered = ConstraintSet(must_link=ml, cannot_link=cl)
    filtered.validate(novel_ids)
    return filtered, dropped


def cmd_discover(cfg: RunConfig) -> dict:
    """Stage II: learn the metric, transfer the threshold, cluster novel rows."""
    ds, d_t, _ood, _d_c = load_corpus(cfg)
    detections = _read_detections(cfg)
    novel_ids = list(detections["novel_ids"])
    _ensure_out(cfg)

    met = cfg.metric
    net, trace, skip_report = train_metric(
        d_t,
        LossConfig(m1=met.m1, m2=met.m2, m3=met.m3,
                   alpha=met.alpha, beta=met.beta),
        MetricTrainConfig(
            learning_rate=met.lr, batch_quadruplets=met.batch_quadruplets,
            epochs=met.epochs, rng_seed=cfg.seed, h=met.h, e=met.e,
            quads_per_anchor=met.quads_per_anchor,
        ),
    )
    dump_json(
        {**net.to_dict(), "epoch_losses": trace.epoch_losses,
         "quadruplets": skip_report},
        cfg.out_path("metric_net.json"),
    )

    emb_t = net.embed_all(d_t.embeddings())
    transfer = transfer_threshold(emb_t, d_t.intents(), cfg.cluster.f1_variant)

    out: dict = {
        "delta": transfer.delta,
        "seen_f1": transfer.f1,
        "k": 0,
        "assignment": {},
        "constraints": None,
        "constraint_pairs_dropped": 0,
    }
    summary = {"n_novel": len(novel_ids), "delta": transfer.delta}
    if not novel_ids:
        out["note"] = "no novel utterances"
        summary["note"] = "no novel utterances"
    else:
        constraints, dropped = _load_constraints(cfg, novel_ids)
        emb_x = net.embed_all(ds.embeddings.subset(novel_ids))
        clustering = cluster_novel(emb_x, transfer.delta, constraints)
        out["k"] = clustering.k
        out["assignment"] = clustering.assignment
        out["constraint_pairs_dropped"] = dropped
        if constraints is not None:
            out["constraints"] = {
                "must_link": len(constraints.must_link),
                "cannot_link": len(constraints.cannot_link),
            }
        summary["k"] = clustering.k
    dump_json(out, cfg.out_path("novel_clustering.json"))
    return summary


def _read_clustering(cfg: RunConfig) -> dict:
    path = cfg.out_path("novel_clustering.json")
    if not path.exists():
        raise DataError(f"{path} not found; run the discover stage first")
    return load_json(path)


def _read_net(cfg: RunConfig) -> EncoderNet:
    path = cfg.out_path("metric_net.json")
    if not path.exists():
        raise DataError(f"{path} not found; run the discover stage first")
    return EncoderNet.from_dict(load_json(path))


def cmd_link(cfg: RunConfig) -> dict:
    """Stage III: label seen clusters, learn the domain cut, link domains."""
    ds, d_t, _ood, _d_c = load_corpus(cfg)
    stored = _read_clustering(cfg)
    net = _read_net(cfg)
    _ensure_out(cfg)

    domains_map = d_t.domains()
    if len(set(domains_map.values())) < 2:
        raise DataError("taxonomy linking needs at least 2 seen domains")

    delta = float(stored["delta"])
    emb_t = net.embed_all(d_t.embeddings())
    seen_clustering = cut(complete_linkage(pairwise_distances(emb_t)), delta)
    seen_clusters = label_seen_clusters(seen_clustering, domains_map, emb_t)

    k = int(stored["k"])
    if k == 0:
        taxonomy = build_taxonomy(seen_clusters, [])
        payload = taxonomy.to_dict(cfg.taxonomy.with_centroids)
        payload["delta_dom"] = None
        payload["note"] = "no novel clusters"
        dump_json(payload, cfg.out_path("taxonomy.json"))
        return {"n_novel_domains": 0, "n_seen_domains": len(taxonomy.domains)}

    assignment = stored["assignment"]
    ids = tuple(assignment.keys())
    labels = np.array([assignment[u] for u in ids], dtype=np.int64)
    clustering = Clustering(ids=ids, labels=labels, k=k)
    emb_x = net.embed_all(ds.embeddings.subset(list(ids)))
    novel = novel_clusters(clustering, emb_x)

    dom_transfer = transfer_domain_threshold(seen_clusters, cfg.cluster.f1_variant)
    linked = link_domains(novel, dom_transfer.delta, seen_clusters,
                          include_seen=cfg.taxonomy.include_seen)
    taxonomy = build_taxonomy(seen_clusters, linked)
    payload = taxonomy.to_dict(cfg.taxonomy.with_centroids)
    payload["delta_dom"] = dom_transfer.delta
    dump_json(payload, cfg.out_path("taxonomy.json"))
    return {
        "n_novel_domains": taxonomy.n_novel_domains,
        "n_novel_intents": taxonomy.n_novel_intents,
        "delta_dom": dom_transfer.delta,
    }


def cmd_evaluate(cfg: RunConfig, print_table: bool = False) -> dict:
    """Assemble report.json from stored artifacts and any truth labels."""
    ds, d_t, _ood, d_c = load_corpus(cfg)
    detections = _read_detections(cfg)
    stored = _read_clustering(cfg)
    _ensure_out(cfg)

    novel_ids = list(detections["novel_ids"])
    novel_set = set(novel_ids)
    seen_intent_names = set(d_t.intents().values())

    # detection truth: an unlabeled row is truly novel when its labeled
    # intent is not among the seen ones; rows without labels are skipped
    pred_novel, truth_novel = [], []
    for uid in d_c.ids:
        intent = ds.utterances[uid].intent
        if intent is None:
            continue
        pred_novel.append(uid in novel_set)
        truth_novel.append(intent not in seen_intent_names)

    assignment = stored["assignment"]
    pred = None
    truth = None
    if assignment:
        clustered_ids = list(assignment.keys())
        intents = [ds.utterances[u].intent for u in clustered_ids]
        pred = [assignment[u] for u in clustered_ids]
        if all(i is not None for i in intents):
            truth = intents

    n_domains_found = None
    delta_dom = None
    tax_path = cfg.out_path("taxonomy.json")
    if tax_path.exists():
        tax = load_json(tax_path)
        n_domains_found = sum(
            1 for d in tax["domains"] if d["provenance"] == "novel"
        )
        delta_dom = tax.get("delta_dom")
    n_domains_truth = None
    truly_novel_domains = {
        ds.utterances[u].domain
        for u in d_c.ids
        if ds.utterances[u].intent is not None
        and ds.utterances[u].intent not in seen_intent_names
        and ds.utterances[u].domain is not None
    }
    if truly_novel_domains:
        n_domains_truth = len(truly_novel_domains)

    metrics = build_report(
        pred, truth,
        pred_novel if pred_novel else None,
        truth_novel if truth_novel else None,
        n_domains_found=n_domains_found,
        n_domains_truth=n_domains_truth,
        f1_variant=cfg.cluster.f1_variant,
        nmi_mean=cfg.eval.nmi_mean,
    ) if (pred is not None or pred_novel) else {
        "n_clusters_found": 0,
        "n_clusters_truth": None,
        "nmi": None,
        "purity": None,
        "pairwise_f1": None,
        "detection_f1": None,
        "n_domains_found": n_domains_found,
        "n_domains_truth": n_domains_truth,
    }
    report = {
        "metrics": metrics,
        "delta": stored.get("delta"),
        "delta_dom": delta_dom,
        "n_novel": len(novel_ids),
        "note": stored.get("note"),
    }
    dump_json(report, cfg.out_path("report.json"))
    if print_table:
        sys.stdout.write(format_table(metrics))
    return report


def cmd_pipeline(cfg: RunConfig, print_table: bool = False) -> dict:
    """Run detect, discover, link, evaluate; write the manifest last.

    On a stage failure the artifacts written so far stay on disk and the
    manifest records which stage failed before the error propagates.
    """
    _ensure_out(cfg)
    timings: dict[str, float] = {}
    failure: str | None = None
    summary: dict = {}

    def run(name: str, fn, *args, **kwargs):
        t0 = time.perf_counter()
        result = fn(*args, **kwargs)
        timings[name] = time.perf_counter() - t0
        return result

    try:
        summary["detect"] = run("detect", cmd_detect, cfg)
        summary["discover"] = run("discover", cmd_discover, cfg)
        summary["link"] = run("link", cmd_link, cfg)
        summary["evaluate"] = run("evaluate", cmd_evaluate, cfg, print_table)
    except Exception:
        failure = _next_stage(timings)
        _write_manifest(cfg, timings, failure)
        raise
    _write_manifest(cfg, timings, None)
    return summary


def _next_stage(timings: dict) -> str:
    for stage in ("detect", "discover", "link", "evaluate"):
        if stage not in timings:
            return stage
    return "evaluate"


def _write_manifest(cfg: RunConfig, timings: dict, failure: str | None) -> None:
    hashes = {}
    for name in ARTIFACTS:
        path = cfg.out_path(name)
        if path.exists():
            hashes[name] = "sha256:" + sha256_file(path)
    manifest = {
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "versions": {
            "openintent": __version__,
            "numpy": np.__version__,
            "python": ".".join(str(v) for v in sys.version_info[:3]),
        },
        "artifacts": hashes,
        "timings_s": {k: round(v, 6) for k, v in timings.items()},
        "failure_point": failure,
    }
    dump_json(manifest, cfg.out_path("manifest.json"))
