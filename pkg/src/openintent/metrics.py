"""Clustering and detection quality measures plus report assembly.

NMI normalizes mutual information by the arithmetic mean of the two
entropies (natural logs); a geometric-mean variant sits behind a flag for
sensitivity checks. Purity is the fraction of items falling in their
cluster's majority class. Detection F1 treats "novel" as the positive
class. Conventions: NMI of two zero-entropy partitions is 1; detection F1
with no positives anywhere is 0.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .cluster import bcubed_f1, pairwise_f1
from .errors import DataError


def _contingency(pred: Sequence, truth: Sequence) -> tuple[dict, dict, dict, int]:
    if len(pred) != len(truth):
        raise DataError("pred and truth must align")
    n = len(pred)
    if n == 0:
        raise DataError("nothing to evaluate")
    cells: dict = {}
    pc: dict = {}
    tc: dict = {}
    for p, t in zip(pred, truth):
        cells[(p, t)] = cells.get((p, t), 0) + 1
        pc[p] = pc.get(p, 0) + 1
        tc[t] = tc.get(t, 0) + 1
    return cells, pc, tc, n


def _entropy(counts: dict, n: int) -> float:
    return -sum((c / n) * math.log(c / n) for c in counts.values() if c > 0)


def nmi(pred: Sequence, truth: Sequence, mean: str = "arithmetic") -> float:
    """Mutual information over the mean of the two entropies."""
    cells, pc, tc, n = _contingency(pred, truth)
    hp = _entropy(pc, n)
    ht = _entropy(tc, n)
    mi = 0.0
    for (p, t), c in cells.items():
        mi += (c / n) * math.log(n * c / (pc[p] * tc[t]))
    mi = max(mi, 0.0)  # clip tiny negative rounding
    if mean == "arithmetic":
        denom = 0.5 * (hp + ht)
    elif mean == "geometric":
        denom = math.sqrt(hp * ht)
    else:
        raise DataError(f"unknown mean {mean!r}")
    if denom == 0.0:
        # both partitions trivial: identical up to relabeling
        return 1.0 if hp == ht == 0.0 else 0.0
    return min(mi / denom, 1.0)


def purity(pred: Sequence, truth: Sequence) -> float:
    """Fraction of items in their cluster's most common truth class."""
    cells, pc, _, n = _contingency(pred, truth)
    best: dict = {}
    for (p, t), c in cells.items():
        if c > best.get(p, 0):
            best[p] = c
    return sum(best.values()) / n


def detection_f1(pred_novel: Sequence[bool], truth_novel: Sequence[bool]) -> float:
    """Binary F1 with novel as the positive class; no positives at all -> 0."""
    if len(pred_novel) != len(truth_novel):
        raise DataError("pred and truth must align")
    tp = fp = fn = 0
    for p, t in zip(pred_novel, truth_novel):
        if p and t:
            tp += 1
        elif p and not t:
            fp += 1
        elif t and not p:
            fn += 1
    if 2 * tp + fp + fn == 0:
        return 0.0
    return 2 * tp / (2 * tp + fp + fn)


def build_report(pred: Sequence | None, truth: Sequence | None,
                 pred_novel: Sequence[bool] | None = None,
                 truth_novel: Sequence[bool] | None = None,
                 n_domains_found: int | None = None,
                 n_domains_truth: int | None = None,
                 f1_variant: str = "pairwise",
                 nmi_mean: str = "arithmetic") -> dict:
    """Assemble the metrics report.

    pred is the novel-utterance cluster assignment; truth the matching
    intent labels where known. Without truth the report carries counts only
    and null metric values.
    """
    if pred is not None and len(pred) == 0:
        raise DataError("nothing to evaluate")
    report: dict = {
        "n_clusters_found": len(set(pred)) if pred is not None else 0,
        "n_clusters_truth": None,
        "nmi": None,
        "purity": None,
        "pairwise_f1": None,
        "detection_f1": None,
        "n_domains_found": n_domains_found,
        "n_domains_truth": n_domains_truth,
    }
    if pred is not None and truth is not None:
        if len(truth) != len(pred):
            raise DataError("pred and truth must align")
        score = pairwise_f1 if f1_variant == "pairwise" else bcubed_f1
        report["n_clusters_truth"] = len(set(truth))
        report["nmi"] = nmi(pred, truth, mean=nmi_mean)
        report["purity"] = purity(pred, truth)
        report["pairwise_f1"] = score(pred, truth)
    if pred_novel is not None and truth_novel is not None:
        report["detection_f1"] = detection_f1(pred_novel, truth_novel)
    return report


def format_table(report: dict) -> str:
    """Plain-text one-row table of the headline numbers."""
    cols = [
        ("#int.", report.get("n_clusters_found")),
        ("#int. truth", report.get("n_clusters_truth")),
        ("NMI", report.get("nmi")),
        ("Pur.", report.get("purity")),
        ("F1", report.get("pairwise_f1")),
        ("Det. F1", report.get("detection_f1")),
        ("#dom.", report.get("n_domains_found")),
    ]
    names, vals = [], []
    for name, val in cols:
        if val is None:
            continue
        names.append(name)
        vals.append(f"{val:.4f}" if isinstance(val, float) else str(val))
    widths = [max(len(a), len(b)) for a, b in zip(names, vals)]
    line1 = "  ".join(n.rjust(w) for n, w in zip(names, widths))
    line2 = "  ".join(v.rjust(w) for v, w in zip(vals, widths))
    return line1 + "\n" + line2 + "\n"
