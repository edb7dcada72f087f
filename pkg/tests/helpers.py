"""Shared test utilities: tiny corpus builders and brute-force oracles.

The oracles here deliberately re-derive results with the slowest, most
literal algorithm available (explicit max over cluster cross products,
central finite differences) so the library implementations have something
independent to be checked against.
"""

import numpy as np

from openintent.corpus import EmbeddingSet, Utterance, View, join, split_views
from openintent.metric import EncoderNet, LossConfig, quadruplet_loss


def make_embs(ids, rows, space_tag=None):
    return EmbeddingSet(ids=tuple(ids), matrix=np.asarray(rows, dtype=np.float64),
                        space_tag=space_tag)


def two_domain_view(per_intent=6, dim=6, sigma=0.05, seed=0,
                    n_domains=2, intents_per_domain=2):
    """Labeled train_seen view over well-separated Gaussian blobs.

    Domains sit on the first axes, intents offset along later ones, so any
    reasonable metric keeps them apart. Returns the labeled view only.
    """
    rng = np.random.default_rng(seed)
    utts, ids, rows = [], [], []
    c = 0
    for d in range(n_domains):
        for j in range(intents_per_domain):
            center = np.zeros(dim)
            center[d] = 4.0
            center[n_domains + j] = 1.5
            for _ in range(per_intent):
                uid = f"u{c:04d}"
                c += 1
                ids.append(uid)
                rows.append(center + rng.normal(0.0, sigma, dim))
                utts.append(Utterance(id=uid, split="train_seen",
                                      intent=f"int-{d}-{j}", domain=f"dom-{d}"))
    dataset = join(utts, make_embs(ids, rows))
    d_t, _, _ = split_views(dataset)
    return d_t


def brute_force_linkage(square):
    """O(n^3) complete linkage, recomputed from the raw matrix every step.

    Clusters are kept in creation order (leaves 0..n-1, then merge nodes
    n, n+1, ...). Each step scans every active pair in that order and takes
    the first pair realizing the minimal max-distance, which is exactly the
    (older, younger) tie rule. The max is always taken over the original
    entries, never over cached linkage values. Returns [(a, b, height)].
    """
    square = np.asarray(square, dtype=np.float64)
    n = square.shape[0]
    active = [(i, [i]) for i in range(n)]  # (node id, member leaves)
    merges = []
    next_id = n
    while len(active) > 1:
        best = None
        for a in range(len(active)):
            for b in range(a + 1, len(active)):
                d = float(square[np.ix_(active[a][1], active[b][1])].max())
                if best is None or d < best[0]:
                    best = (d, a, b)
        d, a, b = best
        ida, mem_a = active[a]
        idb, mem_b = active[b]
        merges.append((ida, idb, d))
        del active[b], active[a]
        active.append((next_id, mem_a + mem_b))
        next_id += 1
    return merges


def fd_loss_grads(net, X, idx, cfg, step=1e-5):
    """Central finite differences of the quadruplet loss in every parameter."""
    grads = []
    for p in (net.W1, net.b1, net.W2, net.b2):
        g = np.zeros_like(p)
        flat, gf = p.ravel(), g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            lp = quadruplet_loss(net, X, idx, cfg)
            flat[i] = orig - step
            lm = quadruplet_loss(net, X, idx, cfg)
            flat[i] = orig
            gf[i] = (lp - lm) / (2.0 * step)
        grads.append(g)
    return grads


def hinge_args(net, X, idx, cfg):
    """The three hinge arguments per quadruplet, for kink screening."""
    from openintent.metric import _row_cosine_distance

    E, _ = net.forward(X)
    u = E[idx[:, 0]]
    d_i = _row_cosine_distance(u, E[idx[:, 1]])
    d_j = _row_cosine_distance(u, E[idx[:, 2]])
    d_k = _row_cosine_distance(u, E[idx[:, 3]])
    return np.stack([cfg.m1 + d_i - d_j,
                     cfg.m2 + d_i - d_k,
                     cfg.m3 + d_j - d_k], axis=1)


def random_net_and_batch(rng, dim=None, h=None, e=None, n_rows=8, n_quads=2):
    dim = dim or int(rng.integers(4, 17))
    h = h or int(rng.integers(3, 9))
    e = e or int(rng.integers(2, 5))
    net = EncoderNet.init_xavier(dim, h, e, rng)
    X = rng.normal(0.0, 1.0, size=(n_rows, dim))
    idx = np.empty((n_quads, 4), dtype=np.int64)
    for r in range(n_quads):
        idx[r] = rng.choice(n_rows, size=4, replace=False)
    return net, X, idx
