"""Corpus ingestion: embedding files, utterance metadata, and split views.

Embeddings arrive either in the EMB1 binary format or as TSV text, and are
paired with a JSON-lines utterance file by id. Vectors are stored as float32
on disk and promoted to float64 in memory so downstream distance computations
stay stable. All returned structures are immutable after construction.

EMB1 layout: magic b"EMB1", uint32-le N, uint32-le D, then N ids
(uint16-le byte length + UTF-8 bytes), then N*D little-endian float32
values, row-major.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

EMB1_MAGIC = b"EMB1"

SPLITS = ("train_seen", "ood", "unlabeled", "validation")


@dataclass(frozen=True)
class Utterance:
    """One utterance's metadata; embeddings live in EmbeddingSet."""

    id: str
    split: str
    text: str | None = None
    intent: str | None = None
    domain: str | None = None

    def __post_init__(self):
        if self.split not in SPLITS:
            raise DataError(f"utterance {self.id!r}: unknown split {self.split!r}")
        if self.split == "train_seen" and (self.intent is None or self.domain is None):
            raise DataError(
                f"utterance {self.id!r}: split=train_seen requires intent and domain"
            )


@dataclass(frozen=True)
class EmbeddingSet:
    """Id-aligned matrix of embedding vectors.

    space_tag records which representation the rows live in: "raw" for
    encoder output, "E" for the metric net's hidden layer, "Emb" for its
    output layer.
    """

    ids: tuple[str, ...]
    matrix: np.ndarray
    space_tag: str = "raw"

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=np.float64)
        if mat.ndim != 2:
            raise DataError(f"embedding matrix must be 2-D, got shape {mat.shape}")
        if mat.shape[0] != len(self.ids):
            raise DataError(
                f"{len(self.ids)} ids but {mat.shape[0]} embedding rows"
            )
        if mat.shape[0] > 0 and mat.shape[1] == 0:
            raise DataError("embedding dimension must be positive")
        bad = ~np.isfinite(mat)
        if bad.any():
            row = int(np.argwhere(bad)[0, 0])
            raise DataError(f"non-finite value in embedding row {self.ids[row]!r}")
        seen: set[str] = set()
        for uid in self.ids:
            if uid in seen:
                raise DataError(f"duplicate embedding id {uid!r}")
            seen.add(uid)
        mat.flags.writeable = False
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "matrix", mat)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def row(self, uid: str) -> np.ndarray:
        return self.matrix[self.index_of(uid)]

    def index_of(self, uid: str) -> int:
        idx = self._index().get(uid)
        if idx is None:
            raise DataError(f"unknown id {uid!r}")
        return idx

    def _index(self) -> dict[str, int]:
        cached = getattr(self, "_id_index", None)
        if cached is None:
            cached = {uid: i for i, uid in enumerate(self.ids)}
            object.__setattr__(self, "_id_index", cached)
        return cached

    def subset(self, ids: list[str] | tuple[str, ...], space_tag: str | None = None):
        """Rows for the given ids, in the given order."""
        idx = [self.index_of(u) for u in ids]
        return EmbeddingSet(
            ids=tuple(ids),
            matrix=self.matrix[idx].copy(),
            space_tag=space_tag or self.space_tag,
        )


@dataclass(frozen=True)
class Dataset:
    """Joined utterances and embeddings with a verified id bijection."""

    utterances: dict[str, Utterance]
    embeddings: EmbeddingSet


@dataclass(frozen=True)
class View:
    """One split's slice of a dataset, rows in corpus order.

    For the labeled-seen view, ``validation_ids`` carries rows tagged
    split=validation; they ride along with the training rows but are not
    used to fit anything.
    """

    ids: tuple[str, ...]
    dataset: Dataset
    validation_ids: tuple[str, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.ids)

    def utterance(self, uid: str) -> Utterance:
        return self.dataset.utterances[uid]

    def embeddings(self) -> EmbeddingSet:
        return self.dataset.embeddings.subset(list(self.ids))

    def intents(self) -> dict[str, str]:
        """id -> intent for rows that carry an intent label."""
        out = {}
        for uid in self.ids:
            utt = self.dataset.utterances[uid]
            if utt.intent is not None:
                out[uid] = utt.intent
        return out

    def domains(self) -> dict[str, str]:
        """id -> domain for rows that carry a domain label."""
        out = {}
        for uid in self.ids:
            utt = self.dataset.utterances[uid]
            if utt.domain is not None:
                out[uid] = utt.domain
        return out


def load_embeddings(path: str | Path) -> EmbeddingSet:
    """Load an EMB1 binary or TSV text embedding file."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"embedding file not found: {path}")
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == EMB1_MAGIC:
        return _load_emb1(path)
    return _load_tsv(path)


def _load_emb1(path: Path) -> EmbeddingSet:
    blob = path.read_bytes()
    if blob[:4] != EMB1_MAGIC:
        raise DataError(f"{path}: bad magic")
    off = 4
    if len(blob) < off + 8:
        raise DataError(f"{path}: truncated header")
    n, d = struct.unpack_from("<II", blob, off)
    off += 8
    if d == 0:
        raise DataError(f"{path}: declared dimension is zero")
    ids = []
    for _ in range(n):
        if len(blob) < off + 2:
            raise DataError(f"{path}: truncated payload (id table)")
        (ln,) = struct.unpack_from("<H", blob, off)
        off += 2
        if len(blob) < off + ln:
            raise DataError(f"{path}: truncated payload (id table)")
        ids.append(blob[off : off + ln].decode("utf-8"))
        off += ln
    want = n * d * 4
    got = len(blob) - off
    if got < want:
        raise DataError(f"{path}: truncated payload ({got} bytes, expected {want})")
    if got > want:
        raise DataError(f"{path}: trailing bytes after payload ({got - want} extra)")
    mat = np.frombuffer(blob, dtype="<f4", count=n * d, offset=off).reshape(n, d)
    return EmbeddingSet(ids=tuple(ids), matrix=mat.astype(np.float64), space_tag="raw")


def _load_tsv(path: Path) -> EmbeddingSet:
    ids: list[str] = []
    rows: list[list[float]] = []
    dim: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise DataError(f"{path}:{lineno}: expected id and at least one value")
            try:
                vals = [float(v) for v in parts[1:]]
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: bad float: {exc}") from None
            if dim is None:
                dim = len(vals)
            elif len(vals) != dim:
                raise DataError(
                    f"{path}:{lineno}: row has {len(vals)} values, expected {dim}"
                )
            ids.append(parts[0])
            rows.append(vals)
    if dim is None:
        raise DataError(f"{path}: empty TSV, cannot infer dimension")
    return EmbeddingSet(
        ids=tuple(ids), matrix=np.array(rows, dtype=np.float64), space_tag="raw"
    )


def write_embeddings(embs: EmbeddingSet, path: str | Path) -> None:
    """Write the canonical EMB1 binary encoding of an embedding set."""
    path = Path(path)
    parts = [EMB1_MAGIC, struct.pack("<II", embs.n, embs.dim)]
    for uid in embs.ids:
        raw = uid.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise DataError(f"id too long for EMB1 encoding: {uid[:40]!r}...")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
    parts.append(embs.matrix.astype("<f4").tobytes(order="C"))
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(b"".join(parts))
    tmp.replace(path)


def load_utterances(path: str | Path) -> list[Utterance]:
    """Parse the JSON-lines utterance metadata file."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"utterance file not found: {path}")
    out: list[Utterance] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            if not isinstance(obj, dict):
                raise DataError(f"{path}:{lineno}: expected a JSON object")
            if "id" not in obj:
                raise DataError(f"{path}:{lineno}: missing id")
            if "split" not in obj:
                raise DataError(f"{path}:{lineno}: missing split")
            uid = str(obj["id"])
            if uid in seen:
                raise DataError(f"{path}:{lineno}: duplicate id {uid!r}")
            seen.add(uid)
            try:
                utt = Utterance(
                    id=uid,
                    split=obj["split"],
                    text=obj.get("text"),
                    intent=obj.get("intent"),
                    domain=obj.get("domain"),
                )
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            out.append(utt)
    return out


def write_utterances(utterances: list[Utterance], path: str | Path) -> None:
    """Write utterances as JSON lines with stable key order."""
    path = Path(path)
    lines = []
    for utt in utterances:
        row = {"id": utt.id, "split": utt.split}
        if utt.text is not None:
            row["text"] = utt.text
        if utt.intent is not None:
            row["intent"] = utt.intent
        if utt.domain is not None:
            row["domain"] = utt.domain
        lines.append(json.dumps(row, sort_keys=True))
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    tmp.replace(path)


def join(utterances: list[Utterance], embeddings: EmbeddingSet) -> Dataset:
    """Pair utterances with embedding rows, enforcing an id bijection."""
    utt_ids = {u.id for u in utterances}
    emb_ids = set(embeddings.ids)
    only_utt = sorted(utt_ids - emb_ids)
    only_emb = sorted(emb_ids - utt_ids)
    if only_utt or only_emb:
        msgs = []
        if only_utt:
            msgs.append(f"ids without embeddings: {_preview(only_utt)}")
        if only_emb:
            msgs.append(f"embeddings without utterances: {_preview(only_emb)}")
        raise DataError("; ".join(msgs))
    # keep embedding-file row order as the canonical corpus order
    by_id = {u.id: u for u in utterances}
    ordered = {uid: by_id[uid] for uid in embeddings.ids}
    return Dataset(utterances=ordered, embeddings=embeddings)


def _preview(ids: list[str], limit: int = 5) -> str:
    shown = ", ".join(repr(i) for i in ids[:limit])
    if len(ids) > limit:
        shown += f", ... ({len(ids)} total)"
    return shown


def split_views(dataset: Dataset) -> tuple[View, View, View]:
    """Split a dataset into the labeled-seen, OOD, and unlabeled views.

    Validation rows attach to the labeled-seen view. Raises if the seen and
    OOD intent vocabularies overlap; the OOD material must be disjoint from
    the seen classes for the detector's extra classes to mean anything.
    """
    seen_ids, ood_ids, unlabeled_ids, val_ids = [], [], [], []
    for uid in dataset.embeddings.ids:
        utt = dataset.utterances[uid]
        if utt.split == "train_seen":
            seen_ids.append(uid)
        elif utt.split == "ood":
            ood_ids.append(uid)
        elif utt.split == "unlabeled":
            unlabeled_ids.append(uid)
        else:
            val_ids.append(uid)
    seen_intents = {
        dataset.utterances[u].intent for u in seen_ids
    }
    ood_intents = {
        dataset.utterances[u].intent
        for u in ood_ids
        if dataset.utterances[u].intent is not None
    }
    overlap = sorted(seen_intents & ood_intents)
    if overlap:
        raise DataError(
            f"seen and OOD intent vocabularies overlap: {_preview(overlap)}"
        )
    d_t = View(ids=tuple(seen_ids), dataset=dataset, validation_ids=tuple(val_ids))
    ood = View(ids=tuple(ood_ids), dataset=dataset)
    d_c = View(ids=tuple(unlabeled_ids), dataset=dataset)
    return d_t, ood, d_c
