"""Sentence encoders.

Two families:

* ``hash`` / ``hash:<dim>``: a dependency-free feature-hashing encoder.
  Tokens, token bigrams, and character trigrams are hashed with sha256 into
  signed buckets and the bucket vector is L2-normalized. Fully deterministic
  across runs and platforms, needs no downloads, and is the default. It is a
  bag-of-features model, not a neural one; it exists so the export path and
  container format can be exercised (and small corpora clustered) offline.

* ``st:<model>``: any pretrained sentence-transformers checkpoint, loaded
  lazily so the package works without that dependency installed.

Encoders are inference-only. Nothing here updates a weight.
"""

from __future__ import annotations

import hashlib
import re
import struct

import numpy as np

from embexport.errors import EncoderError

_TOKEN_RE = re.compile(r"[a-z0-9']+")


class HashEncoder:
    """Signed feature hashing over word n-grams and char trigrams."""

    def __init__(self, dim: int = 768):
        if dim < 1:
            raise EncoderError(f"hash encoder dimension must be >= 1, got {dim}")
        self.dim = int(dim)
        self.name = f"hash:{self.dim}"

    def _features(self, text: str):
        toks = _TOKEN_RE.findall(text.lower())
        for t in toks:
            yield b"w:" + t.encode("utf-8")
            padded = f"^{t}$"
            for i in range(len(padded) - 2):
                yield b"c:" + padded[i : i + 3].encode("utf-8")
        for a, b in zip(toks, toks[1:]):
            yield b"b:" + f"{a} {b}".encode("utf-8")

    def _encode_one(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        for feat in self._features(text):
            h = struct.unpack(">Q", hashlib.sha256(feat).digest()[:8])[0]
            sign = 1.0 if h & 1 else -1.0
            vec[(h >> 1) % self.dim] += sign
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        # featureless text (empty, punctuation only) stays a zero row
        return vec

    def encode(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            out[i] = self._encode_one(text)
        return out.astype(np.float32)


class STEncoder:
    """Wrapper around a sentence-transformers checkpoint."""

    def __init__(self, model_name: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise EncoderError(
                f"encoder load failure for 'st:{model_name}': "
                "sentence-transformers is not installed (pip install embexport[st])"
            ) from exc
        try:
            self._model = SentenceTransformer(model_name)
        except Exception as exc:
            raise EncoderError(f"encoder load failure for 'st:{model_name}': {exc}") from exc
        self.dim = int(self._model.get_sentence_embedding_dimension())
        self.name = f"st:{model_name}"

    def encode(self, texts: list[str]) -> np.ndarray:
        out = self._model.encode(texts, convert_to_numpy=True, show_progress_bar=False)
        return np.asarray(out, dtype=np.float32)


def load_encoder(name: str):
    """Resolve an encoder id string to a ready encoder instance."""
    if name == "hash":
        return HashEncoder()
    if name.startswith("hash:"):
        spec = name[len("hash:") :]
        try:
            dim = int(spec)
        except ValueError:
            raise EncoderError(f"bad hash encoder dimension {spec!r}") from None
        return HashEncoder(dim)
    if name.startswith("st:"):
        return STEncoder(name[len("st:") :])
    raise EncoderError(
        f"unknown encoder {name!r}; expected 'hash', 'hash:<dim>', or 'st:<model>'"
    )
