"""The export job: utterance JSONL in, EMB1 out."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from embexport.emb1 import write_emb1
from embexport.encoders import load_encoder
from embexport.errors import DataError
from embexport.jsonl import read_utterances


@dataclass(frozen=True)
class ExportJob:
    input_path: Path
    encoder: str = "hash"
    output_path: Path = Path("embeddings.emb1")
    batch_size: int = 64

    def __post_init__(self):
        if self.batch_size < 1:
            raise DataError(f"batch size must be >= 1, got {self.batch_size}")


def export(job: ExportJob) -> tuple[int, int]:
    """Run the job and return (n_rows, dim) of the file written.

    Rows come out in input-file order. The encoder sees texts in batches of
    job.batch_size; batching must not change the result, so the output is
    identical for any batch size (verified in tests for the hash encoder).
    """
    encoder = load_encoder(job.encoder)
    ids, texts = read_utterances(job.input_path)

    blocks = []
    for start in range(0, len(texts), job.batch_size):
        block = np.asarray(encoder.encode(texts[start : start + job.batch_size]))
        if block.ndim != 2 or block.shape[0] != len(texts[start : start + job.batch_size]):
            raise DataError(
                f"encoder returned shape {block.shape} for a batch of "
                f"{len(texts[start : start + job.batch_size])} texts"
            )
        blocks.append(block)
    matrix = np.vstack(blocks)

    if matrix.shape[1] != encoder.dim:
        raise DataError(
            f"encoder advertises dim {encoder.dim} but produced {matrix.shape[1]}"
        )
    write_emb1(ids, matrix, job.output_path)
    return matrix.shape[0], matrix.shape[1]
