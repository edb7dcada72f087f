"""embexport: run a sentence encoder over an utterance JSONL file and write EMB1.

The exporter is a thin bridge. It never trains or fine-tunes anything; it
loads a pretrained (or algorithmic) encoder, feeds it the utterance texts in
file order, and serializes the resulting matrix in the EMB1 container that
the openintent pipeline consumes.
"""

from embexport.errors import DataError, EncoderError
from embexport.export import ExportJob, export

__all__ = ["DataError", "EncoderError", "ExportJob", "export"]
