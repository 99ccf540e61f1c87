"""Batch exporter that embeds a MIDI corpus into a binary vector store.

The output is a ``<prefix>.json`` manifest plus ``<prefix>.bin`` payload
(row-major little-endian float32), the interchange format consumed by
downstream similarity tooling. This package never scores similarities
itself; it only produces the store.
"""

from .cli import ExportJob, export_embeddings
from .model import MODELS, ModelError, embed_piece
from .store import write_store

__all__ = [
    "ExportJob",
    "MODELS",
    "ModelError",
    "embed_piece",
    "export_embeddings",
    "write_store",
]
