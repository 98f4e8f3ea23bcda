from .builtin import BUILTIN_MODEL_ID, DIM, WINDOWS_PER_CLIP, builtin_embed, mel_filterbank
from .external import ImportError_, import_external_embeddings
from .store import (
    EmbedderSpec,
    EmbeddingFormatError,
    EmbeddingMatrix,
    read_embeddings,
    write_embeddings,
)

__all__ = [
    "BUILTIN_MODEL_ID",
    "DIM",
    "WINDOWS_PER_CLIP",
    "EmbedderSpec",
    "EmbeddingFormatError",
    "EmbeddingMatrix",
    "ImportError_",
    "builtin_embed",
    "import_external_embeddings",
    "mel_filterbank",
    "read_embeddings",
    "write_embeddings",
]
