"""HTTP sentence-embedding service and batch file encoder."""

from .app import ServerConfig, create_app
from .encoder import (
    DEFAULT_MODEL,
    EncoderError,
    HashedProjectionEncoder,
    load_encoder,
)
from .files import InputError, embed_file, read_texts
from .tbem import TbemError, read_tbem, write_tbem

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_MODEL",
    "EncoderError",
    "HashedProjectionEncoder",
    "InputError",
    "ServerConfig",
    "TbemError",
    "__version__",
    "create_app",
    "embed_file",
    "load_encoder",
    "read_tbem",
    "read_texts",
    "write_tbem",
]
