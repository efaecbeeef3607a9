"""Bridge between promptable segmenters and segchange's file formats."""

from .backends import RegionBackend, SamBackend, make_backend
from .bridge import segment_everything_file, segment_prompted_file
from .errors import AdapterError, InputError, PromptError, SetupError
from .images import load_image, save_pixmap

__version__ = "0.1.0"

__all__ = [
    "RegionBackend", "SamBackend", "make_backend",
    "segment_everything_file", "segment_prompted_file",
    "AdapterError", "InputError", "PromptError", "SetupError",
    "load_image", "save_pixmap",
    "__version__",
]
