"""spatialqa_loader: validated read access to generated spatial QA datasets.

Standard-library only; the optional image overlay helper imports Pillow
lazily. This package consumes exactly the JSONL/manifest files the generator
writes and never imports the generator.
"""

__version__ = "0.1.0"

from .loader import (  # noqa: F401
    CATEGORIES,
    FRAMES,
    DatasetHandle,
    SchemaError,
    filter_records,
    open_dataset,
    overlay_points,
)

# `filter` mirrors the documented interface name without shadowing builtins
# at the module-function level.
filter = filter_records  # noqa: A001
