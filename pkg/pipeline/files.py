"""Configuration loading and atomic file writes."""

import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Union


def load_config(config_file: Union[str, Path]) -> Dict[str, Any]:
    """Load a JSON configuration file"""
    with open(config_file, 'r', encoding='utf-8') as f:
        return json.load(f)


def atomic_write_text(path: Union[str, Path], text: str) -> Path:
    """Write a sibling temp file, then rename it over the target"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path
