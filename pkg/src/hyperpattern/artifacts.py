"""Atomic artifact writes: write to a temporary file in the target directory, then rename."""

from __future__ import annotations

import json
import os
import tempfile
from typing import Callable

import numpy as np


def atomic_write(path, write: Callable, binary: bool = False) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb" if binary else "w", **({} if binary else {"encoding": "utf-8", "newline": ""})) as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def jsonable(x):
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, np.generic):
        return x.item()
    return x


def write_json(path, obj, header: str | None = None) -> None:
    """JSON object with the producing config under ``"header"``."""
    payload = {"header": header, **jsonable(obj)} if header is not None else jsonable(obj)
    atomic_write(path, lambda fh: (json.dump(payload, fh, indent=2, sort_keys=False), fh.write("\n")))


def write_text(path, write_body: Callable, header: str | None = None) -> None:
    def go(fh):
        if header is not None:
            fh.write(f"# {header}\n")
        write_body(fh)
    atomic_write(path, go)
