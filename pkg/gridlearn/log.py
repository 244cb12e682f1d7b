from __future__ import annotations

import logging
import os
import sys
from pathlib import Path
from typing import Optional

LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def setup_logging(logs_dir: Optional[str] = None, verbose: bool = False) -> logging.Logger:
    """Configure the `gridlearn` logger: stderr always, plus `<logs_dir>/gridlearn.log`."""
    root = logging.getLogger("gridlearn")
    root.setLevel(logging.DEBUG)
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()

    console = logging.StreamHandler(sys.stderr)
    console.setLevel(logging.DEBUG if verbose else logging.INFO)
    console.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    root.addHandler(console)

    if logs_dir:
        log_path = Path(os.path.expanduser(logs_dir))
        log_path.mkdir(parents=True, exist_ok=True)
        fh = logging.FileHandler(log_path / "gridlearn.log", encoding="utf-8")
        fh.setLevel(logging.DEBUG)
        fh.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(fh)
    return root
