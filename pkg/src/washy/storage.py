"""One-file JSON document stores.

Each concern (users, reminders, sessions, events) persists as a single JSON
document under the data directory. Writes are atomic (temp file + rename) so
a crash never leaves a half-written store behind.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Any


class JsonStore:
    def __init__(self, path: str | Path):
        self.path = Path(path)

    def exists(self) -> bool:
        return self.path.exists()

    def read(self, default: Any = None) -> Any:
        if not self.path.exists():
            return default
        with open(self.path, "r", encoding="utf-8") as fh:
            return json.load(fh)

    def write(self, document: Any) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=self.path.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(document, fh, indent=2, sort_keys=False)
                fh.write("\n")
            os.replace(tmp, self.path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
