import dataclasses
import json
from enum import Enum
from pathlib import Path

import numpy as np


class LmcJSONEncoder(json.JSONEncoder):
    """Extend the default encoder to support dataclasses and numpy values."""

    def default(self, o):
        if dataclasses.is_dataclass(o) and not isinstance(o, type):
            return dataclasses.asdict(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.bool_):
            return bool(o)
        if isinstance(o, Enum):
            return o.value
        if isinstance(o, Path):
            return str(o)
        return super().default(o)


def dumps(obj, **kwargs) -> str:
    return json.dumps(obj, cls=LmcJSONEncoder, indent=2, sort_keys=True, **kwargs)


def write_json(obj, path: Path) -> Path:
    path = Path(path)
    path.write_text(dumps(obj) + "\n", encoding="utf-8")
    return path
