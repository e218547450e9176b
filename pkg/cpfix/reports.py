import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class Status(str, Enum):
    PASS = 'PASS'
    FAIL = 'FAIL'
    ERROR = 'ERROR'
    SKIPPED = 'SKIPPED'


def _plain(value):
    """JSON-friendly copy: numpy scalars to floats, complex to ``[re, im]``."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        return _plain(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


@dataclass
class Entry:
    task: str
    status: Status
    residuals: dict = field(default_factory=dict)
    iterations: dict = field(default_factory=dict)
    detail: str = ''
    data: dict = field(default_factory=dict)
    seed: int = None
    wall_time: float = 0.0

    @property
    def passed(self):
        return self.status in (Status.PASS, Status.SKIPPED)

    def as_dict(self):
        return {
            'task': self.task,
            'status': self.status.value,
            'residuals': _plain(self.residuals),
            'iterations': _plain(self.iterations),
            'detail': self.detail,
            'data': _plain(self.data),
            'seed': self.seed,
            'wall_time': round(self.wall_time, 6),
        }


@dataclass
class Report:
    command: str
    source: str = ''
    config: dict = field(default_factory=dict)
    entries: list = field(default_factory=list)

    def add(self, entry):
        self.entries.append(entry)
        return entry

    def extend(self, entries):
        self.entries.extend(entries)

    @property
    def exit_code(self):
        """0 when everything passed, 1 on any FAIL, 2 on any ERROR."""
        statuses = {e.status for e in self.entries}
        if Status.ERROR in statuses:
            return 2
        if Status.FAIL in statuses:
            return 1
        return 0

    def as_dict(self):
        return {
            'command': self.command,
            'source': self.source,
            'config': _plain(self.config),
            'entries': [e.as_dict() for e in self.entries],
            'exit_code': self.exit_code,
        }

    def to_json(self, indent=2):
        return json.dumps(self.as_dict(), indent=indent, sort_keys=True)

    def as_table(self):
        rows = [('task', 'status', 'max residual', 'detail')]
        for e in self.entries:
            worst = max((v for v in e.residuals.values() if isinstance(v, (int, float))), default=None)
            rows.append((e.task, e.status.value, '' if worst is None else f"{worst:.2e}", e.detail))
        widths = [max(len(r[c]) for r in rows) for c in range(3)]
        lines = []
        for r in rows:
            lines.append('  '.join(r[c].ljust(widths[c]) for c in range(3)) + '  ' + r[3])
        lines.insert(1, '  '.join('-' * w for w in widths) + '  ' + '-' * 6)
        return '\n'.join(lines)
