from dataclasses import asdict, dataclass, fields, replace

from django.conf import settings


@dataclass(frozen=True)
class ToolkitConfig:
    tol_eq: float = 1e-8
    convergence_tol: float = 1e-10
    psd_tol: float = 1e-9
    hermitian_tol: float = 1e-9
    max_iter: int = 100000
    cesaro_tol: float = 1e-11
    cesaro_cap: int = 1000000
    cauchy_window: int = 5
    minimality_tol: float = 1e-10
    minimality_max_iter: int = 10000
    isometry_levels: int = 3
    samples: int = 100
    seed: int = 0

    @classmethod
    def from_settings(cls, **overrides):
        """Defaults from ``settings.CPFIX``, then explicit overrides (None values ignored)."""
        configured = getattr(settings, 'CPFIX', {})
        values = {f.name: configured[f.name.upper()] for f in fields(cls) if f.name.upper() in configured}
        return cls(**values).with_overrides(**overrides)

    def with_overrides(self, **overrides):
        known = {f.name: f.type for f in fields(self)}
        cleaned = {}
        for key, value in overrides.items():
            if value is None:
                continue
            if key not in known:
                raise KeyError(f"unknown config key {key!r}")
            cleaned[key] = int(value) if known[key] in (int, 'int') else float(value)
        return replace(self, **cleaned)

    def asdict(self):
        return asdict(self)
