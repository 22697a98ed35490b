"""Platform profiles: fitted constants and builtin timings for one host."""

from __future__ import annotations

import json
import platform
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from ..analysis.metrics import CostModel
from .fit import ModelFit

FORMAT_VERSION = 1


class ProfileError(Exception):
    pass


def host_label() -> str:
    return f"{platform.node()} {platform.machine()} {platform.python_implementation()} {platform.python_version()}"


@dataclass
class PlatformProfile:
    fits: dict[str, ModelFit]
    builtins: dict[str, float] = field(default_factory=dict)
    host: str = field(default_factory=host_label)
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def fit_for(self, model: CostModel) -> ModelFit:
        fit = self.fits.get(model.signature)
        if fit is None:
            have = ", ".join(self.fits) or "none"
            raise ProfileError(f"profile has no fit for model {model.signature} (available: {have})")
        fit.builtins = dict(self.builtins)
        return fit

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_VERSION,
            "host": self.host,
            "timestamp": self.timestamp,
            "seed": self.seed,
            "meta": self.meta,
            "models": {sig: f.to_dict() for sig, f in self.fits.items()},
            "builtins": self.builtins,
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> PlatformProfile:
        try:
            d = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ProfileError(f"profile file not found: {path}") from None
        except json.JSONDecodeError as e:
            raise ProfileError(f"malformed profile {path}: {e}") from None
        if d.get("format") != FORMAT_VERSION:
            raise ProfileError(f"unsupported profile format {d.get('format')!r}")
        builtins = {k: float(v) for k, v in d.get("builtins", {}).items()}
        fits = {sig: ModelFit.from_dict(f, builtins) for sig, f in d["models"].items()}
        return cls(fits, builtins, d.get("host", ""), d.get("timestamp", ""), d.get("seed"), d.get("meta", {}))


__all__ = ["PlatformProfile", "ProfileError", "host_label"]
