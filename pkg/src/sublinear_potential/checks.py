from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class Margin:
    """A one-sided check ``value >= -tolerance * scale``.

    Every inequality in the package is reported this way: ``value`` is the
    worst (smallest) slack over the nodes and ``scale`` fixes the units the
    tolerance is relative to.
    """

    name: str
    value: float
    scale: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.value >= -self.tolerance * self.scale)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out

    def __str__(self):
        status = "ok" if self.passed else "FAILED"
        return f"{self.name}: margin {self.value:.3e} (scale {self.scale:.3e}, tol {self.tolerance:g}) {status}"


def worst(values) -> float:
    """Smallest entry (0 for an empty array)."""
    values = np.asarray(values, dtype=float)
    return float(values.min()) if values.size else 0.0
