"""Local oscillation of a grid function and a fitted Hoelder exponent.

The fit is an estimator only: at accessible mesh sizes an exponent ``a``
cannot be told apart from ``a + eps``, so results are reported, not asserted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .green import GridFunction
from .potential import fit_loglog_slope

# relative size below which an oscillation counts as zero
_FLAT = 1e-12


@dataclass
class OscillationReport:
    radii: np.ndarray
    centers: np.ndarray
    region: list
    osc: np.ndarray
    exponent: np.ndarray
    flags: list = field(default_factory=list)

    def region_exponent(self, region: str) -> float:
        """Median of the defined exponents in a region (NaN if none)."""
        sel = [k for k, r in enumerate(self.region) if r == region and not math.isnan(self.exponent[k])]
        if not sel:
            return math.nan
        return float(np.median(self.exponent[sel]))

    def to_dict(self) -> dict:
        regions = sorted(set(self.region))
        return {
            "radii": self.radii.tolist(),
            "centers": self.centers.tolist(),
            "region": list(self.region),
            "exponent": [None if math.isnan(e) else float(e) for e in self.exponent],
            "region_exponent": {r: self.region_exponent(r) for r in regions},
            "flags": list(self.flags),
            "note": "report-only estimator",
        }


def _default_centers(domain, count):
    n = domain.n_interior
    stride = np.arange(0, n, max(1, n // count))
    return stride


def holder_oscillation(u: GridFunction, domain=None, radii=None, centers=None, count: int = 64) -> OscillationReport:
    """``osc(x, r) = max - min`` of ``u`` over closure nodes in ``B(x, r)``.

    Radii default to ``2h, 4h, ...`` up to a quarter of the diameter; centers
    default to about ``count`` interior nodes in a strided sweep.  Each center
    is tagged ``interior`` when ``B(x, r_max)`` stays inside the domain and
    ``boundary`` otherwise.  The exponent is the least-squares slope of
    ``log osc`` against ``log r``; it is NaN and flagged ``flat`` when ``u``
    does not vary, and flagged ``out_of_range`` outside ``(0, 1]``.
    """
    domain = u.domain if domain is None else domain
    if domain is not u.domain:
        raise ValueError("u lives on a different domain")
    h = domain.h
    if radii is None:
        radii = []
        r = 2 * h
        while r <= domain.diameter / 4 * (1 + 1e-12):
            radii.append(r)
            r *= 2
    radii = np.sort(np.asarray(radii, dtype=float))
    if len(radii) and radii[0] < 2 * h * (1 - 1e-12):
        raise ValueError("radii must be at least 2h")
    rmax = radii[-1] if len(radii) else 0.0
    centers = _default_centers(domain, count) if centers is None else np.asarray(centers, dtype=np.int64)

    pts = np.vstack([domain.interior, domain.boundary])
    vals = np.concatenate([u.interior, u.boundary])
    scale = max(float(np.abs(vals).max(initial=0.0)), 1e-300)
    osc = np.zeros((len(centers), len(radii)))
    for k, c in enumerate(centers):
        d2 = ((pts - domain.interior[c]) ** 2).sum(axis=1)
        for j, r in enumerate(radii):
            v = vals[d2 <= r * r]
            osc[k, j] = v.max() - v.min()

    exponent = np.full(len(centers), math.nan)
    region = []
    flags = []
    for k, c in enumerate(centers):
        region.append("interior" if domain.delta[c] > rmax else "boundary")
        live = osc[k] > _FLAT * scale
        if live.sum() >= 2:
            exponent[k] = fit_loglog_slope(radii[live], osc[k][live])
            if not 0 < exponent[k] <= 1:
                flags.append(f"out_of_range:{int(c)}")
        else:
            flags.append(f"flat:{int(c)}")
    return OscillationReport(radii, centers, region, osc, exponent, flags)
